use alloc::vec::Vec;

/// Stored evolution paths, oldest first, each tagged with the generation at
/// which it was stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathPool {
    capacity: usize,
    paths: Vec<Vec<f64>>,
    stamps: Vec<u64>,
}

impl PathPool {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, paths: Vec::with_capacity(capacity), stamps: Vec::with_capacity(capacity) }
    }

    /// Builds a pool from paths listed oldest first, stamped `1..=k`.
    pub fn from_paths(paths: Vec<Vec<f64>>) -> Self {
        let stamps = (1..=paths.len() as u64).collect();
        Self { capacity: paths.len(), paths, stamps }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[Vec<f64>] {
        &self.paths
    }

    pub fn stamps(&self) -> &[u64] {
        &self.stamps
    }

    pub fn last_stamp(&self) -> Option<u64> {
        self.stamps.last().copied()
    }

    /// The newest `k` paths (or all of them if fewer are stored), oldest first.
    pub fn newest(&self, k: usize) -> &[Vec<f64>] {
        &self.paths[self.paths.len().saturating_sub(k)..]
    }

    /// Keeps only the newest `k` paths and sets the capacity to `k`.
    pub fn truncated_to_newest(mut self, k: usize) -> Self {
        let drop = self.paths.len().saturating_sub(k);
        self.paths.drain(..drop);
        self.stamps.drain(..drop);
        self.capacity = k;
        self
    }

    /// Appends `path` stamped `stamp`, evicting one stored path first when full.
    ///
    /// Eviction removes the newer member of the adjacent pair whose stamps are
    /// closest. Once every adjacent gap has reached `target_gap` the oldest path
    /// is removed instead, so the pool keeps turning over.
    ///
    /// Returns `false` (and stores nothing) if `stamp` does not exceed the
    /// newest stored stamp or the capacity is zero.
    pub fn insert(&mut self, stamp: u64, path: Vec<f64>, target_gap: u64) -> bool {
        if self.capacity == 0 || self.last_stamp().is_some_and(|last| stamp <= last) {
            return false;
        }
        if self.paths.len() >= self.capacity {
            let victim = self.eviction_index(target_gap);
            self.paths.remove(victim);
            self.stamps.remove(victim);
        }
        self.paths.push(path);
        self.stamps.push(stamp);
        true
    }

    fn eviction_index(&self, target_gap: u64) -> usize {
        if self.stamps.len() < 2 {
            return 0;
        }
        let (pos, gap) = self
            .stamps
            .windows(2)
            .map(|w| w[1] - w[0])
            .enumerate()
            .min_by_key(|&(i, g)| (g, i))
            .unwrap();
        if gap >= target_gap {
            0
        } else {
            pos + 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stamps_after(caps: usize, inserts: &[u64], target: u64) -> Vec<u64> {
        let mut pool = PathPool::new(caps);
        for &s in inserts {
            assert!(pool.insert(s, vec![s as f64], target));
        }
        pool.stamps().to_vec()
    }

    #[test]
    fn fills_then_evicts_closest_pair() {
        assert_eq!(stamps_after(3, &[0, 2, 4], 100), vec![0, 2, 4]);
        // gaps (2, 1): newer member of the 1-gap pair goes
        assert_eq!(stamps_after(3, &[0, 2, 3, 9], 100), vec![0, 2, 9]);
        // equal gaps: earliest pair's newer member goes
        assert_eq!(stamps_after(3, &[0, 2, 4, 6], 100), vec![0, 4, 6]);
    }

    #[test]
    fn evicts_oldest_once_spread_is_reached() {
        assert_eq!(stamps_after(3, &[0, 5, 10, 15], 5), vec![5, 10, 15]);
    }

    #[test]
    fn rejects_non_increasing_stamp() {
        let mut pool = PathPool::new(4);
        assert!(pool.insert(3, vec![1.0], 1));
        assert!(!pool.insert(3, vec![1.0], 1));
        assert!(!pool.insert(2, vec![1.0], 1));
        assert_eq!(pool.len(), 1);
        assert!(!PathPool::new(0).insert(1, vec![1.0], 1));
    }

    #[test]
    fn newest_and_truncate() {
        let pool = PathPool::from_paths(vec![vec![1.0], vec![2.0], vec![3.0]]);
        assert_eq!(pool.stamps(), &[1, 2, 3]);
        assert_eq!(pool.newest(2), &[vec![2.0], vec![3.0]]);
        assert_eq!(pool.newest(10).len(), 3);
        let t = pool.truncated_to_newest(1);
        assert_eq!(t.paths(), &[vec![3.0]]);
        assert_eq!(t.stamps(), &[3]);
        assert_eq!(t.capacity(), 1);
    }
}
