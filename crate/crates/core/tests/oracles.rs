//! Independent reference implementations checked against the library.

use std::f64::consts::{E, PI};

use metaes_core::{
    apply_reconstruction, eval_base, make_objective, recombine_paths, BaseFunction, Normalizer, Objective,
    OuterWeights, PathPool,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    diff / scale
}

/// Row-major `n x n` product of the rank-one factors, oldest on the left.
fn dense_factor_product(paths: &[Vec<f64>], c1: f64, n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    for p in paths {
        let mut f = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                f[i * n + j] = 0.5 * c1 * p[i] * p[j] + if i == j { 1.0 - 0.5 * c1 } else { 0.0 };
            }
        }
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                next[i * n + j] = (0..n).map(|k| m[i * n + k] * f[k * n + j]).sum();
            }
        }
        m = next;
    }
    m
}

fn dense_apply(m: &[f64], n: usize, z: &[f64]) -> Vec<f64> {
    (0..n).map(|i| (0..n).map(|j| m[i * n + j] * z[j]).sum()).collect()
}

#[test]
fn reconstruction_matches_dense_product() {
    let n = 10;
    let c1 = 1.0 / (10.0 * ((n + 1) as f64).ln());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for count in 0..=5 {
        let paths: Vec<Vec<f64>> = (0..count).map(|_| gaussian(&mut rng, n)).collect();
        let pool = PathPool::from_paths(paths.clone());
        let dense = dense_factor_product(&paths, c1, n);
        for _ in 0..100 {
            let z = gaussian(&mut rng, n);
            let got = apply_reconstruction(&pool, count, c1, &z);
            let want = dense_apply(&dense, n, &z);
            assert!(rel_err(&got, &want) <= 1e-12, "count {count}: {}", rel_err(&got, &want));
        }
    }
}

#[test]
fn reconstruction_restricted_to_newest() {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let paths: Vec<Vec<f64>> = (0..5).map(|_| gaussian(&mut rng, n)).collect();
    let pool = PathPool::from_paths(paths.clone());
    let dense = dense_factor_product(&paths[2..], 0.3, n);
    let z = gaussian(&mut rng, n);
    assert!(rel_err(&apply_reconstruction(&pool, 3, 0.3, &z), &dense_apply(&dense, n, &z)) <= 1e-12);
    let all = dense_factor_product(&paths, 0.3, n);
    assert!(rel_err(&apply_reconstruction(&pool, 99, 0.3, &z), &dense_apply(&all, n, &z)) <= 1e-12);
}

#[test]
fn reconstruction_transform_is_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [2, 7, 20] {
        let c1 = 1.0 / (10.0 * ((n + 1) as f64).ln());
        for count in 1..=5 {
            let paths: Vec<Vec<f64>> = (0..count).map(|_| gaussian(&mut rng, n)).collect();
            let pool = PathPool::from_paths(paths);
            for _ in 0..50 {
                let v = gaussian(&mut rng, n);
                let av = apply_reconstruction(&pool, count, c1, &v);
                let q: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
                assert!(q > 0.0, "n={n} paths={count}");
            }
        }
    }
}

/// Pads every pool's newest paths with leading zero rows to `K` rows, then
/// takes the plain weighted sum row by row.
fn padded_merge(pools: &[Vec<Vec<f64>>], ne: &[usize], w: &[f64], denom: f64, n: usize) -> Vec<Vec<f64>> {
    let taken: Vec<&[Vec<f64>]> =
        pools.iter().zip(ne).map(|(p, &k)| &p[p.len() - k.min(p.len())..]).collect();
    let k = taken.iter().map(|t| t.len()).max().unwrap_or(0);
    let padded: Vec<Vec<Vec<f64>>> = taken
        .iter()
        .map(|t| {
            let mut rows = vec![vec![0.0; n]; k - t.len()];
            rows.extend(t.iter().cloned());
            rows
        })
        .collect();
    (0..k)
        .map(|row| {
            (0..n)
                .map(|col| {
                    let mut acc = 0.0;
                    for (p, wi) in padded.iter().zip(w) {
                        acc += wi / denom * p[row][col];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

#[test]
fn path_merge_matches_padding_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..100 {
        let n = rng.random_range(1..=16);
        let mu = rng.random_range(1..=4);
        let lambda = mu + rng.random_range(0..4);
        let weights = OuterWeights::log_rank(mu, lambda).unwrap();
        let normalizer = if case % 2 == 0 { Normalizer::Literal } else { Normalizer::Variance };
        let raw: Vec<Vec<Vec<f64>>> =
            (0..mu).map(|_| (0..rng.random_range(0..=6)).map(|_| gaussian(&mut rng, n)).collect()).collect();
        let ne: Vec<usize> = (0..mu).map(|_| rng.random_range(1..=6)).collect();
        let pools: Vec<PathPool> = raw.iter().map(|p| PathPool::from_paths(p.clone())).collect();
        let refs: Vec<&PathPool> = pools.iter().collect();
        let merged = recombine_paths(&refs, &ne, &weights, normalizer).unwrap();
        let want = padded_merge(&raw, &ne, weights.weights(), weights.denominator(normalizer), n);
        assert_eq!(merged.len(), want.len());
        for (a, b) in merged.paths().iter().zip(&want) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-15, "case {case}");
            }
        }
        assert_eq!(merged.stamps(), (1..=want.len() as u64).collect::<Vec<_>>());
    }
}

/// Direct transcriptions of the benchmark formulas, 1-based in `i`.
fn reference_formula(f: BaseFunction, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let idx = |i: usize| (i + 1) as f64;
    match f {
        BaseFunction::Sphere => y.iter().map(|v| v.powi(2)).sum(),
        BaseFunction::Cigar => y[0].powi(2) + 1e6 * y.iter().skip(1).map(|v| v.powi(2)).sum::<f64>(),
        BaseFunction::Discus => 1e6 * y[0].powi(2) + y.iter().skip(1).map(|v| v.powi(2)).sum::<f64>(),
        BaseFunction::Ellipsoid => {
            y.iter().enumerate().map(|(i, v)| 1e6f64.powf((idx(i) - 1.0) / (n - 1.0)) * v.powi(2)).sum()
        }
        BaseFunction::DifferentPowers => y
            .iter()
            .enumerate()
            .map(|(i, v)| v.abs().powf((2.0 + 4.0 * (idx(i) - 1.0)) / (n - 1.0)))
            .sum(),
        BaseFunction::Schwefel221 => y.iter().map(|v| v.abs()).fold(0.0, f64::max),
        BaseFunction::Step => y.iter().map(|v| (v + 0.5).floor().powi(2)).sum(),
        BaseFunction::Schwefel12 => {
            (0..y.len()).map(|i| y[..=i].iter().sum::<f64>().powi(2)).sum()
        }
        BaseFunction::Ackley => {
            -20.0 * (-0.2 * (y.iter().map(|v| v * v).sum::<f64>() / n).sqrt()).exp()
                - (y.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n).exp()
                + 20.0
                + E
        }
        BaseFunction::Rastrigin => 10.0 * n + y.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>(),
        BaseFunction::Michalewicz => {
            600.0
                - y.iter()
                    .enumerate()
                    .map(|(i, v)| v.sin() * (idx(i) * v * v / PI).sin().powi(20))
                    .sum::<f64>()
        }
        BaseFunction::Salomon => {
            let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            1.0 - (2.0 * PI * r).cos() + 0.1 * r
        }
        BaseFunction::ScaledRastrigin => {
            10.0 * n
                + y.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let z = 10f64.powf((idx(i) - 1.0) / (n - 1.0)) * v;
                        z * z - 10.0 * (2.0 * PI * z).cos()
                    })
                    .sum::<f64>()
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn formulas_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for f in BaseFunction::ALL {
        for n in [2, 5, 13] {
            for _ in 0..20 {
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let got = eval_base(f, &y).unwrap();
                let want = reference_formula(f, &y);
                assert!(rel(got, want) <= 1e-12 || (got - want).abs() <= 1e-12, "{f} n={n}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn point_values() {
    assert_eq!(eval_base(BaseFunction::Sphere, &[0.0; 5]).unwrap(), 0.0);
    assert_eq!(eval_base(BaseFunction::Cigar, &[1.0; 5]).unwrap(), 1.0 + 4e6);
    assert!(eval_base(BaseFunction::Ackley, &[0.0; 5]).unwrap().abs() <= 1e-12);
    assert_eq!(eval_base(BaseFunction::Michalewicz, &[0.0; 5]).unwrap(), 600.0);
    assert_eq!(eval_base(BaseFunction::Step, &[0.4, -0.4, 0.49]).unwrap(), 0.0);
}

#[test]
fn evaluate_matches_dense_transform() {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (k, f) in BaseFunction::ALL.into_iter().enumerate() {
        let spec = make_objective(f, n, 40 + k as u64).unwrap();
        let r = spec.rotation();
        let s = spec.shift();
        for _ in 0..25 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..n).map(|i| (0..n).map(|j| r[i * n + j] * (x[j] - s[j])).sum()).collect();
            let want = reference_formula(f, &y);
            let got = spec.evaluate(&x).unwrap();
            assert!(rel(got, want) <= 1e-12 || (got - want).abs() <= 1e-12, "{f}: {got} vs {want}");
        }
    }
}

#[test]
fn rotated_sphere_depends_only_on_distance_to_shift() {
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..5 {
        let spec = make_objective(BaseFunction::Sphere, n, seed).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let d: Vec<f64> = x.iter().zip(spec.shift()).map(|(a, b)| a - b).collect();
            let want = eval_base(BaseFunction::Sphere, &d).unwrap();
            assert!(rel(spec.evaluate(&x).unwrap(), want) <= 1e-10);
        }
    }
}

#[test]
fn unimodal_minimum_at_shift() {
    for f in BaseFunction::ALL.into_iter().filter(|f| f.modality() == metaes_core::Modality::Unimodal) {
        let spec = make_objective(f, 8, 1).unwrap();
        assert_eq!(spec.evaluate(spec.shift()).unwrap(), 0.0, "{f}");
    }
}
