//! Standalone SVG convergence plots with a logarithmic cost axis.

use std::fmt::Write;

use crate::trace::TraceRow;

/// Smallest cost drawn; lower values are clipped to it.
pub const CLIP_FLOOR: f64 = 1e-10;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 260.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum XAxis {
    #[default]
    Evals,
    Wall,
}

pub struct Series {
    pub label: String,
    pub rows: Vec<TraceRow>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders one polyline per series.
///
/// Costs at or below [`CLIP_FLOOR`] (including zero and negatives) are drawn
/// at the floor and `+inf` at the top of the axis, so every row keeps its
/// point.
pub fn render_svg(series: &[Series], x_axis: XAxis) -> String {
    let x_of = |r: &TraceRow| match x_axis {
        XAxis::Evals => r.evals as f64,
        XAxis::Wall => r.wall_s,
    };
    let all = || series.iter().flat_map(|s| s.rows.iter());
    let finite_costs = || all().map(|r| r.best_f).filter(|f| f.is_finite());
    let clipped = all().any(|r| r.best_f <= CLIP_FLOOR);

    let hi = finite_costs().fold(CLIP_FLOOR, f64::max);
    let lo = finite_costs().fold(hi, |a, f| a.min(f.max(CLIP_FLOOR)));
    let y_lo = lo.log10().floor();
    let y_hi = hi.log10().ceil().max(y_lo + 1.0);
    let x_max = all().map(x_of).filter(|x| x.is_finite()).fold(0.0, f64::max);
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + plot_w * (x / x_max);
    let py = |f: f64| {
        let f = if f.is_nan() || f == f64::INFINITY { hi } else { f.max(CLIP_FLOOR) };
        TOP + plot_h * (1.0 - (f.log10() - y_lo) / (y_hi - y_lo))
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );

    let mut decade = y_lo;
    while decade <= y_hi {
        let y = py(10f64.powf(decade));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
        decade += 1.0;
    }
    for i in 0..=5 {
        let x = x_max * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(x),
            TOP + plot_h + 18.0,
            format_tick(x)
        );
    }
    let x_label = match x_axis {
        XAxis::Evals => "function evaluations",
        XAxis::Wall => "wall-clock seconds",
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">best cost (log scale)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let legend_x = LEFT + plot_w + 16.0;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let label = escape(&s.label);
        let points: Vec<String> = s
            .rows
            .iter()
            .filter(|r| x_of(r).is_finite())
            .map(|r| format!("{:.2},{:.2}", px(x_of(r)), py(r.best_f)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{label}</title></polyline>"#,
            points.join(" ")
        );
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{label}</text>"#,
            legend_x + 20.0,
            legend_x + 26.0,
            y + 4.0
        );
    }
    if clipped {
        let y = TOP + 10.0 + 18.0 * series.len() as f64 + 8.0;
        let _ = writeln!(
            svg,
            r##"<text x="{legend_x}" y="{y}" fill="#555">costs at or below {CLIP_FLOOR:e} clipped to {CLIP_FLOOR:e}</text>"##
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x >= 1e4 {
        format!("{x:.1e}")
    } else if x.fract() == 0.0 {
        format!("{x}")
    } else {
        format!("{x:.1}")
    }
}
