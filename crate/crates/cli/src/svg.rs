//! Fixed-layout SVG of the smoothed surge probability against the
//! dependent variable.

use std::fmt::Write;

use regimekit::filter::Episode;
use regimekit::Period;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 60.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 40.0;
const MAX_YEAR_LABELS: usize = 12;

struct Frame {
    n: usize,
    dep_lo: f64,
    dep_hi: f64,
}

impl Frame {
    fn plot_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn step(&self) -> f64 {
        Self::plot_w() / self.n.max(1) as f64
    }

    /// Centre of quarter `i`.
    fn x(&self, i: usize) -> f64 {
        LEFT + (i as f64 + 0.5) * self.step()
    }

    fn y_prob(&self, p: f64) -> f64 {
        TOP + (1.0 - p.clamp(0.0, 1.0)) * Self::plot_h()
    }

    fn y_dep(&self, v: f64) -> f64 {
        TOP + (self.dep_hi - v) / (self.dep_hi - self.dep_lo) * Self::plot_h()
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    points
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders the chart. `surge` and `dep` are aligned with `periods`.
pub fn probability_chart(
    periods: &[Period],
    surge: &[f64],
    dep: &[f64],
    dep_name: &str,
    episodes: &[Episode],
) -> String {
    let (mut lo, mut hi) = dep
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let f = Frame {
        n: periods.len(),
        dep_lo: lo - pad,
        dep_hi: hi + pad,
    };
    let bottom = TOP + Frame::plot_h();
    let right = LEFT + Frame::plot_w();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);

    let index_of = |p: &Period| periods.iter().position(|q| q == p);
    for e in episodes {
        if let (Some(a), Some(b)) = (index_of(&e.start), index_of(&e.end)) {
            let x0 = f.x(a) - f.step() / 2.0;
            let w = (b - a + 1) as f64 * f.step();
            let _ = writeln!(
                s,
                r##"<rect x="{x0:.2}" y="{TOP:.2}" width="{w:.2}" height="{:.2}" fill="#d9d9d9"><title>{e}</title></rect>"##,
                Frame::plot_h()
            );
        }
    }

    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000" stroke-width="1"/>"##,
        Frame::plot_w(),
        Frame::plot_h()
    );

    for k in 0..=4 {
        let p = k as f64 / 4.0;
        let y = f.y_prob(p);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#000000"/><text x="{:.2}" y="{:.2}" text-anchor="end">{p:.2}</text>"##,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0
        );
        let v = f.dep_lo + p * (f.dep_hi - f.dep_lo);
        let y = f.y_dep(v);
        let _ = writeln!(
            s,
            r##"<line x1="{right:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000000"/><text x="{:.2}" y="{:.2}" text-anchor="start">{v:.2}</text>"##,
            right + 4.0,
            right + 6.0,
            y + 4.0
        );
    }

    let first_quarters: Vec<usize> = (0..periods.len()).filter(|&i| periods[i].quarter() == 1).collect();
    let every = first_quarters.len().div_ceil(MAX_YEAR_LABELS).max(1);
    for &i in first_quarters.iter().step_by(every) {
        let x = f.x(i);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            bottom + 4.0,
            bottom + 16.0,
            periods[i].year()
        );
    }

    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#404040" stroke-width="1.2" points="{}"/>"##,
        polyline(dep.iter().enumerate().map(|(i, &v)| (f.x(i), f.y_dep(v))))
    );
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f4e9e" stroke-width="1.8" stroke-dasharray="6 3" points="{}"/>"##,
        polyline(surge.iter().enumerate().map(|(i, &p)| (f.x(i), f.y_prob(p))))
    );

    let _ = writeln!(
        s,
        r##"<text x="{LEFT}" y="{:.2}">smoothed surge probability (left)</text>"##,
        TOP - 10.0
    );
    let _ = writeln!(
        s,
        r##"<text x="{right:.2}" y="{:.2}" text-anchor="end">{} (right)</text>"##,
        TOP - 10.0,
        escape(dep_name)
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
