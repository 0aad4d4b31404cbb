//! Small self-contained SVG plots. Coordinates are printed with fixed
//! precision so identical inputs give identical files.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn around<'a>(pts: impl Iterator<Item = &'a (f64, f64)>) -> Frame {
        let mut f = Frame { x0: f64::INFINITY, x1: f64::NEG_INFINITY, y0: f64::INFINITY, y1: f64::NEG_INFINITY };
        for &(x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            return Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        let pad = |lo: f64, hi: f64| {
            let d = if hi > lo { 0.04 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
            (lo - d, hi + d)
        };
        (f.x0, f.x1) = pad(f.x0, f.x1);
        (f.y0, f.y1) = pad(f.y0, f.y1);
        f
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Roughly five round tick values covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open(out: &mut String, title: &str, xlabel: &str, ylabel: &str, f: &Frame) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>
"#,
        W / 2.0,
        esc(title)
    );
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, r##"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##, r - l, b - t);
    for v in ticks(f.x0, f.x1) {
        let x = f.px(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.1}" stroke="#333"/><text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"##,
            b + 4.0,
            b + 17.0,
            fmt_tick(v)
        );
    }
    for v in ticks(f.y0, f.y1) {
        let y = f.py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="#333"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"##,
            l - 4.0,
            l - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 10.0, esc(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        esc(ylabel)
    );
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
    let coords: Vec<String> = pts
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#, coords.join(" "));
}

fn legend(out: &mut String, labels: &[(String, &str, bool)]) {
    for (i, (label, color, dashed)) in labels.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let x = W - RIGHT - 150.0;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 22.0,
            x + 28.0,
            y + 4.0,
            esc(label)
        );
    }
}

/// Lines over a shared frame with a legend.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let f = Frame::around(series.iter().flat_map(|s| s.points.iter()));
    let mut out = String::new();
    open(&mut out, title, xlabel, ylabel, &f);
    let mut labels = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        polyline(&mut out, &f, &s.points, color, s.dashed);
        labels.push((s.label.clone(), color, s.dashed));
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Normal q-q plot: points against the identity line.
pub fn qq_plot(title: &str, pairs: &[(f64, f64)]) -> String {
    let f = Frame::around(pairs.iter());
    let mut out = String::new();
    open(&mut out, title, "theoretical N(0,1) quantile", "sample quantile", &f);
    let lo = f.x0.max(f.y0);
    let hi = f.x1.min(f.y1);
    if hi > lo {
        polyline(&mut out, &f, &[(lo, lo), (hi, hi)], "#888", true);
    }
    for &(x, y) in pairs.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="1.8" fill="{}"/>"#, f.px(x), f.py(y), PALETTE[0]);
    }
    out.push_str("</svg>\n");
    out
}

/// Histogram of `values` with a horizontal boxplot above it.
pub fn box_histogram(title: &str, xlabel: &str, values: &[f64], box_stats: Option<(f64, f64, f64, f64, f64)>, bins: usize) -> String {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if finite.is_empty() { (0.0, 1.0) } else if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &finite {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let cmax = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    // headroom above the bars for the boxplot
    let f = Frame::around([(lo, 0.0), (hi, cmax * 1.3)].iter());
    let mut out = String::new();
    open(&mut out, title, xlabel, "count", &f);
    for (k, &c) in counts.iter().enumerate() {
        let (x0, x1) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
        let (px0, px1, py) = (f.px(x0), f.px(x1), f.py(c as f64));
        let _ = writeln!(
            out,
            r##"<rect x="{px0:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd"/>"##,
            (px1 - px0).max(0.0),
            (f.py(0.0) - py).max(0.0)
        );
    }
    if let Some((wlo, q1, med, q3, whi)) = box_stats {
        let yc = f.py(cmax * 1.15);
        let (top, bot) = (yc - 8.0, yc + 8.0);
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="16" fill="none" stroke="#333"/>"##,
            f.px(q1),
            (f.px(q3) - f.px(q1)).max(0.0)
        );
        for (a, b) in [(wlo, q1), (q3, whi)] {
            let _ = writeln!(out, r##"<line x1="{:.2}" y1="{yc:.2}" x2="{:.2}" y2="{yc:.2}" stroke="#333"/>"##, f.px(a), f.px(b));
        }
        for v in [wlo, med, whi] {
            let _ = writeln!(out, r##"<line x1="{:.2}" y1="{top:.2}" x2="{:.2}" y2="{bot:.2}" stroke="#333"/>"##, f.px(v), f.px(v));
        }
        for v in finite.iter().filter(|&&v| v < wlo || v > whi) {
            let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{yc:.2}" r="2.2" fill="none" stroke="#d62728"/>"##, f.px(*v));
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_inside() {
        let t: Vec<String> = ticks(0.03, 0.97).into_iter().map(fmt_tick).collect();
        assert_eq!(t, ["0.2", "0.4", "0.6", "0.8"]);
        assert!(ticks(-3.2, 3.2).contains(&0.0));
    }

    #[test]
    fn plots_are_deterministic_and_well_formed() {
        let s = vec![Series { label: "a<b".into(), points: vec![(0.0, 1.0), (1.0, 2.0)], dashed: false }];
        let a = line_plot("t", "x", "y", &s);
        assert_eq!(a, line_plot("t", "x", "y", &s));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert!(a.contains("a&lt;b"));
        let q = qq_plot("qq", &[(-1.0, -1.2), (0.0, 0.1), (1.0, 0.9)]);
        assert_eq!(q.matches("<circle").count(), 3);
        let h = box_histogram("h", "v", &[1.0, 2.0, 2.0, 3.0, 10.0], Some((1.0, 2.0, 2.0, 3.0, 4.5)), 5);
        assert_eq!(h.matches("stroke=\"#d62728\"").count(), 1);
    }

    #[test]
    fn degenerate_inputs_do_not_panic() {
        let _ = line_plot("e", "x", "y", &[]);
        let _ = qq_plot("e", &[(f64::NAN, 1.0)]);
        let _ = box_histogram("e", "v", &[], None, 10);
        let _ = box_histogram("c", "v", &[2.0, 2.0], None, 10);
    }
}
