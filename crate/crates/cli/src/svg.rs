//! Plain SVG line charts of coverage and width against the privacy budget.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use precise::bench::CellSummary;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1b6ca8", "#d1495b", "#2e933c", "#8e5ea2"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            (lo, hi) = (lo.log10(), hi.log10());
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`.
    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn panel(
    s: &mut String,
    x0: f64,
    y0: f64,
    title: &str,
    series: &[(String, Vec<(f64, f64)>)],
    x_label: &str,
    reference: Option<f64>,
) {
    let x_axis = Axis::new(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)), true);
    let mut ys: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)).filter(|v| v.is_finite()).collect();
    ys.extend(reference);
    let y_axis = Axis::new(ys.into_iter(), false);
    let px = |v: f64| x0 + MARGIN + x_axis.frac(v) * (PANEL_W - MARGIN - 10.0);
    let py = |v: f64| y0 + PANEL_H - MARGIN + 10.0 - y_axis.frac(v) * (PANEL_H - MARGIN - 20.0);
    let (left, right) = (x0 + MARGIN, x0 + PANEL_W - 10.0);
    let (top, bottom) = (y0 + 10.0, y0 + PANEL_H - MARGIN + 10.0);

    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{title}</text>"#,
        (left + right) / 2.0,
        y0 + 6.0
    );
    let _ = writeln!(
        s,
        r#"<polyline class="axis" points="{left:.1},{top:.1} {left:.1},{bottom:.1} {right:.1},{bottom:.1}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{x_label} (log scale)</text>"#,
        (left + right) / 2.0,
        bottom + 32.0
    );
    for &v in &[y_axis.lo, (y_axis.lo + y_axis.hi) / 2.0, y_axis.hi] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.3}</text>"#,
            left - 4.0,
            py(v) + 3.0
        );
    }
    let mut xs: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for v in xs {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{v}</text>"#,
            px(v),
            bottom + 14.0
        );
    }
    if let Some(r) = reference {
        let _ = writeln!(
            s,
            r#"<line class="reference" x1="{left:.1}" y1="{y:.1}" x2="{right:.1}" y2="{y:.1}" stroke="gray" stroke-dasharray="4 3" data-value="{r}"/>"#,
            y = py(r)
        );
    }
    for (i, (label, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> =
            points.iter().filter(|p| p.1.is_finite()).map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-variant="{label}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let ly = top + 12.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" font-size="10" fill="{color}" text-anchor="end">{label}</text>"#,
            right - 2.0
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One row of panels per sample size: coverage on the left with the 0.95
/// reference line, mean width on the right. Baseline rows are skipped.
pub fn render(task: &str, rows: &[CellSummary]) -> String {
    let mut by_n: BTreeMap<usize, BTreeMap<String, Vec<&CellSummary>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.budget.is_some()) {
        by_n.entry(r.n).or_default().entry(r.variant.clone()).or_default().push(r);
    }
    let notion = rows.iter().find(|r| r.budget.is_some()).map_or("eps", |r| r.notion.as_str());
    let x_label = if notion == "mu" { "mu" } else { "epsilon" };
    let height = PANEL_H * by_n.len().max(1) as f64 + 30.0;
    let width = 2.0 * PANEL_W;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(task)
    );
    for (row, (n, variants)) in by_n.iter().enumerate() {
        let y0 = 30.0 + PANEL_H * row as f64;
        let series = |f: fn(&CellSummary) -> f64| -> Vec<(String, Vec<(f64, f64)>)> {
            variants
                .iter()
                .map(|(v, cells)| {
                    let mut pts: Vec<(f64, f64)> = cells.iter().map(|c| (c.budget.unwrap_or(f64::NAN), f(c))).collect();
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    (escape(v), pts)
                })
                .collect()
        };
        panel(&mut s, 0.0, y0, &format!("coverage, n = {n}"), &series(|c| c.cp), x_label, Some(0.95));
        panel(&mut s, PANEL_W, y0, &format!("mean width, n = {n}"), &series(|c| c.mean_width), x_label, None);
    }
    s.push_str("</svg>\n");
    s
}
