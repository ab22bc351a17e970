//! Minimal SVG line charts: frame, ticks, one polyline per series and a
//! legend.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return None;
    }
    // a flat range still gets a visible extent
    Some(if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) })
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// Renders the series. With `log_y`, values are plotted as `log10(y)` and
/// non-positive points are dropped.
pub fn line_chart(series: &[Series], x_label: &str, y_label: &str, log_y: bool) -> String {
    let map_y = |y: f64| if log_y { y.log10() } else { y };
    let kept: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, map_y(y)))
                .collect()
        })
        .collect();
    let (x0, x1) = span(kept.iter().flatten().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let (mut y0, mut y1) = span(kept.iter().flatten().map(|p| p.1)).unwrap_or((0.0, 1.0));
    if log_y {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );

    let _ = writeln!(svg, r#"<g class="x-axis" data-scale="linear">"#);
    for t in nice_ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b5}" stroke="#333"/><text x="{x:.2}" y="{ty}" text-anchor="middle">{t}</text>"##,
            b = TOP + plot_h,
            b5 = TOP + plot_h + 5.0,
            ty = TOP + plot_h + 18.0,
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text></g>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );

    let scale = if log_y { "log" } else { "linear" };
    let _ = writeln!(svg, r#"<g class="y-axis" data-scale="{scale}">"#);
    let y_ticks: Vec<f64> = if log_y {
        let step = ((y1 - y0) / 8.0).ceil().max(1.0);
        let mut v = Vec::new();
        let mut e = y0;
        while e <= y1 + 1e-9 {
            v.push(e);
            e += step;
        }
        v
    } else {
        nice_ticks(y0, y1)
    };
    for t in y_ticks {
        let y = py(t);
        let label = if log_y { format!("1e{}", t as i64) } else { format!("{t}") };
        let _ = writeln!(
            svg,
            r##"<line x1="{l5}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{label}</text>"##,
            l5 = LEFT - 5.0,
            tx = LEFT - 8.0,
            ty = y + 4.0,
        );
    }
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">{}{}</text></g>"#,
        TOP + plot_h / 2.0,
        escape(y_label),
        if log_y { " (log scale)" } else { "" }
    );

    for (k, (s, pts)) in series.iter().zip(&kept).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(&s.label),
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series_and_log_ticks() {
        let series = vec![
            Series {
                label: "a<b".into(),
                points: vec![(0.0, 1.0), (1.0, 0.01), (2.0, 0.0)],
            },
            Series {
                label: "c".into(),
                points: vec![(0.0, 2.0), (2.0, 0.5)],
            },
        ];
        let svg = line_chart(&series, "t", "f", true);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r#"data-scale="log""#));
        assert!(svg.contains(">1e-2<") && svg.contains(">1e0<"));
        assert!(svg.contains("a&lt;b"));
        // the zero objective is dropped on a log axis
        let first = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        assert_eq!(first.matches(',').count(), 2);
    }

    #[test]
    fn ticks_cover_range() {
        assert_eq!(nice_ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = nice_ticks(0.13, 0.91);
        assert!(t.iter().all(|v| (0.13..=0.91).contains(v)) && t.len() >= 3);
    }
}
