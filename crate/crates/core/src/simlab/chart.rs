//! Static SVG of bias and RMSE against sample size.

use std::fmt::Write as _;

use super::protocol::{Aggregate, Method};

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 50.0;

fn color(method: Method) -> &'static str {
    match method {
        Method::Weighted => "#1f77b4",
        Method::Unweighted => "#d62728",
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.08 * (hi - lo);
    (lo - pad, hi + pad)
}

fn panel(
    svg: &mut String,
    x0: f64,
    title: &str,
    sizes: &[usize],
    aggregates: &[Aggregate],
    value: impl Fn(&Aggregate) -> f64,
    zero_line: bool,
) {
    let (mut lo, mut hi) = bounds(aggregates.iter().map(&value));
    if zero_line {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    let xs = |i: usize| {
        let span = (sizes.len().max(2) - 1) as f64;
        x0 + MARGIN + PANEL_W * i as f64 / span
    };
    let ys = |v: f64| MARGIN + PANEL_H * (hi - v) / (hi - lo);

    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{title}</text>"#,
        x0 + MARGIN + PANEL_W / 2.0,
        MARGIN - 18.0
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{:.1}" y="{MARGIN}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>"##,
        x0 + MARGIN
    );
    for (i, n) in sizes.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{n}</text>"#,
            xs(i),
            MARGIN + PANEL_H + 16.0
        );
    }
    for t in 0..=4 {
        let v = lo + (hi - lo) * t as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{v:.3}</text>"#,
            x0 + MARGIN - 4.0,
            ys(v) + 3.0
        );
    }
    if zero_line && lo < 0.0 && hi > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
            x0 + MARGIN,
            x0 + MARGIN + PANEL_W,
            y = ys(0.0)
        );
    }
    for method in [Method::Unweighted, Method::Weighted] {
        let points: Vec<String> = sizes
            .iter()
            .enumerate()
            .filter_map(|(i, &n)| {
                aggregates
                    .iter()
                    .find(|a| a.method == method && a.n == n)
                    .map(|a| format!("{:.2},{:.2}", xs(i), ys(value(a))))
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            points.join(" "),
            color(method)
        );
        for p in &points {
            let (px, py) = p.split_once(',').unwrap();
            let _ = writeln!(
                svg,
                r#"<circle cx="{px}" cy="{py}" r="3" fill="{}"/>"#,
                color(method)
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">sample size n</text>"#,
        x0 + MARGIN + PANEL_W / 2.0,
        MARGIN + PANEL_H + 34.0
    );
}

/// Two panels, bias and RMSE, each with a weighted and an unweighted series.
pub fn render_chart(aggregates: &[Aggregate]) -> String {
    let mut sizes: Vec<usize> = aggregates.iter().map(|a| a.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let width = 2.0 * (PANEL_W + 2.0 * MARGIN);
    let height = PANEL_H + 2.0 * MARGIN + 30.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    panel(&mut svg, 0.0, "Bias", &sizes, aggregates, |a| a.bias, true);
    panel(&mut svg, PANEL_W + 2.0 * MARGIN, "RMSE", &sizes, aggregates, |a| a.rmse, false);
    for (i, method) in [Method::Weighted, Method::Unweighted].into_iter().enumerate() {
        let x = MARGIN + 160.0 * i as f64;
        let y = height - 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/>"#,
            x + 24.0,
            color(method)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            x + 30.0,
            y + 4.0,
            method.as_str()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agg(method: Method, n: usize, bias: f64, rmse: f64) -> Aggregate {
        Aggregate {
            method,
            n,
            bias,
            bias_se: 0.0,
            rmse,
            rmse_se: 0.0,
        }
    }

    #[test]
    fn two_panels_two_series() {
        let rows = [
            agg(Method::Weighted, 100, 0.1, 1.0),
            agg(Method::Unweighted, 100, 0.8, 1.5),
            agg(Method::Weighted, 200, -0.05, 0.7),
            agg(Method::Unweighted, 200, 0.7, 1.2),
        ];
        let svg = render_chart(&rows);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains(">Bias<") && svg.contains(">RMSE<"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn flat_series_stays_finite() {
        let rows = [agg(Method::Weighted, 100, 0.0, 0.0), agg(Method::Unweighted, 100, 0.0, 0.0)];
        assert!(!render_chart(&rows).contains("NaN"));
    }
}
