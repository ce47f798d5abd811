//! Minimal SVG scatter plots with a fitted line.

use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 360.0;
const M: f64 = 56.0;

/// Log-log cover curve: `points` are `(log 1/eps, log N)`, `slope` the fit.
pub fn loglog_svg(title: &str, points: &[(f64, f64)], slope: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (x0, x1, y0, y1) = (M, W - 16.0, H - M, 32.0);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">log(1/eps)</text>"#, (x0 + x1) / 2.0, H - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">log N</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    if !points.is_empty() {
        let (xmin, xmax) = bounds(points.iter().map(|p| p.0));
        let (ymin, ymax) = bounds(points.iter().map(|p| p.1));
        let px = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
        let py = |y: f64| y0 - (y - ymin) / (ymax - ymin) * (y0 - y1);
        for (v, x) in [(xmin, x0), (xmax, x1)] {
            let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle" font-size="10">{v:.2}</text>"#, y0 + 14.0);
        }
        for (v, y) in [(ymin, y0), (ymax, y1)] {
            let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.2}</text>"#, x0 - 4.0);
        }
        for &(x, y) in points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, px(x), py(y));
        }
        if let Some(b) = slope {
            let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
            let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
            let line = |x: f64| my + b * (x - mx);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick"/>"#,
                px(xmin),
                py(line(xmin)),
                px(xmax),
                py(line(xmax))
            );
            let _ = writeln!(s, r#"<text x="{}" y="48" font-size="12">slope {b:.3}</text>"#, x0 + 8.0);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Two-column CSV of the same curve.
pub fn curve_csv(points: &[(f64, f64)]) -> String {
    let mut s = String::from("log_inv_eps,log_n\n");
    for (x, y) in points {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_are_labelled() {
        let svg = loglog_svg("t", &[(0.0, 0.0), (1.0, 1.0), (2.0, 2.1)], Some(1.05));
        assert!(svg.contains(">log(1/eps)<") && svg.contains(">log N<"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
