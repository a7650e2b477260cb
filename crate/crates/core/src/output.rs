//! Text output helpers shared by the CSV, SVG and manifest writers.

use std::fmt::Write as _;

use num_complex::Complex64;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# gafzeros <version> <command> key=value ...`, the first line of every
/// file the tool writes.
pub fn header_line(command: &str, params: &[(&str, String)]) -> String {
    let mut line = format!("# gafzeros {} {command}", crate::VERSION);
    for (k, v) in params {
        let _ = write!(line, " {k}={v}");
    }
    line
}

/// Scatter plot of points in the unit disc: unit-circle outline, an optional
/// dashed circle of radius `r`, and one dot per point.
pub fn svg_scatter(points: &[Complex64], r: Option<f64>, title: &str) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 20.0;
    let scale = (SIZE - 2.0 * PAD) / 2.0;
    let cx = SIZE / 2.0;
    let map = |z: Complex64| (cx + scale * z.re, cx - scale * z.im);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cx}" r="{scale}" fill="none" stroke="black" stroke-width="1"/>"#);
    if let Some(r) = r {
        let _ = writeln!(
            s,
            r#"<circle cx="{cx}" cy="{cx}" r="{:.3}" fill="none" stroke="gray" stroke-dasharray="4 3"/>"#,
            scale * r
        );
    }
    for &z in points {
        let (x, y) = map(z);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="2.5" fill="crimson"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
