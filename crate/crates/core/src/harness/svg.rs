use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// A minimal SVG line chart. Coordinates are printed with fixed precision so
/// equal inputs give byte-equal files. Non-finite points are dropped.
pub fn line_chart(title: &str, x_label: &str, series: &[(&str, &[f64])]) -> String {
    let finite = || series.iter().flat_map(|(_, ys)| ys.iter().copied().filter(|y| y.is_finite()));
    let (mut lo, mut hi) = finite().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let n = series.iter().map(|(_, ys)| ys.len()).max().unwrap_or(0).max(2);
    let px = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
    let py = |y: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (y - lo) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(out, r#"<path d="M{x0:.1} {y1:.1} L{x0:.1} {y0:.1} L{x1:.1} {y0:.1}" stroke="black" fill="none"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{hi:.4}</text>"#, x0 - 4.0, y1 + 4.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{lo:.4}</text>"#, x0 - 4.0, y0);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (i, y) in ys.iter().enumerate() {
            if !y.is_finite() {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, px(i), py(*y));
            pen_down = true;
        }
        let _ = writeln!(out, r#"<path d="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, d.trim_end());
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}" font-family="sans-serif" font-size="11">{}</text>"#,
            x1 - 120.0,
            y1 + 14.0 * (k + 1) as f64,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
