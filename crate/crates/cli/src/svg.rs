//! Standalone SVG: the domain polygon and polyline strokes.

use std::fmt::Write as _;

use gamma_bsde_core::{Domain, Point};

use crate::formats::fmt_f64;

pub struct Stroke {
    pub points: Vec<Point>,
    pub color: &'static str,
}

/// Renders the domain with `strokes` on top. The view box is the bounding
/// box of the domain; `y` is flipped so the picture is upright.
pub fn render(d: &Domain, strokes: &[Stroke]) -> String {
    let (lo, hi) = d.bounding_box();
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let width = 0.004 * w.max(h);
    let xy = |p: &Point| format!("{},{}", fmt_f64(p.x), fmt_f64(lo.y + hi.y - p.y));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="{}">"#,
        fmt_f64(lo.x),
        fmt_f64(lo.y),
        fmt_f64(w),
        fmt_f64(h),
        (600.0 * h / w).round() as i64,
    );
    let _ = writeln!(s, "<title>{}</title>", escape(d.name()));
    let pts: Vec<String> = d.vertices().iter().map(xy).collect();
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#eef2f7" stroke="#333" stroke-width="{}"/>"##,
        pts.join(" "),
        fmt_f64(width)
    );
    for st in strokes {
        let pts: Vec<String> = st.points.iter().map(xy).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-linejoin="round"/>"#,
            pts.join(" "),
            st.color,
            fmt_f64(width)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
