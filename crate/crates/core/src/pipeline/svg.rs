//! Deterministic SVG letter plots: one polyline per tracing and an `x`
//! marking its first point.

use std::fmt::Write as _;

use crate::codec::Trajectory;

const CELL: f64 = 120.0;
const PAD: f64 = 12.0;
const LABEL: f64 = 16.0;

fn document(width: f64, height: f64, title: &str, body: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Draws `traj` scaled into the square cell at `(x0, y0)`, aspect ratio kept
/// and the y axis pointing up.
fn cell(out: &mut String, traj: &Trajectory, x0: f64, y0: f64) {
    let (xmin, ymin, xmax, ymax) = traj.bounds();
    let inner = CELL - 2.0 * PAD;
    let span = (xmax - xmin).max(ymax - ymin);
    let k = if span > 0.0 { inner / span } else { 0.0 };
    let ox = x0 + PAD + (inner - (xmax - xmin) * k) / 2.0;
    let oy = y0 + PAD + (inner - (ymax - ymin) * k) / 2.0;
    let map = |x: f64, y: f64| (ox + (x - xmin) * k, oy + (ymax - y) * k);
    let points: Vec<String> = traj
        .points()
        .iter()
        .map(|p| {
            let (x, y) = map(p.x, p.y);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="black" stroke-width="1.5" stroke-linejoin="round" points="{}"/>"#,
        points.join(" ")
    );
    let (sx, sy) = map(traj.points()[0].x, traj.points()[0].y);
    let r = 4.0;
    let _ = writeln!(
        out,
        r#"<path class="start" fill="none" stroke="blue" stroke-width="1.5" d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}"/>"#,
        sx - r,
        sy - r,
        sx + r,
        sy + r,
        sx - r,
        sy + r,
        sx + r,
        sy - r
    );
}

fn grid(items: &[(String, &Trajectory)], columns: usize, title: &str) -> String {
    let columns = columns.clamp(1, items.len().max(1));
    let rows = items.len().div_ceil(columns).max(1);
    let mut body = String::new();
    for (i, (label, traj)) in items.iter().enumerate() {
        let (x0, y0) = ((i % columns) as f64 * CELL, (i / columns) as f64 * (CELL + LABEL));
        let _ = writeln!(
            body,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            x0 + CELL / 2.0,
            y0 + CELL + LABEL - 4.0,
            escape(label)
        );
        cell(&mut body, traj, x0, y0);
    }
    document(columns as f64 * CELL, rows as f64 * (CELL + LABEL), title, &body)
}

/// Several tracings of one letter, four per row.
pub fn letter_sheet(letter: char, tracings: &[(String, &Trajectory)]) -> String {
    grid(tracings, 4, &format!("letter {letter}"))
}

/// One tracing per letter, laid out as an alphabet.
pub fn contact_sheet(tracings: &[(String, &Trajectory)]) -> String {
    grid(tracings, 6, "alphabet")
}
