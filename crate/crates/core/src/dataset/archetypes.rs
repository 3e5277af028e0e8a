//! Polyline skeletons of the 26 uppercase letters in a unit box (x to the
//! right, y up, height 1). Strokes are listed in writing order; pen-up moves
//! between strokes become straight connecting segments when concatenated.

use std::f64::consts::PI;

type Stroke = Vec<(f64, f64)>;

fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from_deg: f64, to_deg: f64) -> Stroke {
    let n = (((to_deg - from_deg).abs() / 15.0).ceil() as usize).max(2);
    (0..=n)
        .map(|i| {
            let a = (from_deg + (to_deg - from_deg) * i as f64 / n as f64) * PI / 180.0;
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

fn seg(pts: &[(f64, f64)]) -> Stroke {
    pts.to_vec()
}

fn join(parts: Vec<Stroke>) -> Stroke {
    parts.concat()
}

/// Strokes of `letter`, or `None` outside `A..=Z`.
pub fn strokes(letter: char) -> Option<Vec<Stroke>> {
    let s = match letter {
        'A' => vec![seg(&[(0.0, 0.0), (0.35, 1.0), (0.7, 0.0)]), seg(&[(0.15, 0.4), (0.55, 0.4)])],
        'B' => vec![
            seg(&[(0.0, 0.0), (0.0, 1.0)]),
            join(vec![seg(&[(0.0, 1.0)]), arc(0.35, 0.75, 0.25, 0.25, 90.0, -90.0), seg(&[(0.0, 0.5)])]),
            join(vec![seg(&[(0.0, 0.5)]), arc(0.4, 0.25, 0.27, 0.25, 90.0, -90.0), seg(&[(0.0, 0.0)])]),
        ],
        'C' => vec![arc(0.4, 0.5, 0.4, 0.5, 45.0, 315.0)],
        'D' => vec![
            seg(&[(0.0, 0.0), (0.0, 1.0)]),
            join(vec![seg(&[(0.0, 1.0)]), arc(0.25, 0.5, 0.4, 0.5, 90.0, -90.0), seg(&[(0.0, 0.0)])]),
        ],
        'E' => vec![
            seg(&[(0.6, 1.0), (0.0, 1.0), (0.0, 0.0), (0.6, 0.0)]),
            seg(&[(0.0, 0.5), (0.45, 0.5)]),
        ],
        'F' => vec![seg(&[(0.6, 1.0), (0.0, 1.0), (0.0, 0.0)]), seg(&[(0.0, 0.5), (0.45, 0.5)])],
        'G' => vec![join(vec![
            arc(0.4, 0.5, 0.4, 0.5, 45.0, 340.0),
            seg(&[(0.78, 0.45), (0.45, 0.45)]),
        ])],
        'H' => vec![
            seg(&[(0.0, 1.0), (0.0, 0.0)]),
            seg(&[(0.6, 1.0), (0.6, 0.0)]),
            seg(&[(0.0, 0.5), (0.6, 0.5)]),
        ],
        'I' => vec![
            seg(&[(0.1, 1.0), (0.5, 1.0)]),
            seg(&[(0.3, 1.0), (0.3, 0.0)]),
            seg(&[(0.1, 0.0), (0.5, 0.0)]),
        ],
        'J' => vec![join(vec![seg(&[(0.6, 1.0)]), arc(0.3, 0.3, 0.3, 0.3, 0.0, -180.0)])],
        'K' => vec![seg(&[(0.0, 1.0), (0.0, 0.0)]), seg(&[(0.6, 1.0), (0.0, 0.45), (0.6, 0.0)])],
        'L' => vec![seg(&[(0.0, 1.0), (0.0, 0.0), (0.55, 0.0)])],
        'M' => vec![seg(&[(0.0, 0.0), (0.0, 1.0), (0.35, 0.4), (0.7, 1.0), (0.7, 0.0)])],
        'N' => vec![seg(&[(0.0, 0.0), (0.0, 1.0), (0.6, 0.0), (0.6, 1.0)])],
        'O' => vec![arc(0.35, 0.5, 0.35, 0.5, 90.0, 450.0)],
        'P' => vec![join(vec![
            seg(&[(0.0, 0.0), (0.0, 1.0)]),
            arc(0.3, 0.75, 0.3, 0.25, 90.0, -90.0),
            seg(&[(0.0, 0.5)]),
        ])],
        'Q' => vec![arc(0.35, 0.5, 0.35, 0.5, 90.0, 450.0), seg(&[(0.4, 0.25), (0.75, -0.05)])],
        'R' => vec![join(vec![
            seg(&[(0.0, 0.0), (0.0, 1.0)]),
            arc(0.3, 0.75, 0.3, 0.25, 90.0, -90.0),
            seg(&[(0.0, 0.5), (0.6, 0.0)]),
        ])],
        'S' => vec![join(vec![
            arc(0.35, 0.75, 0.3, 0.25, 20.0, 270.0),
            arc(0.35, 0.25, 0.3, 0.25, 90.0, -160.0),
        ])],
        'T' => vec![seg(&[(0.0, 1.0), (0.7, 1.0)]), seg(&[(0.35, 1.0), (0.35, 0.0)])],
        'U' => vec![join(vec![
            seg(&[(0.0, 1.0)]),
            arc(0.3, 0.3, 0.3, 0.3, 180.0, 360.0),
            seg(&[(0.6, 1.0)]),
        ])],
        'V' => vec![seg(&[(0.0, 1.0), (0.35, 0.0), (0.7, 1.0)])],
        'W' => vec![seg(&[(0.0, 1.0), (0.2, 0.0), (0.4, 0.7), (0.6, 0.0), (0.8, 1.0)])],
        'X' => vec![seg(&[(0.0, 1.0), (0.7, 0.0)]), seg(&[(0.7, 1.0), (0.0, 0.0)])],
        'Y' => vec![seg(&[(0.0, 1.0), (0.35, 0.5), (0.7, 1.0)]), seg(&[(0.35, 0.5), (0.35, 0.0)])],
        'Z' => vec![seg(&[(0.0, 1.0), (0.65, 1.0), (0.0, 0.0), (0.65, 0.0)])],
        _ => return None,
    };
    Some(s)
}

/// All strokes concatenated into one pen path, repeated vertices removed.
pub fn skeleton(letter: char) -> Option<Vec<(f64, f64)>> {
    let mut path: Vec<(f64, f64)> = Vec::new();
    for p in strokes(letter)?.into_iter().flatten() {
        if path.last().is_none_or(|q| (q.0 - p.0).hypot(q.1 - p.1) > 1e-9) {
            path.push(p);
        }
    }
    Some(path)
}
