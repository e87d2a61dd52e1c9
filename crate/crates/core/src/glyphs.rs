//! Built-in stroke font and the named shape vocabulary.
//!
//! Glyphs are polylines on a 4×6 unit cell (y down). Each stroke segment is
//! thickened into its own rectangle outline; overlapping rectangles are
//! merged by the rasterizer's union.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use crate::error::{Error, Result};
use crate::geometry::{make_outline, Outline, Point, ShapeKind, Similarity};

const CELL_W: f64 = 4.0;
const CELL_H: f64 = 6.0;
const ADVANCE: f64 = 5.0;
const STROKE: f64 = 1.3;

type Stroke = &'static [(f64, f64)];

const BOX: Stroke = &[(0.0, 0.0), (4.0, 0.0), (4.0, 6.0), (0.0, 6.0), (0.0, 0.0)];

fn strokes(c: char) -> Option<&'static [Stroke]> {
    let s: &'static [Stroke] = match c {
        '0' | 'O' => &[BOX],
        '1' => &[&[(1.0, 1.0), (2.0, 0.0), (2.0, 6.0)], &[(1.0, 6.0), (3.0, 6.0)]],
        '2' => &[&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (0.0, 3.0), (0.0, 6.0), (4.0, 6.0)]],
        '3' => &[&[(0.0, 0.0), (4.0, 0.0), (4.0, 6.0), (0.0, 6.0)], &[(1.0, 3.0), (4.0, 3.0)]],
        '4' => &[&[(0.0, 0.0), (0.0, 3.0), (4.0, 3.0)], &[(4.0, 0.0), (4.0, 6.0)]],
        '5' | 'S' => &[&[(4.0, 0.0), (0.0, 0.0), (0.0, 3.0), (4.0, 3.0), (4.0, 6.0), (0.0, 6.0)]],
        '6' => &[&[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0), (4.0, 6.0), (4.0, 3.0), (0.0, 3.0)]],
        '7' => &[&[(0.0, 0.0), (4.0, 0.0), (1.5, 6.0)]],
        '8' => &[BOX, &[(0.0, 3.0), (4.0, 3.0)]],
        '9' => &[&[(4.0, 3.0), (0.0, 3.0), (0.0, 0.0), (4.0, 0.0), (4.0, 6.0), (0.0, 6.0)]],
        '+' => &[&[(2.0, 1.0), (2.0, 5.0)], &[(0.0, 3.0), (4.0, 3.0)]],
        '-' | '−' => &[&[(0.0, 3.0), (4.0, 3.0)]],
        '×' => &[&[(0.5, 1.5), (3.5, 4.5)], &[(3.5, 1.5), (0.5, 4.5)]],
        '=' => &[&[(0.0, 2.0), (4.0, 2.0)], &[(0.0, 4.0), (4.0, 4.0)]],
        'A' => &[
            &[(0.0, 6.0), (0.0, 1.0), (1.0, 0.0), (3.0, 0.0), (4.0, 1.0), (4.0, 6.0)],
            &[(0.0, 3.0), (4.0, 3.0)],
        ],
        'B' => &[
            &[(0.0, 0.0), (0.0, 6.0), (3.0, 6.0), (4.0, 5.0), (4.0, 4.0), (3.0, 3.0), (0.0, 3.0)],
            &[(0.0, 0.0), (3.0, 0.0), (4.0, 1.0), (4.0, 2.0), (3.0, 3.0)],
        ],
        'C' => &[&[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0), (4.0, 6.0)]],
        'D' => &[&[(0.0, 0.0), (0.0, 6.0), (2.5, 6.0), (4.0, 4.5), (4.0, 1.5), (2.5, 0.0), (0.0, 0.0)]],
        'E' => &[&[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0), (4.0, 6.0)], &[(0.0, 3.0), (3.0, 3.0)]],
        'F' => &[&[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0)], &[(0.0, 3.0), (3.0, 3.0)]],
        'G' => &[&[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0), (4.0, 6.0), (4.0, 3.0), (2.0, 3.0)]],
        'H' => &[&[(0.0, 0.0), (0.0, 6.0)], &[(4.0, 0.0), (4.0, 6.0)], &[(0.0, 3.0), (4.0, 3.0)]],
        'I' => &[&[(2.0, 0.0), (2.0, 6.0)], &[(1.0, 0.0), (3.0, 0.0)], &[(1.0, 6.0), (3.0, 6.0)]],
        'J' => &[&[(4.0, 0.0), (4.0, 6.0), (0.0, 6.0), (0.0, 4.0)]],
        'K' => &[&[(0.0, 0.0), (0.0, 6.0)], &[(4.0, 0.0), (0.0, 3.0), (4.0, 6.0)]],
        'L' => &[&[(0.0, 0.0), (0.0, 6.0), (4.0, 6.0)]],
        'M' => &[&[(0.0, 6.0), (0.0, 0.0), (2.0, 3.0), (4.0, 0.0), (4.0, 6.0)]],
        'N' => &[&[(0.0, 6.0), (0.0, 0.0), (4.0, 6.0), (4.0, 0.0)]],
        'P' => &[&[(0.0, 6.0), (0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (0.0, 3.0)]],
        'Q' => &[BOX, &[(2.0, 4.0), (4.0, 6.0)]],
        'R' => &[
            &[(0.0, 6.0), (0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (0.0, 3.0)],
            &[(1.5, 3.0), (4.0, 6.0)],
        ],
        'T' => &[&[(0.0, 0.0), (4.0, 0.0)], &[(2.0, 0.0), (2.0, 6.0)]],
        'U' => &[&[(0.0, 0.0), (0.0, 6.0), (4.0, 6.0), (4.0, 0.0)]],
        'V' => &[&[(0.0, 0.0), (2.0, 6.0), (4.0, 0.0)]],
        'W' => &[&[(0.0, 0.0), (1.0, 6.0), (2.0, 3.0), (3.0, 6.0), (4.0, 0.0)]],
        'X' => &[&[(0.0, 0.0), (4.0, 6.0)], &[(4.0, 0.0), (0.0, 6.0)]],
        'Y' => &[&[(0.0, 0.0), (2.0, 3.0), (4.0, 0.0)], &[(2.0, 3.0), (2.0, 6.0)]],
        'Z' => &[&[(0.0, 0.0), (4.0, 0.0), (0.0, 6.0), (4.0, 6.0)]],
        _ => return None,
    };
    Some(s)
}

pub fn supports(c: char) -> bool {
    strokes(c).is_some()
}

/// Unrotated text extent in pixels for glyph height `height`.
pub fn text_extent(text: &str, height: f64) -> (f64, f64) {
    let n = text.chars().count() as f64;
    let unit = height / CELL_H;
    ((ADVANCE * n - (ADVANCE - CELL_W)) * unit, height)
}

/// Extent of the laid-out glyphs including stroke thickness. Diagonal
/// stroke corners reach up to `√2` half-widths past an endpoint, so the pad
/// is conservative.
pub fn padded_text_extent(text: &str, height: f64) -> (f64, f64) {
    let (w, h) = text_extent(text, height);
    let pad = STROKE * std::f64::consts::SQRT_2 * height / CELL_H;
    (w + pad, h + pad)
}

/// Lays out `text` centred on `center` with glyph height `height`, then
/// rotates the whole line by `rotation` about `center`.
pub fn layout_text(text: &str, center: Point, height: f64, rotation: f64) -> Result<Vec<Outline>> {
    if text.is_empty() {
        return Err(Error::Input("cannot lay out empty text".into()));
    }
    let unit = height / CELL_H;
    let (w, h) = text_extent(text, height);
    let origin = Point::new(center.x - w / 2.0, center.y - h / 2.0);
    let rot = Similarity::new(center, rotation, 1.0, Point::new(0.0, 0.0))?;
    let half = STROKE * unit / 2.0;
    let mut out = Vec::new();
    for (i, c) in text.chars().enumerate() {
        let glyph = strokes(c).ok_or_else(|| Error::Input(format!("no glyph for {c:?}")))?;
        let dx = origin.x + i as f64 * ADVANCE * unit;
        for line in glyph {
            for seg in line.windows(2) {
                let a = Point::new(dx + seg[0].0 * unit, origin.y + seg[0].1 * unit);
                let b = Point::new(dx + seg[1].0 * unit, origin.y + seg[1].1 * unit);
                out.push(rot.apply_outline(&thick_segment(a, b, half)?));
            }
        }
    }
    Ok(out)
}

/// Rectangle around segment `a→b`, `half` wide on each side and extended by
/// `half` past both ends so joints close.
fn thick_segment(a: Point, b: Point, half: f64) -> Result<Outline> {
    let len = a.distance(b);
    let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
    let (nx, ny) = (-uy * half, ux * half);
    let a = Point::new(a.x - ux * half, a.y - uy * half);
    let b = Point::new(b.x + ux * half, b.y + uy * half);
    Outline::polygon(vec![
        Point::new(a.x + nx, a.y + ny),
        Point::new(b.x + nx, b.y + ny),
        Point::new(b.x - nx, b.y - ny),
        Point::new(a.x - nx, a.y - ny),
    ])
}

/// Named shapes used by the counting and quadrant tasks, alphabetical.
pub const SHAPE_VOCABULARY: [&str; 8] = [
    "circle", "cross", "heart", "hexagon", "pentagon", "square", "star", "triangle",
];

const HEART_SAMPLES: usize = 48;

/// Outline of a vocabulary shape inscribed in the circle of `radius` around
/// `center`. At `rotation` 0 every shape stands upright.
pub fn vocabulary_outline(name: &str, center: Point, radius: f64, rotation: f64) -> Result<Outline> {
    let up = -FRAC_PI_2;
    match name {
        "circle" => make_outline(ShapeKind::CircleApprox, center, radius, rotation),
        "cross" => make_outline(ShapeKind::cross(), center, radius, rotation),
        "hexagon" => make_outline(ShapeKind::RegularPolygon { sides: 6 }, center, radius, rotation),
        "pentagon" => make_outline(ShapeKind::RegularPolygon { sides: 5 }, center, radius, rotation + up),
        "square" => make_outline(ShapeKind::RegularPolygon { sides: 4 }, center, radius, rotation + FRAC_PI_4),
        "star" => make_outline(ShapeKind::star(5), center, radius, rotation + up),
        "triangle" => make_outline(ShapeKind::RegularPolygon { sides: 3 }, center, radius, rotation + up),
        "heart" => heart(center, radius, rotation),
        _ => Err(Error::Input(format!("unknown shape {name:?}"))),
    }
}

fn heart(center: Point, radius: f64, rotation: f64) -> Result<Outline> {
    let raw: Vec<(f64, f64)> = (0..HEART_SAMPLES)
        .map(|k| {
            let t = TAU * k as f64 / HEART_SAMPLES as f64;
            let x = 16.0 * t.sin().powi(3);
            let y = -(13.0 * t.cos() - 5.0 * (2.0 * t).cos() - 2.0 * (3.0 * t).cos() - (4.0 * t).cos());
            (x, y)
        })
        .collect();
    let (min_y, max_y) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let mid_y = (min_y + max_y) / 2.0;
    let reach = raw
        .iter()
        .map(|&(x, y)| x.hypot(y - mid_y))
        .fold(0.0, f64::max);
    let k = radius / reach;
    let (s, c) = rotation.sin_cos();
    Outline::polygon(
        raw.into_iter()
            .map(|(x, y)| {
                let (x, y) = (x * k, (y - mid_y) * k);
                Point::new(center.x + x * c - y * s, center.y + x * s + y * c)
            })
            .collect(),
    )
}
