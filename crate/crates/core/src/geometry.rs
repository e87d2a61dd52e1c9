//! Polygon construction, similarity transforms, area and odd–even containment.
//!
//! Coordinates are canvas pixels with y pointing down. Angles are radians;
//! a rotation of `θ` places the first vertex of a generated shape at
//! `center + radius·(cos θ, sin θ)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of sides used wherever a circle needs a polygonal stand-in.
pub const CIRCLE_SIDES: usize = 32;
pub const DEFAULT_STAR_INNER_RATIO: f64 = 0.5;
pub const DEFAULT_CROSS_ARM_RATIO: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn union(self, other: Rect) -> Rect {
        Rect {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn inflate(self, margin: f64) -> Rect {
        Rect {
            min_x: self.min_x - margin,
            min_y: self.min_y - margin,
            max_x: self.max_x + margin,
            max_y: self.max_y + margin,
        }
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min_x < other.max_x
            && other.min_x < self.max_x
            && self.min_y < other.max_y
            && other.min_y < self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

/// One or more closed rings; the closing edge from the last vertex back to
/// the first is implicit. Containment uses the odd–even rule across all rings,
/// so a ring nested in another acts as a hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Point>>", into = "Vec<Vec<Point>>")]
pub struct Outline {
    rings: Vec<Vec<Point>>,
}

impl Outline {
    pub fn new(rings: Vec<Vec<Point>>) -> Result<Self> {
        if rings.is_empty() {
            return Err(Error::Parameter("outline has no rings".into()));
        }
        for (r, ring) in rings.iter().enumerate() {
            if ring.len() < 3 {
                return Err(Error::Parameter(format!(
                    "ring {r} has {} vertices, need at least 3",
                    ring.len()
                )));
            }
            if let Some(p) = ring.iter().find(|p| !p.is_finite()) {
                return Err(Error::Parameter(format!(
                    "ring {r} has non-finite vertex {p:?}"
                )));
            }
            let n = ring.len();
            for i in 0..n {
                if ring[i] == ring[(i + 1) % n] {
                    return Err(Error::Parameter(format!(
                        "ring {r} repeats vertex {:?} consecutively",
                        ring[i]
                    )));
                }
            }
        }
        Ok(Outline { rings })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Outline::new(vec![vertices])
    }

    pub fn rings(&self) -> &[Vec<Point>] {
        &self.rings
    }

    pub fn vertex_count(&self) -> usize {
        self.rings.iter().map(Vec::len).sum()
    }

    pub fn bbox(&self) -> Rect {
        let mut r = Rect {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for p in self.rings.iter().flatten() {
            r.min_x = r.min_x.min(p.x);
            r.min_y = r.min_y.min(p.y);
            r.max_x = r.max_x.max(p.x);
            r.max_y = r.max_y.max(p.y);
        }
        r
    }

    /// Area-weighted centroid of the rings.
    pub fn centroid(&self) -> Point {
        let mut total = 0.0;
        let (mut cx, mut cy) = (0.0, 0.0);
        for ring in &self.rings {
            let a = signed_area(ring);
            if a.abs() < 1e-300 {
                continue;
            }
            let c = ring_centroid(ring, a);
            total += a.abs();
            cx += c.x * a.abs();
            cy += c.y * a.abs();
        }
        if total == 0.0 {
            let n = self.vertex_count() as f64;
            let sx: f64 = self.rings.iter().flatten().map(|p| p.x).sum();
            let sy: f64 = self.rings.iter().flatten().map(|p| p.y).sum();
            return Point::new(sx / n, sy / n);
        }
        Point::new(cx / total, cy / total)
    }

    /// Pushes the x coordinate of every edge crossing of the horizontal line
    /// at `y`, using the same half-open rule as [`point_inside`].
    pub fn crossings_at(&self, y: f64, out: &mut Vec<f64>) {
        for ring in &self.rings {
            let n = ring.len();
            for i in 0..n {
                if let Some(x) = edge_crossing(ring[i], ring[(i + 1) % n], y) {
                    out.push(x);
                }
            }
        }
    }

    fn map_points(&self, f: impl Fn(Point) -> Point) -> Outline {
        Outline {
            rings: self
                .rings
                .iter()
                .map(|ring| ring.iter().map(|&p| f(p)).collect())
                .collect(),
        }
    }
}

impl TryFrom<Vec<Vec<Point>>> for Outline {
    type Error = Error;

    fn try_from(rings: Vec<Vec<Point>>) -> Result<Self> {
        Outline::new(rings)
    }
}

impl From<Outline> for Vec<Vec<Point>> {
    fn from(o: Outline) -> Self {
        o.rings
    }
}

/// Fill glyph geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind {
    CircleApprox,
    RegularPolygon { sides: u32 },
    Star { points: u32, inner_ratio: f64 },
    Cross { arm_ratio: f64 },
}

impl ShapeKind {
    pub fn star(points: u32) -> Self {
        ShapeKind::Star {
            points,
            inner_ratio: DEFAULT_STAR_INNER_RATIO,
        }
    }

    pub fn cross() -> Self {
        ShapeKind::Cross {
            arm_ratio: DEFAULT_CROSS_ARM_RATIO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ShapeKind::CircleApprox => Ok(()),
            ShapeKind::RegularPolygon { sides } if sides < 3 => Err(Error::Parameter(
                format!("regular polygon needs at least 3 sides, got {sides}"),
            )),
            ShapeKind::Star { points, .. } if points < 4 => Err(Error::Parameter(format!(
                "star needs at least 4 points, got {points}"
            ))),
            ShapeKind::Star { inner_ratio, .. } if !(inner_ratio > 0.0 && inner_ratio < 1.0) => {
                Err(Error::Parameter(format!(
                    "star inner ratio must be in (0, 1), got {inner_ratio}"
                )))
            }
            ShapeKind::Cross { arm_ratio } if !(arm_ratio > 0.0 && arm_ratio < 1.0) => {
                Err(Error::Parameter(format!(
                    "cross arm ratio must be in (0, 1), got {arm_ratio}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Builds a shape inscribed in the circle of `radius` around `center`.
///
/// The cross is a plus sign whose arm tips touch the circle; its arms run
/// along the `rotation` direction and the perpendicular.
pub fn make_outline(kind: ShapeKind, center: Point, radius: f64, rotation: f64) -> Result<Outline> {
    kind.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    if !center.is_finite() || !rotation.is_finite() {
        return Err(Error::Parameter("non-finite center or rotation".into()));
    }
    let at = |angle: f64, r: f64| {
        Point::new(center.x + r * angle.cos(), center.y + r * angle.sin())
    };
    let vertices: Vec<Point> = match kind {
        ShapeKind::CircleApprox => (0..CIRCLE_SIDES)
            .map(|k| at(rotation + TAU * k as f64 / CIRCLE_SIDES as f64, radius))
            .collect(),
        ShapeKind::RegularPolygon { sides } => (0..sides)
            .map(|k| at(rotation + TAU * k as f64 / sides as f64, radius))
            .collect(),
        ShapeKind::Star { points, inner_ratio } => (0..2 * points)
            .map(|k| {
                let r = if k % 2 == 0 { radius } else { radius * inner_ratio };
                at(rotation + PI * k as f64 / points as f64, r)
            })
            .collect(),
        ShapeKind::Cross { arm_ratio } => {
            let side = 2.0 * radius / (1.0 + arm_ratio * arm_ratio).sqrt();
            let h = side / 2.0;
            let k = arm_ratio * side / 2.0;
            let local = [
                (h, -k),
                (h, k),
                (k, k),
                (k, h),
                (-k, h),
                (-k, k),
                (-h, k),
                (-h, -k),
                (-k, -k),
                (-k, -h),
                (k, -h),
                (k, -k),
            ];
            let (s, c) = rotation.sin_cos();
            local
                .iter()
                .map(|&(x, y)| Point::new(center.x + x * c - y * s, center.y + x * s + y * c))
                .collect()
        }
    };
    Outline::polygon(vertices)
}

/// x coordinate where the edge `a→b` crosses the horizontal line at `y`,
/// if it does under the half-open rule (lower endpoint in, upper out).
#[inline]
fn edge_crossing(a: Point, b: Point, y: f64) -> Option<f64> {
    if (a.y > y) != (b.y > y) {
        Some(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y))
    } else {
        None
    }
}

/// Odd–even ray casting: a rightward horizontal ray from `p` crosses the
/// outline's edges an odd number of times.
pub fn point_inside(outline: &Outline, p: Point) -> bool {
    let mut inside = false;
    for ring in outline.rings() {
        let n = ring.len();
        for i in 0..n {
            if let Some(x) = edge_crossing(ring[i], ring[(i + 1) % n], p.y) {
                if p.x < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut sum = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        sum += a.x * b.y - b.x * a.y;
    }
    sum * 0.5
}

fn ring_centroid(ring: &[Point], area: f64) -> Point {
    let n = ring.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let cross = a.x * b.y - b.x * a.y;
        cx += (a.x + b.x) * cross;
        cy += (a.y + b.y) * cross;
    }
    Point::new(cx / (6.0 * area), cy / (6.0 * area))
}

/// Sum of the absolute shoelace areas of all rings.
pub fn polygon_area(outline: &Outline) -> f64 {
    outline.rings().iter().map(|r| signed_area(r).abs()).sum()
}

/// Rotation and uniform scale about a pivot, followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub pivot: Point,
    pub rotation: f64,
    pub scale: f64,
    pub translate: Point,
}

impl Similarity {
    pub fn new(pivot: Point, rotation: f64, scale: f64, translate: Point) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
        }
        if !rotation.is_finite() || !pivot.is_finite() || !translate.is_finite() {
            return Err(Error::Parameter("non-finite transform component".into()));
        }
        Ok(Similarity {
            pivot,
            rotation,
            scale,
            translate,
        })
    }

    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        let dx = p.x - self.pivot.x;
        let dy = p.y - self.pivot.y;
        Point::new(
            self.pivot.x + self.scale * (dx * c - dy * s) + self.translate.x,
            self.pivot.y + self.scale * (dx * s + dy * c) + self.translate.y,
        )
    }

    pub fn apply_outline(&self, outline: &Outline) -> Outline {
        outline.map_points(|p| self.apply(p))
    }
}

/// Rotates about the outline centroid, scales about it, then translates.
pub fn transform(outline: &Outline, rotation: f64, scale: f64, translate: Point) -> Result<Outline> {
    let sim = Similarity::new(outline.centroid(), rotation, scale, translate)?;
    Ok(sim.apply_outline(outline))
}
