//! Greedy non-overlapping disk packing, figure/ground classification of the
//! packed disks, and instantiation of their fill glyphs.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_outline, Outline, Point, ShapeKind};
use crate::raster::BitMask;

/// Inscribed glyph radius relative to the packed disk radius.
pub const FILL_INSET: f64 = 0.95;
pub const DEFAULT_THETA: f64 = 0.5;
pub const POLYGON_SIDES: [u32; 4] = [3, 4, 5, 6];
pub const STAR_POINTS: u32 = 5;
/// Upper bound for any planar disk packing density.
const MAX_DENSITY: f64 = 0.91;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Figure,
    Ground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedElement {
    pub center: Point,
    pub radius: f64,
    pub fill_kind: ShapeKind,
    pub rotation: f64,
    pub side: Side,
    pub color_index: usize,
    pub inside_fraction: f64,
}

impl PackedElement {
    fn placed(center: Point, radius: f64) -> Self {
        PackedElement {
            center,
            radius,
            fill_kind: ShapeKind::CircleApprox,
            rotation: 0.0,
            side: Side::Ground,
            color_index: 0,
            inside_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackingParams {
    pub r_min: f64,
    pub r_max: f64,
    pub gap: f64,
    pub max_failures: u32,
    pub target_coverage: f64,
}

impl Default for PackingParams {
    fn default() -> Self {
        PackingParams {
            r_min: 4.0,
            r_max: 13.0,
            gap: 1.0,
            max_failures: 4000,
            target_coverage: 0.55,
        }
    }
}

impl PackingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min <= self.r_max && self.r_max.is_finite()) {
            return Err(Error::Parameter(format!(
                "need 0 < r_min <= r_max, got {} and {}",
                self.r_min, self.r_max
            )));
        }
        if !(self.gap >= 0.0 && self.gap.is_finite()) {
            return Err(Error::Parameter(format!("gap must be >= 0, got {}", self.gap)));
        }
        if !(self.target_coverage >= 0.0 && self.target_coverage < MAX_DENSITY) {
            return Err(Error::Parameter(format!(
                "target coverage must be in [0, {MAX_DENSITY}), got {}",
                self.target_coverage
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillFamily {
    Dots,
    Polygons,
    Crosses,
    Stars,
}

impl FillFamily {
    pub const ALL: [FillFamily; 4] = [
        FillFamily::Dots,
        FillFamily::Polygons,
        FillFamily::Crosses,
        FillFamily::Stars,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FillFamily::Dots => "dots",
            FillFamily::Polygons => "polygons",
            FillFamily::Crosses => "crosses",
            FillFamily::Stars => "stars",
        }
    }
}

impl fmt::Display for FillFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FillFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FillFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown fill family {s:?}")))
    }
}

/// Uniform grid over accepted disks; cells are wide enough that any disk
/// able to constrain a candidate below `r_max` sits in the 3×3 neighbourhood.
struct DiskGrid {
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

impl DiskGrid {
    fn new(cell: f64, width: f64, height: f64) -> Self {
        let cols = (width / cell).ceil().max(1.0) as usize;
        let rows = (height / cell).ceil().max(1.0) as usize;
        DiskGrid {
            cell,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
        }
    }

    fn index(&self, p: Point) -> (usize, usize) {
        let cx = ((p.x / self.cell) as usize).min(self.cols - 1);
        let cy = ((p.y / self.cell) as usize).min(self.rows - 1);
        (cx, cy)
    }

    fn insert(&mut self, p: Point, id: usize) {
        let (cx, cy) = self.index(p);
        self.cells[cy * self.cols + cx].push(id);
    }

    fn neighbours(&self, p: Point) -> impl Iterator<Item = usize> + '_ {
        let (cx, cy) = self.index(p);
        let xs = cx.saturating_sub(1)..=(cx + 1).min(self.cols - 1);
        let ys = cy.saturating_sub(1)..=(cy + 1).min(self.rows - 1);
        ys.flat_map(move |y| xs.clone().map(move |x| y * self.cols + x))
            .flat_map(move |c| self.cells[c].iter().copied())
    }
}

/// Greedy max-radius packing with uniform candidate centers.
///
/// Each candidate takes the largest radius that keeps it inside the canvas
/// and `gap` away from every accepted disk. Candidates below `r_min` count
/// as failures; accepted radii are capped at `r_max` and jittered down by up
/// to 10%. Stops after `max_failures` consecutive failures or once the disk
/// area reaches `target_coverage`.
pub fn pack<R: Rng + ?Sized>(
    params: &PackingParams,
    width: u32,
    height: u32,
    rng: &mut R,
) -> Result<Vec<PackedElement>> {
    params.validate()?;
    let (w, h) = (width as f64, height as f64);
    let canvas_area = w * h;
    let mut grid = DiskGrid::new(2.0 * params.r_max + params.gap, w, h);
    let mut elements: Vec<PackedElement> = Vec::new();
    let mut covered = 0.0;
    let mut failures = 0;
    while covered / canvas_area < params.target_coverage && failures < params.max_failures {
        let c = Point::new(rng.gen::<f64>() * w, rng.gen::<f64>() * h);
        let mut admissible = c.x.min(c.y).min(w - c.x).min(h - c.y).min(params.r_max);
        for id in grid.neighbours(c) {
            let e = &elements[id];
            admissible = admissible.min(c.distance(e.center) - e.radius - params.gap);
        }
        if admissible < params.r_min {
            failures += 1;
            continue;
        }
        failures = 0;
        let radius = (admissible * (1.0 - 0.1 * rng.gen::<f64>())).max(params.r_min);
        grid.insert(c, elements.len());
        elements.push(PackedElement::placed(c, radius));
        covered += PI * radius * radius;
    }
    Ok(elements)
}

/// Disk area of `elements` over the canvas area.
pub fn disk_coverage(elements: &[PackedElement], width: u32, height: u32) -> f64 {
    let area: f64 = elements.iter().map(|e| PI * e.radius * e.radius).sum();
    area / (width as f64 * height as f64)
}

/// Share of the element's 0.5 px sample lattice (anchored at its center,
/// clipped to its disk) that lands on foreground mask pixels.
pub fn inside_fraction(center: Point, radius: f64, mask: &BitMask) -> f64 {
    let steps = (radius / 0.5).floor() as i64;
    let r2 = radius * radius;
    let (mut hits, mut total) = (0u64, 0u64);
    for j in -steps..=steps {
        for i in -steps..=steps {
            let (dx, dy) = (0.5 * i as f64, 0.5 * j as f64);
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let px = ((center.x + dx).floor().max(0.0) as u32).min(mask.width() - 1);
            let py = ((center.y + dy).floor().max(0.0) as u32).min(mask.height() - 1);
            total += 1;
            if mask.get(px, py) {
                hits += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Labels each element figure when its inside fraction is at least `theta`.
pub fn classify(elements: &mut [PackedElement], mask: &BitMask, theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Parameter(format!("theta must be in (0, 1), got {theta}")));
    }
    for e in elements {
        e.inside_fraction = inside_fraction(e.center, e.radius, mask);
        e.side = if e.inside_fraction >= theta {
            Side::Figure
        } else {
            Side::Ground
        };
    }
    Ok(())
}

/// Chooses the element's glyph and rotation and returns its outline,
/// inscribed in `FILL_INSET` × the packed radius.
pub fn instantiate_fill<R: Rng + ?Sized>(
    element: &mut PackedElement,
    family: FillFamily,
    rng: &mut R,
) -> Result<Outline> {
    element.fill_kind = match family {
        FillFamily::Dots => ShapeKind::CircleApprox,
        FillFamily::Polygons => ShapeKind::RegularPolygon {
            sides: POLYGON_SIDES[rng.gen_range(0..POLYGON_SIDES.len())],
        },
        FillFamily::Crosses => ShapeKind::cross(),
        FillFamily::Stars => ShapeKind::star(STAR_POINTS),
    };
    element.rotation = rng.gen_range(0.0..TAU);
    fill_outline(element)
}

/// Rebuilds the outline of an element whose fill is already instantiated.
pub fn fill_outline(element: &PackedElement) -> Result<Outline> {
    make_outline(
        element.fill_kind,
        element.center,
        element.radius * FILL_INSET,
        element.rotation,
    )
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::geometry::polygon_area;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn fixed_radius_pairwise_audit() {
        let params = PackingParams {
            r_min: 10.0,
            r_max: 10.0,
            gap: 2.0,
            ..PackingParams::default()
        };
        let els = pack(&params, 512, 512, &mut rng(3)).unwrap();
        assert!(els.len() > 100);
        for (i, a) in els.iter().enumerate() {
            assert_eq!(a.radius, 10.0);
            for b in &els[i + 1..] {
                assert!(a.center.distance(b.center) >= 22.0);
            }
        }
    }

    #[test]
    fn zero_target_is_empty() {
        let params = PackingParams {
            target_coverage: 0.0,
            ..PackingParams::default()
        };
        assert!(pack(&params, 512, 512, &mut rng(1)).unwrap().is_empty());
    }

    #[test]
    fn deterministic() {
        let p = PackingParams::default();
        let a = pack(&p, 512, 512, &mut rng(9)).unwrap();
        let b = pack(&p, 512, 512, &mut rng(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            disk_coverage(&a, 512, 512).to_bits(),
            disk_coverage(&b, 512, 512).to_bits()
        );
    }

    #[test]
    fn default_invariants() {
        let p = PackingParams::default();
        let els = pack(&p, 512, 512, &mut rng(11)).unwrap();
        assert!(disk_coverage(&els, 512, 512) >= 0.45);
        for e in &els {
            assert!(e.radius >= p.r_min && e.radius <= p.r_max);
            assert!(e.center.x - e.radius >= 0.0 && e.center.x + e.radius <= 512.0);
            assert!(e.center.y - e.radius >= 0.0 && e.center.y + e.radius <= 512.0);
        }
    }

    #[test]
    fn rejects_bad_params() {
        for p in [
            PackingParams { r_min: 0.0, ..Default::default() },
            PackingParams { r_min: 14.0, ..Default::default() },
            PackingParams { gap: -1.0, ..Default::default() },
            PackingParams { target_coverage: 0.95, ..Default::default() },
        ] {
            assert!(pack(&p, 64, 64, &mut rng(0)).is_err());
        }
    }

    #[test]
    fn infeasible_params_yield_empty() {
        let p = PackingParams {
            r_min: 40.0,
            r_max: 40.0,
            max_failures: 200,
            ..Default::default()
        };
        assert!(pack(&p, 64, 64, &mut rng(0)).unwrap().is_empty());
    }

    #[test]
    fn classify_solid_regions() {
        let full = BitMask::filled(64, 64, true).unwrap();
        let empty = BitMask::filled(64, 64, false).unwrap();
        let mut els = vec![PackedElement::placed(Point::new(30.0, 30.0), 8.0)];
        classify(&mut els, &full, 0.5).unwrap();
        assert_eq!((els[0].inside_fraction, els[0].side), (1.0, Side::Figure));
        classify(&mut els, &empty, 0.5).unwrap();
        assert_eq!((els[0].inside_fraction, els[0].side), (0.0, Side::Ground));
        assert!(classify(&mut els, &full, 1.0).is_err());
        assert!(classify(&mut els, &full, 0.0).is_err());
    }

    #[test]
    fn straddling_half_plane() {
        // foreground is x < 32; element centered on the boundary
        let mask = BitMask::from_fn(64, 64, |x, _| x < 32).unwrap();
        for r in [4.0, 7.3, 12.0] {
            let f = inside_fraction(Point::new(32.0, 30.4), r, &mask);
            assert!((f - 0.5).abs() <= 0.05, "{r}: {f}");
        }
    }

    #[test]
    fn theta_monotone() {
        let mask = BitMask::from_fn(128, 128, |x, y| (x as i32 - 64).pow(2) + (y as i32 - 60).pow(2) < 1600).unwrap();
        let p = PackingParams::default();
        let mut els = pack(&p, 128, 128, &mut rng(5)).unwrap();
        let mut last = usize::MAX;
        for theta in [0.05, 0.2, 0.5, 0.8, 0.99] {
            classify(&mut els, &mask, theta).unwrap();
            let n = els.iter().filter(|e| e.side == Side::Figure).count();
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn fill_outlines() {
        let mut e = PackedElement::placed(Point::new(50.0, 50.0), 10.0);
        let dot = instantiate_fill(&mut e, FillFamily::Dots, &mut rng(0)).unwrap();
        let want = PI * (0.95f64 * 10.0).powi(2);
        assert_eq!(dot.vertex_count(), 32);
        assert!((polygon_area(&dot) - want).abs() / want < 0.007);

        let cross = instantiate_fill(&mut e, FillFamily::Crosses, &mut rng(0)).unwrap();
        assert_eq!(cross.vertex_count(), 12);
        let star = instantiate_fill(&mut e, FillFamily::Stars, &mut rng(0)).unwrap();
        assert_eq!(star.vertex_count(), 10);
        for seed in 0..20 {
            let poly = instantiate_fill(&mut e, FillFamily::Polygons, &mut rng(seed)).unwrap();
            assert!((3..=6).contains(&poly.vertex_count()));
            assert!(e.rotation >= 0.0 && e.rotation < TAU);
        }

        let mut e2 = e.clone();
        let a = instantiate_fill(&mut e, FillFamily::Polygons, &mut rng(77)).unwrap();
        let b = instantiate_fill(&mut e2, FillFamily::Polygons, &mut rng(77)).unwrap();
        assert_eq!(a, b);
        assert_eq!(fill_outline(&e).unwrap(), a);
    }

    #[test]
    fn family_names_round_trip() {
        for f in FillFamily::ALL {
            assert_eq!(f.name().parse::<FillFamily>().unwrap(), f);
        }
        assert!("hexes".parse::<FillFamily>().is_err());
    }
}
