//! sRGB ↔ CIE L*a*b* conversion, CIE76 ΔE, the bundled plate palettes and
//! constrained palette sampling.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::{PackedElement, Side};

/// Bundled registry of plate-derived palettes. These are approximations of
/// classic plates; replace the file to use measured values.
pub const BUILTIN_REGISTRY: &str = include_str!("../data/ishihara_palettes_v1.json");

const MAX_SAMPLING_ATTEMPTS: usize = 10_000;
/// Sampled colors come from a box of this half-width (per sRGB channel)
/// around a uniformly drawn anchor.
const SAMPLING_HALF_WIDTH: i32 = 48;

// Linear sRGB → XYZ (D65), IEC 61966-2-1.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124, 0.3576, 0.1805],
    [0.2126, 0.7152, 0.0722],
    [0.0193, 0.1192, 0.9505],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u8; 3]", into = "[u8; 3]")]
pub struct ColorSrgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl ColorSrgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        ColorSrgb { r, g, b }
    }

    pub fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }
}

impl From<[u8; 3]> for ColorSrgb {
    fn from([r, g, b]: [u8; 3]) -> Self {
        ColorSrgb { r, g, b }
    }
}

impl From<ColorSrgb> for [u8; 3] {
    fn from(c: ColorSrgb) -> Self {
        c.channels()
    }
}

impl fmt::Display for ColorSrgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorLab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl ColorLab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        ColorLab { l, a, b }
    }
}

fn white() -> [f64; 3] {
    RGB_TO_XYZ.map(|row| row.iter().sum())
}

fn xyz_to_rgb() -> &'static [[f64; 3]; 3] {
    static INV: OnceLock<[[f64; 3]; 3]> = OnceLock::new();
    INV.get_or_init(|| {
        let m = RGB_TO_XYZ;
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        let mut inv = [[0.0; 3]; 3];
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                // cofactor of m[j][i]
                let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
            }
        }
        inv
    })
}

pub fn srgb_to_linear(v: u8) -> f64 {
    let c = v as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_encoded(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

const DELTA: f64 = 6.0 / 29.0;

fn lab_f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

pub fn srgb_to_lab(c: ColorSrgb) -> ColorLab {
    let lin = c.channels().map(srgb_to_linear);
    let wp = white();
    let xyz: [f64; 3] =
        std::array::from_fn(|i| (0..3).map(|k| RGB_TO_XYZ[i][k] * lin[k]).sum::<f64>() / wp[i]);
    let [fx, fy, fz] = xyz.map(lab_f);
    ColorLab {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Inverse of [`srgb_to_lab`]. Channels more than half a code value outside
/// `0..=255` are a gamut error; nothing is clamped beyond that rounding.
pub fn lab_to_srgb(c: ColorLab) -> Result<ColorSrgb> {
    let gamut = Error::Gamut {
        l: c.l,
        a: c.a,
        b: c.b,
    };
    if !(c.l.is_finite() && c.a.is_finite() && c.b.is_finite()) {
        return Err(gamut);
    }
    let fy = (c.l + 16.0) / 116.0;
    let fx = fy + c.a / 500.0;
    let fz = fy - c.b / 200.0;
    let wp = white();
    let xyz = [lab_f_inv(fx) * wp[0], lab_f_inv(fy) * wp[1], lab_f_inv(fz) * wp[2]];
    let inv = xyz_to_rgb();
    let mut out = [0u8; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let lin: f64 = (0..3).map(|k| inv[i][k] * xyz[k]).sum();
        let v = linear_to_encoded(lin) * 255.0;
        if !(-0.5..255.5).contains(&v) {
            return Err(gamut);
        }
        *o = v.round() as u8;
    }
    Ok(out.into())
}

/// CIE76 color difference.
pub fn delta_e(c1: ColorLab, c2: ColorLab) -> f64 {
    ((c1.l - c2.l).powi(2) + (c1.a - c2.a).powi(2) + (c1.b - c2.b).powi(2)).sqrt()
}

pub fn delta_e_srgb(c1: ColorSrgb, c2: ColorSrgb) -> f64 {
    delta_e(srgb_to_lab(c1), srgb_to_lab(c2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaletteSource {
    Ishihara,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaletteCategory {
    /// Two colors per side.
    Dual,
    /// Three to four colors per side.
    Tri,
    /// More than four colors per side.
    Multi,
}

impl PaletteCategory {
    fn admits(self, n: usize) -> bool {
        match self {
            PaletteCategory::Dual => n == 2,
            PaletteCategory::Tri => (3..=4).contains(&n),
            PaletteCategory::Multi => n > 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteConfig {
    pub id: String,
    pub source: PaletteSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<PaletteCategory>,
    pub fg: Vec<ColorSrgb>,
    pub bg: Vec<ColorSrgb>,
    /// Sampled palettes: the intra-side threshold they were accepted under.
    /// Registry palettes: the measured minimum.
    pub min_intra_de: f64,
    /// Sampled palettes: the accepted band for the mean cross-side ΔE.
    /// Registry palettes: measured (min, max) over cross-side pairs.
    pub fg_bg_de_range: (f64, f64),
}

impl PaletteConfig {
    pub fn colors(&self, side: Side) -> &[ColorSrgb] {
        match side {
            Side::Figure => &self.fg,
            Side::Ground => &self.bg,
        }
    }

    /// Mean background color in linear RGB, re-encoded and rounded.
    pub fn base_color(&self) -> ColorSrgb {
        let n = self.bg.len() as f64;
        let mean: [f64; 3] = std::array::from_fn(|i| {
            self.bg.iter().map(|c| srgb_to_linear(c.channels()[i])).sum::<f64>() / n
        });
        mean.map(|c| (linear_to_encoded(c) * 255.0).round().clamp(0.0, 255.0) as u8)
            .into()
    }

    pub fn stats(&self) -> PaletteStats {
        PaletteStats::measure(&self.fg, &self.bg)
    }
}

/// ΔE statistics of a palette.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaletteStats {
    pub min_intra: f64,
    pub min_cross: f64,
    pub max_cross: f64,
    pub mean_cross: f64,
}

impl PaletteStats {
    pub fn measure(fg: &[ColorSrgb], bg: &[ColorSrgb]) -> Self {
        let fg_lab: Vec<ColorLab> = fg.iter().copied().map(srgb_to_lab).collect();
        let bg_lab: Vec<ColorLab> = bg.iter().copied().map(srgb_to_lab).collect();
        let mut min_intra = f64::INFINITY;
        for side in [&fg_lab, &bg_lab] {
            for (i, a) in side.iter().enumerate() {
                for b in &side[i + 1..] {
                    min_intra = min_intra.min(delta_e(*a, *b));
                }
            }
        }
        let cross: Vec<f64> = fg_lab
            .iter()
            .flat_map(|a| bg_lab.iter().map(move |b| delta_e(*a, *b)))
            .collect();
        PaletteStats {
            min_intra,
            min_cross: cross.iter().copied().fold(f64::INFINITY, f64::min),
            max_cross: cross.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_cross: cross.iter().sum::<f64>() / cross.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaletteConstraints {
    pub min_intra_de: f64,
    pub fg_bg_lo: f64,
    pub fg_bg_hi: f64,
}

impl Default for PaletteConstraints {
    fn default() -> Self {
        PaletteConstraints {
            min_intra_de: 12.0,
            fg_bg_lo: 18.0,
            fg_bg_hi: 45.0,
        }
    }
}

impl PaletteConstraints {
    /// Acceptance predicates: every intra-side pair at least `min_intra_de`
    /// apart, mean cross-side ΔE inside `[lo, hi]`, and every cross-side
    /// pair at least `lo / 2` apart.
    pub fn accepts(&self, stats: &PaletteStats) -> bool {
        stats.min_intra >= self.min_intra_de
            && stats.mean_cross >= self.fg_bg_lo
            && stats.mean_cross <= self.fg_bg_hi
            && stats.min_cross >= self.fg_bg_lo / 2.0
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryEntry {
    id: String,
    source: PaletteSource,
    category: PaletteCategory,
    fg: Vec<ColorSrgb>,
    bg: Vec<ColorSrgb>,
}

/// Parses a palette registry: a JSON array of
/// `{id, source, category, fg: [[r,g,b]...], bg: [[r,g,b]...]}`.
pub fn parse_registry(json: &str) -> Result<Vec<PaletteConfig>> {
    let entries: Vec<RegistryEntry> =
        serde_json::from_str(json).map_err(|e| Error::Config(format!("palette registry: {e}")))?;
    let mut out: Vec<PaletteConfig> = Vec::with_capacity(entries.len());
    for e in entries {
        if out.iter().any(|p| p.id == e.id) {
            return Err(Error::Config(format!("duplicate palette id {:?}", e.id)));
        }
        for (side, colors) in [("fg", &e.fg), ("bg", &e.bg)] {
            if !e.category.admits(colors.len()) {
                return Err(Error::Config(format!(
                    "palette {:?}: {} {side} colors do not fit category {:?}",
                    e.id,
                    colors.len(),
                    e.category
                )));
            }
        }
        let stats = PaletteStats::measure(&e.fg, &e.bg);
        out.push(PaletteConfig {
            id: e.id,
            source: e.source,
            category: Some(e.category),
            fg: e.fg,
            bg: e.bg,
            min_intra_de: stats.min_intra,
            fg_bg_de_range: (stats.min_cross, stats.max_cross),
        });
    }
    Ok(out)
}

/// The nine bundled plate palettes.
pub fn builtin_palettes() -> Vec<PaletteConfig> {
    static REGISTRY: OnceLock<Vec<PaletteConfig>> = OnceLock::new();
    REGISTRY
        .get_or_init(|| parse_registry(BUILTIN_REGISTRY).expect("bundled palette registry is valid"))
        .clone()
}

/// One of the sixteen enumerable sampled configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamplerSpec {
    pub n_fg: usize,
    pub n_bg: usize,
}

impl SamplerSpec {
    pub fn id(&self) -> String {
        format!("sampled-f{}b{}", self.n_fg, self.n_bg)
    }

    pub fn parse(id: &str) -> Option<SamplerSpec> {
        let rest = id.strip_prefix("sampled-f")?;
        let (f, b) = rest.split_once('b')?;
        let spec = SamplerSpec {
            n_fg: f.parse().ok()?,
            n_bg: b.parse().ok()?,
        };
        (spec.id() == id && (2..=5).contains(&spec.n_fg) && (2..=5).contains(&spec.n_bg))
            .then_some(spec)
    }
}

/// (n_fg, n_bg) ∈ {2..5}², in row-major order.
pub fn sampled_configurations() -> Vec<SamplerSpec> {
    (2..=5)
        .flat_map(|n_fg| (2..=5).map(move |n_bg| SamplerSpec { n_fg, n_bg }))
        .collect()
}

/// Rejection-samples a palette satisfying `constraints`.
///
/// Each attempt draws an anchor uniformly in sRGB, then every color
/// uniformly in the sRGB box of half-width 48 around it.
pub fn sample_palette<R: Rng + ?Sized>(
    rng: &mut R,
    n_fg: usize,
    n_bg: usize,
    constraints: &PaletteConstraints,
) -> Result<PaletteConfig> {
    let spec = SamplerSpec { n_fg, n_bg };
    if !(2..=5).contains(&n_fg) || !(2..=5).contains(&n_bg) {
        return Err(Error::Parameter(format!(
            "sampled palettes need 2..=5 colors per side, got {n_fg} and {n_bg}"
        )));
    }
    if !(constraints.fg_bg_lo < constraints.fg_bg_hi) {
        return Err(Error::Parameter(format!(
            "empty cross-side band [{}, {}]",
            constraints.fg_bg_lo, constraints.fg_bg_hi
        )));
    }
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let anchor: [i32; 3] = std::array::from_fn(|_| rng.gen_range(0..=255));
        let mut draw = || -> ColorSrgb {
            anchor
                .map(|v| {
                    let lo = (v - SAMPLING_HALF_WIDTH).max(0);
                    let hi = (v + SAMPLING_HALF_WIDTH).min(255);
                    rng.gen_range(lo..=hi) as u8
                })
                .into()
        };
        let fg: Vec<ColorSrgb> = (0..n_fg).map(|_| draw()).collect();
        let bg: Vec<ColorSrgb> = (0..n_bg).map(|_| draw()).collect();
        if constraints.accepts(&PaletteStats::measure(&fg, &bg)) {
            return Ok(PaletteConfig {
                id: spec.id(),
                source: PaletteSource::Sampled,
                category: None,
                fg,
                bg,
                min_intra_de: constraints.min_intra_de,
                fg_bg_de_range: (constraints.fg_bg_lo, constraints.fg_bg_hi),
            });
        }
    }
    Err(Error::Sampling {
        attempts: MAX_SAMPLING_ATTEMPTS,
    })
}

/// Re-checks a palette against its own constraint record. Returns the list
/// of failed predicates (empty when the palette is consistent).
pub fn audit_palette(p: &PaletteConfig) -> Vec<String> {
    let mut problems = Vec::new();
    let stats = p.stats();
    match p.source {
        PaletteSource::Sampled => {
            if !(2..=5).contains(&p.fg.len()) || !(2..=5).contains(&p.bg.len()) {
                problems.push(format!("color counts {}/{} outside 2..=5", p.fg.len(), p.bg.len()));
            }
            let c = PaletteConstraints {
                min_intra_de: p.min_intra_de,
                fg_bg_lo: p.fg_bg_de_range.0,
                fg_bg_hi: p.fg_bg_de_range.1,
            };
            if !c.accepts(&stats) {
                problems.push(format!("ΔE statistics {stats:?} violate constraints {c:?}"));
            }
        }
        PaletteSource::Ishihara => {
            if let Some(cat) = p.category {
                if !cat.admits(p.fg.len()) || !cat.admits(p.bg.len()) {
                    problems.push(format!("color counts do not fit category {cat:?}"));
                }
            }
            if stats.min_intra < p.min_intra_de - 1e-9 {
                problems.push(format!(
                    "intra-side ΔE {} below recorded minimum {}",
                    stats.min_intra, p.min_intra_de
                ));
            }
        }
    }
    problems
}

/// Draws a color index for each element from its side of the palette,
/// in element order.
pub fn assign_colors<R: Rng + ?Sized>(
    elements: &mut [PackedElement],
    palette: &PaletteConfig,
    rng: &mut R,
) -> Result<()> {
    if palette.fg.is_empty() || palette.bg.is_empty() {
        return Err(Error::Input(format!("palette {:?} has an empty side", palette.id)));
    }
    for e in elements {
        e.color_index = rng.gen_range(0..palette.colors(e.side).len());
    }
    Ok(())
}
