//! Foreground masks: subsampled odd–even fill of outlines, bitmap import and
//! circular occluders.
//!
//! Every pixel is probed at four subsample points, offsets 0.25 and 0.75 in
//! each axis (a 0.5 px lattice). A pixel is foreground when at least two of
//! its subsamples fall inside.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Outline, Point, Rect, Similarity};

pub const CANVAS_SIZE: u32 = 512;
pub const DEFAULT_IMPORT_THRESHOLD: u8 = 128;
const SUBSAMPLE_OFFSETS: [f64; 2] = [0.25, 0.75];
const MAJORITY: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(BitMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Result<Self> {
        let mut m = BitMask::new(width, height)?;
        m.bits.fill(value);
        Ok(m)
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Result<Self> {
        let mut m = BitMask::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                m.bits[(y * width + x) as usize] = f(x, y);
            }
        }
        Ok(m)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[(y * self.width + x) as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union_with(&mut self, other: &BitMask) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    /// Resamples through `sim` with nearest-neighbour lookup: output pixel
    /// centers are mapped back through the inverse transform.
    pub fn transformed(&self, sim: &Similarity, width: u32, height: u32) -> Result<BitMask> {
        let (s, c) = (-sim.rotation).sin_cos();
        let inv = |p: Point| {
            let dx = (p.x - sim.translate.x - sim.pivot.x) / sim.scale;
            let dy = (p.y - sim.translate.y - sim.pivot.y) / sim.scale;
            Point::new(sim.pivot.x + dx * c - dy * s, sim.pivot.y + dx * s + dy * c)
        };
        BitMask::from_fn(width, height, |x, y| {
            let q = inv(Point::new(x as f64 + 0.5, y as f64 + 0.5));
            let (sx, sy) = (q.x.floor(), q.y.floor());
            sx >= 0.0
                && sy >= 0.0
                && sx < self.width as f64
                && sy < self.height as f64
                && self.get(sx as u32, sy as u32)
        })
    }
}

/// Pixel-aligned window `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy)]
struct Window {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl Window {
    fn clip(bbox: Rect, width: u32, height: u32) -> Option<Window> {
        let x0 = bbox.min_x.floor().max(0.0);
        let y0 = bbox.min_y.floor().max(0.0);
        let x1 = (bbox.max_x.ceil() + 1.0).min(width as f64);
        let y1 = (bbox.max_y.ceil() + 1.0).min(height as f64);
        (x0 < x1 && y0 < y1).then(|| Window {
            x0: x0 as u32,
            y0: y0 as u32,
            x1: x1 as u32,
            y1: y1 as u32,
        })
    }

    fn w(&self) -> usize {
        (self.x1 - self.x0) as usize
    }

    fn h(&self) -> usize {
        (self.y1 - self.y0) as usize
    }
}

/// ORs the subsample bits of `outline` into `acc`, which covers `area`.
/// Bit `2·sy + sx` of a cell is the subsample at offsets (sx, sy).
/// Only pixels in `win` (a sub-window of `area`) are evaluated.
fn accumulate(outline: &Outline, acc: &mut [u8], area: Window, win: Window, xs: &mut Vec<f64>) {
    for py in win.y0..win.y1 {
        for (sy, oy) in SUBSAMPLE_OFFSETS.iter().enumerate() {
            let y = py as f64 + oy;
            xs.clear();
            outline.crossings_at(y, xs);
            if xs.is_empty() {
                continue;
            }
            xs.sort_by(f64::total_cmp);
            let row = (py - area.y0) as usize * area.w();
            for px in win.x0..win.x1 {
                let cell = row + (px - area.x0) as usize;
                for (sx, ox) in SUBSAMPLE_OFFSETS.iter().enumerate() {
                    let x = px as f64 + ox;
                    // crossings strictly right of the sample
                    let right = xs.len() - xs.partition_point(|&c| c <= x);
                    if right % 2 == 1 {
                        acc[cell] |= 1 << (2 * sy + sx);
                    }
                }
            }
        }
    }
}

/// Scan-fills the union of `outlines` into a `width × height` mask.
/// Pixels outside every outline's bounding box are never evaluated.
pub fn rasterize(outlines: &[Outline], width: u32, height: u32) -> Result<BitMask> {
    let mut mask = BitMask::new(width, height)?;
    let area = Window {
        x0: 0,
        y0: 0,
        x1: width,
        y1: height,
    };
    let mut acc = vec![0u8; mask.bits.len()];
    let mut xs = Vec::new();
    for o in outlines {
        if let Some(win) = Window::clip(o.bbox(), width, height) {
            accumulate(o, &mut acc, area, win, &mut xs);
        }
    }
    for (bit, cell) in mask.bits.iter_mut().zip(&acc) {
        *bit = cell.count_ones() >= MAJORITY;
    }
    Ok(mask)
}

/// Calls `f(x, y)` for every pixel the outline covers under the subsample
/// majority rule. Only the outline's bounding box is touched.
pub fn for_each_covered_pixel(outline: &Outline, width: u32, height: u32, mut f: impl FnMut(u32, u32)) {
    let Some(win) = Window::clip(outline.bbox(), width, height) else {
        return;
    };
    let mut acc = vec![0u8; win.w() * win.h()];
    accumulate(outline, &mut acc, win, win, &mut Vec::new());
    for (i, cell) in acc.iter().enumerate() {
        if cell.count_ones() >= MAJORITY {
            f(win.x0 + (i % win.w()) as u32, win.y0 + (i / win.w()) as u32);
        }
    }
}

/// Disk counterpart of [`for_each_covered_pixel`]: a subsample is inside
/// when its squared distance to `center` is at most `radius²`.
pub fn for_each_disk_pixel(center: Point, radius: f64, width: u32, height: u32, mut f: impl FnMut(u32, u32)) {
    let bbox = Rect {
        min_x: center.x - radius,
        min_y: center.y - radius,
        max_x: center.x + radius,
        max_y: center.y + radius,
    };
    let Some(win) = Window::clip(bbox, width, height) else {
        return;
    };
    let r2 = radius * radius;
    for py in win.y0..win.y1 {
        for px in win.x0..win.x1 {
            let mut hits = 0;
            for oy in SUBSAMPLE_OFFSETS {
                for ox in SUBSAMPLE_OFFSETS {
                    let dx = px as f64 + ox - center.x;
                    let dy = py as f64 + oy - center.y;
                    if dx * dx + dy * dy <= r2 {
                        hits += 1;
                    }
                }
            }
            if hits >= MAJORITY {
                f(px, py);
            }
        }
    }
}

/// 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize {
            return Err(Error::Input(format!(
                "grayscale buffer of {} bytes does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }
}

/// Dark-on-light import: a pixel is foreground iff its luminance is below
/// `threshold`. The image is resampled nearest-neighbour to the target size.
pub fn import_mask(image: &GrayImage, threshold: u8, width: u32, height: u32) -> Result<BitMask> {
    BitMask::from_fn(width, height, |x, y| {
        let sx = ((2 * x as u64 + 1) * image.width as u64 / (2 * width as u64)) as u32;
        let sy = ((2 * y as u64 + 1) * image.height as u64 / (2 * height as u64)) as u32;
        image.get(sx, sy) < threshold
    })
}

/// Reads an 8-bit PNG (any color type, flattened to luminance over white)
/// or a binary PBM (P4).
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Image {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.starts_with(b"P4") {
        parse_pbm(&bytes).map_err(bad)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png_gray(&bytes).map_err(bad)
    } else {
        Err(bad("neither PNG nor binary PBM".into()))
    }
}

fn decode_png_gray(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("image too large")?];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let channels = info.color_type.samples();
    let data = &buf[..info.buffer_size()];
    let pixels = data
        .chunks_exact(channels)
        .map(|px| {
            let (lum, alpha) = match channels {
                1 => (px[0] as f64, 255.0),
                2 => (px[0] as f64, px[1] as f64),
                3 => (luma(px), 255.0),
                _ => (luma(px), px[3] as f64),
            };
            let a = alpha / 255.0;
            (lum * a + 255.0 * (1.0 - a)).round() as u8
        })
        .collect();
    GrayImage::new(info.width, info.height, pixels).map_err(|e| e.to_string())
}

fn luma(px: &[u8]) -> f64 {
    0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64
}

fn parse_pbm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 2;
    let mut fields = [0u32; 2];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed PBM header")?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("malformed PBM header".into());
    }
    pos += 1;
    let [width, height] = fields;
    let stride = width.div_ceil(8) as usize;
    let data = &bytes[pos..];
    if data.len() < stride * height as usize {
        return Err("truncated PBM raster".into());
    }
    let mut pixels = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height as usize {
        for x in 0..width as usize {
            let byte = data[y * stride + x / 8];
            let black = byte & (0x80 >> (x % 8)) != 0;
            pixels.push(if black { 0 } else { 255 });
        }
    }
    GrayImage::new(width, height, pixels).map_err(|e| e.to_string())
}

/// Occluding disk used by the occlusion task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub center: Point,
    pub radius: f64,
}

impl Occluder {
    fn covers(&self, x: u32, y: u32) -> bool {
        let dx = x as f64 + 0.5 - self.center.x;
        let dy = y as f64 + 0.5 - self.center.y;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Clears foreground pixels whose centers fall inside any occluder.
/// Returns the new mask and the share of foreground that was removed.
pub fn apply_occluders(mask: &BitMask, occluders: &[Occluder]) -> (BitMask, f64) {
    let mut out = mask.clone();
    let mut removed = 0usize;
    let original = mask.count();
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) && occluders.iter().any(|o| o.covers(x, y)) {
                out.set(x, y, false);
                removed += 1;
            }
        }
    }
    let fraction = if original == 0 {
        0.0
    } else {
        removed as f64 / original as f64
    };
    (out, fraction)
}

/// Foreground pixel share in `[0, 1]`.
pub fn coverage(mask: &BitMask) -> f64 {
    mask.count() as f64 / mask.bits.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionParams {
    pub min_count: u32,
    pub max_count: u32,
    /// Radius range as a fraction of the canvas side.
    pub min_radius_frac: f64,
    pub max_radius_frac: f64,
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub retries: u32,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        OcclusionParams {
            min_count: 2,
            max_count: 5,
            min_radius_frac: 0.06,
            max_radius_frac: 0.14,
            min_fraction: 0.15,
            max_fraction: 0.45,
            retries: 50,
        }
    }
}

const OCCLUSION_ROUNDS: u32 = 10;

/// Draws occluders centred on foreground pixels until the occluded fraction
/// lands in the configured band. After each block of `retries` failures the
/// radius range is shrunk (or grown, when every miss was too light).
pub fn generate_occluders<R: Rng + ?Sized>(
    mask: &BitMask,
    params: &OcclusionParams,
    rng: &mut R,
) -> Result<(Vec<Occluder>, BitMask, f64)> {
    let fg: Vec<(u32, u32)> = (0..mask.height)
        .flat_map(|y| (0..mask.width).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.get(x, y))
        .collect();
    if fg.is_empty() {
        return Err(Error::Generation("cannot occlude an empty mask".into()));
    }
    let side = mask.width.min(mask.height) as f64;
    let mut scale = 1.0;
    for _ in 0..OCCLUSION_ROUNDS {
        let (mut over, mut under) = (0, 0);
        for _ in 0..params.retries {
            let n = rng.gen_range(params.min_count..=params.max_count);
            let occluders: Vec<Occluder> = (0..n)
                .map(|_| {
                    let (x, y) = fg[rng.gen_range(0..fg.len())];
                    let frac = rng.gen_range(params.min_radius_frac..=params.max_radius_frac);
                    Occluder {
                        center: Point::new(x as f64 + 0.5, y as f64 + 0.5),
                        radius: frac * side * scale,
                    }
                })
                .collect();
            let (occluded, fraction) = apply_occluders(mask, &occluders);
            if fraction < params.min_fraction {
                under += 1;
            } else if fraction > params.max_fraction {
                over += 1;
            } else {
                return Ok((occluders, occluded, fraction));
            }
        }
        scale *= if over >= under { 0.8 } else { 1.25 };
    }
    Err(Error::Generation(format!(
        "no occluder set reached occluded fraction in [{}, {}]",
        params.min_fraction, params.max_fraction
    )))
}
