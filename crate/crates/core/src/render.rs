//! Camouflage plates, clean silhouettes and their PNG encoding.

use std::collections::BTreeSet;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::{
    classify, disk_coverage, instantiate_fill, pack, FillFamily, PackedElement,
    PackingParams, Side, DEFAULT_THETA,
};
use crate::palette::{assign_colors, ColorSrgb, PaletteConfig};
use crate::raster::{coverage, for_each_covered_pixel, BitMask};
use crate::scene::{scene_mask, scene_mask_unoccluded, ContentSource, SceneSpec};

const BLACK: [u8; 3] = [0, 0, 0];
const WHITE: [u8; 3] = [255, 255, 255];

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Image {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let n = width as usize * height as usize;
        Ok(Image {
            width,
            height,
            pixels: rgb.repeat(n),
        })
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != 3 * width as usize * height as usize {
            return Err(Error::Input(format!(
                "{} bytes do not form a {width}x{height} RGB image",
                pixels.len()
            )));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Distinct pixel values.
    pub fn color_support(&self) -> BTreeSet<[u8; 3]> {
        self.pixels
            .chunks_exact(3)
            .map(|p| [p[0], p[1], p[2]])
            .collect()
    }
}

/// What was drawn onto a plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateMeta {
    pub base_color: ColorSrgb,
    pub theta: f64,
    pub mask_coverage: f64,
    pub disk_coverage: f64,
    pub figure_elements: usize,
    pub ground_elements: usize,
    pub elements: Vec<PackedElement>,
}

impl PlateMeta {
    /// Colors a correct plate shows: the colors of its elements plus the base.
    pub fn expected_colors(&self, palette: &PaletteConfig) -> Result<BTreeSet<[u8; 3]>> {
        let mut set = BTreeSet::from([self.base_color.channels()]);
        for e in &self.elements {
            let c = palette.colors(e.side).get(e.color_index).ok_or_else(|| {
                Error::Input(format!(
                    "color index {} out of range for {:?} side of {}",
                    e.color_index, e.side, palette.id
                ))
            })?;
            set.insert(c.channels());
        }
        Ok(set)
    }
}

/// Packs, classifies, fills and colors a plate over `mask`. Elements are
/// drawn with the same subsample scan-fill as the mask; uncovered pixels keep
/// the palette's base color.
pub fn paint_plate<R: Rng + ?Sized>(
    mask: &BitMask,
    palette: &PaletteConfig,
    packing: &PackingParams,
    family: FillFamily,
    rng: &mut R,
) -> Result<(Image, PlateMeta)> {
    let (w, h) = (mask.width(), mask.height());
    let mut elements = pack(packing, w, h, rng)?;
    classify(&mut elements, mask, DEFAULT_THETA)?;
    let outlines = elements
        .iter_mut()
        .map(|e| instantiate_fill(e, family, rng))
        .collect::<Result<Vec<_>>>()?;
    assign_colors(&mut elements, palette, rng)?;
    let base = palette.base_color();
    let mut img = Image::filled(w, h, base.channels())?;
    for (e, o) in elements.iter().zip(&outlines) {
        let rgb = palette.colors(e.side)[e.color_index].channels();
        for_each_covered_pixel(o, w, h, |x, y| img.set(x, y, rgb));
    }
    let figure = elements.iter().filter(|e| e.side == Side::Figure).count();
    let meta = PlateMeta {
        base_color: base,
        theta: DEFAULT_THETA,
        mask_coverage: coverage(mask),
        disk_coverage: disk_coverage(&elements, w, h),
        figure_elements: figure,
        ground_elements: elements.len() - figure,
        elements,
    };
    Ok((img, meta))
}

/// Camouflage rendering of `scene`: its (occluded) mask painted as a plate.
pub fn render_camouflage<R: Rng + ?Sized>(
    scene: &SceneSpec,
    content: &ContentSource,
    palette: &PaletteConfig,
    packing: &PackingParams,
    family: FillFamily,
    rng: &mut R,
) -> Result<(Image, PlateMeta)> {
    let mask = scene_mask(scene, content)?;
    let (img, meta) = paint_plate(&mask, palette, packing, family, rng)?;
    if meta.figure_elements == 0 {
        return Err(Error::DegenerateScene(format!(
            "{} scene produced no figure elements",
            scene.task
        )));
    }
    Ok((img, meta))
}

/// Black-on-white rendering of the unoccluded scene mask.
pub fn render_silhouette(scene: &SceneSpec, content: &ContentSource) -> Result<Image> {
    mask_image(&scene_mask_unoccluded(scene, content)?)
}

pub fn mask_image(mask: &BitMask) -> Result<Image> {
    let mut img = Image::filled(mask.width(), mask.height(), WHITE)?;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                img.set(x, y, BLACK);
            }
        }
    }
    Ok(img)
}

/// 8-bit RGB PNG with fixed filter and compression, no ancillary chunks.
pub fn encode_png(img: &Image) -> Vec<u8> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, img.width, img.height);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_compression(png::Compression::Balanced);
    enc.set_filter(png::Filter::Paeth);
    let mut writer = enc.write_header().expect("writing to a Vec cannot fail");
    writer
        .write_image_data(&img.pixels)
        .expect("buffer length matches the header");
    writer.finish().expect("writing to a Vec cannot fail");
    out
}

/// Decodes an 8-bit RGB PNG.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    decode_rgb(bytes).map_err(|reason| Error::Image {
        path: PathBuf::from("<memory>"),
        reason,
    })
}

pub fn read_png(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rgb(&bytes).map_err(|reason| Error::Image {
        path: path.to_path_buf(),
        reason,
    })
}

fn decode_rgb(bytes: &[u8]) -> std::result::Result<Image, String> {
    let mut reader = png::Decoder::new(Cursor::new(bytes))
        .read_info()
        .map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("image too large")?];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(format!(
            "expected 8-bit RGB, found {:?} at {:?}",
            info.color_type, info.bit_depth
        ));
    }
    buf.truncate(info.buffer_size());
    Image::from_raw(info.width, info.height, buf).map_err(|e| e.to_string())
}
