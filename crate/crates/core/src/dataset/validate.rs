//! Re-audit of a generated directory.

use std::path::Path;

use serde::Serialize;

use super::{read_manifest, SampleMeta, SampleRecord, GENERATOR_VERSION, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::packing::classify;
use crate::palette::audit_palette;
use crate::raster::apply_occluders;
use crate::render::{mask_image, read_png};
use crate::scene::{derive_answer, question_for, scene_mask_unoccluded, ContentSource};
use crate::templates::QuestionTemplates;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub id: String,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub records: usize,
    /// Paths (relative to the directory) that could not be read.
    pub missing: Vec<String>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.violations.is_empty()
    }
}

/// Checks every record of `dir/manifest.jsonl`:
///
/// - the answer re-derived from the stored scene equals the record's answer
/// - question text and template hash match the built-in templates
/// - the palette passes its audit and every element's color comes from its
///   side of the palette
/// - side labels recomputed from the scene mask equal the stored labels
/// - the camouflage image shows exactly the element colors plus the base
/// - the silhouette image equals the rendered unoccluded mask
pub fn validate(dir: &Path, content: &ContentSource) -> Result<ValidationReport> {
    let records = read_manifest(&dir.join(MANIFEST_FILE))?;
    let mut report = ValidationReport {
        records: records.len(),
        ..Default::default()
    };
    for r in &records {
        check_record(dir, r, content, &mut report);
    }
    Ok(report)
}

fn check_record(dir: &Path, r: &SampleRecord, content: &ContentSource, report: &mut ValidationReport) {
    let mut flag = |check: &'static str, detail: String| {
        report.violations.push(Violation {
            id: r.id.clone(),
            check,
            detail,
        })
    };
    let templates = QuestionTemplates::builtin();
    if r.template_hash != templates.hash() {
        flag("template_hash", format!("{} != {}", r.template_hash, templates.hash()));
    }
    if r.generator_version != GENERATOR_VERSION {
        flag("generator_version", format!("{} != {GENERATOR_VERSION}", r.generator_version));
    }

    let meta: Option<SampleMeta> = match std::fs::read(dir.join(&r.meta_path)) {
        Ok(bytes) => match serde_json::from_slice(&bytes) {
            Ok(m) => Some(m),
            Err(e) => {
                flag("meta", format!("unreadable: {e}"));
                None
            }
        },
        Err(_) => {
            report.missing.push(r.meta_path.clone());
            None
        }
    };
    let image = read_or_missing(dir, &r.image_path, &mut report.missing, &mut flag);
    let silhouette = read_or_missing(dir, &r.silhouette_path, &mut report.missing, &mut flag);
    let Some(meta) = meta else { return };
    let scene = &meta.scene;

    match derive_answer(scene) {
        Ok(a) if a == r.answer => {}
        Ok(a) => flag("answer", format!("stored {:?}, derived {a:?}", r.answer)),
        Err(e) => flag("answer", format!("cannot derive: {e}")),
    }
    if scene.task != r.task || scene.answer_format != r.answer_format {
        flag("record", "task or answer format differs from the scene".into());
    }
    if r.question != question_for(scene, templates) {
        flag("question", "question text does not match its template".into());
    }
    if meta.palette.id != r.palette_id && !r.palette_id.starts_with("sampled-") {
        flag("palette", format!("record names {}, meta holds {}", r.palette_id, meta.palette.id));
    }
    for problem in audit_palette(&meta.palette) {
        flag("palette", problem);
    }
    let expected_colors = match meta.plate.expected_colors(&meta.palette) {
        Ok(c) => Some(c),
        Err(e) => {
            flag("color_discipline", e.to_string());
            None
        }
    };

    let clean = match scene_mask_unoccluded(scene, content) {
        Ok(m) => m,
        Err(e) => {
            flag("scene", format!("cannot rebuild mask: {e}"));
            return;
        }
    };
    let (mask, fraction) = apply_occluders(&clean, &scene.occluders);
    if scene.occluded_fraction.is_some_and(|f| f != fraction) || r.occlusion_fraction != scene.occluded_fraction {
        flag("occlusion", format!("stored {:?}, recomputed {fraction}", r.occlusion_fraction));
    }
    let mut relabeled = meta.plate.elements.clone();
    if let Err(e) = classify(&mut relabeled, &mask, meta.plate.theta) {
        flag("sides", e.to_string());
    } else {
        let wrong = relabeled
            .iter()
            .zip(&meta.plate.elements)
            .filter(|(a, b)| a.side != b.side)
            .count();
        if wrong > 0 {
            flag("sides", format!("{wrong} elements carry the wrong side label"));
        }
    }

    if let (Some(img), Some(expected)) = (image, expected_colors) {
        if img.width() != scene.canvas || img.height() != scene.canvas {
            flag("image", format!("size {}x{}", img.width(), img.height()));
        } else if img.color_support() != expected {
            flag("color_set", "image colors differ from palette element colors plus base".into());
        }
    }
    if let Some(sil) = silhouette {
        match mask_image(&clean) {
            Ok(want) if want == sil => {}
            _ => flag("silhouette", "silhouette image differs from the scene mask".into()),
        }
    }
}

fn read_or_missing(
    dir: &Path,
    rel: &str,
    missing: &mut Vec<String>,
    flag: &mut impl FnMut(&'static str, String),
) -> Option<crate::render::Image> {
    match read_png(&dir.join(rel)) {
        Ok(img) => Some(img),
        Err(Error::Io { .. }) => {
            missing.push(rel.to_string());
            None
        }
        Err(e) => {
            flag("image", e.to_string());
            None
        }
    }
}
