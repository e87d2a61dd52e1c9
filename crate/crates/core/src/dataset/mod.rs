//! Batch generation, manifests, validation, replay and scoring.
//!
//! Output layout, all paths in records relative to the output directory:
//!
//! ```text
//! plan.json           resolved plan (seed included)
//! manifest.jsonl      one SampleRecord per line, cell order
//! skipped.jsonl       cells that failed every attempt
//! images/{id}.png     camouflage plate
//! silhouettes/{id}.png
//! meta/{id}.json      scene, palette, packing and drawn elements
//! ```

mod score;
mod validate;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::{FillFamily, PackingParams};
use crate::palette::{builtin_palettes, sample_palette, PaletteConfig, PaletteConstraints, SamplerSpec};
use crate::render::{encode_png, render_camouflage, render_silhouette, PlateMeta};
use crate::scene::{gen_scene, AnswerFormat, ContentSource, Item, SceneSpec, TaskConfig, TaskKind};
use crate::templates::QuestionTemplates;

pub use score::{normalize, read_predictions, score, answers_match, Prediction, ScoreRow, ScoreTable, SILHOUETTE_SUFFIX};
pub use validate::{validate, ValidationReport, Violation};

pub const GENERATOR_VERSION: &str = concat!("camoplate/", env!("CARGO_PKG_VERSION"));
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
/// Added to a cell's seed once per failed attempt.
pub const RETRY_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
pub const MAX_RETRIES: u32 = 5;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SKIPPED_FILE: &str = "skipped.jsonl";
pub const PLAN_FILE: &str = "plan.json";

/// Per-sample seed: the SplitMix64 finalizer applied to
/// `master ^ GOLDEN_GAMMA · (index + 1)`. Bijective in `index`.
/// `derive_seed(0, 0) == 0xE220_A839_7B1D_CDAF`, the first SplitMix64
/// output for state 0.
pub fn derive_seed(master_seed: u64, sample_index: u64) -> u64 {
    let mut z = master_seed ^ GOLDEN_GAMMA.wrapping_mul(sample_index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskCount {
    pub task: TaskKind,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationPlan {
    pub tasks: Vec<TaskCount>,
    /// Registry palette ids or sampler ids such as `sampled-f3b2`.
    pub palettes: Vec<String>,
    pub fill_families: Vec<FillFamily>,
    #[serde(default)]
    pub packing: PackingParams,
    #[serde(default)]
    pub task_config: TaskConfig,
    #[serde(default)]
    pub master_seed: u64,
}

impl GenerationPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: GenerationPlan =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        GenerationPlan::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Plan(msg));
        if self.tasks.is_empty() || self.palettes.is_empty() || self.fill_families.is_empty() {
            return bad("plan needs at least one task, palette and fill family".into());
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if t.count == 0 {
                return bad(format!("task {} has count 0", t.task));
            }
            if self.tasks[..i].iter().any(|o| o.task == t.task) {
                return bad(format!("task {} listed twice", t.task));
            }
        }
        for (i, p) in self.palettes.iter().enumerate() {
            resolve_palette_id(p)?;
            if self.palettes[..i].contains(p) {
                return bad(format!("palette {p} listed twice"));
            }
        }
        for (i, f) in self.fill_families.iter().enumerate() {
            if self.fill_families[..i].contains(f) {
                return bad(format!("fill family {f} listed twice"));
            }
        }
        self.packing.validate()?;
        self.task_config.validate()?;
        Ok(())
    }

    /// Cells in generation order: task, then palette, then fill, then index.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for t in &self.tasks {
            for p in &self.palettes {
                for &f in &self.fill_families {
                    for index in 0..t.count {
                        out.push(Cell {
                            ordinal: out.len() as u64,
                            task: t.task,
                            palette: p.clone(),
                            fill: f,
                            index,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum PaletteRef {
    Registry(PaletteConfig),
    Sampler(SamplerSpec),
}

fn resolve_palette_id(id: &str) -> Result<()> {
    palette_ref(id).map(|_| ())
}

fn palette_ref(id: &str) -> Result<PaletteRef> {
    if let Some(spec) = SamplerSpec::parse(id) {
        return Ok(PaletteRef::Sampler(spec));
    }
    builtin_palettes()
        .into_iter()
        .find(|p| p.id == id)
        .map(PaletteRef::Registry)
        .ok_or_else(|| Error::Plan(format!("unknown palette {id:?}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    /// Position in generation order; the seed index.
    pub ordinal: u64,
    pub task: TaskKind,
    pub palette: String,
    pub fill: FillFamily,
    pub index: u32,
}

impl Cell {
    pub fn id(&self) -> String {
        format!("{}-{}-{}-{}", self.task, self.palette, self.fill, self.index)
    }
}

/// One manifest row. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    pub task: TaskKind,
    pub question: String,
    pub answer: String,
    pub answer_format: AnswerFormat,
    pub palette_id: String,
    pub fill_family: FillFamily,
    /// Seed of the attempt that succeeded.
    pub seed: u64,
    pub attempt: u32,
    pub rotation_deg: Option<f64>,
    pub occlusion_fraction: Option<f64>,
    pub silhouette_ids: Vec<String>,
    pub image_path: String,
    pub silhouette_path: String,
    pub meta_path: String,
    pub generator_version: String,
    pub template_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkippedCell {
    pub id: String,
    pub seed: u64,
    pub reason: String,
}

/// Everything needed to audit a sample without re-running generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleMeta {
    pub id: String,
    pub seed: u64,
    pub scene: SceneSpec,
    pub palette: PaletteConfig,
    pub fill_family: FillFamily,
    pub packing: PackingParams,
    pub plate: PlateMeta,
}

/// A generated sample held in memory.
#[derive(Debug, Clone)]
pub struct Sample {
    pub record: SampleRecord,
    pub meta: SampleMeta,
    pub image_png: Vec<u8>,
    pub silhouette_png: Vec<u8>,
}

impl Sample {
    pub fn meta_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(&self.meta).expect("meta serializes");
        bytes.push(b'\n');
        bytes
    }
}

/// Builds the sample for `cell` from a single seed, with no retries.
pub fn build_sample(
    plan: &GenerationPlan,
    content: &ContentSource,
    cell: &Cell,
    seed: u64,
    attempt: u32,
) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let palette = match palette_ref(&cell.palette)? {
        PaletteRef::Registry(p) => p,
        PaletteRef::Sampler(s) => sample_palette(&mut rng, s.n_fg, s.n_bg, &PaletteConstraints::default())?,
    };
    let scene = gen_scene(cell.task, content, &plan.task_config, &mut rng)?;
    let (image, plate) = render_camouflage(&scene, content, &palette, &plan.packing, cell.fill, &mut rng)?;
    let silhouette = render_silhouette(&scene, content)?;
    let id = cell.id();
    let record = SampleRecord {
        id: id.clone(),
        task: cell.task,
        question: scene.question.clone(),
        answer: scene.answer.clone(),
        answer_format: scene.answer_format,
        palette_id: cell.palette.clone(),
        fill_family: cell.fill,
        seed,
        attempt,
        rotation_deg: scene.rotation_deg,
        occlusion_fraction: scene.occluded_fraction,
        silhouette_ids: scene
            .placements
            .iter()
            .map(|p| match &p.item {
                Item::Shape { name } => name.clone(),
                Item::Text { text } => text.clone(),
                Item::Asset { id } => id.clone(),
            })
            .collect(),
        image_path: format!("images/{id}.png"),
        silhouette_path: format!("silhouettes/{id}.png"),
        meta_path: format!("meta/{id}.json"),
        generator_version: GENERATOR_VERSION.to_string(),
        template_hash: QuestionTemplates::builtin().hash().to_string(),
    };
    let meta = SampleMeta {
        id,
        seed,
        scene,
        palette,
        fill_family: cell.fill,
        packing: plan.packing,
        plate,
    };
    Ok(Sample {
        record,
        meta,
        image_png: encode_png(&image),
        silhouette_png: encode_png(&silhouette),
    })
}

fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::Generation(_) | Error::DegenerateScene(_) | Error::Sampling { .. }
    )
}

/// Builds `cell`, moving the seed by `RETRY_STRIDE` after each retryable
/// failure. Gives up after `MAX_RETRIES` retries.
pub fn build_cell(
    plan: &GenerationPlan,
    content: &ContentSource,
    cell: &Cell,
) -> Result<std::result::Result<Sample, SkippedCell>> {
    let base = derive_seed(plan.master_seed, cell.ordinal);
    let mut last = String::new();
    for attempt in 0..=MAX_RETRIES {
        let seed = base.wrapping_add(RETRY_STRIDE.wrapping_mul(attempt as u64));
        match build_sample(plan, content, cell, seed, attempt) {
            Ok(s) => return Ok(Ok(s)),
            Err(e) if retryable(&e) => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Ok(Err(SkippedCell {
        id: cell.id(),
        seed: base,
        reason: last,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub records: Vec<SampleRecord>,
    pub skipped: Vec<SkippedCell>,
}

/// Generates every cell of `plan` into `out`.
pub fn generate(plan: &GenerationPlan, out: &Path, content: &ContentSource) -> Result<GenerationReport> {
    plan.validate()?;
    for sub in ["images", "silhouettes", "meta"] {
        let d = out.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    write_file(&out.join(PLAN_FILE), &json_line(plan))?;
    let mut manifest = Vec::new();
    let mut skipped_lines = Vec::new();
    let mut report = GenerationReport {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    let cells = plan.cells();
    for cell in &cells {
        match build_cell(plan, content, cell)? {
            Ok(sample) => {
                write_file(&out.join(&sample.record.image_path), &sample.image_png)?;
                write_file(&out.join(&sample.record.silhouette_path), &sample.silhouette_png)?;
                write_file(&out.join(&sample.record.meta_path), &sample.meta_json())?;
                manifest.extend(json_line(&sample.record));
                report.records.push(sample.record);
            }
            Err(skip) => {
                skipped_lines.extend(json_line(&skip));
                report.skipped.push(skip);
            }
        }
    }
    write_file(&out.join(MANIFEST_FILE), &manifest)?;
    write_file(&out.join(SKIPPED_FILE), &skipped_lines)?;
    if report.skipped.len() * 100 > cells.len() {
        return Err(Error::Plan(format!(
            "{} of {} cells skipped, more than 1%",
            report.skipped.len(),
            cells.len()
        )));
    }
    Ok(report)
}

fn json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(value).expect("plain data serializes");
    bytes.push(b'\n');
    bytes
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Reads a JSON Lines manifest.
pub fn read_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    read_jsonl(path)
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::Input(format!("{}:{}: {e}", path.display(), n + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub image: bool,
    pub silhouette: bool,
    pub meta: bool,
}

impl ReplayOutcome {
    pub fn identical(&self) -> bool {
        self.image && self.silhouette && self.meta
    }
}

/// Regenerates one record from its own seed and the stored plan, and
/// compares the result with the files on disk byte for byte.
pub fn replay(dir: &Path, id: &str, content: &ContentSource) -> Result<ReplayOutcome> {
    let plan = GenerationPlan::load(&dir.join(PLAN_FILE))?;
    let record = read_manifest(&dir.join(MANIFEST_FILE))?
        .into_iter()
        .find(|r| r.id == id)
        .ok_or_else(|| Error::Input(format!("no record {id:?} in manifest")))?;
    let cell = plan
        .cells()
        .into_iter()
        .find(|c| c.id() == id)
        .ok_or_else(|| Error::Input(format!("record {id:?} is not a cell of the stored plan")))?;
    let sample = build_sample(&plan, content, &cell, record.seed, record.attempt)?;
    let same = |rel: &str, bytes: &[u8]| -> Result<bool> {
        let p: PathBuf = dir.join(rel);
        Ok(fs::read(&p).map_err(|e| Error::io(&p, e))? == bytes)
    };
    Ok(ReplayOutcome {
        image: same(&record.image_path, &sample.image_png)?,
        silhouette: same(&record.silhouette_path, &sample.silhouette_png)?,
        meta: same(&record.meta_path, &sample.meta_json())? && sample.record == record,
    })
}
