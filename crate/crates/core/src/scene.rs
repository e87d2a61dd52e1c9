//! Scene specifications and ground-truth answers for the nine question tasks.

use std::collections::BTreeMap;
use std::env;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polygon_area, Outline, Point, Rect, Similarity};
use crate::glyphs::{layout_text, padded_text_extent, vocabulary_outline, SHAPE_VOCABULARY};
use crate::raster::{
    apply_occluders, generate_occluders, import_mask, load_gray, rasterize, BitMask, Occluder,
    OcclusionParams, CANVAS_SIZE, DEFAULT_IMPORT_THRESHOLD,
};
use crate::templates::{QuestionTemplates, Slots};

pub const ASSET_DIR_ENV: &str = "CHROMOU_ASSET_DIR";
pub const QUADRANT_CONVENTION: &str =
    "Q1 = top-left, Q2 = top-right, Q3 = bottom-left, Q4 = bottom-right";

/// Built-in recognition words, uppercase, 3 to 6 letters.
pub const WORDLIST: [&str; 48] = [
    "APPLE", "ARROW", "BEAR", "BIRD", "BOAT", "BREAD", "CAKE", "CAMEL", "CHAIR", "CLOCK", "CLOUD",
    "CROWN", "DEER", "DOG", "DRUM", "EAGLE", "FISH", "FLAME", "FROG", "GHOST", "GRAPE", "HORSE",
    "HOUSE", "KEY", "KITE", "LAMP", "LEMON", "LION", "MOON", "MOUSE", "OWL", "PEAR", "PIANO",
    "PLANE", "QUEEN", "RIVER", "ROBOT", "SHEEP", "SNAKE", "STONE", "SUN", "TIGER", "TRAIN",
    "TREE", "TRUCK", "WATER", "WHALE", "ZEBRA",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Count,
    Enumeration,
    SpotDifference,
    SizeComparison,
    SizeSort,
    Recognition,
    Rotation,
    Occlusion,
    Math,
}

impl TaskKind {
    pub const ALL: [TaskKind; 9] = [
        TaskKind::Count,
        TaskKind::Enumeration,
        TaskKind::SpotDifference,
        TaskKind::SizeComparison,
        TaskKind::SizeSort,
        TaskKind::Recognition,
        TaskKind::Rotation,
        TaskKind::Occlusion,
        TaskKind::Math,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Count => "count",
            TaskKind::Enumeration => "enumeration",
            TaskKind::SpotDifference => "spot_difference",
            TaskKind::SizeComparison => "size_comparison",
            TaskKind::SizeSort => "size_sort",
            TaskKind::Recognition => "recognition",
            TaskKind::Rotation => "rotation",
            TaskKind::Occlusion => "occlusion",
            TaskKind::Math => "math",
        }
    }

    pub fn is_quadrant_task(self) -> bool {
        matches!(
            self,
            TaskKind::SpotDifference | TaskKind::SizeComparison | TaskKind::SizeSort
        )
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown task kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerFormat {
    Integer,
    Word,
    QuadrantLabel,
    QuadrantOrder,
    FreeText,
}

/// Canvas quarters, numbered row-major from the top left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4];

    pub fn label(self) -> &'static str {
        match self {
            Quadrant::Q1 => "Q1",
            Quadrant::Q2 => "Q2",
            Quadrant::Q3 => "Q3",
            Quadrant::Q4 => "Q4",
        }
    }

    pub fn bounds(self, canvas: u32) -> Rect {
        let half = canvas as f64 / 2.0;
        let i = self as usize;
        let (col, row) = ((i % 2) as f64, (i / 2) as f64);
        Rect {
            min_x: col * half,
            min_y: row * half,
            max_x: (col + 1.0) * half,
            max_y: (row + 1.0) * half,
        }
    }

    pub fn center(self, canvas: u32) -> Point {
        let b = self.bounds(canvas);
        Point::new((b.min_x + b.max_x) / 2.0, (b.min_y + b.max_y) / 2.0)
    }
}

impl FromStr for Quadrant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quadrant::ALL
            .into_iter()
            .find(|q| q.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown quadrant {s:?}")))
    }
}

/// What a placement draws.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Item {
    /// A vocabulary shape.
    Shape { name: String },
    /// A line of glyphs: a word, a number or an expression.
    Text { text: String },
    /// A silhouette from the asset directory.
    Asset { id: String },
}

impl Item {
    /// The answer-facing name of the item.
    pub fn canonical_name(&self) -> String {
        match self {
            Item::Shape { name } => name.clone(),
            Item::Text { text } => text.clone(),
            Item::Asset { id } => asset_name(id),
        }
    }
}

/// Lowercase with `_` and `-` read as spaces.
pub fn asset_name(id: &str) -> String {
    id.chars()
        .map(|c| if c == '_' || c == '-' { ' ' } else { c.to_ascii_lowercase() })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// One item and its transform.
///
/// `size` is the circumradius in pixels for shapes, the glyph height in
/// pixels for text and the scale factor for assets (whose masks span the
/// canvas and are scaled about its centre). `rotation` is in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub item: Item,
    pub center: Point,
    pub size: f64,
    pub rotation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrant: Option<Quadrant>,
    /// Fraction of the quadrant side spanned by the shape's circumcircle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl Placement {
    /// Vector outlines for shapes and text; assets have none.
    pub fn outlines(&self) -> Result<Vec<Outline>> {
        match &self.item {
            Item::Shape { name } => Ok(vec![vocabulary_outline(name, self.center, self.size, self.rotation)?]),
            Item::Text { text } => layout_text(text, self.center, self.size, self.rotation),
            Item::Asset { .. } => Ok(Vec::new()),
        }
    }

    fn bbox(&self) -> Result<Rect> {
        self.outlines()?
            .iter()
            .map(Outline::bbox)
            .reduce(Rect::union)
            .ok_or_else(|| Error::Input("placement has no outline".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    Word,
    Number,
    Asset,
}

impl ContentKind {
    fn noun(self) -> &'static str {
        match self {
            ContentKind::Word => "word",
            ContentKind::Number => "3-digit number",
            ContentKind::Asset => "silhouette",
        }
    }

    fn answer_format(self) -> AnswerFormat {
        match self {
            ContentKind::Word => AnswerFormat::Word,
            ContentKind::Number => AnswerFormat::Integer,
            ContentKind::Asset => AnswerFormat::FreeText,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub task: TaskKind,
    pub canvas: u32,
    pub placements: Vec<Placement>,
    #[serde(default)]
    pub occluders: Vec<Occluder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occluded_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_kind: Option<ContentKind>,
    pub question: String,
    pub answer: String,
    pub answer_format: AnswerFormat,
}

impl SceneSpec {
    /// Asset ids referenced by the placements.
    pub fn asset_ids(&self) -> Vec<String> {
        self.placements
            .iter()
            .filter_map(|p| match &p.item {
                Item::Asset { id } => Some(id.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Shape vocabulary, glyph font and silhouette assets available to scenes.
#[derive(Debug, Clone, Default)]
pub struct ContentSource {
    assets: BTreeMap<String, BitMask>,
}

impl ContentSource {
    /// Built-in glyphs and shapes only.
    pub fn builtin() -> Self {
        ContentSource::default()
    }

    /// Loads every `.png` and `.pbm` in `dir`; the file stem is the asset id.
    /// Dark pixels are foreground. Masks are resampled to `canvas`.
    pub fn with_asset_dir(dir: &Path, canvas: u32) -> Result<Self> {
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut assets = BTreeMap::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            if !matches!(ext.as_deref(), Some("png" | "pbm")) {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let mask = import_mask(&load_gray(&path)?, DEFAULT_IMPORT_THRESHOLD, canvas, canvas)?;
            if mask.count() == 0 {
                return Err(Error::Input(format!("asset {} has no foreground", path.display())));
            }
            assets.insert(id.to_string(), mask);
        }
        Ok(ContentSource { assets })
    }

    /// Uses the directory named by `CHROMOU_ASSET_DIR` when set.
    pub fn from_env(canvas: u32) -> Result<Self> {
        match env::var_os(ASSET_DIR_ENV) {
            Some(dir) if !dir.is_empty() => ContentSource::with_asset_dir(Path::new(&dir), canvas),
            _ => Ok(ContentSource::builtin()),
        }
    }

    pub fn insert_asset(&mut self, id: &str, mask: BitMask) {
        self.assets.insert(id.to_string(), mask);
    }

    pub fn asset_ids(&self) -> impl Iterator<Item = &str> {
        self.assets.keys().map(String::as_str)
    }

    pub fn asset(&self, id: &str) -> Option<&BitMask> {
        self.assets.get(id)
    }

    fn content_kinds(&self) -> Vec<ContentKind> {
        let mut kinds = vec![ContentKind::Word, ContentKind::Number];
        if !self.assets.is_empty() {
            kinds.push(ContentKind::Asset);
        }
        kinds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub canvas: u32,
    /// Inclusive instance count range for the count task.
    pub count_range: (u32, u32),
    /// Inclusive distinct-shape range for the enumeration task.
    pub enumeration_range: (u32, u32),
    /// Circumradius range in pixels for freely placed shapes.
    pub shape_radius: (f64, f64),
    pub margin: f64,
    pub size_scales: [f64; 4],
    pub spot_scale: f64,
    pub rotation_choices: Vec<f64>,
    pub rotation_jitter_deg: f64,
    /// Diameter of the content's bounding circle as a fraction of the canvas.
    pub content_fill: f64,
    pub occlusion: OcclusionParams,
    pub max_retries: u32,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            canvas: CANVAS_SIZE,
            count_range: (2, 6),
            enumeration_range: (2, 4),
            shape_radius: (28.0, 56.0),
            margin: 8.0,
            size_scales: [0.35, 0.5, 0.65, 0.8],
            spot_scale: 0.65,
            rotation_choices: vec![90.0, 180.0, 270.0],
            rotation_jitter_deg: 10.0,
            content_fill: 0.8,
            occlusion: OcclusionParams::default(),
            max_retries: 200,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.canvas == 0 {
            return bad("canvas must be positive".into());
        }
        let (lo, hi) = self.count_range;
        if lo == 0 || lo > hi {
            return bad(format!("count range {lo}..={hi} is empty or starts at 0"));
        }
        let (lo, hi) = self.enumeration_range;
        if lo == 0 || lo > hi || hi as usize > SHAPE_VOCABULARY.len() {
            return bad(format!(
                "enumeration range {lo}..={hi} must lie in 1..={}",
                SHAPE_VOCABULARY.len()
            ));
        }
        let (rlo, rhi) = self.shape_radius;
        if !(rlo > 0.0 && rlo <= rhi && 2.0 * (rhi + self.margin) < self.canvas as f64) {
            return bad(format!("shape radius range {rlo}..{rhi} does not fit the canvas"));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad(format!("margin must be >= 0, got {}", self.margin));
        }
        let half = self.canvas as f64 / 2.0;
        for &s in self.size_scales.iter().chain([&self.spot_scale]) {
            if !(s > 0.0 && s * half / 2.0 + self.margin <= half / 2.0) {
                return bad(format!("quadrant scale {s} leaves less than the margin"));
            }
        }
        let mut sorted = self.size_scales;
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("size scales must be distinct".into());
        }
        if self.rotation_choices.is_empty() || !(self.rotation_jitter_deg >= 0.0) {
            return bad("rotation needs choices and a non-negative jitter".into());
        }
        if !(self.content_fill > 0.0 && self.content_fill <= 1.0) {
            return bad(format!("content fill must be in (0, 1], got {}", self.content_fill));
        }
        if self.max_retries == 0 {
            return bad("max retries must be positive".into());
        }
        Ok(())
    }
}

/// Builds a scene for `kind`. The same rng stream always yields the same scene.
pub fn gen_scene<R: Rng + ?Sized>(
    kind: TaskKind,
    content: &ContentSource,
    cfg: &TaskConfig,
    rng: &mut R,
) -> Result<SceneSpec> {
    cfg.validate()?;
    let mut scene = SceneSpec {
        task: kind,
        canvas: cfg.canvas,
        placements: Vec::new(),
        occluders: Vec::new(),
        occluded_fraction: None,
        rotation_deg: None,
        expression: None,
        content_kind: None,
        question: String::new(),
        answer: String::new(),
        answer_format: AnswerFormat::FreeText,
    };
    match kind {
        TaskKind::Count => {
            let k = rng.gen_range(cfg.count_range.0..=cfg.count_range.1);
            let names: Vec<&str> = (0..k)
                .map(|_| *SHAPE_VOCABULARY.choose(rng).expect("vocabulary is non-empty"))
                .collect();
            scene.placements = place_free(&names, cfg, rng)?;
            scene.answer_format = AnswerFormat::Integer;
        }
        TaskKind::Enumeration => {
            let k = rng.gen_range(cfg.enumeration_range.0..=cfg.enumeration_range.1);
            let names: Vec<&str> = SHAPE_VOCABULARY.choose_multiple(rng, k as usize).copied().collect();
            scene.placements = place_free(&names, cfg, rng)?;
        }
        TaskKind::SpotDifference => {
            let picked: Vec<&str> = SHAPE_VOCABULARY.choose_multiple(rng, 2).copied().collect();
            let odd = rng.gen_range(0..4);
            scene.placements = Quadrant::ALL
                .into_iter()
                .enumerate()
                .map(|(i, q)| {
                    let name = if i == odd { picked[1] } else { picked[0] };
                    quadrant_placement(name, q, cfg.spot_scale, cfg.canvas)
                })
                .collect();
            scene.answer_format = AnswerFormat::QuadrantLabel;
        }
        TaskKind::SizeComparison | TaskKind::SizeSort => {
            let name = *SHAPE_VOCABULARY.choose(rng).expect("vocabulary is non-empty");
            let mut scales = cfg.size_scales;
            scales.shuffle(rng);
            scene.placements = size_placements(name, scales, cfg.canvas);
            scene.answer_format = if kind == TaskKind::SizeComparison {
                AnswerFormat::QuadrantLabel
            } else {
                AnswerFormat::QuadrantOrder
            };
        }
        TaskKind::Recognition | TaskKind::Rotation | TaskKind::Occlusion => {
            let ck = *content.content_kinds().choose(rng).expect("at least two kinds");
            let item = match ck {
                ContentKind::Word => Item::Text {
                    text: WORDLIST.choose(rng).expect("wordlist is non-empty").to_string(),
                },
                ContentKind::Number => Item::Text {
                    text: rng.gen_range(100..=999u32).to_string(),
                },
                ContentKind::Asset => {
                    let ids: Vec<&str> = content.asset_ids().collect();
                    Item::Asset {
                        id: ids.choose(rng).expect("assets present").to_string(),
                    }
                }
            };
            let rotation = if kind == TaskKind::Rotation {
                let base = *cfg.rotation_choices.choose(rng).expect("validated non-empty");
                let jitter = if cfg.rotation_jitter_deg > 0.0 {
                    rng.gen_range(-cfg.rotation_jitter_deg..=cfg.rotation_jitter_deg)
                } else {
                    0.0
                };
                let deg = base + jitter;
                scene.rotation_deg = Some(deg);
                deg.to_radians()
            } else {
                0.0
            };
            scene.placements = vec![content_placement(item, rotation, cfg)];
            scene.content_kind = Some(ck);
            scene.answer_format = ck.answer_format();
            if kind == TaskKind::Occlusion {
                let mask = scene_mask_unoccluded(&scene, content)?;
                let (occluders, _, fraction) = generate_occluders(&mask, &cfg.occlusion, rng)?;
                scene.occluders = occluders;
                scene.occluded_fraction = Some(fraction);
            }
        }
        TaskKind::Math => {
            let ops = ['+', '−', '×'];
            let op = *ops.choose(rng).expect("non-empty");
            let mut a: u32 = rng.gen_range(1..=9);
            let mut b: u32 = rng.gen_range(1..=9);
            if op == '−' && a < b {
                std::mem::swap(&mut a, &mut b);
            }
            let expr = format!("{a}{op}{b}");
            scene.placements = vec![content_placement(Item::Text { text: expr.clone() }, 0.0, cfg)];
            scene.expression = Some(expr);
            scene.answer_format = AnswerFormat::Integer;
        }
    }
    scene.answer = derive_answer(&scene)?;
    scene.question = question_for(&scene, QuestionTemplates::builtin());
    Ok(scene)
}

pub fn question_for(scene: &SceneSpec, templates: &QuestionTemplates) -> String {
    let shapes = SHAPE_VOCABULARY.join(", ");
    templates.render(
        scene.task,
        &Slots {
            quadrants: QUADRANT_CONVENTION,
            content: scene.content_kind.map_or("content", ContentKind::noun),
            shapes: &shapes,
        },
    )
}

/// Places shapes at random positions and rotations with pairwise disjoint
/// bounding boxes at least `cfg.margin` apart and inside the canvas margin.
fn place_free<R: Rng + ?Sized>(names: &[&str], cfg: &TaskConfig, rng: &mut R) -> Result<Vec<Placement>> {
    let side = cfg.canvas as f64;
    let mut placed: Vec<(Placement, Rect)> = Vec::with_capacity(names.len());
    for name in names {
        let mut found = None;
        for _ in 0..cfg.max_retries {
            let r = rng.gen_range(cfg.shape_radius.0..=cfg.shape_radius.1);
            let lo = r + cfg.margin;
            let center = Point::new(rng.gen_range(lo..=side - lo), rng.gen_range(lo..=side - lo));
            let p = Placement {
                item: Item::Shape { name: name.to_string() },
                center,
                size: r,
                rotation: rng.gen_range(0.0..std::f64::consts::TAU),
                quadrant: None,
                scale: None,
            };
            let bb = p.bbox()?;
            let half = cfg.margin / 2.0;
            if placed
                .iter()
                .all(|(_, other)| !bb.inflate(half).intersects(&other.inflate(half)))
            {
                found = Some((p, bb));
                break;
            }
        }
        let Some(hit) = found else {
            return Err(Error::Generation(format!(
                "could not place {name} after {} attempts",
                cfg.max_retries
            )));
        };
        placed.push(hit);
    }
    Ok(placed.into_iter().map(|(p, _)| p).collect())
}

fn quadrant_placement(name: &str, q: Quadrant, scale: f64, canvas: u32) -> Placement {
    let half = canvas as f64 / 2.0;
    Placement {
        item: Item::Shape { name: name.to_string() },
        center: q.center(canvas),
        size: scale * half / 2.0,
        rotation: 0.0,
        quadrant: Some(q),
        scale: Some(scale),
    }
}

/// One `name` shape per quadrant, `scales[i]` going to quadrant `i`.
pub fn size_placements(name: &str, scales: [f64; 4], canvas: u32) -> Vec<Placement> {
    Quadrant::ALL
        .into_iter()
        .zip(scales)
        .map(|(q, s)| quadrant_placement(name, q, s, canvas))
        .collect()
}

/// Centres `item` on the canvas, sized so it stays inside a circle of
/// diameter `content_fill · canvas` at any rotation.
fn content_placement(item: Item, rotation: f64, cfg: &TaskConfig) -> Placement {
    let side = cfg.canvas as f64;
    let reach = cfg.content_fill * side / 2.0;
    let size = match &item {
        Item::Text { text } => {
            let (w, h) = padded_text_extent(text, 1.0);
            2.0 * reach / w.hypot(h)
        }
        Item::Asset { .. } => cfg.content_fill / std::f64::consts::SQRT_2,
        Item::Shape { .. } => reach,
    };
    Placement {
        item,
        center: Point::new(side / 2.0, side / 2.0),
        size,
        rotation,
        quadrant: None,
        scale: None,
    }
}

/// Foreground mask of all placements, ignoring occluders.
pub fn scene_mask_unoccluded(scene: &SceneSpec, content: &ContentSource) -> Result<BitMask> {
    let n = scene.canvas;
    let mut outlines = Vec::new();
    for p in &scene.placements {
        outlines.extend(p.outlines()?);
    }
    let mut mask = if outlines.is_empty() {
        BitMask::new(n, n)?
    } else {
        rasterize(&outlines, n, n)?
    };
    for p in &scene.placements {
        if let Item::Asset { id } = &p.item {
            let src = content
                .asset(id)
                .ok_or_else(|| Error::Input(format!("asset {id:?} not found in content source")))?;
            let pivot = Point::new(src.width() as f64 / 2.0, src.height() as f64 / 2.0);
            let sim = Similarity::new(
                pivot,
                p.rotation,
                p.size,
                Point::new(p.center.x - pivot.x, p.center.y - pivot.y),
            )?;
            mask.union_with(&src.transformed(&sim, n, n)?);
        }
    }
    Ok(mask)
}

/// Foreground mask with the scene's occluders applied.
pub fn scene_mask(scene: &SceneSpec, content: &ContentSource) -> Result<BitMask> {
    let mask = scene_mask_unoccluded(scene, content)?;
    if scene.occluders.is_empty() {
        return Ok(mask);
    }
    Ok(apply_occluders(&mask, &scene.occluders).0)
}

/// Recomputes the answer from the placements and expression alone.
pub fn derive_answer(scene: &SceneSpec) -> Result<String> {
    let bad = |msg: &str| Error::Input(format!("{} scene: {msg}", scene.task));
    match scene.task {
        TaskKind::Count => {
            if scene.placements.is_empty() {
                return Err(bad("no placements"));
            }
            Ok(scene.placements.len().to_string())
        }
        TaskKind::Enumeration => {
            let mut names: Vec<String> = scene.placements.iter().map(|p| p.item.canonical_name()).collect();
            names.sort();
            names.dedup();
            if names.is_empty() {
                return Err(bad("no placements"));
            }
            Ok(names.join(","))
        }
        TaskKind::SpotDifference => {
            let by_q = by_quadrant(scene)?;
            let names: Vec<String> = by_q.iter().map(|p| p.item.canonical_name()).collect();
            let odd: Vec<usize> = (0..4)
                .filter(|&i| names.iter().filter(|n| **n == names[i]).count() == 1)
                .collect();
            match odd.as_slice() {
                [i] => Ok(Quadrant::ALL[*i].label().to_string()),
                _ => Err(bad("no single quadrant differs from the rest")),
            }
        }
        TaskKind::SizeComparison | TaskKind::SizeSort => {
            let by_q = by_quadrant(scene)?;
            let mut areas = Vec::with_capacity(4);
            for (q, p) in Quadrant::ALL.into_iter().zip(by_q) {
                let area: f64 = p.outlines()?.iter().map(polygon_area).sum();
                areas.push((area, q));
            }
            areas.sort_by(|a, b| a.0.total_cmp(&b.0));
            if areas.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(bad("two quadrants have equal area"));
            }
            if scene.task == TaskKind::SizeComparison {
                Ok(areas[3].1.label().to_string())
            } else {
                Ok(areas.iter().map(|(_, q)| q.label()).collect::<Vec<_>>().join(","))
            }
        }
        TaskKind::Recognition | TaskKind::Rotation | TaskKind::Occlusion => match scene.placements.as_slice() {
            [p] => Ok(p.item.canonical_name()),
            _ => Err(bad("expected exactly one placement")),
        },
        TaskKind::Math => {
            let expr = scene.expression.as_deref().ok_or_else(|| bad("missing expression"))?;
            Ok(eval_expression(expr)?.to_string())
        }
    }
}

fn by_quadrant(scene: &SceneSpec) -> Result<[&Placement; 4]> {
    let mut slots: [Option<&Placement>; 4] = [None; 4];
    for p in &scene.placements {
        let q = p
            .quadrant
            .ok_or_else(|| Error::Input(format!("{} placement without quadrant", scene.task)))?;
        if slots[q as usize].replace(p).is_some() {
            return Err(Error::Input(format!("{} has two placements in {}", scene.task, q.label())));
        }
    }
    let mut out = Vec::with_capacity(4);
    for (q, s) in Quadrant::ALL.into_iter().zip(slots) {
        out.push(s.ok_or_else(|| Error::Input(format!("{} has no placement in {}", scene.task, q.label())))?);
    }
    Ok([out[0], out[1], out[2], out[3]])
}

/// Evaluates `a op b` over non-negative integers. `op` is one of `+`, `−`
/// or `-`, `×`, `x` or `*`. Whitespace is ignored.
pub fn eval_expression(expr: &str) -> Result<i64> {
    let compact: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Expression(expr.to_string());
    let (at, op) = compact
        .char_indices()
        .find(|(i, c)| *i > 0 && !c.is_ascii_digit())
        .ok_or_else(bad)?;
    let lhs = &compact[..at];
    let rhs = &compact[at + op.len_utf8()..];
    let parse = |s: &str| -> Result<i64> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        s.parse().map_err(|_| bad())
    };
    let (a, b) = (parse(lhs)?, parse(rhs)?);
    let value = match op {
        '+' => a.checked_add(b),
        '−' | '-' => a.checked_sub(b),
        '×' | 'x' | 'X' | '*' => a.checked_mul(b),
        _ => return Err(bad()),
    };
    value.ok_or_else(bad)
}
