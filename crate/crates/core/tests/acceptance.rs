//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and limits are fixed here.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::{E, LN_2, TAU};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use camoplate::contrastive::{info_nce, total_loss, Embedding, PairBatch};
use camoplate::dataset::{
    generate, read_manifest, score, validate, GenerationPlan, Prediction, SampleMeta, SampleRecord, TaskCount,
};
use camoplate::geometry::{make_outline, point_inside, Outline, Point, ShapeKind};
use camoplate::packing::{pack, FillFamily, PackingParams, Side};
use camoplate::palette::{builtin_palettes, sampled_configurations};
use camoplate::raster::{rasterize, BitMask, CANVAS_SIZE};
use camoplate::render::read_png;
use camoplate::scene::{ContentSource, TaskConfig, TaskKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    if let Some(l) = limit {
        if took > l {
            out.pass = false;
        }
        out.detail = format!("{}; {:.2}s (limit {}s)", out.detail, took.as_secs_f64(), l.as_secs());
    }
    println!("{} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    out.pass
}

// ---------------------------------------------------------------- ray casting

fn is_left(a: Point, b: Point, p: Point) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)
}

/// Signed winding number summed over all rings.
fn winding(outline: &Outline, p: Point) -> i64 {
    let mut wn = 0;
    for ring in outline.rings() {
        for i in 0..ring.len() {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            if a.y <= p.y {
                if b.y > p.y && is_left(a, b, p) > 0.0 {
                    wn += 1;
                }
            } else if b.y <= p.y && is_left(a, b, p) < 0.0 {
                wn -= 1;
            }
        }
    }
    wn
}

fn oracle_inside(outline: &Outline, p: Point) -> bool {
    winding(outline, p).rem_euclid(2) == 1
}

fn random_shape(rng: &mut ChaCha8Rng, k: usize) -> Outline {
    let c = Point::new(rng.gen_range(100.0..400.0), rng.gen_range(100.0..400.0));
    let r = rng.gen_range(20.0..150.0);
    let rot = rng.gen_range(0.0..TAU);
    match k % 5 {
        0 => make_outline(ShapeKind::RegularPolygon { sides: rng.gen_range(3..13) }, c, r, rot).unwrap(),
        1 => make_outline(
            ShapeKind::Star { points: rng.gen_range(4..10), inner_ratio: rng.gen_range(0.15..0.85) },
            c,
            r,
            rot,
        )
        .unwrap(),
        2 => make_outline(ShapeKind::Cross { arm_ratio: rng.gen_range(0.1..0.9) }, c, r, rot).unwrap(),
        3 => {
            // random star-shaped polygon
            let n = rng.gen_range(5..40);
            let ring = (0..n)
                .map(|i| {
                    let a = rot + TAU * i as f64 / n as f64;
                    let rr = r * rng.gen_range(0.2..1.0);
                    Point::new(c.x + rr * a.cos(), c.y + rr * a.sin())
                })
                .collect();
            Outline::polygon(ring).unwrap()
        }
        _ => {
            // annulus: square with a square hole
            let outer = make_outline(ShapeKind::RegularPolygon { sides: 4 }, c, r, rot).unwrap();
            let inner = make_outline(ShapeKind::RegularPolygon { sides: 4 }, c, r * 0.5, -rot).unwrap();
            Outline::new(vec![outer.rings()[0].clone(), inner.rings()[0].clone()]).unwrap()
        }
    }
}

fn ray_casting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let (mut agree, mut total) = (0u64, 0u64);
    for k in 0..20 {
        let shape = random_shape(&mut rng, k);
        let bb = shape.bbox().inflate(10.0);
        for _ in 0..10_000 {
            let p = Point::new(rng.gen_range(bb.min_x..bb.max_x), rng.gen_range(bb.min_y..bb.max_y));
            total += 1;
            if point_inside(&shape, p) == oracle_inside(&shape, p) {
                agree += 1;
            }
        }
    }
    Outcome {
        pass: agree == total && total == 200_000,
        detail: format!("{agree}/{total} points agree with winding-number oracle"),
    }
}

// ----------------------------------------------------------- fill completeness

/// Flood-fills pixels that lie fully inside `outline` (all four corners
/// inside per the oracle) but are background in `mask`; returns the number
/// of such regions that contain a 2×2 block.
fn holes(outline: &Outline, mask: &BitMask) -> usize {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let inside_corner: Vec<bool> = (0..=h)
        .flat_map(|y| (0..=w).map(move |x| (x, y)))
        .map(|(x, y)| oracle_inside(outline, Point::new(x as f64, y as f64)))
        .collect();
    let corner = |x: usize, y: usize| inside_corner[y * (w + 1) + x];
    let missing: Vec<bool> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            corner(x, y) && corner(x + 1, y) && corner(x, y + 1) && corner(x + 1, y + 1)
                && !mask.get(x as u32, y as u32)
        })
        .collect();
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if !missing[start] || seen[start] {
            continue;
        }
        let mut region = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            region.push(i);
            let (x, y) = (i % w, i / w);
            let mut push = |j: usize| {
                if missing[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < w {
                push(i + 1);
            }
            if y > 0 {
                push(i - w);
            }
            if y + 1 < h {
                push(i + w);
            }
        }
        let has_block = region.iter().any(|&i| {
            let (x, y) = (i % w, i / w);
            x + 1 < w && y + 1 < h && missing[i + 1] && missing[i + w] && missing[i + w + 1]
        });
        if has_block {
            count += 1;
        }
    }
    count
}

/// Regression fixture: the same outline with every other vertex dropped.
fn sparse_vertex(outline: &Outline) -> Outline {
    let ring: Vec<Point> = outline.rings()[0].iter().skip(1).step_by(2).copied().collect();
    Outline::polygon(ring).unwrap()
}

fn fill_completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF111);
    let (mut ours, mut baseline_caught, mut n) = (0, 0, 0);
    for k in 0..24 {
        let kind = if k % 2 == 0 {
            ShapeKind::Star { points: rng.gen_range(5..9), inner_ratio: 0.5 }
        } else {
            ShapeKind::cross()
        };
        let c = Point::new(rng.gen_range(200.0..312.0), rng.gen_range(200.0..312.0));
        let shape = make_outline(kind, c, rng.gen_range(40.0..190.0), rng.gen_range(0.0..TAU)).unwrap();
        let mask = rasterize(std::slice::from_ref(&shape), 512, 512).unwrap();
        ours += holes(&shape, &mask);
        let sparse = rasterize(&[sparse_vertex(&shape)], 512, 512).unwrap();
        if holes(&shape, &sparse) > 0 {
            baseline_caught += 1;
        }
        n += 1;
    }
    Outcome {
        pass: ours == 0 && baseline_caught == n,
        detail: format!(
            "{ours} holes >= 2x2 in {n} star/cross masks; sparse-vertex baseline flagged on {baseline_caught}/{n}"
        ),
    }
}

// -------------------------------------------------------------------- packing

fn packing_soundness() -> Outcome {
    let params = PackingParams::default();
    let mut violations = 0usize;
    let mut min_cov = f64::INFINITY;
    for seed in 0..100 {
        let els = pack(&params, 512, 512, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for (i, a) in els.iter().enumerate() {
            if a.center.x - a.radius < 0.0
                || a.center.y - a.radius < 0.0
                || a.center.x + a.radius > 512.0
                || a.center.y + a.radius > 512.0
            {
                violations += 1;
            }
            for b in &els[i + 1..] {
                if a.center.distance(b.center) < a.radius + b.radius + params.gap {
                    violations += 1;
                }
            }
        }
        let area: f64 = els.iter().map(|e| std::f64::consts::PI * e.radius * e.radius).sum();
        min_cov = min_cov.min(area / (512.0 * 512.0));
    }
    Outcome {
        pass: violations == 0 && min_cov >= 0.45,
        detail: format!("100 plates, {violations} spacing violations, min coverage {min_cov:.4} (>= 0.45)"),
    }
}

// ------------------------------------------------------------------ constants

fn paper_constants() -> Outcome {
    let configs: BTreeSet<(usize, usize)> = sampled_configurations().iter().map(|s| (s.n_fg, s.n_bg)).collect();
    let grid: BTreeSet<(usize, usize)> = (2..=5).flat_map(|f| (2..=5).map(move |b| (f, b))).collect();
    let fills: Vec<&str> = FillFamily::ALL.iter().map(|f| f.name()).collect();
    let checks = [
        ("canvas 512", CANVAS_SIZE == 512 && TaskConfig::default().canvas == 512),
        ("9 palettes", builtin_palettes().len() == 9),
        ("16 sampled configurations", sampled_configurations().len() == 16 && configs == grid),
        ("4 fill families", fills == ["dots", "polygons", "crosses", "stars"]),
        ("9 task kinds", TaskKind::ALL.len() == 9),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            checks.iter().map(|c| c.0).collect::<Vec<_>>().join(", ")
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

// ------------------------------------------------------------------- datasets

fn ninety_plan() -> GenerationPlan {
    GenerationPlan {
        tasks: TaskKind::ALL.iter().map(|&task| TaskCount { task, count: 5 }).collect(),
        palettes: vec!["ishihara-tri-1".into(), "sampled-f4b3".into()],
        fill_families: vec![FillFamily::Crosses],
        packing: PackingParams::default(),
        task_config: TaskConfig::default(),
        master_seed: 20_250_101,
    }
}

fn tree_hashes(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, hex::encode(Sha256::digest(fs::read(&p).unwrap()))));
            }
        }
    }
    out.sort();
    out
}

fn ground_truth(dir: &Path) -> Outcome {
    let content = ContentSource::builtin();
    let report = match generate(&ninety_plan(), dir, &content) {
        Ok(r) => r,
        Err(e) => return Outcome { pass: false, detail: format!("generation failed: {e}") },
    };
    let per_task: Vec<usize> = TaskKind::ALL
        .iter()
        .map(|k| report.records.iter().filter(|r| r.task == *k).count())
        .collect();
    let v = validate(dir, &content).unwrap();
    Outcome {
        pass: report.records.len() == 90 && per_task.iter().all(|&n| n == 10) && v.is_clean(),
        detail: format!(
            "{} samples ({} per task), {} violations, {} missing files",
            report.records.len(),
            per_task[0],
            v.violations.len(),
            v.missing.len()
        ),
    }
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    generate(&ninety_plan(), second, &ContentSource::builtin()).unwrap();
    let (a, b) = (tree_hashes(first), tree_hashes(second));
    let pngs = a.iter().filter(|(p, _)| p.ends_with(".png")).count();
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    Outcome {
        pass: differing == 0 && pngs >= 180,
        detail: format!("{} files ({pngs} PNGs) hashed twice, {differing} differ", a.len()),
    }
}

fn color_discipline(dir: &Path) -> Outcome {
    let records = read_manifest(&dir.join("manifest.jsonl")).unwrap();
    let (mut ok, mut n) = (0, 0);
    for r in records.iter().step_by(3).take(30) {
        n += 1;
        let meta: SampleMeta = serde_json::from_slice(&fs::read(dir.join(&r.meta_path)).unwrap()).unwrap();
        let img = read_png(&dir.join(&r.image_path)).unwrap();
        let support = img.color_support();
        let base = meta.plate.base_color.channels();
        let mut allowed: BTreeSet<[u8; 3]> = meta.palette.fg.iter().chain(&meta.palette.bg).map(|c| c.channels()).collect();
        allowed.insert(base);
        let mut drawn = BTreeSet::from([base]);
        let mut sides_ok = true;
        for e in &meta.plate.elements {
            let c = meta.palette.colors(e.side)[e.color_index].channels();
            let other = match e.side {
                Side::Figure => &meta.palette.bg,
                Side::Ground => &meta.palette.fg,
            };
            sides_ok &= !other.iter().any(|o| o.channels() == c) || c == base;
            drawn.insert(c);
        }
        if support.is_subset(&allowed) && support == drawn && sides_ok {
            ok += 1;
        }
    }
    Outcome {
        pass: n == 30 && ok == n,
        detail: format!("{ok}/{n} decoded plates show exactly their element colors plus base"),
    }
}

// ---------------------------------------------------------------- contrastive

fn emb(v: Vec<f64>) -> Embedding {
    Embedding::new(v).unwrap()
}

/// Unstabilized transcription used as the oracle.
fn naive_info_nce(pairs: &[(Vec<f64>, Vec<f64>)], tau: f64) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut loss = 0.0;
    for (c, o) in pairs {
        let num = (dot(c, o) / tau).exp();
        let den: f64 = pairs.iter().map(|(_, oj)| (dot(c, oj) / tau).exp()).sum();
        loss -= (num / den).ln();
    }
    loss
}

fn contrastive() -> Outcome {
    let v = vec![0.4, -1.1, 0.7];
    let uniform = PairBatch::new(vec![(emb(v.clone()), emb(v.clone())), (emb(v.clone()), emb(v))]).unwrap();
    let e1 = || emb(vec![1.0, 0.0]);
    let e2 = || emb(vec![0.0, 1.0]);
    let ortho = PairBatch::new(vec![(e1(), e1()), (e2(), e2())]).unwrap();
    let c1 = (info_nce(&uniform, 0.7).unwrap() - 2.0 * LN_2).abs();
    let c2 = (info_nce(&ortho, 1.0).unwrap() - 2.0 * ((1.0 + E).ln() - 1.0)).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(0xC0_5715);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(2..9);
        let d = rng.gen_range(2..17);
        let vec_ = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect::<Vec<f64>>();
        let raw: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|_| (vec_(&mut rng), vec_(&mut rng))).collect();
        let batch = PairBatch::new(raw.iter().map(|(c, o)| (emb(c.clone()), emb(o.clone()))).collect()).unwrap();
        let got = info_nce(&batch, 0.7).unwrap();
        let want = naive_info_nce(&raw, 0.7);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    let ends = total_loss(3.25, 7.5, 1.0).unwrap() == 3.25 && total_loss(3.25, 7.5, 0.0).unwrap() == 7.5;
    Outcome {
        pass: c1 <= 1e-9 && c2 <= 1e-9 && worst <= 1e-9 && ends,
        detail: format!(
            "closed forms off by {c1:.1e}, {c2:.1e}; 100 batches at tau=0.7 worst {worst:.1e} (<= 1e-9); alpha endpoints exact: {ends}"
        ),
    }
}

// ------------------------------------------------------------------- scoring

fn record(id: &str, task: TaskKind, answer: &str, format: &str) -> SampleRecord {
    serde_json::from_value(serde_json::json!({
        "id": id, "task": task, "question": "", "answer": answer, "answer_format": format,
        "palette_id": "ishihara-dual-1", "fill_family": "dots", "seed": 0, "attempt": 0,
        "rotation_deg": null, "occlusion_fraction": null, "silhouette_ids": [],
        "image_path": "", "silhouette_path": "", "meta_path": "",
        "generator_version": "", "template_hash": ""
    }))
    .unwrap()
}

fn scoring() -> Outcome {
    // (task, answer, format, [predictions for 2 records], expected accuracy)
    let rows: [(TaskKind, &str, &str, [&str; 2], f64); 9] = [
        (TaskKind::Count, "4", "integer", ["4", "four"], 0.5),
        (TaskKind::Enumeration, "cross,star", "free-text", ["Cross, Star", "cross,star"], 1.0),
        (TaskKind::SpotDifference, "Q3", "quadrant-label", ["q3", "Q2"], 0.5),
        (TaskKind::SizeComparison, "Q1", "quadrant-label", [" Q1 ", "Q1"], 1.0),
        (TaskKind::SizeSort, "Q2,Q1,Q4,Q3", "quadrant-order", ["q2, q1, q4, q3", "Q1,Q2,Q3,Q4"], 0.5),
        (TaskKind::Recognition, "ZEBRA", "word", ["zebra", "Zebra"], 1.0),
        (TaskKind::Rotation, "427", "integer", ["", "724"], 0.0),
        (TaskKind::Occlusion, "HORSE", "word", ["horse", "HOUSE"], 0.5),
        (TaskKind::Math, "56", "integer", ["56", " 56"], 1.0),
    ];
    let mut records = Vec::new();
    let mut preds = Vec::new();
    for (task, answer, format, ps, _) in &rows {
        for (i, p) in ps.iter().enumerate() {
            let id = format!("{task}-{i}");
            records.push(record(&id, *task, answer, format));
            preds.push(Prediction { id: id.clone(), prediction: p.to_string() });
            // every silhouette probe answered correctly; must not move overall
            preds.push(Prediction { id: format!("{id}:silhouette"), prediction: answer.to_string() });
        }
    }
    // hand-computed: (0.5 + 1 + 0.5 + 1 + 0.5 + 1 + 0 + 0.5 + 1) / 9 = 6 / 9
    let expected_overall = 6.0 / 9.0;
    let table = score(&records, &preds).unwrap();
    let per_task_ok = rows
        .iter()
        .zip(&table.tasks)
        .all(|(r, t)| t.name == r.0.name() && t.accuracy == r.4 && t.total == 2);
    let sil = table.silhouette.as_ref().map(|s| s.accuracy);
    Outcome {
        pass: per_task_ok && table.tasks.len() == 9 && table.overall == expected_overall && sil == Some(1.0),
        detail: format!(
            "per-task table matches: {per_task_ok}; overall {:.6} vs 6/9 with silhouette row {:?} excluded",
            table.overall, sil
        ),
    }
}

fn main() -> ExitCode {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let secs = Duration::from_secs;
    let results = [
        check("ray_casting_correctness", Some(secs(5)), ray_casting),
        check("fill_completeness", Some(secs(10)), fill_completeness),
        check("packing_soundness", Some(secs(30)), packing_soundness),
        check("paper_constants", None, paper_constants),
        check("ground_truth_consistency", Some(secs(60)), || ground_truth(first.path())),
        check("end_to_end_determinism", None, || determinism(first.path(), second.path())),
        check("color_discipline", None, || color_discipline(first.path())),
        check("contrastive_math", None, contrastive),
        check("scoring_convention", None, scoring),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
