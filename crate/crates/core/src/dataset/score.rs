//! Exact-match scoring of predictions against a manifest.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_jsonl, SampleRecord};
use crate::error::{Error, Result};
use crate::scene::{AnswerFormat, Quadrant, TaskKind};

/// Predictions for the clean silhouette of a record use `{id}:silhouette`.
/// They are scored in their own row and left out of the overall mean.
pub const SILHOUETTE_SUFFIX: &str = ":silhouette";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub id: String,
    pub prediction: String,
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub name: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl ScoreRow {
    fn new(name: &str, correct: usize, total: usize) -> Self {
        ScoreRow {
            name: name.to_string(),
            correct,
            total,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreTable {
    /// One row per task present in the manifest, in task order.
    pub tasks: Vec<ScoreRow>,
    /// Present when any silhouette prediction was supplied.
    pub silhouette: Option<ScoreRow>,
    /// Unweighted mean of the task rows.
    pub overall: f64,
}

/// Trims, lowercases and collapses internal whitespace to single spaces.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_int(s: &str) -> Option<i64> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn quadrant_sequence(s: &str) -> Option<Vec<Quadrant>> {
    s.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().ok())
        .collect()
}

fn list_items(s: &str) -> Vec<String> {
    s.split(',').map(normalize).collect()
}

/// Whether `prediction` matches the stored `answer` for a record of `task`.
pub fn answers_match(task: TaskKind, format: AnswerFormat, answer: &str, prediction: &str) -> bool {
    match format {
        AnswerFormat::Integer => match (parse_int(&normalize(answer)), parse_int(&normalize(prediction))) {
            (Some(a), Some(p)) => a == p,
            _ => false,
        },
        AnswerFormat::QuadrantLabel | AnswerFormat::QuadrantOrder => {
            match (quadrant_sequence(answer), quadrant_sequence(prediction)) {
                (Some(a), Some(p)) => !a.is_empty() && a == p,
                _ => false,
            }
        }
        _ if task == TaskKind::Enumeration => list_items(answer) == list_items(prediction),
        _ => normalize(answer) == normalize(prediction),
    }
}

/// Per-task accuracy over all manifest records (missing predictions count
/// as wrong). Unknown or repeated prediction ids are input errors.
pub fn score(records: &[SampleRecord], predictions: &[Prediction]) -> Result<ScoreTable> {
    let by_id: HashMap<&str, &SampleRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut plate: HashMap<&str, &str> = HashMap::new();
    let mut clean: HashMap<&str, &str> = HashMap::new();
    for p in predictions {
        let (key, target) = match p.id.strip_suffix(SILHOUETTE_SUFFIX) {
            Some(base) => (base, &mut clean),
            None => (p.id.as_str(), &mut plate),
        };
        if !by_id.contains_key(key) {
            return Err(Error::Input(format!("prediction for unknown id {:?}", p.id)));
        }
        if target.insert(key, &p.prediction).is_some() {
            return Err(Error::Input(format!("duplicate prediction for {:?}", p.id)));
        }
    }
    let hit = |r: &SampleRecord, preds: &HashMap<&str, &str>| {
        preds
            .get(r.id.as_str())
            .is_some_and(|p| answers_match(r.task, r.answer_format, &r.answer, p))
    };
    let mut per_task: BTreeMap<TaskKind, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = per_task.entry(r.task).or_default();
        e.1 += 1;
        if hit(r, &plate) {
            e.0 += 1;
        }
    }
    let tasks: Vec<ScoreRow> = per_task
        .into_iter()
        .map(|(k, (c, t))| ScoreRow::new(k.name(), c, t))
        .collect();
    let overall = if tasks.is_empty() {
        0.0
    } else {
        tasks.iter().map(|r| r.accuracy).sum::<f64>() / tasks.len() as f64
    };
    let silhouette = (!clean.is_empty()).then(|| {
        let correct = records.iter().filter(|r| hit(r, &clean)).count();
        ScoreRow::new("silhouette", correct, records.len())
    });
    Ok(ScoreTable {
        tasks,
        silhouette,
        overall,
    })
}
