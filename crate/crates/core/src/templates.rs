//! Versioned question template table.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scene::TaskKind;

pub const BUILTIN_TEMPLATES: &str = include_str!("../data/question_templates_v1.txt");

const SLOTS: [&str; 3] = ["quadrants", "content", "shapes"];

/// Values substituted into template slots.
#[derive(Debug, Clone, Default)]
pub struct Slots<'a> {
    pub quadrants: &'a str,
    pub content: &'a str,
    pub shapes: &'a str,
}

#[derive(Debug, Clone)]
pub struct QuestionTemplates {
    by_kind: BTreeMap<TaskKind, String>,
    hash: String,
}

impl QuestionTemplates {
    /// Parses `<kind> = <template>` lines. Blank lines and `#` comments are
    /// skipped. Every task kind must appear exactly once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut by_kind = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, body) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("template line {}: missing '='", n + 1)))?;
            let kind: TaskKind = kind
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("template line {}: {e}", n + 1)))?;
            let body = body.trim();
            check_slots(body).map_err(|e| Error::Config(format!("template line {}: {e}", n + 1)))?;
            if by_kind.insert(kind, body.to_string()).is_some() {
                return Err(Error::Config(format!("duplicate template for {kind}")));
            }
        }
        if let Some(missing) = TaskKind::ALL.iter().find(|k| !by_kind.contains_key(k)) {
            return Err(Error::Config(format!("no template for {missing}")));
        }
        Ok(QuestionTemplates {
            by_kind,
            hash: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    pub fn builtin() -> &'static QuestionTemplates {
        static CELL: OnceLock<QuestionTemplates> = OnceLock::new();
        CELL.get_or_init(|| QuestionTemplates::parse(BUILTIN_TEMPLATES).expect("built-in templates parse"))
    }

    /// Lowercase hex SHA-256 of the template file bytes.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn template(&self, kind: TaskKind) -> &str {
        &self.by_kind[&kind]
    }

    pub fn render(&self, kind: TaskKind, slots: &Slots) -> String {
        self.template(kind)
            .replace("{quadrants}", slots.quadrants)
            .replace("{content}", slots.content)
            .replace("{shapes}", slots.shapes)
    }
}

fn check_slots(body: &str) -> std::result::Result<(), String> {
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or("unclosed '{'")?;
        let name = &after[..close];
        if !SLOTS.contains(&name) {
            return Err(format!("unknown slot {{{name}}}"));
        }
        rest = &after[close + 1..];
    }
    Ok(())
}
