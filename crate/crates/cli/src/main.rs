use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use camoplate::dataset::{
    build_cell, generate, read_manifest, read_predictions, score, validate, GenerationPlan, TaskCount,
};
use camoplate::packing::FillFamily;
use camoplate::scene::{ContentSource, TaskKind};
use clap::{Parser, Subcommand};

/// Chromatic-camouflage plate generator.
#[derive(Parser)]
#[command(name = "camoplate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a plan file.
    Gen {
        #[arg(long)]
        plan: PathBuf,
        /// Master seed; overrides the plan's `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a single plate to a PNG and print its question and answer.
    Preview {
        #[arg(long)]
        task: TaskKind,
        #[arg(long)]
        palette: String,
        #[arg(long)]
        fill: FillFamily,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-audit a generated directory. Exits 1 on any violation.
    Validate { dir: PathBuf },
    /// Score JSONL predictions ({id, prediction}) against a manifest.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Print the table as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn content(plan: Option<&GenerationPlan>) -> Result<ContentSource> {
    let canvas = plan.map_or(camoplate::raster::CANVAS_SIZE, |p| p.task_config.canvas);
    ContentSource::from_env(canvas).context("loading silhouette assets")
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { plan, seed, out } => {
            let mut plan = GenerationPlan::load(&plan)?;
            if let Some(s) = seed {
                plan.master_seed = s;
            }
            let report = generate(&plan, &out, &content(Some(&plan))?)?;
            println!(
                "wrote {} records to {} ({} skipped)",
                report.records.len(),
                out.display(),
                report.skipped.len()
            );
        }
        Command::Preview { task, palette, fill, seed, out } => {
            let plan = GenerationPlan {
                tasks: vec![TaskCount { task, count: 1 }],
                palettes: vec![palette],
                fill_families: vec![fill],
                packing: Default::default(),
                task_config: Default::default(),
                master_seed: seed,
            };
            plan.validate()?;
            let cell = &plan.cells()[0];
            let sample = build_cell(&plan, &content(Some(&plan))?, cell)?
                .map_err(|s| anyhow::anyhow!("no valid plate for {}: {}", s.id, s.reason))?;
            fs::write(&out, &sample.image_png).with_context(|| format!("writing {}", out.display()))?;
            println!("question: {}", sample.record.question);
            println!("answer: {}", sample.record.answer);
        }
        Command::Validate { dir } => {
            let report = validate(&dir, &content(None)?)?;
            for m in &report.missing {
                println!("missing {m}");
            }
            for v in &report.violations {
                println!("violation {} [{}] {}", v.id, v.check, v.detail);
            }
            println!(
                "{} records, {} missing files, {} violations",
                report.records,
                report.missing.len(),
                report.violations.len()
            );
            if !report.is_clean() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Score { manifest, predictions, json } => {
            let table = score(&read_manifest(&manifest)?, &read_predictions(&predictions)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&table)?);
            } else {
                for row in table.tasks.iter().chain(&table.silhouette) {
                    println!("{:<16} {:>6}/{:<6} {:.4}", row.name, row.correct, row.total, row.accuracy);
                }
                println!("{:<16} {:>13} {:.4}", "overall", "", table.overall);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
