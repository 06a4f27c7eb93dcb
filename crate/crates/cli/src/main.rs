//! `digger`: corpus building, characteristic studies, audits and report
//! rendering from the command line.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use digger_core::corpus::{ingest_documents, list_text_files, CorpusManifest, PassagePlan, SplitPlan, TokenizerKind};
use digger_core::oracle::{BuiltinOracle, ExternalOracle, LossTable};
use digger_core::pipeline::{audit, characteristic_study, AuditInputs, AuditReport, StudyInputs, StudyReport};
use digger_core::report::{audit_table, study_table, TableKind};
use digger_core::synth::{write_corpus, SynthConfig};
use digger_core::{Error, Result, Split};
use serde::Serialize;

use config::{AuditRunConfig, OracleConfig, StudyRunConfig};

#[derive(Parser)]
#[command(
    name = "digger",
    version,
    about = "Loss-gap membership inference for language models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or synthesize a corpus.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Repetition and token-length characteristic study.
    #[command(subcommand)]
    Study(RunCmd),
    /// End-to-end membership audit.
    #[command(subcommand)]
    Audit(RunCmd),
    /// Render tables from a stored report.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Check loss-record files.
    #[command(subcommand)]
    Losses(LossesCmd),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Tokenize a directory of .txt files, cut passages and assign splits.
    Build {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        passage_len: usize,
        #[arg(long, default_value_t = 8)]
        passages_per_doc: usize,
        /// Documents per split: baseline,unlearned1,target,unlearned2.
        #[arg(long, default_value = "35,35,15,15")]
        split: SplitPlan,
        #[arg(long, env = "DIGGER_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value = "bytes")]
        tokenizer: TokenizerKind,
    },
    /// Write a seeded synthetic corpus of .txt files.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SynthConfig::default().documents)]
        documents: usize,
        #[arg(long, default_value_t = SynthConfig::default().min_bytes)]
        min_bytes: usize,
        #[arg(long, env = "DIGGER_SEED")]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum RunCmd {
    /// Run from a JSON configuration and write reports into a directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the model seed of the configuration.
        #[arg(long, env = "DIGGER_SEED")]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Render one table from an audit.json or study.json as CSV.
    Render {
        #[arg(long)]
        report: PathBuf,
        /// thresholds, bins, targets, histograms, loss-curve or auc-grid.
        #[arg(long)]
        table: TableKind,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LossesCmd {
    /// Parse a loss-record file and print a JSON summary.
    Validate {
        #[arg(long)]
        file: PathBuf,
    },
}

/// Written next to every run's outputs; the only file with a timestamp.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: &'static str,
    config_fingerprint: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    run_fingerprint: Option<String>,
    seeds: BTreeMap<String, u64>,
    model_ids: BTreeMap<String, String>,
    outputs: Vec<String>,
    warnings: Vec<String>,
    created_unix: u64,
}

impl RunManifest {
    fn new(command: &str, config_fingerprint: String) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config_fingerprint,
            run_fingerprint: None,
            seeds: BTreeMap::new(),
            model_ids: BTreeMap::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    fn write(&self, out: &Path) -> Result<()> {
        write_file(out, "run.json", &(serde_json::to_string_pretty(self)? + "\n"))
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn corpus_build(
    input: &Path,
    out: &Path,
    passage_plan: PassagePlan,
    split: SplitPlan,
    tokenizer: TokenizerKind,
) -> Result<()> {
    let files = list_text_files(input)?;
    let (docs, tok) = ingest_documents(&files, tokenizer)?;
    let (mut manifest, _) = CorpusManifest::build(&docs, tok, passage_plan, split, passage_plan.rng_seed)?;
    create_dir(out)?;
    manifest.relativize_sources(out);
    let json = manifest.to_json()?;
    write_file(out, "manifest.json", &json)?;

    let mut run = RunManifest::new("corpus build", digger_core::fingerprint::sha256_hex(json.as_bytes()));
    run.seeds.insert("split".into(), passage_plan.rng_seed);
    run.outputs.push("manifest.json".into());
    run.warnings = manifest.warnings.clone();
    run.write(out)
}

fn load_manifest_samples(config_path: &Path, manifest: &Path) -> Result<Vec<digger_core::Sample>> {
    let path = config::resolve(config_path, manifest);
    let m = CorpusManifest::load(&path)?;
    m.materialize(path.parent().unwrap_or(Path::new(".")))
}

fn audit_run(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg: AuditRunConfig = config::load(config_path)?;
    let samples = load_manifest_samples(config_path, &cfg.manifest)?;
    let inputs = AuditInputs::from_samples(samples, &cfg.planted_docs, cfg.seen_docs.as_deref());
    let seed = seed.or(cfg.seed);
    let report = match &cfg.oracle {
        OracleConfig::Builtin { model } => {
            let mut model = *model;
            if let Some(s) = seed {
                model.seed = s;
            }
            audit(&BuiltinOracle::new(model)?, &inputs, &cfg.audit)?
        }
        OracleConfig::External { losses, models } => {
            if !cfg.planted_docs.is_empty() {
                return Err(Error::Config("planted_docs needs the builtin oracle".into()));
            }
            let table = LossTable::load(&config::resolve(config_path, losses))?;
            audit(&ExternalOracle::new(table, models.clone())?, &inputs, &cfg.audit)?
        }
    };
    write_audit(&report, out, seed)
}

fn write_audit(report: &AuditReport, out: &Path, seed: Option<u64>) -> Result<()> {
    create_dir(out)?;
    let mut run = RunManifest::new("audit run", report.config_fingerprint.clone());
    run.run_fingerprint = Some(report.run_fingerprint.clone());
    for m in &report.models {
        run.model_ids.insert(m.stage.as_str().into(), m.model_id.clone());
        run.seeds.insert(format!("{}_model", m.stage), m.seed);
    }
    if let Some(s) = seed {
        run.seeds.insert("override".into(), s);
    }
    write_file(out, "audit.json", &report.to_json()?)?;
    run.outputs.push("audit.json".into());
    for kind in [
        TableKind::Thresholds,
        TableKind::Bins,
        TableKind::Targets,
        TableKind::Histograms,
    ] {
        let name = format!("{}.csv", kind.as_str());
        write_file(out, &name, &audit_table(report, kind)?)?;
        run.outputs.push(name);
    }
    run.warnings = report.warnings.clone();
    run.write(out)
}

fn study_run(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg: StudyRunConfig = config::load(config_path)?;
    let samples = load_manifest_samples(config_path, &cfg.manifest)?;
    if let Some(s) = seed.or(cfg.seed) {
        for v in &mut cfg.study.variants {
            v.model.seed = s;
        }
    }
    let mut inputs = StudyInputs::default();
    for s in samples {
        match s.split {
            Split::Spare => inputs.background.push(s),
            Split::Baseline => inputs.learned.push(s),
            Split::Unlearned1 => inputs.unlearned.push(s),
            Split::Target | Split::Unlearned2 => {}
        }
    }
    let report = characteristic_study(&cfg.study, &inputs)?;
    write_study(&report, out)
}

fn write_study(report: &StudyReport, out: &Path) -> Result<()> {
    create_dir(out)?;
    let mut run = RunManifest::new("study run", report.config_fingerprint.clone());
    run.run_fingerprint = Some(report.inputs_fingerprint.clone());
    for v in &report.variants {
        run.model_ids
            .insert(format!("{}_vanilla", v.name), v.vanilla_model_id.clone());
        run.seeds.insert(v.name.clone(), v.model.seed);
    }
    write_file(out, "study.json", &report.to_json()?)?;
    run.outputs.push("study.json".into());
    for kind in [TableKind::LossCurve, TableKind::AucGrid] {
        let name = format!("{}.csv", kind.as_str());
        write_file(out, &name, &study_table(report, kind)?)?;
        run.outputs.push(name);
    }
    run.write(out)
}

fn report_render(path: &Path, table: TableKind, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let csv = if value.get("classifications").is_some() {
        audit_table(&serde_json::from_value::<AuditReport>(value)?, table)?
    } else {
        study_table(&serde_json::from_value::<StudyReport>(value)?, table)?
    };
    match out {
        Some(p) => std::fs::write(p, csv).map_err(|e| Error::io(p, e)),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn losses_validate(path: &Path) -> Result<()> {
    let table = LossTable::load(path)?;
    println!(
        "{}",
        serde_json::json!({"file": path, "records": table.len(), "models": table.model_ids()})
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Corpus(CorpusCmd::Build {
            input,
            out,
            passage_len,
            passages_per_doc,
            split,
            seed,
            tokenizer,
        }) => {
            let plan = PassagePlan {
                passage_len_tokens: passage_len,
                passages_per_doc,
                rng_seed: seed.unwrap_or(0),
            };
            corpus_build(&input, &out, plan, split, tokenizer)
        }
        Command::Corpus(CorpusCmd::Synth {
            out,
            documents,
            min_bytes,
            seed,
        }) => {
            let cfg = SynthConfig {
                documents,
                min_bytes,
                seed: seed.unwrap_or(SynthConfig::default().seed),
                ..SynthConfig::default()
            };
            write_corpus(&cfg, &out).map(|_| ())
        }
        Command::Study(RunCmd::Run { config, out, seed }) => study_run(&config, &out, seed),
        Command::Audit(RunCmd::Run { config, out, seed }) => audit_run(&config, &out, seed),
        Command::Report(ReportCmd::Render { report, table, out }) => report_render(&report, table, out.as_deref()),
        Command::Losses(LossesCmd::Validate { file }) => losses_validate(&file),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({
                "error": e.kind(),
                "stage": e.stage(),
                "message": e.to_string(),
            });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
