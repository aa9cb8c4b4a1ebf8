use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::Args;

use actorsnote_core::report::{comparison_csv, metrics_csv, render_text, survey};
use actorsnote_core::store::export::{decode, sniff_format};
use actorsnote_core::text::{CommandTokenizer, DefaultTokenizer, LexiconSet, Tokenizer};
use actorsnote_core::{
    run_simulation, ExportFormat, ReportOptions, ServiceError, SimulationConfig, SimulationError, Store,
};

use crate::CliError;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of synthetic participants (at least 2); sequences alternate Early-AI, Late-AI.
    #[arg(long)]
    pub participants: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for store.jsonl, export.csv, export.jsonl and survey.csv.
    #[arg(long, default_value = "simulation")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Exported session logs, CSV or JSON Lines (detected from content).
    #[arg(long)]
    pub logs: PathBuf,
    /// Directory holding first_person.txt, introspective.txt and sentiment.txt.
    #[arg(long)]
    pub lexicons: PathBuf,
    /// Output directory for metrics.csv, comparison.csv and report.txt.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional survey CSV (participant_id, sequence, measure, t1, t2, t3).
    #[arg(long)]
    pub survey: Option<PathBuf>,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = actorsnote_core::stats::BOOTSTRAP_RESAMPLES)]
    pub resamples: usize,
    /// Worker threads for per-entry metrics and bootstrap; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Keep only the first saved session per participant and day.
    #[arg(long)]
    pub one_per_day: bool,
    /// External tokenizer command: text on stdin, one `surface[<TAB>POS]` per line on stdout.
    #[arg(long)]
    pub tokenizer_cmd: Option<String>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))
}

fn service_error(e: ServiceError) -> CliError {
    if e.is_provider_error() {
        CliError::Provider(e.to_string())
    } else {
        CliError::data(e)
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.participants < 2 {
        return Err(CliError::Usage(format!("--participants must be at least 2, got {}", args.participants)));
    }
    let started = Instant::now();
    fs::create_dir_all(&args.out).map_err(|e| CliError::Data(format!("creating {}: {e}", args.out.display())))?;
    let store_path = args.out.join("store.jsonl");
    if store_path.exists() {
        return Err(CliError::Data(format!(
            "{} already exists; choose an empty --out directory",
            store_path.display()
        )));
    }
    let store = Arc::new(Store::open(&store_path).map_err(CliError::data)?);
    let out = run_simulation(&SimulationConfig::new(args.participants, args.seed), store.clone()).map_err(|e| match e {
        SimulationError::TooFewParticipants(_) => CliError::Usage(e.to_string()),
        SimulationError::Service(s) => service_error(s),
    })?;
    write(&args.out.join("export.csv"), &store.export_logs(ExportFormat::Csv))?;
    write(&args.out.join("export.jsonl"), &store.export_logs(ExportFormat::Jsonl))?;
    write(&args.out.join("survey.csv"), &survey::to_csv(&out.survey))?;

    let mut by_period = BTreeMap::new();
    for r in &out.rows {
        *by_period.entry(r.period).or_insert(0usize) += 1;
    }
    let periods: Vec<String> = by_period.iter().map(|(p, n)| format!("period {p}: {n}")).collect();
    println!(
        "{} participants, {} sessions ({}) in {:.2}s -> {}",
        out.participants.len(),
        out.rows.len(),
        periods.join(", "),
        started.elapsed().as_secs_f64(),
        args.out.display()
    );
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    if args.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let bytes = fs::read(&args.logs).map_err(|e| CliError::Data(format!("reading {}: {e}", args.logs.display())))?;
    let rows = decode(&bytes, sniff_format(&bytes)).map_err(|e| CliError::Data(format!("{}: {e}", args.logs.display())))?;
    let lexicons = LexiconSet::load_dir(&args.lexicons).map_err(CliError::data)?;
    let survey_rows = match &args.survey {
        None => None,
        Some(p) => {
            let bytes = fs::read(p).map_err(|e| CliError::Data(format!("reading {}: {e}", p.display())))?;
            Some(survey::from_csv(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?)
        }
    };
    let tokenizer: Box<dyn Tokenizer> = match args.tokenizer_cmd.as_deref().map(str::split_whitespace) {
        Some(mut parts) => {
            let program = parts.next().ok_or_else(|| CliError::Usage("--tokenizer-cmd is empty".into()))?;
            Box::new(CommandTokenizer::new(program, parts.map(str::to_string).collect()))
        }
        None => Box::new(DefaultTokenizer),
    };
    let opts = ReportOptions {
        seed: args.seed,
        resamples: args.resamples,
        threads: args.threads,
        one_per_day: args.one_per_day,
    };
    let report = actorsnote_core::analyze(&rows, tokenizer.as_ref(), &lexicons, survey_rows.as_deref(), &opts)
        .map_err(CliError::data)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::Data(format!("creating {}: {e}", args.out.display())))?;
    let text = render_text(&report);
    write(&args.out.join("metrics.csv"), &metrics_csv(&report.metrics))?;
    write(&args.out.join("comparison.csv"), &comparison_csv(&report))?;
    write(&args.out.join("report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
