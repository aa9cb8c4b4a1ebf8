use std::fs;
use std::path::{Path, PathBuf};

use clap::Subcommand;

use actorsnote_core::report::{analyze_survey, survey, SurveyAnalysis};
use actorsnote_core::stats::{
    ancova_period2, bh_fdr, cohen_d_independent, fixed_effect_meta, pooled_t, welch_t, wilson_ci,
    CONTRAST_ADJUSTMENT_NOTE,
};

use crate::CliError;

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Welch (or pooled) two-sample t-test on two one-column CSV files.
    Welch {
        a: PathBuf,
        b: PathBuf,
        /// Column to read when the files have a header row (default: the first column).
        #[arg(long)]
        column: Option<String>,
        /// Student's pooled-variance test instead of Welch.
        #[arg(long)]
        pooled: bool,
    },
    /// Benjamini-Hochberg adjusted q-values for comma-separated p-values.
    Fdr { p_values: String },
    /// Wilson score interval for SUCCESSES out of TRIALS.
    Wilson {
        successes: u64,
        trials: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Fixed-effect inverse-variance pooling; CSV with columns estimate, se.
    Meta { file: PathBuf },
    /// outcome ~ baseline + group; CSV with columns outcome, baseline, group (0/1).
    Ancova { file: PathBuf },
    /// Group x Time mixed ANOVA per measure of a survey CSV.
    Anova {
        file: PathBuf,
        #[arg(long)]
        measure: Option<String>,
    },
    /// Sequence comparison of period-2 + period-3 sums per measure of a survey CSV.
    Carryover {
        file: PathBuf,
        #[arg(long)]
        measure: Option<String>,
    },
    /// The 9 pairwise contrasts per measure of a survey CSV.
    Contrasts {
        file: PathBuf,
        #[arg(long)]
        measure: Option<String>,
    },
}

/// Up to 6 decimals without trailing zeros.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    rdr.records()
        .filter(|r| !matches!(r, Ok(rec) if rec.iter().all(str::is_empty)))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// One numeric column. A non-numeric first row is taken as a header.
fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>, CliError> {
    let records = read_records(path)?;
    let has_header = records
        .first()
        .and_then(|r| r.get(0))
        .is_some_and(|f| parse_number(f).is_none());
    let index = match (column, has_header) {
        (None, _) => 0,
        (Some(name), true) => records[0]
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("{}: no column '{name}'", path.display())))?,
        (Some(_), false) => return Err(CliError::Data(format!("{}: --column needs a header row", path.display()))),
    };
    let skip = usize::from(has_header);
    records
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(i, r)| {
            r.get(index)
                .and_then(parse_number)
                .ok_or_else(|| CliError::Data(format!("{}: row {}: expected a number", path.display(), i + 1)))
        })
        .collect()
}

/// Named numeric columns from a CSV with a header row.
fn read_table<const N: usize>(path: &Path, names: [&str; N]) -> Result<[Vec<f64>; N], CliError> {
    let records = read_records(path)?;
    let header = records
        .first()
        .ok_or_else(|| CliError::Data(format!("{}: empty file", path.display())))?;
    let mut idx = [0usize; N];
    for (k, name) in names.iter().enumerate() {
        idx[k] = header
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| CliError::Data(format!("{}: missing column '{name}'", path.display())))?;
    }
    let mut out: [Vec<f64>; N] = std::array::from_fn(|_| Vec::new());
    for (i, r) in records.iter().enumerate().skip(1) {
        for k in 0..N {
            let v = r.get(idx[k]).and_then(parse_number).ok_or_else(|| {
                CliError::Data(format!("{}: row {}, column '{}': expected a number", path.display(), i + 1, names[k]))
            })?;
            out[k].push(v);
        }
    }
    Ok(out)
}

fn survey_analyses(path: &Path, measure: Option<&str>) -> Result<Vec<SurveyAnalysis>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    let mut rows = survey::from_csv(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if let Some(m) = measure {
        rows.retain(|r| r.measure == m);
        if rows.is_empty() {
            return Err(CliError::Data(format!("{}: no rows for measure '{m}'", path.display())));
        }
    }
    Ok(analyze_survey(&rows))
}

fn header(s: &SurveyAnalysis) {
    println!("{} (early_ai n={}, late_ai n={})", s.measure, s.n_early, s.n_late);
}

fn notes(s: &SurveyAnalysis, prefix: &str) -> Result<(), CliError> {
    let relevant: Vec<&String> = s.notes.iter().filter(|n| n.starts_with(prefix)).collect();
    if relevant.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{}: {}", s.measure, relevant[0])))
    }
}

pub fn run(cmd: &StatsCommand) -> Result<(), CliError> {
    match cmd {
        StatsCommand::Welch { a, b, column, pooled } => {
            let xa = read_column(a, column.as_deref())?;
            let xb = read_column(b, column.as_deref())?;
            let r = if *pooled { pooled_t(&xa, &xb) } else { welch_t(&xa, &xb) }.map_err(CliError::data)?;
            let d = cohen_d_independent(&xa, &xb).map(num).unwrap_or_else(|_| "nan".into());
            println!("t={} df={} p={} d_s={d}", num(r.statistic), num(r.df), num(r.p_two_sided));
        }
        StatsCommand::Fdr { p_values } => {
            let p: Vec<f64> = p_values
                .split(',')
                .map(|s| parse_number(s).ok_or_else(|| CliError::Usage(format!("not a p-value: '{}'", s.trim()))))
                .collect::<Result<_, _>>()?;
            let q = bh_fdr(&p).map_err(|e| CliError::Usage(e.to_string()))?;
            println!("{}", q.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "));
        }
        StatsCommand::Wilson { successes, trials, level } => {
            let (lo, hi) = wilson_ci(*successes, *trials, *level).map_err(|e| CliError::Usage(e.to_string()))?;
            println!("{lo:.3} {hi:.3}");
        }
        StatsCommand::Meta { file } => {
            let [est, se] = read_table(file, ["estimate", "se"])?;
            let m = fixed_effect_meta(&est, &se).map_err(CliError::data)?;
            println!("beta={} se={} z={} p={}", num(m.beta), num(m.se), num(m.z), num(m.p));
        }
        StatsCommand::Ancova { file } => {
            let [y, base, group] = read_table(file, ["outcome", "baseline", "group"])?;
            let fit = ancova_period2(&y, &base, &group).map_err(CliError::data)?;
            for (k, name) in ["intercept", "baseline", "group"].iter().enumerate() {
                println!("{name:<9} beta={} se={}", num(fit.coefficients[k]), num(fit.se[k]));
            }
            let eta = fit.group.effect_size.map(|e| e.value).unwrap_or(f64::NAN);
            println!(
                "group     t={} df={} p={} partial_eta_sq={}",
                num(fit.group.statistic),
                num(fit.df),
                num(fit.group.p_two_sided),
                num(eta)
            );
        }
        StatsCommand::Anova { file, measure } => {
            for s in survey_analyses(file, measure.as_deref())? {
                notes(&s, "anova")?;
                let a = s.anova.expect("anova present when no anova note");
                header(&s);
                for (name, f, df, p) in [
                    ("group", a.f_group, a.df_group, a.p_group),
                    ("time", a.f_time, a.df_time, a.p_time),
                    ("group_x_time", a.f_interaction, a.df_interaction, a.p_interaction),
                ] {
                    println!("  {name:<12} F({},{})={} p={}", num(df.0), num(df.1), num(f), num(p));
                }
            }
        }
        StatsCommand::Carryover { file, measure } => {
            for s in survey_analyses(file, measure.as_deref())? {
                notes(&s, "carryover")?;
                let c = s.carryover.expect("carryover present when no carryover note");
                header(&s);
                println!(
                    "  t={} df={} p={} carryover={}",
                    num(c.result.statistic),
                    num(c.result.df),
                    num(c.result.p_two_sided),
                    if c.carryover { "yes" } else { "no" }
                );
            }
        }
        StatsCommand::Contrasts { file, measure } => {
            println!("# {CONTRAST_ADJUSTMENT_NOTE}");
            for s in survey_analyses(file, measure.as_deref())? {
                notes(&s, "contrasts")?;
                header(&s);
                for c in &s.contrasts {
                    let eff = c
                        .result
                        .effect_size
                        .map(|e| format!(" {}={}", e.kind.as_str(), num(e.value)))
                        .unwrap_or_default();
                    println!(
                        "  {:<22} t={} df={} p={} q={}{eff}",
                        c.label,
                        num(c.result.statistic),
                        num(c.result.df),
                        num(c.result.p_two_sided),
                        num(c.q)
                    );
                }
            }
        }
    }
    Ok(())
}
