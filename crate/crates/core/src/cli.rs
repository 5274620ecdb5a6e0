//! Command-line surface.
//!
//! `construct` runs or resumes a construction and writes a checkpoint;
//! `emit` prints digit streams from a checkpoint; `verify` re-runs all
//! invariants of a checkpoint; `analyze` computes discrepancies of a digit
//! stream file as CSV; `bounds` exposes the bound calculators. Digit stream
//! output follows one convention: cf streams are newline-separated decimal
//! integers (integer part first), base-b streams are a single line
//! `<integer part>.` followed by contiguous digit characters for bases up
//! to 10 and comma-separated digits above.

use crate::certified::{decimal_string, CertifiedReal, RoundDir};
use crate::checkpoint;
use crate::construction::{
    emit_digits, step, ConstructionConfig, ConstructionError, ConstructionState, DigitStream,
    OverrideEntry, StreamKind, Target,
};
use crate::discrepancy::{bary_discrepancy, cf_discrepancy, DiscrepancyError};
use crate::measures::{
    a_of_b_at, bernstein_bound, kpw_bound_at, schedule, MeasureError,
};
use crate::rational::{rational_from_str, CfError, CfWord, Rational};
use crate::refinement::SearchMode;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::Zero;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Checkpoint(#[from] checkpoint::CheckpointError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Discrepancy(#[from] DiscrepancyError),
    #[error(transparent)]
    Word(#[from] CfError),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl CliError {
    fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cfnorm", version, about = "Exact digit streams for a number and its reciprocal, both with certified low-discrepancy prefixes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run (or resume) the construction for a number of steps.
    Construct(ConstructArgs),
    /// Print determined digits of x or 1/x from a checkpoint.
    Emit(EmitArgs),
    /// Re-run every invariant of a checkpoint.
    Verify(VerifyArgs),
    /// Discrepancy analysis of a digit stream file, as CSV.
    Analyze(AnalyzeArgs),
    /// Bound and schedule calculators.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Search,
    Schedule,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Total number of refinement steps.
    #[arg(long)]
    pub steps: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Search)]
    pub mode: ModeArg,
    #[arg(long = "n-start", default_value_t = 5)]
    pub n_start: u32,
    /// Brick length slack as a rational "p/q" (default 64 e^{4C} rounded up).
    #[arg(long)]
    pub slack: Option<String>,
    #[arg(long, default_value_t = 96)]
    pub precision: u32,
    #[arg(long = "n-ceiling", default_value_t = 64)]
    pub n_ceiling: u64,
    /// Checkpoint path; an existing file is resumed, the result is written back.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// JSON file with rows {"from_step": .., "t": .., "epsilon": "p/q"?}.
    #[arg(long = "schedule-override")]
    pub schedule_override: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetArg {
    X,
    Inv,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum)]
    pub target: TargetArg,
    /// "cf" or "base:B".
    #[arg(long)]
    pub kind: String,
    /// Number of digits to print.
    #[arg(long)]
    pub count: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Digit stream file.
    #[arg(long)]
    pub digits: PathBuf,
    /// Base of the stream; mutually exclusive with --cf.
    #[arg(long)]
    pub base: Option<u32>,
    /// Treat the stream as continued-fraction digits.
    #[arg(long, default_value_t = false)]
    pub cf: bool,
    /// Pattern file, one pattern per line; defaults to single digits.
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub precision: u32,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(subcommand)]
    pub which: BoundsCommand,
}

#[derive(Debug, Subcommand)]
pub enum BoundsCommand {
    /// Large-deviation bound 6 M e^{-delta^2 n / (2M)}.
    Kpw {
        #[arg(long)]
        delta: String,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 64)]
        precision: u32,
    },
    /// Bad-block mass bound 2 b^{n+1} e^{-b delta^2 n / 6}.
    Bernstein {
        #[arg(long)]
        base: u32,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        n: u64,
    },
    /// A(b) = 384 e^{4C} b^2 e^{b eps^2 (C/(3 log b) + 1/2)}.
    Aofb {
        #[arg(long)]
        base: u32,
        #[arg(long)]
        epsilon: String,
        #[arg(long)]
        c: u32,
        #[arg(long, default_value_t = 64)]
        precision: u32,
    },
    /// Step schedule t(s), epsilon(s), n0(s).
    Schedule {
        #[arg(long)]
        s: String,
        #[arg(long = "n-start", default_value_t = 5)]
        n_start: u32,
    },
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Construct(args) => construct(args, out),
        Command::Emit(args) => emit(args, out),
        Command::Verify(args) => verify(args, out),
        Command::Analyze(args) => analyze(args, out),
        Command::Bounds(args) => bounds(args, out),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn parse_override_file(path: &Path) -> Result<Vec<OverrideEntry>, CliError> {
    #[derive(serde::Deserialize)]
    struct Row {
        from_step: u64,
        t: u32,
        epsilon: Option<String>,
    }
    let text = read_file(path)?;
    let rows: Vec<Row> = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse override table: {e}")))?;
    rows.into_iter()
        .map(|row| {
            let epsilon = match row.epsilon {
                Some(s) => rational_from_str(&s)?,
                None => Rational::new(1.into(), BigInt::from(row.t)),
            };
            Ok(OverrideEntry {
                from_step: row.from_step,
                t: row.t,
                epsilon,
            })
        })
        .collect()
}

fn construct(args: ConstructArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = ConstructionConfig {
        mode: match args.mode {
            ModeArg::Search => SearchMode::Search,
            ModeArg::Schedule => SearchMode::Schedule,
        },
        n_start: args.n_start,
        precision_bits: args.precision,
        n_ceiling: args.n_ceiling,
        ..ConstructionConfig::default()
    };
    if let Some(slack) = &args.slack {
        config.slack = rational_from_str(slack)?;
    }
    if let Some(path) = &args.schedule_override {
        config.schedule_override = Some(parse_override_file(path)?);
    }

    let mut state = match &args.checkpoint {
        Some(path) if path.exists() => {
            let restored = checkpoint::from_json(&read_file(path)?)?;
            writeln!(
                out,
                "resumed from {} at step {} ({} steps done)",
                path.display(),
                restored.step,
                restored.steps_completed()
            )
            .ok();
            restored
        }
        _ => ConstructionState::init(config)?,
    };

    while state.steps_completed() < args.steps {
        state = step(&state)?;
        let record = state.history.last().expect("a step was just recorded");
        writeln!(
            out,
            "step {}: t={} epsilon={} n={} block=[{}]",
            record.step, record.t, record.epsilon, record.n_used, record.block
        )
        .ok();
    }

    writeln!(
        out,
        "done: {} steps, {} cf digits, base-2 digits x/y: {}/{}",
        state.steps_completed(),
        state.emitted_cf.len(),
        state.emitted_bary.get(&2).map_or(0, |s| s.x.len()),
        state.emitted_bary.get(&2).map_or(0, |s| s.y.len()),
    )
    .ok();

    if let Some(path) = &args.checkpoint {
        write_file(path, &checkpoint::to_json(&state))?;
        writeln!(out, "checkpoint written to {}", path.display()).ok();
    }
    Ok(())
}

fn parse_kind(kind: &str) -> Result<StreamKind, CliError> {
    if kind == "cf" {
        return Ok(StreamKind::Cf);
    }
    if let Some(b) = kind.strip_prefix("base:") {
        let base: u32 = b
            .parse()
            .map_err(|_| CliError::Usage(format!("bad base in --kind {kind:?}")))?;
        return Ok(StreamKind::Base(base));
    }
    Err(CliError::Usage(format!(
        "--kind must be \"cf\" or \"base:B\", got {kind:?}"
    )))
}

fn emit(args: EmitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let state = checkpoint::from_json(&read_file(&args.checkpoint)?)?;
    let target = match args.target {
        TargetArg::X => Target::X,
        TargetArg::Inv => Target::OneOverX,
    };
    let kind = parse_kind(&args.kind)?;
    let stream = emit_digits(&state, target, kind)?;
    match stream {
        DigitStream::Cf {
            integer_part,
            digits,
        } => {
            if (args.count as usize) > digits.len() {
                return Err(ConstructionError::NotEnoughDigits {
                    requested: args.count,
                    available: digits.len() as u64,
                }
                .into());
            }
            writeln!(out, "{integer_part}").ok();
            for d in digits.iter().take(args.count as usize) {
                writeln!(out, "{d}").ok();
            }
        }
        DigitStream::Bary {
            base,
            integer_part,
            digits,
        } => {
            if (args.count as usize) > digits.len() {
                return Err(ConstructionError::NotEnoughDigits {
                    requested: args.count,
                    available: digits.len() as u64,
                }
                .into());
            }
            let shown = &digits[..args.count as usize];
            let rendered: String = if base <= 10 {
                shown.iter().map(|d| d.to_string()).collect()
            } else {
                shown
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            writeln!(out, "{integer_part}.{rendered}").ok();
        }
    }
    Ok(())
}

fn verify(args: VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    // restoring re-checks the hash, the pair invariants, and stream prefixes
    let state = checkpoint::from_json(&read_file(&args.checkpoint)?)?;
    let diag = state.validate();
    for check in &diag.checks {
        writeln!(
            out,
            "{}: {}",
            check.name,
            if check.passed { "ok" } else { "FAILED" }
        )
        .ok();
    }
    writeln!(
        out,
        "emitted streams: cf {} digits, {} base entries",
        state.emitted_cf.len(),
        state.emitted_bary.len()
    )
    .ok();
    if diag.all_passed() {
        writeln!(out, "all invariants hold at step {}", state.step).ok();
        Ok(())
    } else {
        let names: Vec<String> = diag.failures().iter().map(|c| c.name.clone()).collect();
        Err(CliError::VerificationFailed(names.join(", ")))
    }
}

fn enclosure_csv(value: &CertifiedReal) -> (String, String) {
    (
        decimal_string(value.lower(), 15, RoundDir::Down),
        decimal_string(value.upper(), 15, RoundDir::Up),
    )
}

fn analyze(args: AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.cf == args.base.is_some() {
        return Err(CliError::Usage(
            "exactly one of --cf and --base must be given".into(),
        ));
    }
    let text = read_file(&args.digits)?;
    writeln!(out, "pattern,n,count,discrepancy_lower,discrepancy_upper").ok();
    if args.cf {
        let digits: Vec<u64> = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u64>()
                    .map_err(|_| CliError::Usage(format!("bad cf digit {tok:?}")))
            })
            .collect::<Result<_, _>>()?;
        let word = CfWord::new(digits)?;
        let patterns: Vec<CfWord> = match &args.patterns {
            None => (1..=3u64)
                .map(|d| CfWord::new(vec![d]).expect("positive"))
                .collect(),
            Some(path) => read_file(path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(CfWord::parse)
                .collect::<Result<_, _>>()?,
        };
        for pattern in &patterns {
            let r = cf_discrepancy(&word, pattern, args.precision)?;
            let (lo, hi) = enclosure_csv(&r.value);
            writeln!(
                out,
                "{},{},{},{},{}",
                pattern, r.prefix_length, r.occurrence_count, lo, hi
            )
            .ok();
        }
    } else {
        let base = args.base.expect("checked above");
        if base < 2 {
            return Err(CliError::Usage("base must be at least 2".into()));
        }
        let digits: Vec<u32> = if base <= 10 {
            text.chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| {
                    c.to_digit(10)
                        .ok_or_else(|| CliError::Usage(format!("bad digit {c:?}")))
                })
                .collect::<Result<_, _>>()?
        } else {
            text.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|tok| !tok.is_empty())
                .map(|tok| {
                    tok.parse::<u32>()
                        .map_err(|_| CliError::Usage(format!("bad digit {tok:?}")))
                })
                .collect::<Result<_, _>>()?
        };
        let result = bary_discrepancy(&digits, base)?;
        let patterns: Vec<u32> = match &args.patterns {
            None => (0..base).collect(),
            Some(path) => read_file(path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    l.trim()
                        .parse::<u32>()
                        .map_err(|_| CliError::Usage(format!("bad pattern {l:?}")))
                })
                .collect::<Result<_, _>>()?,
        };
        for digit in patterns {
            let deviation = result
                .per_digit
                .get(&digit)
                .cloned()
                .unwrap_or_else(Rational::zero);
            let count = digits.iter().filter(|&&d| d == digit).count();
            writeln!(
                out,
                "{},{},{},{},{}",
                digit,
                result.prefix_length,
                count,
                decimal_string(&deviation, 15, RoundDir::Down),
                decimal_string(&deviation, 15, RoundDir::Up),
            )
            .ok();
        }
    }
    Ok(())
}

fn bounds(args: BoundsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    match args.which {
        BoundsCommand::Kpw {
            delta,
            n,
            k,
            precision,
        } => {
            let delta = rational_from_str(&delta)?;
            let value = kpw_bound_at(&delta, n, k, precision)?;
            writeln!(out, "{value}").ok();
        }
        BoundsCommand::Bernstein { base, delta, n } => {
            let delta = rational_from_str(&delta)?;
            let value = bernstein_bound(base, &delta, n)?;
            writeln!(out, "{value}").ok();
        }
        BoundsCommand::Aofb {
            base,
            epsilon,
            c,
            precision,
        } => {
            let epsilon = rational_from_str(&epsilon)?;
            let value = a_of_b_at(base, &epsilon, c, precision)?;
            writeln!(out, "{value}").ok();
        }
        BoundsCommand::Schedule { s, n_start } => {
            let s: BigInt = s
                .parse()
                .map_err(|_| CliError::Usage(format!("bad step index {s:?}")))?;
            let sched = schedule(&s, n_start)?;
            writeln!(
                out,
                "t={} epsilon={} n0={}",
                sched.t, sched.epsilon, sched.n0
            )
            .ok();
        }
    }
    Ok(())
}
