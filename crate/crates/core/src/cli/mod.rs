//! Command-line front end.
//!
//! Exit codes: 0 on full success, 1 when a counterexample or failure is
//! reported or a search is inconclusive, 2 on usage or precondition errors.

pub mod numbers;
pub mod records;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{self, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::baseline::{ms, verify_range_baseline};
use crate::big::{self, check_big, BigEven, BigOptions};
use crate::envelope::{self, margin_check, predict_h, MARGIN_WARNING};
use crate::error::Error;
use crate::global::{verify_range_global, DEFAULT_MEM_BUDGET};
use crate::report::{RunReport, SegmentReport};
use crate::segmented::{self, run_segmented, VerifierConfig};
use crate::single::{self, check_single};

use numbers::{parse_bytes, parse_u64, parse_workers};
use records::{
    config_hash, read_records, truncate_partial_tail, BigPayload, Checkpoint, Payload,
    PredictPayload, ReportRecord, ReportWriter, SinglePayload, SCHEMA_VERSION,
};

#[derive(Debug, Parser)]
#[command(name = "goldbach", version, about = "Goldbach conjecture verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full odd-only sieve, then a linear partition scan for every even n.
    Baseline(BaselineArgs),
    /// One shared sieve table, evens split across workers.
    Global(GlobalArgs),
    /// Segment-by-segment double sieve with bounded memory.
    Segmented(SegmentedArgs),
    /// Minimal-style partition of one 64-bit even integer.
    Single(SingleArgs),
    /// Partition of an arbitrarily large even integer.
    Big(BigArgs),
    /// Predicted worst-case minimal prime below x.
    PredictH(PredictArgs),
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_parser = parse_u64)]
    limit: u64,
    /// Append JSON records to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    #[arg(long, value_parser = parse_u64)]
    limit: u64,
    /// Worker threads, or -1 for all logical CPUs.
    #[arg(long, default_value = "1", value_parser = parse_workers, allow_hyphen_values = true)]
    workers: usize,
    /// Memory budget in bytes; accepts KiB, MiB and GiB suffixes.
    #[arg(long, value_parser = parse_bytes, default_value_t = DEFAULT_MEM_BUDGET)]
    mem_budget: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SegmentedArgs {
    #[arg(long, value_parser = parse_u64)]
    limit: u64,
    /// Even integers per segment.
    #[arg(long, value_parser = parse_u64, default_value_t = segmented::DEFAULT_SEG_SIZE)]
    seg_size: u64,
    /// Bound of the resident small-primes table.
    #[arg(long, value_parser = parse_u64, default_value_t = segmented::DEFAULT_P_SMALL)]
    psmall: u64,
    /// Small primes tried per Phase 1 pass.
    #[arg(long, default_value_t = segmented::DEFAULT_PRIME_BATCH)]
    prime_batch: usize,
    /// Worker threads, or -1 for all logical CPUs.
    #[arg(long, default_value = "1", value_parser = parse_workers, allow_hyphen_values = true)]
    workers: usize,
    /// Assign segments to workers round-robin.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, value_parser = parse_bytes, default_value_t = DEFAULT_MEM_BUDGET)]
    mem_budget: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Continue from --checkpoint, reusing the segments already in --report.
    #[arg(long, requires_all = ["report", "checkpoint"])]
    resume: bool,
    /// Stop after this many newly verified segments.
    #[arg(long, hide = true)]
    stop_after: Option<u64>,
}

#[derive(Debug, Args)]
struct SingleArgs {
    #[arg(long, value_parser = parse_u64)]
    n: u64,
    #[arg(long, default_value_t = single::DEFAULT_BATCH)]
    batch: usize,
    #[arg(long, default_value = "1", value_parser = parse_workers, allow_hyphen_values = true)]
    workers: usize,
    /// Report the smallest valid p of the first successful batch.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BigArgs {
    /// Decimal digits or a power such as 10^100.
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = big::DEFAULT_ROUNDS)]
    rounds: u32,
    #[arg(long, default_value_t = big::DEFAULT_BATCH)]
    batch: usize,
    #[arg(long, default_value = "1", value_parser = parse_workers, allow_hyphen_values = true)]
    workers: usize,
    #[arg(long, value_parser = parse_u64, default_value_t = big::DEFAULT_SEED)]
    seed: u64,
    /// Report the smallest valid p of the first successful batch.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, value_parser = parse_u64)]
    x: u64,
    #[arg(long, value_parser = parse_u64, default_value_t = segmented::DEFAULT_P_SMALL)]
    psmall: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// A failed command with its exit code.
struct Exit {
    code: i32,
    message: String,
}

impl Exit {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Counterexample { .. } | Error::Inconclusive { .. } => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Exit {
    fn from(e: io::Error) -> Self {
        Self::usage(format!("i/o error: {e}"))
    }
}

type Outcome = std::result::Result<i32, Exit>;

/// Parses `argv` (program name first), runs the command, and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}

/// As [`run_cli`], writing the summary to `out` and diagnostics to `err`.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = match cli.command {
        Command::Baseline(a) => baseline(a, out),
        Command::Global(a) => global(a, out),
        Command::Segmented(a) => segmented_cmd(a, out, err),
        Command::Single(a) => single_cmd(a, out),
        Command::Big(a) => big_cmd(a, out),
        Command::PredictH(a) => predict(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn writer_for(path: &Option<PathBuf>) -> io::Result<Option<ReportWriter>> {
    path.as_deref().map(ReportWriter::append).transpose()
}

fn emit(writer: &mut Option<ReportWriter>, payload: Payload, hash: &str) -> io::Result<()> {
    match writer {
        Some(w) => w.write(&ReportRecord::new(payload, hash)),
        None => Ok(()),
    }
}

fn print_run(out: &mut dyn Write, r: &RunReport) -> io::Result<()> {
    writeln!(out, "verifier:        {}", r.verifier)?;
    writeln!(out, "limit:           {}", r.limit)?;
    writeln!(out, "evens checked:   {}", r.evens_checked)?;
    writeln!(out, "failures:        {}", r.failures)?;
    if !r.failing_n.is_empty() {
        writeln!(out, "failing n:       {:?}", r.failing_n)?;
    }
    writeln!(
        out,
        "max minimal p:   {} (n = {})",
        r.max_minimal_p, r.witness_of_max
    )?;
    if let Some(ph) = &r.phases {
        writeln!(out, "segments:        {}", ph.segments)?;
        writeln!(
            out,
            "phase 1:         {} resolved ({:.4}%)",
            ph.phase1_resolved,
            ph.phase1_success_percent(r.evens_checked)
        )?;
        writeln!(
            out,
            "phase 2:         {} invocations, {} resolved",
            ph.phase2_invocations, ph.phase2_resolved
        )?;
    }
    writeln!(
        out,
        "time:            sieve {:.1} ms, check {:.1} ms, total {:.1} ms",
        r.timings.sieve_ms, r.timings.check_ms, r.timings.total_ms
    )?;
    writeln!(
        out,
        "result:          {}",
        if r.is_success() {
            "verified"
        } else {
            "COUNTEREXAMPLE"
        }
    )?;
    Ok(())
}

fn run_exit(r: &RunReport) -> i32 {
    if r.is_success() {
        0
    } else {
        1
    }
}

fn baseline(a: BaselineArgs, out: &mut dyn Write) -> Outcome {
    let mut writer = writer_for(&a.report)?;
    let report = verify_range_baseline(a.limit)?;
    let hash = config_hash(&format!("baseline;limit={}", a.limit));
    emit(&mut writer, Payload::Run(report.clone()), &hash)?;
    print_run(out, &report)?;
    Ok(run_exit(&report))
}

fn global(a: GlobalArgs, out: &mut dyn Write) -> Outcome {
    let mut writer = writer_for(&a.report)?;
    let report = verify_range_global(a.limit, a.workers, a.mem_budget)?;
    let hash = config_hash(&format!("global;limit={}", a.limit));
    emit(&mut writer, Payload::Run(report.clone()), &hash)?;
    print_run(out, &report)?;
    Ok(run_exit(&report))
}

/// Hash of the settings that determine segment results; worker count,
/// scheduling and file paths are excluded so a resume may change them.
fn segmented_hash(cfg: &VerifierConfig) -> String {
    config_hash(&format!(
        "segmented;limit={};seg_size={};p_small={};prime_batch={}",
        cfg.limit, cfg.seg_size, cfg.p_small, cfg.prime_batch
    ))
}

/// Segment reports `0..=last` recorded under `hash`, first occurrence of
/// each index kept.
fn prior_segments(report: &Path, hash: &str, last: u64) -> Result<Vec<SegmentReport>, Exit> {
    let mut by_index = BTreeMap::new();
    for rec in read_records(report)? {
        if rec.config_hash != hash {
            continue;
        }
        if let Payload::Segment(s) = rec.payload {
            if s.index <= last {
                by_index.entry(s.index).or_insert(s);
            }
        }
    }
    if by_index.len() as u64 != last + 1 {
        return Err(Exit::usage(format!(
            "report {} lacks segments recorded by the checkpoint (have {}, need {})",
            report.display(),
            by_index.len(),
            last + 1
        )));
    }
    Ok(by_index.into_values().collect())
}

fn segmented_cmd(a: SegmentedArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let cfg = VerifierConfig {
        seg_size: a.seg_size,
        p_small: a.psmall,
        prime_batch: a.prime_batch,
        workers: a.workers,
        deterministic: a.deterministic,
        mem_budget: a.mem_budget,
        report_path: a.report.clone(),
        checkpoint_path: a.checkpoint.clone(),
        ..VerifierConfig::new(a.limit)
    };
    cfg.validate()?;
    let hash = segmented_hash(&cfg);

    let mut prior = Vec::new();
    if a.resume {
        let (report, checkpoint) = (
            a.report.as_deref().unwrap(),
            a.checkpoint.as_deref().unwrap(),
        );
        if checkpoint.exists() {
            let ck = Checkpoint::load(checkpoint)?;
            if ck.schema_version != SCHEMA_VERSION || ck.config_hash != hash {
                return Err(Exit::usage(
                    "checkpoint was written for a different configuration",
                ));
            }
            prior = prior_segments(report, &hash, ck.last_completed_segment)?;
        }
        if report.exists() {
            truncate_partial_tail(report)?;
        }
    } else if let Some(report) = &a.report {
        if report.metadata().map(|m| m.len() > 0).unwrap_or(false) {
            return Err(Exit::usage(format!(
                "report {} already exists; pass --resume to continue it",
                report.display()
            )));
        }
    }

    if a.limit >= 10 {
        let margin = margin_check(cfg.p_small, cfg.limit)?;
        writeln!(
            out,
            "predicted H:     {:.3} (p_small / H = {margin:.2})",
            predict_h(cfg.limit)?
        )?;
        if margin < MARGIN_WARNING {
            writeln!(
                err,
                "warning: p_small = {} is only {margin:.2} times the predicted envelope; expect Phase 2 fallbacks",
                cfg.p_small
            )?;
        }
    }
    if !prior.is_empty() {
        writeln!(out, "resuming after:  segment {}", prior.len() - 1)?;
    }

    let mut writer = writer_for(&a.report)?;
    let mut io_error = None;
    let mut fresh = 0u64;
    let outcome = run_segmented(&cfg, &prior, |seg| {
        let step = (|| {
            emit(&mut writer, Payload::Segment(seg.report.clone()), &hash)?;
            if let Some(path) = &a.checkpoint {
                Checkpoint {
                    schema_version: SCHEMA_VERSION,
                    config_hash: hash.clone(),
                    last_completed_segment: seg.report.index,
                }
                .store(path)?;
            }
            io::Result::Ok(())
        })();
        if let Err(e) = step {
            io_error = Some(e);
            return ControlFlow::Break(());
        }
        fresh += 1;
        match a.stop_after {
            Some(k) if fresh >= k => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }

    if !outcome.is_complete() {
        writeln!(
            out,
            "incomplete:      {} of {} segments done; rerun with --resume to continue",
            outcome.completed_segments, outcome.total_segments
        )?;
        return Ok(if outcome.report.failures > 0 { 1 } else { 0 });
    }
    emit(&mut writer, Payload::Run(outcome.report.clone()), &hash)?;
    print_run(out, &outcome.report)?;
    Ok(run_exit(&outcome.report))
}

fn single_cmd(a: SingleArgs, out: &mut dyn Write) -> Outcome {
    let mut writer = writer_for(&a.report)?;
    let start = Instant::now();
    let part = check_single(a.n, a.batch, a.workers, a.deterministic)?;
    let elapsed_ms = ms(start.elapsed());
    writeln!(out, "{} = {} + {}", part.n, part.p, part.q)?;
    writeln!(out, "time: {elapsed_ms:.3} ms")?;
    let hash = config_hash(&format!(
        "single;n={};batch={};deterministic={}",
        a.n, a.batch, a.deterministic
    ));
    let payload = SinglePayload {
        n: part.n,
        p: part.p,
        q: part.q,
        batch: a.batch,
        deterministic: a.deterministic,
        elapsed_ms,
    };
    emit(&mut writer, Payload::Single(payload), &hash)?;
    Ok(0)
}

fn big_cmd(a: BigArgs, out: &mut dyn Write) -> Outcome {
    let n: BigEven = a.n.parse()?;
    let opts = BigOptions {
        workers: a.workers,
        batch: a.batch,
        rounds: a.rounds,
        seed: a.seed,
        deterministic: a.deterministic,
    };
    let mut writer = writer_for(&a.report)?;
    let hash = config_hash(&format!(
        "big;n={};rounds={};batch={};seed={};deterministic={}",
        n.digits(),
        a.rounds,
        a.batch,
        a.seed,
        a.deterministic
    ));
    let digits = n.digits().len();
    let start = Instant::now();
    let result = check_big(&n, &opts);
    let elapsed_ms = ms(start.elapsed());
    let mut payload = BigPayload {
        n: n.digits().to_owned(),
        digits,
        status: String::new(),
        p: None,
        q: None,
        rounds: a.rounds,
        batch: a.batch,
        seed: a.seed,
        deterministic: a.deterministic,
        elapsed_ms,
    };
    let code = match result {
        Ok(part) => {
            writeln!(out, "n digits: {digits}")?;
            writeln!(out, "p:        {}", part.p)?;
            if part.q.len() <= 60 {
                writeln!(out, "q:        {}", part.q)?;
            } else {
                writeln!(
                    out,
                    "q:        {}...{} ({} digits)",
                    &part.q[..20],
                    &part.q[part.q.len() - 20..],
                    part.q.len()
                )?;
            }
            if part.rounds == 0 {
                writeln!(out, "q proven prime by trial division")?;
            } else {
                writeln!(out, "q passed {} Miller-Rabin rounds", part.rounds)?;
            }
            writeln!(out, "time:     {elapsed_ms:.1} ms")?;
            payload.status = "found".into();
            payload.p = Some(part.p);
            payload.q = Some(part.q);
            0
        }
        Err(e @ (Error::Counterexample { .. } | Error::Inconclusive { .. })) => {
            payload.status = match e {
                Error::Counterexample { .. } => "counterexample",
                _ => "inconclusive",
            }
            .into();
            writeln!(out, "{e}")?;
            1
        }
        Err(e) => return Err(e.into()),
    };
    emit(&mut writer, Payload::Big(payload), &hash)?;
    Ok(code)
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Outcome {
    let h = predict_h(a.x)?;
    let margin = margin_check(a.psmall, a.x)?;
    writeln!(out, "x:              {}", a.x)?;
    writeln!(out, "predicted H(x): {h:.3}")?;
    writeln!(out, "p_small / H:    {margin:.2}")?;
    if a.x == 1_000_000_000_000 {
        writeln!(
            out,
            "note:           the quadratic gives {h:.0} here; a commonly quoted estimate is {:.0}",
            envelope::QUOTED_H_1E12
        )?;
    }
    if margin < MARGIN_WARNING {
        writeln!(
            out,
            "warning:        p_small is below {MARGIN_WARNING} times the predicted envelope"
        )?;
    }
    let mut writer = writer_for(&a.report)?;
    let hash = config_hash(&format!("predict;x={};p_small={}", a.x, a.psmall));
    emit(
        &mut writer,
        Payload::Predict(PredictPayload {
            x: a.x,
            predicted_h: h,
            p_small: a.psmall,
            margin,
        }),
        &hash,
    )?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("goldbach").chain(args.iter().copied());
        let code = run_cli_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(&["segmented", "--limit", "3"]).0, 2);
        assert_eq!(run(&["segmented", "--limit", "1000", "--bogus"]).0, 2);
        assert_eq!(run(&[]).0, 2);
        assert_eq!(run(&["--help"]).0, 0);
        assert_eq!(run(&["baseline", "--limit", "10^4"]).0, 0);
        assert_eq!(
            run(&["global", "--limit", "10_000", "--workers", "-1"]).0,
            0
        );
        assert_eq!(
            run(&["global", "--limit", "10^12", "--mem-budget", "8GiB"]).0,
            2
        );
        assert_eq!(run(&["single", "--n", "7"]).0, 2);
        assert_eq!(run(&["big", "--n", "12x"]).0, 2);
        assert_eq!(run(&["single", "--n", "100", "--workers", "0"]).0, 2);
    }

    #[test]
    fn margin_warning_on_small_table() {
        let (code, _, err) = run(&["segmented", "--limit", "100000", "--psmall", "5"]);
        assert_eq!(code, 0);
        assert!(err.contains("warning"), "{err}");
        let (_, _, err) = run(&["segmented", "--limit", "100000"]);
        assert!(!err.contains("warning"), "{err}");
    }

    #[test]
    fn predict_reports_both_values() {
        let (code, out, _) = run(&["predict-h", "--x", "10^12"]);
        assert_eq!(code, 0);
        assert!(out.contains("3533.208"), "{out}");
        assert!(out.contains("2000"), "{out}");
        assert_eq!(run(&["predict-h", "--x", "5"]).0, 2);
    }

    #[test]
    fn single_and_big_summaries() {
        let (code, out, _) = run(&["single", "--n", "98", "--deterministic"]);
        assert_eq!(code, 0);
        assert!(out.contains("98 = 19 + 79"), "{out}");
        let (code, out, _) = run(&["big", "--n", "98", "--deterministic"]);
        assert_eq!(code, 0);
        assert!(out.contains("p:        19"), "{out}");
    }

    #[test]
    fn report_refuses_overwrite_without_resume() {
        let dir = tempfile::tempdir().unwrap();
        let report = dir.path().join("r.jsonl");
        let r = report.to_str().unwrap();
        assert_eq!(
            run(&[
                "segmented",
                "--limit",
                "1000",
                "--seg-size",
                "100",
                "--report",
                r
            ])
            .0,
            0
        );
        assert_eq!(
            run(&[
                "segmented",
                "--limit",
                "1000",
                "--seg-size",
                "100",
                "--report",
                r
            ])
            .0,
            2
        );
        assert_eq!(run(&["segmented", "--limit", "1000", "--resume"]).0, 2);
    }
}
