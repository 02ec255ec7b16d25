use std::fs;
use std::path::Path;

use goldbach_core::cli::records::{read_records, Payload, ReportRecord};
use goldbach_core::cli::run_cli_with;
use goldbach_core::report::{RunReport, SegmentReport};

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

fn records(path: &Path) -> Vec<ReportRecord> {
    read_records(path).unwrap()
}

fn final_run(recs: &[ReportRecord]) -> RunReport {
    let runs: Vec<&RunReport> = recs
        .iter()
        .filter_map(|r| match &r.payload {
            Payload::Run(run) => Some(run),
            _ => None,
        })
        .collect();
    assert_eq!(runs.len(), 1);
    runs[0].without_timings()
}

fn segments(recs: &[ReportRecord]) -> Vec<SegmentReport> {
    let mut segs: Vec<SegmentReport> = recs
        .iter()
        .filter_map(|r| match &r.payload {
            Payload::Segment(s) => Some(s.without_timings()),
            _ => None,
        })
        .collect();
    segs.sort_by_key(|s| s.index);
    segs.dedup();
    segs
}

#[test]
fn segmented_1e8_writes_clean_run_record() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.jsonl");
    let (code, out, _) = run(&[
        "segmented",
        "--limit",
        "100000000",
        "--psmall",
        "1000000",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    let recs = records(&report);
    let run = final_run(&recs);
    assert_eq!(run.failures, 0);
    assert_eq!(run.evens_checked, 49_999_999);
    assert_eq!(run.phases.unwrap().phase2_invocations, 0);
    assert_eq!(segments(&recs).len(), 5);
    let hash = &recs[0].config_hash;
    assert!(recs.iter().all(|r| &r.config_hash == hash));
}

#[test]
fn big_1e50_payload() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("b.jsonl");
    let (code, _, _) = run(&[
        "big",
        "--n",
        "10^50",
        "--deterministic",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let recs = records(&report);
    assert_eq!(recs.len(), 1);
    match &recs[0].payload {
        Payload::Big(b) => {
            assert_eq!(b.p, Some(383));
            assert_eq!(b.status, "found");
            assert_eq!(b.digits, 51);
        }
        other => panic!("unexpected payload {other:?}"),
    }
}

#[test]
fn limit_below_four_is_usage_error() {
    let (code, _, err) = run(&["segmented", "--limit", "3"]);
    assert_eq!(code, 2);
    assert!(err.contains("below 4"), "{err}");
    assert_eq!(run(&["baseline", "--limit", "3"]).0, 2);
    assert_eq!(run(&["global", "--limit", "3"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn resume_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "segmented",
        "--limit",
        "1000000",
        "--seg-size",
        "30000",
        "--psmall",
        "1000",
    ];
    let full = dir.path().join("full.jsonl");
    let mut args = base.to_vec();
    args.extend(["--report", full.to_str().unwrap()]);
    assert_eq!(run(&args).0, 0);

    let part = dir.path().join("part.jsonl");
    let ck = dir.path().join("ck.json");
    let mut args = base.to_vec();
    args.extend([
        "--report",
        part.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
        "--workers",
        "3",
    ]);
    let mut first = args.clone();
    first.extend(["--stop-after", "7"]);
    let (code, out, _) = run(&first);
    assert_eq!(code, 0);
    assert!(out.contains("incomplete"), "{out}");
    assert!(records(&part)
        .iter()
        .all(|r| !matches!(r.payload, Payload::Run(_))));

    // a write cut short by the interruption
    let mut text = fs::read_to_string(&part).unwrap();
    text.push_str("{\"kind\":\"segment\",\"schema_ver");
    fs::write(&part, text).unwrap();

    let mut second = args.clone();
    second.push("--resume");
    let (code, out, err) = run(&second);
    assert_eq!(code, 0, "{out}{err}");
    assert!(out.contains("resuming after:  segment 6"), "{out}");

    let (full_recs, part_recs) = (records(&full), records(&part));
    assert_eq!(final_run(&full_recs), final_run(&part_recs));
    assert_eq!(segments(&full_recs), segments(&part_recs));
}

#[test]
fn resume_rejects_changed_config() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.jsonl");
    let ck = dir.path().join("ck.json");
    let (r, c) = (report.to_str().unwrap(), ck.to_str().unwrap());
    let args = [
        "segmented",
        "--limit",
        "100000",
        "--seg-size",
        "10000",
        "--report",
        r,
        "--checkpoint",
        c,
    ];
    let mut first = args.to_vec();
    first.extend(["--stop-after", "2"]);
    assert_eq!(run(&first).0, 0);
    let (code, _, err) = run(&[
        "segmented",
        "--limit",
        "100000",
        "--seg-size",
        "20000",
        "--report",
        r,
        "--checkpoint",
        c,
        "--resume",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("different configuration"), "{err}");
}

#[test]
fn numeric_shorthands() {
    let (code, out, _) = run(&[
        "single",
        "--n",
        "10^18",
        "--deterministic",
        "--workers",
        "-1",
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("1000000000000000000 = "), "{out}");
    let (code, out, _) = run(&["baseline", "--limit", "1_000"]);
    assert_eq!(code, 0);
    assert!(out.contains("evens checked:   499"), "{out}");
}
