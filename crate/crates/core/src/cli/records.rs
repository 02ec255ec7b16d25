//! Line-delimited JSON report records and the checkpoint file.
//!
//! Every record is one JSON object on its own line with keys in the order
//! `kind`, `schema_version`, `payload`, `config_hash`. Report files are only
//! ever appended to.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::report::{RunReport, SegmentReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Segment,
    Run,
    Single,
    Big,
    Predict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinglePayload {
    pub n: u64,
    pub p: u64,
    pub q: u64,
    pub batch: usize,
    pub deterministic: bool,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BigPayload {
    /// Decimal digits of `n`.
    pub n: String,
    pub digits: usize,
    /// `found`, `inconclusive` or `counterexample`.
    pub status: String,
    pub p: Option<u64>,
    pub q: Option<String>,
    pub rounds: u32,
    pub batch: usize,
    pub seed: u64,
    pub deterministic: bool,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictPayload {
    pub x: u64,
    pub predicted_h: f64,
    pub p_small: u64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Segment(SegmentReport),
    Run(RunReport),
    Single(SinglePayload),
    Big(BigPayload),
    Predict(PredictPayload),
}

impl Payload {
    pub fn kind(&self) -> RecordKind {
        match self {
            Payload::Segment(_) => RecordKind::Segment,
            Payload::Run(_) => RecordKind::Run,
            Payload::Single(_) => RecordKind::Single,
            Payload::Big(_) => RecordKind::Big,
            Payload::Predict(_) => RecordKind::Predict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord")]
pub struct ReportRecord {
    pub kind: RecordKind,
    pub schema_version: u32,
    pub payload: Payload,
    pub config_hash: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    kind: RecordKind,
    schema_version: u32,
    payload: serde_json::Value,
    config_hash: String,
}

impl TryFrom<RawRecord> for ReportRecord {
    type Error = String;

    fn try_from(raw: RawRecord) -> Result<Self, String> {
        if raw.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", raw.schema_version));
        }
        let v = raw.payload;
        let payload = match raw.kind {
            RecordKind::Segment => serde_json::from_value(v).map(Payload::Segment),
            RecordKind::Run => serde_json::from_value(v).map(Payload::Run),
            RecordKind::Single => serde_json::from_value(v).map(Payload::Single),
            RecordKind::Big => serde_json::from_value(v).map(Payload::Big),
            RecordKind::Predict => serde_json::from_value(v).map(Payload::Predict),
        }
        .map_err(|e| e.to_string())?;
        Ok(Self {
            kind: raw.kind,
            schema_version: raw.schema_version,
            payload,
            config_hash: raw.config_hash,
        })
    }
}

impl ReportRecord {
    pub fn new(payload: Payload, config_hash: &str) -> Self {
        Self {
            kind: payload.kind(),
            schema_version: SCHEMA_VERSION,
            payload,
            config_hash: config_hash.to_owned(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        serde_json::from_str(line).map_err(|e| e.to_string())
    }
}

/// Hex SHA-256 of a canonical description of the result-affecting settings.
pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Appends records to a report file, one flushed line each.
pub struct ReportWriter {
    file: File,
}

impl ReportWriter {
    pub fn append(path: &Path) -> io::Result<Self> {
        Ok(Self {
            file: OpenOptions::new().create(true).append(true).open(path)?,
        })
    }

    pub fn write(&mut self, record: &ReportRecord) -> io::Result<()> {
        let mut line = record.to_line();
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }
}

/// Reads every record of a report file. A malformed final line, left by an
/// interrupted write, is skipped; malformed lines elsewhere are errors.
pub fn read_records(path: &Path) -> io::Result<Vec<ReportRecord>> {
    let lines: Vec<String> = BufReader::new(File::open(path)?)
        .lines()
        .collect::<io::Result<_>>()?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut records = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match ReportRecord::from_line(line) {
            Ok(r) => records.push(r),
            Err(_) if Some(i) == last => {}
            Err(e) => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("line {}: {e}", i + 1),
                ));
            }
        }
    }
    Ok(records)
}

/// Drops a trailing partial line left by an interrupted write, so that
/// appending can continue on a line boundary. Returns the bytes removed.
pub fn truncate_partial_tail(path: &Path) -> io::Result<u64> {
    let bytes = fs::read(path)?;
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let removed = (bytes.len() - keep) as u64;
    if removed > 0 {
        OpenOptions::new()
            .write(true)
            .open(path)?
            .set_len(keep as u64)?;
    }
    Ok(removed)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config_hash: String,
    pub last_completed_segment: u64,
}

impl Checkpoint {
    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Writes through a temporary file and a rename, so a reader never
    /// sees a partial checkpoint.
    pub fn store(&self, path: &Path) -> io::Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        fs::write(
            &tmp,
            serde_json::to_string(self).expect("checkpoint serializes"),
        )?;
        fs::rename(&tmp, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{PhaseTotals, Timings};
    use proptest::prelude::*;

    fn segment(index: u64) -> SegmentReport {
        SegmentReport {
            index,
            first_even: 4,
            last_even: 100,
            evens_checked: 49,
            phase1_resolved: 40,
            phase2_invocations: 9,
            phase2_resolved: 9,
            failures: 0,
            failing_n: vec![],
            max_minimal_p: 19,
            witness_n: 98,
            sieve_ms: 0.125,
            verify_ms: 1.0 / 3.0,
        }
    }

    #[test]
    fn key_order_is_fixed() {
        let line = ReportRecord::new(Payload::Segment(segment(0)), "ab").to_line();
        let k = line.find("\"kind\"").unwrap();
        let s = line.find("\"schema_version\"").unwrap();
        let p = line.find("\"payload\"").unwrap();
        let c = line.find("\"config_hash\"").unwrap();
        assert!(k < s && s < p && p < c, "{line}");
        assert!(line.starts_with(r#"{"kind":"segment","schema_version":1,"payload":{"index":0,"#));
    }

    #[test]
    fn round_trip_each_kind() {
        let mut run = RunReport::new("segmented", 1_000);
        run.phases = Some(PhaseTotals {
            segments: 2,
            ..Default::default()
        });
        run.timings = Timings {
            sieve_ms: 1.5,
            check_ms: 2.25,
            total_ms: 0.1,
        };
        let payloads = vec![
            Payload::Segment(segment(3)),
            Payload::Run(run),
            Payload::Single(SinglePayload {
                n: u64::MAX - 1,
                p: 3,
                q: u64::MAX - 4,
                batch: 8,
                deterministic: true,
                elapsed_ms: 0.5,
            }),
            Payload::Big(BigPayload {
                n: "1".repeat(300) + "0",
                digits: 301,
                status: "found".into(),
                p: Some(383),
                q: Some("97".into()),
                rounds: 25,
                batch: 1_000,
                seed: 7,
                deterministic: true,
                elapsed_ms: 3.0,
            }),
            Payload::Predict(PredictPayload {
                x: 10,
                predicted_h: 142.722,
                p_small: 5,
                margin: 0.03,
            }),
        ];
        for p in payloads {
            let r = ReportRecord::new(p, &config_hash("x"));
            assert_eq!(ReportRecord::from_line(&r.to_line()).unwrap(), r);
        }
    }

    #[test]
    fn rejects_mismatched_kind() {
        let line = ReportRecord::new(Payload::Segment(segment(0)), "ab")
            .to_line()
            .replace("\"segment\"", "\"run\"");
        assert!(ReportRecord::from_line(&line).is_err());
        let line = ReportRecord::new(Payload::Segment(segment(0)), "ab")
            .to_line()
            .replace("\"schema_version\":1", "\"schema_version\":2");
        assert!(ReportRecord::from_line(&line).is_err());
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            config_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn file_round_trip_tolerates_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut w = ReportWriter::append(&path).unwrap();
        let a = ReportRecord::new(Payload::Segment(segment(0)), "h");
        let b = ReportRecord::new(Payload::Segment(segment(1)), "h");
        w.write(&a).unwrap();
        w.write(&b).unwrap();
        drop(w);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"kind\":\"seg").unwrap();
        assert_eq!(read_records(&path).unwrap(), vec![a.clone(), b.clone()]);

        let torn = fs::metadata(&path).unwrap().len();
        assert_eq!(truncate_partial_tail(&path).unwrap(), 12);
        assert_eq!(fs::metadata(&path).unwrap().len(), torn - 12);
        assert_eq!(truncate_partial_tail(&path).unwrap(), 0);
        assert_eq!(read_records(&path).unwrap(), vec![a.clone(), b.clone()]);

        fs::write(&path, format!("garbage\n{}\n", a.to_line())).unwrap();
        assert!(read_records(&path).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let ck = Checkpoint {
            schema_version: 1,
            config_hash: "h".into(),
            last_completed_segment: 7,
        };
        ck.store(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            r#"{"schema_version":1,"config_hash":"h","last_completed_segment":7}"#
        );
    }

    proptest! {
        #[test]
        fn segment_records_round_trip(index in any::<u64>(), p in any::<u64>(), ms in 0.0f64..1e9, fails in proptest::collection::vec(any::<u64>(), 0..4)) {
            let mut s = segment(index);
            s.max_minimal_p = p;
            s.verify_ms = ms;
            s.failures = fails.len() as u64;
            s.failing_n = fails;
            let r = ReportRecord::new(Payload::Segment(s), "h");
            prop_assert_eq!(ReportRecord::from_line(&r.to_line()).unwrap(), r);
        }
    }
}
