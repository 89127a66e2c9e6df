//! Loading, validation and splitting of labeled prompt corpora.
//!
//! Two portable snapshot formats are accepted:
//!
//! - CSV (RFC 4180): header `text,label`, optional third column `split`
//!   with values `train` | `test`.
//! - JSONL: one object per line, required keys `"text"` (string) and
//!   `"label"` (integer 0/1), optional `"split"`.
//!
//! Labels: 0 = legitimate, 1 = malicious. Malformed rows are an error with
//! the offending line number, never silently skipped. Loaded corpora are
//! immutable and record order follows file order exactly.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot infer format of {0}: use .csv/.jsonl or pass the format explicitly")]
    UnknownFormat(String),
    #[error("missing field {field:?} at line {line}")]
    MissingField { field: &'static str, line: usize },
    #[error("label out of range at line {line}")]
    LabelOutOfRange { line: usize },
    #[error("invalid split {value:?} at line {line} (expected train or test)")]
    BadSplit { value: String, line: usize },
    #[error("empty text at line {line}")]
    EmptyText { line: usize },
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("invalid JSON at line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("record {index} has no split tag")]
    MissingSplitTag { index: usize },
}

/// Which partition a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn code(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Split::Train),
            1 => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// One labeled prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptRecord {
    pub text: String,
    /// 0 = legitimate, 1 = malicious.
    pub label: u8,
    pub split: Option<Split>,
}

/// Snapshot file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn infer(path: &Path) -> Result<Self, DatasetError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Format::Csv),
            Some("jsonl") | Some("ndjson") => Ok(Format::Jsonl),
            _ => Err(DatasetError::UnknownFormat(path.display().to_string())),
        }
    }
}

/// Per-split, per-label record tallies; index 0 = legitimate, 1 = malicious.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusCounts {
    pub train: [usize; 2],
    pub test: [usize; 2],
    pub untagged: [usize; 2],
}

impl CorpusCounts {
    pub fn total(&self) -> usize {
        self.train.iter().sum::<usize>()
            + self.test.iter().sum::<usize>()
            + self.untagged.iter().sum::<usize>()
    }
}

/// An ordered, immutable collection of labeled prompts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledCorpus {
    records: Vec<PromptRecord>,
}

impl LabeledCorpus {
    pub fn new(records: Vec<PromptRecord>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[PromptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn counts(&self) -> CorpusCounts {
        let mut counts = CorpusCounts::default();
        for record in &self.records {
            let bucket = match record.split {
                Some(Split::Train) => &mut counts.train,
                Some(Split::Test) => &mut counts.test,
                None => &mut counts.untagged,
            };
            bucket[record.label as usize] += 1;
        }
        counts
    }

    /// Force every record into the given split (two-file ingestion mode).
    pub fn with_split(mut self, split: Split) -> Self {
        for record in &mut self.records {
            record.split = Some(split);
        }
        self
    }

    /// Append another corpus, preserving both orders.
    pub fn concat(mut self, other: LabeledCorpus) -> Self {
        self.records.extend(other.records);
        self
    }

    /// Partition by the stored split tag. No re-shuffling ever happens;
    /// the partition is exactly what the file declared.
    pub fn split(&self) -> Result<(Vec<&PromptRecord>, Vec<&PromptRecord>), DatasetError> {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (index, record) in self.records.iter().enumerate() {
            match record.split {
                Some(Split::Train) => train.push(record),
                Some(Split::Test) => test.push(record),
                None => return Err(DatasetError::MissingSplitTag { index }),
            }
        }
        Ok((train, test))
    }

    /// Write the corpus as JSONL, one record per line.
    pub fn save_jsonl(&self, path: &Path) -> Result<(), DatasetError> {
        let io_err = |source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut file = std::fs::File::create(path).map_err(io_err)?;
        for record in &self.records {
            let mut object = serde_json::json!({
                "text": record.text,
                "label": record.label,
            });
            if let Some(split) = record.split {
                object["split"] = serde_json::json!(split.to_string());
            }
            writeln!(file, "{object}").map_err(io_err)?;
        }
        Ok(())
    }
}

fn validate_record(
    text: String,
    label: i64,
    split: Option<Split>,
    line: usize,
) -> Result<PromptRecord, DatasetError> {
    if !(0..=1).contains(&label) {
        return Err(DatasetError::LabelOutOfRange { line });
    }
    if text.trim().is_empty() {
        return Err(DatasetError::EmptyText { line });
    }
    Ok(PromptRecord {
        text,
        label: label as u8,
        split,
    })
}

fn parse_split(value: &str, line: usize) -> Result<Split, DatasetError> {
    match value {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        other => Err(DatasetError::BadSplit {
            value: other.to_string(),
            line,
        }),
    }
}

/// Load a corpus snapshot. Row order is preserved and loading the same
/// bytes twice yields identical corpora.
pub fn load_corpus(path: &Path, format: Format) -> Result<LabeledCorpus, DatasetError> {
    let body = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        Format::Csv => parse_csv(&body),
        Format::Jsonl => parse_jsonl(&body),
    }
}

fn parse_csv(body: &str) -> Result<LabeledCorpus, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| csv_error(&e))?
        .clone();
    let column = |name: &'static str| headers.iter().position(|h| h == name);
    let text_col = column("text").ok_or(DatasetError::MissingField {
        field: "text",
        line: 1,
    })?;
    let label_col = column("label").ok_or(DatasetError::MissingField {
        field: "label",
        line: 1,
    })?;
    let split_col = column("split");

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(records.len() + 2);
        let text = row
            .get(text_col)
            .ok_or(DatasetError::MissingField { field: "text", line })?
            .to_string();
        let label_raw = row
            .get(label_col)
            .ok_or(DatasetError::MissingField { field: "label", line })?;
        let label: i64 = label_raw
            .trim()
            .parse()
            .map_err(|_| DatasetError::LabelOutOfRange { line })?;
        let split = match split_col.and_then(|c| row.get(c)) {
            Some("") | None => None,
            Some(value) => Some(parse_split(value.trim(), line)?),
        };
        records.push(validate_record(text, label, split, line)?);
    }
    Ok(LabeledCorpus::new(records))
}

fn csv_error(e: &csv::Error) -> DatasetError {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(0);
    DatasetError::Csv {
        line,
        message: e.to_string(),
    }
}

fn parse_jsonl(body: &str) -> Result<LabeledCorpus, DatasetError> {
    let mut records = Vec::new();
    for (i, raw) in body.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(raw).map_err(|e| DatasetError::Json {
                line,
                message: e.to_string(),
            })?;
        let text = value
            .get("text")
            .and_then(|v| v.as_str())
            .ok_or(DatasetError::MissingField { field: "text", line })?
            .to_string();
        let label = value
            .get("label")
            .and_then(|v| v.as_i64())
            .ok_or(DatasetError::MissingField { field: "label", line })?;
        let split = match value.get("split") {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(s)) => Some(parse_split(s, line)?),
            Some(other) => {
                return Err(DatasetError::BadSplit {
                    value: other.to_string(),
                    line,
                })
            }
        };
        records.push(validate_record(text, label, split, line)?);
    }
    Ok(LabeledCorpus::new(records))
}
