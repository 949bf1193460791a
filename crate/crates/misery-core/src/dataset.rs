//! Dataset loading, validation, summary statistics and seeded sampling.
//!
//! The on-disk format is UTF-8 comma-separated text with a header row
//! `statement,score[,category]`. Fields may be double-quoted with `""`
//! escaping the quote character (the usual CSV convention); rows end in
//! `\n` or `\r\n`. Statements are trimmed of surrounding whitespace and
//! otherwise left untouched. Ids are assigned by data-row order,
//! starting at 1.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::{IndexSampler, SplitMix64};

/// One dataset row: an event description and its ground-truth misery
/// score on the 0-100 scale. The category label is carried as metadata
/// only and never used in scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiseryRecord {
    pub id: u64,
    pub statement: String,
    pub score: f64,
    pub category: Option<String>,
}

/// Summary statistics over a dataset, in misery units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator).
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DatasetError {
    #[error("data row {row}: {problem}")]
    MalformedRow { row: usize, problem: String },
    #[error("data row {row}: score {score} outside [0, 100]")]
    ScoreOutOfRange { row: usize, score: f64 },
    #[error("data row {row}: statement is empty")]
    EmptyStatement { row: usize },
    #[error("header must be `statement,score` or `statement,score,category`, got `{0}`")]
    BadHeader(String),
    #[error("dataset contains no data rows")]
    Empty,
    #[error("duplicate record id {0}")]
    DuplicateId(u64),
    #[error("summary needs at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("cannot sample {requested} from {available} records")]
    SampleTooLarge { requested: usize, available: usize },
}

/// A validated, immutable collection of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<MiseryRecord>,
}

impl Dataset {
    /// Wraps pre-built records, checking the dataset invariants:
    /// unique ids, non-empty trimmed statements, scores in [0, 100].
    pub fn new(records: Vec<MiseryRecord>) -> Result<Self, DatasetError> {
        if records.is_empty() {
            return Err(DatasetError::Empty);
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for (i, rec) in records.iter().enumerate() {
            let row = i + 1;
            if rec.statement.trim().is_empty() {
                return Err(DatasetError::EmptyStatement { row });
            }
            if !(0.0..=100.0).contains(&rec.score) {
                return Err(DatasetError::ScoreOutOfRange {
                    row,
                    score: rec.score,
                });
            }
            if !seen.insert(rec.id) {
                return Err(DatasetError::DuplicateId(rec.id));
            }
        }
        Ok(Self { records })
    }

    /// Parses CSV text with header `statement,score[,category]`.
    pub fn from_csv(text: &str) -> Result<Self, DatasetError> {
        let mut rows = parse_csv_rows(text);
        if rows.is_empty() {
            return Err(DatasetError::Empty);
        }
        let header = rows.remove(0);
        let header_norm: Vec<String> = header.iter().map(|f| f.trim().to_lowercase()).collect();
        let has_category = match header_norm.len() {
            2 if header_norm == ["statement", "score"] => false,
            3 if header_norm == ["statement", "score", "category"] => true,
            _ => return Err(DatasetError::BadHeader(header.join(","))),
        };
        let want = if has_category { 3 } else { 2 };

        let mut records = Vec::with_capacity(rows.len());
        for (i, fields) in rows.into_iter().enumerate() {
            let row = i + 1;
            if fields.len() != want {
                return Err(DatasetError::MalformedRow {
                    row,
                    problem: format!("expected {want} fields, got {}", fields.len()),
                });
            }
            let statement = fields[0].trim().to_string();
            if statement.is_empty() {
                return Err(DatasetError::EmptyStatement { row });
            }
            let score_text = fields[1].trim();
            let score: f64 = score_text.parse().map_err(|_| DatasetError::MalformedRow {
                row,
                problem: format!("non-numeric score `{score_text}`"),
            })?;
            if !(0.0..=100.0).contains(&score) {
                return Err(DatasetError::ScoreOutOfRange { row, score });
            }
            let category = if has_category {
                let c = fields[2].trim();
                (!c.is_empty()).then(|| c.to_string())
            } else {
                None
            };
            records.push(MiseryRecord {
                id: row as u64,
                statement,
                score,
                category,
            });
        }
        if records.is_empty() {
            return Err(DatasetError::Empty);
        }
        Ok(Self { records })
    }

    /// Serializes back to CSV. The category column is emitted when any
    /// record carries one. Reloading the output yields equal records
    /// (ids are positional, so they are reproduced for loaded data).
    pub fn to_csv(&self) -> String {
        let with_category = self.records.iter().any(|r| r.category.is_some());
        let mut out = String::new();
        out.push_str(if with_category {
            "statement,score,category\n"
        } else {
            "statement,score\n"
        });
        for rec in &self.records {
            out.push_str(&csv_field(&rec.statement));
            out.push(',');
            out.push_str(&format_score(rec.score));
            if with_category {
                out.push(',');
                if let Some(c) = &rec.category {
                    out.push_str(&csv_field(c));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn records(&self) -> &[MiseryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summarize(&self) -> Result<DatasetSummary, DatasetError> {
        summarize(&self.records)
    }

    pub fn sample_without_replacement(
        &self,
        n: usize,
        rng: &mut SplitMix64,
    ) -> Result<Vec<MiseryRecord>, DatasetError> {
        sample_without_replacement(&self.records, n, rng)
    }
}

/// Count, mean, sample standard deviation (n-1), min, max, and the
/// 25th/50th/75th percentiles by linear interpolation between closest
/// ranks: for fraction `p`, `h = (n-1)p` and the value is
/// `x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] - x[floor(h)])`
/// over the ascending sort.
pub fn summarize(records: &[MiseryRecord]) -> Result<DatasetSummary, DatasetError> {
    if records.len() < 2 {
        return Err(DatasetError::TooFewRecords(records.len()));
    }
    let n = records.len();
    let mut scores: Vec<f64> = records.iter().map(|r| r.score).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));

    let mean = scores.iter().sum::<f64>() / n as f64;
    let ss: f64 = scores.iter().map(|x| (x - mean) * (x - mean)).sum();
    let std_dev = libm::sqrt(ss / (n - 1) as f64);

    Ok(DatasetSummary {
        count: n,
        mean,
        std_dev,
        min: scores[0],
        max: scores[n - 1],
        p25: percentile_sorted(&scores, 0.25),
        p50: percentile_sorted(&scores, 0.50),
        p75: percentile_sorted(&scores, 0.75),
    })
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Draws `n` distinct records. Identical `(records, n, seed)` produce
/// identical output; see [`crate::rng`] for the exact draw algorithm.
pub fn sample_without_replacement(
    records: &[MiseryRecord],
    n: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<MiseryRecord>, DatasetError> {
    if n > records.len() {
        return Err(DatasetError::SampleTooLarge {
            requested: n,
            available: records.len(),
        });
    }
    let mut sampler = IndexSampler::new(records.len());
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let idx = sampler.draw(rng).expect("sampler sized to records");
        out.push(records[idx].clone());
    }
    Ok(out)
}

/// Renders a score the way prompts and CSV output show it: integral
/// values without a trailing fraction.
pub(crate) fn format_score(score: f64) -> String {
    if score == libm::trunc(score) {
        format!("{}", score as i64)
    } else {
        format!("{score}")
    }
}

fn csv_field(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r') {
        let mut quoted = String::with_capacity(field.len() + 2);
        quoted.push('"');
        for ch in field.chars() {
            if ch == '"' {
                quoted.push('"');
            }
            quoted.push(ch);
        }
        quoted.push('"');
        quoted
    } else {
        field.to_string()
    }
}

/// Splits CSV text into rows of fields, honoring double-quoted fields
/// with `""` escapes. Blank lines are skipped.
fn parse_csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut field = String::new();
    let mut row: Vec<String> = Vec::new();
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    let mut row_has_content = false;

    while let Some(ch) = chars.next() {
        if in_quotes {
            match ch {
                '"' => {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        field.push('"');
                    } else {
                        in_quotes = false;
                    }
                }
                _ => field.push(ch),
            }
            continue;
        }
        match ch {
            '"' => {
                in_quotes = true;
                row_has_content = true;
            }
            ',' => {
                row.push(core::mem::take(&mut field));
                row_has_content = true;
            }
            '\n' | '\r' => {
                if ch == '\r' && chars.peek() == Some(&'\n') {
                    chars.next();
                }
                if row_has_content || !field.is_empty() {
                    row.push(core::mem::take(&mut field));
                    rows.push(core::mem::take(&mut row));
                }
                row_has_content = false;
            }
            _ => {
                field.push(ch);
                row_has_content = true;
            }
        }
    }
    if row_has_content || !field.is_empty() {
        row.push(field);
        rows.push(row);
    }
    rows
}
