//! Paired headline/post records, corpus loading and mirroring detection.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset, Timelike, Utc};
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate record id {id:?} on line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("corpus {path} has no valid records ({rejects} rejected)")]
    Empty { path: String, rejects: usize },
    #[error("outlet {0:?} does not occur in the corpus")]
    UnknownOutlet(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One news article paired with the social post that shared it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRecord {
    pub id: String,
    pub outlet: String,
    pub headline: String,
    pub body_text: String,
    pub post_text: String,
    pub created_at: DateTime<Utc>,
    pub replies: u64,
    pub retweets: u64,
    pub likes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<String>,
}

impl PairedRecord {
    pub fn engagement(&self, metric: crate::Metric) -> u64 {
        match metric {
            crate::Metric::Replies => self.replies,
            crate::Metric::Retweets => self.retweets,
            crate::Metric::Likes => self.likes,
        }
    }

    /// Records without body text load fine but cannot enter a causal
    /// scenario, because the propensity model reads the body.
    pub fn has_body(&self) -> bool {
        !normalize(&self.body_text).is_empty()
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if normalize(&self.headline).is_empty() {
            return Err("headline is empty after normalization".into());
        }
        if normalize(&self.post_text).is_empty() {
            return Err("post_text is empty after normalization".into());
        }
        Ok(())
    }
}

/// A line or row that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<PairedRecord>,
    pub source_path: String,
    pub rejects: Vec<Reject>,
}

impl Corpus {
    /// Builds a corpus from records already in memory, enforcing id
    /// uniqueness and non-emptiness.
    pub fn from_records(
        records: Vec<PairedRecord>,
        source_path: impl Into<String>,
    ) -> Result<Corpus, CorpusError> {
        let source_path = source_path.into();
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    id: r.id.clone(),
                    line: i + 1,
                });
            }
        }
        if records.is_empty() {
            return Err(CorpusError::Empty {
                path: source_path,
                rejects: 0,
            });
        }
        Ok(Corpus {
            records,
            source_path,
            rejects: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct outlets in sorted order.
    pub fn outlets(&self) -> Vec<String> {
        let mut v: Vec<String> = self.records.iter().map(|r| r.outlet.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn index_by_id(&self) -> HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect()
    }

    /// Records flagged for missing body text.
    pub fn bodyless_ids(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| !r.has_body())
            .map(|r| r.id.as_str())
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Loads a corpus, skipping malformed lines and recording them as rejects.
pub fn load_corpus(path: &Path, format: Format) -> Result<Corpus, CorpusError> {
    let display = path.display().to_string();
    let io_err = |source| CorpusError::Io {
        path: display.clone(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut records = Vec::new();
    let mut rejects = Vec::new();

    match format {
        Format::Jsonl => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line_no = i + 1;
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<PairedRecord>(&line) {
                    Ok(r) => match r.validate() {
                        Ok(()) => records.push((line_no, r)),
                        Err(reason) => rejects.push(Reject {
                            line: line_no,
                            reason,
                        }),
                    },
                    Err(e) => rejects.push(Reject {
                        line: line_no,
                        reason: e.to_string(),
                    }),
                }
            }
        }
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(file);
            for (i, row) in reader.deserialize::<CsvRecord>().enumerate() {
                // header occupies line 1
                let line_no = i + 2;
                match row.map(PairedRecord::from) {
                    Ok(r) => match r.validate() {
                        Ok(()) => records.push((line_no, r)),
                        Err(reason) => rejects.push(Reject {
                            line: line_no,
                            reason,
                        }),
                    },
                    Err(e) => rejects.push(Reject {
                        line: line_no,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }

    let mut seen = HashSet::new();
    for (line, r) in &records {
        if !seen.insert(r.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: r.id.clone(),
                line: *line,
            });
        }
    }
    if records.is_empty() {
        return Err(CorpusError::Empty {
            path: display,
            rejects: rejects.len(),
        });
    }
    Ok(Corpus {
        records: records.into_iter().map(|(_, r)| r).collect(),
        source_path: display,
        rejects,
    })
}

#[derive(Deserialize)]
struct CsvRecord {
    id: String,
    outlet: String,
    headline: String,
    body_text: String,
    post_text: String,
    created_at: DateTime<Utc>,
    replies: u64,
    retweets: u64,
    likes: u64,
    #[serde(default)]
    section: Option<String>,
}

impl From<CsvRecord> for PairedRecord {
    fn from(c: CsvRecord) -> Self {
        PairedRecord {
            id: c.id,
            outlet: c.outlet,
            headline: c.headline,
            body_text: c.body_text,
            post_text: c.post_text,
            created_at: c.created_at,
            replies: c.replies,
            retweets: c.retweets,
            likes: c.likes,
            section: c.section.filter(|s| !s.is_empty()),
        }
    }
}

/// Text after NFC composition, trimming and whitespace collapsing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl std::fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn normalize(text: &str) -> NormalizedText {
    let composed: String = text.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for word in composed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    NormalizedText(out)
}

/// A post mirrors its headline when both normalize to the same string.
/// The comparison is case-sensitive.
pub fn is_mirrored(record: &PairedRecord) -> bool {
    normalize(&record.headline) == normalize(&record.post_text)
}

/// Mirrored and total record counts for one outlet.
pub fn mirroring_counts(corpus: &Corpus, outlet: &str) -> Result<(usize, usize), CorpusError> {
    let (mut mirrored, mut total) = (0, 0);
    for r in corpus.records.iter().filter(|r| r.outlet == outlet) {
        total += 1;
        if is_mirrored(r) {
            mirrored += 1;
        }
    }
    if total == 0 {
        return Err(CorpusError::UnknownOutlet(outlet.to_string()));
    }
    Ok((mirrored, total))
}

pub fn mirroring_fraction(corpus: &Corpus, outlet: &str) -> Result<f64, CorpusError> {
    let (m, n) = mirroring_counts(corpus, outlet)?;
    Ok(m as f64 / n as f64)
}

/// Mirroring fraction for every outlet, keyed by outlet name.
pub fn mirroring_table(corpus: &Corpus) -> BTreeMap<String, f64> {
    corpus
        .outlets()
        .into_iter()
        .map(|o| {
            let f = mirroring_fraction(corpus, &o).expect("outlet taken from corpus");
            (o, f)
        })
        .collect()
}

/// Posting-time block in US Eastern Daylight Time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeBlock {
    /// 00:00-08:59
    B1,
    /// 09:00-16:59
    B2,
    /// 17:00-23:59
    B3,
}

/// EDT is treated as a fixed UTC-4 offset all year.
const EDT_OFFSET_SECS: i32 = -4 * 3600;

pub fn local_edt(instant: DateTime<Utc>) -> DateTime<FixedOffset> {
    instant.with_timezone(&FixedOffset::east_opt(EDT_OFFSET_SECS).expect("valid offset"))
}

pub fn assign_time_block(record: &PairedRecord) -> TimeBlock {
    time_block_of(record.created_at)
}

pub fn time_block_of(instant: DateTime<Utc>) -> TimeBlock {
    match local_edt(instant).hour() {
        0..=8 => TimeBlock::B1,
        9..=16 => TimeBlock::B2,
        _ => TimeBlock::B3,
    }
}
