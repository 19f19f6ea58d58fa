//! Line-delimited JSON record loading and real-world distribution snapshots.
//!
//! Every line of a pool file is a self-contained record:
//!
//! ```text
//! {"text": "...", "units": ["ma1", "ma3"], "perplexity": 2.1, "intelligibility": 1.0, "pos": ["Na", "VC"]}
//! ```
//!
//! `id` is optional; records without one get their 0-based line number.
//! `prediction` (an ASR transcript of the text) may stand in for
//! `intelligibility`, in which case the score is derived at load time.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    Annotations, DistributionVector, Sentence, SentenceId, SentencePool, UnitInventory,
};
use crate::error::{Error, Result};
use crate::filters::intelligibility_score;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<SentenceId>,
    pub text: String,
    pub units: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intelligibility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
}

impl CandidateRecord {
    pub fn new(text: impl Into<String>, units: Vec<String>) -> Self {
        Self {
            id: None,
            text: text.into(),
            units,
            perplexity: None,
            intelligibility: None,
            prediction: None,
            pos: None,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.units.is_empty() {
            return Err("units must not be empty".into());
        }
        if self.units.iter().any(|u| u.is_empty()) {
            return Err("unit labels must not be empty".into());
        }
        if let Some(p) = self.perplexity {
            if !p.is_finite() || p < 0.0 {
                return Err(format!("perplexity {p} must be finite and nonnegative"));
            }
        }
        if let Some(i) = self.intelligibility {
            if !(0.0..=1.0).contains(&i) {
                return Err(format!("intelligibility {i} outside [0, 1]"));
            }
        }
        if self.intelligibility.is_none() && self.prediction.is_some() && self.text.is_empty() {
            return Err("cannot score a prediction against empty text".into());
        }
        Ok(())
    }

    fn annotations(&self) -> Annotations {
        let intelligibility = self.intelligibility.or_else(|| {
            self.prediction
                .as_deref()
                .and_then(|p| intelligibility_score(&self.text, p).ok())
        });
        Annotations {
            perplexity: self.perplexity,
            intelligibility,
            pos_tags: self.pos.clone(),
        }
    }

    pub fn from_sentence(sentence: &Sentence, inventory: &UnitInventory) -> Self {
        Self {
            id: Some(sentence.id),
            text: sentence.text.clone(),
            units: sentence
                .units
                .iter()
                .map(|&u| inventory.label(u).to_owned())
                .collect(),
            perplexity: sentence.annotations.perplexity,
            intelligibility: sentence.annotations.intelligibility,
            prediction: None,
            pos: sentence.annotations.pos_tags.clone(),
        }
    }
}

/// A line that could not be turned into a sentence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedPool {
    pub pool: SentencePool,
    pub rejects: Vec<RejectedLine>,
}

pub fn load_pool(path: impl AsRef<Path>) -> Result<LoadedPool> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let loaded = parse_pool(&contents)?;
    if loaded.pool.is_empty() {
        return Err(Error::EmptyPool {
            path: path.to_owned(),
        });
    }
    Ok(loaded)
}

/// Parses pool records. Malformed lines are collected as rejects; an empty
/// result is not an error at this level.
pub fn parse_pool(contents: &str) -> Result<LoadedPool> {
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in contents.lines().enumerate() {
        let reject = |reason: String| RejectedLine {
            line: i + 1,
            reason,
        };
        if line.trim().is_empty() {
            rejects.push(reject("empty line".into()));
            continue;
        }
        let rec: CandidateRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                rejects.push(reject(e.to_string()));
                continue;
            }
        };
        if let Err(reason) = rec.check() {
            rejects.push(reject(reason));
            continue;
        }
        let id = rec.id.unwrap_or(SentenceId(i as u32));
        if !seen.insert(id) {
            rejects.push(reject(format!("duplicate id {id}")));
            continue;
        }
        records.push((id, rec));
    }
    let pool = pool_from_records(records)?;
    Ok(LoadedPool { pool, rejects })
}

/// Builds a pool from already-validated records, interning units in order of
/// first appearance.
pub fn pool_from_records(records: Vec<(SentenceId, CandidateRecord)>) -> Result<SentencePool> {
    let mut inventory = UnitInventory::new();
    let sentences = records
        .into_iter()
        .map(|(id, rec)| {
            let units = rec.units.iter().map(|u| inventory.intern(u)).collect();
            let annotations = rec.annotations();
            Sentence {
                id,
                text: rec.text,
                units,
                annotations,
            }
        })
        .collect();
    SentencePool::new(inventory, sentences)
}

/// Writes `pool` as line-delimited records, ids included.
pub fn write_pool(path: impl AsRef<Path>, pool: &SentencePool) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in pool.sentences() {
        let rec = CandidateRecord::from_sentence(s, pool.inventory());
        let line = serde_json::to_string(&rec).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Persisted unit counts, `labels[i]` paired with `counts[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSnapshot {
    pub labels: Vec<String>,
    pub counts: Vec<f64>,
}

/// A distribution projected onto a specific inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct RealDistribution {
    pub counts: DistributionVector,
    /// Tokens whose label is not in the target inventory.
    pub unknown_tokens: f64,
    pub unknown_labels: BTreeMap<String, f64>,
    /// Set when the source carried no tokens at all.
    pub empty: bool,
}

impl DistributionSnapshot {
    pub fn from_vector(inventory: &UnitInventory, vector: &DistributionVector) -> Self {
        Self {
            labels: inventory.labels().to_vec(),
            counts: vector.counts().to_vec(),
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.labels.len() != self.counts.len() {
            return Err(format!(
                "{} labels but {} counts",
                self.labels.len(),
                self.counts.len()
            ));
        }
        let mut seen = HashSet::new();
        if let Some(l) = self.labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(format!("duplicate label {l:?}"));
        }
        if let Some(c) = self.counts.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(format!("count {c} must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let snap: Self =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        snap.check().map_err(|m| Error::parse(path, m))?;
        Ok(snap)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("snapshot serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn project(&self, inventory: &UnitInventory) -> RealDistribution {
        let mut counts = DistributionVector::zeros(inventory.len());
        let mut unknown_labels = BTreeMap::new();
        let mut unknown_tokens = 0.0;
        for (label, &c) in self.labels.iter().zip(&self.counts) {
            match inventory.get(label) {
                Some(i) => counts.bump(i, c),
                None if c > 0.0 => {
                    unknown_tokens += c;
                    unknown_labels.insert(label.clone(), c);
                }
                None => {}
            }
        }
        let empty = self.counts.iter().all(|&c| c == 0.0);
        RealDistribution {
            counts,
            unknown_tokens,
            unknown_labels,
            empty,
        }
    }
}

#[derive(Debug, Deserialize)]
struct CorpusLine {
    units: Vec<String>,
}

/// Result of scanning a raw corpus file.
#[derive(Debug, Clone)]
pub struct CorpusScan {
    pub snapshot: DistributionSnapshot,
    pub lines: usize,
    /// 1-based numbers of lines that were not valid records.
    pub malformed: Vec<usize>,
}

/// Counts every unit label in a corpus file (record format, text optional).
/// Labels are kept in order of first appearance.
pub fn scan_corpus(path: impl AsRef<Path>) -> Result<CorpusScan> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut inventory = UnitInventory::new();
    let mut counts: Vec<f64> = Vec::new();
    let mut malformed = Vec::new();
    let mut lines = 0;
    for (i, line) in contents.lines().enumerate() {
        lines += 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CorpusLine>(line) {
            Ok(rec) => {
                for u in &rec.units {
                    let idx = inventory.intern(u);
                    if idx == counts.len() {
                        counts.push(0.0);
                    }
                    counts[idx] += 1.0;
                }
            }
            Err(_) => malformed.push(i + 1),
        }
    }
    Ok(CorpusScan {
        snapshot: DistributionSnapshot {
            labels: inventory.labels().to_vec(),
            counts,
        },
        lines,
        malformed,
    })
}

/// Unit counts of the corpus at `corpus_path`, projected onto `inventory`.
pub fn compute_real_distribution(
    corpus_path: impl AsRef<Path>,
    inventory: &UnitInventory,
) -> Result<RealDistribution> {
    Ok(scan_corpus(corpus_path)?.snapshot.project(inventory))
}
