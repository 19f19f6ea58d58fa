//! The five-stage candidate filter cascade: general (length and charset),
//! sensitive words, POS-based removal, perplexity, intelligibility.
//!
//! Model outputs (perplexities, POS tags, ASR transcripts) are inputs here;
//! nothing in this module runs a model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, SentenceId, SentencePool};
use crate::error::{Error, Result};

/// Character-class rule for the general filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Charset {
    /// CJK unified ideographs (all extension blocks) and compatibility ideographs.
    #[default]
    Han,
    Any,
}

impl Charset {
    pub fn accepts(self, c: char) -> bool {
        match self {
            Charset::Any => true,
            Charset::Han => is_han(c),
        }
    }
}

fn is_han(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0x2F800..=0x2FA1F
        | 0x30000..=0x323AF)
}

/// Tag sets for the POS removal rule: a sentence is removed if any tag is in
/// `include`, its first tag is in `start`, or its last tag is in `end`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosCriteria {
    #[serde(rename = "include", default)]
    pub include_banned: BTreeSet<String>,
    #[serde(rename = "start", default)]
    pub start_banned: BTreeSet<String>,
    #[serde(rename = "end", default)]
    pub end_banned: BTreeSet<String>,
}

fn tag_set(tags: &[&str]) -> BTreeSet<String> {
    tags.iter().map(|t| t.to_string()).collect()
}

impl PosCriteria {
    /// Removal criteria for CkipTagger tags.
    pub fn ckip_tagger() -> Self {
        Self {
            include_banned: tag_set(&["Nb", "Nc", "FW"]),
            start_banned: tag_set(&["DE", "SHI", "T"]),
            end_banned: tag_set(&["Caa", "Cab", "Cba", "Cbb", "P", "T"]),
        }
    }

    /// Removal criteria for DDParser tags.
    pub fn ddparser() -> Self {
        Self {
            include_banned: tag_set(&["LOC", "ORG", "TIME", "PER", "w", "nz"]),
            start_banned: tag_set(&["p", "u", "c"]),
            end_banned: tag_set(&["xc", "u"]),
        }
    }

    /// Reads a TOML file with `include`, `start` and `end` string arrays.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn rejects(&self, tags: &[String]) -> bool {
        tags.iter().any(|t| self.include_banned.contains(t))
            || tags.first().is_some_and(|t| self.start_banned.contains(t))
            || tags.last().is_some_and(|t| self.end_banned.contains(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Exact character count; `None` disables the length check.
    pub required_length: Option<usize>,
    pub charset: Charset,
    pub sensitive_words: BTreeSet<String>,
    /// Applied conjunctively: any criteria set may reject a sentence.
    pub pos_criteria: Vec<PosCriteria>,
    /// Keep iff perplexity ≤ threshold; `None` disables the stage.
    pub perplexity_threshold: Option<f64>,
    /// Keep iff score ≥ threshold; `None` disables the stage.
    pub intelligibility_threshold: Option<f64>,
}

impl Default for FilterConfig {
    /// Ten Han characters, both tagger criteria sets, perplexity ≤ 4.0 and a
    /// perfect intelligibility score.
    fn default() -> Self {
        Self {
            required_length: Some(10),
            charset: Charset::Han,
            sensitive_words: BTreeSet::new(),
            pos_criteria: vec![PosCriteria::ckip_tagger(), PosCriteria::ddparser()],
            perplexity_threshold: Some(4.0),
            intelligibility_threshold: Some(1.0),
        }
    }
}

impl FilterConfig {
    /// Every stage disabled.
    pub fn permissive() -> Self {
        Self {
            required_length: None,
            charset: Charset::Any,
            sensitive_words: BTreeSet::new(),
            pos_criteria: Vec::new(),
            perplexity_threshold: None,
            intelligibility_threshold: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.required_length == Some(0) {
            return Err(Error::Config("required length must be at least 1".into()));
        }
        if let Some(t) = self.perplexity_threshold {
            if !t.is_finite() {
                return Err(Error::Config(format!(
                    "perplexity threshold {t} is not finite"
                )));
            }
        }
        if let Some(t) = self.intelligibility_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!(
                    "intelligibility threshold {t} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// One word per line; blank lines are skipped.
pub fn load_word_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect())
}

pub fn general_filter(s: &Sentence, cfg: &FilterConfig) -> bool {
    let length_ok = cfg
        .required_length
        .is_none_or(|n| s.text.chars().count() == n);
    length_ok && s.text.chars().all(|c| cfg.charset.accepts(c))
}

pub fn sensitive_filter(s: &Sentence, words: &BTreeSet<String>) -> bool {
    !words
        .iter()
        .any(|w| !w.is_empty() && s.text.contains(w.as_str()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosVerdict {
    Keep,
    Reject,
    /// No tags available; passed through.
    Untagged,
}

pub fn pos_filter(s: &Sentence, criteria: &PosCriteria) -> PosVerdict {
    pos_filter_all(s, std::slice::from_ref(criteria))
}

fn pos_filter_all(s: &Sentence, criteria: &[PosCriteria]) -> PosVerdict {
    match &s.annotations.pos_tags {
        None => PosVerdict::Untagged,
        Some(tags) if criteria.iter().any(|c| c.rejects(tags)) => PosVerdict::Reject,
        Some(_) => PosVerdict::Keep,
    }
}

pub fn perplexity_filter(s: &Sentence, threshold: f64) -> Result<bool> {
    let ppl = s.annotations.perplexity.ok_or(Error::MissingAnnotation {
        id: s.id,
        field: "perplexity",
    })?;
    Ok(ppl <= threshold)
}

pub fn intelligibility_filter(s: &Sentence, threshold: f64) -> Result<bool> {
    let score = s
        .annotations
        .intelligibility
        .ok_or(Error::MissingAnnotation {
            id: s.id,
            field: "intelligibility",
        })?;
    Ok(score >= threshold)
}

/// Character-level edit distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - levenshtein(original, prediction) / len(original)`, floored at 0.
pub fn intelligibility_score(original: &str, prediction: &str) -> Result<f64> {
    let len = original.chars().count();
    if len == 0 {
        return Err(Error::Domain(
            "intelligibility of an empty sentence is undefined".into(),
        ));
    }
    let d = levenshtein(original, prediction);
    Ok((1.0 - d as f64 / len as f64).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterStage {
    General,
    Sensitive,
    Pos,
    Perplexity,
    Intelligibility,
}

impl FilterStage {
    pub const ALL: [FilterStage; 5] = [
        FilterStage::General,
        FilterStage::Sensitive,
        FilterStage::Pos,
        FilterStage::Perplexity,
        FilterStage::Intelligibility,
    ];
}

impl fmt::Display for FilterStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FilterStage::General => "general",
            FilterStage::Sensitive => "sensitive",
            FilterStage::Pos => "pos",
            FilterStage::Perplexity => "perplexity",
            FilterStage::Intelligibility => "intelligibility",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub id: SentenceId,
    pub stage: FilterStage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    pub input: usize,
    pub survivors: usize,
    pub removed: BTreeMap<FilterStage, usize>,
    /// First rejecting stage per removed sentence, ordered by id.
    pub rejections: Vec<Rejection>,
    /// Sentences that reached the POS stage without tags.
    pub untagged: Vec<SentenceId>,
}

impl FilterReport {
    pub fn removed_by(&self, stage: FilterStage) -> usize {
        self.removed.get(&stage).copied().unwrap_or(0)
    }

    pub fn stage_of(&self, id: SentenceId) -> Option<FilterStage> {
        self.rejections
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| self.rejections[i].stage)
    }
}

struct Verdict {
    rejected_by: Option<FilterStage>,
    untagged: bool,
}

fn judge(s: &Sentence, cfg: &FilterConfig) -> Result<Verdict> {
    let reject = |stage| Verdict {
        rejected_by: Some(stage),
        untagged: false,
    };
    if !general_filter(s, cfg) {
        return Ok(reject(FilterStage::General));
    }
    if !sensitive_filter(s, &cfg.sensitive_words) {
        return Ok(reject(FilterStage::Sensitive));
    }
    let mut untagged = false;
    if !cfg.pos_criteria.is_empty() {
        match pos_filter_all(s, &cfg.pos_criteria) {
            PosVerdict::Reject => return Ok(reject(FilterStage::Pos)),
            PosVerdict::Untagged => untagged = true,
            PosVerdict::Keep => {}
        }
    }
    if let Some(t) = cfg.perplexity_threshold {
        if !perplexity_filter(s, t)? {
            return Ok(reject(FilterStage::Perplexity));
        }
    }
    if let Some(t) = cfg.intelligibility_threshold {
        if !intelligibility_filter(s, t)? {
            return Ok(reject(FilterStage::Intelligibility));
        }
    }
    Ok(Verdict {
        rejected_by: None,
        untagged,
    })
}

/// Runs the cascade. Each removed sentence is attributed to the first stage
/// that rejected it. A missing annotation required by an enabled threshold
/// stage is an error (the lowest offending id is reported).
pub fn run_pipeline(
    pool: &SentencePool,
    cfg: &FilterConfig,
) -> Result<(SentencePool, FilterReport)> {
    cfg.validate()?;
    let mut verdicts: Vec<Result<Verdict>> =
        pool.sentences().par_iter().map(|s| judge(s, cfg)).collect();

    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by_key(|&i| pool.sentences()[i].id);
    if let Some(&i) = order.iter().find(|&&i| verdicts[i].is_err()) {
        return Err(verdicts.swap_remove(i).err().expect("checked above"));
    }
    let verdicts: Vec<Verdict> = verdicts.into_iter().collect::<Result<_>>()?;

    let mut keep = vec![false; pool.len()];
    let mut removed: BTreeMap<FilterStage, usize> =
        FilterStage::ALL.iter().map(|&s| (s, 0)).collect();
    let mut rejections = Vec::new();
    let mut untagged = Vec::new();
    for i in order {
        let id = pool.sentences()[i].id;
        let v = &verdicts[i];
        match v.rejected_by {
            Some(stage) => {
                *removed.entry(stage).or_default() += 1;
                rejections.push(Rejection { id, stage });
            }
            None => keep[i] = true,
        }
        if v.untagged {
            untagged.push(id);
        }
    }
    let mut k = keep.iter();
    let filtered = pool.retain(|_| *k.next().unwrap());
    let report = FilterReport {
        input: pool.len(),
        survivors: filtered.len(),
        removed,
        rejections,
        untagged,
    };
    Ok((filtered, report))
}
