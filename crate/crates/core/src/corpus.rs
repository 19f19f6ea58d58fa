//! Domain types shared by every stage: sentences, the unit inventory,
//! unit-count distributions, candidate pools and multi-set scripts.
//!
//! A *unit* is an opaque label (a tonal syllable such as `ma3`). Units are
//! interned into a [`UnitInventory`], and everything downstream works on the
//! dense indices it hands out.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SentenceId(pub u32);

impl fmt::Display for SentenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for SentenceId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.trim().parse().map(SentenceId)
    }
}

/// Bidirectional mapping between unit labels and dense indices.
#[derive(Debug, Clone, Default)]
pub struct UnitInventory {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for UnitInventory {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for UnitInventory {}

impl UnitInventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut inv = Self::new();
        for label in labels {
            let label = label.into();
            if inv.index.contains_key(&label) {
                return Err(Error::Domain(format!("duplicate unit label {label:?}")));
            }
            inv.intern(&label);
        }
        Ok(inv)
    }

    /// Returns the index of `label`, assigning the next free index on first sight.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), i);
        i
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Tone-stripped form of a label: a single trailing ASCII digit is removed.
    pub fn base_label(label: &str) -> &str {
        match label.as_bytes().last() {
            Some(b) if b.is_ascii_digit() && label.len() > 1 => &label[..label.len() - 1],
            _ => label,
        }
    }

    /// Maps every unit index to a dense base-label index. Returns the map and
    /// the number of distinct base labels.
    pub fn base_mapping(&self) -> (Vec<usize>, usize) {
        let mut bases: HashMap<&str, usize> = HashMap::new();
        let map = self
            .labels
            .iter()
            .map(|l| {
                let next = bases.len();
                *bases.entry(Self::base_label(l)).or_insert(next)
            })
            .collect();
        (map, bases.len())
    }
}

/// Nonnegative unit-count histogram, one entry per inventory unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistributionVector(Vec<f64>);

impl DistributionVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        if let Some((i, c)) = counts
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite() || **c < 0.0)
        {
            return Err(Error::Domain(format!(
                "distribution entry {i} is {c}; counts must be finite and nonnegative"
            )));
        }
        Ok(Self(counts))
    }

    pub fn counts(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Number of units with a nonzero count.
    pub fn support(&self) -> usize {
        self.0.iter().filter(|c| **c > 0.0).count()
    }

    pub(crate) fn bump(&mut self, unit: usize, by: f64) {
        self.0[unit] += by;
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|c| c * factor).collect())
    }
}

/// Optional per-sentence annotations consumed by the filters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub perplexity: Option<f64>,
    pub intelligibility: Option<f64>,
    pub pos_tags: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub id: SentenceId,
    pub text: String,
    /// Indices into the owning pool's inventory.
    pub units: Vec<usize>,
    pub annotations: Annotations,
}

const NO_SLOT: u32 = u32::MAX;

/// Candidate sentences sharing one inventory, addressable by id.
#[derive(Debug, Clone)]
pub struct SentencePool {
    inventory: UnitInventory,
    sentences: Vec<Sentence>,
    // id -> position in `sentences`
    slots: Vec<u32>,
}

impl SentencePool {
    pub fn new(inventory: UnitInventory, sentences: Vec<Sentence>) -> Result<Self> {
        let max_id = sentences.iter().map(|s| s.id.0 as usize).max();
        let mut slots = vec![NO_SLOT; max_id.map_or(0, |m| m + 1)];
        for (pos, s) in sentences.iter().enumerate() {
            if s.units.is_empty() {
                return Err(Error::EmptyUnits(s.id));
            }
            if let Some(&unit) = s.units.iter().find(|&&u| u >= inventory.len()) {
                return Err(Error::UnitOutOfRange {
                    id: s.id,
                    unit,
                    size: inventory.len(),
                });
            }
            let slot = &mut slots[s.id.0 as usize];
            if *slot != NO_SLOT {
                return Err(Error::DuplicatePoolId(s.id));
            }
            *slot = pos as u32;
        }
        Ok(Self {
            inventory,
            sentences,
            slots,
        })
    }

    pub fn inventory(&self) -> &UnitInventory {
        &self.inventory
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SentenceId> + '_ {
        self.sentences.iter().map(|s| s.id)
    }

    pub fn get(&self, id: SentenceId) -> Option<&Sentence> {
        match self.slots.get(id.0 as usize) {
            Some(&slot) if slot != NO_SLOT => Some(&self.sentences[slot as usize]),
            _ => None,
        }
    }

    pub fn sentence(&self, id: SentenceId) -> Result<&Sentence> {
        self.get(id).ok_or(Error::UnknownSentence(id))
    }

    pub fn contains(&self, id: SentenceId) -> bool {
        self.get(id).is_some()
    }

    /// Sub-pool of the sentences accepted by `keep`, sharing this pool's inventory.
    pub fn retain(&self, mut keep: impl FnMut(&Sentence) -> bool) -> SentencePool {
        let sentences: Vec<Sentence> = self.sentences.iter().filter(|s| keep(s)).cloned().collect();
        SentencePool::new(self.inventory.clone(), sentences)
            .expect("subset of a valid pool is valid")
    }
}

/// Total occurrences of every unit across the listed sentences.
pub fn unit_histogram(ids: &[SentenceId], pool: &SentencePool) -> Result<DistributionVector> {
    let mut hist = DistributionVector::zeros(pool.inventory().len());
    for &id in ids {
        for &u in &pool.sentence(id)?.units {
            hist.bump(u, 1.0);
        }
    }
    Ok(hist)
}

/// A recording script: `n_s` ordered sets of `n` sentence ids each, with no
/// sentence repeated anywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<SentenceId>>", into = "Vec<Vec<SentenceId>>")]
pub struct Script {
    sets: Vec<Vec<SentenceId>>,
}

impl TryFrom<Vec<Vec<SentenceId>>> for Script {
    type Error = Error;

    fn try_from(sets: Vec<Vec<SentenceId>>) -> Result<Self> {
        Script::new(sets)
    }
}

impl From<Script> for Vec<Vec<SentenceId>> {
    fn from(s: Script) -> Self {
        s.sets
    }
}

impl Script {
    pub fn new(sets: Vec<Vec<SentenceId>>) -> Result<Self> {
        Self::check(&sets)?;
        Ok(Self { sets })
    }

    pub(crate) fn new_unchecked(sets: Vec<Vec<SentenceId>>) -> Self {
        debug_assert!(Self::check(&sets).is_ok());
        Self { sets }
    }

    /// Shape and duplicate check. Reports the first offending set or the
    /// first repeated id.
    pub fn check(sets: &[Vec<SentenceId>]) -> Result<()> {
        let expected = sets.first().map_or(0, Vec::len);
        if let Some((set, s)) = sets.iter().enumerate().find(|(_, s)| s.len() != expected) {
            return Err(Error::SetLength {
                set,
                len: s.len(),
                expected,
            });
        }
        let mut seen = HashSet::with_capacity(sets.len() * expected);
        for &id in sets.iter().flatten() {
            if !seen.insert(id) {
                return Err(Error::DuplicateSentence(id));
            }
        }
        Ok(())
    }

    /// Full invariant check including id resolution against `pool`.
    pub fn validate(&self, pool: &SentencePool) -> Result<()> {
        Self::check(&self.sets)?;
        match self.ids().find(|&id| !pool.contains(id)) {
            Some(id) => Err(Error::UnknownSentence(id)),
            None => Ok(()),
        }
    }

    /// `(number of sets, sentences per set)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.sets.len(), self.sets.first().map_or(0, Vec::len))
    }

    pub fn sets(&self) -> &[Vec<SentenceId>] {
        &self.sets
    }

    pub(crate) fn sets_mut(&mut self) -> &mut [Vec<SentenceId>] {
        &mut self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> impl Iterator<Item = SentenceId> + '_ {
        self.sets.iter().flatten().copied()
    }

    pub fn get(&self, set: usize, position: usize) -> Option<SentenceId> {
        self.sets.get(set)?.get(position).copied()
    }

    pub fn contains(&self, id: SentenceId) -> bool {
        self.ids().any(|x| x == id)
    }

    /// Position of `id` as `(set, position)`.
    pub fn locate(&self, id: SentenceId) -> Option<(usize, usize)> {
        self.sets
            .iter()
            .enumerate()
            .find_map(|(i, set)| set.iter().position(|&x| x == id).map(|p| (i, p)))
    }

    /// Same script with the sentence at `(set, position)` replaced.
    pub fn with_replacement(&self, set: usize, position: usize, id: SentenceId) -> Result<Self> {
        let current = self
            .get(set, position)
            .ok_or_else(|| Error::Domain(format!("slot {set}:{position} is outside the script")))?;
        if current != id && self.contains(id) {
            return Err(Error::DuplicateSentence(id));
        }
        let mut sets = self.sets.clone();
        sets[set][position] = id;
        Ok(Self { sets })
    }

    /// Order-insensitive form: each set sorted. Two scripts with equal
    /// canonical forms hold the same sentences in the same sets.
    pub fn canonical(&self) -> Vec<Vec<SentenceId>> {
        self.sets
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.sort_unstable();
                s
            })
            .collect()
    }
}

/// Weights of the three fitness terms: script distribution, script
/// coverage, set distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    pub script_distribution: f64,
    pub coverage: f64,
    pub set_distribution: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self {
            script_distribution: 1.0,
            coverage: 2.0,
            set_distribution: 1.0,
        }
    }
}

impl FitnessWeights {
    pub fn new(script_distribution: f64, coverage: f64, set_distribution: f64) -> Result<Self> {
        let w = [script_distribution, coverage, set_distribution];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config(format!(
                "weights must be finite and nonnegative, got {w:?}"
            )));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(Error::Config("at least one weight must be positive".into()));
        }
        Ok(Self {
            script_distribution,
            coverage,
            set_distribution,
        })
    }

    pub fn sum(&self) -> f64 {
        self.script_distribution + self.coverage + self.set_distribution
    }
}

impl FromStr for FitnessWeights {
    type Err = Error;

    /// Parses `w1,w2,w3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad weights {s:?}: {e}")))?;
        match parts[..] {
            [a, b, c] => Self::new(a, b, c),
            _ => Err(Error::Config(format!(
                "expected three comma-separated weights, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for FitnessWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            self.script_distribution, self.coverage, self.set_distribution
        )
    }
}
