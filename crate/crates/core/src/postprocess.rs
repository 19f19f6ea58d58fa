//! Replacing flagged sentences in a composed script.
//!
//! Two strategies: a greedy pass that fills unwanted slots one at a time
//! with the candidate giving the highest whole-script fitness, and a GA run
//! whose initial population is the temporary script with unwanted slots
//! randomly refilled.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DistributionVector, FitnessWeights, Script, SentenceId, SentencePool};
use crate::error::{Error, Result};
use crate::fitness::{Evaluator, FitnessBreakdown, Swap};
use crate::ga::{evolve_from, replace_init_rng, GaConfig, GaTrace, Population};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Greedy,
    Ga,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" => Ok(Strategy::Greedy),
            "ga" => Ok(Strategy::Ga),
            _ => Err(Error::Config(format!(
                "unknown strategy {s:?} (expected greedy or ga)"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Greedy => "greedy",
            Strategy::Ga => "ga",
        })
    }
}

/// A flagged entry: either a sentence id or a `(set, position)` slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unwanted {
    Sentence(SentenceId),
    Slot { set: usize, position: usize },
}

impl fmt::Display for Unwanted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unwanted::Sentence(id) => write!(f, "{id}"),
            Unwanted::Slot { set, position } => write!(f, "{set}:{position}"),
        }
    }
}

impl FromStr for Unwanted {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let bad = || format!("expected a sentence id or set:position, got {s:?}");
        match s.split_once(':') {
            Some((a, b)) => Ok(Unwanted::Slot {
                set: a.trim().parse().map_err(|_| bad())?,
                position: b.trim().parse().map_err(|_| bad())?,
            }),
            None => s.parse().map(Unwanted::Sentence).map_err(|_| bad()),
        }
    }
}

/// Parses an unwanted-sentence list: one id or `set:position` per line.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_unwanted(text: &str) -> std::result::Result<Vec<Unwanted>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| l.parse().map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

pub fn load_unwanted(path: impl AsRef<Path>) -> Result<Vec<Unwanted>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_unwanted(&text).map_err(|m| Error::parse(path, m))
}

#[derive(Debug, Clone)]
pub struct ReplacementRequest {
    pub script: Script,
    pub unwanted: Vec<Unwanted>,
}

impl ReplacementRequest {
    pub fn new(script: Script, unwanted: Vec<Unwanted>) -> Self {
        Self { script, unwanted }
    }

    /// Unwanted slots in ascending `(set, position)` order, deduplicated.
    /// Entries that do not resolve inside the script are reported together.
    pub fn slots(&self) -> Result<Vec<(usize, usize)>> {
        let mut offenders = Vec::new();
        let mut slots = Vec::with_capacity(self.unwanted.len());
        for u in &self.unwanted {
            let slot = match *u {
                Unwanted::Sentence(id) => self.script.locate(id),
                Unwanted::Slot { set, position } => {
                    self.script.get(set, position).map(|_| (set, position))
                }
            };
            match slot {
                Some(s) => slots.push(s),
                None => offenders.push(u.to_string()),
            }
        }
        if !offenders.is_empty() {
            return Err(Error::Unresolved(offenders));
        }
        slots.sort_unstable();
        slots.dedup();
        Ok(slots)
    }
}

/// Pool sentences not present in the script, ascending by id.
fn eligible_candidates(pool: &SentencePool, script: &Script) -> Vec<SentenceId> {
    let used: HashSet<SentenceId> = script.ids().collect();
    let mut c: Vec<SentenceId> = pool.ids().filter(|id| !used.contains(id)).collect();
    c.sort_unstable();
    c
}

/// Fills unwanted slots one by one, in ascending slot order, each with the
/// eligible candidate that maximizes whole-script fitness at that step
/// (ties go to the lowest id). Unwanted sentences not yet reached stay in
/// place while earlier slots are decided.
pub fn greedy_replace(
    req: &ReplacementRequest,
    pool: &SentencePool,
    d_real: &DistributionVector,
    weights: FitnessWeights,
) -> Result<(Script, FitnessBreakdown)> {
    req.script.validate(pool)?;
    let slots = req.slots()?;
    let eval = Evaluator::new(pool, d_real, weights)?;
    let mut candidates = eligible_candidates(pool, &req.script);
    if candidates.len() < slots.len() {
        return Err(Error::Capacity {
            needed: slots.len(),
            available: candidates.len(),
        });
    }
    let mut state = eval.incremental(&req.script)?;
    for (set, position) in slots {
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&sentence| {
                state.preview_total(Swap {
                    set,
                    position,
                    sentence,
                })
            })
            .collect::<Result<_>>()?;
        // candidates are ascending, so the first maximum has the lowest id
        let mut pick = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[pick] {
                pick = i;
            }
        }
        let sentence = candidates.remove(pick);
        state.apply(Swap {
            set,
            position,
            sentence,
        })?;
    }
    let script = state.into_script();
    let breakdown = eval.evaluate(&script)?;
    Ok((script, breakdown))
}

/// GA-based replacement: every chromosome of the initial population is the
/// temporary script with each unwanted slot filled by a distinct random
/// eligible candidate; the regular GA loop then runs unchanged. The
/// population size, stopping rule, weights and seed come from `config`
/// (its shape fields are ignored in favour of the script's).
pub fn ga_replace(
    req: &ReplacementRequest,
    pool: &SentencePool,
    d_real: &DistributionVector,
    config: &GaConfig,
) -> Result<(Script, FitnessBreakdown, GaTrace)> {
    req.script.validate(pool)?;
    let slots = req.slots()?;
    let mut cfg = config.clone();
    (cfg.sets, cfg.set_size) = req.script.shape();
    cfg.validate()?;
    let candidates = eligible_candidates(pool, &req.script);
    if candidates.len() < slots.len() {
        return Err(Error::Capacity {
            needed: slots.len(),
            available: candidates.len(),
        });
    }
    let scripts: Vec<Script> = (0..cfg.population_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = replace_init_rng(cfg.seed, i as u64);
            let mut sets = req.script.sets().to_vec();
            for (&(set, position), j) in
                slots
                    .iter()
                    .zip(index::sample(&mut rng, candidates.len(), slots.len()))
            {
                sets[set][position] = candidates[j];
            }
            Script::new_unchecked(sets)
        })
        .collect();
    let out = evolve_from(
        pool,
        d_real,
        &cfg,
        Population {
            scripts,
            generation: 0,
        },
    )?;
    debug_assert!(slots
        .iter()
        .all(|&(s, p)| !out.best.contains(req.script.get(s, p).unwrap())));
    Ok((out.best, out.breakdown, out.trace))
}

/// Guidance on strategy choice given the flagged fraction of the script.
pub fn strategy_hint(strategy: Strategy, fraction: f64) -> Option<&'static str> {
    match strategy {
        Strategy::Ga if fraction < 0.1 => {
            Some("few sentences flagged: the greedy strategy usually does better here")
        }
        Strategy::Greedy if fraction >= 0.1 => {
            Some("many sentences flagged: the ga strategy usually does better here")
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub fraction: f64,
    pub replaced: usize,
    pub greedy_mean: f64,
    pub ga_mean: f64,
    pub greedy: Vec<f64>,
    pub ga: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyComparison {
    pub rows: Vec<ComparisonRow>,
}

impl fmt::Display for StrategyComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fraction,replaced,greedy_mean,ga_mean")?;
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{},{}",
                r.fraction, r.replaced, r.greedy_mean, r.ga_mean
            )?;
        }
        Ok(())
    }
}

/// Random unwanted slots covering `fraction` of the script (at least one).
pub fn random_unwanted(script: &Script, fraction: f64, seed: u64) -> Vec<Unwanted> {
    let (_, n) = script.shape();
    let total = script.len();
    let k = ((fraction * total as f64).round() as usize).clamp(1, total);
    let mut rng = crate::ga::stream_rng(seed, 0x5EED, 0, (fraction * 1e6) as u64);
    let mut picked: Vec<usize> = index::sample(&mut rng, total, k).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|i| Unwanted::Slot {
            set: i / n,
            position: i % n,
        })
        .collect()
}

/// For every fraction and seed, flags a random subset of the script and
/// runs both strategies; reports mean final fitness per strategy.
pub fn compare_strategies(
    script: &Script,
    fractions: &[f64],
    pool: &SentencePool,
    d_real: &DistributionVector,
    config: &GaConfig,
    seeds: &[u64],
) -> Result<StrategyComparison> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let mut rows = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!("fraction {fraction} outside (0, 1]")));
        }
        let mut greedy = Vec::with_capacity(seeds.len());
        let mut ga = Vec::with_capacity(seeds.len());
        let mut replaced = 0;
        for &seed in seeds {
            let unwanted = random_unwanted(script, fraction, seed);
            replaced = unwanted.len();
            let req = ReplacementRequest::new(script.clone(), unwanted);
            greedy.push(greedy_replace(&req, pool, d_real, config.weights)?.1.total);
            let cfg = GaConfig {
                seed,
                ..config.clone()
            };
            ga.push(ga_replace(&req, pool, d_real, &cfg)?.1.total);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        rows.push(ComparisonRow {
            fraction,
            replaced,
            greedy_mean: mean(&greedy),
            ga_mean: mean(&ga),
            greedy,
            ga,
        });
    }
    Ok(StrategyComparison { rows })
}
