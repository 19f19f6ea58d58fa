//! Script fitness: weighted sum of the script-level distribution match, the
//! script's unit coverage and the mean per-set distribution match.
//!
//! Distribution match is cosine similarity against the reference counts.
//! [`Evaluator`] caches the reference norm and evaluates scripts with sparse
//! accumulation; [`IncrementalFitness`] keeps dense per-set histograms so a
//! single-slot swap can be scored from the units of the two sentences
//! involved.
//!
//! When script and reference counts are integers (the normal case: both
//! are token tallies) every dot product and squared norm is an exact f64
//! integer, so incremental and full evaluation agree bit for bit.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{DistributionVector, FitnessWeights, Script, SentenceId, SentencePool};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub script_distribution: f64,
    pub set_distribution_mean: f64,
    pub per_set_distribution: Vec<f64>,
    pub coverage: f64,
    pub total: f64,
}

impl FitnessBreakdown {
    fn assemble(
        script_distribution: f64,
        per_set_distribution: Vec<f64>,
        coverage: f64,
        weights: &FitnessWeights,
    ) -> Self {
        let set_distribution_mean =
            mean_in_order(per_set_distribution.len(), |i| per_set_distribution[i]);
        let total = weighted_total(
            weights,
            script_distribution,
            coverage,
            set_distribution_mean,
        );
        Self {
            script_distribution,
            set_distribution_mean,
            per_set_distribution,
            coverage,
            total,
        }
    }
}

fn weighted_total(w: &FitnessWeights, script: f64, coverage: f64, set_mean: f64) -> f64 {
    w.script_distribution * script + w.coverage * coverage + w.set_distribution * set_mean
}

fn mean_in_order(n: usize, value: impl Fn(usize) -> f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        sum += value(i);
    }
    sum / n as f64
}

/// Cosine from a dot product and squared norms; zero when either norm is zero.
#[inline]
fn cosine_from_parts(dot: f64, norm2: f64, other_norm: f64) -> f64 {
    if norm2 == 0.0 || other_norm == 0.0 {
        0.0
    } else {
        (dot / (norm2.sqrt() * other_norm)).min(1.0)
    }
}

pub fn cosine_similarity(a: &DistributionVector, b: &DistributionVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.counts().iter().zip(b.counts()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    Ok(cosine_from_parts(dot, na, nb.sqrt()))
}

/// Reusable buffers for [`Evaluator::evaluate_with`].
#[derive(Debug, Clone)]
pub struct Scratch {
    set_counts: Vec<f64>,
    set_touched: Vec<usize>,
    script_counts: Vec<f64>,
    script_touched: Vec<usize>,
}

impl Scratch {
    pub fn new(units: usize) -> Self {
        Self {
            set_counts: vec![0.0; units],
            set_touched: Vec::new(),
            script_counts: vec![0.0; units],
            script_touched: Vec::new(),
        }
    }
}

/// Fitness evaluation against a fixed pool, reference and weights.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pool: &'a SentencePool,
    real: &'a [f64],
    real_norm: f64,
    weights: FitnessWeights,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        pool: &'a SentencePool,
        d_real: &'a DistributionVector,
        weights: FitnessWeights,
    ) -> Result<Self> {
        let s = pool.inventory().len();
        if d_real.len() != s {
            return Err(Error::Dimension {
                left: d_real.len(),
                right: s,
            });
        }
        Ok(Self {
            pool,
            real: d_real.counts(),
            real_norm: d_real.norm(),
            weights,
        })
    }

    pub fn pool(&self) -> &'a SentencePool {
        self.pool
    }

    pub fn weights(&self) -> FitnessWeights {
        self.weights
    }

    pub fn units(&self) -> usize {
        self.real.len()
    }

    pub fn scratch(&self) -> Scratch {
        Scratch::new(self.units())
    }

    pub fn evaluate(&self, script: &Script) -> Result<FitnessBreakdown> {
        self.evaluate_with(script, &mut self.scratch())
    }

    pub fn evaluate_with(
        &self,
        script: &Script,
        scratch: &mut Scratch,
    ) -> Result<FitnessBreakdown> {
        let s = self.units();
        let Scratch {
            set_counts,
            set_touched,
            script_counts,
            script_touched,
        } = scratch;
        let mut per_set = Vec::with_capacity(script.sets().len());
        let mut failure = None;
        for set in script.sets() {
            for &id in set {
                let Some(sentence) = self.pool.get(id) else {
                    failure = Some(Error::UnknownSentence(id));
                    break;
                };
                for &u in &sentence.units {
                    if set_counts[u] == 0.0 {
                        set_touched.push(u);
                    }
                    set_counts[u] += 1.0;
                    if script_counts[u] == 0.0 {
                        script_touched.push(u);
                    }
                    script_counts[u] += 1.0;
                }
            }
            let (mut dot, mut norm2) = (0.0, 0.0);
            for &u in set_touched.iter() {
                let c = set_counts[u];
                dot += c * self.real[u];
                norm2 += c * c;
                set_counts[u] = 0.0;
            }
            set_touched.clear();
            per_set.push(cosine_from_parts(dot, norm2, self.real_norm));
            if failure.is_some() {
                break;
            }
        }
        let (mut dot, mut norm2) = (0.0, 0.0);
        for &u in script_touched.iter() {
            let c = script_counts[u];
            dot += c * self.real[u];
            norm2 += c * c;
            script_counts[u] = 0.0;
        }
        let covered = script_touched.len();
        script_touched.clear();
        if let Some(e) = failure {
            return Err(e);
        }
        let coverage = if s == 0 {
            0.0
        } else {
            covered as f64 / s as f64
        };
        Ok(FitnessBreakdown::assemble(
            cosine_from_parts(dot, norm2, self.real_norm),
            per_set,
            coverage,
            &self.weights,
        ))
    }

    pub fn incremental(&self, script: &Script) -> Result<IncrementalFitness<'_, 'a>> {
        IncrementalFitness::new(self, script.clone())
    }
}

/// A script plus dense histograms supporting O(units) swap scoring.
#[derive(Debug, Clone)]
pub struct IncrementalFitness<'e, 'a> {
    eval: &'e Evaluator<'a>,
    script: Script,
    members: HashSet<SentenceId>,
    set_counts: Vec<Vec<f64>>,
    set_dot: Vec<f64>,
    set_norm2: Vec<f64>,
    set_cos: Vec<f64>,
    script_counts: Vec<f64>,
    script_dot: f64,
    script_norm2: f64,
    covered: usize,
}

/// One slot replacement: put `sentence` at `position` of set `set`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Swap {
    pub set: usize,
    pub position: usize,
    pub sentence: SentenceId,
}

struct SwapEffect {
    set_cos: f64,
    set_dot: f64,
    set_norm2: f64,
    script_dot: f64,
    script_norm2: f64,
    covered: usize,
}

impl<'e, 'a> IncrementalFitness<'e, 'a> {
    fn new(eval: &'e Evaluator<'a>, script: Script) -> Result<Self> {
        Script::check(script.sets())?;
        let s = eval.units();
        let n_sets = script.sets().len();
        let mut set_counts = vec![vec![0.0; s]; n_sets];
        let mut script_counts = vec![0.0; s];
        for (i, set) in script.sets().iter().enumerate() {
            for &id in set {
                for &u in &eval.pool.sentence(id)?.units {
                    set_counts[i][u] += 1.0;
                    script_counts[u] += 1.0;
                }
            }
        }
        let parts = |counts: &[f64]| {
            counts
                .iter()
                .zip(eval.real)
                .fold((0.0, 0.0), |(d, n), (&c, &r)| (d + c * r, n + c * c))
        };
        let (set_dot, set_norm2): (Vec<f64>, Vec<f64>) =
            set_counts.iter().map(|c| parts(c)).unzip();
        let set_cos = set_dot
            .iter()
            .zip(&set_norm2)
            .map(|(&d, &n)| cosine_from_parts(d, n, eval.real_norm))
            .collect();
        let (script_dot, script_norm2) = parts(&script_counts);
        let covered = script_counts.iter().filter(|&&c| c > 0.0).count();
        Ok(Self {
            eval,
            members: script.ids().collect(),
            script,
            set_counts,
            set_dot,
            set_norm2,
            set_cos,
            script_counts,
            script_dot,
            script_norm2,
            covered,
        })
    }

    pub fn script(&self) -> &Script {
        &self.script
    }

    pub fn into_script(self) -> Script {
        self.script
    }

    pub fn contains(&self, id: SentenceId) -> bool {
        self.members.contains(&id)
    }

    fn coverage_of(&self, covered: usize) -> f64 {
        let s = self.eval.units();
        if s == 0 {
            0.0
        } else {
            covered as f64 / s as f64
        }
    }

    fn effect(&self, swap: Swap) -> Result<SwapEffect> {
        let old_id = self.script.get(swap.set, swap.position).ok_or_else(|| {
            Error::Domain(format!(
                "slot {}:{} is outside the script",
                swap.set, swap.position
            ))
        })?;
        if old_id != swap.sentence && self.members.contains(&swap.sentence) {
            return Err(Error::DuplicateSentence(swap.sentence));
        }
        let pool = self.eval.pool;
        let new_units = &pool.sentence(swap.sentence)?.units;
        let old_units = &pool.sentence(old_id)?.units;

        let mut delta: Vec<(usize, f64)> = old_units
            .iter()
            .map(|&u| (u, -1.0))
            .chain(new_units.iter().map(|&u| (u, 1.0)))
            .collect();
        delta.sort_unstable_by_key(|&(u, _)| u);

        let real = self.eval.real;
        let counts = &self.set_counts[swap.set];
        let mut eff = SwapEffect {
            set_cos: 0.0,
            set_dot: self.set_dot[swap.set],
            set_norm2: self.set_norm2[swap.set],
            script_dot: self.script_dot,
            script_norm2: self.script_norm2,
            covered: self.covered,
        };
        let mut i = 0;
        while i < delta.len() {
            let u = delta[i].0;
            let mut d = 0.0;
            while i < delta.len() && delta[i].0 == u {
                d += delta[i].1;
                i += 1;
            }
            if d == 0.0 {
                continue;
            }
            let c = counts[u];
            eff.set_norm2 += d * (2.0 * c + d);
            eff.set_dot += d * real[u];
            let total = self.script_counts[u];
            eff.script_norm2 += d * (2.0 * total + d);
            eff.script_dot += d * real[u];
            if total == 0.0 && total + d > 0.0 {
                eff.covered += 1;
            } else if total > 0.0 && total + d == 0.0 {
                eff.covered -= 1;
            }
        }
        eff.set_cos = cosine_from_parts(eff.set_dot, eff.set_norm2, self.eval.real_norm);
        Ok(eff)
    }

    fn total_of(&self, swap: Swap, eff: &SwapEffect) -> f64 {
        let mean = mean_in_order(self.set_cos.len(), |i| {
            if i == swap.set {
                eff.set_cos
            } else {
                self.set_cos[i]
            }
        });
        weighted_total(
            &self.eval.weights,
            cosine_from_parts(eff.script_dot, eff.script_norm2, self.eval.real_norm),
            self.coverage_of(eff.covered),
            mean,
        )
    }

    /// Total fitness the script would have after `swap`.
    pub fn preview_total(&self, swap: Swap) -> Result<f64> {
        let eff = self.effect(swap)?;
        Ok(self.total_of(swap, &eff))
    }

    /// Full breakdown the script would have after `swap`.
    pub fn preview(&self, swap: Swap) -> Result<FitnessBreakdown> {
        let eff = self.effect(swap)?;
        let mut per_set = self.set_cos.clone();
        per_set[swap.set] = eff.set_cos;
        Ok(FitnessBreakdown::assemble(
            cosine_from_parts(eff.script_dot, eff.script_norm2, self.eval.real_norm),
            per_set,
            self.coverage_of(eff.covered),
            &self.eval.weights,
        ))
    }

    pub fn apply(&mut self, swap: Swap) -> Result<()> {
        let eff = self.effect(swap)?;
        let old_id = self
            .script
            .get(swap.set, swap.position)
            .expect("checked by effect");
        let pool = self.eval.pool;
        for &u in &pool.sentence(old_id)?.units {
            self.set_counts[swap.set][u] -= 1.0;
            self.script_counts[u] -= 1.0;
        }
        for &u in &pool.sentence(swap.sentence)?.units {
            self.set_counts[swap.set][u] += 1.0;
            self.script_counts[u] += 1.0;
        }
        self.set_dot[swap.set] = eff.set_dot;
        self.set_norm2[swap.set] = eff.set_norm2;
        self.set_cos[swap.set] = eff.set_cos;
        self.script_dot = eff.script_dot;
        self.script_norm2 = eff.script_norm2;
        self.covered = eff.covered;
        self.members.remove(&old_id);
        self.members.insert(swap.sentence);
        self.script.sets_mut()[swap.set][swap.position] = swap.sentence;
        Ok(())
    }

    pub fn breakdown(&self) -> FitnessBreakdown {
        FitnessBreakdown::assemble(
            cosine_from_parts(self.script_dot, self.script_norm2, self.eval.real_norm),
            self.set_cos.clone(),
            self.coverage_of(self.covered),
            &self.eval.weights,
        )
    }
}

pub fn script_syllable_distribution(
    script: &Script,
    pool: &SentencePool,
    d_real: &DistributionVector,
) -> Result<f64> {
    Ok(fitness(script, pool, d_real, FitnessWeights::default())?.script_distribution)
}

/// Mean and per-set cosine similarity to the reference.
pub fn set_syllable_distribution(
    script: &Script,
    pool: &SentencePool,
    d_real: &DistributionVector,
) -> Result<(f64, Vec<f64>)> {
    let b = fitness(script, pool, d_real, FitnessWeights::default())?;
    Ok((b.set_distribution_mean, b.per_set_distribution))
}

/// Fraction of the `s` inventory units that occur in the script.
pub fn script_syllable_coverage(script: &Script, pool: &SentencePool, s: usize) -> Result<f64> {
    if s == 0 {
        return Err(Error::Domain("inventory size must be positive".into()));
    }
    let mut seen = HashSet::new();
    for id in script.ids() {
        seen.extend(pool.sentence(id)?.units.iter().copied());
    }
    Ok(seen.len() as f64 / s as f64)
}

pub fn fitness(
    script: &Script,
    pool: &SentencePool,
    d_real: &DistributionVector,
    weights: FitnessWeights,
) -> Result<FitnessBreakdown> {
    Evaluator::new(pool, d_real, weights)?.evaluate(script)
}

/// Fitness of `script` after `swap`, computed from histogram deltas.
pub fn fitness_delta(
    script: &Script,
    pool: &SentencePool,
    d_real: &DistributionVector,
    weights: FitnessWeights,
    swap: Swap,
) -> Result<FitnessBreakdown> {
    let eval = Evaluator::new(pool, d_real, weights)?;
    eval.incremental(script)?.preview(swap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Annotations, Sentence, UnitInventory};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dv(v: &[f64]) -> DistributionVector {
        DistributionVector::from_counts(v.to_vec()).unwrap()
    }

    fn pool(units: &[Vec<usize>], s: usize) -> SentencePool {
        let inv = UnitInventory::from_labels((0..s).map(|i| format!("u{i}"))).unwrap();
        let sentences = units
            .iter()
            .enumerate()
            .map(|(i, u)| Sentence {
                id: SentenceId(i as u32),
                text: String::new(),
                units: u.clone(),
                annotations: Annotations::default(),
            })
            .collect();
        SentencePool::new(inv, sentences).unwrap()
    }

    fn ids(v: &[u32]) -> Vec<SentenceId> {
        v.iter().map(|&i| SentenceId(i)).collect()
    }

    // Dense textbook cosine, independent of the sparse path.
    fn naive_cos(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    fn naive_hist(pool: &SentencePool, members: &[SentenceId]) -> Vec<f64> {
        let mut h = vec![0.0; pool.inventory().len()];
        for id in members {
            for &u in &pool.get(*id).unwrap().units {
                h[u] += 1.0;
            }
        }
        h
    }

    #[test]
    fn cosine_examples() {
        assert!(
            (cosine_similarity(&dv(&[1.0, 2.0]), &dv(&[1.0, 2.0])).unwrap() - 1.0).abs() < 1e-15
        );
        assert_eq!(
            cosine_similarity(&dv(&[1.0, 0.0]), &dv(&[0.0, 1.0])).unwrap(),
            0.0
        );
        let c = cosine_similarity(&dv(&[1.0, 1.0, 0.0]), &dv(&[1.0, 0.0, 1.0])).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
        assert!((c - naive_cos(&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0])).abs() < 1e-15);
        assert_eq!(
            cosine_similarity(&dv(&[0.0, 0.0]), &dv(&[1.0, 1.0])).unwrap(),
            0.0
        );
        assert!(matches!(
            cosine_similarity(&dv(&[1.0]), &dv(&[1.0, 2.0])),
            Err(Error::Dimension { left: 1, right: 2 })
        ));
    }

    #[test]
    fn script_distribution_scale_invariance() {
        let p = pool(&[vec![0, 1], vec![1, 2], vec![2, 2]], 3);
        let script = Script::new(vec![ids(&[0, 1, 2])]).unwrap();
        // histogram is (1, 2, 3); reference is 4x that
        let real = dv(&[4.0, 8.0, 12.0]);
        let d = script_syllable_distribution(&script, &p, &real).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_components_match_oracle() {
        let p = pool(&[vec![0, 1], vec![1, 2], vec![3], vec![0, 0, 3]], 5);
        let real = dv(&[5.0, 3.0, 2.0, 1.0, 7.0]);
        let script = Script::new(vec![ids(&[0, 2]), ids(&[1, 3])]).unwrap();
        let b = fitness(&script, &p, &real, FitnessWeights::default()).unwrap();

        let all = naive_hist(&p, &ids(&[0, 1, 2, 3]));
        let s0 = naive_cos(&naive_hist(&p, &ids(&[0, 2])), real.counts());
        let s1 = naive_cos(&naive_hist(&p, &ids(&[1, 3])), real.counts());
        assert!((b.script_distribution - naive_cos(&all, real.counts())).abs() < 1e-12);
        assert!((b.per_set_distribution[0] - s0).abs() < 1e-12);
        assert!((b.per_set_distribution[1] - s1).abs() < 1e-12);
        assert!((b.set_distribution_mean - (s0 + s1) / 2.0).abs() < 1e-12);
        assert_eq!(b.coverage, 4.0 / 5.0);
        let expect = b.script_distribution + 2.0 * b.coverage + b.set_distribution_mean;
        assert!((b.total - expect).abs() < 1e-12);
    }

    #[test]
    fn equal_sets_give_equal_mean() {
        let p = pool(&[vec![0, 1], vec![0, 1], vec![2], vec![2]], 3);
        let real = dv(&[1.0, 2.0, 3.0]);
        let script = Script::new(vec![ids(&[0, 2]), ids(&[1, 3])]).unwrap();
        let (mean, per) = set_syllable_distribution(&script, &p, &real).unwrap();
        assert_eq!(per[0], per[1]);
        assert_eq!(mean, per[0]);
        // one set spanning the whole script: set term equals script term
        let whole = Script::new(vec![ids(&[0, 1, 2, 3])]).unwrap();
        let (mean, _) = set_syllable_distribution(&whole, &p, &real).unwrap();
        assert_eq!(
            mean,
            script_syllable_distribution(&whole, &p, &real).unwrap()
        );
    }

    #[test]
    fn coverage_examples() {
        // 130 distinct units out of 1300
        let units: Vec<Vec<usize>> = (0..13).map(|i| (i * 10..i * 10 + 10).collect()).collect();
        let p = pool(&units, 1300);
        let script = Script::new(vec![(0..13).map(SentenceId).collect()]).unwrap();
        assert_eq!(script_syllable_coverage(&script, &p, 1300).unwrap(), 0.1);

        let p = pool(&[vec![0, 1], vec![2]], 3);
        let full = Script::new(vec![ids(&[0, 1])]).unwrap();
        assert_eq!(script_syllable_coverage(&full, &p, 3).unwrap(), 1.0);
        let empty = Script::new(vec![]).unwrap();
        assert_eq!(script_syllable_coverage(&empty, &p, 3).unwrap(), 0.0);
        assert!(script_syllable_coverage(&empty, &p, 0).is_err());
    }

    #[test]
    fn weights_combine_linearly() {
        let p = pool(&[vec![0], vec![1], vec![0, 2]], 3);
        let real = dv(&[3.0, 1.0, 1.0]);
        let script = Script::new(vec![ids(&[0]), ids(&[2])]).unwrap();
        let b = fitness(
            &script,
            &p,
            &real,
            FitnessWeights::new(1.0, 0.0, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(b.total, b.script_distribution);

        let w = FitnessWeights::default();
        assert!((weighted_total(&w, 0.9, 0.5, 0.7) - 2.6).abs() < 1e-12);
    }

    #[test]
    fn identity_swap_is_noop() {
        let p = pool(&[vec![0, 1], vec![1, 2], vec![2, 3], vec![3]], 4);
        let real = dv(&[1.0, 2.0, 3.0, 4.0]);
        let script = Script::new(vec![ids(&[0, 1]), ids(&[2, 3])]).unwrap();
        let w = FitnessWeights::default();
        let before = fitness(&script, &p, &real, w).unwrap();
        let swap = Swap {
            set: 1,
            position: 0,
            sentence: SentenceId(2),
        };
        assert_eq!(fitness_delta(&script, &p, &real, w, swap).unwrap(), before);
    }

    #[test]
    fn duplicate_swap_is_rejected() {
        let p = pool(&[vec![0], vec![1], vec![2]], 3);
        let real = dv(&[1.0, 1.0, 1.0]);
        let script = Script::new(vec![ids(&[0, 1])]).unwrap();
        let swap = Swap {
            set: 0,
            position: 0,
            sentence: SentenceId(1),
        };
        assert!(matches!(
            fitness_delta(&script, &p, &real, FitnessWeights::default(), swap),
            Err(Error::DuplicateSentence(SentenceId(1)))
        ));
    }

    #[test]
    fn rare_unit_swap_moves_coverage_by_one_step() {
        let p = pool(&[vec![0, 1], vec![0, 1], vec![0, 1, 4], vec![2, 3]], 5);
        let real = dv(&[4.0, 3.0, 2.0, 1.0, 1.0]);
        let script = Script::new(vec![ids(&[0, 3])]).unwrap();
        let w = FitnessWeights::default();
        let base = fitness(&script, &p, &real, w).unwrap().coverage;
        let up = fitness_delta(
            &script,
            &p,
            &real,
            w,
            Swap {
                set: 0,
                position: 0,
                sentence: SentenceId(2),
            },
        )
        .unwrap();
        assert_eq!((base * 5.0, up.coverage * 5.0), (4.0, 5.0));
        let flat = fitness_delta(
            &script,
            &p,
            &real,
            w,
            Swap {
                set: 0,
                position: 0,
                sentence: SentenceId(1),
            },
        )
        .unwrap();
        assert_eq!(flat.coverage, base);
    }

    #[test]
    fn delta_matches_full_recompute_on_random_swaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = 30;
        let units: Vec<Vec<usize>> = (0..80)
            .map(|_| {
                (0..rng.random_range(1..8))
                    .map(|_| rng.random_range(0..s))
                    .collect()
            })
            .collect();
        let p = pool(&units, s);
        let real = dv(&(0..s).map(|i| (100 / (i + 1)) as f64).collect::<Vec<_>>());
        let w = FitnessWeights::default();
        let eval = Evaluator::new(&p, &real, w).unwrap();
        for shape in [(1, 4), (3, 5), (6, 6)] {
            let mut all: Vec<SentenceId> = p.ids().collect();
            all.shuffle(&mut rng);
            let sets = all[..shape.0 * shape.1]
                .chunks(shape.1)
                .map(<[_]>::to_vec)
                .collect();
            let script = Script::new(sets).unwrap();
            let mut inc = eval.incremental(&script).unwrap();
            for _ in 0..1000 {
                let candidate = all[rng.random_range(0..all.len())];
                let swap = Swap {
                    set: rng.random_range(0..shape.0),
                    position: rng.random_range(0..shape.1),
                    sentence: candidate,
                };
                let current = inc.script().clone();
                let (set, pos) = (swap.set, swap.position);
                match current.with_replacement(set, pos, candidate) {
                    Ok(next) => {
                        let full = eval.evaluate(&next).unwrap();
                        let fast = inc.preview(swap).unwrap();
                        assert_eq!(fast, full);
                        assert_eq!(inc.preview_total(swap).unwrap(), full.total);
                        if rng.random_bool(0.5) {
                            inc.apply(swap).unwrap();
                            assert_eq!(inc.breakdown(), full);
                        }
                    }
                    Err(_) => assert!(inc.preview(swap).is_err()),
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn components_in_range_and_scale_invariant(
                units in prop::collection::vec(prop::collection::vec(0usize..8, 1..6), 6..12),
                real in prop::collection::vec(0u32..50, 8),
                scale in 1u32..20,
            ) {
                let p = pool(&units, 8);
                let real_v = dv(&real.iter().map(|&r| r as f64).collect::<Vec<_>>());
                let scaled = real_v.scaled(scale as f64);
                let script = Script::new(vec![ids(&[0, 1]), ids(&[2, 3]), ids(&[4, 5])]).unwrap();
                let w = FitnessWeights::default();
                let b = fitness(&script, &p, &real_v, w).unwrap();
                for c in [b.script_distribution, b.coverage, b.set_distribution_mean] {
                    prop_assert!((0.0..=1.0).contains(&c));
                }
                prop_assert!(b.total >= 0.0 && b.total <= w.sum());
                let bs = fitness(&script, &p, &scaled, w).unwrap();
                prop_assert!((b.script_distribution - bs.script_distribution).abs() < 1e-12);
                prop_assert!((b.set_distribution_mean - bs.set_distribution_mean).abs() < 1e-12);
                for set in script.sets() {
                    let one = Script::new(vec![set.clone()]).unwrap();
                    prop_assert!(b.coverage >= script_syllable_coverage(&one, &p, 8).unwrap());
                }
            }
        }
    }
}
