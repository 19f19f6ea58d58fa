//! Seeded synthetic pools with Zipf-distributed units, for benchmarks and
//! tests where no annotated corpus is at hand.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    Annotations, DistributionVector, Sentence, SentenceId, SentencePool, UnitInventory,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub sentences: usize,
    pub inventory: usize,
    pub min_units: usize,
    pub max_units: usize,
    pub exponent: f64,
    /// Probability that a unit is drawn uniformly instead of by rank.
    pub noise: f64,
    /// Token count of the simulated reference corpus.
    pub reference_tokens: f64,
    /// Number of topics; each sentence draws from one topic, which boosts a
    /// random subset of units. Zero disables topics.
    pub topics: usize,
    /// Fraction of the inventory boosted by each topic.
    pub topic_share: f64,
    pub topic_boost: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sentences: 5000,
            inventory: 400,
            min_units: 6,
            max_units: 14,
            exponent: 1.0,
            noise: 0.15,
            reference_tokens: 1e6,
            topics: 0,
            topic_share: 0.05,
            topic_boost: 10.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sentences == 0 || self.inventory == 0 {
            return Err(Error::Config(
                "synthetic pool needs sentences and units".into(),
            ));
        }
        if self.min_units == 0 || self.min_units > self.max_units {
            return Err(Error::Config(format!(
                "bad sentence length range {}..={}",
                self.min_units, self.max_units
            )));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!(
                "noise {} outside [0, 1]",
                self.noise
            )));
        }
        if !self.exponent.is_finite() || self.exponent < 0.0 {
            return Err(Error::Config(format!("bad exponent {}", self.exponent)));
        }
        if !self.reference_tokens.is_finite() || self.reference_tokens <= 0.0 {
            return Err(Error::Config(
                "reference token count must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.topic_share) {
            return Err(Error::Config(format!(
                "topic share {} outside [0, 1]",
                self.topic_share
            )));
        }
        if !self.topic_boost.is_finite() || self.topic_boost < 1.0 {
            return Err(Error::Config(format!(
                "topic boost {} below 1",
                self.topic_boost
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub pool: SentencePool,
    /// Integer counts proportional to the rank weights.
    pub d_real: DistributionVector,
}

/// Unnormalized weights `1 / rank^exponent` for ranks `1..=n`.
pub fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-exponent)).collect()
}

/// Label of the unit at `rank`: five tones per base syllable.
pub fn unit_label(rank: usize) -> String {
    format!("s{}{}", rank / 5, rank % 5 + 1)
}

pub fn generate(config: &SynthConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let n = config.inventory;
    let weights = zipf_weights(n, config.exponent);
    let total: f64 = weights.iter().sum();
    let inventory = UnitInventory::from_labels((0..n).map(unit_label))?;
    let d_real = DistributionVector::from_counts(
        weights
            .iter()
            .map(|w| (config.reference_tokens * w / total).round())
            .collect(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let boosted = ((config.topic_share * n as f64).round() as usize).clamp(1, n);
    let mut samplers = Vec::with_capacity(config.topics.max(1));
    let weighted = |w: &[f64]| WeightedIndex::new(w).map_err(|e| Error::Domain(e.to_string()));
    if config.topics == 0 {
        samplers.push(weighted(&weights)?);
    }
    for _ in 0..config.topics {
        let mut w = weights.clone();
        for u in index::sample(&mut rng, n, boosted) {
            w[u] *= config.topic_boost;
        }
        samplers.push(weighted(&w)?);
    }
    let sentences = (0..config.sentences)
        .map(|i| {
            let by_rank = &samplers[rng.random_range(0..samplers.len())];
            let len = rng.random_range(config.min_units..=config.max_units);
            let units: Vec<usize> = (0..len)
                .map(|_| {
                    if rng.random_bool(config.noise) {
                        rng.random_range(0..n)
                    } else {
                        by_rank.sample(&mut rng)
                    }
                })
                .collect();
            let text = units
                .iter()
                .map(|&u| inventory.label(u))
                .collect::<Vec<_>>()
                .join(" ");
            Sentence {
                id: SentenceId(i as u32),
                text,
                units,
                annotations: Annotations::default(),
            }
        })
        .collect();
    Ok(SyntheticCorpus {
        pool: SentencePool::new(inventory, sentences)?,
        d_real,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let cfg = SynthConfig {
            sentences: 300,
            inventory: 50,
            seed: 9,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.pool.sentences(), b.pool.sentences());
        assert_eq!(a.d_real, b.d_real);
        for s in a.pool.sentences() {
            assert!((cfg.min_units..=cfg.max_units).contains(&s.units.len()));
        }
        assert!(a.d_real.counts().iter().all(|c| c.fract() == 0.0));
        assert!(a.d_real.counts().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn labels_carry_tones() {
        assert_eq!(unit_label(0), "s01");
        assert_eq!(unit_label(7), "s13");
        assert_eq!(UnitInventory::base_label(&unit_label(63)), "s12");
        let inv = UnitInventory::from_labels((0..20).map(unit_label)).unwrap();
        assert_eq!(inv.base_mapping().1, 4);
    }

    #[test]
    fn noise_free_pool_follows_rank_order() {
        let cfg = SynthConfig {
            sentences: 4000,
            inventory: 10,
            noise: 0.0,
            seed: 1,
            ..Default::default()
        };
        let c = generate(&cfg).unwrap();
        let mut counts = vec![0usize; 10];
        for s in c.pool.sentences() {
            for &u in &s.units {
                counts[u] += 1;
            }
        }
        let tokens: usize = counts.iter().sum();
        let w = zipf_weights(10, 1.0);
        let z: f64 = w.iter().sum();
        for (u, &k) in counts.iter().enumerate() {
            let p = w[u] / z;
            let sd = (tokens as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (k as f64 - tokens as f64 * p).abs() < 4.0 * sd,
                "unit {u}: {k}"
            );
        }
    }

    #[test]
    fn rejects_bad_configs() {
        for cfg in [
            SynthConfig {
                min_units: 0,
                ..Default::default()
            },
            SynthConfig {
                min_units: 9,
                max_units: 3,
                ..Default::default()
            },
            SynthConfig {
                noise: 1.5,
                ..Default::default()
            },
            SynthConfig {
                inventory: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(generate(&cfg), Err(Error::Config(_))));
        }
    }
}
