//! Genetic search over scripts.
//!
//! A chromosome is a whole [`Script`]; genes are sentences. Each generation
//! is scored, truncated to its fitter half (each survivor copied twice),
//! shuffled into pairs, and every pair is recombined set by set. There is
//! no mutation step.
//!
//! All randomness is drawn from ChaCha streams keyed by
//! `(seed, purpose, generation, index)`, so results do not depend on how
//! many rayon workers run the parallel parts.

use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DistributionVector, FitnessWeights, Script, SentenceId, SentencePool};
use crate::error::{Error, Result};
use crate::fitness::{Evaluator, FitnessBreakdown};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    /// Number of scripts per generation; must be even.
    pub population_size: usize,
    pub sets: usize,
    pub set_size: usize,
    pub weights: FitnessWeights,
    /// Stop after this many generations without a new best-so-far.
    pub patience: usize,
    /// Hard cap on evaluated generations, the initial one included.
    pub max_generations: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 25_000,
            sets: 20,
            set_size: 20,
            weights: FitnessWeights::default(),
            patience: 50,
            max_generations: 1_000,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn script_len(&self) -> usize {
        self.sets * self.set_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 || !self.population_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "population size must be even and positive, got {}",
                self.population_size
            )));
        }
        if self.sets == 0 || self.set_size == 0 {
            return Err(Error::Config("script shape must be nonzero".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.max_generations == 0 {
            return Err(Error::Config("max generations must be at least 1".into()));
        }
        FitnessWeights::new(
            self.weights.script_distribution,
            self.weights.coverage,
            self.weights.set_distribution,
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub scripts: Vec<Script>,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub max_fitness: f64,
    pub mean_fitness: f64,
    pub best_so_far: f64,
    /// Fraction of the population identical (up to in-set order) to the
    /// generation's fittest script.
    pub top_share: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GaTrace {
    pub records: Vec<GenerationRecord>,
}

impl GaTrace {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "generation",
            "max_fitness",
            "mean_fitness",
            "best_so_far",
            "top_share",
        ])
        .expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.generation.to_string(),
                r.max_fitness.to_string(),
                r.mean_fitness.to_string(),
                r.best_so_far.to_string(),
                r.top_share.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    /// Fittest script seen in any generation.
    pub best: Script,
    pub breakdown: FitnessBreakdown,
    /// Fittest script of the initial population.
    pub initial_best: Script,
    pub initial_breakdown: FitnessBreakdown,
    pub trace: GaTrace,
}

mod stream {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const CROSSOVER: u64 = 3;
    pub const REPLACE_INIT: u64 = 4;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent RNG for one `(purpose, generation, index)` slot of a run.
pub(crate) fn stream_rng(seed: u64, purpose: u64, generation: u64, index: u64) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for part in [purpose, generation, index] {
        h = splitmix64(h ^ part);
    }
    ChaCha8Rng::seed_from_u64(h)
}

pub(crate) fn replace_init_rng(seed: u64, index: u64) -> ChaCha8Rng {
    stream_rng(seed, stream::REPLACE_INIT, 0, index)
}

/// Draws one script of the configured shape uniformly without replacement.
fn random_script(ids: &[SentenceId], sets: usize, set_size: usize, rng: &mut impl Rng) -> Script {
    let picked = index::sample(rng, ids.len(), sets * set_size);
    let chosen: Vec<SentenceId> = picked.iter().map(|i| ids[i]).collect();
    Script::new_unchecked(chosen.chunks(set_size).map(<[_]>::to_vec).collect())
}

pub fn init_population(pool: &SentencePool, config: &GaConfig) -> Result<Population> {
    config.validate()?;
    if pool.len() < config.script_len() {
        return Err(Error::Capacity {
            needed: config.script_len(),
            available: pool.len(),
        });
    }
    let ids: Vec<SentenceId> = pool.ids().collect();
    let scripts = (0..config.population_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, stream::INIT, 0, i as u64);
            random_script(&ids, config.sets, config.set_size, &mut rng)
        })
        .collect();
    Ok(Population {
        scripts,
        generation: 0,
    })
}

pub fn evaluate_population(
    eval: &Evaluator<'_>,
    scripts: &[Script],
) -> Result<Vec<FitnessBreakdown>> {
    scripts
        .par_iter()
        .map_init(
            || eval.scratch(),
            |scratch, s| eval.evaluate_with(s, scratch),
        )
        .collect()
}

/// Selection order for truncation: indices of the fitter half, sorted by
/// descending fitness (ties by lower index), each listed twice.
pub fn truncation_indices(totals: &[f64]) -> Vec<usize> {
    debug_assert!(totals.len().is_multiple_of(2));
    let mut order: Vec<usize> = (0..totals.len()).collect();
    order.sort_by(|&a, &b| totals[b].total_cmp(&totals[a]));
    order
        .into_iter()
        .take(totals.len() / 2)
        .flat_map(|i| [i, i])
        .collect()
}

/// Truncation selection: the fitter half of `pop`, each script twice.
pub fn truncation_select(pop: &Population, eval: &Evaluator<'_>) -> Result<Population> {
    if !pop.scripts.len().is_multiple_of(2) {
        return Err(Error::Config("population size must be even".into()));
    }
    let fit = evaluate_population(eval, &pop.scripts)?;
    let totals: Vec<f64> = fit.iter().map(|b| b.total).collect();
    Ok(Population {
        scripts: truncation_indices(&totals)
            .into_iter()
            .map(|i| pop.scripts[i].clone())
            .collect(),
        generation: pop.generation,
    })
}

/// Which positions of set `i` in each parent are held out of the exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldPlan {
    pub held_a: Vec<bool>,
    pub held_b: Vec<bool>,
}

impl HoldPlan {
    pub fn held_count(&self) -> (usize, usize) {
        let count = |v: &[bool]| v.iter().filter(|&&h| h).count();
        (count(&self.held_a), count(&self.held_b))
    }
}

fn sorted_ids(s: &Script) -> Vec<SentenceId> {
    let mut v: Vec<SentenceId> = s.ids().collect();
    v.sort_unstable();
    v
}

fn hold_plan_sorted(
    set_a: &[SentenceId],
    set_b: &[SentenceId],
    all_a: &[SentenceId],
    all_b: &[SentenceId],
    rng: &mut impl Rng,
) -> HoldPlan {
    let mut held_a: Vec<bool> = set_a
        .iter()
        .map(|id| all_b.binary_search(id).is_ok())
        .collect();
    let mut held_b: Vec<bool> = set_b
        .iter()
        .map(|id| all_a.binary_search(id).is_ok())
        .collect();
    let count = |v: &[bool]| v.iter().filter(|&&h| h).count();
    let (ca, cb) = (count(&held_a), count(&held_b));
    let (fewer, k) = if ca > cb {
        (&mut held_b, ca - cb)
    } else {
        (&mut held_a, cb - ca)
    };
    if k > 0 {
        let free: Vec<usize> = (0..fewer.len()).filter(|&p| !fewer[p]).collect();
        for j in index::sample(rng, free.len(), k) {
            fewer[free[j]] = true;
        }
    }
    HoldPlan { held_a, held_b }
}

/// Hold marks for set `set` of parents `a` and `b`: every sentence that also
/// occurs anywhere in the other parent, plus random extra holds in the set
/// with fewer, so both sets hold the same number of sentences.
pub fn plan_holds(a: &Script, b: &Script, set: usize, rng: &mut impl Rng) -> HoldPlan {
    hold_plan_sorted(
        &a.sets()[set],
        &b.sets()[set],
        &sorted_ids(a),
        &sorted_ids(b),
        rng,
    )
}

fn split_held(set: &[SentenceId], held: &[bool]) -> (Vec<SentenceId>, Vec<SentenceId>) {
    let mut h = Vec::new();
    let mut f = Vec::new();
    for (&id, &is_held) in set.iter().zip(held) {
        if is_held {
            h.push(id);
        } else {
            f.push(id);
        }
    }
    (h, f)
}

/// Set-paired one-point crossover.
///
/// For each set index the two parents' sets are recombined on their
/// non-held sentences only: held sentences move to the front, a cut point
/// is drawn strictly inside the free region, and the free suffixes are
/// exchanged. Set pairs with fewer than two free sentences are left as is.
/// A sentence only ever moves into a script that does not already contain
/// it, so both children keep the no-duplicate invariant.
pub fn crossover_pair(a: &Script, b: &Script, rng: &mut impl Rng) -> Result<(Script, Script)> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    let all_a = sorted_ids(a);
    let all_b = sorted_ids(b);
    let mut out_a = Vec::with_capacity(a.sets().len());
    let mut out_b = Vec::with_capacity(b.sets().len());
    for (sa, sb) in a.sets().iter().zip(b.sets()) {
        let plan = hold_plan_sorted(sa, sb, &all_a, &all_b, rng);
        let (ha, mut fa) = split_held(sa, &plan.held_a);
        let (hb, mut fb) = split_held(sb, &plan.held_b);
        debug_assert_eq!(fa.len(), fb.len());
        let free = fa.len();
        if free < 2 {
            out_a.push(sa.clone());
            out_b.push(sb.clone());
            continue;
        }
        let cut = rng.random_range(1..free);
        fa[cut..].swap_with_slice(&mut fb[cut..]);
        out_a.push(ha.into_iter().chain(fa).collect());
        out_b.push(hb.into_iter().chain(fb).collect());
    }
    Ok((Script::new_unchecked(out_a), Script::new_unchecked(out_b)))
}

fn argmax(fit: &[FitnessBreakdown]) -> usize {
    let mut best = 0;
    for (i, f) in fit.iter().enumerate() {
        if f.total > fit[best].total {
            best = i;
        }
    }
    best
}

fn record(
    generation: usize,
    scripts: &[Script],
    fit: &[FitnessBreakdown],
    best_so_far: f64,
) -> GenerationRecord {
    let top = argmax(fit);
    let max_fitness = fit[top].total;
    let mean_fitness = fit.iter().map(|f| f.total).sum::<f64>() / fit.len() as f64;
    let canon = scripts[top].canonical();
    let same = scripts
        .par_iter()
        .zip(fit)
        .filter(|(s, f)| f.total == max_fitness && s.canonical() == canon)
        .count();
    GenerationRecord {
        generation,
        max_fitness,
        mean_fitness,
        best_so_far,
        top_share: same as f64 / scripts.len() as f64,
    }
}

/// Runs the GA from a random initial population.
pub fn evolve(
    pool: &SentencePool,
    d_real: &DistributionVector,
    config: &GaConfig,
) -> Result<GaOutcome> {
    let initial = init_population(pool, config)?;
    evolve_from(pool, d_real, config, initial)
}

/// Runs the GA from a given initial population. The population size and
/// shape are taken from `initial`; `config` supplies the weights, stopping
/// rule and seed.
pub fn evolve_from(
    pool: &SentencePool,
    d_real: &DistributionVector,
    config: &GaConfig,
    initial: Population,
) -> Result<GaOutcome> {
    let eval = Evaluator::new(pool, d_real, config.weights)?;
    let mut scripts = initial.scripts;
    if scripts.is_empty() || !scripts.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "population size must be even and positive, got {}",
            scripts.len()
        )));
    }
    if config.patience == 0 || config.max_generations == 0 {
        return Err(Error::Config(
            "patience and max generations must be positive".into(),
        ));
    }
    let shape = scripts[0].shape();
    for s in &scripts {
        if s.shape() != shape {
            return Err(Error::ShapeMismatch {
                left: shape,
                right: s.shape(),
            });
        }
        s.validate(pool)?;
    }

    let mut generation = initial.generation;
    let mut fit = evaluate_population(&eval, &scripts)?;
    let top = argmax(&fit);
    let initial_best = scripts[top].clone();
    let initial_breakdown = fit[top].clone();
    let mut best = initial_best.clone();
    let mut best_fit = initial_breakdown.clone();
    let mut trace = GaTrace::default();
    trace
        .records
        .push(record(generation, &scripts, &fit, best_fit.total));

    let mut stale = 0;
    let mut evaluated = 1;
    while stale < config.patience && evaluated < config.max_generations {
        let totals: Vec<f64> = fit.iter().map(|f| f.total).collect();
        let mut parents: Vec<&Script> = truncation_indices(&totals)
            .into_iter()
            .map(|i| &scripts[i])
            .collect();
        parents.shuffle(&mut stream_rng(
            config.seed,
            stream::SHUFFLE,
            generation as u64,
            0,
        ));

        let children: Vec<(Script, Script)> = parents
            .par_chunks(2)
            .enumerate()
            .map(|(k, pair)| {
                let mut rng =
                    stream_rng(config.seed, stream::CROSSOVER, generation as u64, k as u64);
                crossover_pair(pair[0], pair[1], &mut rng)
            })
            .collect::<Result<_>>()?;
        scripts = children.into_iter().flat_map(|(x, y)| [x, y]).collect();
        generation += 1;
        evaluated += 1;

        fit = evaluate_population(&eval, &scripts)?;
        let top = argmax(&fit);
        if fit[top].total > best_fit.total {
            best = scripts[top].clone();
            best_fit = fit[top].clone();
            stale = 0;
        } else {
            stale += 1;
        }
        trace
            .records
            .push(record(generation, &scripts, &fit, best_fit.total));
    }

    Ok(GaOutcome {
        best,
        breakdown: best_fit,
        initial_best,
        initial_breakdown,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Annotations, Sentence, UnitInventory};

    fn id(i: u32) -> SentenceId {
        SentenceId(i)
    }

    fn ids(v: &[u32]) -> Vec<SentenceId> {
        v.iter().map(|&i| SentenceId(i)).collect()
    }

    fn toy_pool(n: usize, s: usize, seed: u64) -> (SentencePool, DistributionVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = UnitInventory::from_labels((0..s).map(|i| format!("u{i}"))).unwrap();
        let sentences = (0..n)
            .map(|i| Sentence {
                id: id(i as u32),
                text: String::new(),
                units: (0..rng.random_range(1..5))
                    .map(|_| rng.random_range(0..s))
                    .collect(),
                annotations: Annotations::default(),
            })
            .collect();
        let real = (0..s).map(|i| (60 / (i + 1)) as f64).collect();
        (
            SentencePool::new(inv, sentences).unwrap(),
            DistributionVector::from_counts(real).unwrap(),
        )
    }

    fn small_config(n_p: usize, sets: usize, set_size: usize) -> GaConfig {
        GaConfig {
            population_size: n_p,
            sets,
            set_size,
            patience: 10,
            max_generations: 100,
            seed: 5,
            ..GaConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(small_config(3, 1, 1).validate().is_err());
        assert!(small_config(4, 0, 1).validate().is_err());
        let mut c = small_config(4, 1, 1);
        c.patience = 0;
        assert!(c.validate().is_err());
        assert!(small_config(4, 1, 1).validate().is_ok());
    }

    #[test]
    fn exact_size_pool_gives_permutations() {
        let (pool, _) = toy_pool(6, 5, 1);
        let pop = init_population(&pool, &small_config(8, 2, 3)).unwrap();
        for s in &pop.scripts {
            let mut all: Vec<_> = s.ids().collect();
            all.sort();
            assert_eq!(all, ids(&[0, 1, 2, 3, 4, 5]));
        }
    }

    #[test]
    fn init_is_seeded_and_capacity_checked() {
        let (pool, _) = toy_pool(20, 5, 1);
        let cfg = small_config(10, 2, 3);
        assert_eq!(
            init_population(&pool, &cfg).unwrap(),
            init_population(&pool, &cfg).unwrap()
        );
        let other = GaConfig {
            seed: 6,
            ..cfg.clone()
        };
        assert_ne!(
            init_population(&pool, &cfg).unwrap(),
            init_population(&pool, &other).unwrap()
        );
        assert!(matches!(
            init_population(&pool, &small_config(10, 7, 3)),
            Err(Error::Capacity {
                needed: 21,
                available: 20
            })
        ));
    }

    #[test]
    fn init_samples_uniformly() {
        // Each of 8 sentences lands in a 4-of-8 draw with probability 1/2.
        let (pool, _) = toy_pool(8, 3, 2);
        let pop = init_population(&pool, &small_config(10_000, 1, 4)).unwrap();
        let mut hits = [0usize; 8];
        for s in &pop.scripts {
            for x in s.ids() {
                hits[x.0 as usize] += 1;
            }
        }
        let n = 10_000.0;
        let sigma = (n * 0.5 * 0.5f64).sqrt();
        for h in hits {
            assert!((h as f64 - n / 2.0).abs() <= 3.0 * sigma, "{hits:?}");
        }
    }

    #[test]
    fn truncation_examples() {
        let order = truncation_indices(&[1.0, 4.0, 2.0, 3.0]);
        assert_eq!(order, vec![1, 1, 3, 3]);
        assert_eq!(truncation_indices(&[5.0; 4]), vec![0, 0, 1, 1]);
    }

    #[test]
    fn truncation_select_keeps_best() {
        let (pool, real) = toy_pool(30, 6, 3);
        let cfg = small_config(12, 2, 3);
        let eval = Evaluator::new(&pool, &real, cfg.weights).unwrap();
        let pop = init_population(&pool, &cfg).unwrap();
        let before = evaluate_population(&eval, &pop.scripts).unwrap();
        let after =
            evaluate_population(&eval, &truncation_select(&pop, &eval).unwrap().scripts).unwrap();
        let max = |f: &[FitnessBreakdown]| f.iter().map(|b| b.total).fold(f64::MIN, f64::max);
        assert_eq!(max(&before), max(&after));
        assert_eq!(after.len(), 12);
    }

    #[test]
    fn shared_parents_are_unchanged() {
        let a = Script::new(vec![ids(&[1, 2, 3]), ids(&[4, 5, 6])]).unwrap();
        let b = Script::new(vec![ids(&[6, 5, 4]), ids(&[3, 2, 1])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (x, y) = crossover_pair(&a, &b, &mut rng).unwrap();
        assert_eq!(x, a);
        assert_eq!(y, b);
    }

    #[test]
    fn disjoint_parents_do_plain_one_point_crossover() {
        let a = Script::new(vec![ids(&[1, 2, 3, 4])]).unwrap();
        let b = Script::new(vec![ids(&[11, 12, 13, 14])]).unwrap();
        let mut seen_cuts = std::collections::BTreeSet::new();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plan = plan_holds(&a, &b, 0, &mut rng);
            assert_eq!(plan.held_count(), (0, 0));
            let (x, y) = crossover_pair(&a, &b, &mut rng).unwrap();
            let xa = &x.sets()[0];
            let cut = xa.iter().position(|s| s.0 > 10).unwrap();
            assert!((1..4).contains(&cut));
            assert_eq!(&xa[..cut], &a.sets()[0][..cut]);
            assert_eq!(&xa[cut..], &b.sets()[0][cut..]);
            assert_eq!(&y.sets()[0][cut..], &a.sets()[0][cut..]);
            seen_cuts.insert(cut);
        }
        assert_eq!(seen_cuts.len(), 3);
    }

    #[test]
    fn hold_example_from_two_scripts() {
        // Set 1 of A holds 23 and 2 (both in B); set 1 of B holds 43 (in A)
        // and needs one extra random hold.
        let a = Script::new(vec![
            ids(&[23, 2, 7, 8, 9 + 100]),
            ids(&[43, 50, 51, 52, 53]),
        ])
        .unwrap();
        let b = Script::new(vec![ids(&[43, 9, 60, 61, 62]), ids(&[23, 2, 70, 71, 72])]).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plan = plan_holds(&a, &b, 0, &mut rng);
            assert_eq!(plan.held_a, vec![true, true, false, false, false]);
            assert!(plan.held_b[0], "43 is in A");
            assert_eq!(plan.held_count(), (2, 2));
        }
    }

    #[test]
    fn crossover_rejects_shape_mismatch() {
        let a = Script::new(vec![ids(&[1, 2])]).unwrap();
        let b = Script::new(vec![ids(&[3]), ids(&[4])]).unwrap();
        assert!(crossover_pair(&a, &b, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn evolve_is_deterministic_and_monotone() {
        let (pool, real) = toy_pool(60, 12, 4);
        let cfg = small_config(40, 3, 4);
        let r1 = evolve(&pool, &real, &cfg).unwrap();
        let r2 = evolve(&pool, &real, &cfg).unwrap();
        assert_eq!(r1.best, r2.best);
        assert_eq!(r1.trace, r2.trace);
        for w in r1.trace.records.windows(2) {
            assert!(w[1].best_so_far >= w[0].best_so_far);
        }
        let last = r1.trace.records.last().unwrap();
        assert_eq!(last.best_so_far, r1.breakdown.total);
        assert!(r1.breakdown.total >= r1.initial_breakdown.total);
        r1.best.validate(&pool).unwrap();
    }

    #[test]
    fn evolve_independent_of_worker_count() {
        let (pool, real) = toy_pool(60, 12, 4);
        let cfg = small_config(40, 3, 4);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| evolve(&pool, &real, &cfg).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.best, b.best);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn patience_one_keeps_initial_optimum() {
        let (pool, real) = toy_pool(5, 4, 9);
        // 5 choose 4 = 5 scripts; with 40 draws the optimum is almost surely present
        let cfg = GaConfig {
            patience: 1,
            ..small_config(40, 1, 4)
        };
        let out = evolve(&pool, &real, &cfg).unwrap();
        let eval = Evaluator::new(&pool, &real, cfg.weights).unwrap();
        let best = (0..5u32)
            .map(|skip| {
                let s: Vec<_> = (0..5u32).filter(|&i| i != skip).map(SentenceId).collect();
                eval.evaluate(&Script::new(vec![s]).unwrap()).unwrap().total
            })
            .fold(f64::MIN, f64::max);
        assert_eq!(out.initial_breakdown.total, best);
        assert_eq!(out.breakdown.total, best);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let (pool, real) = toy_pool(30, 8, 4);
        let out = evolve(&pool, &real, &small_config(10, 2, 2)).unwrap();
        let csv = out.trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("generation,max_fitness,mean_fitness,best_so_far,top_share")
        );
        assert_eq!(lines.count(), out.trace.records.len());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn crossover_preserves_invariants(
                sets in 1usize..5,
                size in 1usize..6,
                universe in 0usize..30,
                seed in any::<u64>(),
            ) {
                let n = sets * size;
                let universe = n + universe;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let all: Vec<SentenceId> = (0..universe as u32).map(SentenceId).collect();
                let a = random_script(&all, sets, size, &mut rng);
                let b = random_script(&all, sets, size, &mut rng);
                let (x, y) = crossover_pair(&a, &b, &mut rng).unwrap();
                Script::check(x.sets()).unwrap();
                Script::check(y.sets()).unwrap();
                prop_assert_eq!(x.shape(), a.shape());
                prop_assert_eq!(y.shape(), b.shape());
                let mut before: Vec<_> = a.ids().chain(b.ids()).collect();
                let mut after: Vec<_> = x.ids().chain(y.ids()).collect();
                before.sort();
                after.sort();
                prop_assert_eq!(before, after);
            }
        }
    }
}
