//! Unsupervised Clonal Selection Classification.
//!
//! Each antibody encodes `K` cluster centres as one flat real vector. Every
//! generation the population is ranked by affinity (`1/J`), cloned in
//! proportion to rank, the clones are perturbed with Gaussian noise whose
//! scale shrinks as normalised affinity grows, parents and mutants are pooled
//! and the best `n` kept, and finally the `L` worst are replaced by fresh
//! uniform antibodies drawn inside the data bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::clustering::{
    evaluate_to_fixed_point, CentroidSet, ClusterError, ClusteringSolution, EvaluatedSolution,
};
use crate::dataset::{compute_bounds, DataBounds, DataSet};
use crate::error::RunError;

#[derive(Debug, Clone, PartialEq)]
pub struct UcscConfig {
    /// Population size.
    pub n: usize,
    /// Clonal factor.
    pub beta: f64,
    /// Number of worst antibodies replaced with random ones each generation.
    pub l_replace: usize,
    pub generations: usize,
    pub k: usize,
    pub seed: u64,
    /// Write the refined centres back into the genome. When false, the
    /// refined centres only determine affinity.
    pub lamarckian: bool,
    /// Cap on assign/mean-update steps per evaluation.
    pub max_refine_steps: usize,
}

impl Default for UcscConfig {
    fn default() -> Self {
        Self {
            n: 10,
            beta: 5.0,
            l_replace: 4,
            generations: 30,
            k: 2,
            seed: 0,
            lamarckian: true,
            max_refine_steps: 1000,
        }
    }
}

impl UcscConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.n < 2 {
            return Err(RunError::config("n", "population size must be at least 2"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(RunError::config("beta", "clonal factor must be positive"));
        }
        if self.l_replace >= self.n {
            return Err(RunError::config(
                "l_replace",
                format!("must be below the population size {}", self.n),
            ));
        }
        if self.generations == 0 {
            return Err(RunError::config("generations", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(RunError::config("k", "must be at least 1"));
        }
        if self.max_refine_steps == 0 {
            return Err(RunError::config("max_refine_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// A candidate solution: `K` centres laid out centre-major, plus the cached
/// result of its last evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Antibody {
    genome: CentroidSet,
    evaluation: Option<EvaluatedSolution>,
}

impl Antibody {
    pub fn new(genome: CentroidSet) -> Self {
        Self {
            genome,
            evaluation: None,
        }
    }

    pub fn genome(&self) -> &CentroidSet {
        &self.genome
    }

    pub fn evaluation(&self) -> Option<&EvaluatedSolution> {
        self.evaluation.as_ref()
    }

    pub fn affinity(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.affinity)
    }

    pub fn j_value(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.j_value)
    }

    pub fn is_evaluated(&self) -> bool {
        self.evaluation.is_some()
    }

    /// Scores the antibody: assign points to the encoded centres, then
    /// alternate mean update and reassignment until the partition settles.
    /// Affinity is `1/J` of the settled partition at its means, or zero if
    /// the encoded centres leave a cluster empty.
    pub fn evaluate(
        &mut self,
        data: &DataSet,
        lamarckian: bool,
        max_refine_steps: usize,
    ) -> Result<(), ClusterError> {
        let eval = evaluate_to_fixed_point(data, &self.genome, max_refine_steps)?;
        if lamarckian {
            self.genome = eval.centroids.clone();
        }
        self.evaluation = Some(eval);
        Ok(())
    }

    fn affinity_or_zero(&self) -> f64 {
        self.affinity().unwrap_or(0.0)
    }
}

/// Draws each centre coordinate uniformly inside `[lower[i], upper[i]]`.
pub fn generate_random_antibody<R: Rng + ?Sized>(
    bounds: &DataBounds,
    k: usize,
    rng: &mut R,
) -> Antibody {
    let dims = bounds.dims();
    let mut coords = Vec::with_capacity(dims * k);
    for _ in 0..k {
        for (lo, hi) in bounds.lower.iter().zip(&bounds.upper) {
            let u: f64 = rng.random();
            coords.push(lo + (hi - lo) * u);
        }
    }
    Antibody::new(CentroidSet::from_flat(coords, dims).expect("bounds are finite"))
}

/// Population of antibodies, ordered by descending affinity after [`sort`].
///
/// [`sort`]: Population::sort
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Antibody>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Stable sort by descending affinity; unevaluated members rank as zero.
    pub fn sort(&mut self) {
        sort_descending(&mut self.members);
    }

    pub fn affinities(&self) -> Vec<f64> {
        self.members
            .iter()
            .map(Antibody::affinity_or_zero)
            .collect()
    }

    pub fn best(&self) -> Option<&Antibody> {
        self.members.first()
    }

    pub fn evaluate_all(
        &mut self,
        data: &DataSet,
        config: &UcscConfig,
    ) -> Result<(), ClusterError> {
        evaluate_batch(&mut self.members, data, config)
    }
}

fn sort_descending(members: &mut [Antibody]) {
    members.sort_by(|a, b| b.affinity_or_zero().total_cmp(&a.affinity_or_zero()));
}

fn evaluate_batch(
    members: &mut [Antibody],
    data: &DataSet,
    config: &UcscConfig,
) -> Result<(), ClusterError> {
    members
        .par_iter_mut()
        .filter(|a| !a.is_evaluated())
        .try_for_each(|a| a.evaluate(data, config.lamarckian, config.max_refine_steps))
}

/// `n` random antibodies, not yet evaluated.
pub fn init_population<R: Rng + ?Sized>(
    bounds: &DataBounds,
    config: &UcscConfig,
    rng: &mut R,
) -> Population {
    Population {
        members: (0..config.n)
            .map(|_| generate_random_antibody(bounds, config.k, rng))
            .collect(),
    }
}

/// Clones per rank: rank `l` (1-based, best first) receives `round(beta*n/l)`
/// with halves rounded away from zero.
pub fn clone_counts(n: usize, beta: f64) -> Vec<usize> {
    (1..=n)
        .map(|l| (beta * n as f64 / l as f64).round() as usize)
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormalizeError {
    #[error("cannot normalise an empty affinity list")]
    Empty,
    #[error("affinity {0} is negative or not a number")]
    Invalid(f64),
}

/// Min-max scales affinities into `[0, 1]`. If all values are equal every
/// output is 1.
pub fn normalize_affinities(raw: &[f64]) -> Result<Vec<f64>, NormalizeError> {
    if raw.is_empty() {
        return Err(NormalizeError::Empty);
    }
    if let Some(&bad) = raw.iter().find(|a| a.is_nan() || **a < 0.0) {
        return Err(NormalizeError::Invalid(bad));
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return Ok(vec![1.0; raw.len()]);
    }
    Ok(raw.iter().map(|a| (a - min) / range).collect())
}

/// Mutation scale `rho * exp(-normalized_aff)`.
pub fn mutation_scale(normalized_aff: f64, rho: f64) -> f64 {
    rho * (-normalized_aff).exp()
}

/// Adds independent `N(0, 1)` noise scaled by [`mutation_scale`] to every
/// genome entry. The result is unevaluated and not clamped to the data range.
pub fn hypermutate<R: Rng + ?Sized>(
    antibody: &Antibody,
    normalized_aff: f64,
    rho: f64,
    rng: &mut R,
) -> Antibody {
    let alpha = mutation_scale(normalized_aff, rho);
    let mut genome = antibody.genome.clone();
    for g in genome.as_flat_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *g += alpha * z;
    }
    Antibody::new(genome)
}

/// Population summary taken at the end of a generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// `J` of the best antibody; infinite while every antibody has an empty
    /// cluster.
    pub best_j: f64,
    /// Mean `J` over members without empty clusters.
    pub mean_j: Option<f64>,
    pub best_affinity: f64,
    /// Antibodies evaluated this generation that left a cluster empty.
    pub empty_cluster_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerationTrace {
    pub records: Vec<GenerationRecord>,
}

impl GenerationTrace {
    pub fn best_j(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.best_j)
    }

    /// First generation (1-based) whose best `J` equals the final best `J`.
    pub fn generation_reaching_final(&self) -> Option<usize> {
        let last = self.records.last()?.best_j;
        self.records
            .iter()
            .find(|r| r.best_j == last)
            .map(|r| r.generation)
    }
}

/// Observer for population state at each generation boundary; used by tests
/// and diagnostics.
pub trait GenerationObserver {
    fn on_generation(&mut self, generation: usize, population: &Population, clones_made: usize);
}

impl GenerationObserver for () {
    fn on_generation(&mut self, _: usize, _: &Population, _: usize) {}
}

pub fn run_ucsc(
    data: &DataSet,
    config: &UcscConfig,
) -> Result<(ClusteringSolution, GenerationTrace), RunError> {
    run_ucsc_observed(data, config, &mut ())
}

pub fn run_ucsc_observed<O: GenerationObserver>(
    data: &DataSet,
    config: &UcscConfig,
    observer: &mut O,
) -> Result<(ClusteringSolution, GenerationTrace), RunError> {
    config.validate()?;
    if config.k > data.n_points() {
        return Err(RunError::TooManyClusters {
            k: config.k,
            n: data.n_points(),
        });
    }
    let bounds = compute_bounds(data);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let counts = clone_counts(config.n, config.beta);
    let total_clones: usize = counts.iter().sum();

    let mut population = init_population(&bounds, config, &mut rng);
    let mut trace = GenerationTrace::default();

    for generation in 1..=config.generations {
        // Affinities are cached; any unevaluated member is scored here.
        population.evaluate_all(data, config)?;
        population.sort();

        let normalized = normalize_affinities(&population.affinities())
            .expect("population is non-empty with non-negative affinities");
        let mut clones = Vec::with_capacity(total_clones);
        for ((parent, &count), &aff) in population.members.iter().zip(&counts).zip(&normalized) {
            for _ in 0..count {
                clones.push(hypermutate(parent, aff, bounds.rho, &mut rng));
            }
        }
        evaluate_batch(&mut clones, data, config)?;
        let mut empty_cluster_count = clones.iter().filter(|c| has_empty(c)).count();

        let mut pool = std::mem::take(&mut population.members);
        pool.extend(clones);
        sort_descending(&mut pool);
        pool.truncate(config.n);
        population.members = pool;

        let keep = config.n - config.l_replace;
        for slot in &mut population.members[keep..] {
            *slot = generate_random_antibody(&bounds, config.k, &mut rng);
        }
        evaluate_batch(&mut population.members[keep..], data, config)?;
        empty_cluster_count += population.members[keep..]
            .iter()
            .filter(|c| has_empty(c))
            .count();
        population.sort();

        trace
            .records
            .push(record(generation, &population, empty_cluster_count));
        observer.on_generation(generation, &population, total_clones);
    }

    let best = population.best().expect("population is non-empty");
    let final_eval = evaluate_to_fixed_point(data, best.genome(), config.max_refine_steps)?;
    Ok((
        ClusteringSolution {
            centroids: final_eval.centroids,
            assignment: final_eval.assignment,
            j_value: final_eval.j_value,
            seed: config.seed,
            iterations: config.generations,
        },
        trace,
    ))
}

fn has_empty(a: &Antibody) -> bool {
    a.evaluation().is_some_and(|e| e.has_empty_cluster)
}

fn record(
    generation: usize,
    population: &Population,
    empty_cluster_count: usize,
) -> GenerationRecord {
    let best = population.best().and_then(Antibody::evaluation);
    let best_affinity = best.map_or(0.0, |e| e.affinity);
    let best_j = match best {
        Some(e) if e.affinity > 0.0 => e.j_value,
        _ => f64::INFINITY,
    };
    let live: Vec<f64> = population
        .members
        .iter()
        .filter_map(Antibody::evaluation)
        .filter(|e| !e.has_empty_cluster)
        .map(|e| e.j_value)
        .collect();
    let mean_j = (!live.is_empty()).then(|| live.iter().sum::<f64>() / live.len() as f64);
    GenerationRecord {
        generation,
        best_j,
        mean_j,
        best_affinity,
        empty_cluster_count,
    }
}
