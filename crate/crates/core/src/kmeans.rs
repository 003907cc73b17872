//! Lloyd's K-means baseline. The loop minimises squared error; the reported
//! `J` is the plain-distance spread so results compare directly with UCSC.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{
    assign_points, clustering_metric, compute_centroids, squared_error, Assignment, CentroidSet,
    ClusteringSolution,
};
use crate::dataset::{compute_bounds, DataSet};
use crate::error::RunError;
use crate::ucsc::generate_random_antibody;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KMeansInit {
    /// `K` distinct data points chosen uniformly.
    #[default]
    Forgy,
    /// Each coordinate uniform inside the data's per-dimension range.
    UniformInBounds,
}

impl std::str::FromStr for KMeansInit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forgy" => Ok(Self::Forgy),
            "uniform" | "uniform-in-bounds" => Ok(Self::UniformInBounds),
            other => Err(format!(
                "unknown init '{other}' (expected forgy or uniform)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub init: KMeansInit,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            max_iterations: 1000,
            seed: 0,
            init: KMeansInit::Forgy,
        }
    }
}

impl KMeansConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.k == 0 {
            return Err(RunError::config("k", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(RunError::config("max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

/// One assign + update pass.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansIteration {
    /// Squared error of the assignment against the updated centres.
    pub squared_error: f64,
    /// Whether an empty cluster was re-seeded with a data point.
    pub reseeded: bool,
}

pub fn run_kmeans(data: &DataSet, config: &KMeansConfig) -> Result<ClusteringSolution, RunError> {
    run_kmeans_traced(data, config).map(|(s, _)| s)
}

pub fn run_kmeans_traced(
    data: &DataSet,
    config: &KMeansConfig,
) -> Result<(ClusteringSolution, Vec<KMeansIteration>), RunError> {
    config.validate()?;
    let n = data.n_points();
    if config.k > n {
        return Err(RunError::TooManyClusters { k: config.k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centers = match config.init {
        KMeansInit::Forgy => {
            let mut idx = sample(&mut rng, n, config.k).into_vec();
            idx.sort_unstable();
            CentroidSet::new(idx.iter().map(|&i| data.point(i).to_vec()).collect())?
        }
        KMeansInit::UniformInBounds => {
            generate_random_antibody(&compute_bounds(data), config.k, &mut rng)
                .genome()
                .clone()
        }
    };

    let mut history = Vec::new();
    let mut previous: Option<Assignment> = None;
    let mut iterations = 0;
    let assignment = loop {
        iterations += 1;
        let assignment = assign_points(data, &centers)?;
        if previous.as_ref() == Some(&assignment) || iterations == config.max_iterations {
            break assignment;
        }
        let means = compute_centroids(data, &assignment, config.k)?;
        let reseeded = means.has_empty();
        let mut flat = means.fill_empty_from(&centers).into_flat();
        let dims = data.dims();
        for (c, &count) in assignment.counts().iter().enumerate() {
            if count == 0 {
                let p = data.point(rng.random_range(0..n));
                flat[c * dims..(c + 1) * dims].copy_from_slice(p);
            }
        }
        centers = CentroidSet::from_flat(flat, dims)?;
        history.push(KMeansIteration {
            squared_error: squared_error(data, &assignment, &centers)?,
            reseeded,
        });
        previous = Some(assignment);
    };

    // Report J at the means of the final partition; a centre whose cluster
    // emptied on the last pass keeps its current position.
    let centers = compute_centroids(data, &assignment, config.k)?.fill_empty_from(&centers);
    let j_value = clustering_metric(data, &assignment, &centers)?;
    Ok((
        ClusteringSolution {
            centroids: centers,
            assignment,
            j_value,
            seed: config.seed,
            iterations,
        },
        history,
    ))
}
