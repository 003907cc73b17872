//! Geometry shared by both algorithms: nearest-centre assignment, centroid
//! update, the within-cluster spread `J` (sum of plain Euclidean distances,
//! not squared) and antibody affinity.

use thiserror::Error;

use crate::dataset::DataSet;

/// Affinity given to a partition with `J = 0`, where `1/J` is undefined.
pub const DEFAULT_AFFINITY_CAP: f64 = 1e12;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("dimension mismatch: data has {data} features, centres have {centers}")]
    DimensionMismatch { data: usize, centers: usize },
    #[error("assignment covers {assignment} points but data has {data}")]
    LengthMismatch { assignment: usize, data: usize },
    #[error("assignment and centroids disagree on cluster count ({assignment} vs {centroids})")]
    ClusterCountMismatch { assignment: usize, centroids: usize },
    #[error("clustering metric must be non-negative, got {0}")]
    NegativeMetric(f64),
    #[error("a centroid set needs at least one centre")]
    NoCenters,
    #[error("centre coordinates must be finite")]
    NonFinite,
    #[error("{k} clusters requested for {n} points")]
    TooManyClusters { k: usize, n: usize },
}

/// `K` centres of dimension `d`, stored centre-major: the first `d` values
/// are centre 0, the next `d` centre 1, and so on. This is also the antibody
/// genome layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    coords: Vec<f64>,
    dims: usize,
}

impl CentroidSet {
    pub fn from_flat(coords: Vec<f64>, dims: usize) -> Result<Self, ClusterError> {
        if dims == 0 || coords.is_empty() || !coords.len().is_multiple_of(dims) {
            return Err(ClusterError::NoCenters);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(ClusterError::NonFinite);
        }
        Ok(Self { coords, dims })
    }

    pub fn new(centers: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        let dims = centers.first().ok_or(ClusterError::NoCenters)?.len();
        if centers.iter().any(|c| c.len() != dims) {
            return Err(ClusterError::NoCenters);
        }
        Self::from_flat(centers.concat(), dims)
    }

    pub fn k(&self) -> usize {
        self.coords.len() / self.dims
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }

    pub fn centers(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dims)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.coords
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.centers().map(<[f64]>::to_vec).collect()
    }

    /// Reorders centres so that new centre `i` is old centre `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &p in perm {
            coords.extend_from_slice(self.center(p));
        }
        Self {
            coords,
            dims: self.dims,
        }
    }
}

/// Dense encoding of the partition matrix: one cluster index per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    cluster_of: Vec<usize>,
    counts: Vec<usize>,
}

impl Assignment {
    pub fn new(cluster_of: Vec<usize>, k: usize) -> Result<Self, ClusterError> {
        let mut counts = vec![0; k];
        for &c in &cluster_of {
            if c >= k {
                return Err(ClusterError::ClusterCountMismatch {
                    assignment: c + 1,
                    centroids: k,
                });
            }
            counts[c] += 1;
        }
        Ok(Self { cluster_of, counts })
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cluster_of.is_empty()
    }

    pub fn has_empty_cluster(&self) -> bool {
        self.counts.contains(&0)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dims(data: &DataSet, centroids: &CentroidSet) -> Result<(), ClusterError> {
    if data.dims() != centroids.dims() {
        return Err(ClusterError::DimensionMismatch {
            data: data.dims(),
            centers: centroids.dims(),
        });
    }
    Ok(())
}

fn nearest(point: &[f64], centroids: &CentroidSet) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.centers().enumerate() {
        let d = squared_euclidean(point, c);
        // strict comparison keeps the lowest index on ties
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Assigns every point to its nearest centre, ties going to the lowest index.
pub fn assign_points(data: &DataSet, centroids: &CentroidSet) -> Result<Assignment, ClusterError> {
    check_dims(data, centroids)?;
    let k = centroids.k();
    let mut counts = vec![0; k];
    let cluster_of = data
        .points()
        .map(|p| {
            let c = nearest(p, centroids);
            counts[c] += 1;
            c
        })
        .collect();
    Ok(Assignment { cluster_of, counts })
}

/// Cluster means with a mask of clusters that received no points. The slots
/// of empty clusters hold zeros and must be filled before use.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMeans {
    coords: Vec<f64>,
    dims: usize,
    pub empty: Vec<bool>,
}

impl ClusterMeans {
    pub fn has_empty(&self) -> bool {
        self.empty.contains(&true)
    }

    pub fn mean(&self, i: usize) -> Option<&[f64]> {
        (!self.empty[i]).then(|| &self.coords[i * self.dims..(i + 1) * self.dims])
    }

    /// The means as a complete centroid set, or `None` if a cluster is empty.
    pub fn complete(self) -> Option<CentroidSet> {
        let complete = !self.has_empty();
        complete.then_some(CentroidSet {
            coords: self.coords,
            dims: self.dims,
        })
    }

    /// Uses `fallback`'s centre for every empty cluster.
    pub fn fill_empty_from(mut self, fallback: &CentroidSet) -> CentroidSet {
        for (i, &e) in self.empty.iter().enumerate() {
            if e {
                self.coords[i * self.dims..(i + 1) * self.dims].copy_from_slice(fallback.center(i));
            }
        }
        CentroidSet {
            coords: self.coords,
            dims: self.dims,
        }
    }
}

pub fn compute_centroids(
    data: &DataSet,
    assignment: &Assignment,
    k: usize,
) -> Result<ClusterMeans, ClusterError> {
    if assignment.len() != data.n_points() {
        return Err(ClusterError::LengthMismatch {
            assignment: assignment.len(),
            data: data.n_points(),
        });
    }
    if assignment.k() != k {
        return Err(ClusterError::ClusterCountMismatch {
            assignment: assignment.k(),
            centroids: k,
        });
    }
    let dims = data.dims();
    let mut coords = vec![0.0; k * dims];
    for (p, &c) in data.points().zip(assignment.cluster_of()) {
        for (acc, x) in coords[c * dims..(c + 1) * dims].iter_mut().zip(p) {
            *acc += x;
        }
    }
    let empty: Vec<bool> = assignment.counts().iter().map(|&n| n == 0).collect();
    for (c, &n) in assignment.counts().iter().enumerate() {
        if n > 0 {
            let inv = n as f64;
            coords[c * dims..(c + 1) * dims]
                .iter_mut()
                .for_each(|v| *v /= inv);
        }
    }
    Ok(ClusterMeans {
        coords,
        dims,
        empty,
    })
}

fn check_consistent(
    data: &DataSet,
    assignment: &Assignment,
    centroids: &CentroidSet,
) -> Result<(), ClusterError> {
    check_dims(data, centroids)?;
    if assignment.len() != data.n_points() {
        return Err(ClusterError::LengthMismatch {
            assignment: assignment.len(),
            data: data.n_points(),
        });
    }
    if assignment.k() != centroids.k() {
        return Err(ClusterError::ClusterCountMismatch {
            assignment: assignment.k(),
            centroids: centroids.k(),
        });
    }
    Ok(())
}

/// `J`: the sum over points of the Euclidean distance to the centre of the
/// cluster they are assigned to.
pub fn clustering_metric(
    data: &DataSet,
    assignment: &Assignment,
    centroids: &CentroidSet,
) -> Result<f64, ClusterError> {
    check_consistent(data, assignment, centroids)?;
    Ok(data
        .points()
        .zip(assignment.cluster_of())
        .map(|(p, &c)| euclidean(p, centroids.center(c)))
        .sum())
}

/// Sum of squared distances to the assigned centres (the quantity Lloyd's
/// iteration decreases).
pub fn squared_error(
    data: &DataSet,
    assignment: &Assignment,
    centroids: &CentroidSet,
) -> Result<f64, ClusterError> {
    check_consistent(data, assignment, centroids)?;
    Ok(data
        .points()
        .zip(assignment.cluster_of())
        .map(|(p, &c)| squared_euclidean(p, centroids.center(c)))
        .sum())
}

pub fn affinity_from_j(j_value: f64, has_empty_cluster: bool) -> Result<f64, ClusterError> {
    affinity_from_j_capped(j_value, has_empty_cluster, DEFAULT_AFFINITY_CAP)
}

pub fn affinity_from_j_capped(
    j_value: f64,
    has_empty_cluster: bool,
    cap: f64,
) -> Result<f64, ClusterError> {
    if j_value.is_nan() || j_value < 0.0 {
        return Err(ClusterError::NegativeMetric(j_value));
    }
    Ok(if has_empty_cluster {
        0.0
    } else if j_value == 0.0 {
        cap
    } else {
        (1.0 / j_value).min(cap)
    })
}

/// Result of scoring one set of centres against the data.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedSolution {
    pub centroids: CentroidSet,
    pub assignment: Assignment,
    pub j_value: f64,
    pub affinity: f64,
    pub has_empty_cluster: bool,
}

/// Single evaluation step: assign to the given centres, move every non-empty
/// cluster's centre to its mean (empty clusters keep the given centre), then
/// measure `J` against the updated centres under that assignment.
pub fn evaluate_antibody(
    data: &DataSet,
    centers: &CentroidSet,
) -> Result<EvaluatedSolution, ClusterError> {
    let assignment = assign_points(data, centers)?;
    let means = compute_centroids(data, &assignment, centers.k())?;
    let has_empty_cluster = means.has_empty();
    let centroids = means.fill_empty_from(centers);
    let j_value = clustering_metric(data, &assignment, &centroids)?;
    let affinity = affinity_from_j(j_value, has_empty_cluster)?;
    Ok(EvaluatedSolution {
        centroids,
        assignment,
        j_value,
        affinity,
        has_empty_cluster,
    })
}

/// Repeats [`evaluate_antibody`] on its own updated centres until the
/// assignment stops changing, a step would empty a cluster, or `max_steps`
/// steps have run. Returns the last evaluation with every cluster occupied;
/// if the very first step leaves a cluster empty, that evaluation is returned
/// as is (zero affinity).
///
/// At the returned state, re-evaluating the centres reproduces the same
/// assignment, centres and `J`, unless the step cap was hit.
pub fn evaluate_to_fixed_point(
    data: &DataSet,
    centers: &CentroidSet,
    max_steps: usize,
) -> Result<EvaluatedSolution, ClusterError> {
    let first = evaluate_antibody(data, centers)?;
    if first.has_empty_cluster {
        return Ok(first);
    }
    let k = centers.k();
    let mut assignment = first.assignment;
    let mut centroids = first.centroids;
    let mut changed = false;
    for _ in 1..max_steps {
        let next = assign_points(data, &centroids)?;
        if next.has_empty_cluster() {
            break;
        }
        if next == assignment {
            // the update would reproduce the current means exactly
            break;
        }
        centroids = compute_centroids(data, &next, k)?
            .complete()
            .expect("no empty clusters");
        assignment = next;
        changed = true;
    }
    if !changed {
        return Ok(EvaluatedSolution {
            centroids,
            assignment,
            ..first
        });
    }
    let j_value = clustering_metric(data, &assignment, &centroids)?;
    Ok(EvaluatedSolution {
        affinity: affinity_from_j(j_value, false)?,
        centroids,
        assignment,
        j_value,
        has_empty_cluster: false,
    })
}

/// A finished clustering with run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSolution {
    pub centroids: CentroidSet,
    pub assignment: Assignment,
    pub j_value: f64,
    pub seed: u64,
    /// Generations (UCSC) or iterations (K-means) performed.
    pub iterations: usize,
}
