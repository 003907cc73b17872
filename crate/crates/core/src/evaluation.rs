//! Scoring of repeated runs: accuracy under the best one-to-one
//! cluster-to-class matching, best `J` over runs, and the share of runs that
//! reached it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::clustering::{Assignment, ClusteringSolution};
use crate::dataset::{DataSet, LabeledDataSet};
use crate::error::RunError;

/// Relative tolerance under which two runs count as reaching the same `J`.
pub const DEFAULT_J_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{predicted} predictions for {truth} true labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("label {label} is out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("at least one run is required")]
    NoRuns,
    #[error("run {run_index} failed: {source}")]
    Run {
        run_index: usize,
        #[source]
        source: RunError,
    },
}

/// Co-occurrence counts, rows are predicted clusters, columns true classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
}

impl ContingencyTable {
    pub fn new(
        predicted: &[usize],
        truth: &[usize],
        k_pred: usize,
        k_true: usize,
    ) -> Result<Self, EvalError> {
        if predicted.len() != truth.len() {
            return Err(EvalError::LengthMismatch {
                predicted: predicted.len(),
                truth: truth.len(),
            });
        }
        let mut counts = vec![vec![0; k_true]; k_pred];
        for (&p, &t) in predicted.iter().zip(truth) {
            if p >= k_pred {
                return Err(EvalError::LabelOutOfRange {
                    label: p,
                    k: k_pred,
                });
            }
            if t >= k_true {
                return Err(EvalError::LabelOutOfRange {
                    label: t,
                    k: k_true,
                });
            }
            counts[p][t] += 1;
        }
        Ok(Self { counts })
    }

    pub fn get(&self, cluster: usize, class: usize) -> usize {
        self.counts[cluster][class]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Largest number of points covered by a one-to-one cluster/class matching.
    pub fn best_matching_count(&self) -> usize {
        let rows = self.counts.len();
        let cols = self.counts.first().map_or(0, Vec::len);
        let size = rows.max(cols);
        if size == 0 {
            return 0;
        }
        let max = self.counts.iter().flatten().copied().max().unwrap_or(0) as i64;
        // Minimise (max - count) over a square matrix padded with zero counts.
        let cost: Vec<Vec<i64>> = (0..size)
            .map(|r| {
                (0..size)
                    .map(|c| {
                        let v = self
                            .counts
                            .get(r)
                            .and_then(|row| row.get(c))
                            .copied()
                            .unwrap_or(0);
                        max - v as i64
                    })
                    .collect()
            })
            .collect();
        let matching = hungarian_min(&cost);
        matching
            .iter()
            .enumerate()
            .map(|(r, &c)| {
                self.counts
                    .get(r)
                    .and_then(|row| row.get(c))
                    .copied()
                    .unwrap_or(0)
            })
            .sum()
    }
}

/// Minimum-cost perfect matching on a square matrix (shortest augmenting
/// path with potentials, O(n³)). Returns the column matched to each row.
fn hungarian_min(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; column 0 is a virtual root.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < min_v[j] {
                        min_v[j] = cur;
                        way[j] = j0;
                    }
                    if min_v[j] < delta {
                        delta = min_v[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            col_of[row_of[j] - 1] = j - 1;
        }
    }
    col_of
}

/// Fraction of points correctly classified under the best one-to-one
/// mapping of clusters to classes.
pub fn classification_accuracy(
    predicted: &Assignment,
    truth: &[usize],
    k: usize,
) -> Result<f64, EvalError> {
    accuracy_from_labels(predicted.cluster_of(), truth, predicted.k().max(k), k)
}

pub fn accuracy_from_labels(
    predicted: &[usize],
    truth: &[usize],
    k_pred: usize,
    k_true: usize,
) -> Result<f64, EvalError> {
    let table = ContingencyTable::new(predicted, truth, k_pred, k_true)?;
    if truth.is_empty() {
        return Ok(1.0);
    }
    Ok(table.best_matching_count() as f64 / truth.len() as f64)
}

/// Seed of run `run_index` under `master_seed`: one SplitMix64 step from
/// `master_seed + (run_index + 1) * 0x9E3779B97F4A7C15` (wrapping).
pub fn derive_run_seed(master_seed: u64, run_index: usize) -> u64 {
    let mut z = master_seed.wrapping_add(
        (run_index as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    pub j_value: f64,
    pub accuracy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub records: Vec<RunRecord>,
    pub best_j: f64,
    /// Percentage (0-100] of runs with `J <= best_j * (1 + j_tolerance)`.
    pub best_j_percent: f64,
    pub best_accuracy: f64,
    /// Accuracy of the first run that attained `best_j`.
    pub accuracy_at_best_j: f64,
    pub j_tolerance: f64,
    pub master_seed: u64,
}

impl RunStats {
    pub fn from_records(
        mut records: Vec<RunRecord>,
        j_tolerance: f64,
        master_seed: u64,
    ) -> Result<Self, EvalError> {
        if records.is_empty() {
            return Err(EvalError::NoRuns);
        }
        records.sort_by_key(|r| r.run_index);
        let best = records
            .iter()
            .min_by(|a, b| a.j_value.total_cmp(&b.j_value))
            .expect("non-empty");
        let best_j = best.j_value;
        let accuracy_at_best_j = best.accuracy;
        let threshold = best_j * (1.0 + j_tolerance);
        let hits = records.iter().filter(|r| r.j_value <= threshold).count();
        let best_accuracy = records.iter().map(|r| r.accuracy).fold(0.0, f64::max);
        Ok(Self {
            best_j_percent: 100.0 * hits as f64 / records.len() as f64,
            records,
            best_j,
            best_accuracy,
            accuracy_at_best_j,
            j_tolerance,
            master_seed,
        })
    }

    pub fn runs(&self) -> usize {
        self.records.len()
    }
}

/// Runs `algorithm` `runs` times with seeds from [`derive_run_seed`] and
/// scores each result against the ground truth. Runs execute in parallel;
/// the result does not depend on scheduling.
pub fn multi_run<F>(
    data: &LabeledDataSet,
    runs: usize,
    master_seed: u64,
    j_tolerance: f64,
    algorithm: F,
) -> Result<RunStats, EvalError>
where
    F: Fn(&DataSet, u64) -> Result<ClusteringSolution, RunError> + Sync,
{
    if runs == 0 {
        return Err(EvalError::NoRuns);
    }
    let records = (0..runs)
        .into_par_iter()
        .map(|run_index| {
            let seed = derive_run_seed(master_seed, run_index);
            let solution = algorithm(&data.data, seed)
                .map_err(|source| EvalError::Run { run_index, source })?;
            let accuracy =
                classification_accuracy(&solution.assignment, &data.labels, data.k_true)?;
            Ok(RunRecord {
                run_index,
                seed,
                j_value: solution.j_value,
                accuracy,
                iterations: solution.iterations,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    RunStats::from_records(records, j_tolerance, master_seed)
}

/// Results keyed by (dataset, algorithm), iterated in that order.
#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub cells: BTreeMap<(String, String), RunStats>,
}

pub const REPORT_COLUMNS: [&str; 7] = [
    "dataset",
    "algorithm",
    "best_j",
    "best_j_percent",
    "best_accuracy",
    "runs",
    "master_seed",
];

impl ResultTable {
    pub fn insert(&mut self, dataset: &str, algorithm: &str, stats: RunStats) {
        self.cells
            .insert((dataset.to_string(), algorithm.to_string()), stats);
    }

    pub fn get(&self, dataset: &str, algorithm: &str) -> Option<&RunStats> {
        self.cells
            .get(&(dataset.to_string(), algorithm.to_string()))
    }

    /// Comma-separated summary, one row per (dataset, algorithm).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", REPORT_COLUMNS.join(","))?;
        for ((dataset, algorithm), s) in &self.cells {
            writeln!(
                out,
                "{dataset},{algorithm},{:.6},{:.2},{:.6},{},{}",
                s.best_j,
                s.best_j_percent,
                s.best_accuracy,
                s.runs(),
                s.master_seed
            )?;
        }
        out.flush()
    }

    /// Every run record: dataset, algorithm, run index, seed, J, accuracy,
    /// iterations.
    pub fn write_runs_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "dataset,algorithm,run_index,seed,j,accuracy,iterations"
        )?;
        for ((dataset, algorithm), s) in &self.cells {
            for r in &s.records {
                writeln!(
                    out,
                    "{dataset},{algorithm},{},{},{:.9},{:.6},{}",
                    r.run_index, r.seed, r.j_value, r.accuracy, r.iterations
                )?;
            }
        }
        out.flush()
    }

    /// Aligned plain-text tables: accuracy per dataset and algorithm, then
    /// best `J` with the percentage of runs reaching it.
    pub fn render_text(&self) -> String {
        let mut datasets: Vec<&str> = Vec::new();
        let mut algorithms: Vec<&str> = Vec::new();
        for (d, a) in self.cells.keys() {
            if !datasets.contains(&d.as_str()) {
                datasets.push(d);
            }
            if !algorithms.contains(&a.as_str()) {
                algorithms.push(a);
            }
        }
        let name_w = datasets.iter().map(|d| d.len()).max().unwrap_or(0).max(7);

        let mut out = String::new();
        writeln!(out, "Classification accuracy (best over runs)").unwrap();
        write!(out, "{:<name_w$}", "dataset").unwrap();
        for a in &algorithms {
            write!(out, "  {a:>12}").unwrap();
        }
        out.push('\n');
        for d in &datasets {
            write!(out, "{d:<name_w$}").unwrap();
            for a in &algorithms {
                match self.get(d, a) {
                    Some(s) => write!(out, "  {:>11.2}%", 100.0 * s.best_accuracy).unwrap(),
                    None => write!(out, "  {:>12}", "-").unwrap(),
                }
            }
            out.push('\n');
        }

        out.push('\n');
        writeln!(out, "Best J and share of runs reaching it").unwrap();
        write!(out, "{:<name_w$}", "dataset").unwrap();
        for a in &algorithms {
            write!(out, "  {:>12}  {:>7}", format!("{a} J"), "runs").unwrap();
        }
        out.push('\n');
        for d in &datasets {
            write!(out, "{d:<name_w$}").unwrap();
            for a in &algorithms {
                match self.get(d, a) {
                    Some(s) => {
                        write!(out, "  {:>12.3}  {:>6.0}%", s.best_j, s.best_j_percent).unwrap()
                    }
                    None => write!(out, "  {:>12}  {:>7}", "-", "-").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: usize, j: f64, acc: f64) -> RunRecord {
        RunRecord {
            run_index: i,
            seed: i as u64,
            j_value: j,
            accuracy: acc,
            iterations: 1,
        }
    }

    #[test]
    fn identical_and_permuted_predictions() {
        let truth = [0, 0, 1, 1, 2, 2];
        assert_eq!(accuracy_from_labels(&truth, &truth, 3, 3).unwrap(), 1.0);
        let permuted = [2, 2, 0, 0, 1, 1];
        assert_eq!(accuracy_from_labels(&permuted, &truth, 3, 3).unwrap(), 1.0);
    }

    #[test]
    fn three_of_four() {
        let a = accuracy_from_labels(&[0, 1, 1, 1], &[0, 0, 1, 1], 2, 2).unwrap();
        assert_eq!(a, 0.75);
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            accuracy_from_labels(&[0], &[0, 1], 2, 2),
            Err(EvalError::LengthMismatch {
                predicted: 1,
                truth: 2
            })
        );
    }

    #[test]
    fn rectangular_tables() {
        // three clusters, two classes: cluster 2 is left unmatched
        let a = accuracy_from_labels(&[0, 0, 1, 2], &[0, 0, 1, 1], 3, 2).unwrap();
        assert_eq!(a, 0.75);
    }

    #[test]
    fn contingency_counts() {
        let t = ContingencyTable::new(&[0, 1, 1, 1], &[0, 0, 1, 1], 2, 2).unwrap();
        assert_eq!(t.rows(), &[vec![1, 0], vec![1, 2]]);
        assert_eq!(t.total(), 4);
        assert!(ContingencyTable::new(&[5], &[0], 2, 2).is_err());
    }

    #[test]
    fn best_j_percent_counts_ties() {
        let s = RunStats::from_records(
            vec![
                record(0, 5.0, 0.5),
                record(1, 5.0, 0.7),
                record(2, 6.0, 0.9),
            ],
            1e-4,
            0,
        )
        .unwrap();
        assert_eq!(s.best_j, 5.0);
        assert!((s.best_j_percent - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(s.best_accuracy, 0.9);
        assert_eq!(s.accuracy_at_best_j, 0.5);

        let s = RunStats::from_records(vec![record(0, 1.0, 1.0); 4], 1e-4, 0).unwrap();
        assert_eq!(s.best_j_percent, 100.0);
        assert!(RunStats::from_records(vec![], 1e-4, 0).is_err());
    }

    #[test]
    fn run_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..1000).map(|i| derive_run_seed(7, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 1000);
        assert_eq!(derive_run_seed(7, 3), seeds[3]);
        assert_ne!(derive_run_seed(8, 3), seeds[3]);
    }

    #[test]
    fn empty_report_has_headers_only() {
        let t = ResultTable::default();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", REPORT_COLUMNS.join(","))
        );
        let text = t.render_text();
        assert!(text.contains("dataset"));
    }

    #[test]
    fn rows_are_ordered_by_dataset_then_algorithm() {
        let mut t = ResultTable::default();
        let s = RunStats::from_records(vec![record(0, 97.101, 0.9)], 1e-4, 3).unwrap();
        t.insert("iris", "ucsc", s.clone());
        t.insert("iris", "kmeans", s.clone());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("iris,kmeans,97.101000,100.00,0.900000,1,3"));
        assert!(lines[2].starts_with("iris,ucsc,"));
        let rendered = t.render_text();
        assert!(rendered.contains("90.00%"));
        assert!(rendered.contains("97.101"));
    }
}
