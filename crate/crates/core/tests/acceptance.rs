//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each and exits non-zero if any fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use ucsc_core::clustering::*;
use ucsc_core::dataset::*;
use ucsc_core::evaluation::*;
use ucsc_core::kmeans::{run_kmeans, run_kmeans_traced, KMeansConfig};
use ucsc_core::ucsc::*;

use common::*;

/// Master seed for every stochastic check below.
const MASTER_SEED: u64 = 0;
const RUNS: usize = 100;
const PROPERTY_CASES: u32 = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_rel(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn ucsc_stats(ds: &LabeledDataSet, k: usize, runs: usize) -> (RunStats, Duration) {
    let start = Instant::now();
    let stats = multi_run(ds, runs, MASTER_SEED, DEFAULT_J_TOLERANCE, |d, seed| {
        run_ucsc(
            d,
            &UcscConfig {
                seed,
                ..UcscConfig::with_k(k)
            },
        )
        .map(|r| r.0)
    })
    .expect("ucsc runs");
    (stats, start.elapsed())
}

fn kmeans_stats(ds: &LabeledDataSet, k: usize, runs: usize) -> RunStats {
    multi_run(ds, runs, MASTER_SEED, DEFAULT_J_TOLERANCE, |d, seed| {
        run_kmeans(
            d,
            &KMeansConfig {
                seed,
                ..KMeansConfig::with_k(k)
            },
        )
    })
    .expect("kmeans runs")
}

struct Iris {
    ucsc: RunStats,
    ucsc_time: Duration,
    kmeans: RunStats,
}

fn criterion_1(iris: &Iris) -> Outcome {
    let s = &iris.ucsc;
    let pass = within_rel(s.best_j, 97.101, 0.002)
        && s.best_j_percent >= 95.0
        && iris.ucsc_time < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "UCSC best J {:.4} (target 97.101 ±0.2%), reached in {:.0}% of runs (>= 95%), {:.1?} for {} runs (< 60s)",
            s.best_j, s.best_j_percent, iris.ucsc_time, s.runs()
        ),
    )
}

fn criterion_2(iris: &Iris) -> Outcome {
    let k = &iris.kmeans;
    let pass = within_rel(k.best_j, 97.205, 0.002)
        && k.best_j_percent < iris.ucsc.best_j_percent
        && (40.0..=95.0).contains(&k.best_j_percent);
    outcome(
        pass,
        format!(
            "K-means best J {:.4} (target 97.205 ±0.2%), reached in {:.0}% of runs (band [40%, 95%], must be < UCSC {:.0}%)",
            k.best_j, k.best_j_percent, iris.ucsc.best_j_percent
        ),
    )
}

fn criterion_3(iris: &Iris) -> Outcome {
    let u = iris.ucsc.best_accuracy;
    let k = iris.kmeans.best_accuracy;
    let pass = (u - 0.90).abs() <= 0.02 && (k - 0.8933).abs() <= 0.02;
    outcome(
        pass,
        format!(
            "UCSC accuracy {:.2}% (90% ±2), K-means accuracy {:.2}% (89.33% ±2)",
            100.0 * u,
            100.0 * k
        ),
    )
}

fn criterion_4() -> Outcome {
    let ds = load_delimited(
        &data_dir().join("breast-cancer-wisconsin.data"),
        &DelimitedSchema::breast_cancer().with_policy(MissingValuePolicy::ImputeMedian),
    )
    .expect("breast cancer data");
    let (u, _) = ucsc_stats(&ds, 2, RUNS);
    let k = kmeans_stats(&ds, 2, RUNS);
    let pass = within_rel(u.best_j, 3048.2, 0.01)
        && within_rel(k.best_j, 3051.3, 0.01)
        && (u.best_accuracy - 0.9611).abs() <= 0.015;
    outcome(
        pass,
        format!(
            "UCSC J {:.3} (3048.2 ±1%), K-means J {:.3} (3051.3 ±1%), UCSC accuracy {:.2}% (96.11% ±1.5)",
            u.best_j,
            k.best_j,
            100.0 * u.best_accuracy
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in BUILTIN_MIXTURES {
        let spec = GaussianMixtureSpec::builtin(name).expect("builtin");
        let ds = generate_gaussian_mixture(&spec, MASTER_SEED).expect("generate");
        let (u, _) = ucsc_stats(&ds, ds.k_true, RUNS);
        let k = kmeans_stats(&ds, ds.k_true, RUNS);
        let ok = u.best_j <= k.best_j && u.best_j_percent >= k.best_j_percent;
        pass &= ok;
        parts.push(format!(
            "{name}: J {:.4} vs {:.4}, {:.0}% vs {:.0}%{}",
            u.best_j,
            k.best_j,
            u.best_j_percent,
            k.best_j_percent,
            if ok { "" } else { " (violated)" }
        ));
    }
    outcome(pass, format!("UCSC vs K-means; {}", parts.join("; ")))
}

fn criterion_6() -> Outcome {
    let instances = small_instances();
    let mut metric_ok = true;
    let mut cells = 0;
    let mut hits = 0;
    for (idx, (points, k)) in instances.iter().enumerate() {
        let k = *k;
        let data = DataSet::from_flat(points.clone(), 1).expect("instance");
        for labels in all_labelings(points.len(), k) {
            let Some(expected) = oracle_j_1d(points, &labels, k) else {
                continue;
            };
            let a = Assignment::new(labels, k).expect("labels");
            let c = compute_centroids(&data, &a, k)
                .expect("means")
                .complete()
                .expect("full");
            let j = clustering_metric(&data, &a, &c).expect("metric");
            metric_ok &= (j - expected).abs() <= 1e-12;
        }
        let j_star = exhaustive_min_j(points, k);
        for s in 0..RUNS {
            let seed = derive_run_seed(MASTER_SEED, idx * RUNS + s);
            let config = UcscConfig {
                seed,
                generations: 100,
                ..UcscConfig::with_k(k)
            };
            let (sol, _) = run_ucsc(&data, &config).expect("ucsc");
            cells += 1;
            if (sol.j_value - j_star).abs() <= 1e-6 * j_star {
                hits += 1;
            }
        }
    }
    let rate = 100.0 * hits as f64 / cells as f64;
    outcome(
        metric_ok && rate >= 95.0,
        format!(
            "UCSC matched the exhaustive optimum in {hits}/{cells} cells ({rate:.1}%, >= 95%); metric agrees with oracle on every labelling: {metric_ok}"
        ),
    )
}

#[derive(Default)]
struct Recorder {
    sizes: Vec<usize>,
    clones: Vec<usize>,
    affinity_consistent: bool,
}

impl GenerationObserver for Recorder {
    fn on_generation(&mut self, _: usize, population: &Population, clones_made: usize) {
        self.sizes.push(population.len());
        self.clones.push(clones_made);
        self.affinity_consistent &= population.members.iter().all(|a| {
            let e = a.evaluation().expect("evaluated at boundary");
            e.has_empty_cluster == (e.affinity == 0.0)
        });
    }
}

fn small_data(max_n: usize, max_d: usize) -> impl Strategy<Value = DataSet> {
    (1..=max_d, 2..=max_n).prop_flat_map(|(d, n)| {
        prop::collection::vec(-20.0..20.0f64, d * n)
            .prop_map(move |v| DataSet::from_flat(v, d).expect("finite"))
    })
}

fn check(name: &str, result: Result<(), String>, parts: &mut Vec<String>) -> bool {
    match result {
        Ok(()) => {
            parts.push(format!("{name} ok"));
            true
        }
        Err(e) => {
            parts.push(format!("{name} FAILED ({e})"));
            false
        }
    }
}

fn run_property<S, F>(strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let mut runner = TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    // Full UCSC runs at population defaults on random small problems.
    let ucsc_case = (
        small_data(20, 3),
        1usize..=4,
        any::<u64>(),
        1usize..=5,
        any::<bool>(),
    )
        .prop_filter("k <= n", |(d, k, ..)| *k <= d.n_points());
    pass &= check(
        "elitist monotonicity + clone total 147 + population size + zero-affinity iff empty",
        run_property(ucsc_case, |(data, k, seed, generations, lamarckian)| {
            let config = UcscConfig {
                seed,
                generations,
                lamarckian,
                ..UcscConfig::with_k(k)
            };
            let mut rec = Recorder {
                affinity_consistent: true,
                ..Recorder::default()
            };
            let (sol, trace) = run_ucsc_observed(&data, &config, &mut rec).unwrap();
            let best: Vec<f64> = trace.best_j().collect();
            prop_assert!(
                best.windows(2).all(|w| w[1] <= w[0]),
                "best J rose: {:?}",
                best
            );
            prop_assert_eq!(&rec.clones, &vec![147; generations]);
            prop_assert_eq!(&rec.sizes, &vec![10; generations]);
            prop_assert!(rec.affinity_consistent);
            if best.last().unwrap().is_finite() {
                prop_assert_eq!(sol.j_value, *best.last().unwrap());
            }
            Ok(())
        }),
        &mut parts,
    );
    pass &= check(
        "clone_counts sums to 147",
        (clone_counts(10, 5.0).iter().sum::<usize>() == 147)
            .then_some(())
            .ok_or_else(|| "sum differs".to_string()),
        &mut parts,
    );

    // Far-flung centres make empty clusters common.
    let eval_case = (small_data(15, 2), 1usize..=4).prop_flat_map(|(data, k)| {
        let d = data.dims();
        (
            Just(data),
            prop::collection::vec(-40.0..40.0f64, d * k)
                .prop_map(move |c| CentroidSet::from_flat(c, d).unwrap()),
        )
    });
    pass &= check(
        "zero affinity iff empty cluster",
        run_property(eval_case, |(data, centers)| {
            let e = evaluate_antibody(&data, &centers).unwrap();
            let empty = centers.k() > 0
                && (0..centers.k()).any(|c| !e.assignment.cluster_of().contains(&c));
            prop_assert_eq!(e.has_empty_cluster, empty);
            prop_assert_eq!(e.affinity == 0.0, empty);
            Ok(())
        }),
        &mut parts,
    );

    // Integer grids make distance ties frequent.
    let grid_case = (1usize..=3, 1usize..=12, 1usize..=5).prop_flat_map(|(d, n, k)| {
        (
            prop::collection::vec(-3i32..=3, d * n),
            prop::collection::vec(-3i32..=3, d * k),
            Just(d),
        )
    });
    pass &= check(
        "assignment optimality + lowest-index ties",
        run_property(grid_case, |(pts, cts, d)| {
            let data = DataSet::from_flat(pts.iter().map(|&v| v as f64).collect(), d).unwrap();
            let centers =
                CentroidSet::from_flat(cts.iter().map(|&v| v as f64).collect(), d).unwrap();
            let a = assign_points(&data, &centers).unwrap();
            for (p, &c) in data.points().zip(a.cluster_of()) {
                let dist = |i: usize| -> f64 {
                    p.iter()
                        .zip(centers.center(i))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum()
                };
                for i in 0..centers.k() {
                    prop_assert!(dist(c) <= dist(i));
                    if i < c {
                        prop_assert!(dist(i) > dist(c), "tie not broken to lowest index");
                    }
                }
            }
            Ok(())
        }),
        &mut parts,
    );

    let det_case = (small_data(20, 3), 1usize..=3, any::<u64>())
        .prop_filter("k <= n", |(d, k, _)| *k <= d.n_points());
    pass &= check(
        "bit-exact determinism",
        run_property(det_case, |(data, k, seed)| {
            let config = UcscConfig {
                seed,
                generations: 3,
                ..UcscConfig::with_k(k)
            };
            prop_assert_eq!(
                run_ucsc(&data, &config).unwrap(),
                run_ucsc(&data, &config).unwrap()
            );
            let km = KMeansConfig {
                seed,
                ..KMeansConfig::with_k(k)
            };
            prop_assert_eq!(
                run_kmeans(&data, &km).unwrap(),
                run_kmeans(&data, &km).unwrap()
            );
            Ok(())
        }),
        &mut parts,
    );

    let km_case = (small_data(40, 3), 1usize..=5, any::<u64>())
        .prop_filter("k <= n", |(d, k, _)| *k <= d.n_points());
    pass &= check(
        "K-means squared-error monotonicity",
        run_property(km_case, |(data, k, seed)| {
            let (_, history) = run_kmeans_traced(
                &data,
                &KMeansConfig {
                    seed,
                    ..KMeansConfig::with_k(k)
                },
            )
            .unwrap();
            for w in history.windows(2) {
                if !w[1].reseeded {
                    prop_assert!(
                        w[1].squared_error <= w[0].squared_error * (1.0 + 1e-12) + 1e-12,
                        "{} -> {}",
                        w[0].squared_error,
                        w[1].squared_error
                    );
                }
            }
            Ok(())
        }),
        &mut parts,
    );

    let acc_case =
        (1usize..=4).prop_flat_map(|k| (prop::collection::vec((0..k, 0..k), 1..60), Just(k)));
    pass &= check(
        "accuracy equals brute force over permutations (k <= 4)",
        run_property(acc_case, |(pairs, k)| {
            let predicted: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let a = Assignment::new(predicted.clone(), k).unwrap();
            let fast = classification_accuracy(&a, &truth, k).unwrap();
            prop_assert_eq!(fast, brute_force_accuracy(&predicted, &truth, k));
            Ok(())
        }),
        &mut parts,
    );

    outcome(
        pass,
        format!("{PROPERTY_CASES} cases each: {}", parts.join("; ")),
    )
}

fn criterion_8(iris: &LabeledDataSet) -> Outcome {
    let within = (0..RUNS)
        .filter(|&i| {
            let seed = derive_run_seed(MASTER_SEED, i);
            let (_, trace) = run_ucsc(
                &iris.data,
                &UcscConfig {
                    seed,
                    ..UcscConfig::with_k(3)
                },
            )
            .expect("ucsc");
            trace.generation_reaching_final().is_some_and(|g| g <= 30)
        })
        .count();
    let rate = 100.0 * within as f64 / RUNS as f64;
    outcome(
        rate >= 90.0,
        format!("final best J reached within 30 generations in {within}/{RUNS} runs (>= 90%)"),
    )
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let iris_data =
        load_delimited(&data_dir().join("iris.data"), &DelimitedSchema::iris()).expect("iris");
    let (ucsc, ucsc_time) = ucsc_stats(&iris_data, 3, RUNS);
    let iris = Iris {
        ucsc,
        ucsc_time,
        kmeans: kmeans_stats(&iris_data, 3, RUNS),
    };

    let criteria: Vec<(&str, Criterion)> = vec![
        ("Iris best J (UCSC)", Box::new(|| criterion_1(&iris))),
        ("Iris best J (K-means)", Box::new(|| criterion_2(&iris))),
        ("Iris accuracy", Box::new(|| criterion_3(&iris))),
        ("Breast Cancer (impute-median)", Box::new(criterion_4)),
        ("Artificial datasets 1-3", Box::new(criterion_5)),
        ("Oracle equivalence", Box::new(criterion_6)),
        ("Invariant suite", Box::new(criterion_7)),
        ("Convergence speed", Box::new(|| criterion_8(&iris_data))),
    ];

    let mut stdout = std::io::stdout();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        writeln!(
            stdout,
            "[{}] criterion {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        )
        .unwrap();
        stdout.flush().unwrap();
    }
    writeln!(
        stdout,
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    )
    .unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
