use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ucsc_core::dataset::{
    generate_gaussian_mixture, load_delimited, write_delimited, DelimitedSchema,
    GaussianMixtureSpec, LabeledDataSet, MissingValuePolicy, MixtureComponent, BUILTIN_MIXTURES,
};
use ucsc_core::evaluation::{multi_run, ResultTable};
use ucsc_core::kmeans::{run_kmeans, KMeansConfig};
use ucsc_core::ucsc::{run_ucsc, UcscConfig};

use crate::reference;
use crate::settings::{Algorithms, DataSource, ExperimentConfig};

pub const REGENERATED_NOTE: &str = "regenerated data: property comparison only";

/// Reads a mixture description: one component per line as
/// `count ; mean values ; variances`, values separated by spaces or commas.
pub fn parse_mixture(text: &str) -> Result<GaussianMixtureSpec> {
    let numbers = |field: &str, line: usize| -> Result<Vec<f64>> {
        field
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .with_context(|| format!("line {line}: '{t}' is not a number"))
            })
            .collect()
    };
    let mut components = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(';').collect();
        let [count, mean, variances] = fields[..] else {
            bail!("line {}: expected 'count ; means ; variances'", i + 1);
        };
        components.push(MixtureComponent {
            count: count
                .trim()
                .parse()
                .with_context(|| format!("line {}: bad count '{}'", i + 1, count.trim()))?,
            mean: numbers(mean, i + 1)?,
            variances: numbers(variances, i + 1)?,
        });
    }
    let spec = GaussianMixtureSpec { components };
    spec.validate()?;
    Ok(spec)
}

pub fn generate(
    spec_name: Option<&str>,
    mixture: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let spec = match (spec_name, mixture) {
        (Some(name), None) => GaussianMixtureSpec::builtin(name).with_context(|| {
            format!(
                "unknown dataset '{name}' (built-in: {})",
                BUILTIN_MIXTURES.join(", ")
            )
        })?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read mixture file {}", path.display()))?;
            parse_mixture(&text)?
        }
        _ => bail!("give either a built-in dataset name or --mixture"),
    };
    let ds = generate_gaussian_mixture(&spec, seed)?;
    let file = File::create(out).with_context(|| format!("cannot write {}", out.display()))?;
    write_delimited(&ds, BufWriter::new(file))
        .with_context(|| format!("cannot write {}", out.display()))?;
    println!(
        "N={} d={} K={} -> {}",
        ds.data.n_points(),
        ds.data.dims(),
        ds.k_true,
        out.display()
    );
    Ok(())
}

fn load_source(source: &DataSource) -> Result<LabeledDataSet> {
    Ok(match source {
        DataSource::Builtin { spec, seed, .. } => generate_gaussian_mixture(spec, *seed)?,
        DataSource::File { path, schema } => load_delimited(path, schema)?,
    })
}

/// Everything needed to run one dataset's cells.
struct Protocol {
    algorithms: Algorithms,
    ucsc: UcscConfig,
    kmeans: KMeansConfig,
    runs: usize,
    master_seed: u64,
    j_tolerance: f64,
}

fn run_cells(table: &mut ResultTable, name: &str, ds: &LabeledDataSet, p: &Protocol) -> Result<()> {
    let (ucsc, kmeans, runs) = (&p.ucsc, &p.kmeans, p.runs);
    if ucsc.k > ds.data.n_points() {
        bail!(
            "{} clusters requested but {name} has {} points",
            ucsc.k,
            ds.data.n_points()
        );
    }
    if p.algorithms.ucsc() {
        let start = Instant::now();
        let stats = multi_run(ds, runs, p.master_seed, p.j_tolerance, |d, seed| {
            run_ucsc(
                d,
                &UcscConfig {
                    seed,
                    ..ucsc.clone()
                },
            )
            .map(|r| r.0)
        })?;
        eprintln!("{name} ucsc: {runs} runs in {:.1?}", start.elapsed());
        table.insert(name, "ucsc", stats);
    }
    if p.algorithms.kmeans() {
        let start = Instant::now();
        let stats = multi_run(ds, runs, p.master_seed, p.j_tolerance, |d, seed| {
            run_kmeans(
                d,
                &KMeansConfig {
                    seed,
                    ..kmeans.clone()
                },
            )
        })?;
        eprintln!("{name} kmeans: {runs} runs in {:.1?}", start.elapsed());
        table.insert(name, "kmeans", stats);
    }
    Ok(())
}

fn write_file(
    dir: &Path,
    name: &str,
    write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    write(&mut BufWriter::new(file)).with_context(|| format!("cannot write {}", path.display()))
}

fn write_outputs(
    dir: &Path,
    table: &ResultTable,
    config_text: &str,
    extra: &str,
) -> Result<String> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut report = String::new();
    writeln!(report, "# effective configuration").unwrap();
    for line in config_text.lines() {
        writeln!(report, "#   {line}").unwrap();
    }
    report.push('\n');
    report.push_str(&table.render_text());
    report.push_str(extra);
    write_file(dir, "report.csv", |w| table.write_csv(w))?;
    write_file(dir, "runs.csv", |w| table.write_runs_csv(w))?;
    write_file(dir, "config.txt", |w| {
        std::io::Write::write_all(w, config_text.as_bytes())
    })?;
    write_file(dir, "report.txt", |w| {
        std::io::Write::write_all(w, report.as_bytes())
    })?;
    Ok(report)
}

pub fn run(config: &ExperimentConfig) -> Result<()> {
    let ds = load_source(&config.source)?;
    let k = config.k.unwrap_or(ds.k_true);
    let ucsc = UcscConfig {
        k,
        ..config.ucsc.clone()
    };
    let kmeans = KMeansConfig {
        k,
        ..config.kmeans.clone()
    };
    ucsc.validate()?;
    kmeans.validate()?;
    let mut table = ResultTable::default();
    let protocol = Protocol {
        algorithms: config.algorithms,
        ucsc,
        kmeans,
        runs: config.runs,
        master_seed: config.master_seed,
        j_tolerance: config.j_tolerance,
    };
    run_cells(&mut table, &config.source.label(), &ds, &protocol)?;
    let report = write_outputs(&config.out, &table, &config.render(k), "")?;
    print!("{report}");
    Ok(())
}

/// Options for the full reproduction.
#[derive(Debug, Clone)]
pub struct ReproduceOptions {
    pub data_dir: PathBuf,
    pub master_seed: u64,
    pub runs: usize,
    pub j_tolerance: f64,
    pub out: PathBuf,
}

const IRIS_FILE: &str = "iris.data";
const BREAST_CANCER_FILE: &str = "breast-cancer-wisconsin.data";

fn comparison(table: &ResultTable, datasets: &[String]) -> (String, String) {
    let mut text = String::new();
    let mut csv = String::from(
        "dataset,algorithm,best_j,reference_j,delta_j,best_j_percent,reference_percent,best_accuracy,reference_accuracy,delta_accuracy,accuracy_at_best_j,note\n",
    );
    writeln!(text, "\nComparison with published results").unwrap();
    writeln!(
        text,
        "{:<14} {:<7} {:>10} {:>10} {:>9} {:>6} {:>6} {:>8} {:>8} {:>7}  note",
        "dataset", "algo", "J", "ref J", "delta", "runs", "ref", "acc", "ref acc", "delta"
    )
    .unwrap();
    for d in datasets {
        for algo in ["ucsc", "kmeans"] {
            let (Some(s), Some(r)) = (table.get(d, algo), reference::lookup(d, algo)) else {
                continue;
            };
            let note = if BUILTIN_MIXTURES.contains(&d.as_str()) {
                REGENERATED_NOTE
            } else {
                ""
            };
            let acc = 100.0 * s.best_accuracy;
            writeln!(
                text,
                "{:<14} {:<7} {:>10.3} {:>10.3} {:>+9.3} {:>5.0}% {:>5.0}% {:>7.2}% {:>7.2}% {:>+7.2}  {note}",
                d,
                algo,
                s.best_j,
                r.best_j,
                s.best_j - r.best_j,
                s.best_j_percent,
                r.best_j_percent,
                acc,
                r.accuracy_percent,
                acc - r.accuracy_percent,
            )
            .unwrap();
            writeln!(
                csv,
                "{d},{algo},{:.6},{},{:.6},{:.2},{},{:.4},{},{:.4},{:.4},{note}",
                s.best_j,
                r.best_j,
                s.best_j - r.best_j,
                s.best_j_percent,
                r.best_j_percent,
                acc,
                r.accuracy_percent,
                acc - r.accuracy_percent,
                100.0 * s.accuracy_at_best_j,
            )
            .unwrap();
        }
    }
    (text, csv)
}

pub fn reproduce(opts: &ReproduceOptions) -> Result<()> {
    let missing: Vec<String> = [IRIS_FILE, BREAST_CANCER_FILE]
        .iter()
        .map(|f| opts.data_dir.join(f))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        bail!("missing dataset files: {}", missing.join(", "));
    }
    if opts.runs == 0 {
        bail!("invalid value for 'runs': must be at least 1");
    }

    let mut datasets: Vec<(String, LabeledDataSet)> = Vec::new();
    for name in BUILTIN_MIXTURES {
        let spec = GaussianMixtureSpec::builtin(name).expect("built-in");
        datasets.push((
            name.to_string(),
            generate_gaussian_mixture(&spec, opts.master_seed)?,
        ));
    }
    datasets.push((
        "iris".into(),
        load_delimited(&opts.data_dir.join(IRIS_FILE), &DelimitedSchema::iris())?,
    ));
    datasets.push((
        "breast-cancer".into(),
        load_delimited(
            &opts.data_dir.join(BREAST_CANCER_FILE),
            &DelimitedSchema::breast_cancer().with_policy(MissingValuePolicy::ImputeMedian),
        )?,
    ));

    let mut table = ResultTable::default();
    for (name, ds) in &datasets {
        let protocol = Protocol {
            algorithms: Algorithms::Both,
            ucsc: UcscConfig::with_k(ds.k_true),
            kmeans: KMeansConfig::with_k(ds.k_true),
            runs: opts.runs,
            master_seed: opts.master_seed,
            j_tolerance: opts.j_tolerance,
        };
        run_cells(&mut table, name, ds, &protocol)?;
    }

    let names: Vec<String> = datasets.iter().map(|(n, _)| n.clone()).collect();
    let (text, csv) = comparison(&table, &names);
    let config_text = format!(
        "data-dir = {}\nseed = {}\nruns = {}\nj-tolerance = {}\ndata-seed = {}\nmissing = impute\n{}",
        opts.data_dir.display(),
        opts.master_seed,
        opts.runs,
        opts.j_tolerance,
        opts.master_seed,
        protocol_summary(),
    );
    let report = write_outputs(&opts.out, &table, &config_text, &text)?;
    write_file(&opts.out, "comparison.csv", |w| {
        std::io::Write::write_all(w, csv.as_bytes())
    })?;
    print!("{report}");
    Ok(())
}

fn protocol_summary() -> String {
    let u = UcscConfig::default();
    let k = KMeansConfig::default();
    format!(
        "pop-size = {}\nbeta = {}\nreplace = {}\ngenerations = {}\nlamarckian = {}\nmax-iters = {}\ninit = forgy\nk = number of classes\n",
        u.n, u.beta, u.l_replace, u.generations, u.lamarckian, k.max_iterations
    )
}
