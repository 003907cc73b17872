//! Experiment configuration: `key = value` files merged with command-line
//! overrides, parsed into typed parameter blocks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use ucsc_core::dataset::{DelimitedSchema, Delimiter, GaussianMixtureSpec, MissingValuePolicy};
use ucsc_core::evaluation::DEFAULT_J_TOLERANCE;
use ucsc_core::kmeans::{KMeansConfig, KMeansInit};
use ucsc_core::ucsc::UcscConfig;

/// Every recognised key with its default. An empty default means "unset".
const KEYS: &[(&str, &str)] = &[
    ("dataset", ""),
    ("schema", "generic"),
    ("features", ""),
    ("label-column", ""),
    ("missing-marker", "?"),
    ("delimiter", "auto"),
    ("missing", "impute"),
    ("data-seed", ""),
    ("algo", "both"),
    ("k", ""),
    ("runs", "100"),
    ("seed", "0"),
    ("generations", "30"),
    ("pop-size", "10"),
    ("beta", "5"),
    ("replace", "4"),
    ("lamarckian", "true"),
    ("max-iters", "1000"),
    ("init", "forgy"),
    ("j-tolerance", ""),
    ("out", "results"),
];

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

/// Raw string settings in precedence order: defaults, then file, then flags.
#[derive(Debug, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Default for Settings {
    fn default() -> Self {
        let mut values = BTreeMap::new();
        for (k, v) in KEYS {
            values.insert(k.to_string(), v.to_string());
        }
        values.insert("j-tolerance".into(), DEFAULT_J_TOLERANCE.to_string());
        Self { values }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = normalize_key(key);
        if !KEYS.iter().any(|(k, _)| *k == key) {
            bail!("unknown configuration key '{key}'");
        }
        self.values.insert(key, value.into().trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map_or("", String::as_str)
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{origin}:{}: expected 'key = value'", i + 1))?;
            self.set(key, value)
                .with_context(|| format!("{origin}:{}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key);
        raw.parse()
            .map_err(|e| anyhow::anyhow!("invalid value for '{key}': '{raw}': {e}"))
    }

    fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if self.get(key).is_empty() {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithms {
    Ucsc,
    KMeans,
    Both,
}

impl Algorithms {
    pub fn ucsc(self) -> bool {
        self != Self::KMeans
    }

    pub fn kmeans(self) -> bool {
        self != Self::Ucsc
    }
}

impl FromStr for Algorithms {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ucsc" => Ok(Self::Ucsc),
            "kmeans" | "k-means" => Ok(Self::KMeans),
            "both" => Ok(Self::Both),
            other => Err(format!(
                "unknown algorithm '{other}' (expected ucsc, kmeans or both)"
            )),
        }
    }
}

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Builtin {
        name: String,
        spec: GaussianMixtureSpec,
        seed: u64,
    },
    File {
        path: PathBuf,
        schema: DelimitedSchema,
    },
}

impl DataSource {
    /// Short name used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::Builtin { name, .. } => name.clone(),
            Self::File { path, .. } => path.file_stem().map_or_else(
                || path.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            ),
        }
    }
}

fn parse_schema(s: &Settings) -> Result<DelimitedSchema> {
    let mut schema = match s.get("schema") {
        "generic" => DelimitedSchema::default(),
        "iris" => DelimitedSchema::iris(),
        "breast-cancer" => DelimitedSchema::breast_cancer(),
        other => {
            bail!("invalid value for 'schema': '{other}' (expected generic, iris or breast-cancer)")
        }
    };
    if !s.get("features").is_empty() {
        let cols = s
            .get("features")
            .split(',')
            .map(|c| c.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| anyhow::anyhow!("invalid value for 'features': {e}"))?;
        schema.feature_columns = Some(cols);
    }
    if let Some(label) = s.parse_opt::<isize>("label-column")? {
        schema.label_column = label;
    }
    schema.missing_marker = s.get("missing-marker").to_string();
    schema.missing_policy = s.parse::<MissingValuePolicy>("missing")?;
    schema.delimiter = s.parse::<Delimiter>("delimiter")?;
    Ok(schema)
}

/// A fully parsed and validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub algorithms: Algorithms,
    /// Cluster count; `None` uses the number of classes in the data.
    pub k: Option<usize>,
    pub runs: usize,
    pub master_seed: u64,
    pub ucsc: UcscConfig,
    pub kmeans: KMeansConfig,
    pub j_tolerance: f64,
    pub out: PathBuf,
    settings: Settings,
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let dataset = s.get("dataset");
        if dataset.is_empty() {
            bail!(
                "no dataset given (use --dataset with a file path or dataset1, dataset2, dataset3)"
            );
        }
        let master_seed: u64 = s.parse("seed")?;
        let source = match GaussianMixtureSpec::builtin(dataset) {
            Some(spec) => DataSource::Builtin {
                name: dataset.to_string(),
                spec,
                seed: s.parse_opt("data-seed")?.unwrap_or(master_seed),
            },
            None => DataSource::File {
                path: PathBuf::from(dataset),
                schema: parse_schema(s)?,
            },
        };
        let k: Option<usize> = s.parse_opt("k")?;
        let runs: usize = s.parse("runs")?;
        if runs == 0 {
            bail!("invalid value for 'runs': must be at least 1");
        }
        let j_tolerance: f64 = s.parse("j-tolerance")?;
        if !(j_tolerance >= 0.0 && j_tolerance.is_finite()) {
            bail!("invalid value for 'j-tolerance': must be a non-negative number");
        }
        let ucsc = UcscConfig {
            n: s.parse("pop-size")?,
            beta: s.parse("beta")?,
            l_replace: s.parse("replace")?,
            generations: s.parse("generations")?,
            k: k.unwrap_or(2),
            seed: master_seed,
            lamarckian: s.parse("lamarckian")?,
            ..UcscConfig::default()
        };
        let kmeans = KMeansConfig {
            k: k.unwrap_or(2),
            max_iterations: s.parse("max-iters")?,
            seed: master_seed,
            init: s.parse::<KMeansInit>("init")?,
        };
        ucsc.validate()?;
        kmeans.validate()?;
        Ok(Self {
            source,
            algorithms: s.parse("algo")?,
            k,
            runs,
            master_seed,
            ucsc,
            kmeans,
            j_tolerance,
            out: PathBuf::from(s.get("out")),
            settings: s.clone(),
        })
    }

    /// The effective configuration as `key = value` lines, with the cluster
    /// count resolved. Feeding this back through `--config` replays the run.
    pub fn render(&self, resolved_k: usize) -> String {
        let mut s = self.settings.clone();
        s.values.insert("k".into(), resolved_k.to_string());
        if let DataSource::Builtin { seed, .. } = &self.source {
            s.values.insert("data-seed".into(), seed.to_string());
        }
        let mut out = String::new();
        for (key, _) in KEYS {
            writeln!(out, "{key} = {}", s.get(key)).unwrap();
        }
        out
    }
}
