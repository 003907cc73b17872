//! Point sets, synthetic Gaussian mixtures, delimited-file loading and the
//! search bounds used by the random antibody generator and hypermutation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset must contain at least one point")]
    Empty,
    #[error("points must have at least one dimension")]
    ZeroDims,
    #[error("point {index} has {found} coordinates, expected {expected}")]
    RaggedPoint {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("row {row}, column {column}: {reason}")]
    Parse {
        row: usize,
        column: usize,
        reason: String,
    },
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `N` points in `d`-dimensional feature space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    values: Vec<f64>,
    n_points: usize,
    dims: usize,
}

impl DataSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let dims = points.first().ok_or(DataError::Empty)?.len();
        let mut values = Vec::with_capacity(points.len() * dims);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dims {
                return Err(DataError::RaggedPoint {
                    index,
                    expected: dims,
                    found: p.len(),
                });
            }
            values.extend_from_slice(p);
        }
        Self::from_flat(values, dims)
    }

    /// Builds a dataset from row-major values.
    pub fn from_flat(values: Vec<f64>, dims: usize) -> Result<Self, DataError> {
        if dims == 0 {
            return Err(DataError::ZeroDims);
        }
        if values.is_empty() {
            return Err(DataError::Empty);
        }
        if !values.len().is_multiple_of(dims) {
            return Err(DataError::RaggedPoint {
                index: values.len() / dims,
                expected: dims,
                found: values.len() % dims,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { index: pos / dims });
        }
        let n_points = values.len() / dims;
        Ok(Self {
            values,
            n_points,
            dims,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.values[index * self.dims..(index + 1) * self.dims]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dims)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A dataset with ground-truth class indices in `[0, k_true)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataSet {
    pub data: DataSet,
    pub labels: Vec<usize>,
    pub k_true: usize,
    /// Original label text per class index.
    pub class_names: Vec<String>,
}

impl LabeledDataSet {
    pub fn new(
        data: DataSet,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if labels.len() != data.n_points() {
            return Err(DataError::InvalidLabels(format!(
                "{} labels for {} points",
                labels.len(),
                data.n_points()
            )));
        }
        let k_true = class_names.len();
        let mut seen = vec![false; k_true];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k_true {
                return Err(DataError::InvalidLabels(format!(
                    "label {l} of point {i} is out of range for {k_true} classes"
                )));
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(DataError::InvalidLabels(format!(
                "class {missing} has no points"
            )));
        }
        Ok(Self {
            data,
            labels,
            k_true,
            class_names,
        })
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k_true];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Per-dimension data range plus the scalar spread used to scale mutation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Global maximum minus global minimum over every feature value.
    pub rho: f64,
}

impl DataBounds {
    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

pub fn compute_bounds(data: &DataSet) -> DataBounds {
    let mut lower = data.point(0).to_vec();
    let mut upper = lower.clone();
    for p in data.points().skip(1) {
        for ((lo, hi), &x) in lower.iter_mut().zip(upper.iter_mut()).zip(p) {
            *lo = lo.min(x);
            *hi = hi.max(x);
        }
    }
    let global_min = lower.iter().copied().fold(f64::INFINITY, f64::min);
    let global_max = upper.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DataBounds {
        lower,
        upper,
        rho: global_max - global_min,
    }
}

/// One diagonal-covariance Gaussian component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub mean: Vec<f64>,
    /// Diagonal of the covariance matrix (variances, not standard deviations).
    pub variances: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureSpec {
    pub components: Vec<MixtureComponent>,
}

impl GaussianMixtureSpec {
    pub fn validate(&self) -> Result<usize, DataError> {
        let first = self
            .components
            .first()
            .ok_or_else(|| DataError::InvalidSpec("no components".into()))?;
        let dims = first.mean.len();
        if dims == 0 {
            return Err(DataError::InvalidSpec("zero-dimensional mean".into()));
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.mean.len() != dims || c.variances.len() != dims {
                return Err(DataError::InvalidSpec(format!(
                    "component {i} does not have dimension {dims}"
                )));
            }
            if c.count == 0 {
                return Err(DataError::InvalidSpec(format!(
                    "component {i} has zero count"
                )));
            }
            if c.variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(DataError::InvalidSpec(format!(
                    "component {i} has a non-positive variance"
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(DataError::InvalidSpec(format!(
                    "component {i} has a non-finite mean"
                )));
            }
        }
        Ok(dims)
    }

    pub fn total_points(&self) -> usize {
        self.components.iter().map(|c| c.count).sum()
    }

    fn isotropic(means: &[&[f64]], variances: &[f64], count: usize) -> Self {
        Self {
            components: means
                .iter()
                .map(|m| MixtureComponent {
                    mean: m.to_vec(),
                    variances: variances.to_vec(),
                    count,
                })
                .collect(),
        }
    }

    /// Two overlapping classes of 100 points, covariance diag(0.11, 0.1).
    pub fn dataset1() -> Self {
        Self::dataset1_with_variances(0.11, 0.1)
    }

    pub fn dataset1_with_variances(v1: f64, v2: f64) -> Self {
        Self::isotropic(&[&[0.1, 0.1], &[0.35, 0.1]], &[v1, v2], 100)
    }

    /// Nine classes of 25 points on the {0.1, 0.5, 0.9}² grid, variance 0.08.
    pub fn dataset2() -> Self {
        let grid = [0.1, 0.5, 0.9];
        let means: Vec<[f64; 2]> = grid
            .iter()
            .flat_map(|&x| grid.iter().map(move |&y| [x, y]))
            .collect();
        let refs: Vec<&[f64]> = means.iter().map(|m| m.as_slice()).collect();
        Self::isotropic(&refs, &[0.08, 0.08], 25)
    }

    /// Three classes of 50 points in three dimensions, variance 0.3.
    pub fn dataset3() -> Self {
        Self::isotropic(
            &[&[1.0, 1.0, 1.0], &[2.0, 2.5, 2.5], &[2.0, 3.0, 3.0]],
            &[0.3, 0.3, 0.3],
            50,
        )
    }

    /// Looks up a built-in mixture by name (`dataset1`, `dataset2`, `dataset3`).
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "dataset1" => Some(Self::dataset1()),
            "dataset2" => Some(Self::dataset2()),
            "dataset3" => Some(Self::dataset3()),
            _ => None,
        }
    }
}

pub const BUILTIN_MIXTURES: [&str; 3] = ["dataset1", "dataset2", "dataset3"];

/// Samples a labelled dataset; points are emitted component by component.
pub fn generate_gaussian_mixture(
    spec: &GaussianMixtureSpec,
    seed: u64,
) -> Result<LabeledDataSet, DataError> {
    let dims = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(spec.total_points() * dims);
    let mut labels = Vec::with_capacity(spec.total_points());
    for (label, c) in spec.components.iter().enumerate() {
        let sd: Vec<f64> = c.variances.iter().map(|v| v.sqrt()).collect();
        for _ in 0..c.count {
            for (m, s) in c.mean.iter().zip(&sd) {
                let z: f64 = StandardNormal.sample(&mut rng);
                values.push(m + s * z);
            }
            labels.push(label);
        }
    }
    let names = (0..spec.components.len()).map(|i| i.to_string()).collect();
    LabeledDataSet::new(DataSet::from_flat(values, dims)?, labels, names)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingValuePolicy {
    Reject,
    DropRows,
    #[default]
    ImputeMedian,
}

impl std::str::FromStr for MissingValuePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reject" => Ok(Self::Reject),
            "drop" | "drop-rows" => Ok(Self::DropRows),
            "impute" | "impute-median" => Ok(Self::ImputeMedian),
            other => Err(format!(
                "unknown missing-value policy '{other}' (expected reject, drop or impute)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    /// Commas when the line contains one, otherwise runs of whitespace.
    #[default]
    Auto,
    Comma,
    Whitespace,
}

impl std::str::FromStr for Delimiter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "comma" | "," => Ok(Self::Comma),
            "whitespace" | "space" => Ok(Self::Whitespace),
            other => Err(format!(
                "unknown delimiter '{other}' (expected auto, comma or whitespace)"
            )),
        }
    }
}

/// Column layout of a delimited file. Column indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct DelimitedSchema {
    /// Feature columns; `None` means every column except the label column.
    pub feature_columns: Option<Vec<usize>>,
    /// Label column; negative values count from the end (-1 is the last).
    pub label_column: isize,
    pub missing_marker: String,
    pub missing_policy: MissingValuePolicy,
    pub delimiter: Delimiter,
}

impl Default for DelimitedSchema {
    fn default() -> Self {
        Self {
            feature_columns: None,
            label_column: -1,
            missing_marker: "?".into(),
            missing_policy: MissingValuePolicy::default(),
            delimiter: Delimiter::Auto,
        }
    }
}

impl DelimitedSchema {
    /// UCI `iris.data`: four measurements then the species name.
    pub fn iris() -> Self {
        Self {
            feature_columns: Some(vec![0, 1, 2, 3]),
            label_column: 4,
            ..Self::default()
        }
    }

    /// UCI `breast-cancer-wisconsin.data`: sample id, nine cytology scores,
    /// class (2 benign, 4 malignant). The id column is ignored.
    pub fn breast_cancer() -> Self {
        Self {
            feature_columns: Some((1..=9).collect()),
            label_column: 10,
            ..Self::default()
        }
    }

    pub fn with_policy(mut self, policy: MissingValuePolicy) -> Self {
        self.missing_policy = policy;
        self
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        let comma = match self.delimiter {
            Delimiter::Comma => true,
            Delimiter::Whitespace => false,
            Delimiter::Auto => line.contains(','),
        };
        if comma {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        }
    }
}

pub fn load_delimited(path: &Path, schema: &DelimitedSchema) -> Result<LabeledDataSet, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_delimited(&text, schema)
}

/// Parses delimited text. Rows are numbered from 1 and columns from 0 in
/// error messages; blank lines and lines starting with `#` are skipped.
pub fn parse_delimited(text: &str, schema: &DelimitedSchema) -> Result<LabeledDataSet, DataError> {
    let mut width: Option<usize> = None;
    let mut rows: Vec<(usize, Vec<Option<f64>>, String)> = Vec::new();
    let mut feature_cols: Vec<usize> = Vec::new();
    let mut label_col = 0usize;

    for (line_no, line) in text.lines().enumerate() {
        let row = line_no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells = schema.split(trimmed);
        match width {
            None => {
                width = Some(cells.len());
                (feature_cols, label_col) = resolve_columns(schema, cells.len())?;
            }
            Some(w) if w != cells.len() => {
                return Err(DataError::Row {
                    row,
                    reason: format!("expected {w} columns, found {}", cells.len()),
                });
            }
            Some(_) => {}
        }
        let mut features = Vec::with_capacity(feature_cols.len());
        for &col in &feature_cols {
            let cell = cells[col];
            if cell == schema.missing_marker {
                features.push(None);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(Some(v)),
                _ => {
                    return Err(DataError::Parse {
                        row,
                        column: col,
                        reason: format!("'{cell}' is not a number"),
                    })
                }
            }
        }
        rows.push((row, features, cells[label_col].to_string()));
    }

    if rows.is_empty() {
        return Err(DataError::Empty);
    }

    let dims = feature_cols.len();
    match schema.missing_policy {
        MissingValuePolicy::Reject => {
            if let Some((row, f, _)) = rows.iter().find(|(_, f, _)| f.iter().any(Option::is_none)) {
                let pos = f.iter().position(Option::is_none).unwrap_or(0);
                return Err(DataError::Parse {
                    row: *row,
                    column: feature_cols[pos],
                    reason: "missing value".into(),
                });
            }
        }
        MissingValuePolicy::DropRows => rows.retain(|(_, f, _)| f.iter().all(Option::is_some)),
        MissingValuePolicy::ImputeMedian => {
            for i in 0..dims {
                if rows.iter().all(|(_, f, _)| f[i].is_some()) {
                    continue;
                }
                let mut present: Vec<f64> = rows.iter().filter_map(|(_, f, _)| f[i]).collect();
                if present.is_empty() {
                    return Err(DataError::Parse {
                        row: rows[0].0,
                        column: feature_cols[i],
                        reason: "column has no values to impute from".into(),
                    });
                }
                let median = median(&mut present);
                for (_, f, _) in rows.iter_mut() {
                    f[i].get_or_insert(median);
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }

    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut labels = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * dims);
    for (_, features, label) in rows {
        let next = class_names.len();
        let idx = *class_index.entry(label.clone()).or_insert_with(|| {
            class_names.push(label);
            next
        });
        labels.push(idx);
        values.extend(
            features
                .into_iter()
                .map(|v| v.expect("missing values resolved")),
        );
    }
    LabeledDataSet::new(DataSet::from_flat(values, dims)?, labels, class_names)
}

fn resolve_columns(
    schema: &DelimitedSchema,
    width: usize,
) -> Result<(Vec<usize>, usize), DataError> {
    let label = if schema.label_column < 0 {
        width as isize + schema.label_column
    } else {
        schema.label_column
    };
    if label < 0 || label as usize >= width {
        return Err(DataError::InvalidSchema(format!(
            "label column {} outside {width} columns",
            schema.label_column
        )));
    }
    let label = label as usize;
    let features = match &schema.feature_columns {
        Some(cols) => {
            if let Some(&bad) = cols.iter().find(|&&c| c >= width || c == label) {
                return Err(DataError::InvalidSchema(format!(
                    "feature column {bad} is out of range or is the label column"
                )));
            }
            cols.clone()
        }
        None => (0..width).filter(|&c| c != label).collect(),
    };
    if features.is_empty() {
        return Err(DataError::InvalidSchema("no feature columns".into()));
    }
    Ok((features, label))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }
}

/// Writes comma-separated rows with the class index as the trailing column.
/// Uses shortest round-trip float formatting.
pub fn write_delimited<W: Write>(data: &LabeledDataSet, mut out: W) -> io::Result<()> {
    let mut line = String::new();
    for (p, label) in data.data.points().zip(&data.labels) {
        line.clear();
        for v in p {
            write!(line, "{v},").expect("write to string");
        }
        writeln!(line, "{label}").expect("write to string");
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}
