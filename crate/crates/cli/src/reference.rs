//! Published results that `reproduce` compares against.

/// One dataset × algorithm cell of the published tables.
#[derive(Debug, Clone, Copy)]
pub struct Reference {
    pub dataset: &'static str,
    pub algorithm: &'static str,
    pub best_j: f64,
    pub best_j_percent: f64,
    pub accuracy_percent: f64,
}

const fn cell(
    dataset: &'static str,
    algorithm: &'static str,
    best_j: f64,
    best_j_percent: f64,
    accuracy_percent: f64,
) -> Reference {
    Reference {
        dataset,
        algorithm,
        best_j,
        best_j_percent,
        accuracy_percent,
    }
}

pub const REFERENCES: [Reference; 10] = [
    cell("dataset1", "ucsc", 25.141, 100.0, 88.0),
    cell("dataset1", "kmeans", 25.166, 100.0, 86.0),
    cell("dataset2", "ucsc", 21.597, 100.0, 97.78),
    cell("dataset2", "kmeans", 21.906, 40.0, 97.33),
    cell("dataset3", "ucsc", 70.628, 100.0, 91.33),
    cell("dataset3", "kmeans", 70.653, 75.0, 91.33),
    cell("iris", "ucsc", 97.101, 100.0, 90.0),
    cell("iris", "kmeans", 97.205, 80.0, 89.33),
    cell("breast-cancer", "ucsc", 3048.2, 100.0, 96.11),
    cell("breast-cancer", "kmeans", 3051.3, 100.0, 95.7),
];

pub fn lookup(dataset: &str, algorithm: &str) -> Option<&'static Reference> {
    REFERENCES
        .iter()
        .find(|r| r.dataset == dataset && r.algorithm == algorithm)
}
