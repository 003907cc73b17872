//! Partitional clustering by clonal selection (UCSC) with a Lloyd K-means
//! baseline, synthetic and delimited-file datasets, and repeated-run scoring.
//!
//! ```no_run
//! use ucsc_core::dataset::{load_delimited, DelimitedSchema};
//! use ucsc_core::ucsc::{run_ucsc, UcscConfig};
//!
//! let iris = load_delimited("data/iris.data".as_ref(), &DelimitedSchema::iris()).unwrap();
//! let (solution, trace) = run_ucsc(&iris.data, &UcscConfig::with_k(3)).unwrap();
//! println!("J = {:.3} after {} generations", solution.j_value, trace.records.len());
//! ```

pub mod clustering;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod kmeans;
pub mod ucsc;

pub use clustering::{Assignment, CentroidSet, ClusteringSolution, EvaluatedSolution};
pub use dataset::{DataBounds, DataSet, LabeledDataSet};
pub use error::RunError;
pub use kmeans::{run_kmeans, KMeansConfig, KMeansInit};
pub use ucsc::{run_ucsc, UcscConfig};
