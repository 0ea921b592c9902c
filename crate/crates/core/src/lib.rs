//! Two-sample testing for populations of graphs.
//!
//! Given graphs from two groups `a` and `b`, decide whether both groups come
//! from the same distribution. Two tests share one precomputed Gram matrix:
//!
//! - [`ktst`]: kernel two-sample test, unbiased MMD² with a permutation null;
//! - [`cbt`]: classification-based test, SVM balanced accuracy under nested
//!   cross-validation with a permutation null.
//!
//! Gram matrices come from vector embeddings of graphs sharing a node set
//! ([`embedding`]: DCE, DRE + Gaussian kernel) or from topological graph
//! kernels ([`graph_kernels`]: Weisfeiler-Lehman, shortest path).
//! [`simulation`] runs the star-graph Type I / Type II error experiment, and
//! [`cli`] backs the `graphtest` binary.
//!
//! ```
//! use graphtest::{embedding, ktst, simulation};
//!
//! let data = simulation::gen_star_dataset(5, 1.0, 20, 20, 7).unwrap();
//! let e = embedding::dce_embed(&data).unwrap();
//! let k = embedding::embedded_gram(&e, embedding::Bandwidth::MedianHeuristic).unwrap();
//! let cfg = ktst::KtstConfig { permutations: 500, seed: 1, ..Default::default() };
//! let report = ktst::ktst_labeled(&k, data.labels(), &cfg).unwrap();
//! assert!(report.p_value < 0.05);
//! ```

pub mod cbt;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod graph_kernels;
pub mod kernel;
pub mod ktst;
pub mod report;
pub mod rng;
pub mod simulation;
pub mod svm;

pub use error::{Error, Result};
pub use graph::{Graph, Group, LabeledGraphDataset};
pub use kernel::KernelMatrix;
