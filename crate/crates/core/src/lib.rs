//! Haar-Walsh wavelet packets on graphs.
//!
//! A graph is recursively bisected ([`partition`]) into a binary tree of
//! regions. The tree carries an overcomplete dictionary of piecewise-constant
//! orthonormal vectors ([`ghwt`]) from which a cost-minimizing basis can be
//! chosen either along a single ordering of the dictionary or, with
//! [`eghwt`], over every tiling reachable by mixing time and sequency splits.
//! [`tensor2d`] does the same for matrices with one tree per axis.
//!
//! ```
//! use eghwt::{Dictionary, CostFunction, Graph, EigenConfig};
//! use eghwt::partition::build_partition_tree_spectral;
//!
//! let g = Graph::path(6);
//! let tree = build_partition_tree_spectral(&g, &EigenConfig::default()).unwrap();
//! let dict = Dictionary::new(tree);
//! let coeffs = dict.analyze(&[2.0, -2.0, 1.0, 3.0, -1.0, -2.0]).unwrap();
//! let (basis, cost) = eghwt::eghwt::eghwt_best_basis(&coeffs, &CostFunction::lp(1.0).unwrap());
//! assert_eq!(basis.len(), 6);
//! assert!((cost - 7.4495).abs() < 1e-3);
//! ```

pub mod eghwt;
pub mod error;
pub mod ghwt;
pub mod graph;
pub mod imaging;
pub mod io;
pub mod partition;
pub mod tensor2d;

pub use error::{Error, Result};
pub use ghwt::{best_basis_cw, cost_eval, BasisSpec, CoeffTable, CostFunction, Dictionary, Ordering, TagKey};
pub use graph::{bipartition_by_fiedler, fiedler_vector, EigenConfig, Fiedler, Graph, LaplacianKind};
pub use partition::{PartitionTree, Region, Violation};
pub use tensor2d::{TensorCoeffTable, TensorKey};
