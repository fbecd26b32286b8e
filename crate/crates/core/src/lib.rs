//! Multiscale graphical lasso.
//!
//! Joint estimation of a hierarchical clustering of variables and of sparse
//! conditional-independence graphs at every level of the hierarchy. Each
//! variable is regressed on all the others (neighborhood selection) under a
//! lasso penalty plus a group-fused penalty that pulls aligned regression
//! vectors together. Sweeping the fusion weight yields nested partitions.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command line and
//! parallel drivers live in the `mglasso` companion crate.
//!
//! ```
//! use mglasso_core::{DataMatrix, Hyperparameters, Scaling, SolverConfig, conesta_solve};
//!
//! let rows = [
//!     [1.0, 0.9, -0.2],
//!     [0.4, 0.5, 0.3],
//!     [-1.2, -1.0, 0.1],
//!     [0.3, 0.1, -0.6],
//!     [-0.5, -0.4, 0.4],
//! ];
//! let x = DataMatrix::from_rows(&rows).unwrap().standardize(Scaling::UnitNorm).unwrap();
//! let hp = Hyperparameters::new(0.05, 0.01).unwrap();
//! let (beta, diag) = conesta_solve(&x, &hp, &SolverConfig::default(), None).unwrap();
//! assert_eq!(beta.p(), 3);
//! assert!(diag.final_duality_gap >= 0.0);
//! ```

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod evaluation;
pub mod linalg;
pub mod model;
pub mod neighborhood;
pub mod objective;
pub mod path;
mod polish;
pub mod solver;
pub mod stars;
pub mod synthetic;

pub use error::{Error, Result};
pub use evaluation::{
    adjusted_rand_index, averaged_roc, confusion, roc_curve, AveragedRoc, ConfusionCounts,
    RocCurve,
};
pub use model::{
    aligned_difference, devectorize, graph_from_beta, vectorize, DataMatrix, EdgeRule, Graph,
    Hierarchy, Hyperparameters, Level, Merge, Partition, RegressionMatrix, Scaling,
    SolveDiagnostics, Standardization, Weights,
};
pub use neighborhood::{neighborhood_selection, NeighborhoodConfig};
pub use objective::{
    duality_gap, objective_value, prox_l1, smooth_gradient, smoothed_fused_gradient,
    smoothed_fused_value, DifferenceOperator, SmoothedPenaltyState,
};
pub use path::{
    cluster_level_graph, detect_fusions, init_beta, lambda2_max_heuristic, mglasso_path,
    PathConfig,
};
pub use solver::{conesta_solve, fista_solve, lipschitz_bound, GraphEstimator, SolverConfig};
pub use stars::{edge_probabilities, instability, select_lambda1, StarsConfig, StarsSelection};
pub use synthetic::{
    erdos_ground_truth, sample_gaussian, sbm_ground_truth, scale_free_ground_truth,
    GraphModel, GroundTruth, SimConfig,
};
