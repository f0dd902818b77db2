//! Folding Euclidean space onto the closed Weyl chamber of a finite
//! reflection group, and numerical checks that folded random walks and
//! Brownian paths are normally reflected processes.
//!
//! * [`rootsys`]: root systems, Weyl groups, reduced words for `w₀`.
//! * [`folding`]: the foldings `r_α`, the projection `π`, facets, and the
//!   chamber distance `d(x, K_α)`.
//! * [`lattice`]: the triangular-lattice walk and its reflected image.
//! * [`stochastic`]: Brownian paths, local-time estimators and the
//!   reflected-process decomposition.
//! * [`density`]: the sum-over-group reflected heat kernel.
//! * [`cli`]: the experiment driver behind the `weylfold` binary.

pub mod algebra;
pub mod cli;
pub mod density;
pub mod error;
pub mod folding;
pub mod lattice;
pub mod rng;
pub mod stochastic;
pub mod rootsys;

pub use error::{Error, Result};
pub use folding::{FacetSignature, FoldingOperator};
pub use rootsys::{build_classical, build_dihedral, generate_group, ClassicalFamily, Root, RootSystem, Vector, WeylGroup};
