//! Block-value (BV) symmetry detection and orbital MCMC for discrete
//! graphical models.
//!
//! The pipeline: build or parse a [`GraphicalModel`], normalize it to clauses,
//! choose block partitions, detect BV symmetries through automorphisms of a
//! coloured graph, and run Gibbs chains that interleave uniform jumps within
//! the current state's orbit.

pub mod group;
pub mod harness;
pub mod marginals;
pub mod mcmc;
pub mod model;
pub mod partition;
pub mod scalar;
pub mod symmetry;

pub use group::{OrbitMode, SymmetryGroup};
pub use marginals::{MarginalCounter, MarginalEstimate};
pub use mcmc::{run_chain, ChainConfig, ChainKind};
pub use model::{Evidence, GraphicalModel, ModelBuilder, State};
pub use partition::{BlockPartition, BlockValueSet};
pub use scalar::Scalar;
pub use symmetry::{BvSymmetry, ColoredGraph};

/// Double-precision model, the default throughout the CLI.
pub type Model = GraphicalModel<f64>;
/// Single-precision model.
pub type ModelF32 = GraphicalModel<f32>;
