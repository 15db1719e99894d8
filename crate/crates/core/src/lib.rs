//! Loop representation of the FK-Ising model on finite rectangles of Z^2,
//! with exact (enumeration) and Monte Carlo evaluation of the discrete
//! fermionic observables, the coupled Ising observables via disorder lines,
//! and the discrete-complex-analysis checks (s-holomorphicity, residues,
//! Pfaffian structure) that tie them together.
//!
//! The crate is organised around the objects of the model:
//!
//! * [`lattice`] — geometry and indexing: primal/dual vertices, corners,
//!   mid-edges, and the wired outer dual ring that closes the loop graph.
//! * [`config`] — FK configurations, cluster decomposition, loop extraction.
//! * [`winding`] — exact integer arithmetic for turnings and winding phases.
//! * [`measures`] — FK/loop/Ising weights, disorder lines, Edwards-Sokal
//!   samplers.
//! * [`observables`] — the 2- and 2n-point fermionic observables, matchings,
//!   the exploration tree, FK/Ising equivalence checks, Monte Carlo.
//! * [`holomorphy`] — mid-edge extension, s-holomorphicity residuals,
//!   discrete residues and the Pfaffian identity.
//! * [`engines`] — deterministic sharded enumeration and the ES Markov chain.

pub mod config;
pub mod engines;
pub mod error;
pub mod holomorphy;
pub mod lattice;
pub mod measures;
pub mod observables;
pub mod winding;

pub use config::{ClusterLabels, FkConfig, LoopSet};
pub use error::{FkError, Result};
pub use lattice::{build_domain, CornerId, EdgeId, FaceId, LatticeDomain, Quadrant, VertexId};
pub use measures::{DefectLine, ModelParams, SpinConfig};
pub use observables::{InsertionSet, Matching, ObservableValue, ValueMode};
pub use winding::{PhaseEighth, PhaseSixteenth, QuarterTurns};
