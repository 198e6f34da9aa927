//! Alignment dynamics of Cucker-Smale type with the diagnostics used to
//! study flocking: weighted graph Laplacians and their spectral gap, the
//! coefficient of ergodicity, fluctuation functionals, decay envelopes and
//! histogram moments.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`]: free space or a flat torus, and packed point sets;
//! * [`kernels`]: communication kernels and adjacency matrices;
//! * [`spectral`]: weighted Laplacian, `lambda2`, ergodicity coefficient;
//! * [`dynamics`]: model variants, time steppers and the run loop;
//! * [`diagnostics`]: fluctuation functionals and envelopes;
//! * [`moments`]: density and momentum fields on a grid;
//! * [`harness`]: scenario files, presets and output writing.

pub mod diagnostics;
pub mod domain;
pub mod dynamics;
pub mod harness;
pub mod kernels;
pub mod moments;
pub mod spectral;

pub use diagnostics::{DiagnosticsError, DiagnosticsRecord, DiagnosticsSeries, EnvelopeKind, EnvelopeReport};
pub use domain::{Domain, GeometryError, Points};
pub use dynamics::{AgentState, DynamicsError, ModelSpec, PotentialSpec, StepPolicy};
pub use harness::{parse_config, ConfigError, HarnessError, ScenarioConfig, Verdict};
pub use kernels::{build_adjacency, AdjacencyMatrix, KernelError, KernelSpec, TopologicalRegion};
pub use moments::{empirical_moments, MomentField, MomentsError};
pub use spectral::{MassVector, SpectralError, WeightedLaplacian};
