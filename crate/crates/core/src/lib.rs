//! Two-dimensional D2Q9 lattice-Boltzmann workbench: MRT/BGK collisions,
//! the link-wise artificial compressibility scheme, and the finite-difference
//! lattice Boltzmann reconstruction, together with linear stability analysis
//! and the validation flows built on them.

pub mod boundaries;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod report;
pub mod schemes;
pub mod stencil;
pub mod vonneumann;

pub use boundaries::{Geometry, NodeClassification, NodeKind, WallRule};
pub use error::{Error, Result};
pub use experiments::{PoiseuilleSpec, ShearWaveSpec, StokesDiskSpec, StokesMode, Target};
pub use lattice::{MomentVector, RelaxationRates, Transport, VelocitySet};
pub use schemes::{FieldSet, PopulationField, PrimitiveField, SchemeConfig, SchemeKind, Simulation, StepContext};
pub use stencil::{ScalarGrid, StencilKind};
pub use vonneumann::{AmplificationMatrix, BranchLabel, ModeBranch, PlaneWaveProbe, TransportFit};
