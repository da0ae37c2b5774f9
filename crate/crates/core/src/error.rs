use thiserror::Error;

/// Errors raised by the solvers, the analyzer and the experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid {nx}x{ny} is too small: {reason}")]
    GridTooSmall {
        nx: usize,
        ny: usize,
        reason: String,
    },

    #[error("wave vector ({kx}, {ky}) is not commensurate with a {nx}x{ny} grid")]
    NonCommensurate { kx: f64, ky: f64, nx: usize, ny: usize },

    #[error("geometry does not fit the grid: {0}")]
    Geometry(String),

    #[error("virtual node ({x}, {y}) has no fluid neighbour to extrapolate from")]
    NoFluidNeighbor { x: usize, y: usize },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("branch tracking ambiguous at k = {k}: best overlap {overlap:.3}")]
    BranchAmbiguity { k: f64, overlap: f64 },

    #[error("linear instability: |z| = {modulus} at k = {k}")]
    Instability { k: f64, modulus: f64 },

    #[error("mode contamination: projection residual {residual:.3} exceeds {limit:.3}")]
    ModeContamination { residual: f64, limit: f64 },

    #[error("non-finite value in field after {step} steps")]
    Diverged { step: usize },
}

impl Error {
    /// True for failures caused by the numerics (instability, bad fit) rather
    /// than by invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FitFailure(_)
                | Error::BranchAmbiguity { .. }
                | Error::Instability { .. }
                | Error::ModeContamination { .. }
                | Error::Diverged { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
