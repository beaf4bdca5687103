use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes. [`Error::is_regime`] separates numerical-regime failures
/// (guards, divergence) from plain bad input.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grids do not match")]
    GridMismatch,
    #[error("{what} does not decay at the x-edges (edge value {edge:.3e}, tolerance {tol:.3e})")]
    EdgeDecay { what: &'static str, edge: f64, tol: f64 },
    #[error("smallness guard: norm {norm:.4e} exceeds guard {guard:.4e}")]
    SmallnessGuard { norm: f64, guard: f64 },
    #[error("fixed point iteration diverged after {iterations} iterations")]
    Diverged { iterations: usize },
    #[error("field is not near the kink family (distance {distance:.3e})")]
    NotNearKink { distance: f64 },
    #[error("no root in window: {0}")]
    NoRoot(String),
    #[error("bracket failure in row {row}")]
    BracketFailure { row: usize },
    #[error("negative minor {value:.3e} on columns {columns:?}")]
    NegativeMinor { columns: Vec<usize>, value: f64 },
    #[error("coefficient matrix is rank deficient")]
    RankDeficient,
    #[error("tau function is not positive at ({x}, {y})")]
    TauNonPositive { x: f64, y: f64 },
    #[error("blow-up at t = {t}")]
    BlowUp { t: f64 },
    #[error("time step {dt:.3e} violates the nonlinear CFL bound {bound:.3e}")]
    Cfl { dt: f64, bound: f64 },
    #[error("psi nonpositive (minimum {min:.3e})")]
    PsiNonPositive { min: f64 },
    #[error("regime guard: {0}")]
    RegimeGuard(String),
    #[error("marching became unstable at row {row}")]
    Unstable { row: usize },
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("optimizer made no descent")]
    NoDescent,
    #[error("field has no pronounced soliton minimum")]
    NoSoliton,
}

impl Error {
    /// True for failures caused by leaving the small-data / resolved regime.
    pub fn is_regime(&self) -> bool {
        !matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidParameter(_)
                | Error::GridMismatch
                | Error::EdgeDecay { .. }
                | Error::NegativeMinor { .. }
                | Error::RankDeficient
                | Error::Cfl { .. }
        )
    }
}
