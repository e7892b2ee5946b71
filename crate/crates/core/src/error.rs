use core::fmt;

use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Evaluation point outside the model's domain (axis, box, or a negative radius).
    OutOfDomain,
    /// A field or jet produced NaN or infinity.
    NonFinite,
    /// |B| vanished where a unit direction was needed.
    ZeroField,
    /// The symmetry candidate vanished where it is divided by.
    ZeroU,
    /// Guiding-centre B̃∥ fell below the configured floor.
    DegenerateBpar { bpar: f64, floor: f64 },
    /// (B, u, ∇ψ) do not form a basis.
    DegenerateBasis,
    /// B·∇|B| vanished.
    DegenerateGradB,
    /// ∇ψ vanished.
    DegenerateGradPsi,
    /// u·b vanished in the torus projection.
    DegenerateUb,
    /// No real root for ψ on the invariant torus (μ|B| > E).
    NoReal,
    /// Fixed-point or nonlinear iteration did not converge.
    NoConvergence { iterations: usize, residual: f64 },
    /// Adaptive integrator could not make progress.
    StepFailure { t: f64, reason: String },
    /// Requested level crossings never happened along the traced line.
    LevelsNotCrossed,
    /// No return to the starting point within the allotted time.
    NotClosed,
    /// Period lattice of the torus action could not be found.
    NoLattice,
    /// Point is not on the requested flux surface.
    NotOnSurface { deviation: f64 },
    /// Line integral path crosses a singular point.
    PathThroughSingularity,
    /// Trajectory too short to decide a class.
    Undetermined,
    /// No closed-form Y with div Y = u·v/|u|⁴ is available for this candidate.
    UnsupportedSymmetry,
    /// Linear operator could not be factored.
    SingularOperator,
    /// Bad input value.
    InvalidInput(String),
    /// Expression text could not be parsed.
    Parse { position: usize, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfDomain => write!(f, "point outside model domain"),
            Error::NonFinite => write!(f, "non-finite value encountered"),
            Error::ZeroField => write!(f, "magnetic field vanishes"),
            Error::ZeroU => write!(f, "symmetry candidate vanishes"),
            Error::DegenerateBpar { bpar, floor } => {
                write!(f, "|B~par| = {bpar:e} below floor {floor:e}")
            }
            Error::DegenerateBasis => write!(f, "(B, u, n) is not a basis"),
            Error::DegenerateGradB => write!(f, "B.grad|B| vanishes"),
            Error::DegenerateGradPsi => write!(f, "grad psi vanishes"),
            Error::DegenerateUb => write!(f, "u.b vanishes"),
            Error::NoReal => write!(f, "mu|B| exceeds energy: no real torus branch"),
            Error::NoConvergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::StepFailure { t, reason } => write!(f, "step failure at t = {t:e}: {reason}"),
            Error::LevelsNotCrossed => write!(f, "field line did not cross the requested |B| levels"),
            Error::NotClosed => write!(f, "orbit did not close within the time limit"),
            Error::NoLattice => write!(f, "period lattice not found"),
            Error::NotOnSurface { deviation } => write!(f, "point off the flux surface by {deviation:e}"),
            Error::PathThroughSingularity => write!(f, "integration path crosses a singularity"),
            Error::Undetermined => write!(f, "trajectory too short to classify"),
            Error::UnsupportedSymmetry => write!(f, "no closed-form Y for this symmetry candidate"),
            Error::SingularOperator => write!(f, "singular linear operator"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Parse { position, message } => write!(f, "parse error at {position}: {message}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::error::Error for Error {}
