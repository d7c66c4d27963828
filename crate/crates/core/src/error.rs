use thiserror::Error;

pub type Result<T> = std::result::Result<T, GratingError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GratingError {
    #[error("domain error: {0}")]
    Domain(String),

    /// k_1 would vanish or become imaginary.
    #[error("branch point: eps_r*mu_r = {product} must exceed cos^2(theta_i) = {cos2}")]
    BranchPoint { product: f64, cos2: f64 },

    #[error("degenerate medium: polarization denominator D vanishes")]
    DegenerateMedium,

    #[error("resonance: isolated-cylinder denominator vanishes at order {order}")]
    Resonance { order: i32 },

    #[error(
        "grating anomaly: Delta(1 +/- sin psi_i) is within {margin:.3e} of an integer (threshold {threshold:.3e}); lattice sums diverge"
    )]
    Anomaly { margin: f64, threshold: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("singular system: condition estimate {condition:.3e} exceeds {limit:.3e}")]
    SingularSystem { condition: f64, limit: f64 },

    #[error("truncation not converged up to order {max_order} (last change {last_change:.3e}, tol {tol:.3e})")]
    Truncation {
        max_order: usize,
        last_change: f64,
        tol: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("table range: {0}")]
    TableRange(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl GratingError {
    /// True for failures of the numerics (anomaly, singular system, no convergence)
    /// as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GratingError::Anomaly { .. }
                | GratingError::NoConvergence(_)
                | GratingError::SingularSystem { .. }
                | GratingError::Truncation { .. }
                | GratingError::Resonance { .. }
                | GratingError::DegenerateMedium
                | GratingError::InsufficientData(_)
        )
    }
}
