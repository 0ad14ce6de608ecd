use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolaritonError {
    #[error("invalid chain parameters: {0}")]
    InvalidParams(String),
    #[error("momentum {kd} lies on a dispersion pole")]
    PoleAtResonance { kd: f64 },
    #[error("degenerate quadratic: partner root coincides with cos q")]
    DegenerateQuadratic,
    #[error("pole in a(q, p): cos q equals cos p")]
    PoleInACoeff,
    #[error("degenerate denominator")]
    DegenerateDenominator,
    #[error("requires non-chiral parameters (gamma_r == gamma_l)")]
    RequiresNonChiral,
    #[error("mode index {xi} out of range for N = {n}")]
    ModeOutOfRange { n: usize, xi: usize },
    #[error("N = {n} outside the allowed range {min}..={max} for this operation")]
    SizeLimit { n: usize, min: usize, max: usize },
    #[error("eigendecomposition failed")]
    EigenFailure,
    #[error("{fraction:.4} of the norm reached the chain ends before the packets separated")]
    BoundaryContamination { fraction: f64 },
    #[error("invalid wavepacket: {0}")]
    InvalidWavepacket(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

impl PolaritonError {
    /// Short stable code for per-row error columns.
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidParams(_) => "invalid_params",
            Self::PoleAtResonance { .. } => "pole_at_resonance",
            Self::DegenerateQuadratic => "degenerate_quadratic",
            Self::PoleInACoeff => "pole_in_a_coeff",
            Self::DegenerateDenominator => "degenerate_denominator",
            Self::RequiresNonChiral => "requires_non_chiral",
            Self::ModeOutOfRange { .. } => "mode_out_of_range",
            Self::SizeLimit { .. } => "size_limit",
            Self::EigenFailure => "eigen_failure",
            Self::BoundaryContamination { .. } => "boundary_contamination",
            Self::InvalidWavepacket(_) => "invalid_wavepacket",
            Self::Inconsistent(_) => "inconsistent",
        }
    }
}

pub type Result<T> = std::result::Result<T, PolaritonError>;
