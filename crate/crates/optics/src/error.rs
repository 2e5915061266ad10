use thiserror::Error;

/// Errors produced by the optics modules.
///
/// `exit_code` maps each variant onto the process exit convention used by the
/// CLI: 2 for invalid input, 3 for infeasible optimization, 4 for internal
/// guards that should never trip on valid input.
#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate anchor: {0}")]
    DegenerateAnchor(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("interpolation out of range: theta {theta_deg}° outside [{min_deg}°, {max_deg}°]")]
    OutOfRange {
        theta_deg: f64,
        min_deg: f64,
        max_deg: f64,
    },

    #[error("insufficient angular coverage: grid reaches {max_deg}° but at least 85° is required")]
    Coverage { max_deg: f64 },

    #[error("degenerate response: {0}")]
    DegenerateResponse(String),

    #[error("oversampling violated: scene pitch {scene_pitch} µm exceeds pixel_pitch/4 = {limit} µm")]
    Oversampling { scene_pitch: f64, limit: f64 },

    #[error("undefined contrast: {0}")]
    UndefinedContrast(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("internal guard: {0}")]
    Internal(String),
}

impl OpticsError {
    pub fn exit_code(&self) -> u8 {
        match self {
            OpticsError::Infeasible(_) => 3,
            OpticsError::Internal(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, OpticsError>;
