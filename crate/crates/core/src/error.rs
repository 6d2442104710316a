use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Probability mass lost beyond the truncation exceeds the tail tolerance.
    #[error("TruncationError: {what}: deficit {deficit:.3e} exceeds tolerance {tolerance:.3e} at dim {dim}")]
    Truncation {
        what: String,
        deficit: f64,
        tolerance: f64,
        dim: usize,
    },
    #[error("DimensionError: {0}")]
    Dimension(String),
    #[error("CalibrationError: {0}")]
    Calibration(String),
    #[error("DegenerateBoundError: {what}: denominator {denominator:.3e} too close to zero")]
    DegenerateBound { what: String, denominator: f64 },
    #[error("PostSelectionError: no heralded events among {samples} samples")]
    PostSelection { samples: u64 },
    #[error("ParameterError: {0}")]
    Parameter(String),
}

impl Error {
    /// Error class name as printed by the command-line front end.
    pub fn class_name(&self) -> &'static str {
        match self {
            Error::Truncation { .. } => "TruncationError",
            Error::Dimension(_) => "DimensionError",
            Error::Calibration(_) => "CalibrationError",
            Error::DegenerateBound { .. } => "DegenerateBoundError",
            Error::PostSelection { .. } => "PostSelectionError",
            Error::Parameter(_) => "ParameterError",
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

pub(crate) fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} = {value} outside [0, 1]")))
    }
}
