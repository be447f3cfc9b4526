use thiserror::Error;
use wirerecon_core::calibration::CalibrationError;
use wirerecon_core::dataset_io::DatasetError;
use wirerecon_core::predictor::PredictorError;
use wirerecon_core::reconstruction::ReconstructionError;
use wirerecon_core::synthetic::SyntheticError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input.
    #[error("{0}")]
    Usage(String),
    /// Valid input the pipeline could not process.
    #[error("{0}")]
    Data(String),
    /// Divergence or other numerical breakdown.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        CliError::Usage(m.into())
    }

    pub fn data(m: impl Into<String>) -> Self {
        CliError::Data(m.into())
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::InvalidInput(_) => CliError::Usage(e.to_string()),
            CalibrationError::DivergedError => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ReconstructionError> for CliError {
    fn from(e: ReconstructionError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SyntheticError> for CliError {
    fn from(e: SyntheticError) -> Self {
        match e {
            SyntheticError::InvalidParams(_) | SyntheticError::DegenerateAngle(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PredictorError> for CliError {
    fn from(e: PredictorError) -> Self {
        match e {
            PredictorError::NonFiniteLoss(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}
