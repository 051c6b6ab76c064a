use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular input: {0}")]
    SingularInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sigma calibration failed: {message}\n{scan}")]
    Calibration { message: String, scan: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("unstable time step: dt = {dt} ps exceeds the bound {bound} ps")]
    Stability { dt: f64, bound: f64 },
    #[error("norm drift {drift:e} after {steps} steps exceeds {limit:e}")]
    NormDrift { drift: f64, steps: usize, limit: f64 },
    #[error("initial state does not fit the grid: {0}")]
    Support(String),
    #[error("stale extraction: {0}")]
    StaleExtraction(String),
    #[error("near a wave-function node at ({x:.4}, {z:.4}): |psi| = {ratio:.2e} of maximum")]
    NearNode { x: f64, z: f64, ratio: f64 },
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
