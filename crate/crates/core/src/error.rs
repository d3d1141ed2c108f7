use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("singular value decomposition failed: {0}")]
    Decomposition(String),

    #[error("degenerate excitation: |u1[{index}]| = {magnitude:e} leaves the RIS phase undefined")]
    DegenerateExcitation { index: usize, magnitude: f64 },

    #[error("design needs at least {required} eigenmodes, the feeder provides {available}")]
    InsufficientModes { required: usize, available: usize },

    #[error("no unimodal distance found below the Rayleigh distance ({rayleigh})")]
    SearchFailure {
        rayleigh: f64,
        scan: Box<crate::optimizer::DistanceScan>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
