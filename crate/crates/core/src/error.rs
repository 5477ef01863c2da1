use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("degenerate distribution: rho = {rho}, theta = {theta}")]
    DegenerateDistribution { rho: f64, theta: f64 },

    #[error("relaxation time must be positive, got {0}")]
    InvalidRelaxation(f64),

    #[error("non-physical conservative state: energy {energy} does not exceed kinetic energy {kinetic}")]
    Positivity { energy: f64, kinetic: f64 },

    #[error("positivity lost in cell {cell} at t = {time}")]
    PositivityLoss { cell: usize, time: f64 },

    #[error("non-finite value in cell {cell} at t = {time}")]
    NonFinite { cell: usize, time: f64 },

    #[error("non-real spectrum in cell {cell}: max imaginary part {imag:.3e}")]
    Hyperbolicity { cell: usize, imag: f64 },

    #[error("eigenvalue offsets must increase by at least {gap:e}; violated at index {index}")]
    Offsets { index: usize, gap: f64 },

    #[error("network inference produced a non-finite value in layer {layer}")]
    Inference { layer: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised while decoding the MLCW and BGKD binary formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("stream truncated while reading {0}")]
    Truncated(&'static str),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid field: {0}")]
    Invalid(String),

    #[error("golden vector {index} mismatch: max deviation {deviation:.3e}")]
    Golden { index: usize, deviation: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
