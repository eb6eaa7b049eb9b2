use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HerzError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("shell range [{k_min}, {k_max}] does not fit the grid: {reason}")]
    ShellRange {
        k_min: i32,
        k_max: i32,
        reason: String,
    },

    #[error("singular Gram matrix on shell {shell} at degree {degree} ({nodes} nodes)")]
    SingularGram {
        shell: i32,
        degree: usize,
        nodes: usize,
    },

    #[error("function mass outside the covered shells: lost L1 mass {lost_mass:e} (relative {relative:e})")]
    ShellOverflow { lost_mass: f64, relative: f64 },

    #[error("moments up to degree {degree} do not vanish: max scaled moment {max_moment:e}")]
    MomentsNotVanishing { degree: usize, max_moment: f64 },

    #[error("zero normalizer on shell {shell} while the shell component has norm {norm:e}")]
    ZeroNormalizer { shell: i32, norm: f64 },

    #[error("invalid atom: {0}")]
    InvalidAtom(String),

    #[error("invalid molecule: {0}")]
    InvalidMolecule(String),

    #[error("exponent window violated: {0}")]
    Window(String),

    #[error("kernel error: {0}")]
    Kernel(String),

    #[error("mean of the operator image too large: |mean| = {mean:e} exceeds {tol:e}")]
    NonzeroMean { mean: f64, tol: f64 },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl HerzError {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        HerzError::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for HerzError {
    fn from(e: std::io::Error) -> Self {
        HerzError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HerzError {
    fn from(e: serde_json::Error) -> Self {
        HerzError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HerzError>;
