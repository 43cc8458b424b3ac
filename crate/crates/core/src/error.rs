use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Array lengths, dimensions or grids that do not line up.
    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Argument outside the domain of a pointwise formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("synthesis left an imaginary residue of {residue:.3e} (relative), spectrum is not Hermitian")]
    NonHermitian { residue: f64 },

    #[error("degenerate moments: mass {rho:.6e} is not positive")]
    DegenerateMoments { rho: f64 },

    #[error("kernel table has no entry for l = {l:?}, m = {m:?}")]
    MissingKey { l: [i32; 2], m: [i32; 2] },

    #[error("oracle refused: N = {n} exceeds the limit of {max}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("kernel table cache is corrupt: {0}")]
    Checksum(String),

    #[error("non-finite values after step {step}")]
    BlowUp { step: u64 },

    #[error("{}", format_parse(.line, .message))]
    Parse { line: Option<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_parse(line: &Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("config line {l}: {message}"),
        None => message.to_string(),
    }
}

impl Error {
    pub(crate) fn parse(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
