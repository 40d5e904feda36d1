use thiserror::Error;

/// Errors raised by the model, optimizer and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A reference-wave entry with zero modulus has no defined phase.
    #[error("degenerate field: reference wave vanishes at element {element}")]
    DegenerateField { element: usize },

    #[error("singular channel: condition number {condition:.3e} exceeds {limit:.1e}")]
    SingularChannel { condition: f64, limit: f64 },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    /// No candidate met every SINR floor. `weights` is the best-effort
    /// solution (least constraint violation).
    #[error("capacity floors infeasible (worst user shortfall {shortfall:.3e} bit/s/Hz)")]
    Infeasible { weights: Vec<f64>, shortfall: f64 },

    #[error("echo delay of {delay_samples} samples does not fit a {window_samples}-sample receive window")]
    OutOfWindow {
        delay_samples: usize,
        window_samples: usize,
    },

    #[error("empty frame: no data bits and zero radar power")]
    EmptyFrame,

    /// `line` is 1-based; 0 when the key is absent from the document.
    #[error("parse error{}, key `{key}`: {message}", at_line(*line))]
    Parse {
        key: String,
        line: usize,
        message: String,
    },

    #[error("report schema mismatch: {0}")]
    Version(String),

    /// Wraps an error raised inside the alternating loop.
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o: {0}")]
    Io(String),
}

fn at_line(line: usize) -> String {
    match line {
        0 => String::new(),
        l => format!(" at line {l}"),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Strips iteration context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
