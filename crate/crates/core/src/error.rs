use thiserror::Error;

/// Errors produced by the engine.
///
/// The CLI maps [`Error::Validation`], [`Error::Domain`] and [`Error::Data`]
/// to exit code 2 and [`Error::NonConvergence`] to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration or input that violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// An evaluator was called outside its mathematical domain.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// An iterative solver hit its iteration cap.
    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:.3e}){}", context_suffix(.context))]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        /// Free-form location information (period, country, residual trace).
        context: String,
    },

    /// Malformed or incomplete input data.
    #[error("data error: {0}")]
    Data(String),

    /// Rank-deficient or separated regression design.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

fn context_suffix(ctx: &str) -> String {
    if ctx.is_empty() {
        String::new()
    } else {
        format!(" [{ctx}]")
    }
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Attach location information to a non-convergence error, leaving other
    /// variants untouched.
    pub fn with_context(self, extra: impl AsRef<str>) -> Self {
        match self {
            Error::NonConvergence { solver, iterations, residual, context } => {
                let context = if context.is_empty() {
                    extra.as_ref().to_string()
                } else {
                    format!("{}; {}", extra.as_ref(), context)
                };
                Error::NonConvergence { solver, iterations, residual, context }
            }
            Error::Domain { op, msg } => Error::Domain { op, msg: format!("{} ({})", msg, extra.as_ref()) },
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
