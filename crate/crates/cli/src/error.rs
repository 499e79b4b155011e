use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        source: qesr_core::Error,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Invalid { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Core errors raised while running, tagged with the ensemble or step.
    pub fn core(context: impl Into<String>, e: qesr_core::Error) -> Self {
        use qesr_core::Error as E;
        let context = context.into();
        match e {
            E::EmptyLines
            | E::NonPositiveLine { .. }
            | E::GridTooSmall(_)
            | E::InvalidWindow { .. }
            | E::InvalidParameter { .. } => CliError::Invalid {
                field: context,
                reason: e.to_string(),
            },
            E::Csv(msg) => CliError::Io {
                context,
                source: std::io::Error::other(msg),
            },
            source => CliError::Numerical { context, source },
        }
    }
}

impl From<qesr_core::Error> for CliError {
    fn from(e: qesr_core::Error) -> Self {
        CliError::core("model", e)
    }
}
