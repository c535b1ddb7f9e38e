use serde::Serialize;

/// Failure of a run, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit status 2: the configuration could not be read or violates a precondition.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    /// Exit status 1: a module failed during computation.
    #[error("numerical failure: {0}")]
    Numerical(#[from] latspec_core::Error),
    /// Exit status 1: writing outputs failed.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    status: &'static str,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    key: Option<&'a str>,
    message: String,
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) | CliError::Io { .. } => 1,
        }
    }

    /// One-line machine-readable description.
    pub fn to_json(&self) -> String {
        let doc = match self {
            CliError::Config { key, message } => ErrorDoc {
                status: "error",
                kind: "config",
                key: Some(key),
                message: message.clone(),
            },
            CliError::Numerical(e) => ErrorDoc {
                status: "error",
                kind: "numerical",
                key: None,
                message: e.to_string(),
            },
            CliError::Io { source, path } => ErrorDoc {
                status: "error",
                kind: "io",
                key: Some(path),
                message: source.to_string(),
            },
        };
        serde_json::to_string(&doc).expect("error document serializes")
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
