use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("transport error after {elapsed_ms} ms ({attempts} attempts): {message}")]
    Transport {
        message: String,
        elapsed_ms: u64,
        attempts: u32,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("join error: {what}: {}", preview(.ids))]
    Join { what: String, ids: Vec<String> },

    #[error("policy error: {0}")]
    Policy(String),

    #[error("accounting error: missing token counts for {}", preview(.ids))]
    Accounting { ids: Vec<String> },

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("insufficient examples: {0}")]
    Insufficient(String),

    #[error("index format error: {0}")]
    Format(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids
        .iter()
        .take(SHOWN)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        s.push_str(&format!(" (+{} more)", ids.len() - SHOWN));
    }
    s
}
