use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}", config_message(*.line, .msg))]
    Config { line: Option<usize>, msg: String },

    #[error("cannot access {path}: {msg}")]
    Io { path: String, msg: String },

    #[error("numerical error: {0}")]
    Numerical(#[from] lite_core::Error),

    #[error("{0}")]
    Usage(String),
}

fn config_message(line: Option<usize>, msg: &str) -> String {
    match line {
        Some(l) => format!("config error on line {l}: {msg}"),
        None => format!("config error: {msg}"),
    }
}

impl HarnessError {
    /// Process exit status: 2 usage, 3 configuration or I/O, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Config { .. } | Self::Io { .. } => 3,
            Self::Numerical(_) => 4,
        }
    }
}

pub const EXIT_DIVERGED: i32 = 10;
