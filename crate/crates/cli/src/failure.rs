use std::fmt;

use contraction_core::Error;
use serde::Serialize;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Validation,
    Runtime,
}

/// Error printed as one JSON object on stderr.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub error: FailureKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure::new(FailureKind::Validation, message)
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure::new(FailureKind::Runtime, message)
    }

    fn new(error: FailureKind, message: impl Into<String>) -> Self {
        Failure {
            error,
            message: message.into(),
            file: None,
            line: None,
            column: None,
            hint: None,
        }
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = Some(hint.into());
        self
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }

    pub fn at_line(mut self, line: Option<usize>) -> Self {
        self.line = line;
        self
    }

    /// Parse failure of a JSON document, keeping serde's position.
    pub fn json(err: &serde_json::Error, file: &str) -> Self {
        let mut f = Failure::validation(err.to_string()).in_file(file);
        if err.line() > 0 {
            f.line = Some(err.line());
            f.column = Some(err.column());
        }
        f
    }

    pub fn exit_code(&self) -> i32 {
        match self.error {
            FailureKind::Validation => EXIT_VALIDATION,
            FailureKind::Runtime => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).expect("serializable"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Divergence { .. }
            | Error::ImproperSampler { .. }
            | Error::InvalidIndex { .. }
            | Error::NonFinite(_)
            | Error::Io(_) => Failure::runtime(message),
            Error::SizeMismatch { .. } => Failure::validation(message)
                .with_hint("pass --resample M to draw M paths with replacement from each file"),
            Error::CapExceeded { .. } => {
                Failure::validation(message).with_hint("pass --chunk BLOCK to average over blocks")
            }
            _ => Failure::validation(message),
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// 1-based line of the first occurrence of `"key"` in a JSON document.
pub fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}
