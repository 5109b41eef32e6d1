use std::fmt;

/// Failure reported as a single `error: kind=<kind> message=<text>` line.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl fmt::Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Self::new("config", message)
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self::new("usage", message)
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // one line, whatever the message contains
        let message = self.message.replace('\n', " ");
        write!(f, "error: kind={} message={}", self.kind, message)
    }
}

impl std::error::Error for CliError {}
