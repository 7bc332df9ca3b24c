use std::fmt;

/// A parse or check failure anchored at a source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// Tokens or constructs that would have been accepted here.
    pub expected: Vec<String>,
}

impl Diagnostic {
    pub fn new(line: usize, col: usize, message: impl Into<String>, expected: Vec<String>) -> Diagnostic {
        Diagnostic { line, col, message: message.into(), expected }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostic {}
