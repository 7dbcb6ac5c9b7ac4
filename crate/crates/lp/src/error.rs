use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("LP file parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
