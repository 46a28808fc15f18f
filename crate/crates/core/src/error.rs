use thiserror::Error;

use crate::sym::Sym;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Sym),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("symbol `{0}` is not part of the theory's signature")]
    NotInTheorySignature(Sym),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("no rule for operation `{0}`")]
    MissingRule(Sym),
    #[error("placeholder violation in rule for `{op}`: {detail}")]
    PlaceholderViolation { op: Sym, detail: String },
    #[error("distributive law is not certified to preserve the theory's equations")]
    PreservationNotCertified,
    #[error("quotient step depends on the chosen representative: {0}")]
    RepresentativeDependence(String),
    #[error("case split on an output that is not a Boolean constant: {0}")]
    UndecidedCase(String),
    #[error("output expression error: {0}")]
    Output(String),
    #[error("invalid theory: {0}")]
    InvalidTheory(String),
    #[error("invalid grammar: {0}")]
    InvalidGrammar(String),
    #[error("invalid corecursive system: {0}")]
    InvalidSystem(String),
    #[error("{line}:{column}: {kind}: {message}")]
    Syntax {
        kind: SyntaxKind,
        message: String,
        line: usize,
        column: usize,
    },
}

/// Category of a located diagnostic from the workbench file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntaxKind {
    Parse,
    UnknownSymbol,
    ArityMismatch,
    MissingSection,
    Invalid,
}

impl std::fmt::Display for SyntaxKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SyntaxKind::Parse => "parse error",
            SyntaxKind::UnknownSymbol => "unknown symbol",
            SyntaxKind::ArityMismatch => "arity mismatch",
            SyntaxKind::MissingSection => "missing section",
            SyntaxKind::Invalid => "invalid",
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
