use thiserror::Error;

use crate::name::Name;
use crate::syntax::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },

    #[error("sort error: {0}")]
    Sort(String),

    #[error("not a confidential process: {}", render_report(.0))]
    CpiViolation(ValidationReport),

    #[error("invalid substitution: {0}")]
    SubstitutionDomain(String),

    #[error("no transition matches step {step}")]
    NoSuchTransition { step: usize },

    #[error("witness is not a confidential process: {}", render_report(.0))]
    WitnessNotCpi(ValidationReport),

    #[error("`{0}` is a reserved name")]
    ReservedName(Name),

    #[error("source process not accepted by the encoder: {0}")]
    SourceMode(String),

    #[error("cannot build instance: {0}")]
    Construction(String),
}

fn render_report(report: &ValidationReport) -> String {
    report
        .violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
