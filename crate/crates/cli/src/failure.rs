//! Error classes that map to process exit codes.

use armsuite_agents::AgentError;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    MissingArtifact(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::MissingArtifact(m) => write!(f, "missing artifact: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_MISSING: i32 = 5;

/// Exit code for an error chain; 1 when nothing more specific applies.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Config(_) => EXIT_CONFIG,
                Failure::MissingArtifact(_) => EXIT_MISSING,
            };
        }
        if let Some(a) = cause.downcast_ref::<AgentError>() {
            match a {
                AgentError::Divergence(_) => return EXIT_DIVERGENCE,
                AgentError::InvalidConfig(_) | AgentError::SingleTaskZeroShot | AgentError::ProvenanceMismatch { .. } => return EXIT_CONFIG,
                AgentError::Io(_) | AgentError::Csv(_) => return EXIT_IO,
                _ => {}
            }
        }
        if let Some(c) = cause.downcast_ref::<armsuite_core::Error>() {
            if !matches!(c, armsuite_core::Error::StepAfterDone | armsuite_core::Error::InvalidAction(_)) {
                return EXIT_CONFIG;
            }
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    1
}
