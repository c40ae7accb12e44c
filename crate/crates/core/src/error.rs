use thiserror::Error;

use crate::taskset::{ResourceId, SectionRef};
use crate::time::TimeParseError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: bad duration: {source}")]
    Duration {
        line: usize,
        #[source]
        source: TimeParseError,
    },

    #[error("{section}: {resource} is already held by an enclosing section of the same job")]
    RelockedResource {
        section: SectionRef,
        resource: ResourceId,
    },

    #[error("task set has no jobs")]
    EmptyTaskSet,

    #[error("job J{job} does not exist (task set has {jobs} jobs)")]
    NoSuchJob { job: usize, jobs: usize },

    #[error("critical section {0} does not exist")]
    NoSuchSection(SectionRef),

    #[error("resource order is cyclic: {}", format_cycle(.0))]
    Cyclic(Vec<ResourceId>),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search space of {space} combinations exceeds the limit of {limit}")]
    LimitExceeded { space: u128, limit: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub(crate) fn format_cycle(cycle: &[ResourceId]) -> String {
    cycle
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" -> ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
