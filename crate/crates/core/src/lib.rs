//! Worst-case blocking-time analysis for fixed-priority jobs that share
//! resources under the basic priority inheritance protocol.
//!
//! The analysis runs in four steps, each usable on its own:
//!
//! 1. [`deadlock`]: the nesting of critical sections must induce an acyclic
//!    order on resources, otherwise blocking is unbounded.
//! 2. [`bound`]: a polynomial upper bound on the blocking time of each job,
//!    obtained by solving an assignment problem with the Hungarian method over
//!    the resources and jobs computed by [`relevance`].
//! 3. [`admissibility`]: a quick check that the bound is realised by a
//!    feasible chain of critical sections, in which case it is exact.
//! 4. [`search`]: otherwise, an A* search over admissible chains returns the
//!    exact blocking time together with a witness chain.
//!
//! [`analysis::analyze`] chains the four steps. [`oracle`] holds an
//! exhaustive reference implementation and task-set generators for testing.

pub mod admissibility;
pub mod analysis;
pub mod bound;
pub mod deadlock;
pub mod error;
pub mod fixtures;
pub mod oracle;
pub mod relevance;
pub mod search;
pub mod taskset;
pub mod time;

pub use analysis::{analyze, AnalysisReport, AnalyzeOptions};
pub use error::{Error, Result};
pub use taskset::{
    chain_duration, parse_taskset, serialize_taskset, z, Bracket, CriticalSection, Job,
    JobSet, ResourceId, ResourceSet, SectionRef, TaskSet, ZChain,
};
pub use time::Time;
