//! Deterministic simulation and information-theoretic analysis of agents
//! that interact only through promises.
//!
//! The crate is organised bottom-up:
//!
//! * [`promise`] holds the static algebra: bodies, bindings, channel overlap,
//!   scope and causal closure of a promise graph.
//! * [`sim`] executes a graph as a seeded discrete-event simulation with
//!   per-agent logical clocks and produces an [`sim::EventLog`].
//! * [`assessment`] turns logs into assessments, empirical distributions and
//!   joint distributions, gated on observability promises.
//! * [`info`] computes entropies and mutual information over those
//!   structures, plus chain attenuation and calibration checks.
//! * [`scenario`] is the declarative file format, the golden corpus and the
//!   report pipeline used by the command-line driver.
//!
//! Information measures are generic over the floating point type; the
//! aliases below fix the common choices.

pub mod assessment;
pub mod info;
pub mod num;
pub mod promise;
pub mod scenario;
pub mod sim;

pub use assessment::{AssessmentOutcome, EmpiricalDist, JointDist, ObserverConfig, Pairing};
pub use promise::{AgentId, Alphabet, Body, Polarity, Promise, PromiseGraph, PromiseType, Symbol};
pub use scenario::Scenario;
pub use sim::{EventLog, EventRecord};

/// Information report in double precision, the default used by the CLI.
pub type InfoReport = info::InfoReport<f64>;
/// Information report in single precision.
pub type InfoReportF32 = info::InfoReport<f32>;
/// Chain analysis in double precision.
pub type ChainReport = info::ChainReport<f64>;
/// Independence verdict in double precision.
pub type IndependenceVerdict = info::IndependenceVerdict<f64>;

/// Version string embedded in reports.
pub const TOOL_VERSION: &str = concat!("promise-info ", env!("CARGO_PKG_VERSION"));
