//! Seeded discrete-event execution of a promise graph.

mod ack;
mod clock;
mod engine;
mod log;
mod policy;

use rayon::prelude::*;

pub(crate) use policy::check_weights;

pub use ack::{ack_transaction, ack_transaction_for, AckPart, TransactionTemplate};
pub use clock::{check_clock_ordering, ClockViolation};
pub use engine::{acceptance_decision, run, stream, AgentState, Delivery, Satisfaction, Simulation};
pub use log::{
    Correlation, EventKind, EventLog, EventRecord, LogParseError, RejectReason, LOG_COLUMNS, LOG_MAGIC,
};
pub use policy::{
    BehaviorPolicy, ConditionWindow, Delay, Distribution, LinkModel, LinkTable, OfferKey, PolicyKind,
    Substitution, WEIGHT_TOLERANCE,
};

use crate::promise::{AgentId, PromiseGraph, PromiseId, PromiseType, Symbol};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
    #[error("conditional offer {0} forced to emit before its conditions hold")]
    ConditionUnsatisfied(PromiseId),
    #[error("promise {0} is not an offer")]
    NotAnOffer(PromiseId),
    #[error("offer {0} has no emission policy")]
    NoPolicy(PromiseId),
    #[error("acknowledgment pattern incomplete, missing: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    IncompletePattern(Vec<AckPart>),
}

/// Runs one scenario for every seed and maps each log through `f`.
///
/// Logs are consumed as they finish so an ensemble never holds more than
/// one log per worker thread.
pub fn ensemble<R, F>(scenario: &Scenario, seeds: &[u64], ticks: u64, f: F) -> Result<Vec<R>, SimError>
where
    R: Send,
    F: Fn(u64, EventLog) -> R + Sync,
{
    seeds.par_iter().map(|&seed| run(scenario, seed, ticks).map(|log| f(seed, log))).collect()
}

/// Copy of `scenario` in which `agent` holds no acceptance promises.
pub fn strip_acceptances(scenario: &Scenario, agent: &AgentId) -> Scenario {
    let mut out = scenario.clone();
    out.graph = scenario.graph.without_acceptances_of(agent);
    out
}

/// An EMIT reduced to what autonomy must preserve: no clocks, which depend
/// on how many receipts the agent processed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitTrace {
    pub tick: u64,
    pub ptype: PromiseType,
    pub peer: Option<AgentId>,
    pub symbol: Option<Symbol>,
    pub correlation: Option<Correlation>,
}

/// The agent's EMITs of its unconditional, non-observability offers.
pub fn unconditional_emits(log: &EventLog, graph: &PromiseGraph, agent: &AgentId) -> Vec<EmitTrace> {
    log.of_agent(agent)
        .filter(|r| r.kind == EventKind::Emit && !r.ptype.is_observability())
        .filter(|r| {
            let Some(peer) = &r.peer else { return false };
            graph
                .find(agent, crate::promise::Polarity::Offer, &r.ptype, peer)
                .is_some_and(|id| !graph.promise(id).is_conditional())
        })
        .map(|r| EmitTrace {
            tick: r.tick,
            ptype: r.ptype.clone(),
            peer: r.peer.clone(),
            symbol: r.symbol.clone(),
            correlation: r.correlation.clone(),
        })
        .collect()
}
