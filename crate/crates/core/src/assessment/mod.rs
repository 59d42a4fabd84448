//! Assessments, frequency tables and observer joints built from event logs.

mod dist;
mod observer;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use dist::{EmpiricalDist, JointDist, TableParseError, TrustFlag};
pub use observer::{
    joint_distribution, nyquist_check, observer_correlation, LagCorrelation, ObserverConfig, Pairing,
    SamplingReport, SamplingStatus, Target,
};

use crate::promise::{resolve_scope, AgentId, Alphabet, Promise, PromiseGraph};
use crate::sim::{EventKind, EventLog, EventRecord};

/// Result of one assessment. `Refused` means the assessor has no standing;
/// it is an outcome, not a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssessmentOutcome {
    Kept,
    NotKept,
    Refused,
}

impl fmt::Display for AssessmentOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssessmentOutcome::Kept => "KEPT",
            AssessmentOutcome::NotKept => "NOT-KEPT",
            AssessmentOutcome::Refused => "REFUSED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssessError {
    #[error("{assessor} has no standing to assess {promise}")]
    NoStanding { assessor: AgentId, promise: String },
    #[error("missing observability promise {0}")]
    MissingObservability(String),
}

/// Whether `assessor` may assess `promise` at all.
pub fn has_standing(graph: &PromiseGraph, promise: &Promise, assessor: &AgentId) -> bool {
    resolve_scope(graph, promise).contains(assessor)
}

/// Assesses one event against a promise.
///
/// The event is KEPT when it is the giver's own act of the promised kind
/// (EMIT for an offer, ACCEPT for an acceptance) with a symbol inside the
/// promised alphabet.
pub fn assess_event(
    assessor: &AgentId,
    promise: &Promise,
    event: &EventRecord,
    graph: &PromiseGraph,
) -> AssessmentOutcome {
    if !has_standing(graph, promise, assessor) {
        return AssessmentOutcome::Refused;
    }
    let expected = if promise.is_offer() { EventKind::Emit } else { EventKind::Accept };
    let in_alphabet = event.symbol.as_ref().is_some_and(|s| promise.body.alphabet().contains(s));
    if event.kind == expected && event.agent == promise.giver && &event.ptype == promise.ptype() && in_alphabet
    {
        AssessmentOutcome::Kept
    } else {
        AssessmentOutcome::NotKept
    }
}

/// Relative frequencies of what `assessor` actually came to know about
/// `promise`.
///
/// The promisee of an offer counts the symbols it accepted from the giver.
/// Anyone else with standing (including the promisee of an acceptance)
/// learns of the giver's behaviour only through the giver's observability
/// reports, so counts those. An assessor that received nothing gets the
/// empty distribution.
pub fn empirical_distribution(
    log: &EventLog,
    assessor: &AgentId,
    promise: &Promise,
    graph: &PromiseGraph,
) -> Result<EmpiricalDist, AssessError> {
    if !has_standing(graph, promise, assessor) {
        return Err(AssessError::NoStanding { assessor: assessor.clone(), promise: promise.to_string() });
    }
    let direct = promise.is_offer() && assessor == &promise.promisee;
    let ptype = if direct { promise.ptype().clone() } else { promise.ptype().observability() };
    let mut dist = EmpiricalDist::new(promise.ptype().clone(), assessor.clone(), promise.body.alphabet().clone());
    for r in log.of_agent(assessor) {
        if r.kind == EventKind::Accept && r.ptype == ptype && r.peer.as_ref() == Some(&promise.giver) {
            if let Some(s) = &r.symbol {
                dist.add(s);
            }
        }
    }
    Ok(dist)
}

/// Declared alphabet of everything `agent` promises under `ptype`.
pub(crate) fn declared_alphabet(graph: &PromiseGraph, agent: &AgentId, ptype: &crate::promise::PromiseType) -> Alphabet {
    graph
        .promises_by(agent)
        .filter(|(_, p)| p.ptype() == ptype)
        .fold(Alphabet::empty(), |acc, (_, p)| acc.union(p.body.alphabet()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promise::{Body, Scope};
    use crate::sim::Correlation;

    fn graph() -> (PromiseGraph, Promise) {
        let mut g = PromiseGraph::new(["S", "R", "T"].map(|a| a.parse().unwrap()));
        let body = Body::new("tau".parse().unwrap(), Alphabet::from_names(&["R", "G", "B"]).unwrap());
        let p = Promise::offer("S", body, "R").unwrap();
        g.add_promise(p.clone());
        (g, p)
    }

    fn emit(symbol: &str) -> EventRecord {
        EventRecord {
            global_seq: 0,
            agent: "S".parse().unwrap(),
            local_time: 1,
            kind: EventKind::Emit,
            ptype: "tau".parse().unwrap(),
            symbol: Some(symbol.parse().unwrap()),
            correlation: Some(Correlation { origin: "S".parse().unwrap(), seq: 0 }),
            reason: None,
            peer: Some("R".parse().unwrap()),
            tick: 0,
        }
    }

    #[test]
    fn promisee_assesses_emission() {
        let (g, p) = graph();
        let r: AgentId = "R".parse().unwrap();
        assert_eq!(assess_event(&r, &p, &emit("G"), &g), AssessmentOutcome::Kept);
        assert_eq!(assess_event(&r, &p, &emit("Y"), &g), AssessmentOutcome::NotKept);
    }

    #[test]
    fn outsiders_are_refused_unless_in_scope() {
        let (g, p) = graph();
        let t: AgentId = "T".parse().unwrap();
        assert_eq!(assess_event(&t, &p, &emit("G"), &g), AssessmentOutcome::Refused);
        let scoped = p.clone().with_scope(Scope::agents([t.clone()]));
        assert_eq!(assess_event(&t, &scoped, &emit("G"), &g), AssessmentOutcome::Kept);
    }

    #[test]
    fn acceptance_needs_accept_events() {
        let (g, _) = graph();
        let body = Body::new("tau".parse().unwrap(), Alphabet::from_names(&["G"]).unwrap());
        let acc = Promise::accept("R", body, "S").unwrap();
        let s: AgentId = "S".parse().unwrap();
        let mut e = emit("G");
        assert_eq!(assess_event(&s, &acc, &e, &g), AssessmentOutcome::NotKept);
        e.kind = EventKind::Accept;
        e.agent = "R".parse().unwrap();
        assert_eq!(assess_event(&s, &acc, &e, &g), AssessmentOutcome::Kept);
    }

    #[test]
    fn no_standing_is_an_error_for_distributions() {
        let (g, p) = graph();
        let log = EventLog { scenario: "x".into(), scenario_hash: "h".into(), seed: 0, ticks: 1, records: vec![] };
        let t: AgentId = "T".parse().unwrap();
        assert!(matches!(empirical_distribution(&log, &t, &p, &g), Err(AssessError::NoStanding { .. })));
        let d = empirical_distribution(&log, &"R".parse().unwrap(), &p, &g).unwrap();
        assert!(d.is_empty());
    }
}
