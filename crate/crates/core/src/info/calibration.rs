use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::InfoError;
use crate::promise::{AgentId, Body, Polarity, PromiseGraph, PromiseType};
use crate::sim::{EventKind, EventLog};

/// Outcome of checking that a common source calibrated its dependents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationVerdict {
    pub source: AgentId,
    /// Agents with offers conditioned on something the source offers them.
    pub candidates: Vec<AgentId>,
    /// Candidates that never accepted the source's body, or whose calibrated
    /// offer differs from the others'.
    pub failing: Vec<AgentId>,
    /// Local time of each candidate's first acceptance from the source.
    pub completed_at: BTreeMap<AgentId, u64>,
    pub calibrated: bool,
}

impl CalibrationVerdict {
    pub fn label(&self) -> &'static str {
        if self.calibrated {
            "CALIBRATED"
        } else {
            "NOT-CALIBRATED"
        }
    }
}

/// Checks the common-source pattern rooted at `source`.
///
/// Every agent holding a conditional offer keyed on a type `source` offers
/// it is a candidate. Calibration holds when each candidate accepted that
/// type from the source in the log and all candidates' keyed offers carry
/// the same body.
pub fn calibration_check(log: &EventLog, graph: &PromiseGraph, source: &AgentId) -> Result<CalibrationVerdict, InfoError> {
    if !graph.contains_agent(source) {
        return Err(InfoError::PatternAbsent(format!("no agent {source}")));
    }
    // (candidate, keyed type, keyed offer body)
    let mut keyed: BTreeMap<AgentId, (PromiseType, Body)> = BTreeMap::new();
    for (_, offer) in graph.promises_by(source).filter(|(_, p)| p.is_offer()) {
        let x = &offer.promisee;
        for (_, p) in graph.promises_by(x) {
            if p.polarity == Polarity::Offer && p.conditions.contains(offer.ptype()) {
                keyed.entry(x.clone()).or_insert_with(|| (offer.ptype().clone(), p.body.clone()));
            }
        }
    }
    if keyed.len() < 2 {
        return Err(InfoError::PatternAbsent(format!(
            "fewer than two agents condition an offer on {source}"
        )));
    }

    let mut completed_at = BTreeMap::new();
    for (x, (ptype, _)) in &keyed {
        let first = log
            .of_agent(x)
            .find(|r| r.kind == EventKind::Accept && &r.ptype == ptype && r.peer.as_ref() == Some(source));
        if let Some(r) = first {
            completed_at.insert(x.clone(), r.local_time);
        }
    }

    let reference = &keyed.values().next().expect("two candidates").1;
    let failing: Vec<AgentId> = keyed
        .iter()
        .filter(|(x, (_, body))| !completed_at.contains_key(*x) || body != reference)
        .map(|(x, _)| x.clone())
        .collect();

    Ok(CalibrationVerdict {
        source: source.clone(),
        candidates: keyed.keys().cloned().collect(),
        calibrated: failing.is_empty(),
        failing,
        completed_at,
    })
}
