use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use super::log::{Correlation, EventKind, EventLog, RejectReason};
use crate::promise::{AgentId, PromiseType};

/// A broken local-clock ordering found in a log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClockViolation {
    /// An agent's clock did not strictly increase between consecutive events.
    NonMonotone { agent: AgentId, global_seq: u64, previous: u64, local_time: u64 },
    /// An ACCEPT or REJECT with no earlier DELIVER of the same transaction.
    ReceiptWithoutDelivery { agent: AgentId, global_seq: u64, correlation: Option<Correlation> },
    /// The originator received part of a transaction no later than it sent it.
    ReceiptBeforeSend { agent: AgentId, correlation: Correlation },
    /// A relayed or reported EMIT of a foreign transaction that the agent
    /// had not accepted yet.
    RelayBeforeAccept { agent: AgentId, global_seq: u64, correlation: Correlation },
}

impl fmt::Display for ClockViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClockViolation::NonMonotone { agent, global_seq, previous, local_time } => write!(
                f,
                "{agent}: local time {local_time} at record {global_seq} does not follow {previous}"
            ),
            ClockViolation::ReceiptWithoutDelivery { agent, global_seq, correlation } => {
                let c = correlation.as_ref().map_or("-".to_string(), ToString::to_string);
                write!(f, "{agent}: receipt {global_seq} ({c}) has no earlier delivery")
            }
            ClockViolation::ReceiptBeforeSend { agent, correlation } => {
                write!(f, "{agent}: received {correlation} before sending it")
            }
            ClockViolation::RelayBeforeAccept { agent, global_seq, correlation } => {
                write!(f, "{agent}: emitted {correlation} at record {global_seq} before accepting it")
            }
        }
    }
}

type DeliveryKey = (AgentId, Option<Correlation>, PromiseType, Option<AgentId>);

/// Audits a log for the orderings each agent's local clock must respect.
///
/// Only local clocks and correlation ids are consulted; the scheduler's
/// tick and global sequence appear in diagnostics but never decide an
/// ordering.
pub fn check_clock_ordering(log: &EventLog) -> Vec<ClockViolation> {
    let mut out = Vec::new();
    let mut last: HashMap<&AgentId, u64> = HashMap::new();
    let mut delivered: HashMap<DeliveryKey, VecDeque<u64>> = HashMap::new();
    // Per (agent, correlation): local time of the agent's first EMIT and
    // its earliest receipt.
    let mut first_emit: HashMap<(&AgentId, &Correlation), u64> = HashMap::new();
    let mut first_receipt: BTreeMap<(&AgentId, &Correlation), u64> = BTreeMap::new();
    let mut accepted: HashMap<(&AgentId, &Correlation), u64> = HashMap::new();

    for r in &log.records {
        if let Some(&prev) = last.get(&r.agent) {
            if r.local_time <= prev {
                out.push(ClockViolation::NonMonotone {
                    agent: r.agent.clone(),
                    global_seq: r.global_seq,
                    previous: prev,
                    local_time: r.local_time,
                });
            }
        }
        last.insert(&r.agent, r.local_time);

        let key = || (r.agent.clone(), r.correlation.clone(), r.ptype.clone(), r.peer.clone());
        match r.kind {
            EventKind::Deliver => delivered.entry(key()).or_default().push_back(r.local_time),
            EventKind::Accept | EventKind::Reject if r.reason != Some(RejectReason::LostInLink) => {
                let matched = delivered
                    .get_mut(&key())
                    .and_then(|q| q.pop_front())
                    .is_some_and(|t| t < r.local_time);
                if !matched {
                    out.push(ClockViolation::ReceiptWithoutDelivery {
                        agent: r.agent.clone(),
                        global_seq: r.global_seq,
                        correlation: r.correlation.clone(),
                    });
                }
            }
            _ => {}
        }

        let Some(c) = &r.correlation else { continue };
        match r.kind {
            EventKind::Emit => {
                first_emit.entry((&r.agent, c)).or_insert(r.local_time);
                if c.origin != r.agent {
                    let ok = accepted.get(&(&r.agent, c)).is_some_and(|&t| t < r.local_time);
                    if !ok {
                        out.push(ClockViolation::RelayBeforeAccept {
                            agent: r.agent.clone(),
                            global_seq: r.global_seq,
                            correlation: c.clone(),
                        });
                    }
                }
            }
            EventKind::Deliver | EventKind::Accept | EventKind::Reject => {
                if r.kind == EventKind::Accept {
                    accepted.entry((&r.agent, c)).or_insert(r.local_time);
                }
                if c.origin == r.agent {
                    let t = first_receipt.entry((&r.agent, c)).or_insert(r.local_time);
                    *t = (*t).min(r.local_time);
                }
            }
            _ => {}
        }
    }

    let mut flagged = BTreeSet::new();
    for ((agent, c), receipt) in first_receipt {
        let sent_first = first_emit.get(&(agent, c)).is_some_and(|&t| t < receipt);
        if !sent_first && flagged.insert((agent, c)) {
            out.push(ClockViolation::ReceiptBeforeSend { agent: agent.clone(), correlation: c.clone() });
        }
    }
    out
}
