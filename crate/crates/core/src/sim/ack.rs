use std::fmt;

use super::SimError;
use crate::promise::{AgentId, Polarity, PromiseGraph, PromiseId, PromiseType};

/// The four promises of an acknowledged transfer of type `tau` from S to R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AckPart {
    /// `S +tau -> R`
    Offer,
    /// `R -tau -> S`
    Acceptance,
    /// `R +sigma.tau | tau -> S`: R reports what it accepted.
    ConditionalAck,
    /// `S -sigma.tau -> R`: S takes the acknowledgment in.
    AckAcceptance,
}

impl fmt::Display for AckPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AckPart::Offer => "offer",
            AckPart::Acceptance => "acceptance",
            AckPart::ConditionalAck => "conditional-ack",
            AckPart::AckAcceptance => "ack-acceptance",
        })
    }
}

/// Promise references the scheduler and assessor use to tie an emission
/// to its acknowledgment. All four events share one correlation id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionTemplate {
    pub sender: AgentId,
    pub receiver: AgentId,
    pub ptype: PromiseType,
    pub offer: PromiseId,
    pub acceptance: PromiseId,
    pub conditional_ack: PromiseId,
    pub ack_acceptance: PromiseId,
}

/// Looks up the acknowledgment pattern for a specific type.
pub fn ack_transaction_for(
    sender: &AgentId,
    receiver: &AgentId,
    ptype: &PromiseType,
    graph: &PromiseGraph,
) -> Result<TransactionTemplate, SimError> {
    let sigma = ptype.observability();
    let offer = graph.find(sender, Polarity::Offer, ptype, receiver);
    let acceptance = graph.find(receiver, Polarity::Accept, ptype, sender);
    let conditional_ack = graph
        .find(receiver, Polarity::Offer, &sigma, sender)
        .filter(|&id| graph.promise(id).conditions.contains(ptype));
    let ack_acceptance = graph.find(sender, Polarity::Accept, &sigma, receiver);

    let parts = [
        (AckPart::Offer, offer),
        (AckPart::Acceptance, acceptance),
        (AckPart::ConditionalAck, conditional_ack),
        (AckPart::AckAcceptance, ack_acceptance),
    ];
    let missing: Vec<AckPart> = parts.iter().filter(|(_, id)| id.is_none()).map(|(p, _)| *p).collect();
    if !missing.is_empty() {
        return Err(SimError::IncompletePattern(missing));
    }
    Ok(TransactionTemplate {
        sender: sender.clone(),
        receiver: receiver.clone(),
        ptype: ptype.clone(),
        offer: offer.unwrap(),
        acceptance: acceptance.unwrap(),
        conditional_ack: conditional_ack.unwrap(),
        ack_acceptance: ack_acceptance.unwrap(),
    })
}

/// Finds an acknowledgment pattern between `sender` and `receiver` over any
/// type S offers R. When none is complete the error lists what the most
/// nearly complete candidate lacks; with no offer at all, everything but
/// the offer is reported missing too.
pub fn ack_transaction(
    sender: &AgentId,
    receiver: &AgentId,
    graph: &PromiseGraph,
) -> Result<TransactionTemplate, SimError> {
    let candidates: Vec<PromiseType> = graph
        .promises_by(sender)
        .filter(|(_, p)| p.is_offer() && &p.promisee == receiver && !p.ptype().is_observability())
        .map(|(_, p)| p.ptype().clone())
        .collect();
    let mut best: Option<Vec<AckPart>> = None;
    for ptype in &candidates {
        match ack_transaction_for(sender, receiver, ptype, graph) {
            Ok(t) => return Ok(t),
            Err(SimError::IncompletePattern(m)) => {
                if best.as_ref().is_none_or(|b| m.len() < b.len()) {
                    best = Some(m);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(SimError::IncompletePattern(best.unwrap_or_else(|| {
        vec![AckPart::Offer, AckPart::Acceptance, AckPart::ConditionalAck, AckPart::AckAcceptance]
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promise::{Alphabet, Body, Promise};

    fn body(t: &str) -> Body {
        Body::new(t.parse().unwrap(), Alphabet::from_names(&["a", "b"]).unwrap())
    }

    fn full() -> PromiseGraph {
        let mut g = PromiseGraph::new(["S", "R"].map(|a| a.parse().unwrap()));
        g.add_promise(Promise::offer("S", body("tau"), "R").unwrap());
        g.add_promise(Promise::accept("R", body("tau"), "S").unwrap());
        g.add_promise(
            Promise::offer("R", body("sigma.tau"), "S").unwrap().with_conditions(["tau".parse().unwrap()]),
        );
        g.add_promise(Promise::accept("S", body("sigma.tau"), "R").unwrap());
        g
    }

    #[test]
    fn complete_pattern_yields_template() {
        let g = full();
        let t = ack_transaction(&"S".parse().unwrap(), &"R".parse().unwrap(), &g).unwrap();
        assert_eq!(t.ptype.as_str(), "tau");
        let ids = [t.offer, t.acceptance, t.conditional_ack, t.ack_acceptance];
        let distinct: std::collections::BTreeSet<_> = ids.iter().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn missing_ack_acceptance_is_named() {
        let g = full();
        let last = PromiseId(3);
        let cut = g.without(last);
        let err = ack_transaction(&"S".parse().unwrap(), &"R".parse().unwrap(), &cut).unwrap_err();
        assert_eq!(err, SimError::IncompletePattern(vec![AckPart::AckAcceptance]));
    }

    #[test]
    fn bare_offer_misses_three() {
        let mut g = PromiseGraph::new(["S", "R"].map(|a| a.parse().unwrap()));
        g.add_promise(Promise::offer("S", body("tau"), "R").unwrap());
        let err = ack_transaction(&"S".parse().unwrap(), &"R".parse().unwrap(), &g).unwrap_err();
        let SimError::IncompletePattern(missing) = err else { panic!() };
        assert_eq!(missing.len(), 3);
        assert!(!missing.contains(&AckPart::Offer));
    }

    #[test]
    fn unconditional_report_is_not_an_ack() {
        let mut g = full();
        g = g.without(PromiseId(2));
        g.add_promise(Promise::offer("R", body("sigma.tau"), "S").unwrap());
        let err = ack_transaction(&"S".parse().unwrap(), &"R".parse().unwrap(), &g).unwrap_err();
        assert_eq!(err, SimError::IncompletePattern(vec![AckPart::ConditionalAck]));
    }
}
