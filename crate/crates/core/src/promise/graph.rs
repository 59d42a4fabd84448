use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AgentId, Polarity, Promise, PromiseType, Scope, Symbol};

/// Index of a promise within its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PromiseId(pub usize);

impl fmt::Display for PromiseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Private symbol names used by a receiver for a sender's symbols of one type.
pub type Correspondence = BTreeMap<Symbol, Symbol>;

/// Agents plus the promises they have made.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PromiseGraph {
    agents: BTreeSet<AgentId>,
    promises: Vec<Promise>,
    correspondences: BTreeMap<(AgentId, AgentId, PromiseType), Correspondence>,
}

impl PromiseGraph {
    pub fn new<I: IntoIterator<Item = AgentId>>(agents: I) -> Self {
        PromiseGraph { agents: agents.into_iter().collect(), ..Default::default() }
    }

    pub fn add_agent(&mut self, agent: AgentId) -> bool {
        self.agents.insert(agent)
    }

    pub fn add_promise(&mut self, promise: Promise) -> PromiseId {
        self.promises.push(promise);
        PromiseId(self.promises.len() - 1)
    }

    /// Registers the receiver's private names for the sender's symbols of `ptype`.
    pub fn set_correspondence(
        &mut self,
        sender: AgentId,
        receiver: AgentId,
        ptype: PromiseType,
        map: Correspondence,
    ) {
        self.correspondences.insert((sender, receiver, ptype), map);
    }

    pub fn correspondences(
        &self,
    ) -> impl Iterator<Item = (&(AgentId, AgentId, PromiseType), &Correspondence)> {
        self.correspondences.iter()
    }

    /// Translates a sender symbol into the receiver's language; identity by default.
    pub fn translate(
        &self,
        sender: &AgentId,
        receiver: &AgentId,
        ptype: &PromiseType,
        symbol: &Symbol,
    ) -> Symbol {
        self.correspondences
            .get(&(sender.clone(), receiver.clone(), ptype.clone()))
            .and_then(|m| m.get(symbol))
            .cloned()
            .unwrap_or_else(|| symbol.clone())
    }

    pub fn agents(&self) -> &BTreeSet<AgentId> {
        &self.agents
    }

    pub fn contains_agent(&self, agent: &AgentId) -> bool {
        self.agents.contains(agent)
    }

    pub fn promise(&self, id: PromiseId) -> &Promise {
        &self.promises[id.0]
    }

    pub fn len(&self) -> usize {
        self.promises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.promises.is_empty()
    }

    pub fn promises(&self) -> impl Iterator<Item = (PromiseId, &Promise)> {
        self.promises.iter().enumerate().map(|(i, p)| (PromiseId(i), p))
    }

    /// Finds the promise with the given identifying key.
    pub fn find(
        &self,
        giver: &AgentId,
        polarity: Polarity,
        ptype: &PromiseType,
        promisee: &AgentId,
    ) -> Option<PromiseId> {
        self.promises()
            .find(|(_, p)| {
                &p.giver == giver
                    && p.polarity == polarity
                    && p.ptype() == ptype
                    && &p.promisee == promisee
            })
            .map(|(id, _)| id)
    }

    /// The acceptance promise `receiver --(-ptype)--> sender`, if held.
    pub fn acceptance(
        &self,
        receiver: &AgentId,
        sender: &AgentId,
        ptype: &PromiseType,
    ) -> Option<PromiseId> {
        self.find(receiver, Polarity::Accept, ptype, sender)
    }

    /// Every promise made by `agent`.
    pub fn promises_by<'a>(
        &'a self,
        agent: &'a AgentId,
    ) -> impl Iterator<Item = (PromiseId, &'a Promise)> + 'a {
        self.promises().filter(move |(_, p)| &p.giver == agent)
    }

    /// Copy of the graph with every acceptance promise of `agent` removed.
    ///
    /// Promise ids of the remaining promises are renumbered.
    pub fn without_acceptances_of(&self, agent: &AgentId) -> PromiseGraph {
        PromiseGraph {
            agents: self.agents.clone(),
            promises: self
                .promises
                .iter()
                .filter(|p| !(p.is_accept() && &p.giver == agent))
                .cloned()
                .collect(),
            correspondences: self.correspondences.clone(),
        }
    }

    /// Copy of the graph without the given promise.
    pub fn without(&self, id: PromiseId) -> PromiseGraph {
        let mut g = self.clone();
        g.promises.remove(id.0);
        g
    }
}

/// One broken graph law.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// The agent executing the promised behaviour is not the giver.
    ForeignBehavior { promise: PromiseId, giver: AgentId, executor: AgentId },
    /// Same (giver, promisee, polarity, type) promised twice.
    DuplicatePromise { first: PromiseId, duplicate: PromiseId },
    SelfPromise { promise: PromiseId, agent: AgentId },
    /// No other agent offers the condition type to the giver.
    UnsatisfiableCondition { promise: PromiseId, condition: PromiseType },
    UnknownScopeAgent { promise: PromiseId, agent: AgentId },
    UnknownAgent { promise: PromiseId, agent: AgentId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ForeignBehavior { promise, giver, executor } => write!(
                f,
                "promise {promise} is given by {giver} but its behaviour is executed by {executor}"
            ),
            Violation::DuplicatePromise { first, duplicate } => {
                write!(f, "promise {duplicate} duplicates promise {first}")
            }
            Violation::SelfPromise { promise, agent } => {
                write!(f, "promise {promise} is a self-loop on {agent}")
            }
            Violation::UnsatisfiableCondition { promise, condition } => write!(
                f,
                "promise {promise} is conditioned on {condition}, which no agent offers to its giver"
            ),
            Violation::UnknownScopeAgent { promise, agent } => {
                write!(f, "scope of promise {promise} names unknown agent {agent}")
            }
            Violation::UnknownAgent { promise, agent } => {
                write!(f, "promise {promise} references unknown agent {agent}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the graph laws. Problems are report entries, never failures.
pub fn validate_graph(graph: &PromiseGraph) -> ValidationReport {
    validate_with_behaviors(graph, std::iter::empty())
}

/// Like [`validate_graph`], additionally checking that each behaviour
/// assignment `(executor, promise)` is executed by the promise's own giver.
pub fn validate_with_behaviors<'a, I>(graph: &PromiseGraph, behaviors: I) -> ValidationReport
where
    I: IntoIterator<Item = (&'a AgentId, PromiseId)>,
{
    let mut violations = Vec::new();
    let mut seen: BTreeMap<(&AgentId, &AgentId, Polarity, &PromiseType), PromiseId> =
        BTreeMap::new();

    for (id, p) in graph.promises() {
        for agent in [&p.giver, &p.promisee] {
            if !graph.contains_agent(agent) {
                violations.push(Violation::UnknownAgent { promise: id, agent: agent.clone() });
            }
        }
        if p.giver == p.promisee {
            violations.push(Violation::SelfPromise { promise: id, agent: p.giver.clone() });
        }
        match seen.entry((&p.giver, &p.promisee, p.polarity, p.ptype())) {
            std::collections::btree_map::Entry::Occupied(first) => {
                violations.push(Violation::DuplicatePromise { first: *first.get(), duplicate: id })
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(id);
            }
        }
        for cond in &p.conditions {
            let offered = graph.promises().any(|(_, q)| {
                q.is_offer() && q.promisee == p.giver && q.giver != p.giver && q.ptype() == cond
            });
            if !offered {
                violations
                    .push(Violation::UnsatisfiableCondition { promise: id, condition: cond.clone() });
            }
        }
        if let Scope::Agents(agents) = &p.scope {
            for a in agents {
                if !graph.contains_agent(a) {
                    violations.push(Violation::UnknownScopeAgent { promise: id, agent: a.clone() });
                }
            }
        }
    }

    for (executor, id) in behaviors {
        let p = graph.promise(id);
        if &p.giver != executor {
            violations.push(Violation::ForeignBehavior {
                promise: id,
                giver: p.giver.clone(),
                executor: executor.clone(),
            });
        }
    }

    ValidationReport { violations }
}

/// Graph dump: one tab-separated record per promise with fields
/// `giver polarity tau alphabet promisee conditions scope`; `-` marks empty.
pub fn render_dump(graph: &PromiseGraph) -> String {
    let mut out = String::from("giver\tpolarity\ttau\talphabet\tpromisee\tconditions\tscope\n");
    for (_, p) in graph.promises() {
        let conditions = if p.conditions.is_empty() {
            "-".to_string()
        } else {
            p.conditions.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(",")
        };
        let scope = match &p.scope {
            Scope::None => "-".to_string(),
            Scope::All => "*".to_string(),
            Scope::Agents(a) => {
                format!("{{{}}}", a.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(","))
            }
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            p.giver,
            p.polarity.sign(),
            p.ptype(),
            p.body.alphabet(),
            p.promisee,
            conditions,
            scope
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promise::{Alphabet, Body};

    fn body(t: &str, syms: &[&str]) -> Body {
        Body::new(t.parse().unwrap(), Alphabet::from_names(syms).unwrap())
    }

    fn agents(names: &[&str]) -> PromiseGraph {
        PromiseGraph::new(names.iter().map(|n| n.parse().unwrap()))
    }

    #[test]
    fn unilateral_offer_is_valid() {
        let mut g = agents(&["S", "R"]);
        g.add_promise(Promise::offer("S", body("b", &["x"]), "R").unwrap());
        assert!(validate_graph(&g).is_valid());
    }

    #[test]
    fn behaviour_executed_by_other_agent_is_a_violation() {
        let mut g = agents(&["S", "I", "R"]);
        let id = g.add_promise(Promise::offer("S", body("b", &["x"]), "R").unwrap());
        let executor: AgentId = "I".parse().unwrap();
        let report = validate_with_behaviors(&g, [(&executor, id)]);
        assert_eq!(
            report.violations,
            vec![Violation::ForeignBehavior {
                promise: id,
                giver: "S".parse().unwrap(),
                executor
            }]
        );
    }

    #[test]
    fn condition_never_offered_is_a_violation() {
        let mut g = agents(&["S", "I", "R"]);
        let id = g.add_promise(
            Promise::offer("I", body("b_I", &["x"]), "R").unwrap().with_conditions(["b_S".parse().unwrap()]),
        );
        let report = validate_graph(&g);
        assert_eq!(
            report.violations,
            vec![Violation::UnsatisfiableCondition { promise: id, condition: "b_S".parse().unwrap() }]
        );
        // Offering b_S to a different agent does not help.
        g.add_promise(Promise::offer("S", body("b_S", &["x"]), "R").unwrap());
        assert!(!validate_graph(&g).is_valid());
        g.add_promise(Promise::offer("S", body("b_S", &["x"]), "I").unwrap());
        assert!(validate_graph(&g).is_valid());
    }

    #[test]
    fn duplicates_self_loops_and_unknown_agents() {
        let mut g = agents(&["S", "R"]);
        let first = g.add_promise(Promise::offer("S", body("b", &["x"]), "R").unwrap());
        let dup = g.add_promise(Promise::offer("S", body("b", &["y"]), "R").unwrap());
        let mut looped = Promise::offer("S", body("c", &["x"]), "R").unwrap();
        looped.promisee = "S".parse().unwrap();
        let self_id = g.add_promise(looped);
        let scoped = g.add_promise(
            Promise::offer("R", body("d", &["x"]), "S")
                .unwrap()
                .with_scope(Scope::agents(["Q".parse().unwrap()])),
        );
        let stray = g.add_promise(Promise::offer("R", body("e", &["x"]), "Z").unwrap());
        let v = validate_graph(&g).violations;
        assert!(v.contains(&Violation::DuplicatePromise { first, duplicate: dup }));
        assert!(v.contains(&Violation::SelfPromise { promise: self_id, agent: "S".parse().unwrap() }));
        assert!(v.contains(&Violation::UnknownScopeAgent { promise: scoped, agent: "Q".parse().unwrap() }));
        assert!(v.contains(&Violation::UnknownAgent { promise: stray, agent: "Z".parse().unwrap() }));
    }

    #[test]
    fn dump_has_one_record_per_promise() {
        let mut g = agents(&["S", "R", "T"]);
        g.add_promise(
            Promise::offer("S", body("tau", &["R", "G", "B"]), "R")
                .unwrap()
                .with_scope(Scope::agents(["T".parse().unwrap()])),
        );
        g.add_promise(Promise::accept("R", body("tau", &["G"]), "S").unwrap());
        let dump = render_dump(&g);
        let lines: Vec<_> = dump.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "S\t+\ttau\t{B,G,R}\tR\t-\t{T}");
        assert_eq!(lines[2], "R\t-\ttau\t{G}\tS\t-\t-");
    }

    #[test]
    fn translation_defaults_to_identity() {
        let mut g = agents(&["S", "R"]);
        let (s, r): (AgentId, AgentId) = ("S".parse().unwrap(), "R".parse().unwrap());
        let tau: PromiseType = "tau".parse().unwrap();
        let g_sym: Symbol = "G".parse().unwrap();
        assert_eq!(g.translate(&s, &r, &tau, &g_sym), g_sym);
        let vert: Symbol = "vert".parse().unwrap();
        g.set_correspondence(s.clone(), r.clone(), tau.clone(), [(g_sym.clone(), vert.clone())].into());
        assert_eq!(g.translate(&s, &r, &tau, &g_sym), vert);
    }
}
