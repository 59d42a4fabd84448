//! Declarative scenarios: file format, validation, analysis and reports.

mod analysis;
mod corpus;
mod format;
mod report;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use analysis::{analyze, AnalysisRequest, CompareOp, ExpectValue, Expectation, PromiseKey};
pub use corpus::{corpus, corpus_names, load_corpus, CORPUS_ENV};
pub use format::{parse_scenario, render};
pub use report::{Report, Value, Verdict};

use crate::assessment::ObserverConfig;
use crate::promise::{validate_with_behaviors, AgentId, Polarity, PromiseGraph, PromiseId, Violation};
use crate::sim::{BehaviorPolicy, ConditionWindow, LinkTable, PolicyKind};

/// An observer declared in a scenario, under a name analyses refer to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedObserver {
    pub name: String,
    pub config: ObserverConfig,
}

/// Everything needed to run and analyse one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Default seed; command-line overrides win.
    pub seed: u64,
    pub ticks: u64,
    pub window: ConditionWindow,
    /// Independence tolerance in bits.
    pub tolerance: f64,
    pub graph: PromiseGraph,
    pub policies: Vec<BehaviorPolicy>,
    pub links: LinkTable,
    pub observers: Vec<NamedObserver>,
    pub analysis: Vec<AnalysisRequest>,
    pub expectations: Vec<Expectation>,
}

/// What a validation problem is attached to, so the parser can point at a line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subject {
    Scenario,
    Promise(PromiseId),
    Policy(usize),
    Link(Option<(AgentId, AgentId)>),
    Observer(usize),
    Analysis(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// A parse or validation problem, with the offending line when known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub kind: DiagnosticKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    Parse,
    Validation,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Parse => "parse error",
            DiagnosticKind::Validation => "validation error",
        };
        match self.line {
            Some(l) => write!(f, "line {l}: {kind}: {}", self.message),
            None => write!(f, "{kind}: {}", self.message),
        }
    }
}

impl Scenario {
    /// Content hash of the canonical rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(render(self).as_bytes()))
    }

    /// Checks every cross-reference and law. An empty list means the
    /// scenario may be run.
    pub fn validate(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut push = |subject: Subject, message: String| out.push(Issue { subject, message });
        let g = &self.graph;

        if self.ticks == 0 {
            push(Subject::Scenario, "ticks must be at least 1".into());
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            push(Subject::Scenario, format!("tolerance {} must be a non-negative number", self.tolerance));
        }
        if self.window == ConditionWindow::Events(0) {
            push(Subject::Scenario, "condition window must be at least one event".into());
        }

        let mut behaviors = Vec::new();
        let mut seen_offers = BTreeSet::new();
        for (i, pol) in self.policies.iter().enumerate() {
            let k = &pol.offer;
            let Some(id) = g.find(&k.giver, Polarity::Offer, &k.ptype, &k.promisee) else {
                push(Subject::Policy(i), format!("policy refers to missing offer {} +{} -> {}", k.giver, k.ptype, k.promisee));
                continue;
            };
            if !seen_offers.insert(id) {
                push(Subject::Policy(i), format!("second policy for offer {} +{} -> {}", k.giver, k.ptype, k.promisee));
            }
            behaviors.push((&pol.executor, id));
            let p = g.promise(id);
            let alphabet = p.body.alphabet();
            match &pol.kind {
                PolicyKind::Periodic { distribution, period, .. } => {
                    if p.is_conditional() {
                        push(Subject::Policy(i), "conditional offers relay or draw; they cannot be periodic".into());
                    } else if p.ptype().is_observability() {
                        push(Subject::Policy(i), "observability offers report interior changes and take no policy".into());
                    }
                    if *period == 0 {
                        push(Subject::Policy(i), "period must be at least 1 tick".into());
                    }
                    if let Err(e) = distribution.resolve(alphabet) {
                        push(Subject::Policy(i), e);
                    }
                }
                PolicyKind::Relay { mix } => {
                    if !p.is_conditional() {
                        push(Subject::Policy(i), "relay needs a conditional offer".into());
                    }
                    if mix.is_empty() {
                        // Bare `relay` forwards the first condition.
                    } else if let Err(e) = crate::sim::check_weights(mix.iter().map(|(t, w)| (t.as_str(), *w))) {
                        push(Subject::Policy(i), e);
                    }
                    for (t, _) in mix {
                        if !p.conditions.contains(t) {
                            push(Subject::Policy(i), format!("relay source {t} is not a condition of the offer"));
                        }
                    }
                }
                PolicyKind::Draw { distribution } => {
                    if !p.is_conditional() {
                        push(Subject::Policy(i), "draw needs a conditional offer".into());
                    }
                    if let Err(e) = distribution.resolve(alphabet) {
                        push(Subject::Policy(i), e);
                    }
                }
            }
        }

        for v in validate_with_behaviors(g, behaviors).violations {
            let subject = match &v {
                Violation::ForeignBehavior { promise, .. } => self
                    .policies
                    .iter()
                    .position(|pol| {
                        g.find(&pol.offer.giver, Polarity::Offer, &pol.offer.ptype, &pol.offer.promisee)
                            == Some(*promise)
                    })
                    .map_or(Subject::Promise(*promise), Subject::Policy),
                Violation::DuplicatePromise { duplicate, .. } => Subject::Promise(*duplicate),
                Violation::SelfPromise { promise, .. }
                | Violation::UnsatisfiableCondition { promise, .. }
                | Violation::UnknownScopeAgent { promise, .. }
                | Violation::UnknownAgent { promise, .. } => Subject::Promise(*promise),
            };
            push(subject, v.to_string());
        }

        if let Err(e) = self.links.default.validate() {
            push(Subject::Link(None), e);
        }
        for ((from, to), model) in &self.links.links {
            let subject = Subject::Link(Some((from.clone(), to.clone())));
            for a in [from, to] {
                if !g.contains_agent(a) {
                    push(subject.clone(), format!("link refers to unknown agent {a}"));
                }
            }
            if from == to {
                push(subject.clone(), "a link needs two distinct agents".into());
            }
            if let Err(e) = model.validate() {
                push(subject, e);
            }
        }

        let mut names = BTreeSet::new();
        for (i, o) in self.observers.iter().enumerate() {
            if !names.insert(&o.name) {
                push(Subject::Observer(i), format!("observer name {} used twice", o.name));
            }
            let c = &o.config;
            for a in [&c.observer, &c.targets.0.agent, &c.targets.1.agent] {
                if !g.contains_agent(a) {
                    push(Subject::Observer(i), format!("observer {} refers to unknown agent {a}", o.name));
                }
            }
            if c.sampling_period == 0 {
                push(Subject::Observer(i), "sampling period must be at least 1 tick".into());
            }
        }

        for (i, a) in self.analysis.iter().enumerate() {
            for message in a.check(self) {
                push(Subject::Analysis(i), message);
            }
        }
        out
    }

    pub fn observer(&self, name: &str) -> Option<&NamedObserver> {
        self.observers.iter().find(|o| o.name == name)
    }
}
