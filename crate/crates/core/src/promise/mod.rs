//! The static algebra of promises.
//!
//! A promise is made by a giver about its own behaviour, toward a promisee,
//! with a polarity: `+` offers a body, `-` accepts one. Influence flows only
//! where an offer meets a matching acceptance, and only through the symbols
//! both sides admit.

mod analysis;
mod graph;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use analysis::{
    causal_closure, channel_overlap, detect_chains, find_bindings, resolve_scope, Binding, Chain,
    EnvironmentInput,
};
pub use graph::{
    render_dump, validate_graph, validate_with_behaviors, PromiseGraph, PromiseId,
    ValidationReport, Violation,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromiseError {
    #[error("invalid {kind} name {name:?}")]
    InvalidName { kind: &'static str, name: String },
    #[error("alphabet must not be empty")]
    EmptyAlphabet,
    #[error("duplicate symbol {0} in alphabet")]
    DuplicateSymbol(Symbol),
    #[error("self-promise by {0} cannot be a graph edge")]
    SelfPromise(AgentId),
}

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident, $kind:literal, $valid:expr) => {
        $(#[$meta])*
        #[derive(Clone, Eq, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(Arc<str>);

        // Names are shared, so most comparisons are between clones of one
        // allocation and never need to look at the bytes.
        impl PartialEq for $name {
            fn eq(&self, other: &Self) -> bool {
                Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
            }
        }

        impl std::hash::Hash for $name {
            fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
                self.0.hash(state)
            }
        }

        impl Ord for $name {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                if Arc::ptr_eq(&self.0, &other.0) {
                    std::cmp::Ordering::Equal
                } else {
                    self.0.cmp(&other.0)
                }
            }
        }

        impl PartialOrd for $name {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        impl $name {
            pub fn new(name: &str) -> Result<Self, PromiseError> {
                let valid: fn(&str) -> bool = $valid;
                if name.is_empty() || !valid(name) {
                    return Err(PromiseError::InvalidName { kind: $kind, name: name.to_string() });
                }
                Ok(Self(Arc::from(name)))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), &self.0)
            }
        }

        impl FromStr for $name {
            type Err = PromiseError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl TryFrom<String> for $name {
            type Error = PromiseError;
            fn try_from(s: String) -> Result<Self, Self::Error> {
                Self::new(&s)
            }
        }

        impl From<$name> for String {
            fn from(v: $name) -> String {
                v.0.to_string()
            }
        }
    };
}

fn ident_chars(s: &str) -> bool {
    s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

name_type!(
    /// Identifier of an autonomous agent.
    AgentId,
    "agent",
    ident_chars
);

name_type!(
    /// Opaque symbol of a promise language.
    Symbol,
    "symbol",
    ident_chars
);

name_type!(
    /// Type label of a promise body. Bodies are comparable only within one type.
    PromiseType,
    "promise type",
    |s| {
        !s.starts_with('.')
            && !s.ends_with('.')
            && !s.contains("..")
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
    }
);

/// Prefix of the type that exposes an agent's interior state for another type.
pub const OBSERVABILITY_PREFIX: &str = "sigma.";

impl PromiseType {
    /// The observability type `sigma.<tau>` that reports interior values of `self`.
    pub fn observability(&self) -> PromiseType {
        PromiseType(Arc::from(format!("{OBSERVABILITY_PREFIX}{}", self.0)))
    }

    /// If this is an observability type, the type whose interior it reports.
    pub fn observed(&self) -> Option<PromiseType> {
        self.0
            .strip_prefix(OBSERVABILITY_PREFIX)
            .map(|inner| PromiseType(Arc::from(inner)))
    }

    pub fn is_observability(&self) -> bool {
        self.0.starts_with(OBSERVABILITY_PREFIX)
    }
}

/// Finite set of symbols in canonical (sorted) order.
///
/// Alphabets built from user input are non-empty; an intersection may be
/// empty, which is how an unusable binding is represented.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Alphabet(BTreeSet<Symbol>);

impl Alphabet {
    pub fn new<I>(symbols: I) -> Result<Self, PromiseError>
    where
        I: IntoIterator<Item = Symbol>,
    {
        let mut set = BTreeSet::new();
        for s in symbols {
            if !set.insert(s.clone()) {
                return Err(PromiseError::DuplicateSymbol(s));
            }
        }
        if set.is_empty() {
            return Err(PromiseError::EmptyAlphabet);
        }
        Ok(Alphabet(set))
    }

    /// Parses a list of symbol names, e.g. `["R", "G", "B"]`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, PromiseError> {
        let symbols = names
            .iter()
            .map(|n| Symbol::new(n.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(symbols)
    }

    pub fn empty() -> Self {
        Alphabet(BTreeSet::new())
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.0.contains(s)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Symbol> {
        self.0.iter()
    }

    pub fn intersection(&self, other: &Alphabet) -> Alphabet {
        Alphabet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn union(&self, other: &Alphabet) -> Alphabet {
        Alphabet(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &Alphabet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub(crate) fn insert(&mut self, s: Symbol) {
        self.0.insert(s);
    }

    pub fn as_set(&self) -> &BTreeSet<Symbol> {
        &self.0
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<Symbol> for Alphabet {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Alphabet(iter.into_iter().collect())
    }
}

/// Promise body: a type label and the alphabet the giver constrains itself to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Body {
    ptype: PromiseType,
    alphabet: Alphabet,
}

impl Body {
    pub fn new(ptype: PromiseType, alphabet: Alphabet) -> Self {
        Body { ptype, alphabet }
    }

    pub fn ptype(&self) -> &PromiseType {
        &self.ptype
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.ptype, self.alphabet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    /// `+`: the giver offers its body.
    Offer,
    /// `-`: the giver accepts the body from the promisee.
    Accept,
}

impl Polarity {
    pub fn sign(self) -> char {
        match self {
            Polarity::Offer => '+',
            Polarity::Accept => '-',
        }
    }

    pub fn complement(self) -> Polarity {
        match self {
            Polarity::Offer => Polarity::Accept,
            Polarity::Accept => Polarity::Offer,
        }
    }
}

/// Scope: agents granted standing to assess a promise besides its promisee.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Scope {
    #[default]
    None,
    Agents(BTreeSet<AgentId>),
    All,
}

impl Scope {
    pub fn agents<I: IntoIterator<Item = AgentId>>(agents: I) -> Scope {
        let set: BTreeSet<_> = agents.into_iter().collect();
        if set.is_empty() {
            Scope::None
        } else {
            Scope::Agents(set)
        }
    }
}

/// A promise `giver --(polarity body | conditions)--> promisee`.
///
/// Conditions are conjunctive: the promise is active only once the giver has
/// accepted a body of every listed type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Promise {
    pub giver: AgentId,
    pub promisee: AgentId,
    pub polarity: Polarity,
    pub body: Body,
    pub conditions: Vec<PromiseType>,
    pub scope: Scope,
}

impl Promise {
    pub fn new(
        giver: AgentId,
        polarity: Polarity,
        body: Body,
        promisee: AgentId,
    ) -> Result<Self, PromiseError> {
        if giver == promisee {
            return Err(PromiseError::SelfPromise(giver));
        }
        Ok(Promise { giver, promisee, polarity, body, conditions: Vec::new(), scope: Scope::None })
    }

    pub fn offer(giver: &str, body: Body, promisee: &str) -> Result<Self, PromiseError> {
        Self::new(AgentId::new(giver)?, Polarity::Offer, body, AgentId::new(promisee)?)
    }

    pub fn accept(giver: &str, body: Body, promisee: &str) -> Result<Self, PromiseError> {
        Self::new(AgentId::new(giver)?, Polarity::Accept, body, AgentId::new(promisee)?)
    }

    pub fn with_conditions<I: IntoIterator<Item = PromiseType>>(mut self, conditions: I) -> Self {
        self.conditions = conditions.into_iter().collect();
        self
    }

    pub fn with_scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }

    pub fn ptype(&self) -> &PromiseType {
        self.body.ptype()
    }

    pub fn is_conditional(&self) -> bool {
        !self.conditions.is_empty()
    }

    pub fn is_offer(&self) -> bool {
        self.polarity == Polarity::Offer
    }

    pub fn is_accept(&self) -> bool {
        self.polarity == Polarity::Accept
    }
}

impl fmt::Display for Promise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}{} -> {}", self.giver, self.polarity.sign(), self.body, self.promisee)?;
        if !self.conditions.is_empty() {
            f.write_str(" | ")?;
            for (i, c) in self.conditions.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
        }
        match &self.scope {
            Scope::None => Ok(()),
            Scope::All => f.write_str(" scope:*"),
            Scope::Agents(agents) => {
                f.write_str(" scope:{")?;
                for (i, a) in agents.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_reject_empty_and_punctuation() {
        assert!(AgentId::new("").is_err());
        assert!(AgentId::new("S R").is_err());
        assert!(Symbol::new("G").is_ok());
        assert!(PromiseType::new("sigma.tau").is_ok());
        assert!(PromiseType::new(".tau").is_err());
        assert!(PromiseType::new("a..b").is_err());
    }

    #[test]
    fn alphabet_is_sorted_and_rejects_duplicates() {
        let a = Alphabet::from_names(&["R", "G", "B"]).unwrap();
        let order: Vec<_> = a.iter().map(|s| s.as_str().to_string()).collect();
        assert_eq!(order, ["B", "G", "R"]);
        assert!(matches!(Alphabet::from_names(&["G", "G"]), Err(PromiseError::DuplicateSymbol(_))));
        assert_eq!(Alphabet::from_names::<&str>(&[]), Err(PromiseError::EmptyAlphabet));
    }

    #[test]
    fn observability_type_round_trips() {
        let tau = PromiseType::new("tau").unwrap();
        let sigma = tau.observability();
        assert_eq!(sigma.as_str(), "sigma.tau");
        assert!(sigma.is_observability());
        assert_eq!(sigma.observed(), Some(tau.clone()));
        assert_eq!(tau.observed(), None);
    }

    #[test]
    fn self_promise_is_rejected() {
        let body = Body::new("t".parse().unwrap(), Alphabet::from_names(&["x"]).unwrap());
        assert!(matches!(Promise::offer("S", body, "S"), Err(PromiseError::SelfPromise(_))));
    }

    #[test]
    fn display_uses_arrow_notation() {
        let body = Body::new("tau".parse().unwrap(), Alphabet::from_names(&["R", "G"]).unwrap());
        let p = Promise::offer("I", body, "R")
            .unwrap()
            .with_conditions(["b_S".parse().unwrap(), "b_E".parse().unwrap()])
            .with_scope(Scope::agents(["T".parse().unwrap()]));
        assert_eq!(p.to_string(), "I +tau{G,R} -> R | b_S, b_E scope:{T}");
    }
}
