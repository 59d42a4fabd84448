use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::promise::{AgentId, Alphabet, PromiseType, Symbol};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Identifies an offer by its giver, type and promisee.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OfferKey {
    pub giver: AgentId,
    pub ptype: PromiseType,
    pub promisee: AgentId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    /// Uniform over the offered alphabet.
    Uniform,
    Weights(Vec<(Symbol, f64)>),
}

impl Distribution {
    /// Resolves to explicit weights over `alphabet`, checking the weight laws.
    pub fn resolve(&self, alphabet: &Alphabet) -> Result<Vec<(Symbol, f64)>, String> {
        match self {
            Distribution::Uniform => {
                let w = 1.0 / alphabet.len() as f64;
                Ok(alphabet.iter().map(|s| (s.clone(), w)).collect())
            }
            Distribution::Weights(ws) => {
                check_weights(ws.iter().map(|(s, w)| (s.as_str(), *w)))?;
                for (s, _) in ws {
                    if !alphabet.contains(s) {
                        return Err(format!("symbol {s} is outside the offered alphabet {alphabet}"));
                    }
                }
                Ok(ws.clone())
            }
        }
    }
}

pub(crate) fn check_weights<'a>(ws: impl Iterator<Item = (&'a str, f64)>) -> Result<(), String> {
    let mut sum = 0.0;
    let mut any = false;
    for (name, w) in ws {
        if !w.is_finite() || w < 0.0 {
            return Err(format!("weight of {name} must be a non-negative number"));
        }
        sum += w;
        any = true;
    }
    if !any {
        return Err("no weights given".into());
    }
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(format!("weights sum to {sum}, not 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Unconditional offer: draw a symbol every `period` ticks starting at `offset`.
    Periodic { distribution: Distribution, period: u64, offset: u64 },
    /// Conditional offer: re-emit the symbol accepted for one of the
    /// conditions, chosen by weight. An empty mix relays the first condition.
    Relay { mix: Vec<(PromiseType, f64)> },
    /// Conditional offer: emit a fresh draw once the conditions hold.
    Draw { distribution: Distribution },
}

/// Generative behaviour behind an offer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorPolicy {
    /// Agent whose behaviour this is; must be the offer's giver.
    pub executor: AgentId,
    pub offer: OfferKey,
    pub kind: PolicyKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Delay {
    Fixed(u64),
    /// Uniform on `min..=max`.
    Uniform { min: u64, max: u64 },
}

/// Symbol substitution on the wire: each row maps a sent symbol to
/// probabilities of received symbols. Symbols without a row pass unchanged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Substitution {
    pub rows: BTreeMap<Symbol, Vec<(Symbol, f64)>>,
}

impl Substitution {
    /// Binary symmetric substitution over two symbols.
    pub fn symmetric(a: Symbol, b: Symbol, flip: f64) -> Self {
        let mut rows = BTreeMap::new();
        rows.insert(a.clone(), vec![(a.clone(), 1.0 - flip), (b.clone(), flip)]);
        rows.insert(b.clone(), vec![(a, flip), (b, 1.0 - flip)]);
        Substitution { rows }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (from, row) in &self.rows {
            check_weights(row.iter().map(|(s, w)| (s.as_str(), *w)))
                .map_err(|e| format!("substitution row {from}: {e}"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub delay: Delay,
    pub loss: f64,
    pub corruption: Option<Substitution>,
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel { delay: Delay::Fixed(1), loss: 0.0, corruption: None }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), String> {
        match self.delay {
            Delay::Fixed(0) => return Err("link delay must be at least 1 tick".into()),
            Delay::Uniform { min, max } if min == 0 || min > max => {
                return Err("delay range must satisfy 1 <= min <= max".into())
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.loss) {
            return Err(format!("loss probability {} outside [0, 1]", self.loss));
        }
        if let Some(c) = &self.corruption {
            c.validate()?;
        }
        Ok(())
    }
}

/// Link models per directed agent pair, with a default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkTable {
    pub default: LinkModel,
    pub links: BTreeMap<(AgentId, AgentId), LinkModel>,
}

impl LinkTable {
    pub fn get(&self, from: &AgentId, to: &AgentId) -> &LinkModel {
        self.links.get(&(from.clone(), to.clone())).unwrap_or(&self.default)
    }
}

/// How long a satisfied condition stays usable by a conditional offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ConditionWindow {
    /// Consumed by the next relay emission.
    #[default]
    OneShot,
    /// Valid for this many of the agent's local events, not consumed.
    Events(u64),
}
