use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::dist::{JointDist, TrustFlag};
use super::{declared_alphabet, AssessError};
use crate::promise::{channel_overlap, AgentId, Alphabet, Polarity, PromiseGraph, PromiseType, Symbol};
use crate::sim::{ack_transaction_for, Correlation, EventKind, EventLog, SimError};

/// One interior an observer reads: an agent's current symbol of a type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Target {
    pub agent: AgentId,
    pub ptype: PromiseType,
}

impl Target {
    pub fn new(agent: AgentId, ptype: PromiseType) -> Self {
        Target { agent, ptype }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.agent, self.ptype)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pairing {
    /// Pair the two readings that carry the same transaction id.
    ByAcknowledgment,
    /// Pair whatever the observer currently believes at each sampling tick.
    BySnapshot,
}

impl Pairing {
    pub fn as_str(self) -> &'static str {
        match self {
            Pairing::ByAcknowledgment => "BY-ACKNOWLEDGMENT",
            Pairing::BySnapshot => "BY-SNAPSHOT",
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an observer turns a log into a joint distribution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObserverConfig {
    pub observer: AgentId,
    /// Row and column interiors.
    pub targets: (Target, Target),
    /// In scheduler ticks; at least 1.
    pub sampling_period: u64,
    pub pairing: Pairing,
}

/// Which of a target's own events count as a reading when the observer is
/// the target itself. Other targets are only ever read through reports.
#[derive(Clone, Copy, PartialEq, Eq)]
enum SelfRead {
    Interior,
    Emits,
    Accepts,
}

struct Reading<'a> {
    tick: u64,
    symbol: &'a Symbol,
    correlation: Option<&'a Correlation>,
}

fn readings<'a>(log: &'a EventLog, observer: &'a AgentId, target: &Target, mode: SelfRead) -> Vec<Reading<'a>> {
    let own = observer == &target.agent;
    let sigma = target.ptype.observability();
    log.of_agent(observer)
        .filter(|r| {
            if own {
                r.ptype == target.ptype
                    && match mode {
                        SelfRead::Interior => matches!(r.kind, EventKind::Emit | EventKind::Accept),
                        SelfRead::Emits => r.kind == EventKind::Emit,
                        SelfRead::Accepts => r.kind == EventKind::Accept,
                    }
            } else {
                r.kind == EventKind::Accept && r.ptype == sigma && r.peer.as_ref() == Some(&target.agent)
            }
        })
        .filter_map(|r| {
            r.symbol.as_ref().map(|symbol| Reading { tick: r.tick, symbol, correlation: r.correlation.as_ref() })
        })
        .collect()
}

/// Checks that the observer is promised, and accepts, a report of every
/// target interior it does not hold itself.
fn observability_gate(config: &ObserverConfig, graph: &PromiseGraph) -> Result<(), AssessError> {
    let a = &config.observer;
    for t in [&config.targets.0, &config.targets.1] {
        if &t.agent == a {
            continue;
        }
        let sigma = t.ptype.observability();
        let offer = graph
            .find(&t.agent, Polarity::Offer, &sigma, a)
            .ok_or_else(|| AssessError::MissingObservability(format!("{} +{sigma} -> {a}", t.agent)))?;
        let accept = graph
            .find(a, Polarity::Accept, &sigma, &t.agent)
            .ok_or_else(|| AssessError::MissingObservability(format!("{a} -{sigma} -> {}", t.agent)))?;
        let offered: Alphabet = graph
            .promise(offer)
            .body
            .alphabet()
            .iter()
            .map(|s| graph.translate(&t.agent, a, &sigma, s))
            .collect();
        if channel_overlap(&offered, graph.promise(accept).body.alphabet()).is_empty() {
            return Err(AssessError::MissingObservability(format!(
                "{a} -{sigma} -> {} (no overlap with what is offered)",
                t.agent
            )));
        }
    }
    if config.pairing == Pairing::ByAcknowledgment {
        let (own, other) = if config.targets.0.agent == *a {
            (&config.targets.0, &config.targets.1)
        } else if config.targets.1.agent == *a {
            (&config.targets.1, &config.targets.0)
        } else {
            return Ok(());
        };
        if own.agent != other.agent {
            match ack_transaction_for(a, &other.agent, &own.ptype, graph) {
                Ok(_) => {}
                Err(SimError::IncompletePattern(missing)) => {
                    let names: Vec<String> = missing.iter().map(ToString::to_string).collect();
                    return Err(AssessError::MissingObservability(format!(
                        "acknowledgment {a} -> {}: {}",
                        other.agent,
                        names.join(", ")
                    )));
                }
                Err(e) => return Err(AssessError::MissingObservability(e.to_string())),
            }
        }
    }
    Ok(())
}

/// The observer's joint distribution of its two targets.
///
/// Fails with `MissingObservability` when the promises that would carry a
/// target's interior to the observer are absent: without them there is no
/// joint to speak of. Snapshot joints from an undersampling observer carry
/// [`TrustFlag::UndersampledObserver`].
pub fn joint_distribution(
    log: &EventLog,
    config: &ObserverConfig,
    graph: &PromiseGraph,
) -> Result<JointDist, AssessError> {
    observability_gate(config, graph)?;
    let (t0, t1) = (&config.targets.0, &config.targets.1);
    let mut joint = JointDist::new(
        config.observer.clone(),
        t0.to_string(),
        t1.to_string(),
        declared_alphabet(graph, &t0.agent, &t0.ptype),
        declared_alphabet(graph, &t1.agent, &t1.ptype),
    );
    let rows = readings(log, &config.observer, t0, SelfRead::Interior);
    let cols = readings(log, &config.observer, t1, SelfRead::Interior);

    match config.pairing {
        Pairing::ByAcknowledgment => {
            let mut by_corr: HashMap<&Correlation, &Symbol> = HashMap::new();
            for r in &cols {
                if let Some(c) = r.correlation {
                    by_corr.entry(c).or_insert(r.symbol);
                }
            }
            let mut done = std::collections::HashSet::new();
            for r in &rows {
                let Some(c) = r.correlation else { continue };
                if !done.insert(c) {
                    continue;
                }
                if let Some(col) = by_corr.get(c) {
                    joint.add(r.symbol, col);
                }
            }
        }
        Pairing::BySnapshot => {
            let period = config.sampling_period.max(1);
            let (mut i, mut j) = (0, 0);
            let (mut row, mut col) = (None, None);
            let mut t = 0;
            while t < log.ticks {
                while i < rows.len() && rows[i].tick <= t {
                    row = Some(rows[i].symbol);
                    i += 1;
                }
                while j < cols.len() && cols[j].tick <= t {
                    col = Some(cols[j].symbol);
                    j += 1;
                }
                if let (Some(r), Some(c)) = (row, col) {
                    joint.add(r, c);
                }
                t += period;
            }
            if nyquist_check(config, log).status == SamplingStatus::Undersampled {
                joint.trust_flags.push(TrustFlag::UndersampledObserver);
            }
        }
    }
    Ok(joint)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingStatus {
    Ok,
    Undersampled,
    /// Fewer than two interior updates: no interval to compare against.
    Indeterminate,
}

impl fmt::Display for SamplingStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingStatus::Ok => "OK",
            SamplingStatus::Undersampled => "UNDERSAMPLED",
            SamplingStatus::Indeterminate => "INDETERMINATE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub sampling_period: u64,
    /// Shortest gap, in ticks, between interior updates of either target.
    pub min_interval: Option<u64>,
    pub status: SamplingStatus,
}

/// Compares the sampling period against half the fastest interior change.
pub fn nyquist_check(config: &ObserverConfig, log: &EventLog) -> SamplingReport {
    let mut min_interval: Option<u64> = None;
    for t in [&config.targets.0, &config.targets.1] {
        let mut last: Option<u64> = None;
        for r in log.of_agent(&t.agent) {
            if r.ptype != t.ptype || !matches!(r.kind, EventKind::Emit | EventKind::Accept) {
                continue;
            }
            if let Some(prev) = last {
                if r.tick > prev {
                    let gap = r.tick - prev;
                    min_interval = Some(min_interval.map_or(gap, |m| m.min(gap)));
                }
            }
            last = Some(r.tick);
        }
    }
    let status = match min_interval {
        None => SamplingStatus::Indeterminate,
        Some(m) if 2 * config.sampling_period > m => SamplingStatus::Undersampled,
        Some(_) => SamplingStatus::Ok,
    };
    SamplingReport { sampling_period: config.sampling_period, min_interval, status }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagCorrelation {
    pub lag: u64,
    /// Fraction of observer ticks `t` at which the first target's offer is
    /// seen KEPT at `t` and the second target's acceptance at `t + lag`.
    pub probability: f64,
    pub pairs: u64,
}

/// Discrete lag profile of the observer's two assessment streams.
///
/// Lags are in scheduler ticks. A fixed link delay shows up as a peak at the
/// corresponding lag; an agent with no acceptance promise contributes no
/// KEPT acceptance assessments, so its profile is zero everywhere.
pub fn observer_correlation(
    log: &EventLog,
    config: &ObserverConfig,
    graph: &PromiseGraph,
    max_lag: u64,
) -> Result<Vec<LagCorrelation>, AssessError> {
    observability_gate(config, graph)?;
    let (t0, t1) = (&config.targets.0, &config.targets.1);
    let promised = |agent: &AgentId, ptype: &PromiseType, polarity: Polarity| -> Alphabet {
        graph
            .promises_by(agent)
            .filter(|(_, p)| p.ptype() == ptype && p.polarity == polarity)
            .fold(Alphabet::empty(), |acc, (_, p)| acc.union(p.body.alphabet()))
    };
    let offered = promised(&t0.agent, &t0.ptype, Polarity::Offer);
    let accepted = promised(&t1.agent, &t1.ptype, Polarity::Accept);

    let n = log.ticks as usize;
    let mut a = vec![false; n];
    let mut b = vec![false; n];
    for r in readings(log, &config.observer, t0, SelfRead::Emits) {
        if offered.contains(r.symbol) && (r.tick as usize) < n {
            a[r.tick as usize] = true;
        }
    }
    for r in readings(log, &config.observer, t1, SelfRead::Accepts) {
        if accepted.contains(r.symbol) && (r.tick as usize) < n {
            b[r.tick as usize] = true;
        }
    }
    let mut out = Vec::new();
    for lag in 0..=max_lag {
        let s = lag as usize;
        if s >= n {
            out.push(LagCorrelation { lag, probability: 0.0, pairs: 0 });
            continue;
        }
        let pairs = (0..n - s).filter(|&t| a[t] && b[t + s]).count() as u64;
        out.push(LagCorrelation { lag, probability: pairs as f64 / (n - s) as f64, pairs });
    }
    Ok(out)
}
