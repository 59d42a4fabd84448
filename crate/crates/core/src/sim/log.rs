use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::promise::{AgentId, PromiseType, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Emit,
    Deliver,
    Accept,
    Reject,
    ConditionSatisfied,
    Observe,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Emit => "EMIT",
            EventKind::Deliver => "DELIVER",
            EventKind::Accept => "ACCEPT",
            EventKind::Reject => "REJECT",
            EventKind::ConditionSatisfied => "CONDITION-SATISFIED",
            EventKind::Observe => "OBSERVE",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = LogParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "EMIT" => EventKind::Emit,
            "DELIVER" => EventKind::Deliver,
            "ACCEPT" => EventKind::Accept,
            "REJECT" => EventKind::Reject,
            "CONDITION-SATISFIED" => EventKind::ConditionSatisfied,
            "OBSERVE" => EventKind::Observe,
            other => return Err(LogParseError::field("kind", other)),
        })
    }
}

/// Why a delivery was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    NoAcceptancePromise,
    SymbolOutsideAlphabet,
    LostInLink,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::NoAcceptancePromise => "no-acceptance-promise",
            RejectReason::SymbolOutsideAlphabet => "symbol-outside-alphabet",
            RejectReason::LostInLink => "lost-in-link",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RejectReason {
    type Err = LogParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "no-acceptance-promise" => RejectReason::NoAcceptancePromise,
            "symbol-outside-alphabet" => RejectReason::SymbolOutsideAlphabet,
            "lost-in-link" => RejectReason::LostInLink,
            other => return Err(LogParseError::field("reason", other)),
        })
    }
}

/// Transaction id: the agent whose unconditional emission started the
/// transaction and that agent's emission counter. Relays, acknowledgments
/// and observability reports inherit the id of what caused them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Correlation {
    pub origin: AgentId,
    pub seq: u64,
}

impl fmt::Display for Correlation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.origin, self.seq)
    }
}

impl FromStr for Correlation {
    type Err = LogParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (origin, seq) = s.split_once('#').ok_or_else(|| LogParseError::field("correlation", s))?;
        Ok(Correlation {
            origin: AgentId::new(origin).map_err(|_| LogParseError::field("correlation", s))?,
            seq: seq.parse().map_err(|_| LogParseError::field("correlation", s))?,
        })
    }
}

/// One entry of the simulation history.
///
/// `local_time` is the agent's own clock; `global_seq` and `tick` are
/// scheduler plumbing kept for reproducibility and for tick-based observer
/// analysis. `peer` is the counterparty: the promisee of an EMIT, the sender
/// of a DELIVER/ACCEPT/REJECT, the target of an OBSERVE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub global_seq: u64,
    pub agent: AgentId,
    pub local_time: u64,
    pub kind: EventKind,
    pub ptype: PromiseType,
    pub symbol: Option<Symbol>,
    pub correlation: Option<Correlation>,
    pub reason: Option<RejectReason>,
    pub peer: Option<AgentId>,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid {field} value {value:?}")]
    Field { field: &'static str, value: String },
    #[error("missing header {0}")]
    MissingHeader(&'static str),
}

impl LogParseError {
    fn field(field: &'static str, value: &str) -> Self {
        LogParseError::Field { field, value: value.to_string() }
    }
}

/// Complete, immutable history of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub ticks: u64,
    pub records: Vec<EventRecord>,
}

pub const LOG_MAGIC: &str = "# promise-info event log v1";
pub const LOG_COLUMNS: &str =
    "global_seq\tagent\tlocal_time\tkind\tptype\tsymbol\tcorrelation\treason\tpeer\ttick";

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), ToString::to_string)
}

impl EventLog {
    /// Events of one agent, in local order.
    pub fn of_agent<'a>(&'a self, agent: &'a AgentId) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.records.iter().filter(move |r| &r.agent == agent)
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    /// Newline-delimited serialization with a header carrying the scenario
    /// hash and seed.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 8));
        out.push_str(LOG_MAGIC);
        out.push('\n');
        out.push_str(&format!("# scenario {}\n", self.scenario));
        out.push_str(&format!("# scenario-hash {}\n", self.scenario_hash));
        out.push_str(&format!("# seed {}\n", self.seed));
        out.push_str(&format!("# ticks {}\n", self.ticks));
        out.push_str(LOG_COLUMNS);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.global_seq,
                r.agent,
                r.local_time,
                r.kind,
                r.ptype,
                opt(&r.symbol),
                opt(&r.correlation),
                opt(&r.reason),
                opt(&r.peer),
                r.tick
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LogParseError> {
        let mut scenario = None;
        let mut hash = None;
        let mut seed = None;
        let mut ticks = None;
        let mut records = Vec::new();
        let mut saw_magic = false;
        let mut saw_columns = false;

        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let err = |message: String| LogParseError::Line { line: lineno, message };
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix("# ") {
                if line == LOG_MAGIC {
                    saw_magic = true;
                    continue;
                }
                let (key, value) =
                    header.split_once(' ').ok_or_else(|| err(format!("bad header {line:?}")))?;
                match key {
                    "scenario" => scenario = Some(value.to_string()),
                    "scenario-hash" => hash = Some(value.to_string()),
                    "seed" => seed = Some(value.parse().map_err(|_| err("bad seed".into()))?),
                    "ticks" => ticks = Some(value.parse().map_err(|_| err("bad ticks".into()))?),
                    _ => return Err(err(format!("unknown header {key:?}"))),
                }
                continue;
            }
            if line == LOG_COLUMNS {
                saw_columns = true;
                continue;
            }
            if !saw_magic || !saw_columns {
                return Err(err("record before log header".into()));
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 10 {
                return Err(err(format!("expected 10 fields, found {}", f.len())));
            }
            let wrap = |e: LogParseError| err(e.to_string());
            let num = |s: &str, name: &'static str| {
                s.parse::<u64>().map_err(|_| err(format!("bad {name} {s:?}")))
            };
            fn optional(s: &str) -> Option<&str> {
                (s != "-").then_some(s)
            }
            records.push(EventRecord {
                global_seq: num(f[0], "global_seq")?,
                agent: AgentId::new(f[1]).map_err(|e| err(e.to_string()))?,
                local_time: num(f[2], "local_time")?,
                kind: f[3].parse().map_err(wrap)?,
                ptype: PromiseType::new(f[4]).map_err(|e| err(e.to_string()))?,
                symbol: optional(f[5])
                    .map(Symbol::new)
                    .transpose()
                    .map_err(|e| err(e.to_string()))?,
                correlation: optional(f[6]).map(str::parse).transpose().map_err(wrap)?,
                reason: optional(f[7]).map(str::parse).transpose().map_err(wrap)?,
                peer: optional(f[8])
                    .map(AgentId::new)
                    .transpose()
                    .map_err(|e| err(e.to_string()))?,
                tick: num(f[9], "tick")?,
            });
        }
        if !saw_magic {
            return Err(LogParseError::MissingHeader("magic"));
        }
        Ok(EventLog {
            scenario: scenario.ok_or(LogParseError::MissingHeader("scenario"))?,
            scenario_hash: hash.ok_or(LogParseError::MissingHeader("scenario-hash"))?,
            seed: seed.ok_or(LogParseError::MissingHeader("seed"))?,
            ticks: ticks.ok_or(LogParseError::MissingHeader("ticks"))?,
            records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_text_form() {
        let c: Correlation = "S#12".parse().unwrap();
        assert_eq!(c.origin.as_str(), "S");
        assert_eq!(c.seq, 12);
        assert_eq!(c.to_string(), "S#12");
        assert!("S12".parse::<Correlation>().is_err());
    }

    #[test]
    fn rejects_truncated_records() {
        let text = format!("{LOG_MAGIC}\n# scenario x\n# scenario-hash h\n# seed 1\n# ticks 2\n{LOG_COLUMNS}\n0\tS\t1\tEMIT\n");
        assert!(matches!(EventLog::from_text(&text), Err(LogParseError::Line { line: 7, .. })));
        assert!(matches!(EventLog::from_text(""), Err(LogParseError::MissingHeader("magic"))));
    }
}
