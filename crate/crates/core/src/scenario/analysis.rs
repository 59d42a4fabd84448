use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::report::{NamedDist, NamedInfo, NamedJoint, Report, Value, Verdict};
use super::Scenario;
use crate::assessment::{
    empirical_distribution, joint_distribution, nyquist_check, observer_correlation, JointDist, LagCorrelation,
    Pairing,
};
use crate::info::{
    calibration_check, chain_analysis, entropy, independence_test, mutual_information_with, Estimator,
    InfoError,
};
use crate::promise::{causal_closure, detect_chains, find_bindings, AgentId, Chain, Polarity, PromiseType};
use crate::sim::{ack_transaction, check_clock_ordering, EventKind, EventLog, RejectReason, SimError};

/// Identifies a promise by giver, polarity, type and promisee.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromiseKey {
    pub giver: AgentId,
    pub polarity: Polarity,
    pub ptype: PromiseType,
    pub promisee: AgentId,
}

impl fmt::Display for PromiseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}{} -> {}", self.giver, self.polarity.sign(), self.ptype, self.promisee)
    }
}

/// One requested analysis. Each writes values under documented keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnalysisRequest {
    /// `bindings`, `bindings.usable`, `overlap.<giver>.<promisee>.<type>`
    Bindings,
    /// `closure.<agent>`
    Closure(AgentId),
    /// `structural.<a>.<b>`: INDEPENDENT when neither is in the other's closure.
    Structural(AgentId, AgentId),
    /// `<name>.N`, `<name>.support`, `<name>.entropy`
    Distribution { name: String, assessor: AgentId, promise: PromiseKey },
    /// `accepts.<agent>`, `delivers.<agent>`, `rejects.<agent>.<reason>`
    Rejects(AgentId),
    /// `<obs>.status`, `<obs>.N`, `<obs>.offdiag`, `<obs>.offdiag_mass`, `<obs>.trusted`
    Joint(String),
    /// `<obs>.mi.<estimator>`, `<obs>.H.rows`, `<obs>.H.cols`
    Mi(String, Estimator),
    /// `<obs>.independence`, `<obs>.independence.mi`
    Independence(String),
    /// `<obs>.nyquist`, `<obs>.min_interval`
    Nyquist(String),
    /// `<name>.hop<k>`, `<name>.end`, `<name>.slack`, `<name>.attenuation`, `<name>.N`
    Chain { name: String, agents: Vec<AgentId>, observer: AgentId, pairing: Pairing, period: u64 },
    /// `calibration.<source>`, `calibration.<source>.failing`
    Calibration(AgentId),
    /// `clocks.violations`
    Clocks,
    /// `ack.<s>.<r>`, `ack.<s>.<r>.missing`
    Ack(AgentId, AgentId),
    /// `<obs>.corr.peak`, `<obs>.corr.max`, `<obs>.corr.<lag>`
    Correlation(String, u64),
}

impl AnalysisRequest {
    /// Reference problems against `scenario`.
    pub(crate) fn check(&self, s: &Scenario) -> Vec<String> {
        let mut out = Vec::new();
        let agent = |a: &AgentId, out: &mut Vec<String>| {
            if !s.graph.contains_agent(a) {
                out.push(format!("analysis refers to unknown agent {a}"));
            }
        };
        let observer = |name: &str, out: &mut Vec<String>| {
            if s.observer(name).is_none() {
                out.push(format!("analysis refers to unknown observer {name}"));
            }
        };
        match self {
            AnalysisRequest::Bindings | AnalysisRequest::Clocks => {}
            AnalysisRequest::Closure(a) | AnalysisRequest::Rejects(a) | AnalysisRequest::Calibration(a) => {
                agent(a, &mut out)
            }
            AnalysisRequest::Structural(a, b) | AnalysisRequest::Ack(a, b) => {
                agent(a, &mut out);
                agent(b, &mut out);
            }
            AnalysisRequest::Distribution { assessor, promise, .. } => {
                agent(assessor, &mut out);
                if s.graph.find(&promise.giver, promise.polarity, &promise.ptype, &promise.promisee).is_none() {
                    out.push(format!("no promise {promise}"));
                }
            }
            AnalysisRequest::Joint(o)
            | AnalysisRequest::Mi(o, _)
            | AnalysisRequest::Independence(o)
            | AnalysisRequest::Nyquist(o)
            | AnalysisRequest::Correlation(o, _) => observer(o, &mut out),
            AnalysisRequest::Chain { agents, observer: t, period, .. } => {
                agent(t, &mut out);
                if agents.len() < 2 {
                    out.push("a chain needs at least two agents".into());
                }
                if *period == 0 {
                    out.push("sampling period must be at least 1 tick".into());
                }
                for a in agents {
                    agent(a, &mut out);
                }
                if out.is_empty() {
                    if let Err(e) = resolve_chain(s, agents) {
                        out.push(e);
                    }
                }
            }
        }
        out
    }
}

/// The chain through `agents`: a detected chain if one matches, otherwise
/// one built from the single non-observability offer on each hop.
fn resolve_chain(s: &Scenario, agents: &[AgentId]) -> Result<Chain, String> {
    if let Some(c) = detect_chains(&s.graph).into_iter().find(|c| c.agents == agents) {
        return Ok(c);
    }
    let mut hop_types = Vec::new();
    for w in agents.windows(2) {
        let offers: Vec<&PromiseType> = s
            .graph
            .promises_by(&w[0])
            .filter(|(_, p)| p.is_offer() && p.promisee == w[1] && !p.ptype().is_observability())
            .map(|(_, p)| p.ptype())
            .collect();
        match offers.as_slice() {
            [t] => hop_types.push((*t).clone()),
            [] => return Err(format!("no offer from {} to {}", w[0], w[1])),
            _ => return Err(format!("several offers from {} to {}; hop type is ambiguous", w[0], w[1])),
        }
    }
    Ok(Chain::new(agents.to_vec(), hop_types))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
    In,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::In => "in",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExpectValue {
    Literal(Value),
    /// `lo..hi`, inclusive.
    Range(f64, f64),
    /// `@key`: another computed value.
    Ref(String),
}

impl fmt::Display for ExpectValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpectValue::Literal(v) => write!(f, "{v}"),
            ExpectValue::Range(a, b) => write!(f, "{a}..{b}"),
            ExpectValue::Ref(k) => write!(f, "@{k}"),
        }
    }
}

/// `key op value`, checked against the analysis values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub key: String,
    pub op: CompareOp,
    pub value: ExpectValue,
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.key, self.op.as_str(), self.value)
    }
}

impl Expectation {
    pub fn evaluate(&self, values: &BTreeMap<String, Value>) -> Verdict {
        let actual = values.get(&self.key).cloned().unwrap_or(Value::Undefined);
        let passed = values.contains_key(&self.key) && self.holds(&actual, values);
        Verdict { expectation: self.to_string(), actual, passed }
    }

    fn holds(&self, actual: &Value, values: &BTreeMap<String, Value>) -> bool {
        let expected = match &self.value {
            ExpectValue::Range(lo, hi) => {
                return self.op == CompareOp::In && matches!(actual, Value::Number(x) if lo <= x && x <= hi)
            }
            ExpectValue::Ref(k) => match values.get(k) {
                Some(v) => v,
                None => return false,
            },
            ExpectValue::Literal(v) => v,
        };
        match (self.op, actual, expected) {
            (CompareOp::Eq, a, b) => a == b,
            (CompareOp::Ne, a, b) => a != b,
            (op, Value::Number(a), Value::Number(b)) => match op {
                CompareOp::Le => a <= b,
                CompareOp::Ge => a >= b,
                CompareOp::Lt => a < b,
                CompareOp::Gt => a > b,
                _ => false,
            },
            (CompareOp::Le, Value::Set(a), Value::Set(b)) => a.is_subset(b),
            (CompareOp::Ge, Value::Set(a), Value::Set(b)) => a.is_superset(b),
            _ => false,
        }
    }
}

fn set<I: IntoIterator<Item = S>, S: ToString>(items: I) -> Value {
    Value::Set(items.into_iter().map(|s| s.to_string()).collect())
}

fn num(x: f64) -> Value {
    Value::Number(x)
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    log: &'a EventLog,
    values: BTreeMap<String, Value>,
    joints: BTreeMap<String, Result<JointDist, String>>,
    report: Report,
}

impl<'a> Ctx<'a> {
    fn put(&mut self, key: String, v: Value) {
        self.values.insert(key, v);
    }

    fn joint(&mut self, name: &str) -> Result<JointDist, String> {
        if let Some(j) = self.joints.get(name) {
            return j.clone();
        }
        let o = self.scenario.observer(name).expect("validated observer");
        let j = joint_distribution(self.log, &o.config, &self.scenario.graph).map_err(|e| e.to_string());
        match &j {
            Ok(joint) => {
                self.report.joints.push(NamedJoint { name: name.to_string(), joint: joint.clone() });
                self.put(format!("{name}.status"), Value::Word("OK".into()));
                self.put(format!("{name}.N"), num(joint.total as f64));
                self.put(format!("{name}.offdiag"), num(joint.off_diagonal() as f64));
                self.put(format!("{name}.offdiag_mass"), joint.off_diagonal_mass().map_or(Value::Undefined, num));
                self.put(format!("{name}.trusted"), Value::Word(if joint.is_trusted() { "YES" } else { "NO" }.into()));
            }
            Err(e) => {
                self.put(format!("{name}.status"), Value::Word("MISSING-OBSERVABILITY".into()));
                self.report.notes.push(format!("{name}: {e}"));
            }
        }
        self.joints.insert(name.to_string(), j.clone());
        j
    }

    fn info(&mut self, name: &str, estimator: Estimator) -> Option<crate::InfoReport> {
        let joint = self.joint(name).ok()?;
        let tol = self.scenario.tolerance;
        match mutual_information_with::<f64>(&joint, estimator, tol) {
            Ok(r) => Some(r),
            Err(e) => {
                self.report.notes.push(format!("{name}: {e}"));
                None
            }
        }
    }

    fn request(&mut self, req: &AnalysisRequest) {
        let g = &self.scenario.graph;
        match req {
            AnalysisRequest::Bindings => {
                let bindings = find_bindings(g);
                self.put("bindings".into(), num(bindings.len() as f64));
                self.put("bindings.usable".into(), num(bindings.iter().filter(|b| b.is_usable()).count() as f64));
                for b in &bindings {
                    let p = g.promise(b.offer);
                    self.put(format!("overlap.{}.{}.{}", p.giver, p.promisee, p.ptype()), set(b.overlap.iter()));
                }
            }
            AnalysisRequest::Closure(a) => {
                self.put(format!("closure.{a}"), set(causal_closure(g, a)));
            }
            AnalysisRequest::Structural(a, b) => {
                let dependent = causal_closure(g, a).contains(b) || causal_closure(g, b).contains(a);
                let w = if dependent { "DEPENDENT" } else { "INDEPENDENT" };
                self.put(format!("structural.{a}.{b}"), Value::Word(w.into()));
            }
            AnalysisRequest::Distribution { name, assessor, promise } => {
                let id = g.find(&promise.giver, promise.polarity, &promise.ptype, &promise.promisee).expect("validated");
                match empirical_distribution(self.log, assessor, g.promise(id), g) {
                    Ok(d) => {
                        self.put(format!("{name}.N"), num(d.total as f64));
                        self.put(format!("{name}.support"), set(d.support().iter()));
                        self.put(format!("{name}.entropy"), entropy::<f64>(&d).map_or(Value::Undefined, num));
                        self.report.distributions.push(NamedDist { name: name.clone(), dist: d });
                    }
                    Err(e) => {
                        self.put(format!("{name}.N"), Value::Undefined);
                        self.report.notes.push(format!("{name}: {e}"));
                    }
                }
            }
            AnalysisRequest::Rejects(a) => {
                let count = |pred: &dyn Fn(&crate::sim::EventRecord) -> bool| {
                    self.log.of_agent(a).filter(|r| pred(r)).count() as f64
                };
                let accepts = count(&|r| r.kind == EventKind::Accept);
                let delivers = count(&|r| r.kind == EventKind::Deliver);
                let reasons = [RejectReason::NoAcceptancePromise, RejectReason::SymbolOutsideAlphabet, RejectReason::LostInLink];
                let rejects: Vec<(RejectReason, f64)> =
                    reasons.iter().map(|&why| (why, count(&|r| r.kind == EventKind::Reject && r.reason == Some(why)))).collect();
                self.put(format!("accepts.{a}"), num(accepts));
                self.put(format!("delivers.{a}"), num(delivers));
                for (why, n) in rejects {
                    self.put(format!("rejects.{a}.{why}"), num(n));
                }
            }
            AnalysisRequest::Joint(o) => {
                let _ = self.joint(o);
            }
            AnalysisRequest::Mi(o, est) => {
                let key = format!("{o}.mi.{est}");
                match self.info(o, *est) {
                    Some(r) => {
                        self.put(key, num(r.mutual_information));
                        self.put(format!("{o}.H.rows"), num(r.entropy_source));
                        self.put(format!("{o}.H.cols"), num(r.entropy_receiver));
                        self.report.info_reports.push(NamedInfo { name: format!("{o}.{est}"), report: r });
                    }
                    None => self.put(key, Value::Undefined),
                }
            }
            AnalysisRequest::Independence(o) => {
                let tol = self.scenario.tolerance;
                let verdict = self.joint(o).ok().map(|j| independence_test::<f64>(&j, tol));
                match verdict {
                    Some(Ok(v)) => {
                        self.put(format!("{o}.independence"), Value::Word(v.label().into()));
                        self.put(format!("{o}.independence.mi"), num(v.mutual_information));
                    }
                    Some(Err(e)) => {
                        self.put(format!("{o}.independence"), Value::Undefined);
                        self.report.notes.push(format!("{o}: {e}"));
                    }
                    None => self.put(format!("{o}.independence"), Value::Undefined),
                }
            }
            AnalysisRequest::Nyquist(o) => {
                let config = &self.scenario.observer(o).expect("validated observer").config;
                let r = nyquist_check(config, self.log);
                self.put(format!("{o}.nyquist"), Value::Word(r.status.to_string()));
                self.put(format!("{o}.min_interval"), r.min_interval.map_or(Value::Undefined, |m| num(m as f64)));
            }
            AnalysisRequest::Chain { name, agents, observer, pairing, period } => {
                let chain = resolve_chain(self.scenario, agents).expect("validated chain");
                let tol = self.scenario.tolerance;
                match chain_analysis::<f64>(self.log, &chain, g, observer, *pairing, *period, tol) {
                    Ok(c) => {
                        for (k, h) in c.hops.iter().enumerate() {
                            self.put(format!("{name}.hop{}", k + 1), num(h.mutual_information));
                        }
                        self.put(format!("{name}.end"), num(c.end_to_end.mutual_information));
                        self.put(format!("{name}.slack"), num(c.slack));
                        self.put(format!("{name}.N"), num(c.end_to_end.n_samples as f64));
                        let w = if c.attenuation_holds { "HOLDS" } else { "VIOLATED" };
                        self.put(format!("{name}.attenuation"), Value::Word(w.into()));
                        for (k, h) in c.hops.iter().enumerate() {
                            self.report.info_reports.push(NamedInfo { name: format!("{name}.hop{}", k + 1), report: h.clone() });
                        }
                        self.report.info_reports.push(NamedInfo { name: format!("{name}.end"), report: c.end_to_end });
                    }
                    Err(e) => {
                        self.put(format!("{name}.end"), Value::Undefined);
                        self.report.notes.push(format!("{name}: {e}"));
                    }
                }
            }
            AnalysisRequest::Calibration(m) => match calibration_check(self.log, g, m) {
                Ok(v) => {
                    self.put(format!("calibration.{m}"), Value::Word(v.label().into()));
                    self.put(format!("calibration.{m}.failing"), set(&v.failing));
                }
                Err(e) => {
                    let w = if matches!(e, InfoError::PatternAbsent(_)) { "PATTERN-ABSENT" } else { "UNDEFINED" };
                    self.put(format!("calibration.{m}"), Value::Word(w.into()));
                    self.report.notes.push(format!("calibration {m}: {e}"));
                }
            },
            AnalysisRequest::Clocks => {
                let v = check_clock_ordering(self.log);
                for x in v.iter().take(10) {
                    self.report.notes.push(format!("clock: {x}"));
                }
                self.put("clocks.violations".into(), num(v.len() as f64));
            }
            AnalysisRequest::Ack(s, r) => {
                let key = format!("ack.{s}.{r}");
                match ack_transaction(s, r, g) {
                    Ok(_) => {
                        self.put(key.clone(), Value::Word("COMPLETE".into()));
                        self.put(format!("{key}.missing"), set(Vec::<String>::new()));
                    }
                    Err(SimError::IncompletePattern(m)) => {
                        self.put(key.clone(), Value::Word("INCOMPLETE".into()));
                        self.put(format!("{key}.missing"), set(&m));
                    }
                    Err(e) => self.report.notes.push(format!("{key}: {e}")),
                }
            }
            AnalysisRequest::Correlation(o, max_lag) => {
                let config = &self.scenario.observer(o).expect("validated observer").config;
                match observer_correlation(self.log, config, g, *max_lag) {
                    Ok(table) => {
                        let peak = table.iter().fold(None::<&LagCorrelation>, |best, c| match best {
                            Some(b) if b.probability >= c.probability => Some(b),
                            _ => Some(c),
                        });
                        if let Some(p) = peak {
                            self.put(format!("{o}.corr.peak"), num(p.lag as f64));
                            self.put(format!("{o}.corr.max"), num(p.probability));
                        }
                        for c in &table {
                            self.put(format!("{o}.corr.{}", c.lag), num(c.probability));
                        }
                    }
                    Err(e) => {
                        self.put(format!("{o}.corr.peak"), Value::Undefined);
                        self.report.notes.push(format!("{o}: {e}"));
                    }
                }
            }
        }
    }
}

/// Runs every requested analysis of `scenario` over `log` and checks the
/// embedded expectations.
pub fn analyze(scenario: &Scenario, log: &EventLog) -> Report {
    let mut ctx = Ctx {
        scenario,
        log,
        values: BTreeMap::new(),
        joints: BTreeMap::new(),
        report: Report {
            scenario: scenario.name.clone(),
            scenario_hash: scenario.hash(),
            tool_version: crate::TOOL_VERSION.to_string(),
            seed: log.seed,
            ticks: log.ticks,
            distributions: Vec::new(),
            joints: Vec::new(),
            info_reports: Vec::new(),
            verdicts: Vec::new(),
            values: BTreeMap::new(),
            notes: Vec::new(),
        },
    };
    for req in &scenario.analysis {
        ctx.request(req);
    }
    let verdicts: Vec<Verdict> = scenario.expectations.iter().map(|e| e.evaluate(&ctx.values)).collect();
    let mut report = ctx.report;
    report.verdicts = verdicts;
    report.values = ctx.values;
    report
}
