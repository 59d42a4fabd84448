//! Line-oriented scenario files.
//!
//! ```text
//! scenario case2_partial_overlap
//! seed 7
//! ticks 10000
//!
//! [agents]
//! S R
//!
//! [promises]
//! S +tau{R,G,B} -> R
//! R -tau{G} -> S
//!
//! [policies]
//! S +tau -> R uniform every 1
//!
//! [analysis]
//! rejects R
//!
//! [expect]
//! rejects.R.no-acceptance-promise == 0
//! ```
//!
//! `#` starts a comment. Parsing never panics; every problem becomes a
//! diagnostic carrying its line number.

use std::collections::BTreeMap;

use super::analysis::{AnalysisRequest, CompareOp, ExpectValue, Expectation, PromiseKey};
use super::report::Value;
use super::{Diagnostic, DiagnosticKind, NamedObserver, Scenario, Subject};
use crate::assessment::{ObserverConfig, Pairing, Target};
use crate::info::{Estimator, DEFAULT_TOLERANCE};
use crate::promise::{AgentId, Alphabet, Body, Polarity, Promise, PromiseGraph, PromiseType, Scope, Symbol};
use crate::sim::{
    BehaviorPolicy, ConditionWindow, Delay, Distribution, LinkModel, LinkTable, OfferKey, PolicyKind, Substitution,
};

type PResult<T> = Result<T, String>;

fn agent(s: &str) -> PResult<AgentId> {
    AgentId::new(s).map_err(|e| e.to_string())
}

fn ptype(s: &str) -> PResult<PromiseType> {
    PromiseType::new(s).map_err(|e| e.to_string())
}

fn symbol(s: &str) -> PResult<Symbol> {
    Symbol::new(s).map_err(|e| e.to_string())
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> PResult<T> {
    s.parse().map_err(|_| format!("{what} {s:?} is not a valid number"))
}

fn probability(s: &str) -> PResult<f64> {
    let p: f64 = number(s, "probability")?;
    if p.is_finite() {
        Ok(p)
    } else {
        Err(format!("probability {s:?} is not finite"))
    }
}

/// Removes whitespace inside braces so `{R, G}` tokenizes as one word.
fn squeeze_braces(line: &str) -> String {
    let mut depth = 0usize;
    line.chars()
        .filter(|c| {
            match c {
                '{' => depth += 1,
                '}' => depth = depth.saturating_sub(1),
                _ => {}
            }
            !(depth > 0 && c.is_whitespace())
        })
        .collect()
}

fn braced(s: &str) -> PResult<Vec<&str>> {
    let inner = s
        .strip_prefix('{')
        .and_then(|x| x.strip_suffix('}'))
        .ok_or_else(|| format!("expected a braced list, found {s:?}"))?;
    Ok(if inner.is_empty() { Vec::new() } else { inner.split(',').collect() })
}

fn parse_body(s: &str) -> PResult<(Polarity, Body)> {
    let polarity = match s.chars().next() {
        Some('+') => Polarity::Offer,
        Some('-') => Polarity::Accept,
        _ => return Err(format!("promise body {s:?} must start with + or -")),
    };
    let rest = &s[1..];
    let open = rest.find('{').ok_or_else(|| format!("promise body {s:?} lacks an alphabet"))?;
    let t = ptype(&rest[..open])?;
    let symbols = braced(&rest[open..])?.into_iter().map(symbol).collect::<PResult<Vec<_>>>()?;
    let alphabet = Alphabet::new(symbols).map_err(|e| e.to_string())?;
    Ok((polarity, Body::new(t, alphabet)))
}

/// `S +tau{A,B} -> R | c1, c2 scope:{T}`
fn parse_promise(line: &str) -> PResult<Promise> {
    let (main, scope) = match line.find("scope:") {
        Some(i) => (&line[..i], Some(line[i + "scope:".len()..].trim())),
        None => (line, None),
    };
    let (main, conds) = match main.split_once('|') {
        Some((m, c)) => (m, Some(c)),
        None => (main, None),
    };
    let (left, right) = main.split_once("->").ok_or("promise needs `->`")?;
    let left: Vec<&str> = left.split_whitespace().collect();
    let [giver, body] = left.as_slice() else {
        return Err("expected `GIVER +type{alphabet} -> PROMISEE`".into());
    };
    let right: Vec<&str> = right.split_whitespace().collect();
    let [promisee] = right.as_slice() else {
        return Err("expected a single promisee after `->`".into());
    };
    let (polarity, body) = parse_body(body)?;
    let mut p = Promise::new(agent(giver)?, polarity, body, agent(promisee)?).map_err(|e| e.to_string())?;
    if let Some(c) = conds {
        let conditions = c.split(',').map(|x| ptype(x.trim())).collect::<PResult<Vec<_>>>()?;
        p = p.with_conditions(conditions);
    }
    if let Some(s) = scope {
        p = p.with_scope(if s == "*" {
            Scope::All
        } else {
            Scope::agents(braced(s)?.into_iter().map(agent).collect::<PResult<Vec<_>>>()?)
        });
    }
    Ok(p)
}

fn parse_pairs<'a>(tokens: &[&'a str]) -> PResult<Vec<(&'a str, f64)>> {
    tokens
        .iter()
        .map(|t| {
            let (k, v) = t.split_once(':').ok_or_else(|| format!("expected NAME:WEIGHT, found {t:?}"))?;
            Ok((k, probability(v)?))
        })
        .collect()
}

/// `uniform` or `weights A:0.5 B:0.5`; returns the distribution and the
/// number of tokens consumed.
fn parse_distribution(tokens: &[&str]) -> PResult<(Distribution, usize)> {
    match tokens.first() {
        Some(&"uniform") => Ok((Distribution::Uniform, 1)),
        Some(&"weights") => {
            let n = tokens[1..].iter().take_while(|t| t.contains(':')).count();
            let pairs = parse_pairs(&tokens[1..1 + n])?
                .into_iter()
                .map(|(k, w)| Ok((symbol(k)?, w)))
                .collect::<PResult<Vec<_>>>()?;
            Ok((Distribution::Weights(pairs), 1 + n))
        }
        _ => Err("expected `uniform` or `weights SYMBOL:W ...`".into()),
    }
}

fn offer_key(tokens: &[&str]) -> PResult<OfferKey> {
    let [giver, body, arrow, promisee] = tokens else {
        return Err("expected `GIVER +type -> PROMISEE`".into());
    };
    if *arrow != "->" {
        return Err(format!("expected `->`, found {arrow:?}"));
    }
    let t = body.strip_prefix('+').ok_or("policies drive offers; the type must start with +")?;
    Ok(OfferKey { giver: agent(giver)?, ptype: ptype(t)?, promisee: agent(promisee)? })
}

/// `S +tau -> R uniform every 2 offset 1 by S`
fn parse_policy(line: &str) -> PResult<BehaviorPolicy> {
    let mut tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() < 5 {
        return Err("expected `GIVER +type -> PROMISEE KIND ...`".into());
    }
    let offer = offer_key(&tokens[..4])?;
    let mut executor = offer.giver.clone();
    if tokens.len() >= 7 && tokens[tokens.len() - 2] == "by" {
        executor = agent(tokens[tokens.len() - 1])?;
        tokens.truncate(tokens.len() - 2);
    }
    let rest = &tokens[4..];
    let kind = match rest[0] {
        "relay" => {
            let mix = parse_pairs(&rest[1..])?
                .into_iter()
                .map(|(k, w)| Ok((ptype(k)?, w)))
                .collect::<PResult<Vec<_>>>()?;
            PolicyKind::Relay { mix }
        }
        "draw" => {
            let (distribution, used) = parse_distribution(&rest[1..])?;
            if used + 1 != rest.len() {
                return Err(format!("unexpected {:?} after draw distribution", rest[used + 1]));
            }
            PolicyKind::Draw { distribution }
        }
        _ => {
            let (distribution, used) = parse_distribution(rest)?;
            let tail = &rest[used..];
            let (period, offset) = match tail {
                ["every", p] => (number(p, "period")?, 0),
                ["every", p, "offset", o] => (number(p, "period")?, number(o, "offset")?),
                _ => return Err("expected `every PERIOD [offset K]` after the distribution".into()),
            };
            PolicyKind::Periodic { distribution, period, offset }
        }
    };
    Ok(BehaviorPolicy { executor, offer, kind })
}

/// `delay 2 loss 0.1 corrupt A => A:0.9 B:0.1 ; B => ...` or `flip A B 0.1`.
fn parse_link_model(tokens: &[&str]) -> PResult<LinkModel> {
    let mut m = LinkModel::default();
    let mut i = 0;
    while i < tokens.len() {
        match tokens[i] {
            "delay" => {
                let v = tokens.get(i + 1).ok_or("delay needs a value")?;
                m.delay = match v.split_once("..") {
                    Some((a, b)) => Delay::Uniform { min: number(a, "delay")?, max: number(b, "delay")? },
                    None => Delay::Fixed(number(v, "delay")?),
                };
                i += 2;
            }
            "loss" => {
                m.loss = probability(tokens.get(i + 1).ok_or("loss needs a probability")?)?;
                i += 2;
            }
            "flip" => {
                let [a, b, p] = tokens.get(i + 1..i + 4).ok_or("flip needs two symbols and a probability")? else {
                    unreachable!()
                };
                m.corruption = Some(Substitution::symmetric(symbol(a)?, symbol(b)?, probability(p)?));
                i += 4;
            }
            "corrupt" => {
                let rows_text = tokens[i + 1..].join(" ");
                let mut rows = BTreeMap::new();
                for row in rows_text.split(';') {
                    let (from, to) = row.split_once("=>").ok_or("corrupt rows look like `A => A:0.9 B:0.1`")?;
                    let cells: Vec<&str> = to.split_whitespace().collect();
                    let cells = parse_pairs(&cells)?
                        .into_iter()
                        .map(|(k, w)| Ok((symbol(k)?, w)))
                        .collect::<PResult<Vec<_>>>()?;
                    if rows.insert(symbol(from.trim())?, cells).is_some() {
                        return Err(format!("duplicate corrupt row {}", from.trim()));
                    }
                }
                m.corruption = Some(Substitution { rows });
                i = tokens.len();
            }
            other => return Err(format!("unknown link attribute {other:?}")),
        }
    }
    Ok(m)
}

fn parse_target(s: &str) -> PResult<Target> {
    let (a, t) = s.split_once('.').ok_or_else(|| format!("target {s:?} must look like AGENT.type"))?;
    Ok(Target::new(agent(a)?, ptype(t)?))
}

fn parse_pairing(s: &str) -> PResult<Pairing> {
    match s {
        "ack" => Ok(Pairing::ByAcknowledgment),
        "snapshot" => Ok(Pairing::BySnapshot),
        _ => Err(format!("pairing must be `ack` or `snapshot`, found {s:?}")),
    }
}

fn pairing_word(p: Pairing) -> &'static str {
    match p {
        Pairing::ByAcknowledgment => "ack",
        Pairing::BySnapshot => "snapshot",
    }
}

/// `NAME = T watches S.tau R.tau every 1 by snapshot`
fn parse_observer(line: &str) -> PResult<NamedObserver> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let [name, "=", observer, "watches", a, b, "every", period, "by", pairing] = tokens.as_slice() else {
        return Err("expected `NAME = OBSERVER watches A.type B.type every P by ack|snapshot`".into());
    };
    if !is_word(name) {
        return Err(format!("observer name {name:?} must be an identifier"));
    }
    Ok(NamedObserver {
        name: name.to_string(),
        config: ObserverConfig {
            observer: agent(observer)?,
            targets: (parse_target(a)?, parse_target(b)?),
            sampling_period: number(period, "sampling period")?,
            pairing: parse_pairing(pairing)?,
        },
    })
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_analysis(line: &str) -> PResult<AnalysisRequest> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let name = |s: &str| if is_word(s) { Ok(s.to_string()) } else { Err(format!("{s:?} is not a valid name")) };
    Ok(match tokens.as_slice() {
        ["bindings"] => AnalysisRequest::Bindings,
        ["clocks"] => AnalysisRequest::Clocks,
        ["closure", a] => AnalysisRequest::Closure(agent(a)?),
        ["structural", a, b] => AnalysisRequest::Structural(agent(a)?, agent(b)?),
        ["rejects", a] => AnalysisRequest::Rejects(agent(a)?),
        ["calibration", a] => AnalysisRequest::Calibration(agent(a)?),
        ["ack", a, b] => AnalysisRequest::Ack(agent(a)?, agent(b)?),
        ["joint", o] => AnalysisRequest::Joint(name(o)?),
        ["independence", o] => AnalysisRequest::Independence(name(o)?),
        ["nyquist", o] => AnalysisRequest::Nyquist(name(o)?),
        ["mi", o, est] => AnalysisRequest::Mi(
            name(o)?,
            match *est {
                "plugin" | "plug-in" => Estimator::PlugIn,
                "bias-corrected" => Estimator::BiasCorrected,
                _ => return Err(format!("estimator must be `plugin` or `bias-corrected`, found {est:?}")),
            },
        ),
        ["correlation", o, "max-lag", n] => AnalysisRequest::Correlation(name(o)?, number(n, "lag")?),
        ["distribution", n, "=", assessor, "assesses", giver, body, "->", promisee] => {
            let polarity = match body.chars().next() {
                Some('+') => Polarity::Offer,
                Some('-') => Polarity::Accept,
                _ => return Err("promise type must start with + or -".into()),
            };
            AnalysisRequest::Distribution {
                name: name(n)?,
                assessor: agent(assessor)?,
                promise: PromiseKey {
                    giver: agent(giver)?,
                    polarity,
                    ptype: ptype(&body[1..])?,
                    promisee: agent(promisee)?,
                },
            }
        }
        ["chain", n, "=", rest @ ..] => {
            let via = rest.iter().position(|t| *t == "via").ok_or("chain needs `via OBSERVER`")?;
            let path = &rest[..via];
            if path.len() < 3 || path.iter().skip(1).step_by(2).any(|t| *t != "->") {
                return Err("chain path must look like `A -> B -> C`".into());
            }
            let agents = path.iter().step_by(2).map(|a| agent(a)).collect::<PResult<Vec<_>>>()?;
            let (observer, pairing, period) = match &rest[via + 1..] {
                [t, "by", p] => (agent(t)?, parse_pairing(p)?, 1),
                [t, "by", p, "every", k] => (agent(t)?, parse_pairing(p)?, number(k, "period")?),
                _ => return Err("expected `via OBSERVER by ack|snapshot [every P]`".into()),
            };
            AnalysisRequest::Chain { name: name(n)?, agents, observer, pairing, period }
        }
        _ => return Err(format!("unknown analysis {line:?}")),
    })
}

fn parse_value(s: &str) -> PResult<Value> {
    if s == "undefined" {
        return Ok(Value::Undefined);
    }
    if s.starts_with('{') {
        return Ok(Value::Set(braced(s)?.into_iter().map(|x| x.to_string()).collect()));
    }
    if let Ok(x) = s.parse::<f64>() {
        if x.is_finite() {
            return Ok(Value::Number(x));
        }
    }
    if s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') && !s.is_empty() {
        return Ok(Value::Word(s.to_string()));
    }
    Err(format!("cannot read value {s:?}"))
}

fn parse_expectation(line: &str) -> PResult<Expectation> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let [key, op, value] = tokens.as_slice() else {
        return Err("expected `KEY OP VALUE`".into());
    };
    let op = match *op {
        "==" => CompareOp::Eq,
        "!=" => CompareOp::Ne,
        "<=" => CompareOp::Le,
        ">=" => CompareOp::Ge,
        "<" => CompareOp::Lt,
        ">" => CompareOp::Gt,
        "in" => CompareOp::In,
        other => return Err(format!("unknown comparison {other:?}")),
    };
    let value = if let Some(k) = value.strip_prefix('@') {
        ExpectValue::Ref(k.to_string())
    } else if op == CompareOp::In {
        let (a, b) = value.split_once("..").ok_or("`in` needs a range LO..HI")?;
        ExpectValue::Range(number(a, "bound")?, number(b, "bound")?)
    } else {
        ExpectValue::Literal(parse_value(value)?)
    };
    Ok(Expectation { key: key.to_string(), op, value })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Agents,
    Promises,
    Maps,
    Policies,
    Links,
    Observers,
    Analysis,
    Expect,
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut parse_err = |line: usize, message: String| {
        diags.push(Diagnostic { line: Some(line), kind: DiagnosticKind::Parse, message })
    };

    let mut name = None;
    let mut seed = 0;
    let mut ticks = None;
    let mut window = ConditionWindow::OneShot;
    let mut tolerance = DEFAULT_TOLERANCE;
    let mut header_line = None;
    let mut agents: Vec<AgentId> = Vec::new();
    let mut promises: Vec<(usize, Promise)> = Vec::new();
    let mut maps = Vec::new();
    let mut policies: Vec<(usize, BehaviorPolicy)> = Vec::new();
    let mut default_link: Option<(usize, LinkModel)> = None;
    let mut links: BTreeMap<(AgentId, AgentId), (usize, LinkModel)> = BTreeMap::new();
    let mut observers: Vec<(usize, NamedObserver)> = Vec::new();
    let mut analysis: Vec<(usize, AnalysisRequest)> = Vec::new();
    let mut expectations = Vec::new();
    let mut section = Section::Header;
    let mut any = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        any = true;
        let line = squeeze_braces(content);
        if line.starts_with('[') {
            section = match line.as_str() {
                "[agents]" => Section::Agents,
                "[promises]" => Section::Promises,
                "[maps]" => Section::Maps,
                "[policies]" => Section::Policies,
                "[links]" => Section::Links,
                "[observers]" => Section::Observers,
                "[analysis]" => Section::Analysis,
                "[expect]" => Section::Expect,
                other => {
                    parse_err(lineno, format!("unknown section {other}"));
                    section
                }
            };
            continue;
        }
        let result: PResult<()> = (|| {
            match section {
                Section::Header => {
                    let (key, value) = line.split_once(char::is_whitespace).ok_or("expected `KEY VALUE`")?;
                    let value = value.trim();
                    header_line.get_or_insert(lineno);
                    match key {
                        "scenario" if is_word(value) => name = Some(value.to_string()),
                        "scenario" => return Err(format!("scenario name {value:?} must be an identifier")),
                        "seed" => seed = number(value, "seed")?,
                        "ticks" => ticks = Some(number(value, "ticks")?),
                        "tolerance" => tolerance = number(value, "tolerance")?,
                        "window" => {
                            window = match value {
                                "oneshot" => ConditionWindow::OneShot,
                                v => ConditionWindow::Events(number(v, "window")?),
                            }
                        }
                        other => return Err(format!("unknown header key {other:?}")),
                    }
                }
                Section::Agents => {
                    for a in line.split_whitespace() {
                        let a = agent(a)?;
                        if agents.contains(&a) {
                            return Err(format!("agent {a} declared twice"));
                        }
                        agents.push(a);
                    }
                }
                Section::Promises => promises.push((lineno, parse_promise(&line)?)),
                Section::Maps => {
                    let (left, right) = line.split_once(':').ok_or("expected `S -> R type: a=x b=y`")?;
                    let l: Vec<&str> = left.split_whitespace().collect();
                    let [s, "->", r, t] = l.as_slice() else {
                        return Err("expected `S -> R type: a=x b=y`".into());
                    };
                    let mut map = BTreeMap::new();
                    for pair in right.split_whitespace() {
                        let (from, to) = pair.split_once('=').ok_or("map entries look like `a=x`")?;
                        if map.insert(symbol(from)?, symbol(to)?).is_some() {
                            return Err(format!("symbol {from} mapped twice"));
                        }
                    }
                    maps.push((agent(s)?, agent(r)?, ptype(t)?, map));
                }
                Section::Policies => policies.push((lineno, parse_policy(&line)?)),
                Section::Links => {
                    let tokens: Vec<&str> = line.split_whitespace().collect();
                    if tokens.first() == Some(&"default") {
                        if default_link.is_some() {
                            return Err("default link declared twice".into());
                        }
                        default_link = Some((lineno, parse_link_model(&tokens[1..])?));
                    } else {
                        let [from, "->", to, rest @ ..] = tokens.as_slice() else {
                            return Err("expected `default ...` or `A -> B ...`".into());
                        };
                        let key = (agent(from)?, agent(to)?);
                        let model = parse_link_model(rest)?;
                        if links.insert(key, (lineno, model)).is_some() {
                            return Err(format!("link {from} -> {to} declared twice"));
                        }
                    }
                }
                Section::Observers => observers.push((lineno, parse_observer(&line)?)),
                Section::Analysis => analysis.push((lineno, parse_analysis(&line)?)),
                Section::Expect => expectations.push(parse_expectation(&line)?),
            }
            Ok(())
        })();
        if let Err(e) = result {
            parse_err(lineno, e);
        }
    }

    if !any {
        return Err(vec![Diagnostic { line: None, kind: DiagnosticKind::Parse, message: "empty scenario".into() }]);
    }
    let name = name.unwrap_or_else(|| {
        diags.push(Diagnostic { line: None, kind: DiagnosticKind::Parse, message: "missing `scenario NAME`".into() });
        String::new()
    });
    let ticks = ticks.unwrap_or_else(|| {
        diags.push(Diagnostic { line: None, kind: DiagnosticKind::Parse, message: "missing `ticks N`".into() });
        0
    });
    if !diags.is_empty() {
        return Err(diags);
    }

    let mut graph = PromiseGraph::new(agents);
    let promise_lines: Vec<usize> = promises.iter().map(|(l, _)| *l).collect();
    for (_, p) in promises {
        graph.add_promise(p);
    }
    for (s, r, t, m) in maps {
        graph.set_correspondence(s, r, t, m);
    }
    let link_lines: BTreeMap<(AgentId, AgentId), usize> = links.iter().map(|(k, (l, _))| (k.clone(), *l)).collect();
    let default_line = default_link.as_ref().map(|(l, _)| *l);
    let scenario = Scenario {
        name,
        seed,
        ticks,
        window,
        tolerance,
        graph,
        policies: policies.iter().map(|(_, p)| p.clone()).collect(),
        links: LinkTable {
            default: default_link.map(|(_, m)| m).unwrap_or_default(),
            links: links.into_iter().map(|(k, (_, m))| (k, m)).collect(),
        },
        observers: observers.iter().map(|(_, o)| o.clone()).collect(),
        analysis: analysis.iter().map(|(_, a)| a.clone()).collect(),
        expectations,
    };

    let issues = scenario.validate();
    if issues.is_empty() {
        return Ok(scenario);
    }
    Err(issues
        .into_iter()
        .map(|issue| Diagnostic {
            line: match &issue.subject {
                Subject::Scenario => header_line,
                Subject::Promise(id) => promise_lines.get(id.0).copied(),
                Subject::Policy(i) => policies.get(*i).map(|(l, _)| *l),
                Subject::Link(None) => default_line,
                Subject::Link(Some(k)) => link_lines.get(k).copied(),
                Subject::Observer(i) => observers.get(*i).map(|(l, _)| *l),
                Subject::Analysis(i) => analysis.get(*i).map(|(l, _)| *l),
            },
            kind: DiagnosticKind::Validation,
            message: issue.message,
        })
        .collect())
}

fn render_distribution(d: &Distribution) -> String {
    match d {
        Distribution::Uniform => "uniform".into(),
        Distribution::Weights(w) => {
            let pairs: Vec<String> = w.iter().map(|(s, p)| format!("{s}:{p}")).collect();
            format!("weights {}", pairs.join(" "))
        }
    }
}

fn render_link(m: &LinkModel) -> String {
    let mut out = match m.delay {
        Delay::Fixed(d) => format!("delay {d}"),
        Delay::Uniform { min, max } => format!("delay {min}..{max}"),
    };
    if m.loss != 0.0 {
        out.push_str(&format!(" loss {}", m.loss));
    }
    if let Some(c) = &m.corruption {
        let rows: Vec<String> = c
            .rows
            .iter()
            .map(|(from, cells)| {
                let cells: Vec<String> = cells.iter().map(|(s, p)| format!("{s}:{p}")).collect();
                format!("{from} => {}", cells.join(" "))
            })
            .collect();
        out.push_str(&format!(" corrupt {}", rows.join(" ; ")));
    }
    out
}

fn render_analysis(a: &AnalysisRequest) -> String {
    match a {
        AnalysisRequest::Bindings => "bindings".into(),
        AnalysisRequest::Clocks => "clocks".into(),
        AnalysisRequest::Closure(x) => format!("closure {x}"),
        AnalysisRequest::Structural(x, y) => format!("structural {x} {y}"),
        AnalysisRequest::Rejects(x) => format!("rejects {x}"),
        AnalysisRequest::Calibration(x) => format!("calibration {x}"),
        AnalysisRequest::Ack(x, y) => format!("ack {x} {y}"),
        AnalysisRequest::Joint(o) => format!("joint {o}"),
        AnalysisRequest::Independence(o) => format!("independence {o}"),
        AnalysisRequest::Nyquist(o) => format!("nyquist {o}"),
        AnalysisRequest::Mi(o, e) => {
            format!("mi {o} {}", if *e == Estimator::PlugIn { "plugin" } else { "bias-corrected" })
        }
        AnalysisRequest::Correlation(o, n) => format!("correlation {o} max-lag {n}"),
        AnalysisRequest::Distribution { name, assessor, promise } => format!(
            "distribution {name} = {assessor} assesses {} {}{} -> {}",
            promise.giver,
            promise.polarity.sign(),
            promise.ptype,
            promise.promisee
        ),
        AnalysisRequest::Chain { name, agents, observer, pairing, period } => {
            let path: Vec<&str> = agents.iter().map(|a| a.as_str()).collect();
            format!("chain {name} = {} via {observer} by {} every {period}", path.join(" -> "), pairing_word(*pairing))
        }
    }
}

/// Canonical text of a scenario. `parse_scenario(&render(s))` reproduces `s`.
pub fn render(s: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario {}\nseed {}\nticks {}\n", s.name, s.seed, s.ticks));
    match s.window {
        ConditionWindow::OneShot => out.push_str("window oneshot\n"),
        ConditionWindow::Events(w) => out.push_str(&format!("window {w}\n")),
    }
    out.push_str(&format!("tolerance {}\n", s.tolerance));

    out.push_str("\n[agents]\n");
    let agents: Vec<&str> = s.graph.agents().iter().map(|a| a.as_str()).collect();
    out.push_str(&agents.join(" "));
    out.push('\n');

    out.push_str("\n[promises]\n");
    for (_, p) in s.graph.promises() {
        out.push_str(&format!("{p}\n"));
    }

    let maps: Vec<_> = s.graph.correspondences().collect();
    if !maps.is_empty() {
        out.push_str("\n[maps]\n");
        for ((from, to, t), m) in maps {
            let pairs: Vec<String> = m.iter().map(|(a, b)| format!("{a}={b}")).collect();
            out.push_str(&format!("{from} -> {to} {t}: {}\n", pairs.join(" ")));
        }
    }

    if !s.policies.is_empty() {
        out.push_str("\n[policies]\n");
        for p in &s.policies {
            let k = &p.offer;
            out.push_str(&format!("{} +{} -> {} ", k.giver, k.ptype, k.promisee));
            match &p.kind {
                PolicyKind::Periodic { distribution, period, offset } => {
                    out.push_str(&format!("{} every {period}", render_distribution(distribution)));
                    if *offset != 0 {
                        out.push_str(&format!(" offset {offset}"));
                    }
                }
                PolicyKind::Relay { mix } => {
                    out.push_str("relay");
                    for (t, w) in mix {
                        out.push_str(&format!(" {t}:{w}"));
                    }
                }
                PolicyKind::Draw { distribution } => out.push_str(&format!("draw {}", render_distribution(distribution))),
            }
            if p.executor != k.giver {
                out.push_str(&format!(" by {}", p.executor));
            }
            out.push('\n');
        }
    }

    out.push_str("\n[links]\n");
    out.push_str(&format!("default {}\n", render_link(&s.links.default)));
    for ((from, to), m) in &s.links.links {
        out.push_str(&format!("{from} -> {to} {}\n", render_link(m)));
    }

    if !s.observers.is_empty() {
        out.push_str("\n[observers]\n");
        for o in &s.observers {
            let c = &o.config;
            out.push_str(&format!(
                "{} = {} watches {} {} every {} by {}\n",
                o.name,
                c.observer,
                c.targets.0,
                c.targets.1,
                c.sampling_period,
                pairing_word(c.pairing)
            ));
        }
    }

    if !s.analysis.is_empty() {
        out.push_str("\n[analysis]\n");
        for a in &s.analysis {
            out.push_str(&render_analysis(a));
            out.push('\n');
        }
    }

    if !s.expectations.is_empty() {
        out.push_str("\n[expect]\n");
        for e in &s.expectations {
            out.push_str(&format!("{e}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promise::find_bindings;

    const SMALL: &str = "scenario small
ticks 10

[agents]
S R T

[promises]
S +tau{A, B} -> R | rho scope:{T}
T +rho{X} -> S
";

    fn errors(text: &str) -> Vec<Diagnostic> {
        parse_scenario(text).expect_err("should not parse")
    }

    #[test]
    fn corpus_case1_has_one_promise_and_no_bindings() {
        let s = parse_scenario(&super::super::corpus("case1").unwrap()).unwrap();
        assert_eq!(s.graph.len(), 1);
        assert!(find_bindings(&s.graph).is_empty());
    }

    #[test]
    fn empty_input_is_a_parse_error() {
        for text in ["", "   \n# only a comment\n"] {
            let d = errors(text);
            assert_eq!(d[0].kind, DiagnosticKind::Parse);
        }
    }

    #[test]
    fn unknown_scope_agent_names_the_agent_and_line() {
        let d = errors(&SMALL.replace("scope:{T}", "scope:{Q}"));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::Validation);
        assert_eq!(d[0].line, Some(8));
        assert!(d[0].message.contains('Q'));
    }

    #[test]
    fn syntax_errors_carry_their_line() {
        let d = errors(&SMALL.replace("T +rho{X} -> S", "T rho{X} -> S"));
        assert_eq!((d[0].line, d[0].kind), (Some(9), DiagnosticKind::Parse));
        let d = errors(&format!("{SMALL}\n[bogus]\n"));
        assert_eq!(d[0].line, Some(11));
    }

    #[test]
    fn missing_header_keys_are_reported() {
        let d = errors("[agents]\nS R\n");
        assert!(d.iter().any(|x| x.message.contains("scenario NAME")));
        assert!(d.iter().any(|x| x.message.contains("ticks")));
    }

    #[test]
    fn braces_may_contain_spaces_and_comments_are_ignored() {
        let s = parse_scenario(&SMALL.replace("[agents]", "[agents] # who")).unwrap();
        let p = s.graph.promise(crate::promise::PromiseId(0));
        assert_eq!(p.body.alphabet().len(), 2);
        assert_eq!(p.conditions.len(), 1);
    }

    #[test]
    fn policies_links_and_analyses_render_canonically() {
        let text = format!(
            "{SMALL}
[policies]
T +rho -> S weights X:1 every 3 offset 1
S +tau -> R draw weights A:0.25 B:0.75

[links]
T -> S delay 1..3 loss 0.5 corrupt X => X:1

[analysis]
chain c = T -> S -> R via T by snapshot
mi o plug-in
distribution d = R assesses S +tau -> R

[observers]
o = T watches S.tau R.tau every 2 by ack

[expect]
c.end in 0..0.5
o.mi.plug-in >= @c.end
closure.R == {{S,T}}
"
        );
        let s = parse_scenario(&text).unwrap();
        let out = render(&s);
        assert!(out.contains("T +rho -> S weights X:1 every 3 offset 1\n"));
        assert!(out.contains("default delay 1\nT -> S delay 1..3 loss 0.5 corrupt X => X:1\n"));
        assert!(out.contains("chain c = T -> S -> R via T by snapshot every 1\n"));
        assert!(out.contains("mi o plugin\n"));
        assert_eq!(parse_scenario(&out).unwrap(), s);
    }

    #[test]
    fn bad_policy_is_a_validation_error_on_its_line() {
        let text = format!("{SMALL}\n[policies]\nS +tau -> R uniform every 1\n");
        let d = errors(&text);
        assert_eq!(d[0].line, Some(12));
        assert!(d[0].message.contains("conditional"));
    }
}
