use std::collections::BTreeMap;
use std::sync::Arc;

use rustc_hash::FxHashMap as HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::log::{Correlation, EventKind, EventLog, EventRecord, RejectReason};
use super::policy::{ConditionWindow, Delay, LinkModel, PolicyKind};
use super::SimError;
use crate::promise::{AgentId, PromiseGraph, PromiseId, PromiseType, Symbol};
use crate::scenario::Scenario;

/// Independent random stream derived from the master seed and a stable label.
pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// A condition accepted by an agent, held for one of its conditional offers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Satisfaction {
    pub local_time: u64,
    pub symbol: Symbol,
    pub correlation: Correlation,
}

/// Mutable per-agent state during a run.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: AgentId,
    /// Local event counter; strictly increasing over the agent's own log.
    pub clock: u64,
    /// Last emitted or accepted symbol per type.
    pub interior: BTreeMap<PromiseType, Symbol>,
    /// Last accepted symbol per (sender, type).
    pub views: BTreeMap<(AgentId, PromiseType), Symbol>,
    pub active_conditions: BTreeMap<PromiseId, BTreeMap<PromiseType, Satisfaction>>,
    unconditional_emissions: u64,
}

impl AgentState {
    fn new(id: AgentId) -> Self {
        AgentState {
            id,
            clock: 0,
            interior: BTreeMap::new(),
            views: BTreeMap::new(),
            active_conditions: BTreeMap::new(),
            unconditional_emissions: 0,
        }
    }
}

/// A transmission in flight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub from: AgentId,
    pub to: AgentId,
    pub ptype: PromiseType,
    /// Symbol as it arrives, after any corruption on the wire.
    pub symbol: Symbol,
    pub correlation: Correlation,
    pub lost: bool,
}

/// Outcome of offering a delivered symbol to its receiver.
pub fn acceptance_decision(
    graph: &PromiseGraph,
    receiver: &AgentId,
    sender: &AgentId,
    ptype: &PromiseType,
    symbol: &Symbol,
) -> Result<PromiseId, RejectReason> {
    let id = graph.acceptance(receiver, sender, ptype).ok_or(RejectReason::NoAcceptancePromise)?;
    if graph.promise(id).body.alphabet().contains(symbol) {
        Ok(id)
    } else {
        Err(RejectReason::SymbolOutsideAlphabet)
    }
}

struct Emitter {
    promise: PromiseId,
    agent: usize,
    period: u64,
    offset: u64,
    cumulative: Vec<(Symbol, f64)>,
    rng: ChaCha8Rng,
}

enum RelayRule {
    Mix(Vec<(PromiseType, f64)>),
    Draw(Vec<(Symbol, f64)>),
}

struct Relay {
    rule: RelayRule,
    rng: ChaCha8Rng,
}

struct Link {
    model: LinkModel,
    rng: ChaCha8Rng,
}

struct Pending {
    from: usize,
    to: usize,
    ptype: PromiseType,
    symbol: Symbol,
    correlation: Correlation,
    lost: bool,
}

fn cumulative<K: Clone>(weights: &[(K, f64)]) -> Vec<(K, f64)> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|(k, w)| {
            acc += w;
            (k.clone(), acc)
        })
        .collect()
}

fn pick<'a, K>(cum: &'a [(K, f64)], rng: &mut ChaCha8Rng) -> &'a K {
    let u: f64 = rng.random::<f64>() * cum.last().map_or(1.0, |c| c.1);
    cum.iter().find(|(_, c)| u < *c).map_or(&cum[cum.len() - 1].0, |(k, _)| k)
}

struct SlotTarget {
    agent: usize,
    ptype: PromiseType,
    /// Key of the observer's view when the target is another agent.
    view: (AgentId, PromiseType),
}

struct ObserverSlot {
    observer: usize,
    period: u64,
    targets: [SlotTarget; 2],
}

/// Seeded discrete-event execution of one scenario.
///
/// Each tick processes deliveries due at that tick, then periodic emissions,
/// then observer sampling. Every random choice draws from a stream labelled
/// by its emitter or link, so unrelated parts of a scenario never perturb
/// each other's randomness.
pub struct Simulation<'s> {
    scenario: &'s Scenario,
    graph: &'s PromiseGraph,
    ids: Vec<AgentId>,
    index: HashMap<AgentId, usize>,
    agents: Vec<AgentState>,
    emitters: Vec<Emitter>,
    relays: HashMap<PromiseId, Relay>,
    /// Conditional offers per (agent, condition type).
    triggers: HashMap<(usize, PromiseType), Arc<[PromiseId]>>,
    /// Unconditional observability offers per (agent, observed type).
    reporters: HashMap<(usize, PromiseType), Arc<[PromiseId]>>,
    /// Promisee index of every promise.
    promisees: Vec<usize>,
    acceptances: HashMap<(usize, usize, PromiseType), PromiseId>,
    links: HashMap<(usize, usize), Link>,
    observers: Vec<ObserverSlot>,
    /// In-flight transmissions by arrival tick, each bucket in send order.
    pending: BTreeMap<u64, Vec<Pending>>,
    tick: u64,
    window: ConditionWindow,
    records: Vec<EventRecord>,
    seed: u64,
}

impl<'s> Simulation<'s> {
    pub fn new(scenario: &'s Scenario, seed: u64) -> Result<Self, SimError> {
        let issues = scenario.validate();
        if !issues.is_empty() {
            return Err(SimError::InvalidScenario(issues.iter().map(ToString::to_string).collect()));
        }
        let graph = &scenario.graph;
        let ids: Vec<AgentId> = graph.agents().iter().cloned().collect();
        let index: HashMap<AgentId, usize> =
            ids.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let agents = ids.iter().cloned().map(AgentState::new).collect();

        let mut emitters = Vec::new();
        let mut relays = HashMap::default();
        for policy in &scenario.policies {
            let k = &policy.offer;
            let pid = graph
                .find(&k.giver, crate::promise::Polarity::Offer, &k.ptype, &k.promisee)
                .expect("validated policy references an offer");
            let alphabet = graph.promise(pid).body.alphabet();
            let label = format!("{}:{}:{}", k.giver, k.promisee, k.ptype);
            match &policy.kind {
                PolicyKind::Periodic { distribution, period, offset } => {
                    let weights = distribution.resolve(alphabet).expect("validated distribution");
                    emitters.push(Emitter {
                        promise: pid,
                        agent: index[&k.giver],
                        period: *period,
                        offset: *offset,
                        cumulative: cumulative(&weights),
                        rng: stream(seed, &format!("emit:{label}")),
                    });
                }
                PolicyKind::Relay { mix } => {
                    let mix = if mix.is_empty() {
                        vec![(graph.promise(pid).conditions[0].clone(), 1.0)]
                    } else {
                        mix.clone()
                    };
                    relays.insert(
                        pid,
                        Relay {
                            rule: RelayRule::Mix(cumulative(&mix)),
                            rng: stream(seed, &format!("relay:{label}")),
                        },
                    );
                }
                PolicyKind::Draw { distribution } => {
                    let weights = distribution.resolve(alphabet).expect("validated distribution");
                    relays.insert(
                        pid,
                        Relay {
                            rule: RelayRule::Draw(cumulative(&weights)),
                            rng: stream(seed, &format!("relay:{label}")),
                        },
                    );
                }
            }
        }

        let mut triggers: HashMap<(usize, PromiseType), Vec<PromiseId>> = HashMap::default();
        let mut reporters: HashMap<(usize, PromiseType), Vec<PromiseId>> = HashMap::default();
        let mut acceptances = HashMap::default();
        for (pid, p) in graph.promises() {
            let giver = index[&p.giver];
            if p.is_accept() {
                acceptances.insert((giver, index[&p.promisee], p.ptype().clone()), pid);
                continue;
            }
            if p.is_conditional() {
                // Conditional offers without an explicit policy relay their first condition.
                relays.entry(pid).or_insert_with(|| Relay {
                    rule: RelayRule::Mix(vec![(p.conditions[0].clone(), 1.0)]),
                    rng: stream(seed, &format!("relay:{}:{}:{}", p.giver, p.promisee, p.ptype())),
                });
                for c in &p.conditions {
                    triggers.entry((giver, c.clone())).or_default().push(pid);
                }
            } else if let Some(observed) = p.ptype().observed() {
                reporters.entry((giver, observed)).or_default().push(pid);
            }
        }

        let mut links = HashMap::default();
        for (i, from) in ids.iter().enumerate() {
            for (j, to) in ids.iter().enumerate() {
                if i != j {
                    links.insert(
                        (i, j),
                        Link {
                            model: scenario.links.get(from, to).clone(),
                            rng: stream(seed, &format!("link:{from}:{to}")),
                        },
                    );
                }
            }
        }

        let observers = scenario
            .observers
            .iter()
            .map(|o| {
                let c = &o.config;
                let slot = |t: &crate::assessment::Target| SlotTarget {
                    agent: index[&t.agent],
                    ptype: t.ptype.clone(),
                    view: (t.agent.clone(), t.ptype.observability()),
                };
                ObserverSlot { observer: index[&c.observer], period: c.sampling_period, targets: [slot(&c.targets.0), slot(&c.targets.1)] }
            })
            .collect();

        let promisees = graph.promises().map(|(_, p)| index[&p.promisee]).collect();
        Ok(Simulation {
            scenario,
            graph,
            ids,
            index,
            agents,
            emitters,
            relays,
            triggers: triggers.into_iter().map(|(k, v)| (k, v.into())).collect(),
            reporters: reporters.into_iter().map(|(k, v)| (k, v.into())).collect(),
            promisees,
            acceptances,
            links,
            observers,
            pending: BTreeMap::new(),
            tick: 0,
            window: scenario.window,
            records: Vec::new(),
            seed,
        })
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentState> {
        self.index.get(id).map(|&i| &self.agents[i])
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Runs ticks `0..ticks`. Transmissions still in flight at the horizon
    /// are dropped without a record.
    pub fn run_until(&mut self, ticks: u64) {
        while self.tick < ticks {
            self.step();
        }
    }

    /// Executes the current tick and advances to the next.
    pub fn step(&mut self) {
        let t = self.tick;
        // Delays are at least one tick, so nothing sent now joins this batch.
        if let Some(batch) = self.pending.remove(&t) {
            for d in batch {
                self.process_delivery(d);
            }
        }
        for e in 0..self.emitters.len() {
            let em = &self.emitters[e];
            if t >= em.offset && (t - em.offset).is_multiple_of(em.period) {
                self.periodic_emit(e);
            }
        }
        for o in 0..self.observers.len() {
            if t.is_multiple_of(self.observers[o].period) {
                self.observe(o);
            }
        }
        self.tick += 1;
    }

    pub fn into_log(self) -> EventLog {
        EventLog {
            scenario: self.scenario.name.clone(),
            scenario_hash: self.scenario.hash(),
            seed: self.seed,
            ticks: self.tick,
            records: self.records,
        }
    }

    /// Forces an emission of offer `promise` outside the schedule.
    ///
    /// Conditional offers may only emit once all their conditions are
    /// satisfied; asking otherwise is a scheduler bug.
    pub fn emit(&mut self, promise: PromiseId) -> Result<EventRecord, SimError> {
        let p = self.graph.promise(promise);
        if !p.is_offer() {
            return Err(SimError::NotAnOffer(promise));
        }
        let agent = self.index[&p.giver];
        if p.is_conditional() {
            if !self.conditions_hold(agent, promise) {
                return Err(SimError::ConditionUnsatisfied(promise));
            }
            self.fire(agent, promise);
        } else if let Some(e) = self.emitters.iter().position(|e| e.promise == promise) {
            self.periodic_emit(e);
        } else {
            return Err(SimError::NoPolicy(promise));
        }
        let emitted = self
            .records
            .iter()
            .rev()
            .find(|r| r.kind == EventKind::Emit && r.agent == p.giver && r.ptype == *p.ptype())
            .cloned()
            .expect("emission recorded");
        Ok(emitted)
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        agent: usize,
        kind: EventKind,
        ptype: &PromiseType,
        symbol: Option<&Symbol>,
        correlation: Option<&Correlation>,
        reason: Option<RejectReason>,
        peer: Option<usize>,
    ) {
        let state = &mut self.agents[agent];
        state.clock += 1;
        self.records.push(EventRecord {
            global_seq: self.records.len() as u64,
            agent: state.id.clone(),
            local_time: state.clock,
            kind,
            ptype: ptype.clone(),
            symbol: symbol.cloned(),
            correlation: correlation.cloned(),
            reason,
            peer: peer.map(|i| self.ids[i].clone()),
            tick: self.tick,
        });
    }

    fn periodic_emit(&mut self, e: usize) {
        let em = &mut self.emitters[e];
        let symbol = pick(&em.cumulative, &mut em.rng).clone();
        let (agent, promise) = (em.agent, em.promise);
        let state = &mut self.agents[agent];
        let correlation = Correlation { origin: state.id.clone(), seq: state.unconditional_emissions };
        state.unconditional_emissions += 1;
        self.emit_symbol(agent, promise, symbol, correlation);
    }

    fn emit_symbol(&mut self, agent: usize, promise: PromiseId, symbol: Symbol, corr: Correlation) {
        let p = self.graph.promise(promise);
        let to = self.promisees[promise.0];
        let ptype = p.ptype().clone();
        self.record(agent, EventKind::Emit, &ptype, Some(&symbol), Some(&corr), None, Some(to));
        self.agents[agent].interior.insert(ptype.clone(), symbol.clone());
        self.transmit(agent, to, &ptype, &symbol, &corr);
        self.on_interior_update(agent, &ptype, &symbol, &corr);
    }

    fn transmit(&mut self, from: usize, to: usize, ptype: &PromiseType, symbol: &Symbol, corr: &Correlation) {
        let link = self.links.get_mut(&(from, to)).expect("link between distinct agents");
        let model = &link.model;
        let lost = model.loss > 0.0 && link.rng.random::<f64>() < model.loss;
        let mut received = symbol.clone();
        if let Some(row) = model.corruption.as_ref().and_then(|c| c.rows.get(symbol)) {
            received = pick(&cumulative(row), &mut link.rng).clone();
        }
        let delay = match model.delay {
            Delay::Fixed(d) => d,
            Delay::Uniform { min, max } => link.rng.random_range(min..=max),
        };
        self.pending.entry(self.tick + delay).or_default().push(Pending {
            from,
            to,
            ptype: ptype.clone(),
            symbol: received,
            correlation: corr.clone(),
            lost,
        });
    }

    fn process_delivery(&mut self, d: Pending) {
        let Pending { from, to, ptype, symbol, correlation, lost } = d;
        if lost {
            let reason = Some(RejectReason::LostInLink);
            self.record(to, EventKind::Reject, &ptype, Some(&symbol), Some(&correlation), reason, Some(from));
            return;
        }
        self.record(to, EventKind::Deliver, &ptype, Some(&symbol), Some(&correlation), None, Some(from));
        let symbol = self.graph.translate(&self.ids[from], &self.ids[to], &ptype, &symbol);
        let decision = match self.acceptances.get(&(to, from, ptype.clone())) {
            None => Err(RejectReason::NoAcceptancePromise),
            Some(&pid) if !self.graph.promise(pid).body.alphabet().contains(&symbol) => {
                Err(RejectReason::SymbolOutsideAlphabet)
            }
            Some(&pid) => Ok(pid),
        };
        match decision {
            Err(reason) => {
                self.record(to, EventKind::Reject, &ptype, Some(&symbol), Some(&correlation), Some(reason), Some(from));
            }
            Ok(_) => {
                self.record(to, EventKind::Accept, &ptype, Some(&symbol), Some(&correlation), None, Some(from));
                let state = &mut self.agents[to];
                state.interior.insert(ptype.clone(), symbol.clone());
                state.views.insert((self.ids[from].clone(), ptype.clone()), symbol.clone());
                self.on_interior_update(to, &ptype, &symbol, &correlation);
                self.on_accepted(to, &ptype, &symbol, &correlation);
            }
        }
    }

    /// Sends observability reports promised for `ptype`.
    fn on_interior_update(&mut self, agent: usize, ptype: &PromiseType, symbol: &Symbol, corr: &Correlation) {
        let Some(reports) = self.reporters.get(&(agent, ptype.clone())) else {
            return;
        };
        for &pid in reports.clone().iter() {
            if self.graph.promise(pid).body.alphabet().contains(symbol) {
                self.emit_symbol(agent, pid, symbol.clone(), corr.clone());
            }
        }
    }

    fn on_accepted(&mut self, agent: usize, ptype: &PromiseType, symbol: &Symbol, corr: &Correlation) {
        let Some(offers) = self.triggers.get(&(agent, ptype.clone())) else {
            return;
        };
        for &pid in offers.clone().iter() {
            let local_time = self.agents[agent].clock;
            self.agents[agent].active_conditions.entry(pid).or_default().insert(
                ptype.clone(),
                Satisfaction { local_time, symbol: symbol.clone(), correlation: corr.clone() },
            );
            let offer = self.graph.promise(pid);
            let peer = self.promisees[pid.0];
            let offered_type = offer.ptype().clone();
            self.record(agent, EventKind::ConditionSatisfied, &offered_type, Some(symbol), Some(corr), None, Some(peer));
            if self.conditions_hold(agent, pid) {
                self.fire(agent, pid);
            }
        }
    }

    fn conditions_hold(&mut self, agent: usize, pid: PromiseId) -> bool {
        let p = self.graph.promise(pid);
        let state = &mut self.agents[agent];
        let Some(sats) = state.active_conditions.get_mut(&pid) else {
            return false;
        };
        if let ConditionWindow::Events(w) = self.window {
            let now = state.clock;
            sats.retain(|_, s| now - s.local_time <= w);
        }
        p.conditions.iter().all(|c| sats.contains_key(c))
    }

    fn fire(&mut self, agent: usize, pid: PromiseId) {
        let p = self.graph.promise(pid);
        let sats = &self.agents[agent].active_conditions[&pid];
        let correlation = sats[&p.conditions[0]].correlation.clone();
        let relay = self.relays.get_mut(&pid).expect("conditional offer has a relay rule");
        let symbol = match &relay.rule {
            RelayRule::Mix(cum) => {
                let source = if cum.len() == 1 { &cum[0].0 } else { pick(cum, &mut relay.rng) };
                sats[source].symbol.clone()
            }
            RelayRule::Draw(cum) => pick(cum, &mut relay.rng).clone(),
        };
        if self.window == ConditionWindow::OneShot {
            self.agents[agent].active_conditions.remove(&pid);
        }
        self.emit_symbol(agent, pid, symbol, correlation);
    }

    fn observe(&mut self, o: usize) {
        let observer = self.observers[o].observer;
        for k in 0..2 {
            let t = &self.observers[o].targets[k];
            let state = &self.agents[observer];
            let view = if t.agent == observer { state.interior.get(&t.ptype) } else { state.views.get(&t.view) };
            let (view, ptype, target) = (view.cloned(), t.ptype.clone(), t.agent);
            self.record(observer, EventKind::Observe, &ptype, view.as_ref(), None, None, Some(target));
        }
    }
}

/// Executes `scenario` for `ticks` ticks with the given seed.
pub fn run(scenario: &Scenario, seed: u64, ticks: u64) -> Result<EventLog, SimError> {
    if ticks == 0 {
        return Err(SimError::InvalidScenario(vec!["ticks must be at least 1".into()]));
    }
    let mut sim = Simulation::new(scenario, seed)?;
    sim.run_until(ticks);
    Ok(sim.into_log())
}
