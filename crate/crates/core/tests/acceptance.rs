//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line before asserting.

use std::collections::BTreeSet;
use std::sync::Mutex;
use std::time::Instant;

use promise_info::assessment::{empirical_distribution, joint_distribution, AssessError, ObserverConfig};
use promise_info::info::{chain_analysis, entropy_of_counts, estimate, plugin_mi, Estimator};
use promise_info::promise::{Chain, Polarity, PromiseGraph};
use promise_info::scenario::{analyze, corpus_names, load_corpus, Scenario};
use promise_info::sim::{
    check_clock_ordering, ensemble, run, strip_acceptances, unconditional_emits, EventKind, RejectReason,
};
use promise_info::{AgentId, JointDist, Symbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria run one at a time so the timed ensemble is not competing with
/// its siblings for the CPU.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, title: &str, ok: bool, detail: String) {
    println!("{} criterion {n}: {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn scenario(name: &str) -> Scenario {
    load_corpus(name).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

fn observer(s: &Scenario, name: &str) -> ObserverConfig {
    s.observer(name).unwrap_or_else(|| panic!("no observer {name}")).config.clone()
}

fn id(s: &str) -> AgentId {
    AgentId::new(s).unwrap()
}

fn h2(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

#[test]
fn criterion_01_unbound_agents_share_no_information() {
    let _serial = serial();
    let s = scenario("case1_observed");
    let config = observer(&s, "o");
    let seeds: Vec<u64> = (1..=30).collect();
    let start = Instant::now();
    let results = ensemble(&s, &seeds, s.ticks, |_, log| {
        let joint = joint_distribution(&log, &config, &s.graph).unwrap();
        (joint.total, estimate::<f64>(&joint, Estimator::BiasCorrected).unwrap())
    })
    .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let mean = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    let max = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let all_n = results.iter().all(|r| r.0 == 100_000);
    verdict(
        1,
        "two unbound agents",
        all_n && mean <= 0.005 && max <= 0.02 && elapsed <= 10.0,
        format!("30 seeds, N=100000 each: {all_n}, mean MI {mean:.6} bits, max {max:.6} bits, {elapsed:.2} s"),
    );
}

#[test]
fn criterion_02_identity_channel_carries_two_bits() {
    let _serial = serial();
    let s = scenario("case2_ack");
    let log = run(&s, s.seed, s.ticks).unwrap();
    let joint = joint_distribution(&log, &observer(&s, "sent"), &s.graph).unwrap();
    let mi = estimate::<f64>(&joint, Estimator::PlugIn).unwrap();
    let ok = joint.total == 100_000 && joint.off_diagonal() == 0 && (mi - 2.0).abs() <= 0.01;
    verdict(
        2,
        "noiseless acknowledged channel",
        ok,
        format!("N={}, off-diagonal {}, MI {mi:.6} bits", joint.total, joint.off_diagonal()),
    );
}

#[test]
fn criterion_03_partial_overlap_admits_only_green() {
    let _serial = serial();
    let s = scenario("case2_partial_overlap");
    let log = run(&s, s.seed, s.ticks).unwrap();
    let r = id("R");
    let g = Symbol::new("G").unwrap();
    let events: Vec<_> = log.of_agent(&r).collect();
    let mut non_green = 0;
    let mut rejected_right = 0;
    for (k, e) in events.iter().enumerate() {
        if e.kind == EventKind::Deliver && e.symbol.as_ref() != Some(&g) {
            non_green += 1;
            let next = events.get(k + 1);
            if next.is_some_and(|n| {
                n.kind == EventKind::Reject && n.reason == Some(RejectReason::SymbolOutsideAlphabet)
            }) {
                rejected_right += 1;
            }
        }
    }
    let offer = s.graph.find(&id("S"), Polarity::Offer, &"tau".parse().unwrap(), &r).unwrap();
    let dist = empirical_distribution(&log, &r, s.graph.promise(offer), &s.graph).unwrap();
    let support: BTreeSet<String> = dist.support().iter().map(|x| x.to_string()).collect();
    let ok = non_green > 0 && rejected_right == non_green && support == BTreeSet::from(["G".to_string()]);
    verdict(
        3,
        "partial overlap",
        ok,
        format!("{rejected_right}/{non_green} non-G deliveries rejected outside alphabet, support {support:?}"),
    );
}

#[test]
fn criterion_04_binary_symmetric_channel() {
    let _serial = serial();
    let s = scenario("case2_bsc");
    let log = run(&s, s.seed, s.ticks).unwrap();
    let joint = joint_distribution(&log, &observer(&s, "sent"), &s.graph).unwrap();
    let mi = estimate::<f64>(&joint, Estimator::PlugIn).unwrap();
    let target = 1.0 - h2(0.1);
    verdict(
        4,
        "binary symmetric channel p=0.1",
        joint.total == 100_000 && (mi - target).abs() <= 0.02,
        format!("N={}, MI {mi:.6} bits, capacity {target:.6} bits", joint.total),
    );
}

#[test]
fn criterion_05_chains_attenuate() {
    let _serial = serial();
    let seeds: Vec<u64> = (1..=5).collect();
    let chain = Chain::new(vec![id("S"), id("I"), id("R")], vec!["b_S".parse().unwrap(), "b_I".parse().unwrap()]);
    let mut ends = Vec::new();
    let mut all_hold = true;
    let mut details = Vec::new();
    for (name, pairing) in [
        ("case3_clean", promise_info::Pairing::ByAcknowledgment),
        ("case3_env", promise_info::Pairing::ByAcknowledgment),
        ("case3_barrier", promise_info::Pairing::BySnapshot),
    ] {
        let s = scenario(name);
        let reports = ensemble(&s, &seeds, s.ticks, |_, log| {
            chain_analysis::<f64>(&log, &chain, &s.graph, &id("T"), pairing, 1, s.tolerance).unwrap()
        })
        .unwrap();
        for r in &reports {
            let hop_min = r.hops.iter().map(|h| h.mutual_information).fold(f64::INFINITY, f64::min);
            let n_ok = r.end_to_end.n_samples >= 50_000;
            all_hold &= n_ok && r.attenuation_holds && r.end_to_end.mutual_information <= hop_min + r.slack;
        }
        let worst = reports.iter().map(|r| r.end_to_end.mutual_information).fold(f64::NEG_INFINITY, f64::max);
        let best = reports.iter().map(|r| r.end_to_end.mutual_information).fold(f64::INFINITY, f64::min);
        details.push(format!("{name} end-to-end {best:.4}..{worst:.4}"));
        ends.push((best, worst));
    }
    let (clean_min, _) = ends[0];
    let (_, env_max) = ends[1];
    let (_, barrier_max) = ends[2];
    let ok = all_hold && barrier_max <= 0.01 && env_max < clean_min - 0.1;
    verdict(5, "chain attenuation", ok, format!("{} over 5 seeds each, hop bounds hold: {all_hold}", details.join(", ")));
}

#[test]
fn criterion_06_acceptances_do_not_touch_autonomous_emissions() {
    let _serial = serial();
    let mut checked = 0;
    let mut broken = Vec::new();
    for name in corpus_names() {
        let s = scenario(name);
        let base = run(&s, s.seed, s.ticks).unwrap();
        for agent in s.graph.agents() {
            let stripped = strip_acceptances(&s, agent);
            let log = run(&stripped, s.seed, s.ticks).unwrap();
            let before = unconditional_emits(&base, &s.graph, agent);
            let after = unconditional_emits(&log, &stripped.graph, agent);
            checked += 1;
            if before != after {
                broken.push(format!("{name}/{agent}"));
            }
        }
    }
    verdict(
        6,
        "autonomy of unconditional emissions",
        broken.is_empty(),
        format!("{checked} scenario/agent pairs, differing: {broken:?}"),
    );
}

#[test]
fn criterion_07_clock_ordering() {
    let _serial = serial();
    let mut violations = 0;
    let mut records = 0;
    for name in corpus_names() {
        let s = scenario(name);
        let log = run(&s, s.seed, s.ticks).unwrap();
        records += log.records.len();
        violations += check_clock_ordering(&log).len();
    }
    let s = scenario("case2_full_overlap");
    let mut forged = run(&s, s.seed, 50).unwrap();
    let k = forged.records.iter().position(|r| r.kind == EventKind::Accept).unwrap();
    forged.records[k].local_time = 0;
    let forged_found = check_clock_ordering(&forged).len();
    verdict(
        7,
        "clock ordering",
        violations == 0 && forged_found >= 1,
        format!("{records} corpus records, {violations} violations; forged log yields {forged_found}"),
    );
}

#[test]
fn criterion_08_joint_needs_observability_promises() {
    let _serial = serial();
    let s = scenario("case2_ack");
    let log = run(&s, s.seed, 1000).unwrap();
    let mut bare = PromiseGraph::new(s.graph.agents().iter().cloned());
    for (_, p) in s.graph.promises().filter(|(_, p)| !p.ptype().is_observability()) {
        bare.add_promise(p.clone());
    }
    let result = joint_distribution(&log, &observer(&s, "sent"), &bare);
    verdict(
        8,
        "observability gate",
        matches!(result, Err(AssessError::MissingObservability(_))),
        format!("{result:?}").chars().take(120).collect(),
    );
}

fn brute_entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n as f64;
            h += p * (1.0 / p).log2();
        }
    }
    h
}

fn brute_mi(m: &[Vec<u64>]) -> f64 {
    let n: u64 = m.iter().flatten().sum();
    let n = n as f64;
    let mut total = 0.0;
    for row in m {
        let px: f64 = row.iter().sum::<u64>() as f64 / n;
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let py: f64 = m.iter().map(|r| r[j]).sum::<u64>() as f64 / n;
            let pxy = c as f64 / n;
            total += pxy * (pxy / (px * py)).log2();
        }
    }
    total
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() <= 1e-15
}

#[test]
fn criterion_09_oracle_equivalence() {
    let _serial = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for _ in 0..100 {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        let n = rng.random_range(1..=1000u64);
        let mut m = vec![vec![0u64; cols]; rows];
        for _ in 0..n {
            m[rng.random_range(0..rows)][rng.random_range(0..cols)] += 1;
        }
        let joint = JointDist::from_matrix(id("O"), m.clone());
        let pairs = [
            (plugin_mi::<f64>(&m).unwrap(), brute_mi(&m)),
            (entropy_of_counts::<f64>(&joint.row_sums()).unwrap(), brute_entropy(&joint.row_sums())),
            (entropy_of_counts::<f64>(&joint.col_sums()).unwrap(), brute_entropy(&joint.col_sums())),
        ];
        for (ours, oracle) in pairs {
            let ours = ours.max(0.0);
            let oracle = oracle.max(0.0);
            worst = worst.max((ours - oracle).abs() / oracle.abs().max(1e-300));
            if !close(ours, oracle) {
                mismatches += 1;
            }
        }
    }
    verdict(
        9,
        "oracle equivalence",
        mismatches == 0,
        format!("100 random joints up to 8x8, {mismatches} mismatches, worst relative gap {worst:.2e}"),
    );
}

#[test]
fn criterion_10_runs_are_deterministic() {
    let _serial = serial();
    let mut differing = Vec::new();
    for name in corpus_names() {
        let s = scenario(name);
        let a = run(&s, s.seed, s.ticks).unwrap();
        let b = run(&s, s.seed, s.ticks).unwrap();
        let same_log = a.to_text() == b.to_text();
        let same_report = analyze(&s, &a).to_json() == analyze(&s, &b).to_json();
        if !(same_log && same_report) {
            differing.push(name);
        }
    }
    verdict(
        10,
        "determinism",
        differing.is_empty(),
        format!("{} corpus scenarios run twice, differing: {differing:?}", corpus_names().len()),
    );
}
