use proptest::prelude::*;

use promise_info::info::{entropy_of_counts, estimate, plugin_mi, Estimator};
use promise_info::promise::{channel_overlap, find_bindings, Alphabet, Body, Promise, PromiseGraph, Symbol};
use promise_info::scenario::{corpus_names, load_corpus, parse_scenario, render};
use promise_info::sim::{run, ConditionWindow, Delay, EventLog, LinkModel};
use promise_info::{AgentId, EmpiricalDist, JointDist};

const SYMBOLS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

fn alphabet() -> impl Strategy<Value = Alphabet> {
    proptest::sample::subsequence(SYMBOLS.to_vec(), 1..=SYMBOLS.len())
        .prop_map(|v| Alphabet::from_names(&v).unwrap())
}

fn matrix() -> impl Strategy<Value = Vec<Vec<u64>>> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(0u64..40, c), r)
            .prop_filter("non-empty", |m| m.iter().flatten().any(|&x| x > 0))
    })
}

fn id(s: &str) -> AgentId {
    AgentId::new(s).unwrap()
}

proptest! {
    #[test]
    fn overlap_is_the_common_part(a in alphabet(), b in alphabet()) {
        let ab = channel_overlap(&a, &b);
        prop_assert_eq!(&ab, &channel_overlap(&b, &a));
        prop_assert!(ab.is_subset(&a) && ab.is_subset(&b));
        prop_assert_eq!(channel_overlap(&ab, &a), ab.clone());
        prop_assert_eq!(channel_overlap(&a, &a), a.clone());
    }

    #[test]
    fn binding_is_usable_exactly_when_alphabets_meet(a in alphabet(), b in alphabet()) {
        let t = "tau".parse().unwrap();
        let mut g = PromiseGraph::new([id("S"), id("R")]);
        g.add_promise(Promise::offer("S", Body::new(t, a.clone()), "R").unwrap());
        g.add_promise(Promise::accept("R", Body::new("tau".parse().unwrap(), b.clone()), "S").unwrap());
        let bindings = find_bindings(&g);
        prop_assert_eq!(bindings.len(), 1);
        prop_assert_eq!(bindings[0].is_usable(), !a.intersection(&b).is_empty());
    }

    #[test]
    fn mutual_information_is_symmetric(m in matrix()) {
        let j = JointDist::from_matrix(id("O"), m);
        let t = j.transpose();
        for est in [Estimator::PlugIn, Estimator::BiasCorrected] {
            prop_assert_eq!(estimate::<f64>(&j, est).unwrap(), estimate::<f64>(&t, est).unwrap());
        }
    }

    #[test]
    fn mutual_information_is_bounded(m in matrix()) {
        let j = JointDist::from_matrix(id("O"), m.clone());
        let mi = plugin_mi::<f64>(&m).unwrap();
        let hr = entropy_of_counts::<f64>(&j.row_sums()).unwrap();
        let hc = entropy_of_counts::<f64>(&j.col_sums()).unwrap();
        prop_assert!(mi >= 0.0);
        prop_assert!(mi <= hr.min(hc) + 1e-12, "{} > min({}, {})", mi, hr, hc);
        prop_assert!(estimate::<f64>(&j, Estimator::BiasCorrected).unwrap() >= 0.0);
    }

    #[test]
    fn single_precision_tracks_double(m in matrix()) {
        let a = plugin_mi::<f64>(&m).unwrap();
        let b = plugin_mi::<f32>(&m).unwrap() as f64;
        prop_assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn joint_tables_round_trip(m in matrix()) {
        let j = JointDist::from_matrix(id("O"), m);
        prop_assert_eq!(JointDist::from_text(&j.to_text()).unwrap(), j);
    }

    #[test]
    fn distribution_tables_round_trip(draws in proptest::collection::vec(0usize..4, 0..50)) {
        let mut d = EmpiricalDist::new("tau".parse().unwrap(), id("R"), Alphabet::from_names(&["A", "B"]).unwrap());
        for k in draws {
            d.add(&Symbol::new(SYMBOLS[k]).unwrap());
        }
        prop_assert_eq!(EmpiricalDist::from_text(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn parsing_never_panics(text in "\\PC{0,300}") {
        let _ = parse_scenario(&text);
    }

    #[test]
    fn parsing_scrambled_corpus_lines_never_panics(
        pick in proptest::collection::vec((0usize..11, 0usize..64), 0..40),
    ) {
        let texts: Vec<String> = corpus_names().iter().map(|n| promise_info::scenario::corpus(n).unwrap()).collect();
        let lines: Vec<&str> = texts.iter().flat_map(|t| t.lines()).collect();
        let text: Vec<&str> = pick.iter().map(|(a, b)| lines[(a * 64 + b) % lines.len()]).collect();
        let _ = parse_scenario(&text.join("\n"));
    }

    #[test]
    fn scenarios_round_trip_through_render(
        which in 0usize..11,
        seed in any::<u64>(),
        ticks in 1u64..1_000_000,
        tolerance in 0.0f64..1.0,
        window in proptest::option::of(1u64..20),
        delay in (1u64..5, 0u64..5),
        loss in 0.0f64..0.5,
    ) {
        let names = corpus_names();
        let mut s = load_corpus(names[which % names.len()]).unwrap();
        s.seed = seed;
        s.ticks = ticks;
        s.tolerance = tolerance;
        s.window = window.map_or(ConditionWindow::OneShot, ConditionWindow::Events);
        s.links.default = LinkModel {
            delay: if delay.1 == 0 { Delay::Fixed(delay.0) } else { Delay::Uniform { min: delay.0, max: delay.0 + delay.1 } },
            loss,
            corruption: None,
        };
        let text = render(&s);
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(render(&back), text);
    }
}

#[test]
fn logs_round_trip_through_text() {
    for name in corpus_names() {
        let s = load_corpus(name).unwrap();
        let log = run(&s, 3, 60).unwrap();
        assert_eq!(EventLog::from_text(&log.to_text()).unwrap(), log, "{name}");
    }
}
