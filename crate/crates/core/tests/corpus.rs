use promise_info::scenario::{analyze, corpus_names, load_corpus, parse_scenario, render};
use promise_info::sim::run;

#[test]
fn corpus_scenarios_round_trip_through_render() {
    for name in corpus_names() {
        let s = load_corpus(name).unwrap();
        let again = parse_scenario(&render(&s)).unwrap_or_else(|d| panic!("{name}: {d:?}"));
        assert_eq!(again, s, "{name}");
    }
}

#[test]
fn corpus_expectations_hold() {
    let mut failures = Vec::new();
    for name in corpus_names() {
        let s = load_corpus(name).unwrap();
        let log = run(&s, s.seed, s.ticks).unwrap();
        let report = analyze(&s, &log);
        for v in report.verdicts.iter().filter(|v| !v.passed) {
            failures.push(format!("{name}: {v}"));
        }
        for n in &report.notes {
            println!("{name}: note {n}");
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
