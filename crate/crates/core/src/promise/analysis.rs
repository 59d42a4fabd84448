use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::graph::{PromiseGraph, PromiseId};
use super::{AgentId, Alphabet, Promise, PromiseType, Scope};

/// Complementary offer/acceptance pair of one type between two agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub offer: PromiseId,
    pub acceptance: PromiseId,
    /// Symbols that can actually be transmitted, in the receiver's language.
    pub overlap: Alphabet,
}

impl Binding {
    /// A binding forms a channel only if its overlap is non-empty.
    pub fn is_usable(&self) -> bool {
        !self.overlap.is_empty()
    }
}

/// Intersection of an offered and an accepted alphabet.
pub fn channel_overlap(offer: &Alphabet, accept: &Alphabet) -> Alphabet {
    offer.intersection(accept)
}

fn binding_for(graph: &PromiseGraph, offer_id: PromiseId, offer: &Promise) -> Option<Binding> {
    let acceptance = graph.acceptance(&offer.promisee, &offer.giver, offer.ptype())?;
    let offered: Alphabet = offer
        .body
        .alphabet()
        .iter()
        .map(|s| graph.translate(&offer.giver, &offer.promisee, offer.ptype(), s))
        .collect();
    let overlap = channel_overlap(&offered, graph.promise(acceptance).body.alphabet());
    Some(Binding { offer: offer_id, acceptance, overlap })
}

/// Every offer/acceptance pair with matching endpoints and type, ordered by
/// (giver, promisee, type) of the offer. Unusable pairs are included.
pub fn find_bindings(graph: &PromiseGraph) -> Vec<Binding> {
    let mut out: Vec<(&AgentId, &AgentId, &PromiseType, Binding)> = graph
        .promises()
        .filter(|(_, p)| p.is_offer())
        .filter_map(|(id, p)| {
            binding_for(graph, id, p).map(|b| (&p.giver, &p.promisee, p.ptype(), b))
        })
        .collect();
    out.sort_by(|a, b| (a.0, a.1, a.2, a.3.offer).cmp(&(b.0, b.1, b.2, b.3.offer)));
    out.into_iter().map(|(_, _, _, b)| b).collect()
}

/// Agents with standing to assess `promise`: its promisee plus the scope.
pub fn resolve_scope(graph: &PromiseGraph, promise: &Promise) -> BTreeSet<AgentId> {
    let mut out = BTreeSet::from([promise.promisee.clone()]);
    match &promise.scope {
        Scope::None => {}
        Scope::Agents(a) => out.extend(a.iter().cloned()),
        Scope::All => out.extend(graph.agents().iter().cloned()),
    }
    out
}

/// Influence edges `(from, to)`: one per usable binding.
fn influence_edges(graph: &PromiseGraph) -> BTreeSet<(AgentId, AgentId)> {
    find_bindings(graph)
        .into_iter()
        .filter(Binding::is_usable)
        .map(|b| {
            let p = graph.promise(b.offer);
            (p.giver.clone(), p.promisee.clone())
        })
        .collect()
}

/// Agents that can influence `agent` through chains of usable bindings.
///
/// An edge X -> Y exists only where Y accepts from X; an agent that accepts
/// nothing has an empty closure. The agent itself is never included.
pub fn causal_closure(graph: &PromiseGraph, agent: &AgentId) -> BTreeSet<AgentId> {
    let mut preds: BTreeMap<&AgentId, Vec<&AgentId>> = BTreeMap::new();
    let edges = influence_edges(graph);
    for (from, to) in &edges {
        preds.entry(to).or_default().push(from);
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([agent]);
    while let Some(a) = queue.pop_front() {
        for &p in preds.get(a).map(Vec::as_slice).unwrap_or(&[]) {
            if p != agent && seen.insert(p.clone()) {
                queue.push_back(p);
            }
        }
    }
    seen
}

/// Extra condition accepted by an intermediary from outside the chain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EnvironmentInput {
    pub at: AgentId,
    pub source: AgentId,
    pub ptype: PromiseType,
}

/// Path `agents[0] -> ... -> agents[n]` with `hop_types[i]` offered by
/// `agents[i]` to `agents[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub agents: Vec<AgentId>,
    pub hop_types: Vec<PromiseType>,
    pub environment: Vec<EnvironmentInput>,
}

impl Chain {
    /// Builds a chain by hand, e.g. for a broken relay that
    /// [`detect_chains`] would not report.
    pub fn new(agents: Vec<AgentId>, hop_types: Vec<PromiseType>) -> Self {
        assert_eq!(agents.len(), hop_types.len() + 1, "one hop type per hop");
        Chain { agents, hop_types, environment: Vec::new() }
    }

    pub fn source(&self) -> &AgentId {
        &self.agents[0]
    }

    pub fn sink(&self) -> &AgentId {
        self.agents.last().expect("chain has agents")
    }
}

#[derive(Clone)]
struct Hop<'g> {
    from: &'g AgentId,
    to: &'g AgentId,
    offer: &'g Promise,
}

/// Maximal relay paths S -> I1 -> ... -> R.
///
/// Every hop is a usable binding and every intermediary's onward offer is
/// conditioned on the type it accepts upstream. Observability types are
/// acknowledgments, not relays, and are ignored.
pub fn detect_chains(graph: &PromiseGraph) -> Vec<Chain> {
    let hops: Vec<Hop<'_>> = find_bindings(graph)
        .into_iter()
        .filter(Binding::is_usable)
        .map(|b| graph.promise(b.offer))
        .filter(|p| !p.ptype().is_observability())
        .map(|p| Hop { from: &p.giver, to: &p.promisee, offer: p })
        .collect();

    let mut paths: Vec<Vec<usize>> = Vec::new();
    fn extend(hops: &[Hop<'_>], path: &mut Vec<usize>, paths: &mut Vec<Vec<usize>>) {
        let last = &hops[*path.last().expect("non-empty path")];
        let mut extended = false;
        for (i, next) in hops.iter().enumerate() {
            let relays = next.from == last.to && next.offer.conditions.contains(last.offer.ptype());
            let revisits = next.to == hops[path[0]].from || path.iter().any(|&h| hops[h].to == next.to);
            if relays && !revisits {
                path.push(i);
                extend(hops, path, paths);
                path.pop();
                extended = true;
            }
        }
        if !extended && path.len() >= 2 {
            paths.push(path.clone());
        }
    }
    for i in 0..hops.len() {
        extend(&hops, &mut vec![i], &mut paths);
    }

    // Drop paths that are contiguous pieces of longer ones.
    let maximal: Vec<&Vec<usize>> = paths
        .iter()
        .filter(|p| {
            !paths.iter().any(|q| q.len() > p.len() && q.windows(p.len()).any(|w| w == p.as_slice()))
        })
        .collect();

    let mut chains: Vec<Chain> = maximal
        .into_iter()
        .map(|path| {
            let mut agents = vec![hops[path[0]].from.clone()];
            agents.extend(path.iter().map(|&h| hops[h].to.clone()));
            let hop_types: Vec<PromiseType> =
                path.iter().map(|&h| hops[h].offer.ptype().clone()).collect();
            let mut environment = Vec::new();
            for w in 1..path.len() {
                let relay = hops[path[w]].offer;
                let upstream = &hop_types[w - 1];
                for cond in relay.conditions.iter().filter(|c| *c != upstream) {
                    for h in hops.iter().filter(|h| h.to == &relay.giver && h.offer.ptype() == cond) {
                        environment.push(EnvironmentInput {
                            at: relay.giver.clone(),
                            source: h.from.clone(),
                            ptype: cond.clone(),
                        });
                    }
                }
            }
            environment.sort();
            Chain { agents, hop_types, environment }
        })
        .collect();
    chains.sort_by(|a, b| (&a.agents, &a.hop_types).cmp(&(&b.agents, &b.hop_types)));
    chains.dedup();
    chains
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promise::{Body, Scope};

    fn body(t: &str, syms: &[&str]) -> Body {
        Body::new(t.parse().unwrap(), Alphabet::from_names(syms).unwrap())
    }

    fn ids(names: &[&str]) -> BTreeSet<AgentId> {
        names.iter().map(|n| n.parse().unwrap()).collect()
    }

    fn graph(names: &[&str], promises: Vec<Promise>) -> PromiseGraph {
        let mut g = PromiseGraph::new(ids(names));
        for p in promises {
            g.add_promise(p);
        }
        g
    }

    fn chain_graph(with_upstream_acceptance: bool) -> PromiseGraph {
        let abcd = ["A", "B", "C", "D"];
        let mut ps = vec![
            Promise::offer("S", body("b_S", &abcd), "I").unwrap(),
            Promise::offer("I", body("b_I", &abcd), "R")
                .unwrap()
                .with_conditions(["b_S".parse().unwrap()]),
            Promise::accept("R", body("b_I", &abcd), "I").unwrap(),
        ];
        if with_upstream_acceptance {
            ps.push(Promise::accept("I", body("b_S", &abcd), "S").unwrap());
        }
        graph(&["S", "I", "R"], ps)
    }

    #[test]
    fn overlap_of_rgb_and_g_is_g() {
        let rgb = Alphabet::from_names(&["R", "G", "B"]).unwrap();
        let g = Alphabet::from_names(&["G"]).unwrap();
        assert_eq!(channel_overlap(&rgb, &g), g);
        assert_eq!(channel_overlap(&rgb, &rgb), rgb);
        let r = Alphabet::from_names(&["R"]).unwrap();
        assert!(channel_overlap(&r, &g).is_empty());
    }

    #[test]
    fn bindings_partial_disjoint_and_missing() {
        let g = graph(
            &["S", "R"],
            vec![
                Promise::offer("S", body("tau", &["R", "G", "B"]), "R").unwrap(),
                Promise::accept("R", body("tau", &["G"]), "S").unwrap(),
            ],
        );
        let b = find_bindings(&g);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].overlap, Alphabet::from_names(&["G"]).unwrap());
        assert!(b[0].is_usable());

        let g = graph(
            &["S", "R"],
            vec![
                Promise::offer("S", body("tau", &["R"]), "R").unwrap(),
                Promise::accept("R", body("tau", &["G"]), "S").unwrap(),
            ],
        );
        let b = find_bindings(&g);
        assert_eq!(b.len(), 1);
        assert!(!b[0].is_usable());

        let g = graph(&["S", "R"], vec![Promise::offer("S", body("tau", &["R"]), "R").unwrap()]);
        assert!(find_bindings(&g).is_empty());
    }

    #[test]
    fn correspondence_maps_offer_into_receiver_language() {
        let mut g = graph(
            &["S", "R"],
            vec![
                Promise::offer("S", body("tau", &["R", "G", "B"]), "R").unwrap(),
                Promise::accept("R", body("tau", &["vert"]), "S").unwrap(),
            ],
        );
        assert!(!find_bindings(&g)[0].is_usable());
        g.set_correspondence(
            "S".parse().unwrap(),
            "R".parse().unwrap(),
            "tau".parse().unwrap(),
            [("G".parse().unwrap(), "vert".parse().unwrap())].into(),
        );
        assert_eq!(find_bindings(&g)[0].overlap, Alphabet::from_names(&["vert"]).unwrap());
    }

    #[test]
    fn scope_adds_observers_to_promisee() {
        let g = graph(&["S", "R", "T"], vec![]);
        let p = Promise::offer("S", body("b", &["x"]), "R").unwrap();
        assert_eq!(resolve_scope(&g, &p), ids(&["R"]));
        let p = p.with_scope(Scope::agents(["T".parse().unwrap()]));
        assert_eq!(resolve_scope(&g, &p), ids(&["R", "T"]));
        let p = p.with_scope(Scope::All);
        assert_eq!(resolve_scope(&g, &p), ids(&["S", "R", "T"]));
    }

    #[test]
    fn closure_follows_receptor_edges_only() {
        let case1 = graph(&["S", "R"], vec![Promise::offer("S", body("b", &["x"]), "R").unwrap()]);
        assert!(causal_closure(&case1, &"R".parse().unwrap()).is_empty());

        let full = chain_graph(true);
        assert_eq!(causal_closure(&full, &"R".parse().unwrap()), ids(&["S", "I"]));

        let cut = chain_graph(false);
        assert_eq!(causal_closure(&cut, &"R".parse().unwrap()), ids(&["I"]));
    }

    #[test]
    fn chain_detection() {
        let chains = detect_chains(&chain_graph(true));
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].agents, vec!["S".parse().unwrap(), "I".parse().unwrap(), "R".parse().unwrap()]);
        assert!(chains[0].environment.is_empty());

        assert!(detect_chains(&chain_graph(false)).is_empty());

        let plain = graph(
            &["S", "R"],
            vec![
                Promise::offer("S", body("b", &["x"]), "R").unwrap(),
                Promise::accept("R", body("b", &["x"]), "S").unwrap(),
            ],
        );
        assert!(detect_chains(&plain).is_empty());
    }

    #[test]
    fn chain_reports_environment_sources() {
        let abcd = ["A", "B", "C", "D"];
        let g = graph(
            &["S", "I", "R", "E"],
            vec![
                Promise::offer("S", body("b_S", &abcd), "I").unwrap(),
                Promise::accept("I", body("b_S", &abcd), "S").unwrap(),
                Promise::offer("E", body("b_E", &abcd), "I").unwrap(),
                Promise::accept("I", body("b_E", &abcd), "E").unwrap(),
                Promise::offer("I", body("b_I", &abcd), "R")
                    .unwrap()
                    .with_conditions(["b_S".parse().unwrap(), "b_E".parse().unwrap()]),
                Promise::accept("R", body("b_I", &abcd), "I").unwrap(),
            ],
        );
        let chains = detect_chains(&g);
        // E -> I -> R is a chain of its own: I's offer is conditioned on b_E too.
        let main = chains.iter().find(|c| c.source().as_str() == "S").unwrap();
        assert_eq!(main.agents.len(), 3);
        assert_eq!(
            main.environment,
            vec![EnvironmentInput {
                at: "I".parse().unwrap(),
                source: "E".parse().unwrap(),
                ptype: "b_E".parse().unwrap()
            }]
        );
    }
}
