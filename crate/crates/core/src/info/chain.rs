use serde::{Deserialize, Serialize};

use super::{estimator_slack, mutual_information_with, occupied_symbols, Estimator, InfoError, InfoReport};
use crate::assessment::{joint_distribution, AssessError, ObserverConfig, Pairing, Target};
use crate::num::Scalar;
use crate::promise::{AgentId, Chain, PromiseGraph};
use crate::sim::EventLog;

/// Per-hop and end-to-end information along a relay chain, as one observer
/// sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport<T> {
    pub chain: Chain,
    pub observer: AgentId,
    pub pairing: Pairing,
    /// One report per hop, in chain order.
    pub hops: Vec<InfoReport<T>>,
    pub end_to_end: InfoReport<T>,
    /// Estimator slack allowed on the attenuation comparison.
    pub slack: T,
    /// End-to-end information does not exceed any hop by more than `slack`.
    pub attenuation_holds: bool,
}

/// The interiors compared along a chain: what each non-terminal agent
/// offers downstream, and what the terminal agent accepted.
pub fn chain_nodes(chain: &Chain) -> Vec<Target> {
    let mut nodes: Vec<Target> = chain
        .hop_types
        .iter()
        .zip(&chain.agents)
        .map(|(t, a)| Target::new(a.clone(), t.clone()))
        .collect();
    let last = chain.hop_types.last().expect("chain has a hop");
    nodes.push(Target::new(chain.sink().clone(), last.clone()));
    nodes
}

/// Mutual information along `chain` from `observer`'s joints.
///
/// All estimates are bias-corrected; the independence verdicts use
/// `tolerance`.
pub fn chain_analysis<T: Scalar>(
    log: &EventLog,
    chain: &Chain,
    graph: &PromiseGraph,
    observer: &AgentId,
    pairing: Pairing,
    sampling_period: u64,
    tolerance: T,
) -> Result<ChainReport<T>, InfoError> {
    let nodes = chain_nodes(chain);
    let joint = |a: &Target, b: &Target| {
        let config = ObserverConfig {
            observer: observer.clone(),
            targets: (a.clone(), b.clone()),
            sampling_period,
            pairing,
        };
        joint_distribution(log, &config, graph).map_err(|e| match e {
            AssessError::MissingObservability(m) => InfoError::MissingObservability(m),
            other => InfoError::MissingObservability(other.to_string()),
        })
    };

    let mut joints = Vec::new();
    for w in nodes.windows(2) {
        joints.push(joint(&w[0], &w[1])?);
    }
    let end = joint(&nodes[0], nodes.last().unwrap())?;

    let mut hops = Vec::new();
    for j in &joints {
        hops.push(mutual_information_with::<T>(j, Estimator::BiasCorrected, tolerance)?);
    }
    let end_to_end = mutual_information_with::<T>(&end, Estimator::BiasCorrected, tolerance)?;

    let all = joints.iter().chain(std::iter::once(&end));
    let k = all.clone().map(occupied_symbols).max().unwrap_or(0);
    let n = all.map(|j| j.total).min().unwrap_or(0);
    let slack: T = estimator_slack(k, n);
    let attenuation_holds =
        hops.iter().all(|h| end_to_end.mutual_information <= h.mutual_information + slack);

    Ok(ChainReport {
        chain: chain.clone(),
        observer: observer.clone(),
        pairing,
        hops,
        end_to_end,
        slack,
        attenuation_holds,
    })
}
