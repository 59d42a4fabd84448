//! Entropy, mutual information and the tests built on them.
//!
//! Every measure is in bits and generic over the floating point type.

mod calibration;
mod chain;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use calibration::{calibration_check, CalibrationVerdict};
pub use chain::{chain_analysis, ChainReport};

use crate::assessment::{EmpiricalDist, JointDist, TrustFlag};
use crate::num::{xlog2x, Scalar};

/// Independence tolerance used when a scenario does not set one.
pub const DEFAULT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InfoError {
    #[error("undefined on an empty distribution")]
    UndefinedOnEmpty,
    #[error("missing observability: {0}")]
    MissingObservability(String),
    #[error("pattern absent: {0}")]
    PatternAbsent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    PlugIn,
    /// Plug-in minus the Miller–Madow term, floored at zero.
    BiasCorrected,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::PlugIn => "plug-in",
            Estimator::BiasCorrected => "bias-corrected",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shannon entropy of a count vector.
pub fn entropy_of_counts<T: Scalar>(counts: &[u64]) -> Result<T, InfoError> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(InfoError::UndefinedOnEmpty);
    }
    let n = T::from_count(n);
    let h = counts.iter().fold(T::zero(), |acc, &c| acc - xlog2x(T::from_count(c) / n));
    // -0 and round-off below zero both mean a point mass.
    Ok(h.max(T::zero()))
}

pub fn entropy<T: Scalar>(dist: &EmpiricalDist) -> Result<T, InfoError> {
    entropy_of_counts(&dist.count_vector())
}

/// Plug-in mutual information of a count matrix.
pub fn plugin_mi<T: Scalar>(counts: &[Vec<u64>]) -> Result<T, InfoError> {
    let rows: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let cols_n = counts.first().map_or(0, Vec::len);
    let cols: Vec<u64> = (0..cols_n).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
    let n: u64 = rows.iter().sum();
    if n == 0 {
        return Err(InfoError::UndefinedOnEmpty);
    }
    let nt = T::from_count(n);
    let mut terms = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = T::from_count(c);
            let ratio = c * nt / (T::from_count(rows[i]) * T::from_count(cols[j]));
            terms.push(c / nt * ratio.log2());
        }
    }
    // Each term is unchanged by transposition; summing in sorted order makes
    // the total unchanged too, bit for bit.
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mi = terms.into_iter().fold(T::zero(), |acc, t| acc + t);
    Ok(mi.max(T::zero()))
}

fn occupied(v: &[u64]) -> u64 {
    v.iter().filter(|&&c| c > 0).count() as u64
}

/// Miller–Madow bias of the plug-in estimate, counting only occupied rows
/// and columns.
pub fn miller_madow_bias<T: Scalar>(joint: &JointDist) -> Result<T, InfoError> {
    if joint.total == 0 {
        return Err(InfoError::UndefinedOnEmpty);
    }
    let kr = occupied(&joint.row_sums()).saturating_sub(1);
    let kc = occupied(&joint.col_sums()).saturating_sub(1);
    let ln2 = T::from_f64_lossy(std::f64::consts::LN_2);
    Ok(T::from_count(kr * kc) / (T::from_count(2 * joint.total) * ln2))
}

/// Slack allowed between estimates from the same ensemble size:
/// `(K - 1)^2 / (N ln 2)`.
pub fn estimator_slack<T: Scalar>(k: u64, n: u64) -> T {
    if n == 0 {
        return T::infinity();
    }
    let k1 = k.saturating_sub(1);
    T::from_count(k1 * k1) / (T::from_count(n) * T::from_f64_lossy(std::f64::consts::LN_2))
}

/// Largest number of occupied symbols on either side of a joint.
pub fn occupied_symbols(joint: &JointDist) -> u64 {
    occupied(&joint.row_sums()).max(occupied(&joint.col_sums()))
}

pub fn estimate<T: Scalar>(joint: &JointDist, estimator: Estimator) -> Result<T, InfoError> {
    let plug = plugin_mi::<T>(&joint.counts)?;
    Ok(match estimator {
        Estimator::PlugIn => plug,
        Estimator::BiasCorrected => (plug - miller_madow_bias::<T>(joint)?).max(T::zero()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceVerdict<T> {
    pub independent: bool,
    /// Bias-corrected estimate the verdict is based on.
    pub mutual_information: T,
    pub tolerance: T,
    pub n_samples: u64,
}

impl<T> IndependenceVerdict<T> {
    pub fn label(&self) -> &'static str {
        if self.independent {
            "INDEPENDENT"
        } else {
            "DEPENDENT"
        }
    }
}

/// INDEPENDENT iff the bias-corrected mutual information is within `tolerance`.
pub fn independence_test<T: Scalar>(joint: &JointDist, tolerance: T) -> Result<IndependenceVerdict<T>, InfoError> {
    let mi = estimate::<T>(joint, Estimator::BiasCorrected)?;
    Ok(IndependenceVerdict { independent: mi <= tolerance, mutual_information: mi, tolerance, n_samples: joint.total })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoReport<T> {
    pub entropy_source: T,
    pub entropy_receiver: T,
    pub mutual_information: T,
    pub independence: IndependenceVerdict<T>,
    pub estimator: Estimator,
    pub n_samples: u64,
    pub trust_flags: Vec<TrustFlag>,
}

/// Full report on one joint. The independence verdict always uses the
/// bias-corrected estimate at `tolerance`.
pub fn mutual_information_with<T: Scalar>(
    joint: &JointDist,
    estimator: Estimator,
    tolerance: T,
) -> Result<InfoReport<T>, InfoError> {
    Ok(InfoReport {
        entropy_source: entropy_of_counts(&joint.row_sums())?,
        entropy_receiver: entropy_of_counts(&joint.col_sums())?,
        mutual_information: estimate(joint, estimator)?,
        independence: independence_test(joint, tolerance)?,
        estimator,
        n_samples: joint.total,
        trust_flags: joint.trust_flags.clone(),
    })
}

pub fn mutual_information<T: Scalar>(joint: &JointDist, estimator: Estimator) -> Result<InfoReport<T>, InfoError> {
    mutual_information_with(joint, estimator, T::from_f64_lossy(DEFAULT_TOLERANCE))
}
