use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::assessment::{EmpiricalDist, JointDist};
use crate::InfoReport;

/// A scalar result of an analysis, addressable by key from expectations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    /// Serialized as `null`.
    Undefined,
    Number(f64),
    Word(String),
    Set(BTreeSet<String>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Undefined => f.write_str("undefined"),
            Value::Number(x) => write!(f, "{x}"),
            Value::Word(w) => f.write_str(w),
            Value::Set(s) => write!(f, "{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDist {
    pub name: String,
    pub dist: EmpiricalDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedJoint {
    pub name: String,
    pub joint: JointDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedInfo {
    pub name: String,
    pub report: InfoReport,
}

/// One checked expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub expectation: String,
    pub actual: Value,
    pub passed: bool,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "MET" } else { "VIOLATED" };
        write!(f, "{status:<8} {} (actual {})", self.expectation, self.actual)
    }
}

/// Result of analysing one log against its scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub scenario_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub ticks: u64,
    pub distributions: Vec<NamedDist>,
    pub joints: Vec<NamedJoint>,
    pub info_reports: Vec<NamedInfo>,
    pub verdicts: Vec<Verdict>,
    pub values: BTreeMap<String, Value>,
    /// Analyses that could not be computed, with the reason.
    pub notes: Vec<String>,
}

impl Report {
    pub fn all_met(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Flat `section,name,key,value` table of values and joint cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,name,key,value\n");
        let esc = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        for (k, v) in &self.values {
            out.push_str(&format!("value,-,{},{}\n", esc(k), esc(&v.to_string())));
        }
        for j in &self.joints {
            for (i, r) in j.joint.row_alphabet.iter().enumerate() {
                for (c, col) in j.joint.col_alphabet.iter().enumerate() {
                    out.push_str(&format!("joint,{},{r}|{col},{}\n", esc(&j.name), j.joint.counts[i][c]));
                }
            }
        }
        for v in &self.verdicts {
            out.push_str(&format!("verdict,-,{},{}\n", esc(&v.expectation), if v.passed { "MET" } else { "VIOLATED" }));
        }
        out
    }

    /// Human-readable summary: provenance, verdict lines, then notes.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "scenario {} (hash {}), seed {}, ticks {}, {}\n",
            self.scenario,
            &self.scenario_hash[..self.scenario_hash.len().min(12)],
            self.seed,
            self.ticks,
            self.tool_version
        );
        for i in &self.info_reports {
            let r = &i.report;
            out.push_str(&format!(
                "info {}: I = {:.6} bits ({}), H = {:.6} / {:.6}, N = {}, {}{}\n",
                i.name,
                r.mutual_information,
                r.estimator,
                r.entropy_source,
                r.entropy_receiver,
                r.n_samples,
                r.independence.label(),
                r.trust_flags.iter().map(|f| format!(" [{f}]")).collect::<String>()
            ));
        }
        for v in &self.verdicts {
            out.push_str(&format!("{v}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        let met = self.verdicts.iter().filter(|v| v.passed).count();
        out.push_str(&format!("{met}/{} expectations met\n", self.verdicts.len()));
        out
    }
}
