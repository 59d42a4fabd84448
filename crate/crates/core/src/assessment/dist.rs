use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::promise::{AgentId, Alphabet, PromiseType, Symbol};

/// Provenance caveat carried from a joint into every report built on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrustFlag {
    #[serde(rename = "UNDERSAMPLED-OBSERVER")]
    UndersampledObserver,
}

impl TrustFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            TrustFlag::UndersampledObserver => "UNDERSAMPLED-OBSERVER",
        }
    }
}

impl fmt::Display for TrustFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing {0}")]
    Missing(&'static str),
}

/// Frequency table of one assessor's observations of one promise type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    pub ptype: PromiseType,
    pub assessor: AgentId,
    /// Declared support united with every observed symbol.
    pub alphabet: Alphabet,
    pub counts: BTreeMap<Symbol, u64>,
    pub total: u64,
}

impl EmpiricalDist {
    pub fn new(ptype: PromiseType, assessor: AgentId, alphabet: Alphabet) -> Self {
        EmpiricalDist { ptype, assessor, alphabet, counts: BTreeMap::new(), total: 0 }
    }

    pub fn add(&mut self, symbol: &Symbol) {
        if !self.alphabet.contains(symbol) {
            self.alphabet.insert(symbol.clone());
        }
        *self.counts.entry(symbol.clone()).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn count(&self, symbol: &Symbol) -> u64 {
        self.counts.get(symbol).copied().unwrap_or(0)
    }

    /// Relative frequency; `None` on an empty table.
    pub fn probability(&self, symbol: &Symbol) -> Option<f64> {
        (self.total > 0).then(|| self.count(symbol) as f64 / self.total as f64)
    }

    /// Symbols with non-zero count.
    pub fn support(&self) -> Alphabet {
        self.counts.iter().filter(|(_, &c)| c > 0).map(|(s, _)| s.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Counts in alphabet order, zeros included.
    pub fn count_vector(&self) -> Vec<u64> {
        self.alphabet.iter().map(|s| self.count(s)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "dist\tassessor={}\tptype={}\talphabet={}\tN={}\n",
            self.assessor, self.ptype, self.alphabet, self.total
        );
        for s in self.alphabet.iter() {
            out.push_str(&format!("{s}\t{}\n", self.count(s)));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TableParseError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(TableParseError::Missing("header"))?;
        let h = parse_header(header, "dist", 1)?;
        let ptype = parse_field(&h, "ptype", 1, PromiseType::new)?;
        let assessor = parse_field(&h, "assessor", 1, AgentId::new)?;
        let alphabet = parse_alphabet(h.get("alphabet").ok_or(TableParseError::Missing("alphabet"))?, 1)?;
        let n: u64 = parse_field(&h, "N", 1, |s| s.parse::<u64>())?;
        let mut dist = EmpiricalDist::new(ptype, assessor, alphabet);
        for (i, line) in lines {
            let err = |m: &str| TableParseError::Line { line: i + 1, message: m.to_string() };
            let (sym, count) = line.split_once('\t').ok_or_else(|| err("expected symbol and count"))?;
            let sym = Symbol::new(sym).map_err(|e| err(&e.to_string()))?;
            if !dist.alphabet.contains(&sym) {
                return Err(err("symbol outside the declared alphabet"));
            }
            let count: u64 = count.trim().parse().map_err(|_| err("bad count"))?;
            if count > 0 {
                dist.counts.insert(sym, count);
            }
            dist.total += count;
        }
        if dist.total != n {
            return Err(TableParseError::Line { line: 1, message: format!("N={n} but counts sum to {}", dist.total) });
        }
        Ok(dist)
    }
}

/// Joint frequency table of two interiors as seen by one assessor.
///
/// Construction always names the assessor: there is no view-from-nowhere
/// joint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointDist {
    pub assessor: AgentId,
    pub row_label: String,
    pub col_label: String,
    pub row_alphabet: Alphabet,
    pub col_alphabet: Alphabet,
    /// Row-major counts indexed by alphabet position.
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
    pub trust_flags: Vec<TrustFlag>,
}

impl JointDist {
    pub fn new(
        assessor: AgentId,
        row_label: impl Into<String>,
        col_label: impl Into<String>,
        row_alphabet: Alphabet,
        col_alphabet: Alphabet,
    ) -> Self {
        let counts = vec![vec![0; col_alphabet.len()]; row_alphabet.len()];
        JointDist {
            assessor,
            row_label: row_label.into(),
            col_label: col_label.into(),
            row_alphabet,
            col_alphabet,
            counts,
            total: 0,
            trust_flags: Vec::new(),
        }
    }

    /// Builds a joint from a count matrix with generated symbol names
    /// `r0, r1, …` and `c0, c1, …`. Intended for tests and numerical work.
    pub fn from_matrix(assessor: AgentId, counts: Vec<Vec<u64>>) -> Self {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        let names = |p: &str, n: usize| -> Alphabet {
            (0..n).map(|i| Symbol::new(&format!("{p}{i}")).expect("generated names are valid")).collect()
        };
        let mut j = JointDist::new(assessor, "row", "col", names("r", rows), names("c", cols));
        j.total = counts.iter().flatten().sum();
        j.counts = counts;
        j
    }

    fn position(alphabet: &Alphabet, s: &Symbol) -> Option<usize> {
        alphabet.iter().position(|x| x == s)
    }

    /// Records one paired observation, widening the alphabets if needed.
    pub fn add(&mut self, row: &Symbol, col: &Symbol) {
        if !self.row_alphabet.contains(row) {
            self.row_alphabet.insert(row.clone());
            let at = Self::position(&self.row_alphabet, row).unwrap();
            self.counts.insert(at, vec![0; self.col_alphabet.len()]);
        }
        if !self.col_alphabet.contains(col) {
            self.col_alphabet.insert(col.clone());
            let at = Self::position(&self.col_alphabet, col).unwrap();
            for r in &mut self.counts {
                r.insert(at, 0);
            }
        }
        let i = Self::position(&self.row_alphabet, row).unwrap();
        let j = Self::position(&self.col_alphabet, col).unwrap();
        self.counts[i][j] += 1;
        self.total += 1;
    }

    pub fn get(&self, row: &Symbol, col: &Symbol) -> u64 {
        match (Self::position(&self.row_alphabet, row), Self::position(&self.col_alphabet, col)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.col_alphabet.len()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn row_marginal(&self, ptype: PromiseType) -> EmpiricalDist {
        marginal(ptype, &self.assessor, &self.row_alphabet, &self.row_sums())
    }

    pub fn col_marginal(&self, ptype: PromiseType) -> EmpiricalDist {
        marginal(ptype, &self.assessor, &self.col_alphabet, &self.col_sums())
    }

    pub fn transpose(&self) -> JointDist {
        let mut t = JointDist::new(
            self.assessor.clone(),
            self.col_label.clone(),
            self.row_label.clone(),
            self.col_alphabet.clone(),
            self.row_alphabet.clone(),
        );
        for (j, row) in t.counts.iter_mut().enumerate() {
            for (i, c) in row.iter_mut().enumerate() {
                *c = self.counts[i][j];
            }
        }
        t.total = self.total;
        t.trust_flags = self.trust_flags.clone();
        t
    }

    /// Count of pairs whose row and column symbols differ by name.
    pub fn off_diagonal(&self) -> u64 {
        let mut n = 0;
        for (i, r) in self.row_alphabet.iter().enumerate() {
            for (j, c) in self.col_alphabet.iter().enumerate() {
                if r != c {
                    n += self.counts[i][j];
                }
            }
        }
        n
    }

    /// Total-variation distance from the diagonal: the fraction of mass off it.
    pub fn off_diagonal_mass(&self) -> Option<f64> {
        (self.total > 0).then(|| self.off_diagonal() as f64 / self.total as f64)
    }

    pub fn is_trusted(&self) -> bool {
        self.trust_flags.is_empty()
    }

    pub fn to_text(&self) -> String {
        let flags = if self.trust_flags.is_empty() {
            "-".to_string()
        } else {
            self.trust_flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")
        };
        let mut out = format!(
            "joint\tassessor={}\trows={}\tcols={}\trow_alphabet={}\tcol_alphabet={}\tN={}\tflags={}\n",
            self.assessor, self.row_label, self.col_label, self.row_alphabet, self.col_alphabet, self.total, flags
        );
        for (i, r) in self.row_alphabet.iter().enumerate() {
            out.push_str(r.as_str());
            for c in &self.counts[i] {
                out.push_str(&format!("\t{c}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TableParseError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(TableParseError::Missing("header"))?;
        let h = parse_header(header, "joint", 1)?;
        let assessor = parse_field(&h, "assessor", 1, AgentId::new)?;
        let get = |k: &'static str| h.get(k).cloned().ok_or(TableParseError::Missing(k));
        let row_alphabet = parse_alphabet(&get("row_alphabet")?, 1)?;
        let col_alphabet = parse_alphabet(&get("col_alphabet")?, 1)?;
        let n: u64 = parse_field(&h, "N", 1, |s| s.parse::<u64>())?;
        let mut j = JointDist::new(assessor, get("rows")?, get("cols")?, row_alphabet, col_alphabet);
        for f in get("flags")?.split(',') {
            match f {
                "-" => {}
                "UNDERSAMPLED-OBSERVER" => j.trust_flags.push(TrustFlag::UndersampledObserver),
                other => {
                    return Err(TableParseError::Line { line: 1, message: format!("unknown flag {other}") })
                }
            }
        }
        let mut seen = 0;
        for (i, line) in lines {
            let err = |m: String| TableParseError::Line { line: i + 1, message: m };
            let mut fields = line.split('\t');
            let sym = Symbol::new(fields.next().unwrap_or("")).map_err(|e| err(e.to_string()))?;
            let at = Self::position(&j.row_alphabet, &sym)
                .ok_or_else(|| err(format!("row {sym} outside the row alphabet")))?;
            let row: Vec<u64> = fields
                .map(|c| c.trim().parse::<u64>().map_err(|_| err(format!("bad count {c:?}"))))
                .collect::<Result<_, _>>()?;
            if row.len() != j.col_alphabet.len() {
                return Err(err(format!("expected {} counts, found {}", j.col_alphabet.len(), row.len())));
            }
            j.total += row.iter().sum::<u64>();
            j.counts[at] = row;
            seen += 1;
        }
        if seen != j.row_alphabet.len() {
            return Err(TableParseError::Missing("rows"));
        }
        if j.total != n {
            return Err(TableParseError::Line { line: 1, message: format!("N={n} but counts sum to {}", j.total) });
        }
        Ok(j)
    }
}

fn marginal(ptype: PromiseType, assessor: &AgentId, alphabet: &Alphabet, sums: &[u64]) -> EmpiricalDist {
    let mut d = EmpiricalDist::new(ptype, assessor.clone(), alphabet.clone());
    for (s, &c) in alphabet.iter().zip(sums) {
        if c > 0 {
            d.counts.insert(s.clone(), c);
        }
        d.total += c;
    }
    d
}

fn parse_header(line: &str, magic: &str, lineno: usize) -> Result<BTreeMap<String, String>, TableParseError> {
    let mut fields = line.split('\t');
    if fields.next() != Some(magic) {
        return Err(TableParseError::Line { line: lineno, message: format!("expected {magic} header") });
    }
    fields
        .map(|f| {
            f.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| TableParseError::Line { line: lineno, message: format!("bad header field {f:?}") })
        })
        .collect()
}

fn parse_field<T, E: fmt::Display>(
    h: &BTreeMap<String, String>,
    key: &'static str,
    lineno: usize,
    f: impl Fn(&str) -> Result<T, E>,
) -> Result<T, TableParseError> {
    let v = h.get(key).ok_or(TableParseError::Missing(key))?;
    f(v).map_err(|e| TableParseError::Line { line: lineno, message: format!("{key}: {e}") })
}

fn parse_alphabet(s: &str, lineno: usize) -> Result<Alphabet, TableParseError> {
    let err = |m: String| TableParseError::Line { line: lineno, message: m };
    let inner = s
        .strip_prefix('{')
        .and_then(|x| x.strip_suffix('}'))
        .ok_or_else(|| err(format!("alphabet {s:?} must be braced")))?;
    if inner.is_empty() {
        return Ok(Alphabet::empty());
    }
    inner
        .split(',')
        .map(|x| Symbol::new(x.trim()).map_err(|e| err(e.to_string())))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| Alphabet::new(v).map_err(|e| err(e.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Symbol {
        s.parse().unwrap()
    }

    #[test]
    fn dist_text_round_trip() {
        let mut d = EmpiricalDist::new("tau".parse().unwrap(), "R".parse().unwrap(), Alphabet::from_names(&["A", "B", "C"]).unwrap());
        for s in ["A", "A", "B"] {
            d.add(&sym(s));
        }
        let back = EmpiricalDist::from_text(&d.to_text()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.support(), Alphabet::from_names(&["A", "B"]).unwrap());
    }

    #[test]
    fn joint_widens_and_round_trips() {
        let mut j = JointDist::new(
            "T".parse().unwrap(),
            "S.tau",
            "R.tau",
            Alphabet::from_names(&["A"]).unwrap(),
            Alphabet::from_names(&["A"]).unwrap(),
        );
        j.add(&sym("A"), &sym("A"));
        j.add(&sym("B"), &sym("A"));
        j.add(&sym("A"), &sym("C"));
        assert_eq!(j.total, 3);
        assert_eq!(j.get(&sym("B"), &sym("A")), 1);
        assert_eq!(j.off_diagonal(), 2);
        j.trust_flags.push(TrustFlag::UndersampledObserver);
        assert_eq!(JointDist::from_text(&j.to_text()).unwrap(), j);
    }

    #[test]
    fn marginals_and_transpose() {
        let j = JointDist::from_matrix("T".parse().unwrap(), vec![vec![1, 2], vec![3, 4]]);
        assert_eq!(j.row_sums(), vec![3, 7]);
        assert_eq!(j.col_sums(), vec![4, 6]);
        let t = j.transpose();
        assert_eq!(t.counts, vec![vec![1, 3], vec![2, 4]]);
        assert_eq!(t.transpose(), j);
        assert_eq!(j.row_marginal("x".parse().unwrap()).total, 10);
    }

    #[test]
    fn malformed_tables_are_errors() {
        assert!(JointDist::from_text("").is_err());
        assert!(JointDist::from_text("joint\tassessor=T").is_err());
        assert!(EmpiricalDist::from_text("dist\tassessor=R\tptype=t\talphabet={A}\tN=2\nA\t1\n").is_err());
    }
}
