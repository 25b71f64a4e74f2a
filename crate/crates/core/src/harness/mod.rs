//! Named verifiers producing machine-readable reports, and the suite runner.

mod checks;
mod coverage;
mod identities;
mod rankbound;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::chains::GroupKind;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::seeded_rng;

pub use checks::{
    random_descriptor, verify_degeneration, verify_descriptor_lattice, verify_equivariance, verify_offdiag,
    verify_raise_rank, verify_topleft, verify_tuple_rank_oracle,
};
pub use coverage::{char2_derivative_rank, verify_char2, verify_commutator_scalar, Char2Part, CoverageMode};
pub use identities::{verify_conjugation_identity, IdentityCase};
pub use rankbound::{verify_rank_bound_samples, RankBoundParams, RankLemma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    StatisticalPass,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub lemma: String,
    pub params: Value,
    pub verdict: Verdict,
    pub witness: Value,
    pub ms: u64,
}

impl VerificationReport {
    pub fn new(lemma: &str, params: Value, verdict: Verdict, witness: Value) -> Self {
        VerificationReport { lemma: lemma.to_string(), params, verdict, witness, ms: 0 }
    }

    pub fn pass(lemma: &str, params: Value) -> Self {
        Self::new(lemma, params, Verdict::Pass, Value::Null)
    }

    pub fn fail(lemma: &str, params: Value, witness: Value) -> Self {
        Self::new(lemma, params, Verdict::Fail, witness)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Every lemma id understood by [`run_lemma`], sorted.
pub const LEMMA_IDS: &[&str] = &[
    "char2a",
    "char2b",
    "commutator",
    "degeneration",
    "descriptor-lattice",
    "equivariance-A",
    "equivariance-B",
    "equivariance-C",
    "equivariance-D",
    "identity-2",
    "identity-3a",
    "identity-4a",
    "identity-B1",
    "identity-B2",
    "identity-C",
    "identity-D",
    "offdiag",
    "raise-rank",
    "rankbound-b",
    "rankbound-od",
    "rankbound-sp",
    "topleft",
    "tuplerank-oracle",
];

/// Typed access to a report's parameter object.
pub struct Params<'a>(pub &'a Map<String, Value>);

impl Params<'_> {
    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::Parse(format!("parameter {key} must be a nonnegative integer"))),
        }
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| Error::Parse(format!("parameter {key} must be a boolean"))),
        }
    }

    pub fn str<'b>(&'b self, key: &str, default: &'b str) -> Result<&'b str> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_str().ok_or_else(|| Error::Parse(format!("parameter {key} must be a string"))),
        }
    }

    pub fn field(&self, default: FieldSpec) -> Result<FieldSpec> {
        match self.0.get("field") {
            None => Ok(default),
            Some(v) => v.as_str().ok_or_else(|| Error::Parse("parameter field must be a string".into()))?.parse(),
        }
    }
}

/// Per-lemma rng stream: the suite seed mixed with an FNV-1a hash of the id.
pub fn lemma_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

/// Runs one verifier by id.
pub fn run_lemma(id: &str, params: &Map<String, Value>, seed: u64) -> Result<VerificationReport> {
    let p = Params(params);
    let mut rng = seeded_rng(lemma_seed(seed, id));
    let start = Instant::now();
    let gf = FieldSpec::Finite;
    let mut report = match id {
        "char2a" => {
            let mode = match p.str("mode", "enumerate")? {
                "enumerate" => CoverageMode::Enumerate,
                "sample" => CoverageMode::Sample { trials: p.usize("trials", 100)? },
                other => return Err(Error::Parse(format!("unknown mode {other:?}"))),
            };
            verify_char2(Char2Part::A, p.field(gf(3))?, p.usize("n", 2)?, mode, &mut rng)?
        }
        "char2b" => verify_char2(Char2Part::B, p.field(gf(2))?, p.usize("n", 4)?, CoverageMode::Enumerate, &mut rng)?,
        "commutator" => {
            let mode = match p.str("mode", "enumerate")? {
                "enumerate" => CoverageMode::Enumerate,
                "sample" => CoverageMode::Sample { trials: p.usize("trials", 100)? },
                other => return Err(Error::Parse(format!("unknown mode {other:?}"))),
            };
            verify_commutator_scalar(p.field(gf(2))?, p.usize("m", 2)?, mode, &mut rng)?
        }
        "degeneration" => verify_degeneration(p.usize("n_max", 4)?, p.usize("k_max", 1)?, p.usize("targets", 20)?, &mut rng)?,
        "descriptor-lattice" => verify_descriptor_lattice(p.field(gf(5))?, p.usize("cases", 1000)?, &mut rng)?,
        "offdiag" => verify_offdiag(p.usize("count", 50)?, &mut rng)?,
        "raise-rank" => verify_raise_rank(p.field(gf(7))?, p.usize("instances", 100)?, &mut rng)?,
        "topleft" => verify_topleft(p.field(gf(5))?, p.usize("instances", 100)?, &mut rng)?,
        "tuplerank-oracle" => verify_tuple_rank_oracle(p.usize("n_max", 3)?)?,
        _ => {
            if let Some(kind) = id.strip_prefix("equivariance-") {
                let kind: GroupKind = kind.parse()?;
                verify_equivariance(kind, p.field(gf(7))?, p.usize("trials", 200)?, &mut rng)?
            } else if let Some(case) = id.strip_prefix("identity-") {
                let case: IdentityCase = case.parse()?;
                verify_conjugation_identity(case, p.bool("corrupt", false)?, &mut rng)?
            } else if let Some(lemma) = id.strip_prefix("rankbound-") {
                let lemma: RankLemma = lemma.parse()?;
                let defaults = RankBoundParams::default_for(lemma);
                let params = RankBoundParams {
                    lemma,
                    field: p.field(defaults.field)?,
                    n: p.usize("n", defaults.n)?,
                    m: p.usize("m", defaults.m)?,
                    l: p.usize("l", defaults.l)?,
                    trials: p.usize("trials", defaults.trials)?,
                };
                verify_rank_bound_samples(&params, &mut rng)?
            } else {
                return Err(Error::Parse(format!("unknown lemma id {id:?}")));
            }
        }
    };
    report.ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub lemma: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl SuiteEntry {
    pub fn new(lemma: &str, params: Value) -> Self {
        let params = match params {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        SuiteEntry { lemma: lemma.to_string(), params }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteConfig {
    pub fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))
    }

    /// The desk-scale configuration.
    pub fn default_suite() -> Self {
        let e = SuiteEntry::new;
        let mut entries = vec![
            e("char2a", json!({"field": "gf:3", "n": 2})),
            e("char2a", json!({"field": "gf:5", "n": 2})),
            e("commutator", json!({"field": "gf:2", "m": 3})),
            e("commutator", json!({"field": "gf:3", "m": 2})),
            e("degeneration", json!({})),
            e("descriptor-lattice", json!({})),
            e("offdiag", json!({})),
            e("raise-rank", json!({})),
            e("topleft", json!({"field": "gf:5"})),
            e("topleft", json!({"field": "qq"})),
            e("tuplerank-oracle", json!({})),
        ];
        for n in 2..=8 {
            entries.push(e("char2b", json!({ "n": n })));
        }
        for kind in ["A", "B", "C", "D"] {
            entries.push(e(&format!("equivariance-{kind}"), json!({})));
        }
        for case in ["2", "3a", "4a", "C", "D", "B1", "B2"] {
            entries.push(e(&format!("identity-{case}"), json!({})));
        }
        for lemma in ["sp", "od", "b"] {
            entries.push(e(&format!("rankbound-{lemma}"), json!({})));
        }
        SuiteConfig { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub verdict: Verdict,
    pub checks: usize,
    pub reports: Vec<VerificationReport>,
    pub ms: u64,
}

/// Runs every entry; reports are sorted by lemma id, then parameters.
pub fn run_suite(config: &SuiteConfig, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut reports = config
        .entries
        .iter()
        .map(|e| run_lemma(&e.lemma, &e.params, seed))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| (&a.lemma, a.params.to_string()).cmp(&(&b.lemma, b.params.to_string())));
    let verdict = if reports.iter().any(|r| r.verdict.is_fail()) {
        Verdict::Fail
    } else if reports.iter().any(|r| r.verdict == Verdict::StatisticalPass) {
        Verdict::StatisticalPass
    } else {
        Verdict::Pass
    };
    Ok(SuiteReport { verdict, checks: reports.len(), reports, ms: start.elapsed().as_millis() as u64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_passes() {
        let r = run_suite(&SuiteConfig { entries: Vec::new() }, 0).unwrap();
        assert_eq!((r.verdict, r.checks), (Verdict::Pass, 0));
    }

    #[test]
    fn ids_are_sorted_and_known() {
        let mut sorted = LEMMA_IDS.to_vec();
        sorted.sort();
        assert_eq!(sorted, LEMMA_IDS);
        for e in SuiteConfig::default_suite().entries {
            assert!(LEMMA_IDS.contains(&e.lemma.as_str()), "{}", e.lemma);
        }
        assert!(run_lemma("nonsense", &Map::new(), 0).is_err());
    }

    #[test]
    fn verdict_wire_names() {
        assert_eq!(serde_json::to_value(Verdict::StatisticalPass).unwrap(), json!("statistical-pass"));
        assert_eq!(serde_json::to_value(Verdict::Pass).unwrap(), json!("pass"));
    }
}
