//! Report records shared by the condition checks, verifiers and the CLI.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Exponent-class predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    #[serde(rename = "LH0")]
    Lh0,
    #[serde(rename = "LHinf")]
    LhInf,
    PinfGamma,
    DieningLebesgue,
    #[serde(rename = "P_mu")]
    PMu,
    Maxdifp,
    Infdecay,
    Nekvinda,
}

impl Condition {
    pub const ALL: [Condition; 8] = [
        Condition::Lh0,
        Condition::LhInf,
        Condition::PinfGamma,
        Condition::DieningLebesgue,
        Condition::PMu,
        Condition::Maxdifp,
        Condition::Infdecay,
        Condition::Nekvinda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Lh0 => "LH0",
            Condition::LhInf => "LHinf",
            Condition::PinfGamma => "pinf_gamma",
            Condition::DieningLebesgue => "diening_lebesgue",
            Condition::PMu => "P_mu",
            Condition::Maxdifp => "maxdifp",
            Condition::Infdecay => "infdecay",
            Condition::Nekvinda => "nekvinda",
        }
    }

    pub fn parse(s: &str) -> Option<Condition> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Condition::ALL
            .into_iter()
            .find(|c| c.name().to_ascii_lowercase() == key)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

/// Where a witness value was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "site", rename_all = "snake_case")]
pub enum Site {
    Pair { x: Vec<f64>, y: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Point { x: Vec<f64> },
    Lambda { lambda: f64 },
}

/// One sample together with the value of the defining ratio there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(flatten)]
    pub site: Site,
    #[serde(with = "ext_f64")]
    pub value: f64,
}

/// Outcome of one exponent-class check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    #[serde(with = "ext_f64")]
    pub fitted_constant: f64,
    #[serde(with = "ext_f64")]
    pub half_sample_constant: f64,
    pub sample_size: usize,
    pub skipped: usize,
    pub threshold: String,
    pub verdict: Verdict,
    pub seed: u64,
    pub witnesses: Vec<Witness>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub const TABLE_HEADER: &'static str = "condition\tconstant\tverdict";

    /// Flat `condition, constant, verdict` row.
    pub fn table_row(&self) -> String {
        format!(
            "{}\t{}\t{}",
            self.condition,
            fmt_f64(self.fitted_constant),
            self.verdict
        )
    }
}

/// Outcome of a numerical inequality or bound verifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub sample: String,
    #[serde(with = "ext_f64")]
    pub fitted_constant: f64,
    #[serde(with = "ext_f64")]
    pub stability_delta: f64,
    pub samples: usize,
    pub violations: usize,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub const TABLE_HEADER: &'static str = "check\tsample\tconstant\tdelta\tviolations\tpass";

    pub fn table_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.name,
            self.sample,
            fmt_f64(self.fitted_constant),
            fmt_f64(self.stability_delta),
            self.violations,
            self.pass
        )
    }
}

/// Relative change between a full-sample and half-sample constant.
pub fn relative_change(full: f64, half: f64) -> f64 {
    if full == half {
        return 0.0;
    }
    if !full.is_finite() || !half.is_finite() {
        return f64::INFINITY;
    }
    (full - half).abs() / full.abs().max(half.abs())
}

/// Sampling-stability rule: finite and within 10% of the half sample.
pub fn is_stable(full: f64, half: f64) -> bool {
    full.is_finite() && relative_change(full, half) < 0.1
}

/// Stable formatting used in tables and golden files.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.9e}")
    }
}

/// Serde adapter writing non-finite floats as strings so JSON stays valid.
pub mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::fmt_f64(*v))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => other.parse().map_err(serde::de::Error::custom),
            },
        }
    }
}
