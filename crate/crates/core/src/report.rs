//! Machine-readable verification reports.

use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::Params;
use crate::models::ModelKind;

pub const SCHEMA_VERSION: u32 = 1;

/// What a check is expected to show on a given model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// The identity holds: residual at most the tolerance.
    Hold,
    /// Designed failure: residual must exceed the tolerance.
    Violate,
    /// Recorded only; passes whenever the residual is finite.
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Expectation {
    pub fn verdict(self, residual: Option<f64>, tolerance: f64) -> Verdict {
        let ok = match (self, residual) {
            (_, None) => false,
            (Expectation::Hold, Some(r)) => r <= tolerance,
            (Expectation::Violate, Some(r)) => r > tolerance,
            (Expectation::Info, Some(_)) => true,
        };
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Serializes a float with 17 significant digits; non-finite values become `null`.
pub fn serialize_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    serialize_opt_f64(&Some(*x), s)
}

pub fn serialize_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) if v.is_finite() => {
            let text = format!("{v:.16e}");
            let number: serde_json::Number = text.parse().map_err(serde::ser::Error::custom)?;
            number.serialize(s)
        }
        _ => s.serialize_none(),
    }
}

/// Outcome of one check on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    /// The identity being tested, in words and symbols.
    pub identity: String,
    pub expectation: Expectation,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub max_residual: Option<f64>,
    /// `|residual(h) − residual(h/2)|`; zero when no finite differences are involved.
    #[serde(serialize_with = "serialize_opt_f64")]
    pub fd_error_estimate: Option<f64>,
    #[serde(serialize_with = "serialize_f64")]
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub kind: Option<ModelKind>,
    pub params: Params,
    pub sample_points: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub points: usize,
    #[serde(serialize_with = "serialize_f64")]
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub environment: Environment,
    pub models: Vec<ModelReport>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn new(environment: Environment, models: Vec<ModelReport>) -> Self {
        let all_pass = models.iter().all(|m| m.all_pass);
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            environment,
            models,
            all_pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Checks matching `id` across all models.
    pub fn find<'a>(
        &'a self,
        model: &'a str,
        id: &'a str,
    ) -> impl Iterator<Item = &'a CheckResult> {
        self.models
            .iter()
            .filter(move |m| m.model == model)
            .flat_map(|m| m.checks.iter())
            .filter(move |c| c.check_id == id)
    }

    /// Human-readable summary, one line per check.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.models {
            out.push_str(&format!(
                "{} {}\n",
                m.model,
                if m.all_pass { "PASS" } else { "FAIL" }
            ));
            if let Some(e) = &m.error {
                out.push_str(&format!("  error: {e}\n"));
            }
            for note in &m.notes {
                out.push_str(&format!("  note: {note}\n"));
            }
            for c in &m.checks {
                let r = c
                    .max_residual
                    .map(|r| format!("{r:.3e}"))
                    .unwrap_or_else(|| "null".into());
                let fd = c
                    .fd_error_estimate
                    .map(|r| format!("{r:.1e}"))
                    .unwrap_or_else(|| "null".into());
                let tag = match c.expectation {
                    Expectation::Hold => "",
                    Expectation::Violate => " (designed fail)",
                    Expectation::Info => " (info)",
                };
                out.push_str(&format!(
                    "  [{}] {:<44} residual {:>10} fd {:>8} tol {:.0e}{}",
                    if c.verdict == Verdict::Pass {
                        "ok"
                    } else {
                        "FAIL"
                    },
                    c.check_id,
                    r,
                    fd,
                    c.tolerance,
                    tag
                ));
                if let Some(note) = &c.note {
                    out.push_str(&format!("  {note}"));
                }
                out.push('\n');
            }
        }
        out.push_str(if self.all_pass {
            "all checks pass\n"
        } else {
            "some checks failed\n"
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert_eq!(Expectation::Hold.verdict(Some(1e-10), 1e-9), Verdict::Pass);
        assert_eq!(Expectation::Hold.verdict(Some(1e-8), 1e-9), Verdict::Fail);
        assert_eq!(Expectation::Violate.verdict(Some(1.0), 0.1), Verdict::Pass);
        assert_eq!(Expectation::Violate.verdict(Some(0.0), 0.1), Verdict::Fail);
        assert_eq!(Expectation::Info.verdict(Some(5.0), 0.0), Verdict::Pass);
        for e in [Expectation::Hold, Expectation::Violate, Expectation::Info] {
            assert_eq!(e.verdict(None, 1.0), Verdict::Fail);
        }
    }

    #[derive(Serialize)]
    struct Wrap(#[serde(serialize_with = "serialize_opt_f64")] Option<f64>);

    #[test]
    fn numbers_have_seventeen_digits() {
        let s = serde_json::to_string(&Wrap(Some(0.1))).unwrap();
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(
            serde_json::to_string(&Wrap(Some(f64::NAN))).unwrap(),
            "null"
        );
        let x = 1.0 / 3.0;
        let s = serde_json::to_string(&Wrap(Some(x))).unwrap();
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }
}
