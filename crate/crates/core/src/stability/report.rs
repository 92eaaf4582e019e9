//! JSON report of verdicts and certificates.

use crate::stability::ensemble::{StabilityAssessment, Verdict};
use crate::stability::lyapunov::LyapunovEstimate;
use serde::Serialize;

/// The serializable summary `{verdict, k, lambda, r2_min, c1..c5,
/// grid_spec, seed}`.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub verdict: String,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
    pub r2_min: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub grid_spec: Option<String>,
    pub seed: u64,
}

impl StabilityReport {
    pub fn from_assessment(a: &StabilityAssessment) -> Self {
        let (verdict, k, lambda) = match a.verdict {
            Verdict::Stable { k, lambda } => ("stable".to_string(), Some(k), Some(lambda)),
            Verdict::Unstable => ("unstable".to_string(), None, None),
            Verdict::Inconclusive => ("inconclusive".to_string(), None, None),
        };
        StabilityReport {
            verdict,
            k,
            lambda,
            r2_min: a.r2_min,
            c1: None,
            c2: None,
            c3: None,
            c4: None,
            c5: None,
            grid_spec: None,
            seed: a.seed,
        }
    }

    pub fn with_certificate(mut self, est: &LyapunovEstimate) -> Self {
        self.c1 = Some(est.c[0]);
        self.c2 = Some(est.c[1]);
        self.c3 = Some(est.c[2]);
        self.c4 = Some(est.c[3]);
        self.c5 = Some(est.c[4]);
        self.grid_spec = Some(est.grid.describe());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
