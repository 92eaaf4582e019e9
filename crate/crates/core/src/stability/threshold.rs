//! Locating the ε threshold below which a family is partially stable.

use crate::ode::IntegratorConfig;
use crate::stability::ensemble::{assess_partial_stability, EnsembleSpec, EnsembleTarget};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

pub const SWEEP_POINTS: usize = 8;
/// Bisection stops once the bracket's relative width is below this.
pub const RELATIVE_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub stable: bool,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdScan {
    /// The coarse 8-point sweep, in increasing ε.
    pub sweep: Vec<SweepPoint>,
    /// Bisection probes, in evaluation order.
    pub refinements: Vec<SweepPoint>,
    /// Largest tested ε with a stable verdict.
    pub eps_stable: f64,
    /// Smallest tested ε with a non-stable verdict, when one exists in range.
    pub eps_unstable: Option<f64>,
}

fn format_table(sweep: &[SweepPoint]) -> String {
    let mut s = String::from("epsilon -> verdict:");
    for p in sweep {
        s.push_str(&format!(
            " {:.4e}={}",
            p.epsilon,
            if p.stable { "stable" } else { "non-stable" }
        ));
    }
    s
}

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("no stable point found in range; {}", format_table(.0))]
    NoStablePoint(Vec<SweepPoint>),
    #[error("verdicts not monotone across the sweep; {}", format_table(.0))]
    NonMonotone(Vec<SweepPoint>),
}

impl fmt::Display for ThresholdScan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "eps_stable = {:.6e}, eps_unstable = {}",
            self.eps_stable,
            match self.eps_unstable {
                Some(e) => format!("{e:.6e}"),
                None => "none in range".to_string(),
            }
        )
    }
}

/// Bisection on ε over `family`, preceded by a coarse log-spaced sweep.
///
/// `family(ε)` returns the system under test and the simulation horizon
/// appropriate to that ε (slow decays need proportionally longer runs).
/// Monotonicity is not assumed: a sweep whose verdicts flip more than once
/// aborts with the full table.
pub fn find_epsilon_threshold<T, F>(
    family: F,
    eps_range: [f64; 2],
    ens: &EnsembleSpec,
    cfg: &IntegratorConfig,
    transient_fraction: f64,
) -> Result<ThresholdScan, ThresholdError>
where
    T: EnsembleTarget,
    F: Fn(f64) -> (T, f64),
{
    assert!(eps_range[0] > 0.0 && eps_range[1] > eps_range[0]);
    let probe = |eps: f64| -> SweepPoint {
        let (system, horizon) = family(eps);
        let a = assess_partial_stability(&system, ens, horizon, cfg, transient_fraction);
        SweepPoint {
            epsilon: eps,
            stable: a.is_stable(),
            lambda: a.lambda(),
        }
    };

    let ratio = eps_range[1] / eps_range[0];
    let sweep: Vec<SweepPoint> = (0..SWEEP_POINTS)
        .map(|i| {
            let eps = eps_range[0] * ratio.powf(i as f64 / (SWEEP_POINTS - 1) as f64);
            probe(eps)
        })
        .collect();

    if !sweep[0].stable {
        return Err(ThresholdError::NoStablePoint(sweep));
    }
    // Exactly one stable->non-stable transition allowed.
    let flips = sweep
        .windows(2)
        .filter(|w| w[0].stable != w[1].stable)
        .count();
    if flips > 1 {
        return Err(ThresholdError::NonMonotone(sweep));
    }
    if flips == 0 {
        // Stable throughout: the threshold estimate is the top of the range.
        return Ok(ThresholdScan {
            eps_stable: sweep.last().unwrap().epsilon,
            eps_unstable: None,
            sweep,
            refinements: Vec::new(),
        });
    }
    let k = sweep.iter().position(|p| !p.stable).unwrap();
    let mut lo = sweep[k - 1].epsilon;
    let mut hi = sweep[k].epsilon;
    let mut refinements = Vec::new();
    while hi / lo - 1.0 > RELATIVE_WIDTH {
        let mid = (lo * hi).sqrt();
        let p = probe(mid);
        if p.stable {
            lo = mid;
        } else {
            hi = mid;
        }
        refinements.push(p);
    }
    Ok(ThresholdScan {
        sweep,
        refinements,
        eps_stable: lo,
        eps_unstable: Some(hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SlowFastSystem;
    use std::f64::consts::TAU;

    fn ens() -> EnsembleSpec {
        EnsembleSpec {
            count: 4,
            radius: 0.3,
            y_ranges: vec![],
            z0_range: [0.0, TAU],
            seed: 5,
        }
    }

    #[test]
    fn epsilon_independent_family_reports_upper_end() {
        let family = |eps: f64| {
            (
                SlowFastSystem::new(
                    "always-stable",
                    1,
                    0,
                    eps,
                    TAU,
                    |x, _y, _z, out| out[0] = -x[0],
                    |_x, _y, _z, _out| {},
                    |_x, _y, _z| 1.0,
                ),
                14.0,
            )
        };
        let scan = find_epsilon_threshold(
            family,
            [1e-3, 1.0],
            &ens(),
            &IntegratorConfig::rk45(1e-9, 1e-12),
            0.1,
        )
        .unwrap();
        assert_eq!(scan.eps_stable, 1.0);
        assert!(scan.eps_unstable.is_none());
        assert!(scan.refinements.is_empty());
    }

    #[test]
    fn synthetic_threshold_is_bracketed_to_five_percent() {
        // x-drift flips sign at ε = 0.1: stable below, unstable above.
        let family = |eps: f64| {
            let s = if eps < 0.1 { -1.0 } else { 1.0 };
            (
                SlowFastSystem::new(
                    "flip",
                    1,
                    0,
                    eps,
                    TAU,
                    move |x, _y, _z, out| out[0] = s * x[0],
                    |_x, _y, _z, _out| {},
                    |_x, _y, _z| 1.0,
                ),
                14.0,
            )
        };
        let scan = find_epsilon_threshold(
            family,
            [1e-3, 1.0],
            &ens(),
            &IntegratorConfig::rk45(1e-9, 1e-12),
            0.1,
        )
        .unwrap();
        let hi = scan.eps_unstable.unwrap();
        assert!(scan.eps_stable < 0.1 && hi >= 0.1, "{scan}");
        assert!(hi / scan.eps_stable - 1.0 <= RELATIVE_WIDTH + 1e-12);
    }

    #[test]
    fn unstable_at_bottom_errors() {
        let family = |eps: f64| {
            (
                SlowFastSystem::new(
                    "never-stable",
                    1,
                    0,
                    eps,
                    TAU,
                    |x, _y, _z, out| out[0] = x[0],
                    |_x, _y, _z, _out| {},
                    |_x, _y, _z| 1.0,
                ),
                10.0,
            )
        };
        assert!(matches!(
            find_epsilon_threshold(
                family,
                [1e-3, 1.0],
                &ens(),
                &IntegratorConfig::rk45(1e-9, 1e-12),
                0.1
            ),
            Err(ThresholdError::NoStablePoint(_))
        ));
    }

    #[test]
    fn non_monotone_sweep_aborts_with_table() {
        // Stable only in a middle band: the sweep sees two flips.
        let family = |eps: f64| {
            let s = if (0.004..0.2).contains(&eps) {
                1.0
            } else {
                -1.0
            };
            (
                SlowFastSystem::new(
                    "band",
                    1,
                    0,
                    eps,
                    TAU,
                    move |x, _y, _z, out| out[0] = s * x[0],
                    |_x, _y, _z, _out| {},
                    |_x, _y, _z| 1.0,
                ),
                12.0,
            )
        };
        match find_epsilon_threshold(
            family,
            [1e-3, 1.0],
            &ens(),
            &IntegratorConfig::rk45(1e-9, 1e-12),
            0.1,
        ) {
            Err(ThresholdError::NonMonotone(table)) => assert_eq!(table.len(), SWEEP_POINTS),
            other => panic!("expected NonMonotone, got {other:?}"),
        }
    }
}
