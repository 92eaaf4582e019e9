//! Ensemble-based partial stability verdicts.
//!
//! Definition-level exponential x-stability is uniform in the remaining
//! states and the initial fast phase. That uniformity is audited by
//! sampling: x(0) uniformly on spheres of radii up to δ, y(0) and z(0)
//! uniform in configured ranges, one seeded counter-based RNG stream per
//! member so verdicts are bit-reproducible regardless of thread scheduling.
//!
//! A system is judged `stable` when every member admits an accepted decay
//! fit (reported k is the worst gain, λ the worst rate), `unstable` when any
//! member's x-norm grows tenfold, and `inconclusive` otherwise.

use crate::averaging::AveragedSystem;
use crate::ode::{IntegratorConfig, OdeError, Trajectory};
use crate::rng::{member_rng, sample_ranges, sample_sphere};
use crate::stability::fit::fit_log_series;
use crate::system::{ReducedSystem, SlowFastSystem};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::ops::Range;

/// Growth of the x-block norm that flags a member as unstable.
pub const GROWTH_FACTOR: f64 = 10.0;

/// Initial-condition distribution of one ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSpec {
    pub count: usize,
    /// Ball radius δ for the x block.
    pub radius: f64,
    /// Per-component uniform ranges for y(0).
    pub y_ranges: Vec<[f64; 2]>,
    /// Uniform range for the initial fast phase z(0).
    pub z0_range: [f64; 2],
    pub seed: u64,
}

/// Anything an ensemble can be thrown at: the full system in `t`, the
/// reduced system in `z`, or the averaged system in `z`.
pub trait EnsembleTarget: Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    fn run(
        &self,
        x0: &[f64],
        y0: &[f64],
        z0: f64,
        horizon: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory, OdeError>;
    /// Index range of the x block in trajectory states.
    fn x_block(&self) -> Range<usize>;
}

impl EnsembleTarget for SlowFastSystem {
    fn dim_x(&self) -> usize {
        self.dim_x
    }
    fn dim_y(&self) -> usize {
        self.dim_y
    }
    fn run(
        &self,
        x0: &[f64],
        y0: &[f64],
        z0: f64,
        horizon: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory, OdeError> {
        self.simulate_full(x0, y0, z0, [0.0, horizon], cfg)
    }
    fn x_block(&self) -> Range<usize> {
        0..self.dim_x
    }
}

impl EnsembleTarget for ReducedSystem {
    fn dim_x(&self) -> usize {
        self.dim_x
    }
    fn dim_y(&self) -> usize {
        self.dim_y
    }
    fn run(
        &self,
        x0: &[f64],
        y0: &[f64],
        z0: f64,
        horizon: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory, OdeError> {
        self.simulate(x0, y0, [z0, z0 + horizon], cfg)
    }
    fn x_block(&self) -> Range<usize> {
        0..self.dim_x
    }
}

impl EnsembleTarget for AveragedSystem {
    fn dim_x(&self) -> usize {
        self.dim_x
    }
    fn dim_y(&self) -> usize {
        self.dim_y
    }
    fn run(
        &self,
        x0: &[f64],
        y0: &[f64],
        z0: f64,
        horizon: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory, OdeError> {
        self.simulate(x0, y0, [z0, z0 + horizon], cfg)
    }
    fn x_block(&self) -> Range<usize> {
        0..self.dim_x
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MemberOutcome {
    Accepted {
        rate: f64,
        /// Tightest envelope constant relative to the member's initial norm.
        gain: f64,
        r_squared: f64,
    },
    Rejected {
        rate: f64,
        r_squared: f64,
    },
    Grew {
        factor: f64,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Stable { k: f64, lambda: f64 },
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityAssessment {
    pub verdict: Verdict,
    /// Worst log-linear fit quality among members that produced a fit.
    pub r2_min: Option<f64>,
    pub members: Vec<MemberOutcome>,
    pub seed: u64,
}

impl StabilityAssessment {
    pub fn is_stable(&self) -> bool {
        matches!(self.verdict, Verdict::Stable { .. })
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.verdict {
            Verdict::Stable { lambda, .. } => Some(lambda),
            _ => None,
        }
    }
}

fn assess_member<T: EnsembleTarget>(
    target: &T,
    spec: &EnsembleSpec,
    index: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
    transient_fraction: f64,
) -> MemberOutcome {
    let mut rng = member_rng(spec.seed, index as u64);
    let radius = spec.radius * (1.0 - rng.random::<f64>());
    let x0 = sample_sphere(&mut rng, target.dim_x(), radius);
    let y0 = sample_ranges(&mut rng, &spec.y_ranges);
    let z0 = sample_ranges(&mut rng, &[spec.z0_range])[0];
    let traj = match target.run(&x0, &y0, z0, horizon, cfg) {
        Ok(t) => t,
        Err(e) => {
            return MemberOutcome::Failed {
                error: format!("member {index}: {e}"),
            }
        }
    };
    let block = target.x_block();
    let times = traj.times().to_vec();
    let norms: Vec<f64> = (0..traj.len())
        .map(|i| traj.block_norm(i, block.clone()))
        .collect();
    let initial = norms[0].max(1e-300);
    let peak = norms.iter().fold(0.0f64, |m, v| m.max(*v));
    if peak >= GROWTH_FACTOR * initial {
        return MemberOutcome::Grew {
            factor: peak / initial,
        };
    }
    match fit_log_series(&times, &norms, transient_fraction) {
        Ok(fit) if fit.accepted => {
            // Tightest Definition-style constant over the fit window,
            // normalized by the member's initial norm.
            let gain = times
                .iter()
                .zip(&norms)
                .filter(|(t, _)| **t >= fit.window[0] && **t <= fit.window[1])
                .map(|(t, v)| v / (initial * (-fit.rate_lambda * (t - times[0])).exp()))
                .fold(0.0f64, f64::max);
            MemberOutcome::Accepted {
                rate: fit.rate_lambda,
                gain,
                r_squared: fit.r_squared,
            }
        }
        Ok(fit) => MemberOutcome::Rejected {
            rate: fit.rate_lambda,
            r_squared: fit.r_squared,
        },
        Err(e) => MemberOutcome::Failed {
            error: format!("member {index}: {e}"),
        },
    }
}

/// Run the ensemble and aggregate a verdict. Members are independent and
/// evaluated in parallel; aggregation is order-independent (max/min).
pub fn assess_partial_stability<T: EnsembleTarget>(
    target: &T,
    spec: &EnsembleSpec,
    horizon: f64,
    cfg: &IntegratorConfig,
    transient_fraction: f64,
) -> StabilityAssessment {
    assert_eq!(spec.y_ranges.len(), target.dim_y());
    let members: Vec<MemberOutcome> = (0..spec.count)
        .into_par_iter()
        .map(|i| assess_member(target, spec, i, horizon, cfg, transient_fraction))
        .collect();
    let grew = members
        .iter()
        .any(|m| matches!(m, MemberOutcome::Grew { .. }));
    let all_accepted = members
        .iter()
        .all(|m| matches!(m, MemberOutcome::Accepted { .. }));
    let r2_min = members
        .iter()
        .filter_map(|m| match m {
            MemberOutcome::Accepted { r_squared, .. }
            | MemberOutcome::Rejected { r_squared, .. } => Some(*r_squared),
            _ => None,
        })
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    let verdict = if grew {
        Verdict::Unstable
    } else if all_accepted && !members.is_empty() {
        let (mut k, mut lambda) = (0.0f64, f64::INFINITY);
        for m in &members {
            if let MemberOutcome::Accepted { rate, gain, .. } = m {
                k = k.max(*gain);
                lambda = lambda.min(*rate);
            }
        }
        Verdict::Stable { k, lambda }
    } else {
        Verdict::Inconclusive
    };
    StabilityAssessment {
        verdict,
        r2_min,
        members,
        seed: spec.seed,
    }
}

/// Propagated per-member integration failures, if any.
pub fn member_failures(a: &StabilityAssessment) -> Vec<&str> {
    a.members
        .iter()
        .filter_map(|m| match m {
            MemberOutcome::Failed { error } => Some(error.as_str()),
            _ => None,
        })
        .collect()
}
