//! Perturbation envelopes from a converse Lyapunov certificate.
//!
//! Given certificate constants `c₁..c₅` for a nominal system and
//! perturbations bounded by `‖g₁‖ ≤ γ₁(z)‖w‖ + ψ₁(z)`,
//! `‖g₂‖ ≤ γ₂(z)‖w‖ + ψ₂(z)` with
//!
//! ```text
//! c₄∫γ₁ + c₅∫γ₂ ≤ κ(z−z₀) + η,   0 ≤ κ < c₁c₃/c₂,   η ≥ 0,
//! k₁ = c₃/(2c₂) − κ/(2c₁),       k₂ = e^{η/(2c₁)},
//! ```
//!
//! the perturbed solution obeys
//!
//! ```text
//! ‖w_p(z)‖ ≤ k₂√(c₂/c₁)‖w_p(z₀)‖e^{−k₁(z−z₀)}
//!            + (k₂/2c₁)∫_{z₀}^z e^{−k₁(z−τ)} ψ(τ) dτ,
//! ```
//!
//! with `ψ = c₄ψ₁ + c₅ψ₂`. The check verifies this bound at every node of a
//! perturbed trajectory, evaluating the convolution incrementally on the
//! node grid (the exponential kernel makes the recursion exact up to the
//! trapezoid rule). With ψ ≡ 0 the convolution term is identically zero and
//! the check reduces to the pure exponential envelope of the vanishing
//! perturbation case.

use crate::ode::Trajectory;
use crate::stability::lyapunov::LyapunovEstimate;
use serde::Serialize;
use std::ops::Range;
use std::sync::Arc;
use thiserror::Error;

/// Relative slack allowed when comparing the trajectory to the envelope.
pub const ENVELOPE_SLACK_REL: f64 = 0.01;

pub type ZFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("inadmissible perturbation bound: {0}")]
    Inadmissible(String),
    #[error("initial condition outside the certified ball: ‖w(z0)‖ = {norm}, limit {limit}")]
    InitialConditionOutsideBall { norm: f64, limit: f64 },
    #[error("psi bound violated at z = {z}: psi = {psi}, limit {limit}")]
    PsiBoundViolated { z: f64, psi: f64, limit: f64 },
}

/// Admissible perturbation bounds and the (κ, η) growth budget.
#[derive(Clone)]
pub struct PerturbationSpec {
    pub gamma1: ZFn,
    pub gamma2: ZFn,
    pub psi1: ZFn,
    pub psi2: ZFn,
    pub kappa: f64,
    pub eta: f64,
}

fn zero() -> ZFn {
    Arc::new(|_| 0.0)
}

impl PerturbationSpec {
    pub fn new(
        gamma1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kappa: f64,
        eta: f64,
    ) -> Self {
        PerturbationSpec {
            gamma1: Arc::new(gamma1),
            gamma2: Arc::new(gamma2),
            psi1: Arc::new(psi1),
            psi2: Arc::new(psi2),
            kappa,
            eta,
        }
    }

    /// Vanishing perturbation: ψ₁ = ψ₂ = 0.
    pub fn vanishing(
        gamma1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kappa: f64,
        eta: f64,
    ) -> Self {
        PerturbationSpec {
            gamma1: Arc::new(gamma1),
            gamma2: Arc::new(gamma2),
            psi1: zero(),
            psi2: zero(),
            kappa,
            eta,
        }
    }

    pub fn k1(&self, c: &[f64; 5]) -> f64 {
        c[2] / (2.0 * c[1]) - self.kappa / (2.0 * c[0])
    }

    pub fn k2(&self, c: &[f64; 5]) -> f64 {
        (self.eta / (2.0 * c[0])).exp()
    }

    /// The admissibility constraints on (κ, η).
    pub fn validate(&self, c: &[f64; 5]) -> Result<(), EnvelopeError> {
        let limit = c[0] * c[2] / c[1];
        if !(0.0..limit).contains(&self.kappa) {
            return Err(EnvelopeError::Inadmissible(format!(
                "kappa = {} not in [0, c1*c3/c2 = {limit})",
                self.kappa
            )));
        }
        if self.eta < 0.0 {
            return Err(EnvelopeError::Inadmissible(format!(
                "eta = {} must be nonnegative",
                self.eta
            )));
        }
        let k1 = self.k1(c);
        if !(k1 > 0.0) {
            return Err(EnvelopeError::Inadmissible(format!(
                "k1 = {k1} must be positive"
            )));
        }
        Ok(())
    }

    /// Audit the γ budget by quadrature over `[z0, z_end]` (finite-horizon
    /// only): `c₄∫γ₁ + c₅∫γ₂ ≤ κ(z−z₀) + η` at a dense set of z values.
    pub fn audit_gamma_budget(&self, c: &[f64; 5], z0: f64, z_end: f64) -> bool {
        let n = 400;
        let mut acc1 = 0.0;
        let mut acc2 = 0.0;
        let h = (z_end - z0) / n as f64;
        let mut z = z0;
        for _ in 0..n {
            // Trapezoid accumulation of both integrals.
            acc1 += 0.5 * h * ((self.gamma1)(z) + (self.gamma1)(z + h));
            acc2 += 0.5 * h * ((self.gamma2)(z) + (self.gamma2)(z + h));
            z += h;
            let lhs = c[3] * acc1 + c[4] * acc2;
            if lhs > self.kappa * (z - z0) + self.eta + 1e-12 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub pass: bool,
    /// max over nodes of (‖w‖ − envelope)/envelope.
    pub max_residual_rel: f64,
    pub k1: f64,
    pub k2: f64,
    /// Asymptote of the convolution term for constant ψ: k₂·sup ψ/(2c₁k₁).
    pub tail_bound: f64,
    pub psi_sup: f64,
    pub envelope: Vec<f64>,
    pub w_norms: Vec<f64>,
}

/// Check the perturbation envelope along a perturbed trajectory.
pub fn check_perturbation_envelope(
    est: &LyapunovEstimate,
    traj: &Trajectory,
    w_block: Range<usize>,
    spec: &PerturbationSpec,
) -> Result<EnvelopeReport, EnvelopeError> {
    spec.validate(&est.c)?;
    let c = est.c;
    let k1 = spec.k1(&c);
    let k2 = spec.k2(&c);
    let n = traj.len();
    let z0 = traj.first_time();
    let w0 = traj.block_norm(0, w_block.clone());
    let ball = est.w_radius / k2 * (c[0] / c[1]).sqrt();
    if !(w0 < ball) {
        return Err(EnvelopeError::InitialConditionOutsideBall {
            norm: w0,
            limit: ball,
        });
    }
    let psi = |z: f64| c[3] * (spec.psi1)(z) + c[4] * (spec.psi2)(z);
    let psi_limit = 2.0 * c[0] * k1 * est.w_radius / k2;
    let mut psi_vals = Vec::with_capacity(n);
    let mut psi_sup = 0.0f64;
    for i in 0..n {
        let z = traj.time(i);
        let p = psi(z);
        if p >= psi_limit {
            return Err(EnvelopeError::PsiBoundViolated {
                z,
                psi: p,
                limit: psi_limit,
            });
        }
        psi_sup = psi_sup.max(p);
        psi_vals.push(p);
    }

    let amp = k2 * (c[1] / c[0]).sqrt() * w0;
    let mut conv = 0.0;
    let mut envelope = Vec::with_capacity(n);
    let mut w_norms = Vec::with_capacity(n);
    let mut max_residual_rel = f64::NEG_INFINITY;
    for i in 0..n {
        let z = traj.time(i);
        if i > 0 {
            let dz = z - traj.time(i - 1);
            let decay = (-k1 * dz).exp();
            conv = conv * decay + 0.5 * dz * (psi_vals[i - 1] * decay + psi_vals[i]);
        }
        let env = amp * (-k1 * (z - z0)).exp() + k2 / (2.0 * c[0]) * conv;
        let wn = traj.block_norm(i, w_block.clone());
        max_residual_rel = max_residual_rel.max((wn - env) / env.max(1e-300));
        envelope.push(env);
        w_norms.push(wn);
    }
    Ok(EnvelopeReport {
        pass: max_residual_rel <= ENVELOPE_SLACK_REL,
        max_residual_rel,
        k1,
        k2,
        tail_bound: k2 * psi_sup / (2.0 * c[0] * k1),
        psi_sup,
        envelope,
        w_norms,
    })
}
