//! Kuramoto-Sakaguchi star with two peripheral nodes and its remote
//! synchronization diagnostics.
//!
//! Phases are indexed `[θ₀, θ₁, θ₂]` with node 0 the central mediator:
//!
//! ```text
//! θ̇ᵢ = ω + Aᵢ sin(θ₀ − θᵢ − α),          i = 1, 2
//! θ̇₀ = ω + Σⱼ Aⱼ sin(θⱼ − θ₀ − α) + u
//! ```
//!
//! Remote synchronization is θ₁ = θ₂, tracked through the pair
//! `z₁ = ½Σcos(θ₀−θⱼ)`, `z₂ = ½Σsin(θ₀−θⱼ)` in polar form `(r, ζ)` with
//! `μ = 1 − r` the distance to the unit circle; `r = |cos((θ₁−θ₂)/2)|`
//! identically. With symmetric couplings the (μ, ζ) pair is autonomous:
//!
//! ```text
//! μ̇ = −A (1−(1−μ)²) cos(ζ−α)
//! ζ̇ = u − A (1−μ) (2 sin(ζ+α) + sin(ζ−α))
//! ```
//!
//! Phases are held unwrapped (on the real line) internally; wrapping happens
//! only in distance computations and display, so frequency estimates stay
//! jump-free.

use crate::ode::{self, IndependentAxis, IntegratorConfig, OdeError, Trajectory};
use crate::quad;
use crate::stability::fit::{fit_log_series, DecayFit, FitError};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KuramotoError {
    #[error("operation requires symmetric couplings, got A1 = {a1}, A2 = {a2}")]
    AsymmetricCouplings { a1: f64, a2: f64 },
    #[error("detuning u = {u} must exceed 3A = {three_a} for the averaged analysis")]
    DetuningTooSmall { u: f64, three_a: f64 },
    #[error("mu = {0} outside [0, 1)")]
    MuOutOfRange(f64),
    #[error("phase shift alpha = {0} outside (0, pi/2): ellipse degenerates")]
    DegenerateEllipse(f64),
    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),
}

/// Parameters of the star network.
///
/// The analysis assumes `A1 = A2`; asymmetric values are accepted so the
/// bounded-error behavior under slight mismatch can be simulated, but the
/// (μ, ζ) reduction and everything downstream of it refuses them.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KuramotoStarParams {
    pub omega: f64,
    pub a1: f64,
    pub a2: f64,
    /// Phase shift α ∈ (0, π/2).
    pub alpha: f64,
    /// Natural frequency detuning of the central oscillator, u ≥ 0.
    pub u: f64,
}

impl KuramotoStarParams {
    pub fn symmetric(omega: f64, coupling: f64, alpha: f64, u: f64) -> Self {
        KuramotoStarParams {
            omega,
            a1: coupling,
            a2: coupling,
            alpha,
            u,
        }
    }

    pub fn coupling(&self) -> Result<f64, KuramotoError> {
        if self.a1 == self.a2 {
            Ok(self.a1)
        } else {
            Err(KuramotoError::AsymmetricCouplings {
                a1: self.a1,
                a2: self.a2,
            })
        }
    }
}

/// Right-hand side of the star network; `theta = [θ₀, θ₁, θ₂]`.
pub fn star_rhs(p: &KuramotoStarParams, theta: &[f64; 3]) -> [f64; 3] {
    let [t0, t1, t2] = *theta;
    let d0 = p.omega + p.a1 * (t1 - t0 - p.alpha).sin() + p.a2 * (t2 - t0 - p.alpha).sin() + p.u;
    let d1 = p.omega + p.a1 * (t0 - t1 - p.alpha).sin();
    let d2 = p.omega + p.a2 * (t0 - t2 - p.alpha).sin();
    [d0, d1, d2]
}

/// Integrate the three-phase system; state layout `[θ₀, θ₁, θ₂]`, unwrapped.
pub fn simulate_star(
    p: &KuramotoStarParams,
    theta0: [f64; 3],
    t_span: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, OdeError> {
    let p = *p;
    ode::integrate(
        move |_t, s, ds| {
            let out = star_rhs(&p, &[s[0], s[1], s[2]]);
            ds.copy_from_slice(&out);
        },
        &theta0,
        t_span,
        cfg,
        IndependentAxis::TimeT,
    )
}

/// Wrap an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// The (z₁, z₂, r, ζ, μ) observables of one phase configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PolarObservables {
    pub z1: f64,
    pub z2: f64,
    pub r: f64,
    /// Unwrapped polar angle; continuous along a trajectory when the
    /// previous value is supplied.
    pub zeta: f64,
    pub mu: f64,
    /// ζ is undefined at r = 0 (antipodal peripherals). When no previous
    /// ζ exists the angle is reported as 0 and this flag set.
    pub degenerate: bool,
}

pub fn polar_observables(theta: &[f64; 3], prev_zeta: Option<f64>) -> PolarObservables {
    let [t0, t1, t2] = *theta;
    let z1 = 0.5 * ((t0 - t1).cos() + (t0 - t2).cos());
    let z2 = 0.5 * ((t0 - t1).sin() + (t0 - t2).sin());
    let r = (z1 * z1 + z2 * z2).sqrt();
    let degenerate = r < 1e-9;
    let zeta = if degenerate {
        prev_zeta.unwrap_or(0.0)
    } else {
        let raw = z2.atan2(z1);
        match prev_zeta {
            // Nearest-branch unwrapping.
            Some(prev) => raw + TAU * ((prev - raw) / TAU).round(),
            None => raw,
        }
    };
    PolarObservables {
        z1,
        z2,
        r,
        zeta,
        mu: 1.0 - r,
        degenerate,
    }
}

/// Distance of a configuration from the remote synchronization manifold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ManifoldDistance {
    /// Exact flat-torus Euclidean distance to {θ₁ = θ₂}: wrapped |θ₁−θ₂|/√2.
    pub euclidean: f64,
    /// The paper's own measure μ = 1 − r.
    pub mu: f64,
}

pub fn manifold_distance(theta: &[f64; 3]) -> ManifoldDistance {
    let diff = wrap_angle(theta[1] - theta[2]);
    ManifoldDistance {
        euclidean: diff.abs() / std::f64::consts::SQRT_2,
        mu: 1.0 - (0.5 * diff).cos().abs(),
    }
}

/// The reduced (μ, ζ) right-hand side. Symmetric couplings required.
pub fn mu_zeta_rhs(
    mu: f64,
    zeta: f64,
    p: &KuramotoStarParams,
) -> Result<(f64, f64), KuramotoError> {
    let a = p.coupling()?;
    let r = 1.0 - mu;
    let dmu = -a * (1.0 - r * r) * (zeta - p.alpha).cos();
    let dzeta = p.u - a * r * (2.0 * (zeta + p.alpha).sin() + (zeta - p.alpha).sin());
    Ok((dmu, dzeta))
}

/// Integrate the (μ, ζ) system in physical time; state `[μ, ζ]`.
pub fn simulate_mu_zeta(
    p: &KuramotoStarParams,
    mu0: f64,
    zeta0: f64,
    t_span: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, KuramotoError> {
    p.coupling()?;
    let p = *p;
    Ok(ode::integrate(
        move |_t, s, ds| {
            let (dmu, dzeta) = mu_zeta_rhs(s[0], s[1], &p).expect("symmetric params");
            ds[0] = dmu;
            ds[1] = dzeta;
        },
        &[mu0, zeta0],
        t_span,
        cfg,
        IndependentAxis::TimeT,
    )?)
}

/// The integrand of the ζ-average: `f(μ, ζ)` with `dμ/dζ = (1/u)·f(μ, ζ)`.
pub fn mu_zeta_f(mu: f64, zeta: f64, p: &KuramotoStarParams) -> Result<f64, KuramotoError> {
    let a = p.coupling()?;
    let num = -a * (2.0 - mu) * mu * (zeta - p.alpha).cos();
    let den =
        1.0 - (a / p.u) * (1.0 - mu) * (2.0 * (zeta + p.alpha).sin() + (zeta - p.alpha).sin());
    Ok(num / den)
}

/// Closed-form `f_av(μ̂) = ∫₀^{2π} f(μ̂, τ) dτ`:
///
/// ```text
/// f_av(μ̂) = 4π (2−μ̂) μ̂ u² sin 2α / ((1−μ̂)(5+4cos 2α)) · (1/u − 1/√Q),
/// Q = u² − A² (1−μ̂)² (5 + 4 cos 2α)
/// ```
///
/// Negative on 0 < μ̂ < 1 whenever u > 3A, which is exactly the condition
/// keeping √Q real for every μ̂ and α.
pub fn averaged_mu_closed_form(mu_hat: f64, p: &KuramotoStarParams) -> Result<f64, KuramotoError> {
    let a = p.coupling()?;
    if p.u <= 3.0 * a {
        return Err(KuramotoError::DetuningTooSmall {
            u: p.u,
            three_a: 3.0 * a,
        });
    }
    if !(0.0..1.0).contains(&mu_hat) {
        return Err(KuramotoError::MuOutOfRange(mu_hat));
    }
    let c2a = (2.0 * p.alpha).cos();
    let s2a = (2.0 * p.alpha).sin();
    let rm = 1.0 - mu_hat;
    let q = p.u * p.u - a * a * rm * rm * (5.0 + 4.0 * c2a);
    let g = 1.0 / p.u - 1.0 / q.sqrt();
    Ok(4.0 * PI * (2.0 - mu_hat) * mu_hat * p.u * p.u * s2a / (rm * (5.0 + 4.0 * c2a)) * g)
}

/// The linear decay-rate constant `c = (4π/9)(1/√(u² − 9A²(1−ξ)²) − 1/u)`.
pub fn averaged_mu_rate_constant(p: &KuramotoStarParams, xi: f64) -> Result<f64, KuramotoError> {
    let a = p.coupling()?;
    if p.u <= 3.0 * a {
        return Err(KuramotoError::DetuningTooSmall {
            u: p.u,
            three_a: 3.0 * a,
        });
    }
    let s = p.u * p.u - 9.0 * a * a * (1.0 - xi) * (1.0 - xi);
    Ok(4.0 * PI / 9.0 * (1.0 / s.sqrt() - 1.0 / p.u))
}

/// Closed form, quadrature cross-check, and the linear-rate audit at one μ̂.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AveragedMu {
    pub mu_hat: f64,
    pub closed_form: f64,
    /// Independent composite Gauss-Legendre quadrature of `f(μ̂, ·)` on
    /// `[0, 2π]`.
    pub quadrature: f64,
    /// Rate constant `c` for the supplied ξ.
    pub rate_c: f64,
    /// Whether `f_av(μ̂) < −c·μ̂` held at this point.
    pub linear_bound_holds: bool,
}

pub fn averaged_mu_rhs(
    mu_hat: f64,
    p: &KuramotoStarParams,
    xi: f64,
    quad_nodes: usize,
) -> Result<AveragedMu, KuramotoError> {
    let closed_form = averaged_mu_closed_form(mu_hat, p)?;
    let quadrature = quad::integrate(
        |zeta| mu_zeta_f(mu_hat, zeta, p).expect("symmetric params"),
        0.0,
        TAU,
        quad_nodes,
    );
    let rate_c = averaged_mu_rate_constant(p, xi)?;
    Ok(AveragedMu {
        mu_hat,
        closed_form,
        quadrature,
        rate_c,
        linear_bound_holds: closed_form < -rate_c * mu_hat,
    })
}

/// The two phase-locked equilibria of `x = θ₀ − θ₁ = θ₀ − θ₂` at `u = 0`:
/// `c(α) = −arctan(sin α / (3 cos α))` and `c′(α) = π + c(α)`.
pub fn phase_locked_equilibria(alpha: f64) -> (f64, f64) {
    let c = -(alpha.sin() / (3.0 * alpha.cos())).atan();
    (c, PI + c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
}

/// Eigenvalue classification of the two phase-locked manifolds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquilibriumClassification {
    pub c_alpha: f64,
    pub c_prime_alpha: f64,
    /// Eigenvalues of the transverse Jacobian at M₁, ascending.
    pub eig_m1: [f64; 2],
    pub eig_m1_prime: [f64; 2],
    pub verdict_m1: StabilityVerdict,
    pub verdict_m1_prime: StabilityVerdict,
    /// The critical shift arctan(√3) = π/3.
    pub alpha_threshold: f64,
}

fn eigs_at(x: f64, alpha: f64, a: f64) -> [f64; 2] {
    // J(x) = −A [[d, o], [o, d]] with d = cos(x+α)+cos(x−α), o = cos(x+α):
    // symmetric, eigenvalues −A(d±o).
    let d = (x + alpha).cos() + (x - alpha).cos();
    let o = (x + alpha).cos();
    let mut e = [-a * (d + o), -a * (d - o)];
    if e[0] > e[1] {
        e.swap(0, 1);
    }
    e
}

pub fn linearized_classification(alpha: f64, a: f64) -> EquilibriumClassification {
    let (c, cp) = phase_locked_equilibria(alpha);
    let eig_m1 = eigs_at(c, alpha, a);
    let eig_m1_prime = eigs_at(cp, alpha, a);
    let verdict = |e: &[f64; 2]| {
        if e[0] < 0.0 && e[1] < 0.0 {
            StabilityVerdict::Stable
        } else {
            StabilityVerdict::Unstable
        }
    };
    EquilibriumClassification {
        c_alpha: c,
        c_prime_alpha: cp,
        eig_m1,
        eig_m1_prime,
        verdict_m1: verdict(&eig_m1),
        verdict_m1_prime: verdict(&eig_m1_prime),
        alpha_threshold: 3.0f64.sqrt().atan(),
    }
}

/// LHS-minus-one of the frequency ellipse:
///
/// ```text
/// (v₁+v₂−3ω−u)²/(16A²sin²α) + (v₁−v₂−ω+u)²/(16A²cos²α) − 1
/// ```
///
/// where `v₁ = θ̇₁+θ̇₂` and `v₂ = θ̇₀`. Zero on the remote-sync limit cycle.
pub fn limit_cycle_residual(
    v1: f64,
    v2: f64,
    p: &KuramotoStarParams,
) -> Result<f64, KuramotoError> {
    let a = p.coupling()?;
    if !(0.0..FRAC_PI_2).contains(&p.alpha) || p.alpha == 0.0 {
        return Err(KuramotoError::DegenerateEllipse(p.alpha));
    }
    let s = p.alpha.sin();
    let c = p.alpha.cos();
    let e1 = v1 + v2 - 3.0 * p.omega - p.u;
    let e2 = v1 - v2 - p.omega + p.u;
    Ok(e1 * e1 / (16.0 * a * a * s * s) + e2 * e2 / (16.0 * a * a * c * c) - 1.0)
}

/// One observables row, matching the CSV column contract.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ObservablesRow {
    pub t: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub z1: f64,
    pub z2: f64,
    pub r: f64,
    pub zeta: f64,
    pub mu: f64,
    pub dist_euclid: f64,
    pub v1: f64,
    pub v2: f64,
    pub cycle_residual: f64,
}

/// Full pipeline output of one remote-synchronization experiment.
#[derive(Debug, Clone)]
pub struct RemoteSyncReport {
    pub params: KuramotoStarParams,
    pub trajectory: Trajectory,
    pub observables: Vec<ObservablesRow>,
    pub fit_mu: Result<DecayFit, FitError>,
    pub fit_theta_diff: Result<DecayFit, FitError>,
    pub classification: EquilibriumClassification,
    /// For u > 3A: worst (largest) closed-form f_av over a μ̂ grid in (0, 1);
    /// negative means the averaged decay audit passed everywhere.
    pub f_av_worst: Option<f64>,
    /// Max |ellipse residual| over the last full ζ winding (or the whole
    /// post-transient window when ζ does not wind).
    pub max_cycle_residual: f64,
    /// Growth factor of wrapped |θ₁−θ₂| relative to its initial value.
    pub theta_diff_growth: f64,
}

pub fn simulate_remote_sync_experiment(
    p: &KuramotoStarParams,
    theta0: [f64; 3],
    horizon: f64,
    cfg: &IntegratorConfig,
    transient_fraction: f64,
) -> Result<RemoteSyncReport, KuramotoError> {
    let a_sym = if p.a1 == p.a2 { Some(p.a1) } else { None };
    let traj = simulate_star(p, theta0, [0.0, horizon], cfg)?;
    let mut rows = Vec::with_capacity(traj.len());
    let mut prev_zeta = None;
    for i in 0..traj.len() {
        let s = traj.state(i);
        let th = [s[0], s[1], s[2]];
        let obs = polar_observables(&th, prev_zeta);
        prev_zeta = Some(obs.zeta);
        let d = manifold_distance(&th);
        let dv = traj.deriv(i);
        let (v1, v2) = (dv[1] + dv[2], dv[0]);
        let residual = match a_sym {
            Some(_) => limit_cycle_residual(v1, v2, p).unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        rows.push(ObservablesRow {
            t: traj.time(i),
            theta0: s[0],
            theta1: s[1],
            theta2: s[2],
            z1: obs.z1,
            z2: obs.z2,
            r: obs.r,
            zeta: obs.zeta,
            mu: obs.mu,
            dist_euclid: d.euclidean,
            v1,
            v2,
            cycle_residual: residual,
        });
    }
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let mus: Vec<f64> = rows.iter().map(|r| r.mu).collect();
    let diffs: Vec<f64> = rows.iter().map(|r| r.dist_euclid).collect();
    let fit_mu = fit_log_series(&times, &mus, transient_fraction);
    let fit_theta_diff = fit_log_series(&times, &diffs, transient_fraction);
    let coupling = a_sym.unwrap_or(0.5 * (p.a1 + p.a2));
    let classification = linearized_classification(p.alpha, coupling);

    let f_av_worst = if a_sym.is_some() && p.u > 3.0 * coupling {
        let worst = (1..100)
            .map(|i| averaged_mu_closed_form(i as f64 / 100.0, p).expect("u > 3A"))
            .fold(f64::NEG_INFINITY, f64::max);
        Some(worst)
    } else {
        None
    };

    let start = ((rows.len() as f64) * transient_fraction) as usize;
    let zeta_end = rows.last().map(|r| r.zeta).unwrap_or(0.0);
    let window: Vec<&ObservablesRow> = if (zeta_end - rows[start].zeta).abs() >= TAU {
        rows.iter()
            .filter(|r| (zeta_end - r.zeta).abs() <= TAU)
            .collect()
    } else {
        rows[start..].iter().collect()
    };
    let max_cycle_residual = window
        .iter()
        .map(|r| r.cycle_residual.abs())
        .fold(0.0, f64::max);

    // Floored so a start exactly on the manifold reads as roundoff noise,
    // not as explosive growth.
    let d0 = diffs[0].max(1e-12);
    let theta_diff_growth = diffs.iter().fold(0.0f64, |m, d| m.max(*d)) / d0;

    Ok(RemoteSyncReport {
        params: *p,
        trajectory: traj,
        observables: rows,
        fit_mu,
        fit_theta_diff,
        classification,
        f_av_worst,
        max_cycle_residual,
        theta_diff_growth,
    })
}

/// Observables CSV with the pinned column set.
pub fn write_observables_csv<W: Write>(rows: &[ObservablesRow], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "t,theta0,theta1,theta2,z1,z2,r,zeta,mu,dist_euclid,v1,v2,cycle_residual"
    )?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.theta0, r.theta1, r.theta2, r.z1, r.z2, r.r, r.zeta, r.mu, r.dist_euclid,
            r.v1, r.v2, r.cycle_residual
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn synchronized_zero_shift_rotates_at_omega() {
        let p = KuramotoStarParams::symmetric(1.3, 1.0, 0.0, 0.0);
        let rates = star_rhs(&p, &[0.7, 0.7, 0.7]);
        for r in rates {
            assert!((r - 1.3).abs() < 1e-15);
        }
    }

    #[test]
    fn swapping_peripherals_swaps_their_rates() {
        let p = KuramotoStarParams::symmetric(1.0, 1.0, 0.4, 0.7);
        let a = star_rhs(&p, &[0.2, 1.1, -0.6]);
        let b = star_rhs(&p, &[0.2, -0.6, 1.1]);
        assert!((a[0] - b[0]).abs() < 1e-15);
        assert!((a[1] - b[2]).abs() < 1e-15);
        assert!((a[2] - b[1]).abs() < 1e-15);
    }

    #[test]
    fn star_rhs_matches_hand_evaluation() {
        // ω = 1, A = 1, α = 0.5, u = 0, θ = (0.3, 0, 0): evaluate the three
        // sine terms independently.
        let p = KuramotoStarParams::symmetric(1.0, 1.0, 0.5, 0.0);
        let got = star_rhs(&p, &[0.3, 0.0, 0.0]);
        let want0 = 1.0 + (0.0 - 0.3 - 0.5f64).sin() + (0.0 - 0.3 - 0.5f64).sin();
        let want1 = 1.0 + (0.3 - 0.0 - 0.5f64).sin();
        assert!((got[0] - want0).abs() < 1e-15);
        assert!((got[1] - want1).abs() < 1e-15);
        assert!((got[2] - want1).abs() < 1e-15);
    }

    #[test]
    fn equal_peripherals_sit_on_manifold() {
        let obs = polar_observables(&[1.9, 0.4, 0.4], None);
        assert!((obs.r - 1.0).abs() < 1e-12);
        assert!(obs.mu.abs() < 1e-12);
        assert!(!obs.degenerate);
    }

    #[test]
    fn antipodal_peripherals_are_degenerate() {
        let obs = polar_observables(&[0.0, 0.5, 0.5 + PI], None);
        assert!(obs.r < 1e-12);
        assert!(obs.degenerate);
        let chained = polar_observables(&[0.0, 0.5, 0.5 + PI], Some(2.2));
        assert_eq!(chained.zeta, 2.2);
    }

    #[test]
    fn manifold_distance_closed_form() {
        let d = manifold_distance(&[0.0, 0.2, 0.0]);
        assert!((d.euclidean - 0.2 / std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((d.mu - (1.0 - 0.1f64.cos())).abs() < 1e-12);
        // Wrap invariance: θ₁ − θ₂ = 2π − 0.2 is the same point.
        let w = manifold_distance(&[0.0, TAU - 0.2, 0.0]);
        assert!((w.euclidean - d.euclidean).abs() < 1e-12);
        assert!((w.mu - d.mu).abs() < 1e-12);
    }

    #[test]
    fn mu_zeta_partial_equilibrium_and_cosine_unit() {
        let p = KuramotoStarParams::symmetric(1.0, 2.0, 0.8, 10.0);
        let (dmu, _) = mu_zeta_rhs(0.0, 1.7, &p).unwrap();
        assert_eq!(dmu, 0.0);
        // μ = 0.1, ζ = α: cos term is 1, so dμ/dt = −A(1 − 0.81).
        let (dmu, _) = mu_zeta_rhs(0.1, p.alpha, &p).unwrap();
        assert!((dmu + p.a1 * 0.19).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_couplings_rejected_by_reduction() {
        let p = KuramotoStarParams {
            omega: 1.0,
            a1: 1.0,
            a2: 1.02,
            alpha: 0.9,
            u: 0.0,
        };
        assert!(matches!(
            mu_zeta_rhs(0.1, 0.0, &p),
            Err(KuramotoError::AsymmetricCouplings { .. })
        ));
    }

    #[test]
    fn averaged_mu_vanishes_at_zero() {
        let p = KuramotoStarParams::symmetric(1.0, 1.0, 0.9, 10.0);
        assert_eq!(averaged_mu_closed_form(0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn averaged_mu_negative_for_detuned() {
        let p10 = |alpha| KuramotoStarParams::symmetric(1.0, 1.0, alpha, 10.0);
        for alpha in [0.2, 0.7, 1.1, 1.5] {
            for i in 1..20 {
                let mu = i as f64 / 20.0;
                let v = averaged_mu_closed_form(mu, &p10(alpha)).unwrap();
                assert!(v < 0.0, "alpha={alpha} mu={mu}: {v}");
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature_oracle() {
        // 2⁷-node quadrature oracle at (u=10, A=1, α=1.0, μ̂=0.3).
        let p = KuramotoStarParams::symmetric(1.0, 1.0, 1.0, 10.0);
        let r = averaged_mu_rhs(0.3, &p, 0.5, 128).unwrap();
        assert!(
            (r.closed_form - r.quadrature).abs() < 1e-8,
            "closed {} vs quad {}",
            r.closed_form,
            r.quadrature
        );
        assert!(r.linear_bound_holds);
    }

    #[test]
    fn detuning_below_3a_is_rejected() {
        let p = KuramotoStarParams::symmetric(1.0, 1.0, 0.9, 2.5);
        assert!(matches!(
            averaged_mu_closed_form(0.2, &p),
            Err(KuramotoError::DetuningTooSmall { .. })
        ));
    }

    #[test]
    fn equilibria_limits_and_quarter_pi() {
        let (c, cp) = phase_locked_equilibria(1e-12);
        assert!(c.abs() < 1e-12);
        assert!((cp - PI).abs() < 1e-9);
        let (c, cp) = phase_locked_equilibria(std::f64::consts::FRAC_PI_4);
        assert!((c + (1.0f64 / 3.0).atan()).abs() < 1e-12);
        assert!((c + 0.321751).abs() < 1e-6);
        assert_eq!(cp, PI + c);
    }

    #[test]
    fn equilibria_zero_the_locked_field() {
        // Substituting x = c(α) into 2sin(x+α) + sin(x−α) gives 0.
        for alpha in [0.1, 0.5, 0.9, 1.3, 1.52] {
            let (c, cp) = phase_locked_equilibria(alpha);
            for x in [c, cp] {
                let res = 2.0 * (x + alpha).sin() + (x - alpha).sin();
                assert!(res.abs() < 1e-12, "alpha={alpha} x={x}: {res}");
            }
        }
    }

    #[test]
    fn classification_quarter_pi_eigenvalues() {
        let cls = linearized_classification(std::f64::consts::FRAC_PI_4, 1.0);
        assert!((cls.eig_m1[0] + 2.236068).abs() < 1e-6);
        assert!((cls.eig_m1[1] + 0.447214).abs() < 1e-6);
        assert_eq!(cls.verdict_m1, StabilityVerdict::Stable);
    }

    #[test]
    fn classification_flips_at_pi_thirds() {
        let below = linearized_classification(0.9, 1.0);
        assert_eq!(below.verdict_m1, StabilityVerdict::Stable);
        assert_eq!(below.verdict_m1_prime, StabilityVerdict::Unstable);
        let above = linearized_classification(1.2, 1.0);
        assert_eq!(above.verdict_m1, StabilityVerdict::Unstable);
        assert_eq!(above.verdict_m1_prime, StabilityVerdict::Unstable);
        assert!((below.alpha_threshold - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn residual_zero_on_ellipse_and_minus_one_at_center() {
        let p = KuramotoStarParams::symmetric(1.0, 1.0, 0.8, 3.0);
        let (s, c) = (p.alpha.sin(), p.alpha.cos());
        for phi in [0.0f64, 0.9, 2.2, 4.0] {
            let sum = 3.0 * p.omega + p.u + 4.0 * p.a1 * s * phi.sin();
            let diff = p.omega - p.u + 4.0 * p.a1 * c * phi.cos();
            let v1 = 0.5 * (sum + diff);
            let v2 = 0.5 * (sum - diff);
            let r = limit_cycle_residual(v1, v2, &p).unwrap();
            assert!(r.abs() < 1e-12, "phi={phi}: {r}");
        }
        let v1 = 0.5 * ((3.0 * p.omega + p.u) + (p.omega - p.u));
        let v2 = 0.5 * ((3.0 * p.omega + p.u) - (p.omega - p.u));
        let r = limit_cycle_residual(v1, v2, &p).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn manifold_is_invariant_over_long_horizon() {
        // θ₁(0) = θ₂(0) stays wrapped-equal over horizon 100.
        let p = KuramotoStarParams::symmetric(1.0, 1.0, 0.9, 0.0);
        let traj = simulate_star(
            &p,
            [0.8, 0.1, 0.1],
            [0.0, 100.0],
            &IntegratorConfig::rk4(1e-3),
        )
        .unwrap();
        for i in 0..traj.len() {
            let s = traj.state(i);
            assert!(
                wrap_angle(s[1] - s[2]).abs() < 1e-9,
                "node {i}: {}",
                wrap_angle(s[1] - s[2])
            );
        }
    }

    #[test]
    fn zeta_rate_lower_bound_on_dense_grid() {
        // ζ̇ ≥ u − 3A over [0,1] × ℝ, the premise feeding the fast-rate
        // assumption in the detuned analysis.
        let p = KuramotoStarParams::symmetric(1.0, 1.0, 1.1, 10.0);
        let mut worst = f64::INFINITY;
        for i in 0..=200 {
            for j in 0..=400 {
                let mu = i as f64 / 200.0;
                let zeta = j as f64 * TAU / 400.0;
                let (_, dz) = mu_zeta_rhs(mu, zeta, &p).unwrap();
                worst = worst.min(dz);
            }
        }
        assert!(worst >= p.u - 3.0 * p.a1, "worst = {worst}");
    }

    proptest! {
        #[test]
        fn polar_identities_hold(t0 in -10.0..10.0f64, t1 in -10.0..10.0f64, t2 in -10.0..10.0f64) {
            let obs = polar_observables(&[t0, t1, t2], None);
            // z₁² + z₂² = r²
            prop_assert!((obs.z1 * obs.z1 + obs.z2 * obs.z2 - obs.r * obs.r).abs() < 1e-12);
            // r = |cos((θ₁−θ₂)/2)| and the √(2+2cos)/2 form
            let want = (0.5 * (t1 - t2)).cos().abs();
            prop_assert!((obs.r - want).abs() < 1e-12);
            let alt = 0.5 * (2.0 + 2.0 * (t1 - t2).cos()).max(0.0).sqrt();
            prop_assert!((obs.r - alt).abs() < 1e-12);
        }

        #[test]
        fn observables_are_rotation_invariant(
            t0 in -3.0..3.0f64, t1 in -3.0..3.0f64, t2 in -3.0..3.0f64, shift in -10.0..10.0f64
        ) {
            let p = KuramotoStarParams::symmetric(1.0, 1.0, 0.7, 2.0);
            let a = polar_observables(&[t0, t1, t2], None);
            let b = polar_observables(&[t0 + shift, t1 + shift, t2 + shift], None);
            prop_assert!((a.z1 - b.z1).abs() < 1e-12);
            prop_assert!((a.z2 - b.z2).abs() < 1e-12);
            prop_assert!((a.r - b.r).abs() < 1e-12);
            prop_assert!((a.mu - b.mu).abs() < 1e-12);
            let da = manifold_distance(&[t0, t1, t2]);
            let db = manifold_distance(&[t0 + shift, t1 + shift, t2 + shift]);
            prop_assert!((da.euclidean - db.euclidean).abs() < 1e-11);
            let ra = star_rhs(&p, &[t0, t1, t2]);
            let rb = star_rhs(&p, &[t0 + shift, t1 + shift, t2 + shift]);
            for k in 0..3 {
                prop_assert!((ra[k] - rb[k]).abs() < 1e-12);
            }
        }

        #[test]
        fn mu_zero_iff_wrapped_difference_zero(t0 in -5.0..5.0f64, t1 in -5.0..5.0f64, d in 1e-3..3.0f64) {
            // On the manifold μ vanishes; off it by a wrapped difference of
            // at least 1e-3, μ exceeds the 1e-10 resolution.
            let on = polar_observables(&[t0, t1, t1], None);
            prop_assert!(on.mu < 1e-12);
            let off = polar_observables(&[t0, t1, t1 + d], None);
            prop_assert!(off.mu > 1e-10);
        }
    }
}
