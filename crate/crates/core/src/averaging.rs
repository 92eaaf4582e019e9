//! Partial averaging over the fast axis.
//!
//! Only the `w` dynamics is averaged: the [`AveragedSystem`] evolves
//!
//! ```text
//! dw/dz = ε h_av(w, v),      h_av(w, v) = (1/T) ∫₀ᵀ h₁(w, v, τ) dτ,
//! dv/dz = ε h₂(w, v, z),
//! ```
//!
//! with `h_av` evaluated lazily per call by composite Gauss-Legendre
//! quadrature (no surrogate interpolant). `h_av(0, v) = 0` is inherited from
//! `h₁(0, v, z) = 0`, and `h_av` is `z`-independent by construction.
//!
//! [`averaging_defect`] computes `u(w,v,z) = ∫₀ᶻ (h₁ − h_av) dτ`, the term
//! behind the change of variables `x = w_p + ε u`; its period integral
//! vanishes, so the quadrature folds `z` modulo `T`.

use crate::linalg::spectral_norm;
use crate::ode::{IntegratorConfig, OdeError, Trajectory};
use crate::quad;
use crate::rng;
use crate::system::{Domain, ReducedSystem, VectorField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AveragingError {
    #[error("quadrature needs at least 8 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("non-finite integrand at z = {z}")]
    NonFiniteIntegrand { z: f64 },
    #[error("defect requires z >= 0, got {0}")]
    NegativeAxis(f64),
    #[error("non-finite derivative sample at {0:?}")]
    NonFiniteDerivative(Vec<f64>),
}

/// Default total Gauss-Legendre node count (8 panels x 8 nodes).
pub const DEFAULT_NODES: usize = 64;

/// The partially averaged system.
#[derive(Clone)]
pub struct AveragedSystem {
    pub name: String,
    pub dim_x: usize,
    pub dim_y: usize,
    pub epsilon: f64,
    pub period: f64,
    pub quadrature_nodes: usize,
    h1: VectorField,
    h2: VectorField,
}

/// Build the averaged system from a reduced one. `nodes >= 8`.
pub fn average_reduced(
    red: &ReducedSystem,
    nodes: usize,
) -> Result<AveragedSystem, AveragingError> {
    if nodes < 8 {
        return Err(AveragingError::TooFewNodes(nodes));
    }
    Ok(AveragedSystem {
        name: format!("{}/averaged", red.name),
        dim_x: red.dim_x,
        dim_y: red.dim_y,
        epsilon: red.epsilon,
        period: red.period,
        quadrature_nodes: nodes,
        h1: red.h1_field(),
        h2: red.h2_field(),
    })
}

impl AveragedSystem {
    /// `h_av(w, v)` via quadrature of `h₁` over `[offset, offset + T]`.
    ///
    /// Periodicity makes the result offset-independent up to quadrature
    /// error; the offset argument exists so that invariance can be audited.
    pub fn h_av_over(&self, w: &[f64], v: &[f64], offset: f64, out: &mut [f64]) {
        let h1 = &self.h1;
        quad::integrate_vec(
            |tau, slot| h1(w, v, tau, slot),
            offset,
            offset + self.period,
            self.quadrature_nodes,
            out,
        );
        for o in out.iter_mut() {
            *o /= self.period;
        }
    }

    /// `h_av(w, v)` over the canonical period `[0, T]`.
    pub fn h_av(&self, w: &[f64], v: &[f64], out: &mut [f64]) {
        self.h_av_over(w, v, 0.0, out);
    }

    pub fn eval_h2(&self, w: &[f64], v: &[f64], z: f64, out: &mut [f64]) {
        (self.h2)(w, v, z, out);
    }

    pub fn eval_h1(&self, w: &[f64], v: &[f64], z: f64, out: &mut [f64]) {
        (self.h1)(w, v, z, out);
    }

    /// Integrate `dw/dz = ε h_av`, `dv/dz = ε h₂` on the fast axis.
    /// State layout `[w.., v..]`.
    pub fn simulate(
        &self,
        w0: &[f64],
        v0: &[f64],
        z_span: [f64; 2],
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory, OdeError> {
        assert_eq!(w0.len(), self.dim_x);
        assert_eq!(v0.len(), self.dim_y);
        let (n, m) = (self.dim_x, self.dim_y);
        let eps = self.epsilon;
        let this = self.clone();
        let mut state0 = Vec::with_capacity(n + m);
        state0.extend_from_slice(w0);
        state0.extend_from_slice(v0);
        crate::ode::integrate(
            move |z, s, ds| {
                let (w, v) = s.split_at(n);
                let (dw, dv) = ds.split_at_mut(n);
                this.h_av(w, v, dw);
                this.eval_h2(w, v, z, dv);
                for q in dw.iter_mut().chain(dv.iter_mut()) {
                    *q *= eps;
                }
            },
            &state0,
            z_span,
            cfg,
            crate::ode::IndependentAxis::FastAxisZ,
        )
    }
}

/// The defect integral `u(w,v,z)` with its norm diagnostics.
#[derive(Debug, Clone)]
pub struct Defect {
    pub u: Vec<f64>,
    pub norm: f64,
    /// The proof-side bound `2·T·L₁·‖w‖`, when `L₁` was supplied.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

/// `u(w,v,z) = ∫₀ᶻ (h₁(w,v,τ) − h_av(w,v)) dτ`, computed over `z mod T`.
pub fn averaging_defect(
    av: &AveragedSystem,
    w: &[f64],
    v: &[f64],
    z: f64,
    l1: Option<f64>,
) -> Result<Defect, AveragingError> {
    if z < 0.0 {
        return Err(AveragingError::NegativeAxis(z));
    }
    // Fold whole periods away only beyond the first one, so the z = T case
    // genuinely integrates Δ over a full period instead of collapsing to an
    // empty interval.
    let z_fold = if z <= av.period {
        z
    } else {
        z.rem_euclid(av.period)
    };
    let mut h_av = vec![0.0; av.dim_x];
    av.h_av(w, v, &mut h_av);
    let mut u = vec![0.0; av.dim_x];
    if z_fold > 0.0 {
        let h1 = &av.h1;
        let h_av_ref = &h_av;
        quad::integrate_vec(
            |tau, slot| {
                h1(w, v, tau, slot);
                for (s, a) in slot.iter_mut().zip(h_av_ref) {
                    *s -= a;
                }
            },
            0.0,
            z_fold,
            av.quadrature_nodes,
            &mut u,
        );
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(AveragingError::NonFiniteIntegrand { z: z_fold });
    }
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let bound = l1.map(|l| 2.0 * av.period * l * wn);
    let within_bound = bound.map(|b| norm <= b);
    Ok(Defect {
        u,
        norm,
        bound,
        within_bound,
    })
}

/// Sampled suprema of the reduced fields' Jacobians.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct JacobianBounds {
    /// sup ‖∂h₁/∂x‖ over the sampled domain.
    pub l1: f64,
    /// sup ‖∂h₂/∂x‖.
    pub l2: f64,
    /// sup ‖∂h₁/∂v‖ / ‖x‖ over samples with x ≠ 0.
    pub l1_prime: f64,
    /// sup ‖∂h₂/∂v‖ / ‖x‖.
    pub l2_prime: f64,
}

fn fd_step(point_norm: f64) -> f64 {
    (1e-6 * point_norm).max(1e-6)
}

/// Central-difference Jacobian of one field block w.r.t. a coordinate block.
fn jacobian_block(
    field: &VectorField,
    x: &[f64],
    y: &[f64],
    z: f64,
    wrt_x: bool,
    out_dim: usize,
) -> Vec<f64> {
    let in_dim = if wrt_x { x.len() } else { y.len() };
    let pn = x.iter().chain(y.iter()).map(|q| q * q).sum::<f64>().sqrt();
    let h = fd_step(pn);
    let mut jac = vec![0.0; out_dim * in_dim];
    let mut plus = vec![0.0; out_dim];
    let mut minus = vec![0.0; out_dim];
    let mut xb = x.to_vec();
    let mut yb = y.to_vec();
    for j in 0..in_dim {
        let slot = if wrt_x { &mut xb[j] } else { &mut yb[j] };
        let orig = *slot;
        *slot = orig + h;
        field(&xb, &yb, z, &mut plus);
        let slot = if wrt_x { &mut xb[j] } else { &mut yb[j] };
        *slot = orig - h;
        field(&xb, &yb, z, &mut minus);
        let slot = if wrt_x { &mut xb[j] } else { &mut yb[j] };
        *slot = orig;
        for i in 0..out_dim {
            jac[i * in_dim + j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

/// Estimate `L₁, L₂, L₁′, L₂′` by sampling the domain.
///
/// Feeds the Theorem-1 hypothesis audit and the defect-bound diagnostic.
pub fn estimate_jacobian_bounds(
    red: &ReducedSystem,
    domain: &Domain,
    samples: usize,
    seed: u64,
) -> Result<JacobianBounds, AveragingError> {
    let mut rng = rng::member_rng(seed, 0);
    let dims = domain.x.len() + domain.y.len() + 1;
    let unit_points = rng::latin_hypercube(&mut rng, samples.max(1), dims);
    let (n, m) = (red.dim_x, red.dim_y);
    let mut b = JacobianBounds {
        l1: 0.0,
        l2: 0.0,
        l1_prime: 0.0,
        l2_prime: 0.0,
    };
    for unit in &unit_points {
        let map = |r: &[f64; 2], u: f64| r[0] + (r[1] - r[0]) * u;
        let x: Vec<f64> = domain.x.iter().zip(unit).map(|(r, u)| map(r, *u)).collect();
        let y: Vec<f64> = domain
            .y
            .iter()
            .zip(&unit[n..])
            .map(|(r, u)| map(r, *u))
            .collect();
        let z = map(&domain.z, unit[n + m]);
        let j1x = jacobian_block(&red.h1_field(), &x, &y, z, true, n);
        let j2x = jacobian_block(&red.h2_field(), &x, &y, z, true, m);
        for v in j1x.iter().chain(j2x.iter()) {
            if !v.is_finite() {
                return Err(AveragingError::NonFiniteDerivative(x.clone()));
            }
        }
        b.l1 = b.l1.max(spectral_norm(&j1x, n, n));
        b.l2 = b.l2.max(spectral_norm(&j2x, m, n));
        let xn = x.iter().map(|q| q * q).sum::<f64>().sqrt();
        if m > 0 && xn > 1e-9 {
            let j1v = jacobian_block(&red.h1_field(), &x, &y, z, false, n);
            let j2v = jacobian_block(&red.h2_field(), &x, &y, z, false, m);
            b.l1_prime = b.l1_prime.max(spectral_norm(&j1v, n, m) / xn);
            b.l2_prime = b.l2_prime.max(spectral_norm(&j2v, m, m) / xn);
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{example1, kuramoto_star_mu_zeta, reduce_to_fast_axis, ReducedSystem};
    use std::f64::consts::{PI, TAU};

    fn example1_reduced(eps: f64) -> ReducedSystem {
        reduce_to_fast_axis(&example1(eps))
    }

    fn example1_h_av_closed(w: f64, v: f64) -> f64 {
        (-w - 0.2 * w * v.sin()) / (3.0 - w.sin() + v.cos())
    }

    #[test]
    fn z_independent_field_averages_to_itself() {
        let red = ReducedSystem::from_fields(
            "static",
            1,
            1,
            0.1,
            TAU,
            |x, y, _z, out| out[0] = -x[0] * (1.0 + y[0] * y[0]),
            |_x, _y, _z, out| out[0] = 0.0,
        );
        let av = average_reduced(&red, 64).unwrap();
        let mut got = [0.0];
        av.h_av(&[0.7], &[0.4], &mut got);
        let want = -0.7 * (1.0 + 0.16);
        assert!((got[0] - want).abs() < 1e-12);
    }

    #[test]
    fn example1_average_matches_closed_form_on_grid() {
        let av = average_reduced(&example1_reduced(0.05), 64).unwrap();
        let mut out = [0.0];
        for i in 0..20 {
            for j in 0..20 {
                let w = -0.5 + i as f64 / 19.0;
                let v = -PI + TAU * j as f64 / 19.0;
                av.h_av(&[w], &[v], &mut out);
                let want = example1_h_av_closed(w, v);
                assert!(
                    (out[0] - want).abs() < 1e-10,
                    "w={w} v={v}: {} vs {want}",
                    out[0]
                );
            }
        }
    }

    #[test]
    fn averaged_vanishes_at_w_zero() {
        let av = average_reduced(&example1_reduced(0.05), 64).unwrap();
        let mut out = [0.0];
        for j in 0..40 {
            let v = -PI + TAU * j as f64 / 39.0;
            av.h_av(&[0.0], &[v], &mut out);
            assert!(out[0].abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_nodes_changes_nothing_measurable() {
        let red = example1_reduced(0.05);
        let a64 = average_reduced(&red, 64).unwrap();
        let a128 = average_reduced(&red, 128).unwrap();
        let mut g64 = [0.0];
        let mut g128 = [0.0];
        for (w, v) in [(0.3, 0.2), (-0.4, 2.5), (0.1, -2.9)] {
            a64.h_av(&[w], &[v], &mut g64);
            a128.h_av(&[w], &[v], &mut g128);
            assert!((g64[0] - g128[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn period_shift_invariance() {
        let av = average_reduced(&example1_reduced(0.05), 64).unwrap();
        let mut base = [0.0];
        let mut shifted = [0.0];
        av.h_av(&[0.25], &[1.3], &mut base);
        for s in [0.7, 2.9, -1.4, 11.0] {
            av.h_av_over(&[0.25], &[1.3], s, &mut shifted);
            assert!((base[0] - shifted[0]).abs() < 1e-10, "offset {s}");
        }
    }

    #[test]
    fn kuramoto_average_matches_corrected_closed_form() {
        // Generic quadrature of h₁ against the closed-form average of
        // f(μ̂, ·): h_av = f_av / (2π u).
        let (a, alpha, u) = (1.0, 1.0, 10.0);
        let red = reduce_to_fast_axis(&kuramoto_star_mu_zeta(a, alpha, u));
        let av = average_reduced(&red, 128).unwrap();
        let mut got = [0.0];
        for mu in [0.05, 0.3, 0.7, 0.95] {
            av.h_av(&[mu], &[], &mut got);
            let f_av = crate::kuramoto::averaged_mu_closed_form(
                mu,
                &crate::kuramoto::KuramotoStarParams::symmetric(1.0, a, alpha, u),
            )
            .unwrap();
            let want = f_av / (TAU * u);
            assert!(
                (got[0] - want).abs() < 1e-8,
                "mu={mu}: {} vs {want}",
                got[0]
            );
        }
    }

    #[test]
    fn defect_zero_for_z_independent_field() {
        let red = ReducedSystem::from_fields(
            "static",
            1,
            0,
            0.1,
            TAU,
            |x, _y, _z, out| out[0] = -x[0],
            |_x, _y, _z, _out| {},
        );
        let av = average_reduced(&red, 64).unwrap();
        for z in [0.3, 1.0, 4.4, 6.0] {
            let d = averaging_defect(&av, &[0.5], &[], z, None).unwrap();
            assert!(d.norm < 1e-13, "z = {z}: {}", d.norm);
        }
    }

    #[test]
    fn defect_vanishes_at_full_period() {
        let av = average_reduced(&example1_reduced(0.05), 64).unwrap();
        for (w, v) in [(0.1, 0.0), (0.3, 1.2), (-0.2, -2.0)] {
            let d = averaging_defect(&av, &[w], &[v], TAU, None).unwrap();
            assert!(d.norm < 1e-10, "w={w} v={v}: {}", d.norm);
        }
    }

    #[test]
    fn example1_defect_matches_dense_quadrature_oracle_and_bound() {
        let red = example1_reduced(0.05);
        let av = average_reduced(&red, 64).unwrap();
        let (w, v, z) = (0.1, 0.0, PI / 2.0);
        // Independent oracle: 10^4-node quadrature of the defect integrand.
        let h_av = example1_h_av_closed(w, v);
        let oracle = quad::integrate(
            |tau| (-w - 0.2 * w * v.sin() - 2.0 * w * tau.cos()) / (3.0 - w.sin() + v.cos()) - h_av,
            0.0,
            z,
            10_000,
        );
        let dom = Domain::centered(1, 0.5, vec![[-PI, PI]], TAU);
        let bounds = estimate_jacobian_bounds(&red, &dom, 3_000, 21).unwrap();
        let d = averaging_defect(&av, &[w], &[v], z, Some(bounds.l1)).unwrap();
        assert!((d.u[0] - oracle).abs() < 1e-9, "{} vs {oracle}", d.u[0]);
        assert_eq!(d.within_bound, Some(true));
        assert!(d.norm <= 2.0 * TAU * bounds.l1 * 0.1);
    }

    #[test]
    fn defect_rejects_negative_axis() {
        let av = average_reduced(&example1_reduced(0.05), 64).unwrap();
        assert!(matches!(
            averaging_defect(&av, &[0.1], &[0.0], -1.0, None),
            Err(AveragingError::NegativeAxis(_))
        ));
    }

    #[test]
    fn linear_field_jacobian_bound_is_matrix_norm() {
        // h1 = A x with A = [[-2, 1], [0, -1]]: ‖A‖₂ computed densely.
        let red = ReducedSystem::from_fields(
            "linear",
            2,
            1,
            0.1,
            TAU,
            |x, _y, _z, out| {
                out[0] = -2.0 * x[0] + x[1];
                out[1] = -x[1];
            },
            |_x, _y, _z, out| out[0] = 0.0,
        );
        let dom = Domain {
            x: vec![[-1.0, 1.0], [-1.0, 1.0]],
            y: vec![[-1.0, 1.0]],
            z: [0.0, TAU],
        };
        let got = estimate_jacobian_bounds(&red, &dom, 200, 3).unwrap();
        let want = spectral_norm(&[-2.0, 1.0, 0.0, -1.0], 2, 2);
        assert!((got.l1 - want).abs() < 1e-6, "{} vs {want}", got.l1);
        assert!(got.l2 < 1e-6);
    }

    #[test]
    fn example1_bounds_finite_on_ball() {
        let red = example1_reduced(0.05);
        let dom = Domain::centered(1, 0.5, vec![[-PI, PI]], TAU);
        let b = estimate_jacobian_bounds(&red, &dom, 3_000, 17).unwrap();
        assert!(b.l1.is_finite() && b.l1 > 0.0);
        assert!(b.l2.is_finite() && b.l2 > 0.0);
        assert!(b.l1_prime.is_finite());
        assert!(b.l2_prime.is_finite());
    }

    #[test]
    fn x_times_sin_v_has_linear_in_x_v_derivative() {
        // h1 = x sin(v): ∂h1/∂v = x cos(v), so sup ‖∂h1/∂v‖/‖x‖ ≈ 1.
        let red = ReducedSystem::from_fields(
            "xsinv",
            1,
            1,
            0.1,
            TAU,
            |x, y, _z, out| out[0] = x[0] * y[0].sin(),
            |_x, _y, _z, out| out[0] = 0.0,
        );
        let dom = Domain {
            x: vec![[-0.5, 0.5]],
            y: vec![[-PI, PI]],
            z: [0.0, TAU],
        };
        let b = estimate_jacobian_bounds(&red, &dom, 4_000, 9).unwrap();
        assert!(b.l1_prime <= 1.0 + 1e-6);
        assert!(b.l1_prime > 0.95, "l1' = {}", b.l1_prime);
    }
}
