//! Numerical construction and verification of converse Lyapunov
//! certificates for partially exponentially stable systems.
//!
//! For a system `dw/dz = φ₁(w,v,z)`, `dv/dz = φ₂(w,v,z)` with
//! `φᵢ(0,v,z) = 0`, the certificate is the trajectory functional
//!
//! ```text
//! V(w,v,z) = ∫_z^{z+δ} ‖φ₁-flow(τ; w,v,z)‖² dτ
//! ```
//!
//! evaluated by integrating the flow with an augmented quadrature state.
//! Constants are fitted grid-wise:
//!
//! * `c₁ ≤ V/‖w‖² ≤ c₂` from the min/max of the ratio,
//! * `c₃` from the total derivative along trajectories (central finite
//!   difference of V along the flow),
//! * `c₄, c₅` from central-difference spatial gradients.
//!
//! Fitted constants carry a configurable slack so a verified certificate
//! has explicit margin rather than touching equality at the fitting points.
//! Margins are grid-wise only; nothing is claimed between grid points. The
//! gradient constants come straight from sampled difference quotients, not
//! from the `(λ − L)`-type closed forms of the existence proof, so the
//! degenerate λ = L case never arises here.
//!
//! Evaluation uses fixed-step RK4 on purpose: the numerical flow is then a
//! smooth function of the initial condition, so the finite differences that
//! produce `c₃, c₄, c₅` see correlated integration error and stay clean.

use crate::averaging::AveragedSystem;
use crate::ode::{self, IndependentAxis, IntegratorConfig, OdeError, Trajectory};
use crate::system::VectorField;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

/// Central-difference step for the gradient inequalities.
pub const GRAD_FD_STEP: f64 = 1e-5;
/// Grid points with ‖w‖ below this sit on the zero line and are excluded
/// from ratio fits.
pub const W_ZERO_TOL: f64 = 1e-9;
/// Floor for c₅ when the certificate has no v-dependence at all.
pub const C5_FLOOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LyapunovError {
    #[error("degenerate certificate: {name} = {value}; system not exponentially w-stable on this grid, or grid/horizon ill-chosen")]
    Degenerate { name: &'static str, value: f64 },
    #[error("V = {value} at a zero-line grid point (w = 0); expected 0")]
    ZeroLineViolated { value: f64 },
    #[error("flow integration failed: {0}")]
    Ode(#[from] OdeError),
}

/// A generic two-block system `dw/dz = φ₁(w,v,z)`, `dv/dz = φ₂(w,v,z)`.
#[derive(Clone)]
pub struct GenericSystem {
    pub dim_w: usize,
    pub dim_v: usize,
    phi1: VectorField,
    phi2: VectorField,
}

impl GenericSystem {
    pub fn new(
        dim_w: usize,
        dim_v: usize,
        phi1: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
        phi2: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        GenericSystem {
            dim_w,
            dim_v,
            phi1: Arc::new(phi1),
            phi2: Arc::new(phi2),
        }
    }

    /// The averaged system in generic form: `φ₁ = ε·h_av`, `φ₂ = ε·h₂`.
    pub fn from_averaged(av: &AveragedSystem) -> Self {
        let a1 = av.clone();
        let a2 = av.clone();
        let eps = av.epsilon;
        GenericSystem {
            dim_w: av.dim_x,
            dim_v: av.dim_y,
            phi1: Arc::new(move |w, v, _z, out| {
                a1.h_av(w, v, out);
                for q in out.iter_mut() {
                    *q *= eps;
                }
            }),
            phi2: Arc::new(move |w, v, z, out| {
                a2.eval_h2(w, v, z, out);
                for q in out.iter_mut() {
                    *q *= eps;
                }
            }),
        }
    }

    /// Additively perturbed copy: `φᵢ + gᵢ`.
    pub fn with_perturbation(
        &self,
        g1: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
        g2: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        let base1 = self.phi1.clone();
        let base2 = self.phi2.clone();
        let (n, m) = (self.dim_w, self.dim_v);
        GenericSystem {
            dim_w: n,
            dim_v: m,
            phi1: Arc::new(move |w, v, z, out| {
                base1(w, v, z, out);
                let mut g = vec![0.0; out.len()];
                g1(w, v, z, &mut g);
                for (o, gi) in out.iter_mut().zip(&g) {
                    *o += gi;
                }
            }),
            phi2: Arc::new(move |w, v, z, out| {
                base2(w, v, z, out);
                let mut g = vec![0.0; out.len()];
                g2(w, v, z, &mut g);
                for (o, gi) in out.iter_mut().zip(&g) {
                    *o += gi;
                }
            }),
        }
    }

    pub fn eval_phi1(&self, w: &[f64], v: &[f64], z: f64, out: &mut [f64]) {
        (self.phi1)(w, v, z, out);
    }

    /// Integrate `[w, v]` over `z_span`.
    pub fn simulate(
        &self,
        w0: &[f64],
        v0: &[f64],
        z_span: [f64; 2],
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory, OdeError> {
        let (n, m) = (self.dim_w, self.dim_v);
        assert_eq!(w0.len(), n);
        assert_eq!(v0.len(), m);
        let (p1, p2) = (self.phi1.clone(), self.phi2.clone());
        let mut s0 = Vec::with_capacity(n + m);
        s0.extend_from_slice(w0);
        s0.extend_from_slice(v0);
        ode::integrate(
            move |z, s, ds| {
                let (w, v) = s.split_at(n);
                let (dw, dv) = ds.split_at_mut(n);
                p1(w, v, z, dw);
                p2(w, v, z, dv);
            },
            &s0,
            z_span,
            cfg,
            IndependentAxis::FastAxisZ,
        )
    }
}

/// Cartesian sampling grid over `(w, v, z)`.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovGrid {
    pub w_axes: Vec<Vec<f64>>,
    pub v_axes: Vec<Vec<f64>>,
    pub z_axis: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl LyapunovGrid {
    /// Symmetric box grid: each w axis spans `[-w_radius, w_radius]` with
    /// `n_w` points (odd counts include the zero line), each v axis spans
    /// its range with `n_v` points, and z takes `n_z` points over one
    /// period.
    pub fn box_grid(
        dim_w: usize,
        w_radius: f64,
        n_w: usize,
        v_ranges: &[[f64; 2]],
        n_v: usize,
        period: f64,
        n_z: usize,
    ) -> Self {
        LyapunovGrid {
            w_axes: (0..dim_w)
                .map(|_| linspace(-w_radius, w_radius, n_w))
                .collect(),
            v_axes: v_ranges.iter().map(|r| linspace(r[0], r[1], n_v)).collect(),
            z_axis: (0..n_z).map(|i| period * i as f64 / n_z as f64).collect(),
        }
    }

    /// Largest ‖w‖ reachable on the grid (the certificate's ball radius).
    pub fn w_radius(&self) -> f64 {
        self.w_axes
            .iter()
            .map(|ax| ax.iter().fold(0.0f64, |m, x| m.max(x.abs())).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// All grid points, row-major.
    pub fn points(&self) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
        let mut pts = Vec::new();
        let mut w_idx = vec![0usize; self.w_axes.len()];
        loop {
            let w: Vec<f64> = w_idx
                .iter()
                .zip(&self.w_axes)
                .map(|(i, ax)| ax[*i])
                .collect();
            let mut v_idx = vec![0usize; self.v_axes.len()];
            loop {
                let v: Vec<f64> = v_idx
                    .iter()
                    .zip(&self.v_axes)
                    .map(|(i, ax)| ax[*i])
                    .collect();
                for z in &self.z_axis {
                    pts.push((w.clone(), v.clone(), *z));
                }
                if !advance(&mut v_idx, &self.v_axes) {
                    break;
                }
            }
            if !advance(&mut w_idx, &self.w_axes) {
                break;
            }
        }
        pts
    }

    pub fn describe(&self) -> String {
        format!(
            "w:{:?} v:{:?} z:{}",
            self.w_axes.iter().map(Vec::len).collect::<Vec<_>>(),
            self.v_axes.iter().map(Vec::len).collect::<Vec<_>>(),
            self.z_axis.len()
        )
    }
}

fn advance(idx: &mut [usize], axes: &[Vec<f64>]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < axes[k].len() {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Evaluates `V(w,v,z)` by flow integration with an augmented quadrature
/// state, with fixed-step RK4 at `step`.
#[derive(Clone)]
pub struct LyapunovEvaluator {
    sys: GenericSystem,
    pub delta: f64,
    pub step: f64,
}

/// Anything that can stand in for the certificate's value function; the
/// test suite wraps evaluators to corrupt them deliberately.
pub trait LyapunovEval: Sync {
    fn value(&self, w: &[f64], v: &[f64], z: f64) -> Result<f64, OdeError>;
}

impl LyapunovEvaluator {
    pub fn new(sys: &GenericSystem, delta: f64, step: f64) -> Self {
        LyapunovEvaluator {
            sys: sys.clone(),
            delta,
            step,
        }
    }

    /// Flow map: advance `[w, v]` by `span` starting at `z`.
    pub fn flow(
        &self,
        w: &[f64],
        v: &[f64],
        z: f64,
        span: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), OdeError> {
        let traj = self
            .sys
            .simulate(w, v, [z, z + span], &IntegratorConfig::rk4(self.step))?;
        let end = traj.last_state();
        Ok((
            end[..self.sys.dim_w].to_vec(),
            end[self.sys.dim_w..].to_vec(),
        ))
    }
}

impl LyapunovEval for LyapunovEvaluator {
    fn value(&self, w: &[f64], v: &[f64], z: f64) -> Result<f64, OdeError> {
        let (n, m) = (self.sys.dim_w, self.sys.dim_v);
        let sys = &self.sys;
        let mut s0 = Vec::with_capacity(n + m + 1);
        s0.extend_from_slice(w);
        s0.extend_from_slice(v);
        s0.push(0.0);
        let traj = ode::integrate(
            |zz, s, ds| {
                let (wv, _q) = s.split_at(n + m);
                let (ww, vv) = wv.split_at(n);
                let (dwv, dq) = ds.split_at_mut(n + m);
                let (dw, dv) = dwv.split_at_mut(n);
                sys.eval_phi1(ww, vv, zz, dw);
                (sys.phi2)(ww, vv, zz, dv);
                dq[0] = ww.iter().map(|x| x * x).sum();
            },
            &s0,
            [z, z + self.delta],
            &IntegratorConfig::rk4(self.step),
            IndependentAxis::FastAxisZ,
        )?;
        Ok(traj.last_state()[n + m])
    }
}

/// Grid-fitted certificate data.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovEstimate {
    pub delta: f64,
    pub grid: LyapunovGrid,
    /// V at every grid point, in `grid.points()` order.
    pub values: Vec<f64>,
    /// `[c₁, c₂, c₃, c₄, c₅]`.
    pub c: [f64; 5],
    /// Ball radius of the grid (the certificate's δ-ball).
    pub w_radius: f64,
    /// Relative slack baked into the fitted constants.
    pub slack: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    /// Worst relative margin over the grid; negative means violated.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub checks: Vec<InequalityCheck>,
    pub pass: bool,
    pub min_margin: f64,
}

struct PointSample {
    w_norm: f64,
    value: f64,
    vdot: f64,
    grad_w_norm: f64,
    grad_v_norm: f64,
}

fn sample_point(
    v_eval: &dyn LyapunovEval,
    flow: &LyapunovEvaluator,
    w: &[f64],
    v: &[f64],
    z: f64,
) -> Result<PointSample, OdeError> {
    let value = v_eval.value(w, v, z)?;
    let w_norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    // Total derivative along the flow, central.
    let h = flow.step;
    let (wp, vp) = flow.flow(w, v, z, h)?;
    let (wm, vm) = flow.flow(w, v, z, -h)?;
    let vdot = (v_eval.value(&wp, &vp, z + h)? - v_eval.value(&wm, &vm, z - h)?) / (2.0 * h);
    // Spatial gradients, central differences.
    let mut grad_w_sq = 0.0;
    let mut wb = w.to_vec();
    for j in 0..w.len() {
        let orig = wb[j];
        wb[j] = orig + GRAD_FD_STEP;
        let p = v_eval.value(&wb, v, z)?;
        wb[j] = orig - GRAD_FD_STEP;
        let q = v_eval.value(&wb, v, z)?;
        wb[j] = orig;
        let g = (p - q) / (2.0 * GRAD_FD_STEP);
        grad_w_sq += g * g;
    }
    let mut grad_v_sq = 0.0;
    let mut vb = v.to_vec();
    for j in 0..v.len() {
        let orig = vb[j];
        vb[j] = orig + GRAD_FD_STEP;
        let p = v_eval.value(w, &vb, z)?;
        vb[j] = orig - GRAD_FD_STEP;
        let q = v_eval.value(w, &vb, z)?;
        vb[j] = orig;
        let g = (p - q) / (2.0 * GRAD_FD_STEP);
        grad_v_sq += g * g;
    }
    Ok(PointSample {
        w_norm,
        value,
        vdot,
        grad_w_norm: grad_w_sq.sqrt(),
        grad_v_norm: grad_v_sq.sqrt(),
    })
}

/// Construct the certificate on a grid.
///
/// Preconditions owed by the caller: the system was assessed stable on the
/// grid's w-radius, and `delta` is several multiples of `1/λ̂` so the
/// `e^{−2λδ}` terms are negligible (5/λ̂ is the usual choice).
pub fn build_converse_lyapunov(
    sys: &GenericSystem,
    delta: f64,
    grid: LyapunovGrid,
    step: f64,
    slack: f64,
) -> Result<(LyapunovEstimate, LyapunovEvaluator), LyapunovError> {
    let evaluator = LyapunovEvaluator::new(sys, delta, step);
    let points = grid.points();
    let samples: Vec<Result<PointSample, OdeError>> = points
        .par_iter()
        .map(|(w, v, z)| sample_point(&evaluator, &evaluator, w, v, *z))
        .collect();
    let mut values = Vec::with_capacity(points.len());
    let mut ratio_v = (f64::INFINITY, f64::NEG_INFINITY);
    let mut min_decay = f64::INFINITY;
    let mut max_gw = 0.0f64;
    let mut max_gv = 0.0f64;
    for s in samples {
        let s = s?;
        values.push(s.value);
        if s.w_norm < W_ZERO_TOL {
            if s.value.abs() > 1e-12 {
                return Err(LyapunovError::ZeroLineViolated { value: s.value });
            }
            continue;
        }
        let w2 = s.w_norm * s.w_norm;
        ratio_v.0 = ratio_v.0.min(s.value / w2);
        ratio_v.1 = ratio_v.1.max(s.value / w2);
        min_decay = min_decay.min(-s.vdot / w2);
        max_gw = max_gw.max(s.grad_w_norm / s.w_norm);
        max_gv = max_gv.max(s.grad_v_norm / s.w_norm);
    }
    let c1 = (1.0 - slack) * ratio_v.0;
    let c2 = (1.0 + slack) * ratio_v.1;
    let c3 = (1.0 - slack) * min_decay;
    let c4 = (1.0 + slack) * max_gw;
    let c5 = ((1.0 + slack) * max_gv).max(C5_FLOOR);
    if !(c1 > 0.0) {
        return Err(LyapunovError::Degenerate {
            name: "c1",
            value: c1,
        });
    }
    if !(c3 > 0.0) {
        return Err(LyapunovError::Degenerate {
            name: "c3",
            value: c3,
        });
    }
    let w_radius = grid.w_radius();
    Ok((
        LyapunovEstimate {
            delta,
            grid,
            values,
            c: [c1, c2, c3, c4, c5],
            w_radius,
            slack,
            step,
        },
        evaluator,
    ))
}

/// Re-check the four certificate inequalities grid-wise against a value
/// function (normally the built evaluator; corrupted stand-ins are how the
/// suite proves the checks have teeth). Gradients use central differences
/// with step 1e-5; the flow for the decay inequality comes from the clean
/// system.
pub fn verify_lyapunov_certificate(
    est: &LyapunovEstimate,
    v_eval: &dyn LyapunovEval,
    sys: &GenericSystem,
) -> Result<CertificateReport, LyapunovError> {
    let flow = LyapunovEvaluator::new(sys, est.delta, est.step);
    let [c1, c2, c3, c4, c5] = est.c;
    let points = est.grid.points();
    let samples: Vec<Result<PointSample, OdeError>> = points
        .par_iter()
        .map(|(w, v, z)| sample_point(v_eval, &flow, w, v, *z))
        .collect();
    let mut m_lower = f64::INFINITY;
    let mut m_upper = f64::INFINITY;
    let mut m_decay = f64::INFINITY;
    let mut m_gw = f64::INFINITY;
    let mut m_gv = f64::INFINITY;
    let mut has_v = false;
    for s in samples {
        let s = s?;
        if s.w_norm < W_ZERO_TOL {
            continue;
        }
        let w2 = s.w_norm * s.w_norm;
        m_lower = m_lower.min(s.value / (c1 * w2) - 1.0);
        m_upper = m_upper.min(1.0 - s.value / (c2 * w2));
        m_decay = m_decay.min(-s.vdot / (c3 * w2) - 1.0);
        m_gw = m_gw.min(1.0 - s.grad_w_norm / (c4 * s.w_norm));
        if !est.grid.v_axes.is_empty() {
            has_v = true;
            m_gv = m_gv.min(1.0 - s.grad_v_norm / (c5 * s.w_norm));
        }
    }
    if !has_v {
        // No v block: the inequality is vacuous.
        m_gv = 1.0;
    }
    let checks = vec![
        InequalityCheck {
            name: "quadratic_lower",
            margin: m_lower,
            pass: m_lower >= 0.0,
        },
        InequalityCheck {
            name: "quadratic_upper",
            margin: m_upper,
            pass: m_upper >= 0.0,
        },
        InequalityCheck {
            name: "decay",
            margin: m_decay,
            pass: m_decay >= 0.0,
        },
        InequalityCheck {
            name: "gradient_w",
            margin: m_gw,
            pass: m_gw >= 0.0,
        },
        InequalityCheck {
            name: "gradient_v",
            margin: m_gv,
            pass: m_gv >= 0.0,
        },
    ];
    let pass = checks.iter().all(|c| c.pass);
    let min_margin = checks
        .iter()
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(CertificateReport {
        checks,
        pass,
        min_margin,
    })
}

/// Short pilot run fitting the w decay rate; used to size δ (default 5/λ̂).
pub fn pilot_decay_rate(
    sys: &GenericSystem,
    w0: &[f64],
    v0: &[f64],
    z0: f64,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, LyapunovError> {
    let traj = sys.simulate(w0, v0, [z0, z0 + horizon], cfg)?;
    let fit =
        crate::stability::fit::fit_exponential_decay(&traj, 0..sys.dim_w, 0.2).map_err(|_| {
            LyapunovError::Degenerate {
                name: "pilot rate",
                value: f64::NAN,
            }
        })?;
    if fit.rate_lambda <= 0.0 {
        return Err(LyapunovError::Degenerate {
            name: "pilot rate",
            value: fit.rate_lambda,
        });
    }
    Ok(fit.rate_lambda)
}
