//! Deterministic ODE integration with dense output.
//!
//! Two schemes cover every right-hand side in this crate, all of which are
//! smooth and non-stiff:
//!
//! * classical 4-stage Runge-Kutta with a fixed step (local error `O(h⁵)`,
//!   global `O(h⁴)`), and
//! * the Dormand-Prince embedded 5(4) pair with PI step-size control, holding
//!   the per-step error estimate below `atol + rtol·‖state‖`.
//!
//! Integration records every accepted node together with the right-hand side
//! evaluated there, so [`Trajectory::sample_at`] can interpolate with cubic
//! Hermite polynomials: exact at nodes, `O(h⁴)` between them.
//!
//! Spans may run forward (`b > a`) or backward (`b < a`); node times are then
//! strictly increasing or strictly decreasing respectively. Backward spans
//! exist so round-trip checks (integrate `[a,b]` then `[b,a]`) can exercise
//! the solver without re-parameterizing the field.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error(
        "step budget exhausted after {0} steps; right-hand side too fast for the configuration"
    )]
    MaxStepsExceeded(usize),
    #[error("non-finite state encountered at axis value {at}; the solution is blowing up")]
    NonFiniteState { at: f64 },
    #[error("adaptive step underflow at axis value {at}")]
    StepUnderflow { at: f64 },
    #[error("interpolation query {query} outside [{lo}, {hi}]")]
    OutOfRange { query: f64, lo: f64, hi: f64 },
    #[error("invalid integrator configuration: {0}")]
    BadConfig(String),
    #[error("degenerate span: endpoints coincide")]
    EmptySpan,
}

/// Which independent variable a trajectory is parameterized by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndependentAxis {
    /// Physical time `t` of the slow-fast system.
    TimeT,
    /// The fast scalar `z` after the time-axis change.
    FastAxisZ,
}

impl IndependentAxis {
    pub fn label(self) -> &'static str {
        match self {
            IndependentAxis::TimeT => "t",
            IndependentAxis::FastAxisZ => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Step size for the fixed scheme.
    pub step: f64,
    /// Relative tolerance for the adaptive scheme.
    pub rtol: f64,
    /// Absolute tolerance for the adaptive scheme.
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::rk45(1e-9, 1e-12)
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            scheme: Scheme::Rk4Fixed,
            step,
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 50_000_000,
        }
    }

    pub fn rk45(rtol: f64, atol: f64) -> Self {
        IntegratorConfig {
            scheme: Scheme::Rk45Adaptive,
            step: 1e-3,
            rtol,
            atol,
            max_steps: 50_000_000,
        }
    }

    fn validate(&self) -> Result<(), OdeError> {
        if !(self.step > 0.0) {
            return Err(OdeError::BadConfig(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(OdeError::BadConfig(format!(
                "tolerances must be > 0, got rtol={} atol={}",
                self.rtol, self.atol
            )));
        }
        if self.max_steps == 0 {
            return Err(OdeError::BadConfig("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Densely sampled solution of an initial-value problem.
///
/// Node times are strictly monotone in the traversal direction, every state
/// has the same dimension, and the stored right-hand side values make cubic
/// Hermite interpolation available on the covered interval.
#[derive(Debug, Clone)]
pub struct Trajectory {
    axis: IndependentAxis,
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    derivs: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(axis: IndependentAxis, dim: usize, cap: usize) -> Self {
        Trajectory {
            axis,
            dim,
            times: Vec::with_capacity(cap),
            states: Vec::with_capacity(cap * dim),
            derivs: Vec::with_capacity(cap * dim),
        }
    }

    /// Assemble a trajectory from precomputed nodes. Used by fitting code
    /// and tests that synthesize data without running the integrator.
    pub fn from_nodes(
        axis: IndependentAxis,
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        derivs: Vec<Vec<f64>>,
    ) -> Self {
        assert_eq!(times.len(), states.len());
        assert_eq!(times.len(), derivs.len());
        assert!(!times.is_empty());
        let dim = states[0].len();
        assert!(dim >= 1);
        let increasing = times.len() < 2 || times[1] > times[0];
        for w in times.windows(2) {
            assert!(
                if increasing { w[1] > w[0] } else { w[1] < w[0] },
                "node times must be strictly monotone"
            );
        }
        let mut t = Trajectory::with_capacity(axis, dim, times.len());
        for ((time, s), d) in times.iter().zip(&states).zip(&derivs) {
            assert_eq!(s.len(), dim);
            assert_eq!(d.len(), dim);
            t.push(*time, s, d);
        }
        t
    }

    fn push(&mut self, t: f64, state: &[f64], deriv: &[f64]) {
        self.times.push(t);
        self.states.extend_from_slice(state);
        self.derivs.extend_from_slice(deriv);
    }

    pub fn axis(&self) -> IndependentAxis {
        self.axis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn deriv(&self, i: usize) -> &[f64] {
        &self.derivs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Euclidean norm of a block of components at node `i`.
    pub fn block_norm(&self, i: usize, comps: std::ops::Range<usize>) -> f64 {
        let s = self.state(i);
        s[comps].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn increasing(&self) -> bool {
        self.len() < 2 || self.times[1] > self.times[0]
    }

    /// Cubic Hermite interpolation at `t_query`, exact at stored nodes.
    pub fn sample_at(&self, t_query: f64) -> Result<Vec<f64>, OdeError> {
        let (lo, hi) = if self.increasing() {
            (self.first_time(), self.last_time())
        } else {
            (self.last_time(), self.first_time())
        };
        if !(t_query >= lo && t_query <= hi) {
            return Err(OdeError::OutOfRange {
                query: t_query,
                lo,
                hi,
            });
        }
        // Bracketing node pair via binary search in traversal order.
        let inc = self.increasing();
        let key = |t: f64| if inc { t } else { -t };
        let mut a = 0usize;
        let mut b = self.len() - 1;
        while b - a > 1 {
            let mid = (a + b) / 2;
            if key(self.times[mid]) <= key(t_query) {
                a = mid;
            } else {
                b = mid;
            }
        }
        if t_query == self.times[a] {
            return Ok(self.state(a).to_vec());
        }
        if t_query == self.times[b] {
            return Ok(self.state(b).to_vec());
        }
        let h = self.times[b] - self.times[a];
        let s = (t_query - self.times[a]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (ya, yb) = (self.state(a), self.state(b));
        let (da, db) = (self.deriv(a), self.deriv(b));
        Ok((0..self.dim)
            .map(|j| h00 * ya[j] + h10 * h * da[j] + h01 * yb[j] + h11 * h * db[j])
            .collect())
    }

    /// CSV export: header `axis,x0,x1,...`, one row per node, 17 significant
    /// digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "axis")?;
        for j in 0..self.dim {
            write!(w, ",x{j}")?;
        }
        writeln!(w)?;
        for i in 0..self.len() {
            write!(w, "{:.16e}", self.times[i])?;
            for v in self.state(i) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Integrate `d state / d axis = rhs(axis, state)` over `span`.
///
/// `rhs(t, y, dy)` writes the derivative into `dy`. The span may be
/// decreasing, in which case integration runs backward.
pub fn integrate<F>(
    mut rhs: F,
    state0: &[f64],
    span: [f64; 2],
    cfg: &IntegratorConfig,
    axis: IndependentAxis,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    cfg.validate()?;
    let [a, b] = span;
    if a == b {
        return Err(OdeError::EmptySpan);
    }
    assert!(!state0.is_empty(), "state dimension must be >= 1");
    match cfg.scheme {
        Scheme::Rk4Fixed => rk4_fixed(&mut rhs, state0, a, b, cfg, axis),
        Scheme::Rk45Adaptive => rk45_adaptive(&mut rhs, state0, a, b, cfg, axis),
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn rk4_fixed<F>(
    rhs: &mut F,
    state0: &[f64],
    a: f64,
    b: f64,
    cfg: &IntegratorConfig,
    axis: IndependentAxis,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = state0.len();
    let n_steps = ((b - a).abs() / cfg.step).ceil().max(1.0) as usize;
    if n_steps > cfg.max_steps {
        return Err(OdeError::MaxStepsExceeded(cfg.max_steps));
    }
    let h = (b - a) / n_steps as f64;
    let mut traj = Trajectory::with_capacity(axis, dim, n_steps + 1);
    let mut y = state0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    rhs(a, &y, &mut k1);
    if !all_finite(&k1) {
        return Err(OdeError::NonFiniteState { at: a });
    }
    traj.push(a, &y, &k1);
    for step in 0..n_steps {
        let t = a + step as f64 * h;
        // k1 already holds rhs(t, y)
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * h * k1[j];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * h * k2[j];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = y[j] + h * k3[j];
        }
        rhs(t + h, &tmp, &mut k4);
        for j in 0..dim {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t_next = if step + 1 == n_steps { b } else { t + h };
        rhs(t_next, &y, &mut k1);
        if !all_finite(&y) || !all_finite(&k1) {
            return Err(OdeError::NonFiniteState { at: t_next });
        }
        traj.push(t_next, &y, &k1);
    }
    Ok(traj)
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal the last row of DP_A (FSAL).
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn rk45_adaptive<F>(
    rhs: &mut F,
    state0: &[f64],
    a: f64,
    b: f64,
    cfg: &IntegratorConfig,
    axis: IndependentAxis,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = state0.len();
    let dir = (b - a).signum();
    let span = (b - a).abs();
    let mut traj = Trajectory::with_capacity(axis, dim, 256);
    let mut y = state0.to_vec();
    let mut t = a;

    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    rhs(t, &y, &mut k[0]);
    if !all_finite(&k[0]) {
        return Err(OdeError::NonFiniteState { at: t });
    }
    traj.push(t, &y, &k[0]);

    // Initial step from the state/derivative scale ratio (Hairer's h0).
    let rms = |a: &[f64]| {
        (a.iter()
            .zip(y.iter())
            .map(|(v, yi)| (v / (cfg.atol + cfg.rtol * yi.abs())).powi(2))
            .sum::<f64>()
            / dim as f64)
            .sqrt()
    };
    let d0 = rms(&y);
    let d1 = rms(&k[0]);
    let mut h = if d0 > 1e-10 && d1 > 1e-10 {
        0.01 * d0 / d1
    } else {
        1e-6 * span
    }
    .min(span)
        * dir;

    let mut err_prev: f64 = 1.0;
    let mut y_new = vec![0.0; dim];
    let mut y_stage = vec![0.0; dim];
    let mut n_steps = 0usize;

    while (t - b) * dir < 0.0 {
        if n_steps >= cfg.max_steps {
            return Err(OdeError::MaxStepsExceeded(cfg.max_steps));
        }
        n_steps += 1;
        // Land exactly on b.
        if (t + h - b) * dir > 0.0 {
            h = b - t;
        }
        if h.abs() < 1e-14 * span.max(1.0) {
            return Err(OdeError::StepUnderflow { at: t });
        }
        for s in 1..7 {
            for j in 0..dim {
                let mut acc = 0.0;
                for (i, ki) in k.iter().enumerate().take(s) {
                    acc += DP_A[s][i] * ki[j];
                }
                y_stage[j] = y[j] + h * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(t + DP_C[s] * h, &y_stage, &mut tail[0]);
        }
        // Stage 7 input is the 5th-order solution itself (FSAL).
        y_new.copy_from_slice(&y_stage);
        if !all_finite(&y_new) {
            return Err(OdeError::NonFiniteState { at: t });
        }
        let mut err_sq = 0.0;
        for j in 0..dim {
            let mut e = 0.0;
            for (i, ki) in k.iter().enumerate() {
                e += DP_E[i] * ki[j];
            }
            e *= h;
            let sc = cfg.atol + cfg.rtol * y[j].abs().max(y_new[j].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / dim as f64).sqrt();
        if !err.is_finite() {
            return Err(OdeError::NonFiniteState { at: t });
        }

        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y_new);
            let (head, tail) = k.split_at_mut(6);
            head[0].copy_from_slice(&tail[0]);
            traj.push(t, &y, &k[0]);
            // PI controller (Hairer's beta = 0.04).
            let e = err.max(1e-10);
            let fac = 0.9 * e.powf(-0.17) * err_prev.powf(0.04);
            h *= fac.clamp(0.2, 5.0);
            err_prev = e;
        } else {
            let fac = 0.9 * err.powf(-0.2);
            h *= fac.clamp(0.1, 0.9);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn exp_decay(t: f64, y: &[f64], dy: &mut [f64]) {
        let _ = t;
        dy[0] = -y[0];
    }

    #[test]
    fn rk4_matches_exponential_closed_form() {
        let traj = integrate(
            exp_decay,
            &[1.0],
            [0.0, 1.0],
            &IntegratorConfig::rk4(1e-3),
            IndependentAxis::TimeT,
        )
        .unwrap();
        let got = traj.last_state()[0];
        assert!((got - (-1.0f64).exp()).abs() < 1e-10, "got {got}");
    }

    #[test]
    fn zero_rhs_is_constant() {
        let traj = integrate(
            |_, _, dy| dy.fill(0.0),
            &[2.5, -3.0],
            [0.0, 5.0],
            &IntegratorConfig::rk4(0.1),
            IndependentAxis::TimeT,
        )
        .unwrap();
        for i in 0..traj.len() {
            assert_eq!(traj.state(i), &[2.5, -3.0]);
        }
    }

    #[test]
    fn harmonic_oscillator_returns_after_one_period() {
        // Closed-form rotation oracle: the flow of (x₁, x₂) is a rotation, so
        // the state at 2π equals the initial state exactly.
        let x0 = [1.0, 0.5];
        let traj = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &x0,
            [0.0, TAU],
            &IntegratorConfig::rk4(1e-3),
            IndependentAxis::TimeT,
        )
        .unwrap();
        let end = traj.last_state();
        assert!((end[0] - x0[0]).abs() < 1e-9);
        assert!((end[1] - x0[1]).abs() < 1e-9);
    }

    #[test]
    fn fourth_order_convergence_on_exponential() {
        let endpoint_error = |step: f64| {
            let traj = integrate(
                exp_decay,
                &[1.0],
                [0.0, 1.0],
                &IntegratorConfig::rk4(step),
                IndependentAxis::TimeT,
            )
            .unwrap();
            (traj.last_state()[0] - (-1.0f64).exp()).abs()
        };
        let e1 = endpoint_error(1e-2);
        let e2 = endpoint_error(5e-3);
        let ratio = e1 / e2;
        assert!(
            (12.8..=19.2).contains(&ratio),
            "expected halving to cut error ~16x, got {ratio}"
        );
    }

    #[test]
    fn forward_backward_round_trip() {
        let cfg = IntegratorConfig::rk45(1e-10, 1e-12);
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0] + (2.0 * t).sin();
            dy[1] = y[0] - 0.5 * y[1];
        };
        let fwd = integrate(rhs, &[1.0, -0.5], [0.0, 4.0], &cfg, IndependentAxis::TimeT).unwrap();
        let bwd = integrate(
            rhs,
            fwd.last_state(),
            [4.0, 0.0],
            &cfg,
            IndependentAxis::TimeT,
        )
        .unwrap();
        let back = bwd.last_state();
        // 10x the accumulated tolerance budget.
        let tol = 10.0 * (1e-10 * 2.0 + 1e-12) * (fwd.len() + bwd.len()) as f64;
        assert!(
            (back[0] - 1.0).abs() < tol,
            "{} vs tol {tol}",
            (back[0] - 1.0).abs()
        );
        assert!((back[1] + 0.5).abs() < tol);
    }

    #[test]
    fn adaptive_agrees_with_fixed() {
        // Every smooth problem in the suite: pure decay, a rotation, and a
        // parametrically forced oscillator.
        type Rhs = fn(f64, &[f64], &mut [f64]);
        let problems: [(Rhs, Vec<f64>, f64); 3] = [
            (exp_decay, vec![1.0], 1.0),
            (
                |_t, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                vec![1.0, 0.5],
                TAU,
            ),
            (
                |t, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -(1.0 + 0.3 * t.sin()) * y[0];
                },
                vec![1.0, 0.0],
                10.0,
            ),
        ];
        let rtol = 1e-9;
        let tol = (10.0f64 * rtol).max(1e-8);
        for (k, (rhs, y0, t_end)) in problems.iter().enumerate() {
            let fixed = integrate(
                rhs,
                y0,
                [0.0, *t_end],
                &IntegratorConfig::rk4(1e-3),
                IndependentAxis::TimeT,
            )
            .unwrap();
            let adaptive = integrate(
                rhs,
                y0,
                [0.0, *t_end],
                &IntegratorConfig::rk45(rtol, 1e-12),
                IndependentAxis::TimeT,
            )
            .unwrap();
            for j in 0..y0.len() {
                let d = (fixed.last_state()[j] - adaptive.last_state()[j]).abs();
                assert!(d < tol, "problem {k} component {j}: {d} >= {tol}");
            }
        }
    }

    #[test]
    fn sample_at_node_is_exact() {
        let traj = integrate(
            exp_decay,
            &[1.0],
            [0.0, 1.0],
            &IntegratorConfig::rk4(0.25),
            IndependentAxis::TimeT,
        )
        .unwrap();
        let i = traj.len() / 2;
        let got = traj.sample_at(traj.time(i)).unwrap();
        assert_eq!(got[0], traj.state(i)[0]);
    }

    #[test]
    fn hermite_reproduces_linear_trajectory() {
        let times = vec![0.0, 1.0];
        let states = vec![vec![0.0], vec![1.0]];
        let derivs = vec![vec![1.0], vec![1.0]];
        let traj = Trajectory::from_nodes(IndependentAxis::TimeT, times, states, derivs);
        let got = traj.sample_at(0.5).unwrap()[0];
        assert!((got - 0.5).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn hermite_mid_node_accuracy_on_exponential() {
        let traj = integrate(
            exp_decay,
            &[1.0],
            [0.0, 1.0],
            &IntegratorConfig::rk4(1e-2),
            IndependentAxis::TimeT,
        )
        .unwrap();
        for &t in &[0.005, 0.205, 0.515, 0.995] {
            let got = traj.sample_at(t).unwrap()[0];
            assert!((got - (-t).exp()).abs() < 1e-8, "t={t} got {got}");
        }
    }

    #[test]
    fn out_of_range_query_errors() {
        let traj = integrate(
            exp_decay,
            &[1.0],
            [0.0, 1.0],
            &IntegratorConfig::rk4(0.1),
            IndependentAxis::TimeT,
        )
        .unwrap();
        assert!(matches!(
            traj.sample_at(1.5),
            Err(OdeError::OutOfRange { .. })
        ));
        assert!(matches!(
            traj.sample_at(-0.1),
            Err(OdeError::OutOfRange { .. })
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        // dy/dt = y² from 1 blows up at t = 1.
        let res = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            &[1.0],
            [0.0, 2.0],
            &IntegratorConfig::rk45(1e-9, 1e-12),
            IndependentAxis::TimeT,
        );
        assert!(matches!(
            res,
            Err(OdeError::NonFiniteState { .. })
                | Err(OdeError::MaxStepsExceeded(_))
                | Err(OdeError::StepUnderflow { .. })
        ));
    }

    #[test]
    fn step_budget_is_enforced() {
        let mut cfg = IntegratorConfig::rk4(1e-6);
        cfg.max_steps = 10;
        let res = integrate(exp_decay, &[1.0], [0.0, 1.0], &cfg, IndependentAxis::TimeT);
        assert!(matches!(res, Err(OdeError::MaxStepsExceeded(10))));
    }

    #[test]
    fn backward_span_integrates() {
        let traj = integrate(
            exp_decay,
            &[1.0],
            [1.0, 0.0],
            &IntegratorConfig::rk4(1e-3),
            IndependentAxis::TimeT,
        )
        .unwrap();
        // x(t) = e^{-(t-1)} run backward from x(1)=1 gives x(0)=e.
        assert!((traj.last_state()[0] - 1.0f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn csv_has_header_and_17_digits() {
        let traj = integrate(
            exp_decay,
            &[1.0],
            [0.0, 0.2],
            &IntegratorConfig::rk4(0.1),
            IndependentAxis::TimeT,
        )
        .unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "axis,x0");
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 2);
        // 16 digits after the decimal point = 17 significant digits.
        assert!(fields[1].contains('.'));
        let mantissa = fields[1].split('e').next().unwrap();
        let digits = mantissa.split('.').nth(1).unwrap();
        assert_eq!(digits.len(), 16);
    }
}
