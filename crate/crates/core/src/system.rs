//! Slow-fast systems with a scalar fast variable and the time-axis change.
//!
//! A [`SlowFastSystem`] is the triple
//!
//! ```text
//! ẋ = f₁(x, y, z),   ẏ = f₂(x, y, z),   ε ż = f₃(x, y, z),
//! ```
//!
//! with `x ∈ ℝⁿ`, `y ∈ ℝᵐ` (m = 0 permitted), scalar `z`, all maps
//! `T`-periodic in `z`, and `x = 0` a partial equilibrium
//! (`f₁(0,y,z) = f₂(0,y,z) = 0`). Under the fast-rate bound `f₃ ≥ ϑ > 0`
//! the map `t ↦ z(t)` is strictly increasing, and rewriting the slow states
//! against the fast axis gives the reduced periodic system
//!
//! ```text
//! dx/dz = ε h₁(x, y, z),   dy/dz = ε h₂(x, y, z),   hᵢ = fᵢ / f₃.
//! ```
//!
//! The bound itself is audited by dense sampling (Latin hypercube plus the
//! corners of the requested box); the report carries the minimizing witness,
//! so it is a certificate up to grid resolution, not a proof. Only the
//! `f₃ ≥ ϑ` branch is implemented: a system with `f₃ ≤ −ϑ` is the same
//! system after `z → −z`.

use crate::ode::{self, IndependentAxis, IntegratorConfig, OdeError, Trajectory};
use crate::rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Callback computing a vector field block; writes into the output slice.
pub type VectorField = Arc<dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync>;
/// Callback computing the scalar fast rate `f₃`.
pub type ScalarField = Arc<dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("unknown system id `{0}`")]
    UnknownSystem(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite {field} at sample x={x:?} y={y:?} z={z}")]
    NonFiniteSample {
        field: &'static str,
        x: Vec<f64>,
        y: Vec<f64>,
        z: f64,
    },
    #[error("fast-rate bound violated: min f3 = {theta_lower} at witness")]
    FastRateViolated { theta_lower: f64 },
}

/// The slow-fast triple of vector fields with its scales.
#[derive(Clone)]
pub struct SlowFastSystem {
    pub name: String,
    pub dim_x: usize,
    pub dim_y: usize,
    pub epsilon: f64,
    pub period: f64,
    f1: VectorField,
    f2: VectorField,
    f3: ScalarField,
}

impl SlowFastSystem {
    pub fn new(
        name: impl Into<String>,
        dim_x: usize,
        dim_y: usize,
        epsilon: f64,
        period: f64,
        f1: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
        f2: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
        f3: impl Fn(&[f64], &[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(dim_x >= 1, "need at least one slow x component");
        assert!(epsilon > 0.0 && period > 0.0);
        SlowFastSystem {
            name: name.into(),
            dim_x,
            dim_y,
            epsilon,
            period,
            f1: Arc::new(f1),
            f2: Arc::new(f2),
            f3: Arc::new(f3),
        }
    }

    pub fn eval_f1(&self, x: &[f64], y: &[f64], z: f64, out: &mut [f64]) {
        (self.f1)(x, y, z, out);
    }

    pub fn eval_f2(&self, x: &[f64], y: &[f64], z: f64, out: &mut [f64]) {
        (self.f2)(x, y, z, out);
    }

    pub fn eval_f3(&self, x: &[f64], y: &[f64], z: f64) -> f64 {
        (self.f3)(x, y, z)
    }

    /// Fixed-step configuration resolving the fast phase: step = ε·T/50.
    /// Override freely for tighter or looser runs.
    pub fn default_full_config(&self) -> IntegratorConfig {
        IntegratorConfig::rk4(self.epsilon * self.period / 50.0)
    }

    /// Integrate the full system in physical time `t`.
    ///
    /// State layout: `[x₀..x_{n-1}, y₀..y_{m-1}, z]`.
    pub fn simulate_full(
        &self,
        x0: &[f64],
        y0: &[f64],
        z0: f64,
        t_span: [f64; 2],
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory, OdeError> {
        assert_eq!(x0.len(), self.dim_x);
        assert_eq!(y0.len(), self.dim_y);
        let (n, m) = (self.dim_x, self.dim_y);
        let eps = self.epsilon;
        let (f1, f2, f3) = (self.f1.clone(), self.f2.clone(), self.f3.clone());
        let mut state0 = Vec::with_capacity(n + m + 1);
        state0.extend_from_slice(x0);
        state0.extend_from_slice(y0);
        state0.push(z0);
        ode::integrate(
            move |_t, s, ds| {
                let (x, rest) = s.split_at(n);
                let (y, z) = rest.split_at(m);
                let z = z[0];
                let (dx, drest) = ds.split_at_mut(n);
                let (dy, dz) = drest.split_at_mut(m);
                f1(x, y, z, dx);
                f2(x, y, z, dy);
                dz[0] = f3(x, y, z) / eps;
            },
            &state0,
            t_span,
            cfg,
            IndependentAxis::TimeT,
        )
    }
}

/// Verdict of the sampled fast-rate audit `f₃ ≥ ϑ`.
#[derive(Debug, Clone)]
pub struct FastRateReport {
    /// Minimum of `f₃` over all samples: the ϑ estimate.
    pub theta_lower: f64,
    pub violated: bool,
    /// Sample point attaining the minimum: (x, y, z).
    pub witness: (Vec<f64>, Vec<f64>, f64),
    pub samples_used: usize,
}

/// Axis-aligned sampling box in `(x, y, z)`.
#[derive(Debug, Clone)]
pub struct Domain {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
    pub z: [f64; 2],
}

impl Domain {
    /// Box `‖x‖_∞ ≤ x_r`, `y` in per-component ranges, `z` over one period.
    pub fn centered(dim_x: usize, x_r: f64, y_ranges: Vec<[f64; 2]>, period: f64) -> Self {
        Domain {
            x: vec![[-x_r, x_r]; dim_x],
            y: y_ranges,
            z: [0.0, period],
        }
    }

    fn dims(&self) -> usize {
        self.x.len() + self.y.len() + 1
    }

    fn lift(&self, unit: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.x.len();
        let m = self.y.len();
        let map = |r: &[f64; 2], u: f64| r[0] + (r[1] - r[0]) * u;
        let x: Vec<f64> = self.x.iter().zip(unit).map(|(r, u)| map(r, *u)).collect();
        let y: Vec<f64> = self
            .y
            .iter()
            .zip(&unit[n..])
            .map(|(r, u)| map(r, *u))
            .collect();
        let z = map(&self.z, unit[n + m]);
        (x, y, z)
    }

    /// All corners of the box (unit coordinates in {0,1}^dims).
    fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dims();
        (0..(1usize << d))
            .map(|mask| (0..d).map(|j| ((mask >> j) & 1) as f64).collect())
            .collect()
    }
}

/// Audit `f₃ ≥ ϑ` by Latin-hypercube sampling plus the box corners.
///
/// One period in `z` suffices by periodicity. Conservative up to grid
/// resolution only; the witness lets callers refine locally.
pub fn verify_fast_rate_bound(
    sys: &SlowFastSystem,
    domain: &Domain,
    samples: usize,
    seed: u64,
) -> Result<FastRateReport, SystemError> {
    assert_eq!(domain.x.len(), sys.dim_x);
    assert_eq!(domain.y.len(), sys.dim_y);
    let mut rng = rng::member_rng(seed, 0);
    let mut points = rng::latin_hypercube(&mut rng, samples.max(1), domain.dims());
    points.extend(domain.corners());
    let mut best = f64::INFINITY;
    let mut witness = (vec![0.0; sys.dim_x], vec![0.0; sys.dim_y], 0.0);
    for unit in &points {
        let (x, y, z) = domain.lift(unit);
        let v = sys.eval_f3(&x, &y, z);
        if !v.is_finite() {
            return Err(SystemError::NonFiniteSample {
                field: "f3",
                x,
                y,
                z,
            });
        }
        if v < best {
            best = v;
            witness = (x, y, z);
        }
    }
    Ok(FastRateReport {
        theta_lower: best,
        violated: best <= 0.0,
        witness,
        samples_used: points.len(),
    })
}

/// Result of the partial-equilibrium audit `f₁(0,y,z) = f₂(0,y,z) = 0`.
#[derive(Debug, Clone)]
pub struct PartialEquilibriumReport {
    pub max_residual_f1: f64,
    pub max_residual_f2: f64,
    pub pass: bool,
}

pub const PARTIAL_EQUILIBRIUM_TOL: f64 = 1e-12;

pub fn check_partial_equilibrium(
    sys: &SlowFastSystem,
    y_ranges: &[[f64; 2]],
    samples: usize,
    seed: u64,
) -> PartialEquilibriumReport {
    assert_eq!(y_ranges.len(), sys.dim_y);
    let mut rng = rng::member_rng(seed, 0);
    let points = rng::latin_hypercube(&mut rng, samples.max(1), sys.dim_y + 1);
    let x0 = vec![0.0; sys.dim_x];
    let mut buf1 = vec![0.0; sys.dim_x];
    let mut buf2 = vec![0.0; sys.dim_y];
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    for unit in &points {
        let y: Vec<f64> = y_ranges
            .iter()
            .zip(unit.iter())
            .map(|(r, u)| r[0] + (r[1] - r[0]) * u)
            .collect();
        let z = unit[sys.dim_y] * sys.period;
        sys.eval_f1(&x0, &y, z, &mut buf1);
        sys.eval_f2(&x0, &y, z, &mut buf2);
        r1 = r1.max(buf1.iter().map(|v| v * v).sum::<f64>().sqrt());
        r2 = r2.max(buf2.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    PartialEquilibriumReport {
        max_residual_f1: r1,
        max_residual_f2: r2,
        pass: r1 < PARTIAL_EQUILIBRIUM_TOL && r2 < PARTIAL_EQUILIBRIUM_TOL,
    }
}

/// Sampled `T`-periodicity audit: max |fᵢ(x,y,z+T) − fᵢ(x,y,z)|.
pub fn check_periodicity(sys: &SlowFastSystem, domain: &Domain, samples: usize, seed: u64) -> f64 {
    let mut rng = rng::member_rng(seed, 0);
    let points = rng::latin_hypercube(&mut rng, samples.max(1), domain.dims());
    let mut a1 = vec![0.0; sys.dim_x];
    let mut b1 = vec![0.0; sys.dim_x];
    let mut a2 = vec![0.0; sys.dim_y];
    let mut b2 = vec![0.0; sys.dim_y];
    let mut worst = 0.0f64;
    for unit in &points {
        let (x, y, z) = domain.lift(unit);
        sys.eval_f1(&x, &y, z, &mut a1);
        sys.eval_f1(&x, &y, z + sys.period, &mut b1);
        sys.eval_f2(&x, &y, z, &mut a2);
        sys.eval_f2(&x, &y, z + sys.period, &mut b2);
        for (p, q) in a1.iter().zip(&b1) {
            worst = worst.max((p - q).abs());
        }
        for (p, q) in a2.iter().zip(&b2) {
            worst = worst.max((p - q).abs());
        }
        worst = worst.max((sys.eval_f3(&x, &y, z) - sys.eval_f3(&x, &y, z + sys.period)).abs());
    }
    worst
}

/// The reduced periodic system on the fast axis: `dx/dz = ε h₁`,
/// `dy/dz = ε h₂`.
#[derive(Clone)]
pub struct ReducedSystem {
    pub name: String,
    pub dim_x: usize,
    pub dim_y: usize,
    pub epsilon: f64,
    pub period: f64,
    h1: VectorField,
    h2: VectorField,
}

/// Divisions by `|f₃| < DIVISION_GUARD` yield NaN, which the integrator
/// reports as a non-finite state: the fast-rate precondition was violated.
pub const DIVISION_GUARD: f64 = 1e-12;

impl ReducedSystem {
    pub fn from_fields(
        name: impl Into<String>,
        dim_x: usize,
        dim_y: usize,
        epsilon: f64,
        period: f64,
        h1: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
        h2: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        ReducedSystem {
            name: name.into(),
            dim_x,
            dim_y,
            epsilon,
            period,
            h1: Arc::new(h1),
            h2: Arc::new(h2),
        }
    }

    pub fn eval_h1(&self, x: &[f64], y: &[f64], z: f64, out: &mut [f64]) {
        (self.h1)(x, y, z, out);
    }

    pub fn eval_h2(&self, x: &[f64], y: &[f64], z: f64, out: &mut [f64]) {
        (self.h2)(x, y, z, out);
    }

    pub(crate) fn h1_field(&self) -> VectorField {
        self.h1.clone()
    }

    pub(crate) fn h2_field(&self) -> VectorField {
        self.h2.clone()
    }

    /// Integrate on the fast axis. State layout: `[x₀.., y₀..]`.
    pub fn simulate(
        &self,
        x0: &[f64],
        y0: &[f64],
        z_span: [f64; 2],
        cfg: &IntegratorConfig,
    ) -> Result<Trajectory, OdeError> {
        assert_eq!(x0.len(), self.dim_x);
        assert_eq!(y0.len(), self.dim_y);
        let (n, m) = (self.dim_x, self.dim_y);
        let eps = self.epsilon;
        let (h1, h2) = (self.h1.clone(), self.h2.clone());
        let mut state0 = Vec::with_capacity(n + m);
        state0.extend_from_slice(x0);
        state0.extend_from_slice(y0);
        ode::integrate(
            move |z, s, ds| {
                let (x, y) = s.split_at(n);
                let (dx, dy) = ds.split_at_mut(n);
                h1(x, y, z, dx);
                h2(x, y, z, dy);
                for v in dx.iter_mut().chain(dy.iter_mut()) {
                    *v *= eps;
                }
            },
            &state0,
            z_span,
            cfg,
            IndependentAxis::FastAxisZ,
        )
    }
}

/// Time-axis change `t → z`: `h₁ = f₁/f₃`, `h₂ = f₂/f₃`.
///
/// Callers should have run [`verify_fast_rate_bound`] (ϑ > 0) on the working
/// domain first; evaluations with `|f₃|` below [`DIVISION_GUARD`] produce
/// NaN so that downstream integration fails loudly instead of silently.
pub fn reduce_to_fast_axis(sys: &SlowFastSystem) -> ReducedSystem {
    let guard = |den: f64| {
        if den.abs() < DIVISION_GUARD {
            f64::NAN
        } else {
            den
        }
    };
    let (f1, f3a) = (sys.f1.clone(), sys.f3.clone());
    let (f2, f3b) = (sys.f2.clone(), sys.f3.clone());
    ReducedSystem {
        name: format!("{}/reduced", sys.name),
        dim_x: sys.dim_x,
        dim_y: sys.dim_y,
        epsilon: sys.epsilon,
        period: sys.period,
        h1: Arc::new(move |x, y, z, out| {
            f1(x, y, z, out);
            let den = guard(f3a(x, y, z));
            for v in out.iter_mut() {
                *v /= den;
            }
        }),
        h2: Arc::new(move |x, y, z, out| {
            f2(x, y, z, out);
            let den = guard(f3b(x, y, z));
            for v in out.iter_mut() {
                *v /= den;
            }
        }),
    }
}

/// The running example system:
/// `ẋ = −x − 0.2·x·sin y − 2·x·cos z`, `ẏ = 2·x·cos y + x·sin z`,
/// `ε ż = 3 − sin x + cos y`, with period 2π.
pub fn example1(epsilon: f64) -> SlowFastSystem {
    SlowFastSystem::new(
        "example1",
        1,
        1,
        epsilon,
        std::f64::consts::TAU,
        |x, y, z, out| out[0] = -x[0] - 0.2 * x[0] * y[0].sin() - 2.0 * x[0] * z.cos(),
        |x, y, z, out| out[0] = 2.0 * x[0] * y[0].cos() + x[0] * z.sin(),
        |x, y, _z| 3.0 - x[0].sin() + y[0].cos(),
    )
}

/// The Kuramoto star's (μ, ζ) dynamics as a slow-fast system with scalar
/// fast state ζ:
///
/// ```text
/// μ̇ = −A·(1−(1−μ)²)·cos(ζ−α)
/// ζ̇ = u − A·(1−μ)·(2 sin(ζ+α) + sin(ζ−α))       (taken as f₃, ε = 1)
/// ```
///
/// The detuning plays the role of the small parameter: pulling `1/u` out of
/// `f₃` recovers `dμ/dζ = (1/u)·f(μ, ζ)`, so sweeps over the averaging
/// parameter use ε = 1/u while the stored ε stays 1 to keep the dynamics
/// exact. Requires `u > 3A` so ζ̇ stays positive.
pub fn kuramoto_star_mu_zeta(coupling_a: f64, alpha: f64, detuning_u: f64) -> SlowFastSystem {
    SlowFastSystem::new(
        "kuramoto_star",
        1,
        0,
        1.0,
        std::f64::consts::TAU,
        move |x, _y, z, out| {
            let mu = x[0];
            out[0] = -coupling_a * (1.0 - (1.0 - mu) * (1.0 - mu)) * (z - alpha).cos();
        },
        |_x, _y, _z, _out| {},
        move |x, _y, z| {
            let mu = x[0];
            detuning_u - coupling_a * (1.0 - mu) * (2.0 * (z + alpha).sin() + (z - alpha).sin())
        },
    )
}

type SystemBuilder =
    Arc<dyn Fn(&BTreeMap<String, f64>) -> Result<SlowFastSystem, SystemError> + Send + Sync>;

/// Named systems available to the CLI: built-ins plus registered customs.
pub struct SystemRegistry {
    builders: BTreeMap<String, SystemBuilder>,
}

fn param(
    params: &BTreeMap<String, f64>,
    key: &str,
    default: Option<f64>,
) -> Result<f64, SystemError> {
    match (params.get(key), default) {
        (Some(v), _) => Ok(*v),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(SystemError::MissingParameter(key.into())),
    }
}

impl SystemRegistry {
    /// Registry with `example1` and `kuramoto_star` preinstalled.
    pub fn with_builtins() -> Self {
        let mut reg = SystemRegistry {
            builders: BTreeMap::new(),
        };
        reg.register("example1", |p| {
            let eps = param(p, "epsilon", Some(0.01))?;
            if eps <= 0.0 {
                return Err(SystemError::InvalidParameter("epsilon must be > 0".into()));
            }
            Ok(example1(eps))
        });
        reg.register("kuramoto_star", |p| {
            let a = param(p, "coupling", Some(1.0))?;
            let alpha = param(p, "alpha", None)?;
            let u = param(p, "detuning", None)?;
            if a <= 0.0 {
                return Err(SystemError::InvalidParameter("coupling must be > 0".into()));
            }
            if u <= 3.0 * a {
                return Err(SystemError::InvalidParameter(format!(
                    "detuning must exceed 3*coupling = {} for a positive fast rate",
                    3.0 * a
                )));
            }
            Ok(kuramoto_star_mu_zeta(a, alpha, u))
        });
        reg
    }

    pub fn register(
        &mut self,
        id: impl Into<String>,
        builder: impl Fn(&BTreeMap<String, f64>) -> Result<SlowFastSystem, SystemError>
            + Send
            + Sync
            + 'static,
    ) {
        self.builders.insert(id.into(), Arc::new(builder));
    }

    pub fn build(
        &self,
        id: &str,
        params: &BTreeMap<String, f64>,
    ) -> Result<SlowFastSystem, SystemError> {
        self.builders
            .get(id)
            .ok_or_else(|| SystemError::UnknownSystem(id.into()))?(params)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.builders.keys().map(|s| s.as_str()).collect()
    }
}
