//! Numerical laboratory for partial exponential stability of slow-fast
//! periodic systems.
//!
//! The library is organized around one pipeline:
//!
//! 1. [`system`] — slow-fast systems `ẋ = f₁, ẏ = f₂, ε ż = f₃` with a
//!    scalar fast variable that is `T`-periodic in `z`, the fast-rate audit
//!    `f₃ ≥ ϑ > 0`, and the time-axis change `t → z` producing the reduced
//!    system `dx/dz = ε h₁`, `dy/dz = ε h₂` with `hᵢ = fᵢ/f₃`.
//! 2. [`averaging`] — the partially averaged system, where only the `w`
//!    dynamics is replaced by its mean over one period in `z`, plus the
//!    averaging-defect diagnostic and sampled Jacobian bounds.
//! 3. [`stability`] — empirical partial-stability verdicts from seeded
//!    ensembles, exponential-envelope fits, the numerically constructed
//!    converse Lyapunov certificate `V(w,v,z) = ∫_z^{z+δ} ‖φ₁‖² dτ`, and
//!    perturbation envelopes built from the certificate constants.
//! 4. [`kuramoto`] — the Kuramoto-Sakaguchi star with two peripheral nodes:
//!    remote-synchronization observables, the (μ, ζ) reduction, phase-locked
//!    equilibria and their linearized classification, detuning stabilization
//!    and the frequency limit cycle.
//!
//! [`ode`] and [`quad`] supply the deterministic integration and quadrature
//! kernels everything else is built on. All operations are pure; shared
//! inputs are immutable and safe to use from parallel workers.

pub mod averaging;
pub mod kuramoto;
mod linalg;
pub mod ode;
pub mod quad;
pub mod rng;
pub mod stability;
pub mod system;

pub use ode::{IndependentAxis, IntegratorConfig, OdeError, Scheme, Trajectory};
pub use system::{ReducedSystem, SlowFastSystem};
