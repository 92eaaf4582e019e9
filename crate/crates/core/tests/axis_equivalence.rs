//! Cross-axis consistency: the full system simulated in t and the reduced
//! system simulated in z describe the same motion.

use sflab::kuramoto::{polar_observables, simulate_mu_zeta, simulate_star, KuramotoStarParams};
use sflab::system::{example1, reduce_to_fast_axis};
use sflab::IntegratorConfig;

/// Resampling the t-trajectory of the full system at its own z(t) values
/// reproduces the z-axis trajectory of the reduced system.
#[test]
fn example1_t_and_z_axes_agree() {
    let eps = 0.02;
    let sys = example1(eps);
    let red = reduce_to_fast_axis(&sys);
    let (x0, y0, z0) = (0.25, 0.8, 0.3);

    let cfg_t = IntegratorConfig::rk45(1e-11, 1e-13);
    let full = sys
        .simulate_full(&[x0], &[y0], z0, [0.0, 6.0], &cfg_t)
        .unwrap();
    let z_end = full.last_state()[2];

    let cfg_z = IntegratorConfig::rk45(1e-11, 1e-13);
    let reduced = red.simulate(&[x0], &[y0], [z0, z_end], &cfg_z).unwrap();

    // 10x the combined integrator tolerance budget (both runs at rtol 1e-11
    // over ~1e3 accepted steps on O(1) states).
    let steps = (full.len() + reduced.len()) as f64;
    let tol = 10.0 * steps * (1e-11 + 1e-13);
    let mut checked = 0;
    for i in (0..full.len()).step_by(23) {
        let s = full.state(i);
        let z = s[2];
        if z > z_end {
            break;
        }
        let at_z = reduced.sample_at(z).unwrap();
        assert!(
            (s[0] - at_z[0]).abs() < tol,
            "x mismatch at z = {z}: {} vs {} (tol {tol})",
            s[0],
            at_z[0]
        );
        assert!(
            (s[1] - at_z[1]).abs() < tol,
            "y mismatch at z = {z}: {} vs {}",
            s[1],
            at_z[1]
        );
        checked += 1;
    }
    assert!(checked > 20);
}

/// The (μ, ζ) pair read off the full three-phase simulation matches direct
/// integration of the reduced (μ, ζ) equations from matched initial data.
#[test]
fn kuramoto_polar_reduction_matches_full_simulation() {
    let p = KuramotoStarParams::symmetric(1.0, 1.0, 1.1, 10.0);
    let theta0 = [0.4, 0.1, -0.2];
    let cfg = IntegratorConfig::rk45(1e-11, 1e-13);
    let full = simulate_star(&p, theta0, [0.0, 30.0], &cfg).unwrap();

    let obs0 = polar_observables(&theta0, None);
    let red = simulate_mu_zeta(&p, obs0.mu, obs0.zeta, [0.0, 30.0], &cfg).unwrap();

    let mut prev_zeta = Some(obs0.zeta);
    let mut worst_mu = 0.0f64;
    let mut worst_zeta = 0.0f64;
    for i in (0..full.len()).step_by(11) {
        let s = full.state(i);
        let obs = polar_observables(&[s[0], s[1], s[2]], prev_zeta);
        prev_zeta = Some(obs.zeta);
        let t = full.time(i);
        let direct = red.sample_at(t).unwrap();
        worst_mu = worst_mu.max((obs.mu - direct[0]).abs());
        worst_zeta = worst_zeta.max((obs.zeta - direct[1]).abs());
    }
    // ζ winds to ~3e2, so the relative budget scales with it.
    let zeta_scale = red.last_state()[1].abs();
    let tol = 10.0 * (full.len() + red.len()) as f64 * 1e-11 * zeta_scale.max(1.0);
    assert!(worst_mu < tol, "mu mismatch {worst_mu} (tol {tol})");
    assert!(worst_zeta < tol, "zeta mismatch {worst_zeta} (tol {tol})");
}
