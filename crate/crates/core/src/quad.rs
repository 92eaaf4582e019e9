//! Composite Gauss-Legendre quadrature.
//!
//! The base rule is the 8-point Gauss-Legendre rule, exact for polynomials
//! of degree 15 on a single panel. Composite rules split `[a, b]` into equal
//! panels of 8 nodes each; a requested node count is rounded up to the next
//! multiple of 8. The integrands in this crate are smooth and periodic, so
//! convergence is spectral and the default 64 nodes put quadrature error far
//! below every fit tolerance in the stability suite.

/// Abscissae of the 8-point Gauss-Legendre rule on [-1, 1].
const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

/// Weights paired with [`GL8_NODES`].
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_29,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_29,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Number of panels used to realize a total node budget.
pub fn panels_for(nodes: usize) -> usize {
    nodes.div_ceil(8).max(1)
}

/// Integrate a scalar function over `[a, b]` with at least `nodes` total
/// Gauss-Legendre nodes. `a > b` yields the signed integral.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, nodes: usize) -> f64 {
    let panels = panels_for(nodes);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Integrate a vector-valued function over `[a, b]`, accumulating into `out`.
///
/// `f(t, slot)` must write the integrand value at `t` into `slot`; `out` is
/// overwritten with the integral.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, nodes: usize, out: &mut [f64])
where
    F: FnMut(f64, &mut [f64]),
{
    let panels = panels_for(nodes);
    let h = (b - a) / panels as f64;
    let mut slot = vec![0.0; out.len()];
    out.fill(0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            f(mid + half * x, &mut slot);
            for (o, s) in out.iter_mut().zip(slot.iter()) {
                *o += w * half * s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn single_panel_is_exact_for_degree_15() {
        // ∫₀¹ x¹⁵ dx = 1/16
        let got = integrate(|x| x.powi(15), 0.0, 1.0, 8);
        assert!((got - 1.0 / 16.0).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn sine_over_half_period() {
        let got = integrate(f64::sin, 0.0, PI, 16);
        assert!((got - 2.0).abs() < 1e-13, "got {got}");
    }

    #[test]
    fn periodic_cosine_averages_to_zero() {
        let got = integrate(f64::cos, 0.0, TAU, 64);
        assert!(got.abs() < 1e-14, "got {got}");
    }

    #[test]
    fn node_budget_rounds_up() {
        assert_eq!(panels_for(8), 1);
        assert_eq!(panels_for(9), 2);
        assert_eq!(panels_for(64), 8);
        assert_eq!(panels_for(1), 1);
    }

    #[test]
    fn vector_integrand_matches_scalar() {
        let mut out = [0.0; 2];
        integrate_vec(
            |t, slot| {
                slot[0] = t.sin();
                slot[1] = t * t;
            },
            0.0,
            2.0,
            32,
            &mut out,
        );
        let s0 = integrate(f64::sin, 0.0, 2.0, 32);
        let s1 = integrate(|t| t * t, 0.0, 2.0, 32);
        assert!((out[0] - s0).abs() < 1e-15);
        assert!((out[1] - s1).abs() < 1e-15);
    }

    #[test]
    fn reversed_interval_is_signed() {
        let fwd = integrate(|x| x.exp(), 0.0, 1.0, 16);
        let bwd = integrate(|x| x.exp(), 1.0, 0.0, 16);
        assert!((fwd + bwd).abs() < 1e-14);
    }
}
