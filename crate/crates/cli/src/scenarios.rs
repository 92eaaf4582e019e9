//! Scenario implementations: each wires the library into one named,
//! reproducible experiment and emits CSV/JSON artifacts plus a plot script.

use crate::config::{RunConfig, ScenarioId};
use crate::output;
use anyhow::{Context, Result};
use serde_json::{json, Value};
use sflab::averaging::{average_reduced, averaging_defect, estimate_jacobian_bounds};
use sflab::kuramoto::{
    averaged_mu_closed_form, averaged_mu_rate_constant, averaged_mu_rhs, linearized_classification,
    phase_locked_equilibria, simulate_remote_sync_experiment, KuramotoStarParams, RemoteSyncReport,
    StabilityVerdict,
};
use sflab::ode::IntegratorConfig;
use sflab::stability::ensemble::Verdict;
use sflab::stability::lyapunov::{
    build_converse_lyapunov, pilot_decay_rate, verify_lyapunov_certificate, GenericSystem,
    LyapunovGrid,
};
use sflab::stability::{
    assess_partial_stability, check_perturbation_envelope, fit_exponential_decay, EnsembleSpec,
    MemberOutcome, PerturbationSpec, StabilityReport,
};
use sflab::system::{example1, reduce_to_fast_axis, verify_fast_rate_bound, Domain};
use sflab::{rng, Trajectory};
use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

/// What a finished scenario hands back to the CLI.
pub struct RunOutcome {
    pub results: Value,
    /// Per-case runtime failures (not verdicts); any of these makes the
    /// process exit with code 2.
    pub failures: Vec<String>,
}

fn fin(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn ensemble_spec(cfg: &RunConfig, dim_y: usize) -> EnsembleSpec {
    EnsembleSpec {
        count: cfg.ensemble.count,
        radius: cfg.ensemble.radius,
        y_ranges: vec![cfg.ensemble.y_range; dim_y],
        z0_range: cfg.ensemble.z0_range,
        seed: cfg.seed,
    }
}

fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::Stable { k, lambda } => {
            json!({"kind": "stable", "k": fin(*k), "lambda": fin(*lambda)})
        }
        Verdict::Unstable => json!({"kind": "unstable"}),
        Verdict::Inconclusive => json!({"kind": "inconclusive"}),
    }
}

fn collect_failures(members: &[MemberOutcome]) -> Vec<String> {
    members
        .iter()
        .filter_map(|m| match m {
            MemberOutcome::Failed { error } => Some(error.clone()),
            _ => None,
        })
        .collect()
}

fn write_traj(dir: &Path, name: &str, traj: &Trajectory) -> Result<()> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    fs::write(dir.join(name), buf).with_context(|| format!("writing {name}"))?;
    Ok(())
}

pub fn run_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    match cfg.scenario {
        ScenarioId::Example1 => example1_scenario(cfg, dir),
        ScenarioId::Example1Averaged => example1_averaged_scenario(cfg, dir),
        ScenarioId::EpsilonSweep => epsilon_sweep_scenario(cfg, dir),
        ScenarioId::KuramotoLocked => kuramoto_locked_scenario(cfg, dir),
        ScenarioId::KuramotoDetuned => kuramoto_detuned_scenario(cfg, dir),
        ScenarioId::AlphaSweep => alpha_sweep_scenario(cfg, dir),
        ScenarioId::USweep => u_sweep_scenario(cfg, dir),
        ScenarioId::Certificate => certificate_scenario(cfg, dir),
        ScenarioId::Envelope => envelope_scenario(cfg, dir),
    }
}

// ---------------------------------------------------------------------------
// Example 1
// ---------------------------------------------------------------------------

fn example1_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let eps = cfg.num("epsilon");
    let transient = cfg.num("transient");
    let quad_nodes = cfg.num("quad_nodes") as usize;
    let sys = example1(eps);
    let cfg_t = if cfg.integrator_explicit {
        cfg.integrator
    } else {
        sys.default_full_config()
    };

    // Standing-assumption audits before any verdict.
    let dom = Domain::centered(1, 3.0, vec![[-PI, PI]], sys.period);
    let rate_report = verify_fast_rate_bound(&sys, &dom, 100_000, cfg.seed)?;
    let peq = sflab::system::check_partial_equilibrium(&sys, &[[-PI, PI]], 2_000, cfg.seed);

    let spec = ensemble_spec(cfg, 1);
    let assessment = assess_partial_stability(&sys, &spec, cfg.num("horizon_t"), &cfg_t, transient);
    let mut failures = collect_failures(&assessment.members);

    // Member 0 trajectory for the artifact set; its failure is a case
    // failure, not a reason to abandon the rest of the scenario.
    {
        let mut r = rng::member_rng(cfg.seed, 0);
        let radius = spec.radius * (1.0 - rng::unit(&mut r));
        let x0 = rng::sample_sphere(&mut r, 1, radius);
        let y0 = rng::sample_ranges(&mut r, &spec.y_ranges);
        let z0 = rng::sample_ranges(&mut r, &[spec.z0_range])[0];
        match sys.simulate_full(&x0, &y0, z0, [0.0, cfg.num("horizon_t")], &cfg_t) {
            Ok(traj) => write_traj(dir, "trajectory_member0.csv", &traj)?,
            Err(e) => failures.push(format!("member-0 trajectory export: {e}")),
        }
    }

    // Canonical averaged trajectory on the fast axis and its decay fit.
    let red = reduce_to_fast_axis(&sys);
    let av = average_reduced(&red, quad_nodes)?;
    let z_end = cfg.num("z_decades") * 10f64.ln() / (0.2 * eps);
    let av_traj = av.simulate(
        &[cfg.num("averaged_w0")],
        &[cfg.num("averaged_v0")],
        [0.0, z_end],
        &IntegratorConfig::rk45(1e-10, 1e-12),
    )?;
    write_traj(dir, "averaged_trajectory.csv", &av_traj)?;
    let av_fit = fit_exponential_decay(&av_traj, 0..1, transient)?;
    let rate_floor = 0.9 * (4.0 / 15.0) * eps;

    let results = json!({
        "fast_rate": {
            "theta_lower": fin(rate_report.theta_lower),
            "violated": rate_report.violated,
        },
        "partial_equilibrium_pass": peq.pass,
        "ensemble": {
            "verdict": verdict_json(&assessment.verdict),
            "r2_min": assessment.r2_min.map(fin),
        },
        "averaged": {
            "rate_z": fin(av_fit.rate_lambda),
            "rate_floor": fin(rate_floor),
            "rate_ok": av_fit.rate_lambda >= rate_floor,
            "r2": fin(av_fit.r_squared),
            "accepted": av_fit.accepted,
        },
        "report": serde_json::to_value(StabilityReport::from_assessment(&assessment))?,
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome { results, failures })
}

fn example1_averaged_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let eps = cfg.num("epsilon");
    let transient = cfg.num("transient");
    let quad_nodes = cfg.num("quad_nodes") as usize;
    let sys = example1(eps);
    let red = reduce_to_fast_axis(&sys);
    let av = average_reduced(&red, quad_nodes)?;

    let z_end = cfg.num("z_decades") * 10f64.ln() / (0.2 * eps);
    let spec = ensemble_spec(cfg, 1);
    let assessment = assess_partial_stability(
        &av,
        &spec,
        z_end,
        &IntegratorConfig::rk45(1e-10, 1e-12),
        transient,
    );
    let failures = collect_failures(&assessment.members);

    // Defect diagnostics: u(w, v, T) ≈ 0 and the 2TL₁‖w‖ bound.
    let dom = Domain::centered(1, cfg.ensemble.radius, vec![[-PI, PI]], sys.period);
    let bounds = estimate_jacobian_bounds(&red, &dom, 3_000, cfg.seed)?;
    let n_samples = cfg.num("defect_samples") as usize;
    let mut max_period_defect = 0.0f64;
    let mut bound_ok = true;
    let mut r = rng::member_rng(cfg.seed, u64::MAX);
    for _ in 0..n_samples {
        let w = cfg.ensemble.radius * (2.0 * rng::unit(&mut r) - 1.0);
        let v = PI * (2.0 * rng::unit(&mut r) - 1.0);
        let at_t = averaging_defect(&av, &[w], &[v], sys.period, Some(bounds.l1))?;
        max_period_defect = max_period_defect.max(at_t.norm);
        let mid = averaging_defect(&av, &[w], &[v], 0.37 * sys.period, Some(bounds.l1))?;
        bound_ok &= mid.within_bound.unwrap_or(false);
    }

    let traj = av.simulate(
        &[cfg.ensemble.radius],
        &[0.0],
        [0.0, z_end],
        &IntegratorConfig::rk45(1e-10, 1e-12),
    )?;
    write_traj(dir, "averaged_trajectory.csv", &traj)?;

    let results = json!({
        "ensemble": {
            "verdict": verdict_json(&assessment.verdict),
            "r2_min": assessment.r2_min.map(fin),
        },
        "jacobian_bounds": serde_json::to_value(bounds)?,
        "defect": {
            "max_norm_at_period": fin(max_period_defect),
            "bound_ok": bound_ok,
        },
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome { results, failures })
}

fn epsilon_sweep_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    use rayon::prelude::*;
    let axis = cfg.sweep.as_ref().expect("validated");
    let transient = cfg.num("transient");
    let decades = cfg.num("z_decades");
    let registry = sflab::system::SystemRegistry::with_builtins();
    let system_id = cfg.text("system").to_string();
    // The family ε ↦ system, built through the registry: example1 takes ε
    // directly; the Kuramoto (μ, ζ) family reads ε as 1/u.
    let family = |eps: f64| -> Result<(sflab::ReducedSystem, f64), sflab::system::SystemError> {
        let mut params = std::collections::BTreeMap::new();
        let horizon = if system_id == "kuramoto_star" {
            params.insert("alpha".to_string(), cfg.num("alpha"));
            params.insert("coupling".to_string(), cfg.num("coupling"));
            params.insert("detuning".to_string(), 1.0 / eps);
            let p = KuramotoStarParams::symmetric(
                1.0,
                cfg.num("coupling"),
                cfg.num("alpha"),
                1.0 / eps,
            );
            let rate_z = averaged_mu_closed_form(0.05, &p)
                .map(|f| (f / 0.05).abs() / (TAU / eps))
                .unwrap_or(0.02 * eps);
            decades * 10f64.ln() / rate_z.max(1e-6)
        } else {
            params.insert("epsilon".to_string(), eps);
            decades * 10f64.ln() / (0.2 * eps)
        };
        Ok((
            reduce_to_fast_axis(&registry.build(&system_id, &params)?),
            horizon,
        ))
    };
    let dim_y = if system_id == "kuramoto_star" { 0 } else { 1 };
    let spec_template = ensemble_spec(cfg, dim_y);

    struct Row {
        eps: f64,
        verdict: &'static str,
        lambda: Option<f64>,
        k: Option<f64>,
        r2_min: Option<f64>,
        error: Option<String>,
    }

    let rows: Vec<Row> = axis
        .values
        .par_iter()
        .map(|&eps| {
            let (red, horizon) = match family(eps) {
                Ok(pair) => pair,
                Err(e) => {
                    return Row {
                        eps,
                        verdict: "error",
                        lambda: None,
                        k: None,
                        r2_min: None,
                        error: Some(format!("eps={eps}: {e}")),
                    }
                }
            };
            let a = assess_partial_stability(
                &red,
                &spec_template,
                horizon,
                &IntegratorConfig::rk45(1e-10, 1e-12),
                transient,
            );
            let fails = collect_failures(&a.members);
            let (verdict, k, lambda) = match a.verdict {
                Verdict::Stable { k, lambda } => ("stable", Some(k), Some(lambda)),
                Verdict::Unstable => ("unstable", None, None),
                Verdict::Inconclusive => ("inconclusive", None, None),
            };
            Row {
                eps,
                verdict,
                lambda,
                k,
                r2_min: a.r2_min,
                error: fails.first().cloned(),
            }
        })
        .collect();

    let mut csv = String::from("epsilon,verdict,lambda,k,r2_min\n");
    for row in &rows {
        csv.push_str(&format!(
            "{:.16e},{},{},{},{}\n",
            row.eps,
            row.verdict,
            row.lambda.map_or("".into(), |v| format!("{v:.16e}")),
            row.k.map_or("".into(), |v| format!("{v:.16e}")),
            row.r2_min.map_or("".into(), |v| format!("{v:.16e}")),
        ));
    }
    fs::write(dir.join("sweep.csv"), csv)?;

    // λ̂ should be proportional to ε: regress and report the fit quality.
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.lambda.map(|l| (r.eps, l)))
        .collect();
    let regression = if pts.len() >= 3 {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (slope, intercept, r2) = sflab_line_fit(&xs, &ys);
        json!({"slope": fin(slope), "intercept": fin(intercept), "r2": fin(r2)})
    } else {
        Value::Null
    };

    let failures: Vec<String> = rows.iter().filter_map(|r| r.error.clone()).collect();
    let stable_eps: Vec<f64> = rows
        .iter()
        .filter(|r| r.verdict == "stable")
        .map(|r| r.eps)
        .collect();
    let results = json!({
        "cells": rows.len(),
        "stable_cells": stable_eps.len(),
        "largest_stable_epsilon": stable_eps.iter().fold(None::<f64>, |m, e| Some(m.map_or(*e, |x| x.max(*e)))),
        "rate_regression": regression,
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome { results, failures })
}

// Plain least squares on (x, y); local copy to keep the CLI decoupled from
// library internals.
fn sflab_line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (slope * a + intercept)).powi(2))
        .sum();
    (slope, intercept, 1.0 - ss_res / syy)
}

// ---------------------------------------------------------------------------
// Kuramoto
// ---------------------------------------------------------------------------

/// Shared per-configuration experiment: simulate, fit, classify.
struct KuramotoCell {
    eig_stable: bool,
    sim_verdict: &'static str,
    lambda_diff: Option<f64>,
    lambda_mu: Option<f64>,
    r2: Option<f64>,
    growth: f64,
    report: RemoteSyncReport,
    error: Option<String>,
}

fn kuramoto_horizon(alpha: f64, coupling: f64, u: f64, requested: f64) -> f64 {
    if requested > 0.0 {
        return requested;
    }
    if u > 3.0 * coupling {
        // Estimated t-axis decay rate from the averaged closed form.
        let p = KuramotoStarParams::symmetric(1.0, coupling, alpha, u);
        let rate = averaged_mu_closed_form(0.05, &p)
            .map(|f| (f / 0.05).abs() / TAU)
            .unwrap_or(0.05);
        (14.0 / rate.max(1e-3)).clamp(80.0, 2000.0)
    } else if u == 0.0 {
        let (c, _) = phase_locked_equilibria(alpha);
        let slow = (c - alpha).cos().abs();
        (12.0 / slow.max(1e-3)).clamp(100.0, 4000.0)
    } else {
        400.0
    }
}

fn kuramoto_cell(
    alpha: f64,
    u: f64,
    coupling: f64,
    omega: f64,
    perturb: f64,
    horizon: f64,
    transient: f64,
    cfg: &IntegratorConfig,
) -> KuramotoCell {
    let p = KuramotoStarParams::symmetric(omega, coupling, alpha, u);
    let (c, _) = phase_locked_equilibria(alpha);
    let theta0 = if u == 0.0 {
        [c + perturb, perturb, -perturb]
    } else {
        // No locked point to anchor to; perturb symmetrically off M.
        [0.5, 1.5 * perturb, -1.5 * perturb]
    };
    let horizon = kuramoto_horizon(alpha, coupling, u, horizon);
    let cls = linearized_classification(alpha, coupling);
    match simulate_remote_sync_experiment(&p, theta0, horizon, cfg, transient) {
        Ok(rep) => {
            let (lambda_diff, r2, accepted) = match &rep.fit_theta_diff {
                Ok(f) => (Some(f.rate_lambda), Some(f.r_squared), f.accepted),
                Err(_) => (None, None, false),
            };
            let lambda_mu = rep.fit_mu.as_ref().ok().map(|f| f.rate_lambda);
            let sim_verdict = if rep.theta_diff_growth >= 10.0 {
                "unstable"
            } else if accepted && lambda_diff.unwrap_or(0.0) > 0.0 {
                "stable"
            } else {
                "inconclusive"
            };
            KuramotoCell {
                eig_stable: cls.verdict_m1 == StabilityVerdict::Stable,
                sim_verdict,
                lambda_diff,
                lambda_mu,
                r2,
                growth: rep.theta_diff_growth,
                report: rep,
                error: None,
            }
        }
        Err(e) => KuramotoCell {
            eig_stable: cls.verdict_m1 == StabilityVerdict::Stable,
            sim_verdict: "error",
            lambda_diff: None,
            lambda_mu: None,
            r2: None,
            growth: f64::NAN,
            report: RemoteSyncReport {
                params: p,
                trajectory: Trajectory::from_nodes(
                    sflab::IndependentAxis::TimeT,
                    vec![0.0],
                    vec![theta0.to_vec()],
                    vec![vec![0.0; 3]],
                ),
                observables: vec![],
                fit_mu: Err(sflab::stability::FitError::NonFinite),
                fit_theta_diff: Err(sflab::stability::FitError::NonFinite),
                classification: cls,
                f_av_worst: None,
                max_cycle_residual: f64::NAN,
                theta_diff_growth: f64::NAN,
            },
            error: Some(format!("alpha={alpha} u={u}: {e}")),
        },
    }
}

fn cell_json(cell: &KuramotoCell) -> Value {
    json!({
        "eig_verdict": if cell.eig_stable { "stable" } else { "unstable" },
        "sim_verdict": cell.sim_verdict,
        "lambda_diff": cell.lambda_diff.map(fin),
        "lambda_mu": cell.lambda_mu.map(fin),
        "r2": cell.r2.map(fin),
        "growth": fin(cell.growth),
    })
}

fn kuramoto_locked_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let alpha = cfg.num("alpha");
    let coupling = cfg.num("coupling");
    let cell = kuramoto_cell(
        alpha,
        0.0,
        coupling,
        cfg.num("omega"),
        cfg.num("perturb"),
        cfg.num("horizon"),
        cfg.num("transient"),
        &cfg.integrator,
    );
    let failures: Vec<String> = cell.error.iter().cloned().collect();
    let mut obs = Vec::new();
    sflab::kuramoto::write_observables_csv(&cell.report.observables, &mut obs)?;
    fs::write(dir.join("observables.csv"), obs)?;
    let cls = &cell.report.classification;
    let results = json!({
        "classification": serde_json::to_value(cls)?,
        "cell": cell_json(&cell),
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome { results, failures })
}

fn kuramoto_detuned_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let p = KuramotoStarParams::symmetric(
        cfg.num("omega"),
        cfg.num("coupling"),
        cfg.num("alpha"),
        cfg.num("u"),
    );
    let d0 = cfg.num("theta_diff0");
    let rep = simulate_remote_sync_experiment(
        &p,
        [0.5, 0.5 * d0, -0.5 * d0],
        cfg.num("horizon"),
        &cfg.integrator,
        cfg.num("transient"),
    )?;
    let mut obs = Vec::new();
    sflab::kuramoto::write_observables_csv(&rep.observables, &mut obs)?;
    fs::write(dir.join("observables.csv"), obs)?;

    // Averaged-decay audit: closed form negative across (0,1), quadrature
    // agreement, and the linear bound below ξ.
    let xi = cfg.num("xi");
    let mut worst_gap = 0.0f64;
    let mut all_negative = true;
    let mut linear_bound = true;
    if p.u > 3.0 * p.a1 {
        for i in 1..100 {
            let mu = i as f64 / 100.0;
            let a = averaged_mu_rhs(mu, &p, xi, 128)?;
            worst_gap = worst_gap.max((a.closed_form - a.quadrature).abs());
            all_negative &= a.closed_form < 0.0;
            if mu <= xi {
                linear_bound &= a.linear_bound_holds;
            }
        }
    }

    let fit_mu = rep.fit_mu.as_ref().ok();
    let results = json!({
        "fit_mu": {
            "accepted": fit_mu.is_some_and(|f| f.accepted),
            "lambda": fit_mu.map(|f| fin(f.rate_lambda)),
            "r2": fit_mu.map(|f| fin(f.r_squared)),
        },
        "f_av": {
            "all_negative": all_negative,
            "closed_vs_quadrature_max_abs": fin(worst_gap),
            "linear_bound_holds_below_xi": linear_bound,
            "rate_constant_c": fin(averaged_mu_rate_constant(&p, xi)?),
        },
        "limit_cycle": {
            "max_abs_residual": fin(rep.max_cycle_residual),
        },
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome {
        results,
        failures: vec![],
    })
}

fn sweep_rows_csv(rows: &[(f64, f64, KuramotoCell)]) -> String {
    let mut csv = String::from("alpha,u,eig_verdict,sim_verdict,lambda_diff,lambda_mu,r2,growth\n");
    for (alpha, u, cell) in rows {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{},{},{},{},{},{}\n",
            alpha,
            u,
            if cell.eig_stable {
                "stable"
            } else {
                "unstable"
            },
            cell.sim_verdict,
            cell.lambda_diff.map_or("".into(), |v| format!("{v:.16e}")),
            cell.lambda_mu.map_or("".into(), |v| format!("{v:.16e}")),
            cell.r2.map_or("".into(), |v| format!("{v:.16e}")),
            if cell.growth.is_finite() {
                format!("{:.16e}", cell.growth)
            } else {
                "".into()
            },
        ));
    }
    csv
}

/// Adjacent pairs (param ascending) where the given verdict flips.
fn flip_brackets(points: &[(f64, bool)]) -> Vec<[f64; 2]> {
    points
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| [w[0].0, w[1].0])
        .collect()
}

fn alpha_sweep_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    use rayon::prelude::*;
    let alphas = &cfg.sweep.as_ref().expect("validated").values;
    let us: Vec<f64> = cfg
        .sweep2
        .as_ref()
        .map(|a| a.values.clone())
        .unwrap_or_else(|| vec![cfg.num("u")]);
    let grid: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|a| us.iter().map(move |u| (*a, *u)))
        .collect();
    let cells: Vec<(f64, f64, KuramotoCell)> = grid
        .par_iter()
        .map(|(alpha, u)| {
            (
                *alpha,
                *u,
                kuramoto_cell(
                    *alpha,
                    *u,
                    cfg.num("coupling"),
                    cfg.num("omega"),
                    cfg.num("perturb"),
                    cfg.num("horizon"),
                    cfg.num("transient"),
                    &cfg.integrator,
                ),
            )
        })
        .collect();
    fs::write(dir.join("sweep.csv"), sweep_rows_csv(&cells))?;

    let mut per_u = serde_json::Map::new();
    for u in &us {
        let points_sim: Vec<(f64, bool)> = cells
            .iter()
            .filter(|(_, cu, _)| cu == u)
            .map(|(a, _, c)| (*a, c.sim_verdict == "stable"))
            .collect();
        let points_eig: Vec<(f64, bool)> = cells
            .iter()
            .filter(|(_, cu, _)| cu == u)
            .map(|(a, _, c)| (*a, c.eig_stable))
            .collect();
        per_u.insert(
            format!("u={u}"),
            json!({
                "stable_sim_cells": points_sim.iter().filter(|p| p.1).count(),
                "cells": points_sim.len(),
                "sim_flip_brackets": flip_brackets(&points_sim),
                "eig_flip_brackets": flip_brackets(&points_eig),
            }),
        );
    }

    let failures: Vec<String> = cells
        .iter()
        .filter_map(|(_, _, c)| c.error.clone())
        .collect();
    let results = json!({
        "cells": cells.len(),
        "alpha_threshold": fin(3.0f64.sqrt().atan()),
        "per_u": Value::Object(per_u),
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome { results, failures })
}

fn u_sweep_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    use rayon::prelude::*;
    let us = &cfg.sweep.as_ref().expect("validated").values;
    let alpha = cfg.num("alpha");
    let cells: Vec<(f64, f64, KuramotoCell)> = us
        .par_iter()
        .map(|u| {
            (
                alpha,
                *u,
                kuramoto_cell(
                    alpha,
                    *u,
                    cfg.num("coupling"),
                    cfg.num("omega"),
                    cfg.num("perturb"),
                    cfg.num("horizon"),
                    cfg.num("transient"),
                    &cfg.integrator,
                ),
            )
        })
        .collect();
    fs::write(dir.join("sweep.csv"), sweep_rows_csv(&cells))?;

    // Empirical stabilization threshold: smallest tested u from which every
    // larger tested u is sim-stable.
    let mut rho_hat = None;
    for i in (0..cells.len()).rev() {
        if cells[i].2.sim_verdict == "stable" {
            rho_hat = Some(cells[i].1);
        } else {
            break;
        }
    }
    let failures: Vec<String> = cells
        .iter()
        .filter_map(|(_, _, c)| c.error.clone())
        .collect();
    let results = json!({
        "cells": cells.len(),
        "rho_hat": rho_hat.map(fin),
        "three_a": fin(3.0 * cfg.num("coupling")),
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome { results, failures })
}

// ---------------------------------------------------------------------------
// Certificates and envelopes
// ---------------------------------------------------------------------------

fn certificate_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let slack = cfg.num("slack");
    let (sys, v_ranges, period, pilot_ic): (GenericSystem, Vec<[f64; 2]>, f64, Vec<f64>) =
        match cfg.text("system") {
            "scalar_oracle" => (
                GenericSystem::new(
                    1,
                    0,
                    |w: &[f64], _v: &[f64], _z: f64, out: &mut [f64]| out[0] = -w[0],
                    |_w, _v, _z, _out| {},
                ),
                vec![],
                1.0,
                vec![0.3],
            ),
            "example1_averaged" => {
                let eps = cfg.num("epsilon");
                let red = reduce_to_fast_axis(&example1(eps));
                let av = average_reduced(&red, cfg.num("quad_nodes") as usize)?;
                (
                    GenericSystem::from_averaged(&av),
                    vec![[0.0, TAU]],
                    TAU,
                    vec![cfg.num("w_radius")],
                )
            }
            other => anyhow::bail!("unhandled system {other}"),
        };

    let pilot_cfg = IntegratorConfig::rk45(1e-9, 1e-12);
    let v0 = vec![0.0; sys.dim_v];
    let pilot_horizon = match cfg.text("system") {
        "scalar_oracle" => 12.0,
        // Averaged Example 1 decays at roughly 0.2ε to 0.5ε per z unit.
        _ => 3.5 * 10f64.ln() / (0.15 * cfg.num("epsilon")),
    };
    let rate = pilot_decay_rate(&sys, &pilot_ic, &v0, 0.0, pilot_horizon, &pilot_cfg)?;
    let delta = if cfg.num("delta") > 0.0 {
        cfg.num("delta")
    } else {
        5.0 / rate
    };
    let step = if cfg.num("step") > 0.0 {
        cfg.num("step")
    } else {
        (period / 32.0).min(delta / 200.0)
    };
    let grid = LyapunovGrid::box_grid(
        sys.dim_w,
        cfg.num("w_radius"),
        cfg.num("n_w") as usize,
        &v_ranges,
        cfg.num("n_v") as usize,
        period,
        cfg.num("n_z") as usize,
    );
    let built = build_converse_lyapunov(&sys, delta, grid, step, slack);
    let (est, eval) = match built {
        Ok(pair) => pair,
        Err(e) => {
            return Ok(RunOutcome {
                results: json!({"built": false, "error": e.to_string()}),
                failures: vec![format!("certificate build failed: {e}")],
            })
        }
    };
    let report = verify_lyapunov_certificate(&est, &eval, &sys)?;
    let stab_report = StabilityReport {
        verdict: if report.pass {
            "certified".into()
        } else {
            "failed".into()
        },
        k: None,
        lambda: Some(rate),
        r2_min: None,
        c1: Some(est.c[0]),
        c2: Some(est.c[1]),
        c3: Some(est.c[2]),
        c4: Some(est.c[3]),
        c5: Some(est.c[4]),
        grid_spec: Some(est.grid.describe()),
        seed: cfg.seed,
    };
    fs::write(dir.join("certificate.json"), stab_report.to_json())?;

    let results = json!({
        "built": true,
        "delta": fin(delta),
        "pilot_rate": fin(rate),
        "c": est.c.iter().map(|x| fin(*x)).collect::<Vec<_>>(),
        "checks": serde_json::to_value(&report.checks)?,
        "pass": report.pass,
        "min_margin": fin(report.min_margin),
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome {
        results,
        failures: vec![],
    })
}

fn envelope_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let delta = cfg.num("delta");
    let slack = cfg.num("slack");
    let sys = GenericSystem::new(
        1,
        0,
        |w: &[f64], _v: &[f64], _z: f64, out: &mut [f64]| out[0] = -w[0],
        |_w, _v, _z, _out| {},
    );
    let grid = LyapunovGrid::box_grid(1, 0.3, 7, &[], 1, 1.0, 2);
    let (est, _) = build_converse_lyapunov(&sys, delta, grid, 0.005, slack)?;

    let sim_cfg = IntegratorConfig::rk45(1e-10, 1e-12);
    let horizon = cfg.num("horizon");
    let w0 = cfg.num("w0");
    let (traj, spec, kind) = match cfg.text("test") {
        "vanishing" => {
            let g = cfg.num("gamma_scale");
            let perturbed = sys.with_perturbation(
                move |w: &[f64], _v: &[f64], z: f64, out: &mut [f64]| out[0] = g * w[0] * z.sin(),
                |_w, _v, _z, _out| {},
            );
            let traj = perturbed.simulate(&[w0], &[], [0.0, horizon], &sim_cfg)?;
            let c4 = est.c[3];
            let spec =
                PerturbationSpec::vanishing(move |z: f64| g * z.sin().abs(), |_| 0.0, g * c4, 0.0);
            (traj, spec, "vanishing")
        }
        "constant_psi" => {
            let psi_bar = cfg.num("psi_bar");
            let perturbed = sys.with_perturbation(
                move |_w: &[f64], _v: &[f64], z: f64, out: &mut [f64]| out[0] = psi_bar * z.sin(),
                |_w, _v, _z, _out| {},
            );
            let traj = perturbed.simulate(&[w0], &[], [0.0, horizon], &sim_cfg)?;
            let spec = PerturbationSpec::new(|_| 0.0, |_| 0.0, move |_| psi_bar, |_| 0.0, 0.0, 0.0);
            (traj, spec, "constant_psi")
        }
        other => anyhow::bail!("unhandled test {other}"),
    };
    let gamma_budget_ok = spec.audit_gamma_budget(&est.c, 0.0, horizon);
    let rep = check_perturbation_envelope(&est, &traj, 0..1, &spec)?;

    // Envelope-vs-trajectory artifact.
    let mut csv = String::from("z,w_norm,envelope\n");
    for (i, (w, e)) in rep.w_norms.iter().zip(&rep.envelope).enumerate() {
        csv.push_str(&format!("{:.16e},{w:.16e},{e:.16e}\n", traj.time(i)));
    }
    fs::write(dir.join("envelope.csv"), csv)?;

    let late_max = rep
        .w_norms
        .iter()
        .enumerate()
        .filter(|(i, _)| traj.time(*i) > 0.7 * horizon)
        .map(|(_, w)| *w)
        .fold(0.0f64, f64::max);

    let results = json!({
        "test": kind,
        "pass": rep.pass,
        "max_residual_rel": fin(rep.max_residual_rel),
        "k1": fin(rep.k1),
        "k2": fin(rep.k2),
        "tail_bound": fin(rep.tail_bound),
        "late_max_norm": fin(late_max),
        "gamma_budget_ok": gamma_budget_ok,
        "c": est.c.iter().map(|x| fin(*x)).collect::<Vec<_>>(),
    });
    output::write_plot_script(dir, cfg.scenario.name())?;
    Ok(RunOutcome {
        results,
        failures: vec![],
    })
}
