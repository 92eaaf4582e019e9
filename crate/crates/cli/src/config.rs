//! Scenario configuration: TOML with a closed schema.
//!
//! Validation is exhaustive — every problem in the file is reported, not
//! just the first — and unknown keys are hard errors so parameter-name
//! typos cannot silently fall back to defaults.

use serde::Serialize;
use sflab::ode::{IntegratorConfig, Scheme};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::path::PathBuf;
use toml::Value;

#[derive(Debug)]
pub struct ValidationErrors(pub Vec<String>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problems):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Example1,
    Example1Averaged,
    EpsilonSweep,
    KuramotoLocked,
    KuramotoDetuned,
    AlphaSweep,
    USweep,
    Certificate,
    Envelope,
}

pub const SCENARIO_IDS: [(&str, ScenarioId, &str); 9] = [
    (
        "example1",
        ScenarioId::Example1,
        "full slow-fast benchmark ensemble in t plus the averaged w-decay fit in z",
    ),
    (
        "example1_averaged",
        ScenarioId::Example1Averaged,
        "averaged-system ensemble in z with defect diagnostics",
    ),
    (
        "epsilon_sweep",
        ScenarioId::EpsilonSweep,
        "reduced-system stability sweep over epsilon with rate regression",
    ),
    (
        "kuramoto_locked",
        ScenarioId::KuramotoLocked,
        "phase-locked star at u = 0: classification plus simulation",
    ),
    (
        "kuramoto_detuned",
        ScenarioId::KuramotoDetuned,
        "detuned star: mu decay, averaged-decay audit, limit-cycle residual",
    ),
    (
        "alpha_sweep",
        ScenarioId::AlphaSweep,
        "verdict map over the phase shift (optionally x detuning)",
    ),
    (
        "u_sweep",
        ScenarioId::USweep,
        "verdict map over the detuning at fixed phase shift",
    ),
    (
        "certificate",
        ScenarioId::Certificate,
        "build and verify a converse Lyapunov certificate",
    ),
    (
        "envelope",
        ScenarioId::Envelope,
        "perturbation envelope checks from a scalar certificate",
    ),
];

impl ScenarioId {
    pub fn parse(s: &str) -> Option<ScenarioId> {
        SCENARIO_IDS
            .iter()
            .find(|(name, _, _)| *name == s)
            .map(|(_, id, _)| *id)
    }

    pub fn name(&self) -> &'static str {
        SCENARIO_IDS
            .iter()
            .find(|(_, id, _)| id == self)
            .map(|(name, _, _)| *name)
            .unwrap()
    }

    pub fn is_sweep(&self) -> bool {
        matches!(
            self,
            ScenarioId::EpsilonSweep | ScenarioId::AlphaSweep | ScenarioId::USweep
        )
    }
}

/// One sweep axis: an explicit list or an inclusive start/stop/step range.
#[derive(Debug, Clone, Serialize)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleBlock {
    pub count: usize,
    pub radius: f64,
    pub y_range: [f64; 2],
    pub z0_range: [f64; 2],
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        EnsembleBlock {
            count: 64,
            radius: 0.3,
            y_range: [0.0, TAU],
            z0_range: [0.0, TAU],
        }
    }
}

/// A scenario parameter value; the schema pins which are numeric and which
/// are identifiers.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            ParamValue::Number(x) => *x,
            ParamValue::Text(_) => f64::NAN,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            ParamValue::Text(s) => s,
            ParamValue::Number(_) => "",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub scenario: ScenarioId,
    pub seed: u64,
    /// Not part of the summary echo: the same run into two directories must
    /// produce byte-identical summaries.
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub params: BTreeMap<String, ParamValue>,
    pub integrator: IntegratorConfig,
    /// Whether the file carried an explicit [integrator] block; scenarios
    /// use their own step defaults otherwise.
    pub integrator_explicit: bool,
    pub ensemble: EnsembleBlock,
    pub sweep: Option<SweepAxis>,
    pub sweep2: Option<SweepAxis>,
}

impl RunConfig {
    pub fn num(&self, key: &str) -> f64 {
        self.params
            .get(key)
            .unwrap_or_else(|| panic!("validated param {key} missing"))
            .as_f64()
    }

    pub fn text(&self, key: &str) -> &str {
        self.params
            .get(key)
            .unwrap_or_else(|| panic!("validated param {key} missing"))
            .as_str()
    }
}

enum Kind {
    Num,
    Text(&'static [&'static str]),
}

struct ParamSpec {
    key: &'static str,
    kind: Kind,
    required: bool,
    default: ParamValue,
    check: fn(f64) -> bool,
    describe: &'static str,
}

fn num(
    key: &'static str,
    default: f64,
    check: fn(f64) -> bool,
    describe: &'static str,
) -> ParamSpec {
    ParamSpec {
        key,
        kind: Kind::Num,
        required: false,
        default: ParamValue::Number(default),
        check,
        describe,
    }
}

fn req_num(key: &'static str, check: fn(f64) -> bool, describe: &'static str) -> ParamSpec {
    ParamSpec {
        key,
        kind: Kind::Num,
        required: true,
        default: ParamValue::Number(f64::NAN),
        check,
        describe,
    }
}

fn text(key: &'static str, default: &'static str, allowed: &'static [&'static str]) -> ParamSpec {
    ParamSpec {
        key,
        kind: Kind::Text(allowed),
        required: false,
        default: ParamValue::Text(default.to_string()),
        check: |_| true,
        describe: "one of the listed identifiers",
    }
}

fn positive(x: f64) -> bool {
    x > 0.0
}
fn non_negative(x: f64) -> bool {
    x >= 0.0
}
fn fraction(x: f64) -> bool {
    (0.0..0.9).contains(&x)
}
fn open_half_pi(x: f64) -> bool {
    x > 0.0 && x < FRAC_PI_2
}
fn any(_: f64) -> bool {
    true
}

fn scenario_params(id: ScenarioId) -> Vec<ParamSpec> {
    match id {
        ScenarioId::Example1 => vec![
            num("epsilon", 0.01, positive, "> 0"),
            num("horizon_t", 12.0, positive, "> 0"),
            num("z_decades", 3.2, positive, "> 0"),
            num("averaged_w0", 0.3, positive, "> 0"),
            num("averaged_v0", 0.0, any, "any real"),
            num("transient", 0.1, fraction, "in [0, 0.9)"),
            num("quad_nodes", 64.0, |x| x >= 8.0, ">= 8"),
        ],
        ScenarioId::Example1Averaged => vec![
            num("epsilon", 0.05, positive, "> 0"),
            num("z_decades", 3.2, positive, "> 0"),
            num("transient", 0.1, fraction, "in [0, 0.9)"),
            num("quad_nodes", 64.0, |x| x >= 8.0, ">= 8"),
            num("defect_samples", 5.0, positive, "> 0"),
        ],
        ScenarioId::EpsilonSweep => vec![
            text("system", "example1", &["example1", "kuramoto_star"]),
            num("alpha", 0.9, open_half_pi, "in (0, pi/2)"),
            num("coupling", 1.0, positive, "> 0"),
            num("z_decades", 3.0, positive, "> 0"),
            num("transient", 0.1, fraction, "in [0, 0.9)"),
            num("quad_nodes", 64.0, |x| x >= 8.0, ">= 8"),
        ],
        ScenarioId::KuramotoLocked => vec![
            req_num("alpha", open_half_pi, "in (0, pi/2)"),
            num("coupling", 1.0, positive, "> 0"),
            num("omega", 1.0, positive, "> 0"),
            num("perturb", 0.05, positive, "> 0"),
            num("horizon", 0.0, non_negative, ">= 0 (0 = auto)"),
            num("transient", 0.3, fraction, "in [0, 0.9)"),
        ],
        ScenarioId::KuramotoDetuned => vec![
            req_num("alpha", open_half_pi, "in (0, pi/2)"),
            req_num("u", positive, "> 0"),
            num("coupling", 1.0, positive, "> 0"),
            num("omega", 1.0, positive, "> 0"),
            num("theta_diff0", 0.3, positive, "> 0"),
            num("horizon", 120.0, positive, "> 0"),
            num("transient", 0.25, fraction, "in [0, 0.9)"),
            num("xi", 0.5, |x| x > 0.0 && x < 1.0, "in (0, 1)"),
        ],
        ScenarioId::AlphaSweep => vec![
            num("coupling", 1.0, positive, "> 0"),
            num("omega", 1.0, positive, "> 0"),
            num("u", 0.0, non_negative, ">= 0"),
            num("perturb", 0.05, positive, "> 0"),
            num("horizon", 0.0, non_negative, ">= 0 (0 = auto)"),
            num("transient", 0.3, fraction, "in [0, 0.9)"),
        ],
        ScenarioId::USweep => vec![
            req_num("alpha", open_half_pi, "in (0, pi/2)"),
            num("coupling", 1.0, positive, "> 0"),
            num("omega", 1.0, positive, "> 0"),
            num("perturb", 0.05, positive, "> 0"),
            num("horizon", 0.0, non_negative, ">= 0 (0 = auto)"),
            num("transient", 0.3, fraction, "in [0, 0.9)"),
        ],
        ScenarioId::Certificate => vec![
            text(
                "system",
                "example1_averaged",
                &["scalar_oracle", "example1_averaged"],
            ),
            num("epsilon", 0.25, positive, "> 0"),
            num("delta", 0.0, non_negative, ">= 0 (0 = auto, 5/rate)"),
            num("n_w", 15.0, |x| x >= 3.0, ">= 3"),
            num("n_v", 15.0, |x| x >= 1.0, ">= 1"),
            num("n_z", 8.0, |x| x >= 1.0, ">= 1"),
            num("w_radius", 0.3, positive, "> 0"),
            num("step", 0.0, non_negative, ">= 0 (0 = auto)"),
            num("slack", 0.1, |x| (0.0..0.5).contains(&x), "in [0, 0.5)"),
            num("quad_nodes", 16.0, |x| x >= 8.0, ">= 8"),
        ],
        ScenarioId::Envelope => vec![
            text("test", "vanishing", &["vanishing", "constant_psi"]),
            num("gamma_scale", 0.05, non_negative, ">= 0"),
            num("psi_bar", 0.01, non_negative, ">= 0"),
            num("w0", 0.2, positive, "> 0"),
            num("delta", 2.0, positive, "> 0"),
            num("horizon", 30.0, positive, "> 0"),
            num("slack", 0.1, |x| (0.0..0.5).contains(&x), "in [0, 0.5)"),
        ],
    }
}

struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn new() -> Self {
        Validator { errors: Vec::new() }
    }

    fn err(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn check_unknown_keys(&mut self, table: &toml::Table, allowed: &[&str], where_: &str) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.err(format!(
                    "unknown key `{key}` in {where_} (allowed: {})",
                    allowed.join(", ")
                ));
            }
        }
    }

    fn f64_of(&mut self, v: &Value, what: &str) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.err(format!("{what} must be a number, got {v}"));
                None
            }
        }
    }

    fn range2(&mut self, table: &toml::Table, key: &str, where_: &str) -> Option<[f64; 2]> {
        let v = table.get(key)?;
        let arr = match v.as_array() {
            Some(a) if a.len() == 2 => a,
            _ => {
                self.err(format!("{where_}.{key} must be a two-element array"));
                return None;
            }
        };
        let lo = self.f64_of(&arr[0], &format!("{where_}.{key}[0]"))?;
        let hi = self.f64_of(&arr[1], &format!("{where_}.{key}[1]"))?;
        if hi < lo {
            self.err(format!("{where_}.{key}: upper bound below lower bound"));
            return None;
        }
        Some([lo, hi])
    }
}

fn parse_integrator(v: &mut Validator, table: Option<&Value>) -> IntegratorConfig {
    let mut cfg = IntegratorConfig::default();
    let Some(t) = table else { return cfg };
    let Some(t) = t.as_table() else {
        v.err("[integrator] must be a table");
        return cfg;
    };
    v.check_unknown_keys(
        t,
        &["scheme", "step", "rtol", "atol", "max_steps"],
        "[integrator]",
    );
    if let Some(s) = t.get("scheme") {
        match s.as_str() {
            Some("rk4_fixed") => cfg.scheme = Scheme::Rk4Fixed,
            Some("rk45_adaptive") => cfg.scheme = Scheme::Rk45Adaptive,
            _ => v.err("integrator.scheme must be \"rk4_fixed\" or \"rk45_adaptive\""),
        }
    }
    for (key, slot, pred) in [
        (
            "step",
            &mut cfg.step as &mut f64,
            positive as fn(f64) -> bool,
        ),
        ("rtol", &mut cfg.rtol, positive),
        ("atol", &mut cfg.atol, positive),
    ] {
        if let Some(val) = t.get(key) {
            if let Some(x) = v.f64_of(val, &format!("integrator.{key}")) {
                if pred(x) {
                    *slot = x;
                } else {
                    v.err(format!("integrator.{key} = {x} must be > 0"));
                }
            }
        }
    }
    if let Some(val) = t.get("max_steps") {
        match val.as_integer() {
            Some(n) if n >= 1 => cfg.max_steps = n as usize,
            _ => v.err("integrator.max_steps must be an integer >= 1"),
        }
    }
    cfg
}

fn parse_ensemble(v: &mut Validator, table: Option<&Value>) -> EnsembleBlock {
    let mut b = EnsembleBlock::default();
    let Some(t) = table else { return b };
    let Some(t) = t.as_table() else {
        v.err("[ensemble] must be a table");
        return b;
    };
    v.check_unknown_keys(t, &["count", "radius", "y_range", "z0_range"], "[ensemble]");
    if let Some(val) = t.get("count") {
        match val.as_integer() {
            Some(n) if n >= 1 => b.count = n as usize,
            _ => v.err("ensemble.count must be an integer >= 1"),
        }
    }
    if let Some(val) = t.get("radius") {
        if let Some(x) = v.f64_of(val, "ensemble.radius") {
            if x > 0.0 {
                b.radius = x;
            } else {
                v.err(format!("ensemble.radius = {x} must be > 0"));
            }
        }
    }
    if let Some(r) = v.range2(t, "y_range", "ensemble") {
        b.y_range = r;
    }
    if let Some(r) = v.range2(t, "z0_range", "ensemble") {
        b.z0_range = r;
    }
    b
}

fn parse_sweep_axis(v: &mut Validator, value: &Value, where_: &str) -> Option<SweepAxis> {
    let Some(t) = value.as_table() else {
        v.err(format!("[{where_}] must be a table"));
        return None;
    };
    v.check_unknown_keys(
        t,
        &["param", "values", "start", "stop", "step"],
        &format!("[{where_}]"),
    );
    let param = match t.get("param").and_then(Value::as_str) {
        Some(p) => p.to_string(),
        None => {
            v.err(format!("{where_}.param (string) is required"));
            return None;
        }
    };
    let has_list = t.contains_key("values");
    let has_range = t.contains_key("start") || t.contains_key("stop") || t.contains_key("step");
    if has_list && has_range {
        v.err(format!(
            "{where_}: give either values = [...] or start/stop/step, not both"
        ));
        return None;
    }
    let values = if has_list {
        let arr = t.get("values").and_then(Value::as_array);
        let Some(arr) = arr else {
            v.err(format!("{where_}.values must be an array of numbers"));
            return None;
        };
        let mut out = Vec::new();
        for (i, item) in arr.iter().enumerate() {
            out.push(v.f64_of(item, &format!("{where_}.values[{i}]"))?);
        }
        out
    } else if has_range {
        let mut get = |key: &str| -> Option<f64> {
            match t.get(key) {
                Some(val) => v.f64_of(val, &format!("{where_}.{key}")),
                None => {
                    v.err(format!("{where_}.{key} is required with start/stop/step"));
                    None
                }
            }
        };
        let start = get("start");
        let stop = get("stop");
        let step = get("step");
        let (start, stop, step) = (start?, stop?, step?);
        if step <= 0.0 || stop < start {
            v.err(format!("{where_}: need step > 0 and stop >= start"));
            return None;
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| start + step * i as f64).collect()
    } else {
        v.err(format!("{where_}: give values = [...] or start/stop/step"));
        return None;
    };
    if values.is_empty() {
        v.err(format!("{where_}: empty grid"));
        return None;
    }
    Some(SweepAxis { param, values })
}

/// Parse and validate a config file's text. All problems are reported.
pub fn parse_config(text: &str, path_hint: &str) -> Result<RunConfig, ValidationErrors> {
    let doc: Value = toml::from_str(text)
        .map_err(|e| ValidationErrors(vec![format!("{path_hint}: TOML parse error: {e}")]))?;
    let mut v = Validator::new();
    let table = match doc.as_table() {
        Some(t) => t.clone(),
        None => {
            return Err(ValidationErrors(vec![format!(
                "{path_hint}: top level must be a table"
            )]))
        }
    };
    v.check_unknown_keys(
        &table,
        &[
            "scenario",
            "seed",
            "output_dir",
            "params",
            "integrator",
            "ensemble",
            "sweep",
            "sweep2",
        ],
        "top level",
    );

    let scenario = match table.get("scenario").and_then(Value::as_str) {
        Some(s) => match ScenarioId::parse(s) {
            Some(id) => Some(id),
            None => {
                v.err(format!(
                    "unknown scenario `{s}` (known: {})",
                    SCENARIO_IDS.map(|(n, _, _)| n).join(", ")
                ));
                None
            }
        },
        None => {
            v.err("top-level `scenario` (string) is required");
            None
        }
    };

    let seed = match table.get("seed") {
        None => 0u64,
        Some(val) => match val.as_integer() {
            Some(n) if n >= 0 => n as u64,
            _ => {
                v.err("seed must be a nonnegative integer");
                0
            }
        },
    };

    let output_dir = match table.get("output_dir") {
        None => None,
        Some(val) => match val.as_str() {
            Some(s) => Some(PathBuf::from(s)),
            None => {
                v.err("output_dir must be a string");
                None
            }
        },
    };

    let integrator_explicit = table.contains_key("integrator");
    let integrator = parse_integrator(&mut v, table.get("integrator"));
    let ensemble = parse_ensemble(&mut v, table.get("ensemble"));

    let mut params = BTreeMap::new();
    if let Some(id) = scenario {
        let specs = scenario_params(id);
        let ptable = match table.get("params") {
            None => toml::Table::new(),
            Some(val) => match val.as_table() {
                Some(t) => t.clone(),
                None => {
                    v.err("[params] must be a table");
                    toml::Table::new()
                }
            },
        };
        let allowed: Vec<&str> = specs.iter().map(|s| s.key).collect();
        v.check_unknown_keys(&ptable, &allowed, "[params]");
        for spec in &specs {
            match (ptable.get(spec.key), &spec.kind) {
                (None, _) if spec.required => {
                    v.err(format!(
                        "params.{} is required ({})",
                        spec.key, spec.describe
                    ));
                }
                (None, _) => {
                    params.insert(spec.key.to_string(), spec.default.clone());
                }
                (Some(val), Kind::Num) => match v.f64_of(val, &format!("params.{}", spec.key)) {
                    Some(x) if (spec.check)(x) => {
                        params.insert(spec.key.to_string(), ParamValue::Number(x));
                    }
                    Some(x) => v.err(format!(
                        "params.{} = {x} out of range (expected {})",
                        spec.key, spec.describe
                    )),
                    None => {}
                },
                (Some(val), Kind::Text(choices)) => match val.as_str() {
                    Some(s) if choices.contains(&s) => {
                        params.insert(spec.key.to_string(), ParamValue::Text(s.to_string()));
                    }
                    _ => v.err(format!(
                        "params.{} must be one of: {}",
                        spec.key,
                        choices.join(", ")
                    )),
                },
            }
        }
    }

    let sweep = table
        .get("sweep")
        .and_then(|val| parse_sweep_axis(&mut v, val, "sweep"));
    let sweep2 = table
        .get("sweep2")
        .and_then(|val| parse_sweep_axis(&mut v, val, "sweep2"));

    if let Some(id) = scenario {
        if id.is_sweep() {
            match (&sweep, id) {
                (None, _) if table.contains_key("sweep") => {} // already reported
                (None, _) => v.err(format!("scenario {} requires a [sweep] block", id.name())),
                (Some(ax), ScenarioId::EpsilonSweep) if ax.param != "epsilon" => {
                    v.err("epsilon_sweep: sweep.param must be \"epsilon\"".to_string())
                }
                (Some(ax), ScenarioId::AlphaSweep) if ax.param != "alpha" => {
                    v.err("alpha_sweep: sweep.param must be \"alpha\"".to_string())
                }
                (Some(ax), ScenarioId::USweep) if ax.param != "u" => {
                    v.err("u_sweep: sweep.param must be \"u\"".to_string())
                }
                _ => {}
            }
            if let Some(ax2) = &sweep2 {
                if id != ScenarioId::AlphaSweep {
                    v.err(format!(
                        "[sweep2] is only supported by alpha_sweep, not {}",
                        id.name()
                    ));
                } else if ax2.param != "u" {
                    v.err("alpha_sweep: sweep2.param must be \"u\"".to_string());
                }
            }
            let cells = sweep.as_ref().map_or(0, |a| a.values.len())
                * sweep2.as_ref().map_or(1, |a| a.values.len());
            if cells > 10_000 {
                v.err(format!("sweep grid has {cells} cells; the limit is 10000"));
            }
            if let (Some(ax), ScenarioId::AlphaSweep) = (&sweep, scenario.unwrap()) {
                if ax.values.iter().any(|a| !open_half_pi(*a)) {
                    v.err("alpha_sweep: all alpha values must lie in (0, pi/2)");
                }
            }
            if let (Some(ax), ScenarioId::EpsilonSweep) = (&sweep, scenario.unwrap()) {
                if ax.values.iter().any(|e| *e <= 0.0) {
                    v.err("epsilon_sweep: all epsilon values must be > 0");
                }
                // The Kuramoto family reads ε as 1/u and needs u > 3A.
                let kuramoto = params
                    .get("system")
                    .map(|p| p.as_str() == "kuramoto_star")
                    .unwrap_or(false);
                if kuramoto {
                    let coupling = params.get("coupling").map(|p| p.as_f64()).unwrap_or(1.0);
                    let eps_max = 1.0 / (3.0 * coupling);
                    if ax.values.iter().any(|e| *e >= eps_max) {
                        v.err(format!(
                            "epsilon_sweep on kuramoto_star: epsilon must stay below 1/(3*coupling) = {eps_max}"
                        ));
                    }
                }
            }
        } else if sweep.is_some() || sweep2.is_some() {
            v.err(format!(
                "scenario {} does not take a [sweep] block",
                id.name()
            ));
        }
    }

    if !v.errors.is_empty() {
        return Err(ValidationErrors(v.errors));
    }
    let scenario = scenario.unwrap();
    Ok(RunConfig {
        scenario,
        seed,
        output_dir: output_dir
            .unwrap_or_else(|| PathBuf::from(format!("runs/{}", scenario.name()))),
        params,
        integrator,
        integrator_explicit,
        ensemble,
        sweep,
        sweep2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_example1_config_parses_with_defaults() {
        let cfg = parse_config("scenario = \"example1\"\n", "test").unwrap();
        assert_eq!(cfg.scenario, ScenarioId::Example1);
        assert_eq!(cfg.num("epsilon"), 0.01);
        assert_eq!(cfg.ensemble.count, 64);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn all_errors_are_collected_not_just_first() {
        let text = r#"
scenario = "kuramoto_detuned"
seed = -3
typo_key = 1
[params]
alpha = 9.0
unknown_param = 2
"#;
        let err = parse_config(text, "test").unwrap_err();
        let joined = err.0.join("\n");
        assert!(err.0.len() >= 4, "{joined}");
        assert!(joined.contains("typo_key"));
        assert!(joined.contains("unknown_param"));
        assert!(joined.contains("alpha"));
        assert!(joined.contains("params.u is required"));
        assert!(joined.contains("seed"));
    }

    #[test]
    fn sweep_range_is_inclusive() {
        let text = r#"
scenario = "alpha_sweep"
[sweep]
param = "alpha"
start = 0.1
stop = 0.5
step = 0.1
"#;
        let cfg = parse_config(text, "test").unwrap();
        let ax = cfg.sweep.unwrap();
        assert_eq!(ax.values.len(), 5);
        assert!((ax.values[4] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_on_non_sweep_scenario_is_rejected() {
        let text = r#"
scenario = "example1"
[sweep]
param = "epsilon"
values = [0.01]
"#;
        assert!(parse_config(text, "test").is_err());
    }

    #[test]
    fn oversize_grid_is_rejected() {
        let text = r#"
scenario = "alpha_sweep"
[sweep]
param = "alpha"
start = 0.001
stop = 1.5
step = 0.0001
[sweep2]
param = "u"
values = [0.0, 1.0]
"#;
        let err = parse_config(text, "test").unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("limit is 10000")), "{err}");
    }

    #[test]
    fn kuramoto_epsilon_family_enforces_detuning_bound() {
        let text = r#"
scenario = "epsilon_sweep"
[params]
system = "kuramoto_star"
coupling = 1.0
[sweep]
param = "epsilon"
values = [0.1, 0.4]
"#;
        let err = parse_config(text, "test").unwrap_err();
        assert!(
            err.0.iter().any(|e| e.contains("1/(3*coupling)")),
            "{err}"
        );
    }
}
