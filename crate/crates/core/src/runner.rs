//! Run configuration, the end-to-end pipeline and its file outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::discounted::{
    check_bounds, default_lambdas, domain_doubling_check, lambda_sweep, solve_godunov, ConvergenceTable,
    DiscountedSolution, SolverConfig, SolverContext,
};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::hamiltonian::{HamiltonianSpec, PeriodicFunction, PotentialSpec};
use crate::mather::{appendix_counterexample, closed_measure_lp, equilibrium_mather_g, AppendixReport, LpDomain, LpResolution};
use crate::occupation::{
    extract_optimal_curve, pairing_test, split_at_radius, tightness_check, MeasureSplit,
};
use crate::scenario::{scenario, ScenarioKind};
use crate::sublevel::{classify, CaseReport, CaseTag};
use crate::weakkam::{strict_subsolution_vg, u0_g_envelope, u0_h, CriticalProfile};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUT_ENV: &str = "WEAKKAM1D_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Classification,
    Envelope,
    Sweep,
    Sandwich,
    Bounds,
    Curves,
    Tightness,
    Pairing,
    Lp,
    Doubling,
    Godunov,
    Appendix,
}

impl CheckName {
    pub const ALL: [CheckName; 12] = [
        CheckName::Classification,
        CheckName::Envelope,
        CheckName::Sweep,
        CheckName::Sandwich,
        CheckName::Bounds,
        CheckName::Curves,
        CheckName::Tightness,
        CheckName::Pairing,
        CheckName::Lp,
        CheckName::Doubling,
        CheckName::Godunov,
        CheckName::Appendix,
    ];
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UConfig {
    Cos,
    ShiftedCos { shift: f64 },
    Fourier {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
    /// `"positive"` or `"negative"`; overrides the sign of `amplitude`.
    #[serde(default)]
    pub sign: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InlineScenario {
    #[serde(default)]
    pub name: Option<String>,
    pub theta: f64,
    #[serde(default)]
    pub u: Option<UConfig>,
    #[serde(default)]
    pub bump: Option<BumpConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Name(String),
    Inline(InlineScenario),
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

/// Run configuration as read from JSON plus `--key value` overrides. Unset fields take the
/// scenario defaults.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(default = "default_scenario")]
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// Truncates the default list `0.8, 0.4, ...` at this value.
    #[serde(default)]
    pub lambda_min: Option<f64>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub outputs: Option<String>,
    #[serde(default)]
    pub checks: Option<Vec<CheckName>>,
    #[serde(default)]
    pub eps1: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Number of random starting points for the curve check.
    #[serde(default)]
    pub curves: Option<usize>,
    #[serde(default)]
    pub curve_lambda: Option<f64>,
    #[serde(default)]
    pub sweep_tolerance: Option<f64>,
}

fn default_scenario() -> ScenarioRef {
    ScenarioRef::Name("E3".into())
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("empty config")
    }
}

impl RunConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads an optional JSON file and applies `--key value` overrides with dotted keys.
    pub fn from_args(args: &[String]) -> Result<Self> {
        let mut root = Value::Object(Default::default());
        let mut overrides = Vec::new();
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .ok_or_else(|| Error::Config(format!("expected a --flag, found '{flag}'")))?;
            let value = it.next().ok_or_else(|| Error::Config(format!("flag --{key} needs a value")))?;
            if key == "config" {
                let text = fs::read_to_string(value).map_err(|e| Error::Config(format!("{value}: {e}")))?;
                root = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{value}: {e}")))?;
                if !root.is_object() {
                    return Err(Error::Config(format!("{value}: top level must be an object")));
                }
            } else {
                overrides.push((key.to_string(), value.clone()));
            }
        }
        for (key, value) in overrides {
            set_path(&mut root, &key, parse_flag_value(&value))?;
        }
        // a single value is a one-element list
        for key in ["checks", "lambdas"] {
            if let Some(v) = root.get_mut(key) {
                if !v.is_array() && !v.is_null() {
                    *v = Value::Array(vec![v.take()]);
                }
            }
        }
        Self::from_value(root)
    }
}

fn parse_flag_value(s: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(s) {
        return v;
    }
    if s.contains(',') {
        return Value::Array(s.split(',').map(|p| parse_flag_value(p.trim())).collect());
    }
    Value::String(s.to_string())
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<String> = key.split('.').map(|p| p.replace('-', "_")).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed key '--{key}'")));
    }
    let mut node = root;
    for p in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("'--{key}': '{p}' is not inside an object")))?;
        node = obj.entry(p.clone()).or_insert_with(|| Value::Object(Default::default()));
        if node.is_string() {
            // `--scenario E3 --scenario.theta 1` replaces the name by an inline definition
            *node = Value::Object(Default::default());
        }
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("'--{key}' does not address an object field")))?;
    obj.insert(parts.last().unwrap().clone(), value);
    Ok(())
}

/// A configuration with every default filled in and validated.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub name: String,
    pub kind: ScenarioKind,
    pub spec: HamiltonianSpec,
    pub expected_case: Option<CaseTag>,
    pub grid: Grid1D,
    pub lambdas: Vec<f64>,
    pub window: (f64, f64),
    pub out_dir: PathBuf,
    pub checks: Vec<CheckName>,
    pub eps1: f64,
    pub seed: u64,
    pub curves: usize,
    pub curve_lambda: f64,
    pub sweep_tolerance: f64,
}

fn inline_spec(s: &InlineScenario) -> Result<HamiltonianSpec> {
    let u = match &s.u {
        None | Some(UConfig::Cos) => PeriodicFunction::cosine(),
        Some(UConfig::ShiftedCos { shift }) => PeriodicFunction::shifted_cosine(*shift),
        Some(UConfig::Fourier { constant, cos, sin }) => {
            PeriodicFunction { constant: *constant, cos: cos.clone(), sin: sin.clone() }
        }
    };
    let v = match &s.bump {
        None => PotentialSpec::zero(),
        Some(b) => {
            if !(b.half_width > 0.0) {
                return Err(Error::Config(format!("bump half_width must be positive, got {}", b.half_width)));
            }
            let amplitude = match b.sign.as_deref() {
                None => b.amplitude,
                Some("positive") | Some("+") => b.amplitude.abs(),
                Some("negative") | Some("-") => -b.amplitude.abs(),
                Some(other) => return Err(Error::Config(format!("bump sign must be positive or negative, got '{other}'"))),
            };
            PotentialSpec::bump(b.center, b.half_width, amplitude)
        }
    };
    let spec = HamiltonianSpec::eikonal(s.theta, u, v);
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

impl RunConfig {
    pub fn resolve(&self) -> Result<ResolvedRun> {
        if let Some(v) = self.schema_version {
            if v != SCHEMA_VERSION {
                return Err(Error::Config(format!("unsupported schema_version {v}")));
            }
        }
        let (name, kind, spec, expected_case, eps1) = match &self.scenario {
            ScenarioRef::Name(n) => {
                let sc = scenario(n)?;
                let eps1 = self.eps1.or(sc.eps1).unwrap_or(1e-3);
                let spec = if sc.kind == ScenarioKind::Appendix { HamiltonianSpec::appendix(eps1) } else { sc.spec() };
                (sc.name.to_string(), sc.kind, spec, sc.expected_case, eps1)
            }
            ScenarioRef::Inline(s) => (
                s.name.clone().unwrap_or_else(|| "inline".into()),
                ScenarioKind::Eikonal,
                inline_spec(s)?,
                None,
                self.eps1.unwrap_or(1e-3),
            ),
        };
        if kind == ScenarioKind::Appendix && !(eps1 > 0.0 && eps1 <= 0.01) {
            return Err(Error::Config(format!("eps1 must lie in (0, 0.01], got {eps1}")));
        }
        let grid = match self.grid {
            Some(g) => Grid1D::new(g.x_lo, g.x_hi, g.n).map_err(|e| Error::Config(e.to_string()))?,
            None => Grid1D::with_spacing(-8.0, 9.0, 1.0 / 512.0)?,
        };
        if grid.x_hi <= grid.x_lo {
            return Err(Error::Config("grid needs x_lo < x_hi".into()));
        }
        let cells = 1.0 / grid.dx();
        if (cells - cells.round()).abs() > 1e-6 {
            return Err(Error::Config(format!("grid spacing {} must divide the period 1", grid.dx())));
        }
        let (slo, shi) = spec.potential.support().unwrap_or((0.0, 1.0));
        if kind == ScenarioKind::Eikonal && (grid.x_lo > slo - 4.0 || grid.x_hi < shi + 4.0) {
            return Err(Error::Config(format!(
                "grid [{}, {}] must contain [{slo}, {shi}] with 4 periods of margin",
                grid.x_lo, grid.x_hi
            )));
        }
        let lambdas = match (&self.lambdas, self.lambda_min) {
            (Some(l), _) => l.clone(),
            (None, Some(m)) => default_lambdas().into_iter().filter(|&l| l >= m * (1.0 - 1e-9)).collect(),
            (None, None) => default_lambdas(),
        };
        if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0)) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(format!("lambdas must be positive and strictly decreasing, got {lambdas:?}")));
        }
        let window = self.window.map(|w| (w[0], w[1])).unwrap_or((-2.0, 3.0));
        if !(window.0 < window.1) || window.0 <= grid.x_lo || window.1 >= grid.x_hi {
            return Err(Error::Config(format!("window {window:?} must be a nonempty interval inside the grid")));
        }
        let out_dir = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .or_else(|| self.outputs.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("weakkam1d_out"));
        let checks = match &self.checks {
            Some(c) => {
                let mut c = c.clone();
                c.sort();
                c.dedup();
                c
            }
            None => default_checks(kind),
        };
        let curve_lambda = self.curve_lambda.unwrap_or(0.2);
        if !(curve_lambda > 0.0) {
            return Err(Error::Config("curve_lambda must be positive".into()));
        }
        Ok(ResolvedRun {
            name,
            kind,
            spec,
            expected_case,
            grid,
            lambdas,
            window,
            out_dir,
            checks,
            eps1,
            seed: self.seed,
            curves: self.curves.unwrap_or(50),
            curve_lambda,
            sweep_tolerance: self.sweep_tolerance.unwrap_or(0.02),
        })
    }
}

fn default_checks(kind: ScenarioKind) -> Vec<CheckName> {
    match kind {
        ScenarioKind::Appendix => vec![CheckName::Classification, CheckName::Lp, CheckName::Appendix],
        ScenarioKind::Eikonal => CheckName::ALL.iter().copied().filter(|c| *c != CheckName::Appendix).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckVerdict {
    pub name: String,
    pub pass: bool,
    /// Informational verdicts are reported but do not set the exit code.
    pub required: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckVerdict {
    fn new(name: impl Into<String>, pass: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, required: true, value, threshold, detail: detail.into() }
    }

    /// `value <= threshold`.
    fn at_most(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value <= threshold, value, threshold, detail)
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}{}: value {:e}, threshold {:e}; {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            if self.required { "" } else { " (informational)" },
            self.value,
            self.threshold,
            self.detail
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub case_report: Option<CaseReport>,
    pub convergence: Option<ConvergenceTable>,
    pub checks: Vec<CheckVerdict>,
    pub appendix: Option<AppendixReport>,
    pub lp: BTreeMap<String, Value>,
    pub error: Option<String>,
    #[serde(skip)]
    pub artifacts: Artifacts,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass || !c.required)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Data behind the CSV and `.dat` outputs.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub profiles: Vec<CriticalProfile>,
    pub solutions: Vec<DiscountedSolution>,
    pub splits: Vec<(f64, f64, MeasureSplit)>,
}

/// Runs the configured pipeline. Configuration problems are returned as errors; failures
/// inside the pipeline are recorded in the report.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let r = cfg.resolve()?;
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: r.name.clone(),
        case_report: None,
        convergence: None,
        checks: Vec::new(),
        appendix: None,
        lp: BTreeMap::new(),
        error: None,
        artifacts: Artifacts::default(),
    };
    let outcome = match r.kind {
        ScenarioKind::Appendix => run_appendix(&r, &mut report),
        ScenarioKind::Eikonal => run_eikonal(&r, &mut report),
    };
    if let Err(e) = outcome {
        report.error = Some(e.to_string());
    }
    Ok(report)
}

fn wants(r: &ResolvedRun, c: CheckName) -> bool {
    r.checks.contains(&c)
}

fn lp_tolerance(res: &LpResolution, qmax: f64, period: f64) -> f64 {
    let dq = 2.0 * qmax / (res.q_nodes - 1) as f64;
    let dx = period / res.x_cells as f64;
    1e-3 + dq + dx
}

fn run_appendix(r: &ResolvedRun, report: &mut RunReport) -> Result<()> {
    let rep = appendix_counterexample(r.eps1, 201)?;
    if wants(r, CheckName::Classification) {
        let case = classify(&r.spec)?;
        report.checks.push(CheckVerdict::at_most(
            "classification",
            case.c_f_H.abs().max(case.c_H.abs()),
            1e-6,
            format!("c_f(H) = {}, c(H) = {}, case {}", case.c_f_H, case.c_H, case.case_tag),
        ));
        report.case_report = Some(case);
    }
    if wants(r, CheckName::Lp) {
        let res = LpResolution::default();
        let lp = closed_measure_lp(&r.spec, LpDomain::Torus, &res)?;
        let tol = lp_tolerance(&res, r.spec.q_velocity_bound, 1.0);
        report.checks.push(CheckVerdict::at_most("lp_torus", lp.optimal_value.abs(), tol, "min int L dmu = -c(H) = 0"));
        report.lp.insert("torus_H".into(), lp.to_json());
    }
    if wants(r, CheckName::Appendix) {
        report.checks.push(CheckVerdict::at_most("appendix_c_f", rep.c_f.abs(), 1e-6, "c_f = 0"));
        report.checks.push(CheckVerdict::at_most("appendix_i_plus", rep.I_plus.abs(), 1e-6, "int p1 = 0"));
        report.checks.push(CheckVerdict::new(
            "appendix_min_integral",
            rep.min_integral > 0.0,
            rep.min_integral,
            0.0,
            "min over y of int u_y dmu > 0",
        ));
        let mut bound = CheckVerdict::new(
            "appendix_lower_bound",
            rep.lower_bound > 0.0,
            rep.lower_bound,
            0.0,
            format!("-4/rho + delta/(4 eps1) with rho = {:e}, delta = {:e}; positive for eps1 < {:e}", rep.rho, rep.delta, rep.eps1_threshold),
        );
        bound.required = false;
        report.checks.push(bound);
    }
    report.appendix = Some(rep);
    Ok(())
}

/// `v <= u <= w` on every node, `v` and `w` bounded critical sub/supersolutions.
fn sandwich_bounds(report: &CaseReport, u0g: &CriticalProfile, vg: Option<&CriticalProfile>) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = u0g.min_max();
    let w: Vec<f64> = u0g.values.iter().map(|u| u - lo).collect();
    let v: Vec<f64> = match (report.case_tag, vg) {
        (CaseTag::I, Some(vg)) => vg.values.clone(),
        _ => u0g.values.iter().map(|u| u - hi).collect(),
    };
    (v, w)
}

fn solution_for<'a>(sols: &'a [DiscountedSolution], lambda: f64) -> Option<&'a DiscountedSolution> {
    sols.iter().find(|s| (s.lambda - lambda).abs() <= 1e-12 * lambda)
}

fn run_eikonal(r: &ResolvedRun, report: &mut RunReport) -> Result<()> {
    let spec = &r.spec;
    let grid = &r.grid;
    let dx = grid.dx();
    let case = classify(spec)?;
    report.case_report = Some(case.clone());
    if wants(r, CheckName::Classification) {
        let detail = format!("c_f(H) = {}, c(H) = {}, c_f(G) = {}, c(G) = {}", case.c_f_H, case.c_H, case.c_f_G, case.c_G);
        let pass = r.expected_case.map_or(true, |t| t == case.case_tag);
        let expected = r.expected_case.map_or("any".to_string(), |t| t.to_string());
        report.checks.push(CheckVerdict::new(
            "classification",
            pass,
            0.0,
            0.0,
            format!("case {} (expected {expected}); {detail}", case.case_tag),
        ));
    }
    let u0h = u0_h(spec, &case, grid)?;
    let u0h_profile = u0h.trusted()?.clone();
    let env = u0_g_envelope(spec, &case, &u0h_profile, grid)?;
    let u0g = env.profile.clone();
    let vg = if case.case_tag == CaseTag::I { Some(strict_subsolution_vg(spec, &case, grid)?) } else { None };
    report.artifacts.profiles.push(u0h_profile.clone());
    report.artifacts.profiles.push(u0g.clone());
    if let Some(v) = &vg {
        report.artifacts.profiles.push(v.profile.clone());
    }
    if wants(r, CheckName::Envelope) {
        let defect = u0g.subsolution_defect(spec, crate::hamiltonian::Which::G, r.window.0, r.window.1);
        let tol = u0g.subsolution_tolerance(spec, crate::hamiltonian::Which::G);
        report.checks.push(CheckVerdict::at_most("envelope_subsolution", defect, tol, "max G(x, Du0_G) - c(G) on the window"));
    }

    let config = SolverConfig::default();
    let ctx = SolverContext::new(spec, grid, config);
    let needs_sweep = [CheckName::Sweep, CheckName::Sandwich, CheckName::Bounds].iter().any(|c| wants(r, *c));
    let table = if needs_sweep { Some(lambda_sweep(&ctx, &case, &r.lambdas, r.window, &u0g, true)?) } else { None };
    if let Some(table) = &table {
        if wants(r, CheckName::Sweep) {
            let last = table.rows.last().unwrap();
            report.checks.push(CheckVerdict::at_most(
                "sweep_error",
                last.sup_error,
                r.sweep_tolerance,
                format!("sup over window of |u^lambda - u0_G| at lambda = {}", last.lambda),
            ));
            let worst_rise = table.rows.windows(2).map(|w| w[1].sup_error - w[0].sup_error).fold(f64::NEG_INFINITY, f64::max);
            report.checks.push(CheckVerdict::new(
                "sweep_decay",
                table.monotone_decay,
                worst_rise.max(0.0),
                dx,
                format!("largest increase between consecutive lambdas; empirical order {:?}", table.empirical_order),
            ));
        }
        if wants(r, CheckName::Sandwich) {
            let (v, w) = sandwich_bounds(&case, &u0g, vg.as_ref().map(|s| &s.profile));
            let mut worst = f64::INFINITY;
            for sol in &table.solutions {
                for i in 0..grid.n {
                    worst = worst.min(sol.values[i] - v[i]).min(w[i] - sol.values[i]);
                }
            }
            report.checks.push(CheckVerdict::new(
                "sandwich",
                worst >= -5.0 * dx,
                worst,
                -5.0 * dx,
                "min over lambdas and nodes of min(u - v, w - u)",
            ));
        }
        if wants(r, CheckName::Bounds) {
            let mut ok = true;
            let mut ratio: f64 = 0.0;
            for sol in &table.solutions {
                let b = check_bounds(spec, sol);
                ok &= b.holds(dx);
                ratio = ratio.max(b.sup_norm / b.sup_bound).max(b.lipschitz / b.lipschitz_bound);
            }
            report.checks.push(CheckVerdict::new("a_priori_bounds", ok, ratio, 1.0, "max of |u|/bound and Lip(u)/bound"));
        }
        report.artifacts.solutions = table.solutions.clone();
    }
    let cached = |lambda: f64| -> Result<DiscountedSolution> {
        match table.as_ref().and_then(|t| solution_for(&t.solutions, lambda)) {
            Some(s) => Ok(s.clone()),
            None => ctx.solve(lambda, case.c_G),
        }
    };

    if wants(r, CheckName::Curves) {
        let sol = cached(r.curve_lambda)?;
        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
        let (mut backtrack, mut speed, mut repr): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for _ in 0..r.curves {
            let x0 = rng.gen_range(r.window.0..r.window.1);
            let traj = extract_optimal_curve(&sol, x0)?;
            backtrack = backtrack.max(traj.max_backtrack());
            speed = speed.max(traj.max_speed());
            repr = repr.max((traj.discounted_cost() - sol.value_at(x0)).abs());
        }
        report.checks.push(CheckVerdict::at_most("curve_monotonicity", backtrack, dx / 4.0, "largest backtrack"));
        report.checks.push(CheckVerdict::at_most("curve_speed", speed, spec.q_velocity_bound, "max |q|"));
        report.checks.push(CheckVerdict::at_most(
            "curve_representation",
            repr,
            20.0 * (dx + sol.h),
            "max |sum h e^(-lambda k h)(L + c) - u^lambda(x0)|",
        ));
    }
    if wants(r, CheckName::Tightness) && case.case_tag == CaseTag::I {
        let vg = vg.as_ref().unwrap();
        let mut ok = true;
        let mut worst = f64::NEG_INFINITY;
        for lambda in [0.4, 0.2, 0.1] {
            let sol = cached(lambda)?;
            for x0 in [0.5, 2.0] {
                let t = tightness_check(&sol, x0, &vg.profile, vg.k_set, vg.delta)?;
                ok &= t.pass;
                worst = worst.max(t.lhs - t.rhs);
            }
        }
        report.checks.push(CheckVerdict::new("tightness", ok, worst, 0.0, "max of mass outside K minus (lambda/delta)(u - v_G)"));
    }
    if wants(r, CheckName::Pairing) {
        let sol = cached(0.05)?;
        let v = match &vg {
            Some(s) => s.profile.clone(),
            None => u0g.clone(),
        };
        let mut worst = f64::INFINITY;
        let mut ok = true;
        for x0 in [-0.7, 0.25, 1.3] {
            let traj = extract_optimal_curve(&sol, x0)?;
            let split = split_at_radius(&traj, 2.0, spec.potential.support())?;
            let p = pairing_test(&sol, x0, &v, &split, None);
            ok &= p.pass;
            worst = worst.min(p.gap);
            report.artifacts.splits.push((x0, sol.lambda, split));
        }
        report.checks.push(CheckVerdict::new("pairing", ok, worst, -(20.0 * dx), "min gap of u >= v - int v dmu"));
    }
    if wants(r, CheckName::Lp) {
        let res = LpResolution::default();
        let tol = lp_tolerance(&res, spec.q_velocity_bound, 1.0);
        let torus = closed_measure_lp(spec, LpDomain::Torus, &res)?;
        report.checks.push(CheckVerdict::at_most(
            "lp_torus",
            (torus.optimal_value + case.c_H).abs(),
            tol,
            format!("min int L_H dmu = {} vs -c(H) = {}", torus.optimal_value, -case.c_H),
        ));
        report.lp.insert("torus_H".into(), torus.to_json());
        if spec.potential.support().is_some() {
            let domain = LpDomain::default_window(spec);
            let win = closed_measure_lp(spec, domain, &res)?;
            let LpDomain::Window { lo, hi } = domain else { unreachable!() };
            let wtol = lp_tolerance(&res, spec.q_velocity_bound, hi - lo);
            report.checks.push(CheckVerdict::at_most(
                "lp_window",
                (win.optimal_value + case.c_f_G).abs(),
                wtol,
                format!("min int L_G dmu = {} vs -c_f(G) = {}", win.optimal_value, -case.c_f_G),
            ));
            report.lp.insert("window_G".into(), win.to_json());
            let eq = equilibrium_mather_g(spec, &case, lo, hi)?;
            report.checks.push(CheckVerdict::new(
                "lp_equilibria",
                !eq.is_empty(),
                eq.len() as f64,
                1.0,
                "equilibrium deltas attaining -c_f(G)",
            ));
        }
    }
    if wants(r, CheckName::Doubling) {
        let d = domain_doubling_check(spec, 0.05, case.c_G, grid, r.window, &config)?;
        report.checks.push(CheckVerdict::at_most("domain_doubling", d, 1e-4, "lambda = 0.05, grid vs doubled grid on the window"));
    }
    if wants(r, CheckName::Godunov) {
        let sl = cached(0.1)?;
        let gd = solve_godunov(spec, 0.1, case.c_G, grid, &config)?;
        let diff = grid
            .index_range(r.window.0, r.window.1)
            .map(|i| (sl.values[i] - gd.values[i]).abs())
            .fold(0.0, f64::max);
        report.checks.push(CheckVerdict::at_most("godunov_agreement", diff, 10.0 * dx, "lambda = 0.1, sup over window"));
    }
    report.convergence = table;
    Ok(())
}

fn csv_header<W: Write>(w: &mut W) -> std::io::Result<()> {
    writeln!(w, "# schema_version: {SCHEMA_VERSION}")
}

/// Writes `report.json`, `profiles.csv`, `measures.csv`, `convergence.csv`, `sweep.dat` and,
/// for the appendix, `appendix.csv`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let file = |name: &str| -> Result<(PathBuf, std::io::BufWriter<fs::File>)> {
        let p = dir.join(name);
        let f = fs::File::create(&p)?;
        Ok((p, std::io::BufWriter::new(f)))
    };

    let (p, mut w) = file("report.json")?;
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()?;
    written.push(p);

    let (p, mut w) = file("profiles.csv")?;
    csv_header(&mut w)?;
    writeln!(w, "x,value,kind,level")?;
    for prof in &report.artifacts.profiles {
        prof.write_csv_rows(&mut w)?;
    }
    w.flush()?;
    written.push(p);

    let (p, mut w) = file("measures.csv")?;
    csv_header(&mut w)?;
    writeln!(w, "x0,lambda,y,q,w,part")?;
    for (x0, lambda, split) in &report.artifacts.splits {
        let dx = report.artifacts.profiles.first().map_or(1.0 / 512.0, |p| p.grid.dx());
        let parts: Vec<(u8, &crate::occupation::OccupationMeasure)> = if split.t_exit.is_some() {
            vec![(1, &split.mu1), (2, &split.mu2)]
        } else {
            vec![(1, &split.mu1)]
        };
        for (part, mu) in parts {
            // atoms pushed to the nearest node at spacing dx, same velocity
            let mut cells: BTreeMap<(i64, u64), (f64, f64, f64)> = BTreeMap::new();
            for a in &mu.atoms {
                let key = ((a.y / dx).round() as i64, a.q.to_bits());
                let e = cells.entry(key).or_insert((key.0 as f64 * dx, a.q, 0.0));
                e.2 += a.w;
            }
            for (y, q, wt) in cells.values() {
                writeln!(w, "{x0},{lambda},{y},{q},{wt},{part}")?;
            }
        }
    }
    w.flush()?;
    written.push(p);

    if let Some(table) = &report.convergence {
        let (p, mut w) = file("convergence.csv")?;
        csv_header(&mut w)?;
        table.write_csv(&mut w)?;
        w.flush()?;
        written.push(p);
    }

    let sols = &report.artifacts.solutions;
    if !sols.is_empty() {
        let (p, mut w) = file("sweep.dat")?;
        csv_header(&mut w)?;
        write!(w, "# x u0_G")?;
        for s in sols {
            write!(w, " u_lambda={}", s.lambda)?;
        }
        writeln!(w)?;
        let u0g = report.artifacts.profiles.get(1);
        let grid = sols[0].grid;
        for i in 0..grid.n {
            write!(w, "{} {}", grid.x(i), u0g.map_or(f64::NAN, |p| p.values[i]))?;
            for s in sols {
                write!(w, " {}", s.values[i])?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        written.push(p);
    }

    if let Some(app) = &report.appendix {
        let (p, mut w) = file("appendix.csv")?;
        csv_header(&mut w)?;
        writeln!(w, "y,integral")?;
        for (y, v) in &app.integrals {
            writeln!(w, "{y},{v}")?;
        }
        w.flush()?;
        written.push(p);
    }
    Ok(written)
}
