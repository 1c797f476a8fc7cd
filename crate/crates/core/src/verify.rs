//! Oracle suite over one scenario: dual-path agreement, bounds, chain rules,
//! high/low SNR limits and a Monte Carlo cross-check.

use serde::Serialize;

use crate::error::{Result, VoiError};
use crate::mc::{estimate_voi, SeedSpec};
use crate::ou_model::OuParams;
use crate::scenario::Scenario;
use crate::trace::{run_trace, TraceRow, DUAL_PATH_ABS_FLOOR, DUAL_PATH_REL_TOL};
use crate::voi::{bound_hmm_terms, voi_closed, voi_direct, voi_markov, voi_single, BOUND_SLACK, MI_SLACK};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const MC_SIGMAS: f64 = 3.0;
const LIMIT_TOL: f64 = 1e-6;
const GAMMA_HIGH: f64 = 1e8;
const GAMMA_LOW: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// Largest deviation allowed.
    pub tolerance: Option<f64>,
    /// Largest deviation observed.
    pub deviation: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn measured(name: &str, tolerance: f64, deviation: f64, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            status: if deviation <= tolerance {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            tolerance: Some(tolerance),
            deviation: Some(deviation),
            detail,
        }
    }

    fn skipped(name: &str, detail: &str) -> Self {
        CheckResult {
            name: name.to_string(),
            status: CheckStatus::Skipped,
            tolerance: None,
            deviation: None,
            detail: detail.to_string(),
        }
    }

    fn failed(name: &str, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            status: CheckStatus::Fail,
            tolerance: None,
            deviation: None,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scenario: Option<String>,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: Option<u64>,
    /// Parameters fed to the closed form only. Lets tests corrupt one path.
    pub closed_form_params: Option<OuParams>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: DEFAULT_SAMPLES,
            seed: None,
            closed_form_params: None,
        }
    }
}

const CHECKS: [&str; 7] = [
    "dual_path",
    "general_bound",
    "correction_nonneg",
    "chain_rule",
    "single_bound",
    "gamma_limits",
    "monte_carlo",
];

/// Runs every check. Check failures end up in the report; only kernel errors
/// outside the checks are returned as `Err`.
pub fn verify(scenario: &Scenario, options: &VerifyOptions) -> Result<VerifyReport> {
    let seed = options
        .seed
        .or(scenario.seed.map(|s| s.master_seed))
        .unwrap_or(0);
    let mut report = VerifyReport {
        scenario: scenario.name.clone(),
        samples: options.samples,
        seed,
        passed: true,
        checks: Vec::new(),
    };
    let points = scenario.grid.points();
    let active: Vec<f64> = points
        .iter()
        .copied()
        .filter(|&t| !scenario.observations_at(t).is_empty())
        .collect();
    if active.is_empty() {
        report.checks = CHECKS
            .iter()
            .map(|c| CheckResult::skipped(c, "no observation received on the grid"))
            .collect();
        return Ok(report);
    }

    report.checks.push(dual_path(scenario, &active, options)?);
    match run_trace(scenario) {
        Ok(trace) => {
            let rows: Vec<&TraceRow> = trace.rows.iter().filter(|r| r.n_used > 0).collect();
            report.checks.push(general_bound(&rows));
            report.checks.push(correction_nonneg(&rows));
            report.checks.push(chain_rule(scenario, &rows)?);
            report.checks.push(single_bound(&rows));
        }
        Err(e) if e.is_numerical() => {
            for name in &CHECKS[1..5] {
                report.checks.push(CheckResult::failed(name, format!("trace failed: {e}")));
            }
        }
        Err(e) => return Err(e),
    }
    let t_last = *active.last().expect("non-empty");
    report.checks.push(gamma_limits(scenario, t_last)?);
    report.checks.push(monte_carlo(scenario, t_last, options.samples, SeedSpec::new(seed)));
    report.passed = report.checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(report)
}

fn dual_path(scenario: &Scenario, active: &[f64], options: &VerifyOptions) -> Result<CheckResult> {
    let params = &scenario.params;
    let closed_params = options.closed_form_params.as_ref().unwrap_or(params);
    let mut worst = 0.0f64;
    let mut worst_t = f64::NAN;
    let mut compared = 0;
    for &t in active {
        let range = scenario.observations_at(t);
        let schedule = scenario.schedule.slice(range.clone());
        let noise = scenario.noise.slice(range);
        if noise.variances(params, &schedule)?.contains(&0.0) {
            continue;
        }
        let direct = voi_direct(params, &schedule, &noise, t)?;
        let closed = voi_closed(closed_params, &schedule, &noise, t)?;
        // Deviation in units of the allowed error.
        let dev = (closed - direct).abs() / (DUAL_PATH_REL_TOL * direct.abs() + DUAL_PATH_ABS_FLOOR);
        compared += 1;
        if dev >= worst {
            worst = dev;
            worst_t = t;
        }
    }
    if compared == 0 {
        return Ok(CheckResult::skipped("dual_path", "closed form needs positive noise variances"));
    }
    Ok(CheckResult::measured(
        "dual_path",
        1.0,
        worst,
        format!(
            "{compared} grid points; worst |closed - direct| / ({DUAL_PATH_REL_TOL:e} |direct| + {DUAL_PATH_ABS_FLOOR:e}) at t = {worst_t}"
        ),
    ))
}

fn max_excess<'a>(rows: impl Iterator<Item = (&'a TraceRow, f64)>) -> (f64, f64) {
    rows.fold((f64::NEG_INFINITY, f64::NAN), |(m, at), (r, x)| if x > m { (x, r.t) } else { (m, at) })
}

fn general_bound(rows: &[&TraceRow]) -> CheckResult {
    let (dev, at) = max_excess(rows.iter().map(|r| (*r, r.voi - r.bound_general)));
    CheckResult::measured("general_bound", BOUND_SLACK, dev.max(0.0), format!("max voi - bound_general at t = {at}"))
}

fn correction_nonneg(rows: &[&TraceRow]) -> CheckResult {
    let (dev, at) = max_excess(rows.iter().map(|r| (*r, r.voi - r.voi_ou)));
    CheckResult::measured("correction_nonneg", MI_SLACK, dev.max(0.0), format!("max voi - voi_ou at t = {at}"))
}

fn chain_rule(scenario: &Scenario, rows: &[&TraceRow]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut detail = String::from("both terms finite everywhere");
    for r in rows {
        let range = scenario.observations_at(r.t);
        let schedule = scenario.schedule.slice(range.clone());
        let noise = scenario.noise.slice(range);
        let hmm = bound_hmm_terms(&scenario.params, &schedule, &noise, r.t)?;
        for (direct, chained) in [
            (r.bound_terms.latent, hmm.latent),
            (r.bound_terms.channel, hmm.channel),
        ] {
            if direct.is_infinite() && chained.is_infinite() {
                detail = "channel term infinite (noiseless update) at some points".into();
                continue;
            }
            let rel = (direct - chained).abs() / direct.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(if direct == chained { 0.0 } else { rel });
        }
    }
    Ok(CheckResult::measured("chain_rule", 1e-9, worst, format!("relative; {detail}")))
}

fn single_bound(rows: &[&TraceRow]) -> CheckResult {
    let scoped: Vec<_> = rows
        .iter()
        .filter_map(|r| Some((*r, r.voi_single? - r.bound_single?)))
        .collect();
    if scoped.is_empty() {
        return CheckResult::skipped("single_bound", "no single-observation rows");
    }
    let n = scoped.len();
    let (dev, at) = max_excess(scoped.into_iter());
    CheckResult::measured(
        "single_bound",
        BOUND_SLACK,
        dev.max(0.0),
        format!("{n} rows; max voi_single - bound_single at t = {at}"),
    )
}

fn gamma_limits(scenario: &Scenario, t: f64) -> Result<CheckResult> {
    let range = scenario.observations_at(t);
    let t_n = scenario.schedule.sample_times()[range.end - 1];
    let p = &scenario.params;
    let high = (voi_single(p, t_n, GAMMA_HIGH, t)? - voi_markov(p, t_n, t)?).abs();
    let low = voi_single(p, t_n, GAMMA_LOW, t)?.abs();
    Ok(CheckResult::measured(
        "gamma_limits",
        LIMIT_TOL,
        high.max(low),
        format!("t = {t}, t_n = {t_n}: |v(γ=1e8) - v_OU| = {high:e}, v(γ=1e-8) = {low:e}"),
    ))
}

fn monte_carlo(scenario: &Scenario, t: f64, k: usize, seed: SeedSpec) -> CheckResult {
    let range = scenario.observations_at(t);
    let schedule = scenario.schedule.slice(range.clone());
    let noise = scenario.noise.slice(range);
    let p = &scenario.params;
    let outcome = voi_direct(p, &schedule, &noise, t)
        .and_then(|exact| Ok((exact, estimate_voi(p, &schedule, &noise, t, seed, k)?)));
    match outcome {
        Ok((exact, est)) => CheckResult::measured(
            "monte_carlo",
            MC_SIGMAS,
            est.z_score(exact).abs(),
            format!(
                "t = {t}, {} observations, k = {k}: estimate {} ± {} vs exact {exact} (deviation in standard errors)",
                schedule.len(),
                est.value,
                est.std_error
            ),
        ),
        Err(e) => CheckResult::failed("monte_carlo", e.to_string()),
    }
}

/// Maps an evaluation error to the CLI exit status: 2 for numerical
/// failures, 1 otherwise.
pub fn exit_code(e: &VoiError) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}
