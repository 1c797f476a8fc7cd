//! Scenario files: a TOML description of one experiment.
//!
//! ```toml
//! name = "fig4"                 # optional label, copied into CSV headers
//! mode = "all-observations"     # or "single-observation"
//! units = "nats"                # or "bits"
//! reception = "closed"          # "closed": t'ᵢ <= t counts; "open": t'ᵢ < t
//! window = 3                    # optional: only the 3 most recent receptions
//! seed = 7                      # optional: Monte Carlo master seed (verify)
//!
//! [params]
//! kappa = 0.15
//! sigma = 10.0
//! theta = 0.0                   # optional, default 0
//! x0 = 0.0                      # optional, default 0
//!
//! [schedule]
//! sample_times = [1.0, 3.0]
//! receive_times = [2.0, 4.2]
//!
//! [noise]                       # exactly one of:
//! gamma = 1.5                   #   one ratio for every update (inf = noiseless)
//! # gammas = [1.5, 2.0]         #   one ratio per update
//! # variances = [4.0, 9.0]      #   noise variances per update
//!
//! [grid]                        # either explicit times ...
//! times = [5.0, 6.0]
//! # start = 2.0                 # ... or an inclusive range
//! # stop = 21.5
//! # step = 0.05
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VoiError};
use crate::mc::SeedSpec;
use crate::ou_model::{NoiseSpec, OuParams, Reception, UpdateSchedule};

/// Grid points are rounded to this many decimal places so that ranges like
/// `2.0 + 44 × 0.05` land exactly on `4.2`.
const GRID_DECIMALS: i32 = 9;
const MAX_GRID_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every received observation (or the last `window` of them).
    #[default]
    AllObservations,
    /// Only the most recent received observation.
    SingleObservation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    /// Converts a value in nats.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Explicit(Vec<f64>),
    /// `start, start + step, …` up to and including `stop`.
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            Grid::Explicit(ref ts) => ts.clone(),
            Grid::Range { start, stop, step } => {
                let scale = 10f64.powi(GRID_DECIMALS);
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count)
                    .map(|i| ((start + i as f64 * step) * scale).round() / scale)
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Grid::Explicit(ref ts) => {
                if ts.is_empty() {
                    return Err(VoiError::scenario("grid.times", "must not be empty"));
                }
                for (i, &t) in ts.iter().enumerate() {
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(VoiError::scenario(
                            "grid.times",
                            format!("entry {} must be finite and >= 0, got {t}", i + 1),
                        ));
                    }
                    if i > 0 && t < ts[i - 1] {
                        return Err(VoiError::scenario(
                            "grid.times",
                            format!("entry {} is smaller than the previous one", i + 1),
                        ));
                    }
                }
                Ok(())
            }
            Grid::Range { start, stop, step } => {
                if !(start >= 0.0 && start.is_finite() && stop.is_finite()) {
                    return Err(VoiError::scenario("grid.start", "start and stop must be finite, start >= 0"));
                }
                if !(step > 0.0 && step.is_finite()) {
                    return Err(VoiError::scenario("grid.step", format!("must be > 0, got {step}")));
                }
                if stop < start {
                    return Err(VoiError::scenario("grid.stop", format!("{stop} is before start {start}")));
                }
                if (stop - start) / step >= MAX_GRID_POINTS as f64 {
                    return Err(VoiError::scenario("grid.step", "grid has too many points"));
                }
                Ok(())
            }
        }
    }
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub params: OuParams,
    pub schedule: UpdateSchedule,
    pub noise: NoiseSpec,
    pub grid: Grid,
    pub window: Option<usize>,
    pub mode: Mode,
    pub units: Units,
    pub reception: Reception,
    pub seed: Option<SeedSpec>,
}

impl Scenario {
    /// Re-checks every invariant; [`Scenario::from_toml_str`] calls this.
    pub fn validate(&self) -> Result<()> {
        self.noise.validate(self.schedule.len())?;
        self.grid.validate()?;
        if let Some(w) = self.window {
            if w == 0 || w > self.schedule.len() {
                return Err(VoiError::scenario(
                    "window",
                    format!("must be between 1 and {} (the number of updates), got {w}", self.schedule.len()),
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            VoiError::scenario(
                "<file>",
                e.to_string().trim().replace('\n', " "),
            )
        })?;
        raw.into_scenario()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&RawScenario::from(self)).expect("scenario serializes to TOML")
    }

    /// Observations in scope at `t` as index range into the schedule.
    pub fn observations_at(&self, t: f64) -> std::ops::Range<usize> {
        let received = self.schedule.received_by(t, self.reception);
        let keep = match self.mode {
            Mode::SingleObservation => 1,
            Mode::AllObservations => self.window.unwrap_or(received),
        };
        received.saturating_sub(keep)..received
    }
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| VoiError::Io(format!("{}: {e}", path.display())))?;
    Scenario::from_toml_str(&text)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    units: Units,
    #[serde(default)]
    reception: RawReception,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    params: RawParams,
    schedule: RawSchedule,
    noise: RawNoise,
    grid: RawGrid,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawReception {
    #[default]
    Closed,
    Open,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    kappa: f64,
    sigma: f64,
    #[serde(default)]
    theta: f64,
    #[serde(default)]
    x0: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    sample_times: Vec<f64>,
    receive_times: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gammas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variances: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
}

impl RawScenario {
    fn into_scenario(self) -> Result<Scenario> {
        let p = self.params;
        let params = OuParams::new(p.kappa, p.theta, p.sigma, p.x0).map_err(|e| match e {
            VoiError::Domain(msg) => VoiError::scenario("params", msg),
            other => other,
        })?;
        let schedule = UpdateSchedule::new(self.schedule.sample_times, self.schedule.receive_times)?;
        let noise = match (self.noise.gamma, self.noise.gammas, self.noise.variances) {
            (Some(g), None, None) => NoiseSpec::UniformGamma(g),
            (None, Some(g), None) => NoiseSpec::Gammas(g),
            (None, None, Some(v)) => NoiseSpec::Variances(v),
            _ => {
                return Err(VoiError::scenario(
                    "noise",
                    "give exactly one of `gamma`, `gammas` or `variances`",
                ))
            }
        };
        let g = self.grid;
        let grid = match (g.times, g.start, g.stop, g.step) {
            (Some(ts), None, None, None) => Grid::Explicit(ts),
            (None, Some(start), Some(stop), Some(step)) => Grid::Range { start, stop, step },
            _ => {
                return Err(VoiError::scenario(
                    "grid",
                    "give either `times` or all of `start`, `stop`, `step`",
                ))
            }
        };
        let scenario = Scenario {
            name: self.name,
            params,
            schedule,
            noise,
            grid,
            window: self.window,
            mode: self.mode,
            units: self.units,
            reception: match self.reception {
                RawReception::Closed => Reception::Closed,
                RawReception::Open => Reception::Open,
            },
            seed: self.seed.map(SeedSpec::new),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for RawScenario {
    fn from(s: &Scenario) -> Self {
        let (gamma, gammas, variances) = match &s.noise {
            NoiseSpec::UniformGamma(g) => (Some(*g), None, None),
            NoiseSpec::Gammas(g) => (None, Some(g.clone()), None),
            NoiseSpec::Variances(v) => (None, None, Some(v.clone())),
        };
        let grid = match s.grid {
            Grid::Explicit(ref ts) => RawGrid {
                times: Some(ts.clone()),
                start: None,
                stop: None,
                step: None,
            },
            Grid::Range { start, stop, step } => RawGrid {
                times: None,
                start: Some(start),
                stop: Some(stop),
                step: Some(step),
            },
        };
        RawScenario {
            name: s.name.clone(),
            mode: s.mode,
            units: s.units,
            reception: match s.reception {
                Reception::Closed => RawReception::Closed,
                Reception::Open => RawReception::Open,
            },
            window: s.window,
            seed: s.seed.map(|seed| seed.master_seed),
            params: RawParams {
                kappa: s.params.kappa(),
                sigma: s.params.sigma(),
                theta: s.params.theta(),
                x0: s.params.x0(),
            },
            schedule: RawSchedule {
                sample_times: s.schedule.sample_times().to_vec(),
                receive_times: s.schedule.receive_times().to_vec(),
            },
            noise: RawNoise {
                gamma,
                gammas,
                variances,
            },
            grid,
        }
    }
}
