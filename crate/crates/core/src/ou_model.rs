//! Ornstein–Uhlenbeck latent process and its noisy observations.
//!
//! The process `dX = κ(θ − X)dt + σ dW` starts from a deterministic `X₀` at
//! time 0, so its covariance carries the transient term `e^{−κ(t+s)}`. Every
//! `1 − e^{−x}` is evaluated as `-expm1(-x)`; schedules routinely have
//! `κ·Δt ≪ 1`.
//!
//! Observations are `Y_{t'ᵢ} = X_{tᵢ} + N_{t'ᵢ}` with independent zero-mean
//! Gaussian noise, one draw per reception.

use crate::error::{Result, VoiError};
use crate::matrix::CovMatrix;

/// `1 − e^{−x}` without cancellation for small `x`.
#[inline]
pub(crate) fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// OU coefficients. `theta` and `x0` only shift means; no information
/// quantity depends on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    kappa: f64,
    theta: f64,
    sigma: f64,
    x0: f64,
}

impl OuParams {
    pub fn new(kappa: f64, theta: f64, sigma: f64, x0: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(VoiError::domain(format!("kappa must be > 0, got {kappa}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(VoiError::domain(format!("sigma must be > 0, got {sigma}")));
        }
        if !theta.is_finite() || !x0.is_finite() {
            return Err(VoiError::domain("theta and x0 must be finite"));
        }
        Ok(OuParams {
            kappa,
            theta,
            sigma,
            x0,
        })
    }

    /// Zero long-term mean and zero start; the usual setting for information work.
    pub fn centered(kappa: f64, sigma: f64) -> Result<Self> {
        Self::new(kappa, 0.0, sigma, 0.0)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(kappa, self.theta, self.sigma, self.x0)
    }

    /// `σ²/2κ`, the variance as `t → ∞`.
    pub fn stationary_var(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.kappa)
    }

    /// `E[X_t] = θ + (x0 − θ)e^{−κt}` for `t ≥ 0`.
    pub fn mean_at(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.theta + (self.x0 - self.theta) * (-self.kappa * t).exp()
    }

    /// `Var[X_t] = (σ²/2κ)(1 − e^{−2κt})` for `t ≥ 0`.
    pub fn var_at(&self, t: f64) -> f64 {
        self.cov_at(t, t)
    }

    /// `Cov[X_t, X_s] = (σ²/2κ)(e^{−κ|t−s|} − e^{−κ(t+s)})`, evaluated as
    /// `(σ²/2κ) e^{−κ|t−s|} (1 − e^{−2κ min(t,s)})`.
    ///
    /// On the diagonal the decay factor is exactly 1, so `cov_at(t, t)` and
    /// `var_at(t)` agree bit for bit.
    pub fn cov_at(&self, t: f64, s: f64) -> f64 {
        debug_assert!(t >= 0.0 && s >= 0.0);
        let decay = (-self.kappa * (t - s).abs()).exp();
        self.stationary_var() * one_minus_exp_neg(2.0 * self.kappa * t.min(s)) * decay
    }

    /// `E[X_t | X_s = xs]` for `t > s`.
    pub fn cond_mean(&self, s: f64, t: f64, xs: f64) -> Result<f64> {
        check_horizon(s, t)?;
        Ok(self.theta + (xs - self.theta) * (-self.kappa * (t - s)).exp())
    }

    /// `Var[X_t | X_s] = (σ²/2κ)(1 − e^{−2κ(t−s)})` for `t > s ≥ 0`.
    pub fn cond_var(&self, s: f64, t: f64) -> Result<f64> {
        check_horizon(s, t)?;
        Ok(self.stationary_var() * one_minus_exp_neg(2.0 * self.kappa * (t - s)))
    }
}

fn check_horizon(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0 && t > s && t.is_finite()) {
        return Err(VoiError::domain(format!(
            "conditioning needs t > s >= 0, got s = {s}, t = {t}"
        )));
    }
    Ok(())
}

/// Which receptions count as available at evaluation time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reception {
    /// `t'ᵢ <= t`: an update is usable at its reception instant.
    #[default]
    Closed,
    /// `t'ᵢ < t`.
    Open,
}

impl Reception {
    pub fn includes(self, receive_time: f64, t: f64) -> bool {
        match self {
            Reception::Closed => receive_time <= t,
            Reception::Open => receive_time < t,
        }
    }
}

/// Sampling times `t₁ < … < tₙ` and reception times `t'₁ < … < t'ₙ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UpdateSchedule {
    sample_times: Vec<f64>,
    receive_times: Vec<f64>,
}

impl UpdateSchedule {
    /// Validates the schedule. Errors name the offending update by 1-based index.
    pub fn new(sample_times: Vec<f64>, receive_times: Vec<f64>) -> Result<Self> {
        if sample_times.len() != receive_times.len() {
            return Err(VoiError::scenario(
                "schedule",
                format!(
                    "{} sample times but {} receive times",
                    sample_times.len(),
                    receive_times.len()
                ),
            ));
        }
        for (i, (&s, &r)) in sample_times.iter().zip(&receive_times).enumerate() {
            let idx = i + 1;
            if !s.is_finite() || !r.is_finite() {
                return Err(VoiError::scenario(
                    "schedule",
                    format!("update {idx} has a non-finite time"),
                ));
            }
            if i == 0 && s <= 0.0 {
                return Err(VoiError::scenario(
                    "schedule.sample_times",
                    format!("update 1 must be sampled after time 0, got {s}"),
                ));
            }
            if r <= s {
                return Err(VoiError::scenario(
                    "schedule.receive_times",
                    format!("update {idx} received at {r}, not after its sampling time {s}"),
                ));
            }
            if i > 0 && s <= sample_times[i - 1] {
                return Err(VoiError::scenario(
                    "schedule.sample_times",
                    format!("update {idx} sampled at {s}, not after update {i}"),
                ));
            }
            if i > 0 && r <= receive_times[i - 1] {
                return Err(VoiError::scenario(
                    "schedule.receive_times",
                    format!("update {idx} received at {r}, not after update {i}"),
                ));
            }
        }
        Ok(UpdateSchedule {
            sample_times,
            receive_times,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    pub fn receive_times(&self) -> &[f64] {
        &self.receive_times
    }

    pub fn last_sample(&self) -> Option<f64> {
        self.sample_times.last().copied()
    }

    /// Number of updates received by `t` (they form a prefix).
    pub fn received_by(&self, t: f64, reception: Reception) -> usize {
        self.receive_times
            .iter()
            .take_while(|&&r| reception.includes(r, t))
            .count()
    }

    /// Updates `range` as a new schedule. Any contiguous slice of a valid
    /// schedule is itself valid.
    pub fn slice(&self, range: std::ops::Range<usize>) -> UpdateSchedule {
        UpdateSchedule {
            sample_times: self.sample_times[range.clone()].to_vec(),
            receive_times: self.receive_times[range].to_vec(),
        }
    }
}

/// Observation noise, as variances or as ratios `γᵢ = Var[X_{tᵢ}] / Var[N_{t'ᵢ}]`.
///
/// `f64::INFINITY` is a valid gamma and means a noiseless observation.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Variances(Vec<f64>),
    Gammas(Vec<f64>),
    /// One gamma shared by every update.
    UniformGamma(f64),
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        NoiseSpec::UniformGamma(f64::INFINITY)
    }

    /// Checks lengths and ranges against a schedule of `n` updates.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_len = |field: &str, len: usize| {
            if len != n {
                Err(VoiError::scenario(
                    field,
                    format!("expected {n} entries (one per update), got {len}"),
                ))
            } else {
                Ok(())
            }
        };
        let check_gamma = |field: &str, idx: usize, g: f64| {
            if g > 0.0 {
                Ok(())
            } else {
                Err(VoiError::scenario(
                    field,
                    format!("gamma for update {idx} must be > 0, got {g}"),
                ))
            }
        };
        match self {
            NoiseSpec::Variances(v) => {
                check_len("noise.variances", v.len())?;
                for (i, &x) in v.iter().enumerate() {
                    if !(x >= 0.0 && x.is_finite()) {
                        return Err(VoiError::scenario(
                            "noise.variances",
                            format!("variance for update {} must be finite and >= 0, got {x}", i + 1),
                        ));
                    }
                }
                Ok(())
            }
            NoiseSpec::Gammas(g) => {
                check_len("noise.gammas", g.len())?;
                g.iter()
                    .enumerate()
                    .try_for_each(|(i, &x)| check_gamma("noise.gammas", i + 1, x))
            }
            NoiseSpec::UniformGamma(g) => check_gamma("noise.gamma", 1, *g),
        }
    }

    /// Noise variances per update: `Var[X_{tᵢ}]/γᵢ` when given as gammas.
    pub fn variances(&self, params: &OuParams, schedule: &UpdateSchedule) -> Result<Vec<f64>> {
        self.validate(schedule.len())?;
        let times = schedule.sample_times();
        Ok(match self {
            NoiseSpec::Variances(v) => v.clone(),
            NoiseSpec::Gammas(g) => times
                .iter()
                .zip(g)
                .map(|(&t, &g)| params.var_at(t) / g)
                .collect(),
            NoiseSpec::UniformGamma(g) => times.iter().map(|&t| params.var_at(t) / g).collect(),
        })
    }

    /// Gamma per update; a zero variance maps to `f64::INFINITY`.
    pub fn gammas(&self, params: &OuParams, schedule: &UpdateSchedule) -> Result<Vec<f64>> {
        self.validate(schedule.len())?;
        let times = schedule.sample_times();
        Ok(match self {
            NoiseSpec::Variances(v) => times
                .iter()
                .zip(v)
                .map(|(&t, &var)| {
                    if var == 0.0 {
                        f64::INFINITY
                    } else {
                        params.var_at(t) / var
                    }
                })
                .collect(),
            NoiseSpec::Gammas(g) => g.clone(),
            NoiseSpec::UniformGamma(g) => vec![*g; times.len()],
        })
    }

    /// The entries for updates `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> NoiseSpec {
        match self {
            NoiseSpec::Variances(v) => NoiseSpec::Variances(v[range].to_vec()),
            NoiseSpec::Gammas(g) => NoiseSpec::Gammas(g[range].to_vec()),
            NoiseSpec::UniformGamma(g) => NoiseSpec::UniformGamma(*g),
        }
    }
}

/// `Σ_X` with entries `cov_at(tᵢ, tⱼ)`; times strictly increasing and positive.
pub fn sigma_x(params: &OuParams, times: &[f64]) -> Result<CovMatrix> {
    for (i, &t) in times.iter().enumerate() {
        if !(t > 0.0 && t.is_finite()) {
            return Err(VoiError::domain(format!(
                "sampling time {} must be positive, got {t}",
                i + 1
            )));
        }
        if i > 0 && t <= times[i - 1] {
            return Err(VoiError::domain(format!(
                "sampling times must be strictly increasing (index {})",
                i + 1
            )));
        }
    }
    Ok(CovMatrix::from_fn(times.len(), |i, j| {
        params.cov_at(times[i], times[j])
    }))
}

/// Diagonal `Σ_N`.
pub fn sigma_n(noise: &NoiseSpec, params: &OuParams, schedule: &UpdateSchedule) -> Result<CovMatrix> {
    Ok(CovMatrix::diagonal(&noise.variances(params, schedule)?))
}

/// Covariance of `(Y_{t'₁}, …, Y_{t'ₙ}, X_t)`, observations first.
///
/// The observation block is `Σ_X + Σ_N`; the noise is independent of the
/// latent path, so `Cov[Y_{t'ᵢ}, X_t] = Cov[X_{tᵢ}, X_t]`.
pub fn joint_cov(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
) -> Result<CovMatrix> {
    let times = schedule.sample_times();
    if let Some(&tn) = times.last() {
        if !(t > tn) {
            return Err(VoiError::domain(format!(
                "evaluation time {t} must exceed the last sampling time {tn}"
            )));
        }
    } else if !(t >= 0.0) {
        return Err(VoiError::domain(format!("evaluation time {t} must be >= 0")));
    }
    let noise_var = noise.variances(params, schedule)?;
    let n = times.len();
    let point = |i: usize| if i < n { times[i] } else { t };
    Ok(CovMatrix::from_fn(n + 1, |i, j| {
        let c = params.cov_at(point(i), point(j));
        if i == j && i < n {
            c + noise_var[i]
        } else {
            c
        }
    }))
}
