//! Value of information `v(t) = I(X_t; Y_{t'₁}, …, Y_{t'ₙ})` for the noisy OU
//! process, together with its special cases and upper bounds.
//!
//! [`voi_direct`] is the reference: it assembles the joint covariance of the
//! observations and `X_t` and evaluates the Gaussian mutual information.
//! [`voi_closed`] is the fast path, the latent-process VoI minus a correction
//! built from `A = Σ_X⁻¹ + Σ_N⁻¹`. The two are independent routes to the same
//! number and are checked against each other everywhere.

use crate::error::{Result, VoiError};
use crate::gaussian_info::{gaussian_cond_mi, gaussian_mi, Cholesky, IndexSplit};
use crate::matrix::CovMatrix;
use crate::ou_model::{joint_cov, one_minus_exp_neg, sigma_x, NoiseSpec, OuParams, UpdateSchedule};

/// Slack used when checking `voi <= bound` and `voi <= voi_ou`.
pub const BOUND_SLACK: f64 = 1e-9;
/// Slack for non-negativity of mutual information.
pub const MI_SLACK: f64 = 1e-10;

/// One evaluated instant. Quantities are in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoiPoint {
    pub t: f64,
    pub voi: f64,
    pub voi_ou: f64,
    pub bound_general: f64,
    pub bound_single: Option<f64>,
    pub n_used: usize,
}

impl VoiPoint {
    /// `0 <= voi <= bound_general` and `voi <= voi_ou`, within slack.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| {
            Err(VoiError::domain(format!(
                "VoI invariant violated at t = {}: {what} (voi {}, voi_ou {}, bound {})",
                self.t, self.voi, self.voi_ou, self.bound_general
            )))
        };
        if !self.voi.is_finite() || self.voi < -MI_SLACK {
            return fail("voi must be finite and non-negative");
        }
        if self.voi > self.bound_general + BOUND_SLACK {
            return fail("voi exceeds the general bound");
        }
        if self.voi > self.voi_ou + BOUND_SLACK {
            return fail("voi exceeds the latent-process VoI");
        }
        if let Some(b) = self.bound_single {
            if self.voi > b + BOUND_SLACK {
                return fail("voi exceeds the single-observation bound");
            }
        }
        Ok(())
    }
}

fn check_after(t_n: f64, t: f64) -> Result<()> {
    if !(t_n > 0.0 && t > t_n && t.is_finite()) {
        return Err(VoiError::domain(format!(
            "need t > t_n > 0, got t_n = {t_n}, t = {t}"
        )));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(VoiError::domain(format!("gamma must be > 0, got {gamma}")));
    }
    Ok(())
}

/// VoI of the directly observed process given its latest sample at `t_n`:
/// `½ ln((1 − e^{−2κt}) / (1 − e^{−2κ(t−t_n)}))`.
pub fn voi_markov(params: &OuParams, t_n: f64, t: f64) -> Result<f64> {
    check_after(t_n, t)?;
    let k2 = 2.0 * params.kappa();
    let (whole, gap) = (one_minus_exp_neg(k2 * t), one_minus_exp_neg(k2 * (t - t_n)));
    // Squared correlation between X_{t_n} and X_t.
    let rho2 = (-k2 * (t - t_n)).exp() * one_minus_exp_neg(k2 * t_n) / whole;
    if rho2 < 0.5 {
        Ok(-0.5 * (-rho2).ln_1p())
    } else {
        Ok(0.5 * (whole / gap).ln())
    }
}

/// Reference VoI: `½ ln(Var[X_t] det Σ_Y / det Σ_{Y,X_t})`, from the joint
/// covariance and the Gaussian MI kernel.
///
/// Uses every update in `schedule`; the caller picks which ones are received.
/// Works with zero noise variances since `Σ_N` is never inverted.
pub fn voi_direct(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
) -> Result<f64> {
    let n = schedule.len();
    if n == 0 {
        noise.validate(0)?;
        return Ok(0.0);
    }
    let joint = joint_cov(params, schedule, noise, t)?;
    gaussian_mi(&joint, &IndexSplit::pair(vec![n], (0..n).collect())?)
}

/// Closed-form VoI: latent-process term minus
/// `½ ln(1 + 2κ/(σ²(e^{2κ(t−t_n)} − 1)) · det(A_nn)/det(A))`.
///
/// The cofactor ratio `det(A_nn)/det(A)` is read off as `(A⁻¹)_nn` from one
/// symmetric solve. Needs every noise variance strictly positive.
pub fn voi_closed(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
) -> Result<f64> {
    let noise_var = noise.variances(params, schedule)?;
    let Some(t_n) = schedule.last_sample() else {
        return Ok(0.0);
    };
    check_after(t_n, t)?;
    if let Some(i) = noise_var.iter().position(|&v| !(v > 0.0)) {
        return Err(VoiError::InvalidForClosedForm { index: i + 1 });
    }
    let n = noise_var.len();
    let sx_inv = Cholesky::factor(&sigma_x(params, schedule.sample_times())?)?.inverse();
    let a = CovMatrix::from_fn(n, |i, j| {
        sx_inv.get(i, j) + if i == j { 1.0 / noise_var[i] } else { 0.0 }
    });
    let mut e_n = vec![0.0; n];
    e_n[n - 1] = 1.0;
    let cofactor_ratio = Cholesky::factor(&a)?.solve(&e_n)[n - 1];

    let k2 = 2.0 * params.kappa();
    let sigma2 = params.sigma() * params.sigma();
    let scale = k2 / (sigma2 * (k2 * (t - t_n)).exp_m1());
    Ok(voi_markov(params, t_n, t)? - 0.5 * (scale * cofactor_ratio).ln_1p())
}

/// Single-observation VoI with SNR-like ratio `γ_n = Var[X_{t_n}]/Var[N]`:
/// `v_OU(t) − ½ ln(1 + (1 − e^{−2κt_n}) / ((1+γ_n)(e^{2κ(t−t_n)} − 1)))`.
///
/// `gamma_n = ∞` gives the noiseless value.
pub fn voi_single(params: &OuParams, t_n: f64, gamma_n: f64, t: f64) -> Result<f64> {
    check_gamma(gamma_n)?;
    let first = voi_markov(params, t_n, t)?;
    let k2 = 2.0 * params.kappa();
    let ratio = one_minus_exp_neg(k2 * t_n) / ((1.0 + gamma_n) * (k2 * (t - t_n)).exp_m1());
    Ok(first - 0.5 * ratio.ln_1p())
}

/// Limit of [`voi_single`] as `t_n → ∞` at fixed age `delta = t − t_n`:
/// `½ ln(1 + 1/(((1+γ)/γ) e^{2κδ} − 1))`.
pub fn voi_single_asymptotic(params: &OuParams, delta: f64, gamma_n: f64) -> Result<f64> {
    check_gamma(gamma_n)?;
    if !(delta > 0.0) {
        return Err(VoiError::domain(format!("delta must be > 0, got {delta}")));
    }
    let x = 2.0 * params.kappa() * delta;
    // ((1+γ)/γ)e^x − 1 = (e^x − 1) + e^x/γ, finite as γ → ∞.
    let denom = x.exp_m1() + x.exp() / gamma_n;
    Ok(0.5 * denom.recip().ln_1p())
}

/// Additive-Gaussian-noise channel information `½ ln(1 + γ)`.
pub fn v_agn(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(VoiError::domain(format!("gamma must be >= 0, got {gamma}")));
    }
    Ok(0.5 * gamma.ln_1p())
}

/// The switch point `γ* = (e^{−2κ(t−t_n)} − e^{−2κt}) / (1 − e^{−2κ(t−t_n)})`
/// of the single-observation bound. At `γ*`, `v_AGN = v_OU`.
pub fn gamma_threshold(params: &OuParams, t_n: f64, t: f64) -> Result<f64> {
    check_after(t_n, t)?;
    let k2 = 2.0 * params.kappa();
    let near = (-k2 * (t - t_n)).exp();
    let far = (-k2 * t).exp();
    Ok((near - far) / one_minus_exp_neg(k2 * (t - t_n)))
}

/// Single-observation bound: `v_OU(t)` when `γ_n >= γ*`, else `v_AGN`.
pub fn bound_single(params: &OuParams, t_n: f64, gamma_n: f64, t: f64) -> Result<f64> {
    check_gamma(gamma_n)?;
    if gamma_n >= gamma_threshold(params, t_n, t)? {
        voi_markov(params, t_n, t)
    } else {
        v_agn(gamma_n)
    }
}

/// Which term attains the general bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    /// `I(X_t; X)`: the latent process limits the information.
    Latent,
    /// `I(X; Y)`: the channel limits the information.
    Channel,
}

/// The two terms of `min{I(X_t; X), I(X; Y)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub latent: f64,
    /// `+∞` when some observation is noiseless.
    pub channel: f64,
}

impl BoundTerms {
    pub fn value(&self) -> f64 {
        self.latent.min(self.channel)
    }

    /// Ties go to the latent side.
    pub fn active(&self) -> BoundSide {
        if self.latent <= self.channel {
            BoundSide::Latent
        } else {
            BoundSide::Channel
        }
    }
}

/// Covariance of `(X_{t₁}, …, X_{tₙ}, X_t)`.
fn latent_joint(params: &OuParams, schedule: &UpdateSchedule, t: f64) -> Result<CovMatrix> {
    let mut times = schedule.sample_times().to_vec();
    if let Some(&t_n) = times.last() {
        check_after(t_n, t)?;
    }
    times.push(t);
    sigma_x(params, &times)
}

/// Covariance of `(X_{t₁}, …, X_{tₙ}, Y_{t'₁}, …, Y_{t'ₙ})`.
fn latent_observation_joint(sx: &CovMatrix, noise_var: &[f64]) -> CovMatrix {
    let n = sx.dim();
    CovMatrix::from_fn(2 * n, |i, j| {
        let c = sx.get(i % n, j % n);
        if i == j && i >= n {
            c + noise_var[i - n]
        } else {
            c
        }
    })
}

/// `I(X; Y)` for `Y = X + N`, or `+∞` when any noise variance is zero.
fn channel_information(params: &OuParams, schedule: &UpdateSchedule, noise_var: &[f64]) -> Result<f64> {
    let n = schedule.len();
    if n == 0 {
        return Ok(0.0);
    }
    if noise_var.contains(&0.0) {
        return Ok(f64::INFINITY);
    }
    let sx = sigma_x(params, schedule.sample_times())?;
    let joint = latent_observation_joint(&sx, noise_var);
    gaussian_mi(&joint, &IndexSplit::pair((n..2 * n).collect(), (0..n).collect())?)
}

/// `I(X_t; X)` and `I(X; Y)`, each from its assembled joint covariance.
pub fn bound_general(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
) -> Result<BoundTerms> {
    let noise_var = noise.variances(params, schedule)?;
    let n = schedule.len();
    if n == 0 {
        return Ok(BoundTerms {
            latent: 0.0,
            channel: 0.0,
        });
    }
    let lj = latent_joint(params, schedule, t)?;
    let latent = gaussian_mi(&lj, &IndexSplit::pair(vec![n], (0..n).collect())?)?;
    let channel = channel_information(params, schedule, &noise_var)?;
    Ok(BoundTerms { latent, channel })
}

/// Chain-rule decompositions of the two bound terms:
/// `Σᵢ I(X_t; X_{tᵢ} | X_{tᵢ₋₁})` and `Σᵢ I(Y; X_{tᵢ} | X_{tᵢ₋₁})`, each
/// summand from [`gaussian_cond_mi`] (the `i = 1` terms are unconditioned).
///
/// The channel sum conditions on the whole observation vector `Y`. The
/// per-observation sum `Σᵢ I(X_{tᵢ}; Y_{t'ᵢ} | X_{tᵢ₋₁})` is generally smaller
/// than `I(X; Y)`; see [`local_channel_sum`].
pub fn bound_hmm_terms(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
) -> Result<BoundTerms> {
    let noise_var = noise.variances(params, schedule)?;
    let n = schedule.len();
    if n == 0 {
        return Ok(BoundTerms {
            latent: 0.0,
            channel: 0.0,
        });
    }
    let prev = |i: usize| if i == 0 { Vec::new() } else { vec![i - 1] };

    let lj = latent_joint(params, schedule, t)?;
    let latent = (0..n)
        .map(|i| gaussian_cond_mi(&lj, &IndexSplit::new(vec![n], vec![i], prev(i))?))
        .sum::<Result<f64>>()?;

    let channel = if noise_var.contains(&0.0) {
        f64::INFINITY
    } else {
        let sx = sigma_x(params, schedule.sample_times())?;
        let joint = latent_observation_joint(&sx, &noise_var);
        let ys: Vec<usize> = (n..2 * n).collect();
        (0..n)
            .map(|i| gaussian_cond_mi(&joint, &IndexSplit::new(vec![i], ys.clone(), prev(i))?))
            .sum::<Result<f64>>()?
    };
    Ok(BoundTerms { latent, channel })
}

/// `Σᵢ I(X_{tᵢ}; Y_{t'ᵢ} | X_{tᵢ₋₁})`, each observation against its own sample
/// only. Never exceeds `I(X; Y)`.
pub fn local_channel_sum(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
) -> Result<f64> {
    let noise_var = noise.variances(params, schedule)?;
    let n = schedule.len();
    if noise_var.contains(&0.0) {
        return Ok(f64::INFINITY);
    }
    let sx = sigma_x(params, schedule.sample_times())?;
    let joint = latent_observation_joint(&sx, &noise_var);
    (0..n)
        .map(|i| {
            let given = if i == 0 { Vec::new() } else { vec![i - 1] };
            gaussian_cond_mi(&joint, &IndexSplit::new(vec![i], vec![n + i], given)?)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const SAMPLES: [f64; 10] = [1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0, 17.0, 19.0];
    const RECEIVES: [f64; 10] = [2.0, 4.2, 6.5, 8.0, 10.7, 12.1, 14.7, 16.2, 18.3, 20.5];

    fn params() -> OuParams {
        OuParams::centered(0.15, 10.0).unwrap()
    }

    fn standard_schedule() -> UpdateSchedule {
        UpdateSchedule::new(SAMPLES.to_vec(), RECEIVES.to_vec()).unwrap()
    }

    fn single(t_n: f64) -> UpdateSchedule {
        UpdateSchedule::new(vec![t_n], vec![t_n + 0.5]).unwrap()
    }

    #[test]
    fn markov_examples() {
        let p = params();
        // mpmath: 0.3970161877474054430
        assert_relative_eq!(voi_markov(&p, 19.0, 21.0).unwrap(), 0.397_016_187_747_405_44, max_relative = 1e-13);
        let far = voi_markov(&p, 19.0, 80.0).unwrap();
        assert!(far > 0.0 && far < 1e-7);
        assert!(voi_markov(&p, 19.0, 19.0 + 1e-9).unwrap() > 8.0);
        assert!(voi_markov(&p, 19.0, 19.0).is_err());
        assert!(voi_markov(&p, 0.0, 1.0).is_err());

        let lj = sigma_x(&p, &[19.0, 21.0]).unwrap();
        let mi = gaussian_mi(&lj, &IndexSplit::pair(vec![1], vec![0]).unwrap()).unwrap();
        assert_relative_eq!(mi, voi_markov(&p, 19.0, 21.0).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn markov_decays_like_exp_minus_two_kappa_t() {
        let p = params();
        let ratio = |t: f64| voi_markov(&p, 19.0, t).unwrap() / (-0.3 * t).exp();
        let (r1, r2) = (ratio(80.0), ratio(120.0));
        assert_relative_eq!(r1, r2, max_relative = 1e-6);
    }

    #[test]
    fn direct_examples() {
        let p = params();
        assert_eq!(voi_direct(&p, &UpdateSchedule::empty(), &NoiseSpec::Gammas(vec![]), 5.0).unwrap(), 0.0);

        let s = standard_schedule();
        let noiseless = voi_direct(&p, &s, &NoiseSpec::noiseless(), 21.0).unwrap();
        let mut times = SAMPLES.to_vec();
        times.push(21.0);
        let lj = sigma_x(&p, &times).unwrap();
        let latent = gaussian_mi(&lj, &IndexSplit::pair(vec![10], (0..10).collect()).unwrap()).unwrap();
        assert_relative_eq!(noiseless, latent, max_relative = 1e-12);

        // mpmath: 0.2313846077376670825
        let noisy = voi_direct(&p, &s, &NoiseSpec::UniformGamma(1.5), 21.0).unwrap();
        assert_relative_eq!(noisy, 0.231_384_607_737_667_08, max_relative = 1e-12);
        let closed = voi_closed(&p, &s, &NoiseSpec::UniformGamma(1.5), 21.0).unwrap();
        assert_relative_eq!(closed, noisy, max_relative = 1e-9);
    }

    #[test]
    fn closed_examples() {
        let p = params();
        let s = single(19.0);
        let g = 1.5;
        let via_var = NoiseSpec::Variances(vec![p.var_at(19.0) / g]);
        assert_relative_eq!(
            voi_closed(&p, &s, &via_var, 21.0).unwrap(),
            voi_single(&p, 19.0, g, 21.0).unwrap(),
            max_relative = 1e-12
        );

        let almost_clean = voi_closed(&p, &standard_schedule(), &NoiseSpec::UniformGamma(1e8), 21.0).unwrap();
        assert!((almost_clean - voi_markov(&p, 19.0, 21.0).unwrap()).abs() < 1e-6);

        let zero = NoiseSpec::Variances(vec![1.0, 0.0, 2.0]);
        let s3 = standard_schedule().slice(0..3);
        assert_eq!(voi_closed(&p, &s3, &zero, 8.0), Err(VoiError::InvalidForClosedForm { index: 2 }));
        assert!(voi_direct(&p, &s3, &zero, 8.0).is_ok());
        assert!(voi_closed(&p, &s3, &NoiseSpec::UniformGamma(1.0), 5.0).is_err());
    }

    #[test]
    fn single_examples() {
        let p = params();
        // mpmath: 0.1993358345685635204
        assert_relative_eq!(voi_single(&p, 19.0, 1.5, 21.0).unwrap(), 0.199_335_834_568_563_52, max_relative = 1e-12);
        assert_relative_eq!(
            voi_single(&p, 19.0, f64::INFINITY, 21.0).unwrap(),
            voi_markov(&p, 19.0, 21.0).unwrap(),
            max_relative = 1e-15
        );
        assert!(voi_single(&p, 19.0, 1e-12, 21.0).unwrap().abs() < 1e-11);
        assert!(voi_single(&p, 19.0, 0.0, 21.0).is_err());
        assert!(voi_single(&p, 19.0, 1.0, 18.0).is_err());

        let direct = voi_direct(&p, &single(19.0), &NoiseSpec::Gammas(vec![1.5]), 21.0).unwrap();
        assert_relative_eq!(direct, voi_single(&p, 19.0, 1.5, 21.0).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn asymptotic_examples() {
        let p = params();
        // mpmath: 0.1997069629902264805
        let a = voi_single_asymptotic(&p, 2.0, 1.5).unwrap();
        assert_relative_eq!(a, 0.199_706_962_990_226_48, max_relative = 1e-13);
        // mpmath gap at t_n = 19: 3.7113e-4
        let gap = (voi_single(&p, 19.0, 1.5, 21.0).unwrap() - a).abs();
        assert_relative_eq!(gap, 3.711_284_216_629_6e-4, max_relative = 1e-8);
        let gap50 = (voi_single(&p, 50.0, 1.5, 52.0).unwrap() - a).abs();
        assert!(gap50 < gap);

        let stationary = 0.5 * (1.0 / 0.6f64.exp_m1()).ln_1p();
        assert_relative_eq!(voi_single_asymptotic(&p, 2.0, f64::INFINITY).unwrap(), stationary, max_relative = 1e-15);
        assert!(voi_single_asymptotic(&p, 0.0, 1.0).is_err());
    }

    #[test]
    fn agn_examples() {
        assert_eq!(v_agn(0.0).unwrap(), 0.0);
        // mpmath: 0.4581453659370775326
        assert_relative_eq!(v_agn(1.5).unwrap(), 0.458_145_365_937_077_5, max_relative = 1e-15);
        assert_relative_eq!(v_agn(std::f64::consts::E.powi(2) - 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(v_agn(-0.1).is_err());
    }

    #[test]
    fn single_bound_examples() {
        let p = params();
        let g_star = gamma_threshold(&p, 19.0, 21.0).unwrap();
        // mpmath: 1.212299285783411079
        assert_relative_eq!(g_star, 1.212_299_285_783_411, max_relative = 1e-13);
        assert_eq!(bound_single(&p, 19.0, 1.5, 21.0).unwrap(), voi_markov(&p, 19.0, 21.0).unwrap());
        assert!((v_agn(g_star).unwrap() - voi_markov(&p, 19.0, 21.0).unwrap()).abs() < 1e-9);
        // mpmath: 0.04765508990216243002
        assert_relative_eq!(bound_single(&p, 19.0, 0.1, 21.0).unwrap(), 0.047_655_089_902_162_43, max_relative = 1e-14);
    }

    #[test]
    fn general_bound_examples() {
        let p = params();
        let s = standard_schedule();
        let clean = bound_general(&p, &s, &NoiseSpec::noiseless(), 21.0).unwrap();
        assert_eq!(clean.active(), BoundSide::Latent);
        assert!(clean.channel.is_infinite());
        let v = voi_direct(&p, &s, &NoiseSpec::noiseless(), 21.0).unwrap();
        assert_relative_eq!(v, clean.value(), max_relative = 1e-12);
        assert_relative_eq!(clean.latent, voi_markov(&p, 19.0, 21.0).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn hmm_terms_match_chain_rule() {
        let p = params();
        let s = standard_schedule();
        let noise = NoiseSpec::UniformGamma(1.5);
        let general = bound_general(&p, &s, &noise, 21.0).unwrap();
        let hmm = bound_hmm_terms(&p, &s, &noise, 21.0).unwrap();
        assert_relative_eq!(hmm.latent, general.latent, max_relative = 1e-9);
        assert_relative_eq!(hmm.channel, general.channel, max_relative = 1e-9);
        // numpy slogdet oracle: 3.6136557350714, local 3.0187313747040
        assert_relative_eq!(general.channel, 3.613_655_735_071_4, max_relative = 1e-11);
        let local = local_channel_sum(&p, &s, &noise).unwrap();
        assert_relative_eq!(local, 3.018_731_374_704, max_relative = 1e-11);

        let one = single(19.0);
        let g = NoiseSpec::Gammas(vec![1.5]);
        let h1 = bound_hmm_terms(&p, &one, &g, 21.0).unwrap();
        assert_relative_eq!(h1.latent, voi_markov(&p, 19.0, 21.0).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(h1.channel, v_agn(1.5).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn kappa_monotone_at_operating_point() {
        // mpmath: 0.32319, 0.25473, 0.15703, 0.06456
        let vals: Vec<f64> = [0.05, 0.1, 0.2, 0.4]
            .iter()
            .map(|&k| voi_single(&OuParams::centered(k, 10.0).unwrap(), 19.0, 1.5, 21.0).unwrap())
            .collect();
        assert_relative_eq!(vals[0], 0.323_190_359_805_481_13, max_relative = 1e-12);
        assert_relative_eq!(vals[3], 0.064_563_630_579_695_75, max_relative = 1e-12);
        assert!(vals.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn decreasing_between_receptions() {
        let p = params();
        let s = standard_schedule();
        let noise = NoiseSpec::UniformGamma(1.5);
        for i in 0..9 {
            let (lo, hi) = (RECEIVES[i], RECEIVES[i + 1]);
            let sub = s.slice(0..i + 1);
            let vals: Vec<f64> = (0..100)
                .map(|k| lo + (hi - lo) * k as f64 / 100.0)
                .map(|t| voi_direct(&p, &sub, &noise, t).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]), "interval {i}");
        }
    }

    fn scenario() -> impl Strategy<Value = (OuParams, UpdateSchedule, Vec<f64>, f64)> {
        (1usize..=6, 0.01f64..2.0, 0.5f64..20.0).prop_flat_map(|(n, kappa, sigma)| {
            (
                proptest::collection::vec((0.1f64..2.0, 0.05f64..1.0), n),
                proptest::collection::vec(0.05f64..50.0, n),
                0.05f64..1.5,
            )
                .prop_map(move |(gaps, gammas, tail)| {
                    let scale = 1.0 / kappa.max(0.2);
                    let mut s = Vec::new();
                    let mut r = Vec::new();
                    let mut t = 0.0;
                    for (gap, lag) in &gaps {
                        t += gap * scale;
                        s.push(t);
                        r.push(t + lag * gap * scale);
                    }
                    // Keep receptions ordered by making lags shorter than the next gap.
                    for i in 1..r.len() {
                        if r[i] <= r[i - 1] {
                            r[i] = r[i - 1] + 1e-3;
                        }
                        if r[i] <= s[i] {
                            r[i] = s[i] + 1e-3;
                        }
                    }
                    let t_eval = r[r.len() - 1] + tail * scale;
                    let p = OuParams::centered(kappa, sigma).unwrap();
                    (p, UpdateSchedule::new(s, r).unwrap(), gammas, t_eval)
                })
        })
    }

    proptest! {
        #[test]
        fn closed_vs_direct_and_bounds((p, s, gammas, t) in scenario()) {
            let noise = NoiseSpec::Gammas(gammas.clone());
            let d = voi_direct(&p, &s, &noise, t).unwrap();
            let c = voi_closed(&p, &s, &noise, t).unwrap();
            prop_assert!((c - d).abs() <= 1e-9 * d.abs() + 1e-13, "closed {} direct {}", c, d);
            let b = bound_general(&p, &s, &noise, t).unwrap();
            prop_assert!(d <= b.value() + BOUND_SLACK);
            let t_n = s.last_sample().unwrap();
            prop_assert!(voi_markov(&p, t_n, t).unwrap() - c >= -MI_SLACK);
            let local = local_channel_sum(&p, &s, &noise).unwrap();
            prop_assert!(local <= b.channel * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn more_observations_and_less_noise_help((p, s, gammas, t) in scenario(), bump in 1.01f64..10.0) {
            let n = s.len();
            let noise = NoiseSpec::Gammas(gammas.clone());
            let full = voi_direct(&p, &s, &noise, t).unwrap();
            if n > 1 {
                let fewer = voi_direct(&p, &s.slice(1..n), &noise.slice(1..n), t).unwrap();
                prop_assert!(full >= fewer - 1e-10);
            }
            let vars = noise.variances(&p, &s).unwrap();
            for i in 0..n {
                let mut noisier = vars.clone();
                noisier[i] *= bump;
                let v = voi_direct(&p, &s, &NoiseSpec::Variances(noisier), t).unwrap();
                prop_assert!(v <= full + 1e-10);
            }
        }

        #[test]
        fn single_observation_bound(kappa in 0.01f64..2.0, t_n in 0.1f64..30.0, dt in 0.01f64..10.0, gamma in 1e-3f64..1e3) {
            let p = OuParams::centered(kappa, 3.0).unwrap();
            let v = voi_single(&p, t_n, gamma, t_n + dt).unwrap();
            let b = bound_single(&p, t_n, gamma, t_n + dt).unwrap();
            prop_assert!(v >= -MI_SLACK);
            prop_assert!(v <= b + BOUND_SLACK);
        }
    }
}
