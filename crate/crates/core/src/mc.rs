//! Monte Carlo oracle: exact OU path sampling and a plug-in Gaussian MI
//! estimator.
//!
//! Paths are drawn from the exact Gaussian transition law, so the only error
//! is sampling error. Work is split into [`BATCHES`] replicates; replicate `b`
//! draws from ChaCha stream `b` keyed by the master seed, which makes every
//! sample independent of how many threads run the batches.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, VoiError};
use crate::gaussian_info::{gaussian_mi, IndexSplit};
use crate::matrix::CovMatrix;
use crate::ou_model::{NoiseSpec, OuParams, UpdateSchedule};

/// Number of replicates (batches) per draw.
pub const BATCHES: usize = 20;

/// Master seed; replicate `k` uses ChaCha stream `k` under this key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    pub fn replicate_rng(&self, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(replicate);
        rng
    }
}

/// A Monte Carlo mutual-information estimate in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub value: f64,
    /// Batch-means standard error over [`BATCHES`] replicates.
    pub std_error: f64,
    pub n_samples: usize,
}

impl MiEstimate {
    /// `|value − reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let dev = (self.value - reference).abs();
        if self.std_error > 0.0 {
            dev / self.std_error
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// One exact transition of the latent chain.
#[derive(Debug, Clone, Copy)]
struct Step {
    decay: f64,
    shift: f64,
    sd: f64,
}

/// Draws rows `(Y_{t'₁}, …, Y_{t'ₙ}[, X_t])`.
#[derive(Debug, Clone)]
struct PathSampler {
    x0: f64,
    steps: Vec<Step>,
    noise_sd: Vec<f64>,
    /// Model mean of each output column; used to center the running sums.
    mean: Vec<f64>,
}

impl PathSampler {
    fn new(params: &OuParams, times: &[f64], noise_var: &[f64], t: Option<f64>) -> Result<Self> {
        let mut latent: Vec<f64> = times.to_vec();
        latent.extend(t);
        let mut steps = Vec::with_capacity(latent.len());
        let mut prev = 0.0;
        for &ti in &latent {
            let decay = (-params.kappa() * (ti - prev)).exp();
            steps.push(Step {
                decay,
                shift: params.theta() * (1.0 - decay),
                sd: params.cond_var(prev, ti)?.sqrt(),
            });
            prev = ti;
        }
        Ok(PathSampler {
            x0: params.x0(),
            steps,
            noise_sd: noise_var.iter().map(|v| v.sqrt()).collect(),
            mean: latent.iter().map(|&ti| params.mean_at(ti)).collect(),
        })
    }

    fn width(&self) -> usize {
        self.steps.len()
    }

    fn draw(&self, rng: &mut ChaCha8Rng, row: &mut [f64]) {
        let mut x = self.x0;
        for (i, step) in self.steps.iter().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            x = step.shift + step.decay * x + step.sd * z;
            row[i] = x;
        }
        for (slot, &sd) in row.iter_mut().zip(&self.noise_sd) {
            if sd > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                *slot += sd * z;
            }
        }
    }
}

fn batch_bounds(k: usize, b: usize) -> (usize, usize) {
    (b * k / BATCHES, (b + 1) * k / BATCHES)
}

/// Running first and second moments about a fixed centre.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    centre: Vec<f64>,
    count: usize,
    sum: Vec<f64>,
    /// Row-major upper triangle of `Σ (x − c)(x − c)ᵀ`.
    cross: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(centre: Vec<f64>) -> Self {
        let d = centre.len();
        MomentAccumulator {
            centre,
            count: 0,
            sum: vec![0.0; d],
            cross: vec![0.0; d * (d + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.centre.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, row: &[f64]) {
        let d = self.dim();
        let mut idx = 0;
        for i in 0..d {
            let xi = row[i] - self.centre[i];
            self.sum[i] += xi;
            for j in i..d {
                self.cross[idx] += xi * (row[j] - self.centre[j]);
                idx += 1;
            }
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        debug_assert_eq!(self.centre, other.centre);
        self.count += other.count;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.cross.iter_mut().zip(&other.cross).for_each(|(a, b)| *a += b);
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum.iter().zip(&self.centre).map(|(s, c)| c + s / n).collect()
    }

    /// Unbiased sample covariance; needs at least two rows.
    pub fn covariance(&self) -> Result<CovMatrix> {
        if self.count < 2 {
            return Err(VoiError::domain("sample covariance needs at least 2 rows"));
        }
        let n = self.count as f64;
        let d = self.dim();
        let offset = |i: usize, j: usize| i * d - i * (i + 1) / 2 + j;
        Ok(CovMatrix::from_fn(d, |i, j| {
            (self.cross[offset(i, j)] - self.sum[i] * self.sum[j] / n) / (n - 1.0)
        }))
    }
}

/// Sample mean and covariance of a streamed draw.
#[derive(Debug, Clone)]
pub struct SampleMoments {
    pub mean: Vec<f64>,
    pub cov: CovMatrix,
    pub n_samples: usize,
}

fn check_time(schedule: &UpdateSchedule, t: f64) -> Result<()> {
    match schedule.last_sample() {
        Some(t_n) if !(t > t_n) => Err(VoiError::domain(format!(
            "evaluation time {t} must exceed the last sampling time {t_n}"
        ))),
        None if !(t > 0.0) => Err(VoiError::domain(format!("evaluation time {t} must be > 0"))),
        _ => Ok(()),
    }
}

fn joint_sampler(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
) -> Result<PathSampler> {
    check_time(schedule, t)?;
    let noise_var = noise.variances(params, schedule)?;
    PathSampler::new(params, schedule.sample_times(), &noise_var, Some(t))
}

/// `k` exact draws of `(Y_{t'₁}, …, Y_{t'ₙ}, X_t)`, one row each.
pub fn sample_joint(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
    seed: SeedSpec,
    k: usize,
) -> Result<DMatrix<f64>> {
    let sampler = joint_sampler(params, schedule, noise, t)?;
    let width = sampler.width();
    let chunks: Vec<Vec<f64>> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = batch_bounds(k, b);
            let mut rng = seed.replicate_rng(b as u64);
            let mut data = vec![0.0; (hi - lo) * width];
            for row in data.chunks_exact_mut(width) {
                sampler.draw(&mut rng, row);
            }
            data
        })
        .collect();
    Ok(DMatrix::from_row_slice(k, width, &chunks.concat()))
}

fn batch_moments(sampler: &PathSampler, seed: SeedSpec, k: usize) -> Vec<MomentAccumulator> {
    (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = batch_bounds(k, b);
            let mut rng = seed.replicate_rng(b as u64);
            let mut acc = MomentAccumulator::new(sampler.mean.clone());
            let mut row = vec![0.0; sampler.width()];
            for _ in lo..hi {
                sampler.draw(&mut rng, &mut row);
                acc.push(&row);
            }
            acc
        })
        .collect()
}

fn merge_all(batches: &[MomentAccumulator]) -> MomentAccumulator {
    let mut total = MomentAccumulator::new(batches[0].centre.clone());
    for b in batches {
        total.merge(b);
    }
    total
}

fn moments_of(total: &MomentAccumulator) -> Result<SampleMoments> {
    Ok(SampleMoments {
        mean: total.mean(),
        cov: total.covariance()?,
        n_samples: total.count(),
    })
}

/// Streaming moments of `k` joint draws; same samples as [`sample_joint`]
/// without materializing them.
pub fn sample_moments(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
    seed: SeedSpec,
    k: usize,
) -> Result<SampleMoments> {
    let sampler = joint_sampler(params, schedule, noise, t)?;
    moments_of(&merge_all(&batch_moments(&sampler, seed, k)))
}

/// Streaming moments of `k` latent paths `(X_{t₁}, …, X_{tₙ})`.
pub fn sample_latent_moments(
    params: &OuParams,
    times: &[f64],
    seed: SeedSpec,
    k: usize,
) -> Result<SampleMoments> {
    crate::ou_model::sigma_x(params, times)?;
    let sampler = PathSampler::new(params, times, &[], None)?;
    moments_of(&merge_all(&batch_moments(&sampler, seed, k)))
}

/// Unbiased covariance of the rows of a sample matrix.
pub fn empirical_cov(rows: &DMatrix<f64>) -> Result<CovMatrix> {
    let centre = if rows.nrows() > 0 {
        rows.row_mean().iter().copied().collect()
    } else {
        vec![0.0; rows.ncols()]
    };
    let mut acc = MomentAccumulator::new(centre);
    let mut row = vec![0.0; rows.ncols()];
    for r in rows.row_iter() {
        row.iter_mut().zip(r.iter()).for_each(|(d, s)| *d = *s);
        acc.push(&row);
    }
    acc.covariance()
}

/// Plug-in estimate of `I(X_t; Y)`: the Gaussian MI formula applied to the
/// sample covariance of `k` joint draws, with a batch-means standard error.
///
/// Needs `k >= 10 (n+1)²` and at least `n + 3` rows per batch.
pub fn estimate_voi(
    params: &OuParams,
    schedule: &UpdateSchedule,
    noise: &NoiseSpec,
    t: f64,
    seed: SeedSpec,
    k: usize,
) -> Result<MiEstimate> {
    let n = schedule.len();
    let sampler = joint_sampler(params, schedule, noise, t)?;
    if n == 0 {
        return Ok(MiEstimate {
            value: 0.0,
            std_error: 0.0,
            n_samples: k,
        });
    }
    let needed = (10 * (n + 1) * (n + 1)).max(BATCHES * (n + 3));
    if k < needed {
        return Err(VoiError::domain(format!(
            "estimate_voi needs at least {needed} samples for {n} observations, got {k}"
        )));
    }
    let split = IndexSplit::pair(vec![n], (0..n).collect())?;
    let batches = batch_moments(&sampler, seed, k);
    let per_batch = batches
        .iter()
        .map(|acc| gaussian_mi(&acc.covariance()?, &split))
        .collect::<Result<Vec<f64>>>()?;
    let value = gaussian_mi(&merge_all(&batches).covariance()?, &split)?;

    let b = per_batch.len() as f64;
    let mean = per_batch.iter().sum::<f64>() / b;
    let var = per_batch.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Ok(MiEstimate {
        value,
        std_error: (var / b).sqrt(),
        n_samples: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou_model::joint_cov;

    fn params() -> OuParams {
        OuParams::centered(0.15, 10.0).unwrap()
    }

    fn one_obs() -> UpdateSchedule {
        UpdateSchedule::new(vec![19.0], vec![20.5]).unwrap()
    }

    #[test]
    fn zero_rows() {
        let m = sample_joint(&params(), &one_obs(), &NoiseSpec::UniformGamma(1.5), 21.0, SeedSpec::new(1), 0).unwrap();
        assert_eq!(m.nrows(), 0);
        assert_eq!(m.ncols(), 2);
    }

    #[test]
    fn tiny_sigma_follows_mean_path() {
        let p = OuParams::new(0.3, 2.0, 1e-12, 9.0).unwrap();
        let s = UpdateSchedule::new(vec![1.0, 2.0], vec![1.5, 2.5]).unwrap();
        let m = sample_joint(&p, &s, &NoiseSpec::noiseless(), 4.0, SeedSpec::new(3), 50).unwrap();
        for r in 0..m.nrows() {
            for (c, &t) in [1.0, 2.0, 4.0].iter().enumerate() {
                assert!((m[(r, c)] - p.mean_at(t)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn seed_determinism_independent_of_threads() {
        let p = params();
        let s = one_obs();
        let noise = NoiseSpec::UniformGamma(1.5);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_joint(&p, &s, &noise, 21.0, SeedSpec::new(42), 1003).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
        let c = sample_joint(&p, &s, &noise, 21.0, SeedSpec::new(43), 1003).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn streaming_matches_materialized() {
        let p = params();
        let s = one_obs();
        let noise = NoiseSpec::UniformGamma(1.5);
        let rows = sample_joint(&p, &s, &noise, 21.0, SeedSpec::new(5), 4000).unwrap();
        let direct = empirical_cov(&rows).unwrap();
        let streamed = sample_moments(&p, &s, &noise, 21.0, SeedSpec::new(5), 4000).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((direct.get(i, j) - streamed.cov.get(i, j)).abs() < 1e-9 * direct.get(i, i));
            }
        }
    }

    #[test]
    fn joint_covariance_within_four_standard_errors() {
        let p = params();
        let s = UpdateSchedule::new(
            vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0, 17.0, 19.0],
            vec![2.0, 4.2, 6.5, 8.0, 10.7, 12.1, 14.7, 16.2, 18.3, 20.5],
        )
        .unwrap();
        let noise = NoiseSpec::UniformGamma(1.5);
        let k = 1_000_000;
        let m = sample_moments(&p, &s, &noise, 21.0, SeedSpec::new(2024), k).unwrap();
        let truth = joint_cov(&p, &s, &noise, 21.0).unwrap();
        for i in 0..11 {
            for j in i..11 {
                let c = truth.get(i, j);
                // Var of a Gaussian sample covariance: (σ_ii σ_jj + σ_ij²)/k.
                let se = ((truth.get(i, i) * truth.get(j, j) + c * c) / k as f64).sqrt();
                let dev = (m.cov.get(i, j) - c).abs();
                assert!(dev < 4.0 * se, "({i},{j}) dev {dev} se {se}");
            }
        }
    }

    #[test]
    fn vanishing_gamma_gives_no_information() {
        let p = params();
        let est = estimate_voi(&p, &one_obs(), &NoiseSpec::UniformGamma(1e-6), 21.0, SeedSpec::new(8), 200_000).unwrap();
        assert!(est.value.abs() <= 3.0 * est.std_error + 1e-5, "{est:?}");
    }

    #[test]
    fn too_few_samples_rejected() {
        let p = params();
        assert!(estimate_voi(&p, &one_obs(), &NoiseSpec::UniformGamma(1.5), 21.0, SeedSpec::new(8), 30).is_err());
        let none = estimate_voi(&p, &UpdateSchedule::empty(), &NoiseSpec::Gammas(vec![]), 21.0, SeedSpec::new(8), 10).unwrap();
        assert_eq!(none.value, 0.0);
    }
}
