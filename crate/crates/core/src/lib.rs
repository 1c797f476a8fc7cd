//! Value of Information for Ornstein–Uhlenbeck hidden Markov models.
//!
//! A status-update source samples a latent OU process at times `tᵢ`; the
//! destination receives noisy copies `Y_{t'ᵢ} = X_{tᵢ} + N_{t'ᵢ}` at `t'ᵢ`. The
//! value of information at time `t` is the mutual information between the
//! current state `X_t` and everything received so far.
//!
//! ```
//! use latent_voi::{voi_closed, voi_direct, NoiseSpec, OuParams, UpdateSchedule};
//!
//! let params = OuParams::centered(0.15, 10.0)?;
//! let schedule = UpdateSchedule::new(vec![1.0, 3.0], vec![2.0, 4.2])?;
//! let noise = NoiseSpec::UniformGamma(1.5);
//!
//! let reference = voi_direct(&params, &schedule, &noise, 5.0)?;
//! let fast = voi_closed(&params, &schedule, &noise, 5.0)?;
//! assert!((reference - fast).abs() < 1e-12);
//! # Ok::<(), latent_voi::VoiError>(())
//! ```
//!
//! The guide in `book/` walks through the model, the formulas and the
//! experiment CLI; its code listings run as doctests of this crate.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aoi;
pub mod error;
pub mod figures;
pub mod gaussian_info;
pub mod matrix;
pub mod mc;
pub mod ou_model;
pub mod scenario;
pub mod trace;
pub mod verify;
pub mod voi;

pub use aoi::{aoi_at, AoiPoint};
pub use error::{Result, VoiError};
pub use gaussian_info::{
    gaussian_cond_mi, gaussian_mi, log_det_pd, schur_condition, Cholesky, IndexSplit, Jitter,
};
pub use matrix::CovMatrix;
pub use mc::{estimate_voi, sample_joint, MiEstimate, SeedSpec};
pub use ou_model::{joint_cov, sigma_n, sigma_x, NoiseSpec, OuParams, Reception, UpdateSchedule};
pub use voi::{
    bound_general, bound_hmm_terms, bound_single, v_agn, voi_closed, voi_direct, voi_markov,
    voi_single, voi_single_asymptotic, BoundSide, BoundTerms, VoiPoint,
};
pub use figures::{reproduce_figure, Figure, FigureSet};
pub use scenario::{parse_scenario, Grid, Mode, Scenario, Units};
pub use trace::{run_trace, write_csv, TraceRow, VoiTrace};
pub use verify::{verify, CheckStatus, VerifyOptions, VerifyReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ou-model.md")]
    mod ou_model {}
    #[doc = include_str!("../../../book/src/gaussian-information.md")]
    mod gaussian_information {}
    #[doc = include_str!("../../../book/src/value-of-information.md")]
    mod value_of_information {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/age-of-information.md")]
    mod age_of_information {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
