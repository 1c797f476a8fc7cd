//! Information measures for jointly Gaussian vectors.
//!
//! Everything is in nats. Kernels factor covariance blocks with a plain
//! Cholesky decomposition; an indefinite block is an error, never silently
//! regularized. [`Jitter`] adds a diagonal shift only when asked.

use nalgebra::DMatrix;

use crate::error::{Result, VoiError};
use crate::matrix::CovMatrix;

/// Diagonal regularization applied before factoring.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Jitter {
    #[default]
    None,
    /// Adds `rel * max(diag)` to every diagonal entry.
    Relative(f64),
}

impl Jitter {
    /// The opt-in default shift, `1e-10` relative.
    pub const DEFAULT_RELATIVE: Jitter = Jitter::Relative(1e-10);
}

/// Lower-triangular Cholesky factor `L` with `LLᵀ = Σ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DMatrix<f64>,
}

impl Cholesky {
    pub fn factor(m: &CovMatrix) -> Result<Self> {
        Self::factor_with(m, Jitter::None)
    }

    /// Fails with [`VoiError::NotPositiveDefinite`] at the first pivot that is
    /// not positive relative to its diagonal entry.
    pub fn factor_with(m: &CovMatrix, jitter: Jitter) -> Result<Self> {
        let n = m.dim();
        let a = m.as_matrix();
        let shift = match jitter {
            Jitter::None => 0.0,
            Jitter::Relative(rel) => {
                rel * (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max)
            }
        };
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let ajj = a[(j, j)] + shift;
            let mut d = ajj;
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > f64::EPSILON * ajj.abs()) || !d.is_finite() {
                return Err(VoiError::NotPositiveDefinite { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// `ln det` of the leading `k×k` block; pivots are shared with the full factor.
    pub fn log_det_leading(&self, k: usize) -> f64 {
        (0..k).map(|i| self.lower[(i, i)].ln()).sum::<f64>() * 2.0
    }

    /// `ln det` of the Schur complement of the leading `k×k` block.
    pub fn log_det_trailing(&self, k: usize) -> f64 {
        (k..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>() * 2.0
    }

    pub fn log_det(&self) -> f64 {
        self.log_det_leading(self.dim())
    }

    /// Solves `L y = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let l = &self.lower;
        for i in 0..b.len() {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * b[k];
            }
            b[i] = s / l[(i, i)];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_solve(&self, y: &mut [f64]) {
        let l = &self.lower;
        for i in (0..y.len()).rev() {
            let mut s = y[i];
            for k in (i + 1)..y.len() {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
    }

    /// Solves `Σ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_solve(&mut x);
        self.backward_solve(&mut x);
        x
    }

    /// `Σ⁻¹`, column by column.
    pub fn inverse(&self) -> CovMatrix {
        let n = self.dim();
        let mut inv = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        CovMatrix::from_fn(n, |i, j| 0.5 * (inv[(i, j)] + inv[(j, i)]))
    }
}

/// Natural-log determinant of a positive-definite matrix. The empty matrix has
/// determinant 1.
pub fn log_det_pd(m: &CovMatrix) -> Result<f64> {
    log_det_pd_with(m, Jitter::None)
}

pub fn log_det_pd_with(m: &CovMatrix, jitter: Jitter) -> Result<f64> {
    Ok(Cholesky::factor_with(m, jitter)?.log_det())
}

/// Index sets selecting the `A`, `B` and conditioning `C` blocks of a joint
/// covariance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSplit {
    set_a: Vec<usize>,
    set_b: Vec<usize>,
    set_c: Vec<usize>,
}

impl IndexSplit {
    /// Sets must be pairwise disjoint and free of duplicates.
    pub fn new(set_a: Vec<usize>, set_b: Vec<usize>, set_c: Vec<usize>) -> Result<Self> {
        let mut all: Vec<usize> = set_a.iter().chain(&set_b).chain(&set_c).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(VoiError::domain(
                "index sets must be disjoint and free of duplicates",
            ));
        }
        Ok(IndexSplit { set_a, set_b, set_c })
    }

    /// `I(A; B)` split with no conditioning set.
    pub fn pair(set_a: Vec<usize>, set_b: Vec<usize>) -> Result<Self> {
        Self::new(set_a, set_b, Vec::new())
    }

    pub fn set_a(&self) -> &[usize] {
        &self.set_a
    }
    pub fn set_b(&self) -> &[usize] {
        &self.set_b
    }
    pub fn set_c(&self) -> &[usize] {
        &self.set_c
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self
            .set_a
            .iter()
            .chain(&self.set_b)
            .chain(&self.set_c)
            .find(|&&i| i >= dim)
        {
            Some(i) => Err(VoiError::domain(format!(
                "index {i} out of range for a {dim}x{dim} covariance"
            ))),
            None => Ok(()),
        }
    }
}

/// `I(A; B) = ½(ln det Σ_AA + ln det Σ_BB − ln det Σ_{AB,AB})`.
///
/// The joint block is factored with the larger set leading, so the leading
/// pivots give `ln det` of that marginal and the trailing pivots give the
/// conditional block directly: the difference never cancels.
pub fn gaussian_mi(joint: &CovMatrix, split: &IndexSplit) -> Result<f64> {
    gaussian_mi_with(joint, split, Jitter::None)
}

pub fn gaussian_mi_with(joint: &CovMatrix, split: &IndexSplit, jitter: Jitter) -> Result<f64> {
    if !split.set_c.is_empty() {
        return Err(VoiError::domain(
            "gaussian_mi takes no conditioning set; use gaussian_cond_mi",
        ));
    }
    split.check_dim(joint.dim())?;
    pair_mi(joint, &split.set_a, &split.set_b, jitter)
}

fn pair_mi(joint: &CovMatrix, a: &[usize], b: &[usize], jitter: Jitter) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let (lead, trail) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let order: Vec<usize> = lead.iter().chain(trail).copied().collect();
    let chol = Cholesky::factor_with(&joint.select(&order), jitter)?;
    let marginal = log_det_pd_with(&joint.select(trail), jitter)?;
    Ok(0.5 * (marginal - chol.log_det_trailing(lead.len())))
}

/// `Σ_keep − Σ_{keep,given} Σ_given⁻¹ Σ_{given,keep}`.
///
/// A non-positive-definite `given` block reports the pivot as an index into
/// the original matrix.
pub fn schur_condition(m: &CovMatrix, keep: &[usize], given: &[usize]) -> Result<CovMatrix> {
    schur_condition_with(m, keep, given, Jitter::None)
}

pub fn schur_condition_with(
    m: &CovMatrix,
    keep: &[usize],
    given: &[usize],
    jitter: Jitter,
) -> Result<CovMatrix> {
    IndexSplit::pair(keep.to_vec(), given.to_vec())?.check_dim(m.dim())?;
    let base = m.select(keep);
    if given.is_empty() {
        return Ok(base);
    }
    let chol = Cholesky::factor_with(&m.select(given), jitter).map_err(|e| match e {
        VoiError::NotPositiveDefinite { pivot, value } => VoiError::NotPositiveDefinite {
            pivot: given[pivot],
            value,
        },
        other => other,
    })?;
    // W = L⁻¹ Σ_{given,keep}; the correction is WᵀW.
    let w: Vec<Vec<f64>> = keep
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = given.iter().map(|&g| m.get(g, k)).collect();
            chol.forward_solve(&mut col);
            col
        })
        .collect();
    Ok(CovMatrix::from_fn(keep.len(), |i, j| {
        base.get(i, j) - w[i].iter().zip(&w[j]).map(|(x, y)| x * y).sum::<f64>()
    }))
}

/// `I(A; B | C)`: condition the joint on `C` by Schur complement, then apply
/// [`gaussian_mi`] to the conditional covariance of `A ∪ B`.
pub fn gaussian_cond_mi(joint: &CovMatrix, split: &IndexSplit) -> Result<f64> {
    split.check_dim(joint.dim())?;
    if split.set_c.is_empty() {
        return gaussian_mi(joint, split);
    }
    let keep: Vec<usize> = split.set_a.iter().chain(&split.set_b).copied().collect();
    let cond = schur_condition(joint, &keep, &split.set_c)?;
    let na = split.set_a.len();
    let a: Vec<usize> = (0..na).collect();
    let b: Vec<usize> = (na..keep.len()).collect();
    pair_mi(&cond, &a, &b, Jitter::None)
}
