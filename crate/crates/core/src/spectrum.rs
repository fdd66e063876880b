//! Lanczos tridiagonal assembled from CG coefficients and its largest Ritz value.
//!
//! After `j` CG steps with coefficients `α⁰..α^{j−1}` and `β¹..β^{j−1}` the
//! symmetric tridiagonal has
//!
//! ```text
//! diag[0] = 1/α⁰
//! diag[l] = 1/α^l + β^l/α^{l−1}           l = 1..j−1
//! off[l]  = √β^{l+1} / α^l                l = 0..j−2
//! ```
//!
//! (zero-based), and its eigenvalues are the Ritz values of the Hessian on the
//! Krylov space explored by CG.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidInput(format!(
                "tridiagonal needs n >= 1 diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                offdiag.len()
            )));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.order();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count from the signs
    /// of the `LDLᵀ` pivots of `T − xI`).
    pub fn count_below(&self, x: f64) -> usize {
        let scale = self
            .diag
            .iter()
            .chain(self.offdiag.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let pivmin = f64::EPSILON * f64::EPSILON * scale;
        let mut count = 0;
        let mut pivot = self.diag[0] - x;
        for i in 0..self.order() {
            if i > 0 {
                let b = self.offdiag[i - 1];
                pivot = (self.diag[i] - x) - b * b / pivot;
            }
            if pivot.abs() < pivmin {
                pivot = -pivmin;
            }
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }
}

/// Ritz estimate produced after `j` CG steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RitzEstimate {
    pub theta_max: f64,
    pub j: usize,
}

/// Assembles the tridiagonal from CG step lengths `alphas` (`α⁰..α^{j−1}`) and
/// ratios `betas` (`β¹..β^{j−1}`).
pub fn build_tridiagonal(alphas: &[f64], betas: &[f64]) -> Result<TridiagonalMatrix> {
    let j = alphas.len();
    if j == 0 {
        return Err(Error::InvalidCoefficient("at least one CG step is required".into()));
    }
    if betas.len() + 1 != j {
        return Err(Error::InvalidCoefficient(format!("expected {} betas, got {}", j - 1, betas.len())));
    }
    if let Some(&a) = alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::NegativeCurvature(a));
    }
    if let Some(&b) = betas.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
        return Err(Error::InvalidCoefficient(format!("beta must be nonnegative, got {b}")));
    }
    let mut diag = Vec::with_capacity(j);
    diag.push(1.0 / alphas[0]);
    for l in 1..j {
        diag.push(1.0 / alphas[l] + betas[l - 1] / alphas[l - 1]);
    }
    let offdiag = (0..j - 1).map(|l| betas[l].sqrt() / alphas[l]).collect();
    Ok(TridiagonalMatrix { diag, offdiag })
}

/// Largest eigenvalue by bisection on the Sturm count, O(j) memory.
pub fn max_eigenvalue(t: &TridiagonalMatrix) -> f64 {
    let n = t.order();
    if n == 1 {
        return t.diag[0];
    }
    let (glo, ghi) = t.gershgorin_bounds();
    let norm = glo.abs().max(ghi.abs());
    let floor = norm * f64::EPSILON;
    let mut lo = glo - floor;
    let mut hi = ghi + floor;
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t.count_below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + floor {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `δ / |θ|`.
pub fn stepsize_from_ritz(theta: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::ParameterDomain(format!("delta must lie in (0, 1], got {delta}")));
    }
    if theta == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(delta / theta.abs())
}
