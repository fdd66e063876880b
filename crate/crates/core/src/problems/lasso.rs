//! `½‖Ax − b‖² + λ‖x‖₁`, the convex sanity problem.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};

use super::seeded_rng;
use crate::error::{Error, Result};
use crate::oracle::{Point, SmoothOracle};
use crate::prox::L1Norm;

#[derive(Debug, Clone)]
pub struct LassoOracle {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LassoOracle {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    fn residual(&self, x: &Point) -> DVector<f64> {
        &self.a * x - &self.b
    }
}

impl SmoothOracle for LassoOracle {
    fn dimension(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }

    fn gradient(&self, x: &Point) -> Point {
        self.a.tr_mul(&self.residual(x))
    }

    fn value_and_gradient(&self, x: &Point) -> (f64, Point) {
        let r = self.residual(x);
        (0.5 * r.norm_squared(), self.a.tr_mul(&r))
    }

    fn hvp(&self, _x: &Point, w: &Point) -> Point {
        self.a.tr_mul(&(&self.a * w))
    }
}

pub struct LassoInstance {
    pub oracle: LassoOracle,
    pub prox: L1Norm,
    /// Planted coefficients for synthetic instances.
    pub x_true: Option<Point>,
}

impl LassoInstance {
    pub fn initial_point(&self) -> Point {
        Point::zeros(self.oracle.dimension())
    }
}

pub fn make_lasso(a: DMatrix<f64>, b: DVector<f64>, lambda: f64) -> Result<LassoInstance> {
    if !(lambda >= 0.0) {
        return Err(Error::ParameterDomain(format!("lasso lambda must be nonnegative, got {lambda}")));
    }
    if a.nrows() != b.len() || a.ncols() == 0 {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    Ok(LassoInstance { oracle: LassoOracle { a, b }, prox: L1Norm { lambda }, x_true: None })
}

fn random_orthogonal(n: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

/// Square `A = U Σ Vᵀ` with `AᵀA` eigenvalues spaced geometrically in
/// `[1, condition]`, a planted vector with `round(0.6 n)` Gaussian nonzeros,
/// `b = A x_true + 0.01·noise`, and `λ = lambda_rel · ‖Aᵀb‖_∞`.
pub fn synthetic_lasso(n: usize, condition: f64, lambda_rel: f64, seed: u64) -> Result<LassoInstance> {
    if n == 0 || !(condition >= 1.0) {
        return Err(Error::InvalidInput(format!("need n >= 1 and condition >= 1, got n={n}, condition={condition}")));
    }
    let mut rng = seeded_rng(seed);
    let u = random_orthogonal(n, &mut rng);
    let v = random_orthogonal(n, &mut rng);
    let sigma = DVector::from_fn(n, |i, _| {
        let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        condition.powf(t).sqrt()
    });
    let a = u * DMatrix::from_diagonal(&sigma) * v.transpose();
    let mut x_true = Point::zeros(n);
    let nnz = ((0.6 * n as f64).round() as usize).clamp(1, n);
    for i in sample(&mut rng, n, nnz).into_iter() {
        x_true[i] = StandardNormal.sample(&mut rng);
    }
    let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let b = &a * &x_true + noise * 0.01;
    let lambda = lambda_rel * a.tr_mul(&b).amax();
    let mut inst = make_lasso(a, b, lambda)?;
    inst.x_true = Some(x_true);
    Ok(inst)
}
