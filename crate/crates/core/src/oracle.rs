//! Problem interface: the smooth part `q` with its matrix-free curvature, the
//! nonsmooth part `h` with its proximal map, and a finite-difference
//! Hessian-vector product used as a fallback and as a test oracle.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Flat real vector. Matrix-valued variables are flattened column-major.
pub type Point = DVector<f64>;

/// Smooth part of the objective, accessed only through values, gradients and
/// Hessian-vector products.
pub trait SmoothOracle: Sync {
    fn dimension(&self) -> usize;

    fn value(&self, x: &Point) -> f64;

    fn gradient(&self, x: &Point) -> Point;

    /// Combined evaluation; override when value and gradient share work.
    fn value_and_gradient(&self, x: &Point) -> (f64, Point) {
        (self.value(x), self.gradient(x))
    }

    /// `∇²q(x)·w`.
    fn hvp(&self, x: &Point, w: &Point) -> Point;
}

/// Nonsmooth part of the objective.
pub trait ProxOperator: Sync {
    /// `h(x)`; `f64::INFINITY` outside the domain of indicator functions.
    fn value(&self, x: &Point) -> f64;

    /// `argmin_u h(u) + ‖u − y‖² / (2τ)` for `τ > 0`.
    fn prox(&self, y: &Point, tau: f64) -> Point;
}

/// `h ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroProx;

impl ProxOperator for ZeroProx {
    fn value(&self, _x: &Point) -> f64 {
        0.0
    }

    fn prox(&self, y: &Point, _tau: f64) -> Point {
        y.clone()
    }
}

fn check_point(oracle: &dyn SmoothOracle, x: &Point) -> Result<()> {
    if x.len() != oracle.dimension() {
        return Err(Error::DimensionMismatch { expected: oracle.dimension(), got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("point"));
    }
    Ok(())
}

/// Checked `(q(x), ∇q(x))`.
pub fn evaluate(oracle: &dyn SmoothOracle, x: &Point) -> Result<(f64, Point)> {
    check_point(oracle, x)?;
    Ok(oracle.value_and_gradient(x))
}

/// Checked Hessian-vector product.
pub fn hvp(oracle: &dyn SmoothOracle, x: &Point, w: &Point) -> Result<Point> {
    check_point(oracle, x)?;
    if w.len() != oracle.dimension() {
        return Err(Error::DimensionMismatch { expected: oracle.dimension(), got: w.len() });
    }
    Ok(oracle.hvp(x, w))
}

/// Default central-difference step: `√ε_mach · (1 + ‖x‖) / max(‖w‖, 1)`.
pub fn default_fd_eps(x: &Point, w: &Point) -> f64 {
    f64::EPSILON.sqrt() * (1.0 + x.norm()) / w.norm().max(1.0)
}

/// Central difference `(∇q(x + εw) − ∇q(x − εw)) / 2ε`. Returns exactly zero
/// for `w = 0`.
pub fn fd_hvp(oracle: &dyn SmoothOracle, x: &Point, w: &Point, eps: Option<f64>) -> Result<Point> {
    check_point(oracle, x)?;
    if w.len() != oracle.dimension() {
        return Err(Error::DimensionMismatch { expected: oracle.dimension(), got: w.len() });
    }
    if w.iter().all(|&v| v == 0.0) {
        return Ok(Point::zeros(w.len()));
    }
    let eps = eps.unwrap_or_else(|| default_fd_eps(x, w));
    if !(eps > 0.0) {
        return Err(Error::ParameterDomain(format!("finite-difference step must be positive, got {eps}")));
    }
    let gp = oracle.gradient(&(x + w * eps));
    let gm = oracle.gradient(&(x - w * eps));
    Ok((gp - gm) / (2.0 * eps))
}

/// Oracle wrapper that counts Hessian-vector products.
pub struct CountingOracle<'a> {
    inner: &'a dyn SmoothOracle,
    hvps: Cell<usize>,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a dyn SmoothOracle) -> Self {
        Self { inner, hvps: Cell::new(0) }
    }

    pub fn hvp_count(&self) -> usize {
        self.hvps.get()
    }

    pub fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.inner.value(x)
    }

    pub fn value_and_gradient(&self, x: &Point) -> (f64, Point) {
        self.inner.value_and_gradient(x)
    }

    pub fn hvp(&self, x: &Point, w: &Point) -> Point {
        self.hvps.set(self.hvps.get() + 1);
        self.inner.hvp(x, w)
    }
}

/// `f = q + h` at `x`.
pub fn objective(oracle: &dyn SmoothOracle, prox: &dyn ProxOperator, x: &Point) -> f64 {
    let h = prox.value(x);
    if h.is_infinite() {
        return h;
    }
    oracle.value(x) + h
}

/// Diagonal quadratic `½ xᵀ diag(d) x`, handy for tests and small examples.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    pub diag: Point,
}

impl DiagonalQuadratic {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag: Point::from_vec(diag) }
    }
}

impl SmoothOracle for DiagonalQuadratic {
    fn dimension(&self) -> usize {
        self.diag.len()
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * x.iter().zip(self.diag.iter()).map(|(v, d)| d * v * v).sum::<f64>()
    }

    fn gradient(&self, x: &Point) -> Point {
        x.component_mul(&self.diag)
    }

    fn hvp(&self, _x: &Point, w: &Point) -> Point {
        w.component_mul(&self.diag)
    }
}

/// Dense quadratic `½ xᵀAx − bᵀx` with symmetric `A`.
#[derive(Debug, Clone)]
pub struct DenseQuadratic {
    pub a: DMatrix<f64>,
    pub b: Point,
}

impl DenseQuadratic {
    pub fn new(a: DMatrix<f64>, b: Point) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(Error::InvalidInput("quadratic matrix is not symmetric".into()));
        }
        Ok(Self { a, b })
    }
}

impl SmoothOracle for DenseQuadratic {
    fn dimension(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        &self.a * x - &self.b
    }

    fn hvp(&self, _x: &Point, w: &Point) -> Point {
        &self.a * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Cubic;

    impl SmoothOracle for Cubic {
        fn dimension(&self) -> usize {
            1
        }
        fn value(&self, x: &Point) -> f64 {
            x[0].powi(3)
        }
        fn gradient(&self, x: &Point) -> Point {
            Point::from_element(1, 3.0 * x[0] * x[0])
        }
        fn hvp(&self, x: &Point, w: &Point) -> Point {
            Point::from_element(1, 6.0 * x[0] * w[0])
        }
    }

    fn half_norm(n: usize) -> DiagonalQuadratic {
        DiagonalQuadratic::new(vec![1.0; n])
    }

    #[test]
    fn evaluate_half_squared_norm() {
        let q = half_norm(2);
        let (v, g) = evaluate(&q, &Point::from_vec(vec![3.0, 4.0])).unwrap();
        assert_eq!(v, 12.5);
        assert_eq!(g, Point::from_vec(vec![3.0, 4.0]));
        let (v, g) = evaluate(&q, &Point::zeros(2)).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, Point::zeros(2));
    }

    #[test]
    fn evaluate_rejects_bad_points() {
        let q = half_norm(2);
        assert_eq!(
            evaluate(&q, &Point::zeros(3)).unwrap_err(),
            Error::DimensionMismatch { expected: 2, got: 3 }
        );
        assert!(evaluate(&q, &Point::from_vec(vec![f64::NAN, 0.0])).is_err());
    }

    #[test]
    fn hvp_of_diagonal_quadratic() {
        let q = DiagonalQuadratic::new(vec![1.0, 2.0]);
        let x = Point::from_vec(vec![-0.3, 7.0]);
        let hw = hvp(&q, &x, &Point::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(hw, Point::from_vec(vec![1.0, 2.0]));
        assert_eq!(hvp(&q, &x, &Point::zeros(2)).unwrap(), Point::zeros(2));
    }

    #[test]
    fn fd_hvp_on_quadratic_and_zero_direction() {
        let q = half_norm(2);
        let x = Point::from_vec(vec![1.5, -2.0]);
        let hw = fd_hvp(&q, &x, &Point::from_vec(vec![2.0, 0.0]), None).unwrap();
        assert!((hw[0] - 2.0).abs() < 1e-8 && hw[1].abs() < 1e-8);
        let zero = fd_hvp(&q, &x, &Point::zeros(2), None).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fd_hvp_on_cubic() {
        // q''(1) = 6
        let hw = fd_hvp(&Cubic, &Point::from_element(1, 1.0), &Point::from_element(1, 1.0), Some(1e-4)).unwrap();
        assert!((hw[0] - 6.0).abs() < 1e-6, "{}", hw[0]);
    }

    #[test]
    fn counting_oracle_counts() {
        let q = half_norm(3);
        let c = CountingOracle::new(&q);
        let x = Point::zeros(3);
        c.hvp(&x, &x);
        c.hvp(&x, &x);
        assert_eq!(c.hvp_count(), 2);
    }
}
