//! Proximal operators and penalty values for the regularizers used by the
//! solvers and the experiment suites.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::oracle::{Point, ProxOperator};

/// SCAD penalty parameters (`λ > 0`, `a > 2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScadParams {
    pub lambda: f64,
    pub a: f64,
}

impl ScadParams {
    pub fn new(lambda: f64, a: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::ParameterDomain(format!("SCAD lambda must be positive, got {lambda}")));
        }
        if !(a > 2.0) || !a.is_finite() {
            return Err(Error::ParameterDomain(format!("SCAD a must exceed 2, got {a}")));
        }
        Ok(Self { lambda, a })
    }

    /// Lower threshold `λ(a − 1 − τ + aτ)/(a − 1)`, which simplifies to `λ(1 + τ)`.
    pub fn lower_threshold(&self, tau: f64) -> f64 {
        self.lambda * (self.a - 1.0 - tau + self.a * tau) / (self.a - 1.0)
    }

    /// Upper threshold `aλ`.
    pub fn upper_threshold(&self) -> f64 {
        self.a * self.lambda
    }

    /// Scalar penalty `p(|t|)`.
    pub fn penalty(&self, t: f64) -> f64 {
        let t = t.abs();
        let (l, a) = (self.lambda, self.a);
        if t <= l {
            l * t
        } else if t <= a * l {
            (2.0 * a * l * t - t * t - l * l) / (2.0 * (a - 1.0))
        } else {
            l * l * (a + 1.0) / 2.0
        }
    }
}

/// Sum of componentwise SCAD penalties.
pub fn scad_value(x: &Point, p: &ScadParams) -> f64 {
    x.iter().map(|&v| p.penalty(v)).sum()
}

/// Closed-form SCAD prox, valid for `0 < τ < a − 1`.
pub fn prox_scad(y: &Point, tau: f64, p: &ScadParams) -> Result<Point> {
    if !(tau > 0.0) {
        return Err(Error::ParameterDomain(format!("prox radius must be positive, got {tau}")));
    }
    if tau >= p.a - 1.0 {
        return Err(Error::ParameterDomain(format!(
            "SCAD prox formula needs tau < a - 1 = {}, got {tau}",
            p.a - 1.0
        )));
    }
    let b1 = p.lower_threshold(tau);
    let b2 = p.upper_threshold();
    let (l, a) = (p.lambda, p.a);
    Ok(y.map(|v| {
        let t = v.abs();
        if t <= b1 {
            v.signum() * (t - tau * l).max(0.0)
        } else if t <= b2 {
            ((a - 1.0) * v - v.signum() * a * tau * l) / (a - 1.0 - tau)
        } else {
            v
        }
    }))
}

/// Exact scalar SCAD prox for any `τ > 0`, by comparing the minimizers of the
/// three pieces. Used when `τ ≥ a − 1`, where the middle piece turns concave.
pub fn prox_scad_scalar_exact(y: f64, tau: f64, p: &ScadParams) -> f64 {
    let t = y.abs();
    let (l, a) = (p.lambda, p.a);
    let phi = |u: f64| p.penalty(u) + (u - t) * (u - t) / (2.0 * tau);
    let mut candidates = vec![(t - tau * l).clamp(0.0, l), l, a * l, t.max(a * l)];
    if tau < a - 1.0 {
        candidates.push((((a - 1.0) * t - a * tau * l) / (a - 1.0 - tau)).clamp(l, a * l));
    }
    let mut best = candidates[0];
    let mut best_val = phi(best);
    for &u in &candidates[1..] {
        let v = phi(u);
        if v < best_val {
            best = u;
            best_val = v;
        }
    }
    y.signum() * best
}

/// Componentwise soft threshold.
pub fn prox_l1(y: &Point, taulambda: f64) -> Point {
    y.map(|v| v.signum() * (v.abs() - taulambda).max(0.0))
}

/// Keeps the `k` largest-magnitude entries of each column; ties keep the
/// lowest row index.
pub fn project_topk_columns(c: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let rows = c.nrows();
    let k = k.min(rows);
    let mut out = DMatrix::zeros(rows, c.ncols());
    let mut order: Vec<usize> = Vec::with_capacity(rows);
    for (j, col) in c.column_iter().enumerate() {
        order.clear();
        order.extend(0..rows);
        // stable sort keeps lower indices first among equal magnitudes
        order.sort_by(|&a, &b| col[b].abs().total_cmp(&col[a].abs()));
        for &i in &order[..k] {
            out[(i, j)] = col[i];
        }
    }
    out
}

/// Normalizes each column to unit ℓ2 norm; zero columns become `e₁`.
pub fn project_unit_columns(d: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = d.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        } else if !col.is_empty() {
            col.fill(0.0);
            col[0] = 1.0;
        }
    }
    out
}

/// `λ‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub lambda: f64,
}

impl ProxOperator for L1Norm {
    fn value(&self, x: &Point) -> f64 {
        self.lambda * x.lp_norm(1)
    }

    fn prox(&self, y: &Point, tau: f64) -> Point {
        prox_l1(y, tau * self.lambda)
    }
}

/// Componentwise SCAD penalty.
#[derive(Debug, Clone, Copy)]
pub struct ScadPenalty {
    pub params: ScadParams,
}

impl ProxOperator for ScadPenalty {
    fn value(&self, x: &Point) -> f64 {
        scad_value(x, &self.params)
    }

    fn prox(&self, y: &Point, tau: f64) -> Point {
        match prox_scad(y, tau, &self.params) {
            Ok(p) => p,
            Err(_) => y.map(|v| prox_scad_scalar_exact(v, tau, &self.params)),
        }
    }
}

/// A linear map with `inverse ∘ forward = I` and `‖forward(x)‖ = ‖x‖`.
pub trait OrthonormalTransform: Sync {
    fn forward(&self, x: &Point) -> Point;
    fn inverse(&self, x: &Point) -> Point;
}

/// Identity transform.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTransform;

impl OrthonormalTransform for IdentityTransform {
    fn forward(&self, x: &Point) -> Point {
        x.clone()
    }
    fn inverse(&self, x: &Point) -> Point {
        x.clone()
    }
}

/// Probes `forward`/`inverse` on a few deterministic vectors of length `n`.
pub fn check_orthonormal(t: &dyn OrthonormalTransform, n: usize) -> Result<()> {
    for probe in 0..3usize {
        let x = Point::from_fn(n, |i, _| ((i * 7 + probe * 13) % 11) as f64 - 5.0 + 0.25 * probe as f64);
        let fx = t.forward(&x);
        if fx.len() != n {
            return Err(Error::Configuration(format!("transform changed length {n} -> {}", fx.len())));
        }
        let scale = x.norm().max(1.0);
        let roundtrip = (t.inverse(&fx) - &x).norm();
        let isometry = (fx.norm() - x.norm()).abs();
        if roundtrip > 1e-10 * scale || isometry > 1e-10 * scale {
            return Err(Error::Configuration(format!(
                "transform is not orthonormal (round-trip error {roundtrip:.3e}, norm error {isometry:.3e})"
            )));
        }
    }
    Ok(())
}

/// `inverse(inner.prox(forward(x), τ))`.
pub fn prox_transformed(
    forward: &dyn Fn(&Point) -> Point,
    inverse: &dyn Fn(&Point) -> Point,
    inner: &dyn ProxOperator,
    x: &Point,
    tau: f64,
) -> Point {
    inverse(&inner.prox(&forward(x), tau))
}

/// `h(x) = inner(W x)` for an orthonormal `W`.
pub struct TransformedProx<T, P> {
    transform: T,
    inner: P,
}

impl<T: OrthonormalTransform, P: ProxOperator> TransformedProx<T, P> {
    /// Fails with a configuration error when the transform does not pass the
    /// orthonormality self-test on vectors of length `n`.
    pub fn new(transform: T, inner: P, n: usize) -> Result<Self> {
        check_orthonormal(&transform, n)?;
        Ok(Self { transform, inner })
    }

    pub fn transform(&self) -> &T {
        &self.transform
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<T: OrthonormalTransform, P: ProxOperator> ProxOperator for TransformedProx<T, P> {
    fn value(&self, x: &Point) -> f64 {
        self.inner.value(&self.transform.forward(x))
    }

    fn prox(&self, y: &Point, tau: f64) -> Point {
        prox_transformed(&|v| self.transform.forward(v), &|v| self.transform.inverse(v), &self.inner, y, tau)
    }
}
