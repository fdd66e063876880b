//! Dictionary learning: `½‖DC − Y‖²_F` with unit-norm atoms and at most `k`
//! nonzeros per code column. The variable is `[vec(D); vec(C)]`, column-major.

use nalgebra::{DMatrix, DVectorView};
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};

use super::seeded_rng;
use crate::error::{Error, Result};
use crate::oracle::{Point, ProxOperator, SmoothOracle};
use crate::prox::{project_topk_columns, project_unit_columns};

/// Smooth bilinear data term.
#[derive(Debug, Clone)]
pub struct DictLearnOracle {
    y: DMatrix<f64>,
    atoms: usize,
}

impl DictLearnOracle {
    pub fn new(y: DMatrix<f64>, atoms: usize) -> Result<Self> {
        if atoms == 0 || y.nrows() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidInput("dictionary learning needs nonempty data and r >= 1".into()));
        }
        Ok(Self { y, atoms })
    }

    pub fn shapes(&self) -> (usize, usize, usize) {
        (self.y.nrows(), self.atoms, self.y.ncols())
    }

    /// Splits a flat point into `(D, C)`.
    pub fn split(&self, x: &Point) -> (DMatrix<f64>, DMatrix<f64>) {
        let (m, r, n) = self.shapes();
        let d = DMatrix::from_column_slice(m, r, &x.as_slice()[..m * r]);
        let c = DMatrix::from_column_slice(r, n, &x.as_slice()[m * r..]);
        (d, c)
    }

    pub fn join(d: &DMatrix<f64>, c: &DMatrix<f64>) -> Point {
        Point::from_iterator(d.len() + c.len(), d.iter().chain(c.iter()).copied())
    }

    fn residual(&self, d: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
        d * c - &self.y
    }
}

impl SmoothOracle for DictLearnOracle {
    fn dimension(&self) -> usize {
        let (m, r, n) = self.shapes();
        m * r + r * n
    }

    fn value(&self, x: &Point) -> f64 {
        let (d, c) = self.split(x);
        0.5 * self.residual(&d, &c).norm_squared()
    }

    fn gradient(&self, x: &Point) -> Point {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &Point) -> (f64, Point) {
        let (d, c) = self.split(x);
        let r = self.residual(&d, &c);
        let gd = &r * c.transpose();
        let gc = d.transpose() * &r;
        (0.5 * r.norm_squared(), Self::join(&gd, &gc))
    }

    /// With `E = UC + DV`: `(E Cᵀ + R Vᵀ, Dᵀ E + Uᵀ R)`.
    fn hvp(&self, x: &Point, w: &Point) -> Point {
        let (d, c) = self.split(x);
        let (u, v) = self.split(w);
        let r = self.residual(&d, &c);
        let e = &u * &c + &d * &v;
        let hd = &e * c.transpose() + &r * v.transpose();
        let hc = d.transpose() * &e + u.transpose() * &r;
        Self::join(&hd, &hc)
    }
}

/// Indicator of unit-norm atoms and `k`-sparse code columns.
#[derive(Debug, Clone, Copy)]
pub struct DictConstraints {
    pub m: usize,
    pub r: usize,
    pub n: usize,
    pub k: usize,
}

/// Tolerance on `‖d_i‖ = 1` in the feasibility test.
const UNIT_NORM_TOL: f64 = 1e-9;

impl DictConstraints {
    fn split<'a>(&self, x: &'a Point) -> (DVectorView<'a, f64>, DVectorView<'a, f64>) {
        let md = self.m * self.r;
        (x.rows(0, md), x.rows(md, self.r * self.n))
    }

    pub fn is_feasible(&self, x: &Point) -> bool {
        let (d, c) = self.split(x);
        let atoms_ok = d.as_slice().chunks(self.m).all(|col| {
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm - 1.0).abs() <= UNIT_NORM_TOL
        });
        let codes_ok = c.as_slice().chunks(self.r).all(|col| col.iter().filter(|v| **v != 0.0).count() <= self.k);
        atoms_ok && codes_ok
    }
}

impl ProxOperator for DictConstraints {
    fn value(&self, x: &Point) -> f64 {
        if self.is_feasible(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, y: &Point, _tau: f64) -> Point {
        let (d, c) = self.split(y);
        let d = DMatrix::from_column_slice(self.m, self.r, d.as_slice());
        let c = DMatrix::from_column_slice(self.r, self.n, c.as_slice());
        DictLearnOracle::join(&project_unit_columns(&d), &project_topk_columns(&c, self.k))
    }
}

/// A ready-to-solve dictionary-learning problem.
pub struct DictLearnInstance {
    pub oracle: DictLearnOracle,
    pub prox: DictConstraints,
}

impl DictLearnInstance {
    /// Feasible start: Gaussian atoms normalized, codes `topk(Dᵀ Y)`.
    pub fn initial_point(&self, seed: u64) -> Point {
        let DictConstraints { m, r, k, .. } = self.prox;
        let mut rng = seeded_rng(seed);
        let d = project_unit_columns(&DMatrix::from_fn(m, r, |_, _| StandardNormal.sample(&mut rng)));
        let c = project_topk_columns(&(d.transpose() * &self.oracle.y), k);
        DictLearnOracle::join(&d, &c)
    }
}

pub fn make_dictionary_learning(y: &DMatrix<f64>, r: usize, k: usize) -> Result<DictLearnInstance> {
    if r == 0 || k == 0 || k > r {
        return Err(Error::InvalidInput(format!("need 1 <= k <= r, got r = {r}, k = {k}")));
    }
    let oracle = DictLearnOracle::new(y.clone(), r)?;
    let prox = DictConstraints { m: y.nrows(), r, n: y.ncols(), k };
    Ok(DictLearnInstance { oracle, prox })
}

/// Ground truth and data for a synthetic instance.
#[derive(Debug, Clone)]
pub struct SyntheticDictionary {
    pub y: DMatrix<f64>,
    pub d_true: DMatrix<f64>,
    pub c_true: DMatrix<f64>,
}

/// Gaussian unit-norm atoms; each code column has exactly `k` standard-normal
/// nonzeros on a uniformly random support; `Y = D C`.
pub fn generate_synthetic_dl(m: usize, r: usize, n: usize, k: usize, seed: u64) -> Result<SyntheticDictionary> {
    if k == 0 || k > r || m == 0 || n == 0 {
        return Err(Error::InvalidInput(format!("need m, n >= 1 and 1 <= k <= r, got m={m} r={r} n={n} k={k}")));
    }
    let mut rng = seeded_rng(seed);
    let d_true = project_unit_columns(&DMatrix::from_fn(m, r, |_, _| StandardNormal.sample(&mut rng)));
    let mut c_true = DMatrix::zeros(r, n);
    for j in 0..n {
        for i in sample(&mut rng, r, k).into_iter() {
            let mut v: f64 = StandardNormal.sample(&mut rng);
            while v == 0.0 {
                v = StandardNormal.sample(&mut rng);
            }
            c_true[(i, j)] = v;
        }
    }
    let y = &d_true * &c_true;
    Ok(SyntheticDictionary { y, d_true, c_true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fd_hvp;

    fn random_point(dim: usize, seed: u64) -> Point {
        let mut rng = seeded_rng(seed);
        Point::from_fn(dim, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn zero_point_values() {
        let data = generate_synthetic_dl(4, 6, 5, 2, 1).unwrap();
        let inst = make_dictionary_learning(&data.y, 6, 2).unwrap();
        let x = Point::zeros(inst.oracle.dimension());
        let (v, g) = inst.oracle.value_and_gradient(&x);
        assert!((v - 0.5 * data.y.norm_squared()).abs() < 1e-12);
        assert_eq!(g, Point::zeros(x.len()));
    }

    #[test]
    fn hvp_matches_finite_differences() {
        let data = generate_synthetic_dl(5, 7, 6, 2, 3).unwrap();
        let inst = make_dictionary_learning(&data.y, 7, 2).unwrap();
        let dim = inst.oracle.dimension();
        for s in 0..10 {
            let x = random_point(dim, 100 + s);
            let w = random_point(dim, 200 + s);
            let hw = inst.oracle.hvp(&x, &w);
            let fd = fd_hvp(&inst.oracle, &x, &w, None).unwrap();
            assert!((&hw - &fd).norm() <= 1e-5 * hw.norm(), "seed {s}");
        }
    }

    #[test]
    fn exact_factors_give_zero_residual_hvp() {
        let data = generate_synthetic_dl(5, 7, 6, 2, 4).unwrap();
        let inst = make_dictionary_learning(&data.y, 7, 2).unwrap();
        let x = DictLearnOracle::join(&data.d_true, &data.c_true);
        assert!(inst.oracle.value(&x) < 1e-24);
        let w = random_point(x.len(), 5);
        let (u, v) = inst.oracle.split(&w);
        let e = &u * &data.c_true + &data.d_true * &v;
        let expected = DictLearnOracle::join(&(&e * data.c_true.transpose()), &(data.d_true.transpose() * &e));
        assert!((inst.oracle.hvp(&x, &w) - expected).norm() < 1e-12);
    }

    #[test]
    fn synthetic_data_contract() {
        let data = generate_synthetic_dl(25, 50, 100, 3, 11).unwrap();
        for col in data.d_true.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        for col in data.c_true.column_iter() {
            assert_eq!(col.iter().filter(|v| **v != 0.0).count(), 3);
        }
        assert!(data.y.norm() > 0.0);
        assert!(data.y.rank(1e-9) <= 25);
        let again = generate_synthetic_dl(25, 50, 100, 3, 11).unwrap();
        assert_eq!(again.y, data.y);
    }

    #[test]
    fn prox_output_is_feasible() {
        let data = generate_synthetic_dl(4, 6, 5, 2, 1).unwrap();
        let inst = make_dictionary_learning(&data.y, 6, 2).unwrap();
        let y = random_point(inst.oracle.dimension(), 9);
        let p = inst.prox.prox(&y, 0.3);
        assert!(inst.prox.is_feasible(&p));
        assert_eq!(inst.prox.value(&p), 0.0);
        assert_eq!(inst.prox.value(&y), f64::INFINITY);
        assert!(inst.prox.is_feasible(&inst.initial_point(4)));
    }
}
