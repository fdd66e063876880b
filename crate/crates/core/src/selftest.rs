//! Fast property checks against independent oracles: dense linear algebra,
//! brute-force grids and finite differences. Shared by the `selftest`
//! command and the test suites.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::cg::{cg_step, CgState, Curvature};
use crate::majorize::{tau_tilde_interval, LineCoefficients};
use crate::oracle::{fd_hvp, DenseQuadratic, Point, SmoothOracle};
use crate::problems::{
    generate_synthetic_dl, make_csmri, make_dictionary_learning, phantom, seeded_rng, synthetic_lasso, CsMriParams,
};
use crate::prox::{project_topk_columns, project_unit_columns, prox_scad, ScadParams};
use crate::spectrum::{build_tridiagonal, max_eigenvalue};

/// Verdict of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Standard normal vector.
pub fn gaussian_vector(n: usize, rng: &mut impl Rng) -> Point {
    Point::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random symmetric positive definite matrix with eigenvalues log-spaced in
/// `[1, cond]`.
pub fn random_spd(n: usize, cond: f64, seed: u64) -> DMatrix<f64> {
    let eig: Vec<f64> = (0..n).map(|i| if n == 1 { 1.0 } else { cond.powf(i as f64 / (n - 1) as f64) }).collect();
    symmetric_with_spectrum(&eig, seed)
}

/// `QΛQᵀ` with a random orthogonal `Q`.
pub fn symmetric_with_spectrum(eig: &[f64], seed: u64) -> DMatrix<f64> {
    let n = eig.len();
    let mut rng = seeded_rng(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let a = &q * DMatrix::from_diagonal(&Point::from_column_slice(eig)) * q.transpose();
    (&a + a.transpose()) * 0.5
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Hessian assembled column by column from the oracle's HVP.
pub fn dense_hessian(oracle: &dyn SmoothOracle, x: &Point) -> DMatrix<f64> {
    let n = oracle.dimension();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = Point::zeros(n);
        e[j] = 1.0;
        h.set_column(j, &oracle.hvp(x, &e));
    }
    h
}

/// Minimizer of `φ(x) + (x − y)²/(2τ)` over a uniform grid on
/// `[min(0, y) − 1, max(0, y) + 1]`.
pub fn scad_grid_minimizer(y: f64, tau: f64, p: &ScadParams, step: f64) -> f64 {
    let lo = y.min(0.0) - 1.0;
    let hi = y.max(0.0) + 1.0;
    let count = ((hi - lo) / step).ceil() as usize;
    let mut best = lo;
    let mut best_val = f64::INFINITY;
    for i in 0..=count {
        let x = lo + step * i as f64;
        let val = p.penalty(x) + (x - y) * (x - y) / (2.0 * tau);
        if val < best_val {
            best_val = val;
            best = x;
        }
    }
    best
}

/// Smallest sampled value of the surrogate-minus-model gap on `α ∈ [0, 1]`.
pub fn min_sampled_gap(c: &LineCoefficients, tau_tilde: f64, samples: usize) -> f64 {
    (0..=samples).map(|i| c.gap(tau_tilde, i as f64 / samples as f64)).fold(f64::INFINITY, f64::min)
}

/// Runs CG on `Hz = −g` until it stops or `max_steps` is reached.
pub fn run_cg(h: &DMatrix<f64>, g: &Point, max_steps: usize) -> CgState {
    let mut state = CgState::new(g);
    let mut hvp = |w: &Point| h * w;
    while state.j < max_steps && state.can_continue() {
        cg_step(&mut state, &mut hvp);
    }
    state
}

/// Search directions `d_i ∝ z^{i+1} − z^i` and residuals `r_i = Hz^i + g`
/// recovered from the CG iterates (with `z⁰ = 0`).
pub fn cg_directions_and_residuals(h: &DMatrix<f64>, state: &CgState) -> (Vec<Point>, Vec<Point>) {
    let mut prev = Point::zeros(state.g.len());
    let mut dirs = Vec::new();
    let mut res = vec![state.g.clone()];
    for z in &state.z_history {
        dirs.push(z - &prev);
        res.push(h * z + &state.g);
        prev = z.clone();
    }
    res.truncate(dirs.len());
    (dirs, res)
}

/// Largest `|d_iᵀHd_j| / (‖d_i‖_H ‖d_j‖_H)` and `|r_iᵀr_j| / (‖r_i‖‖r_j‖)`
/// over `i ≠ j`, restricted to steps whose residual is still above
/// `1e-4·‖g‖`. Past that point finite-precision CG loses orthogonality.
pub fn cg_orthogonality_defects(h: &DMatrix<f64>, state: &CgState) -> (f64, f64) {
    let (mut dirs, mut res) = cg_directions_and_residuals(h, state);
    let floor = 1e-4 * state.g.norm();
    let keep = res.iter().take_while(|r| r.norm() > floor).count();
    dirs.truncate(keep);
    res.truncate(keep);
    let hd: Vec<Point> = dirs.iter().map(|d| h * d).collect();
    let mut conj: f64 = 0.0;
    let mut orth: f64 = 0.0;
    for i in 0..dirs.len() {
        for j in 0..i {
            let c = dirs[i].dot(&hd[j]) / (dirs[i].dot(&hd[i]).sqrt() * dirs[j].dot(&hd[j]).sqrt());
            conj = conj.max(c.abs());
            let o = res[i].dot(&res[j]) / (res[i].norm() * res[j].norm());
            orth = orth.max(o.abs());
        }
    }
    (conj, orth)
}

fn hvp_fd_check(name: &'static str, oracle: &dyn SmoothOracle, pairs: usize, seed: u64, x_scale: f64) -> CheckOutcome {
    let mut rng = seeded_rng(seed);
    let n = oracle.dimension();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x = gaussian_vector(n, &mut rng) * x_scale;
        let w = gaussian_vector(n, &mut rng);
        let exact = oracle.hvp(&x, &w);
        let approx = match fd_hvp(oracle, &x, &w, None) {
            Ok(v) => v,
            Err(e) => return CheckOutcome::new(name, false, e.to_string()),
        };
        let rel = (&exact - &approx).norm() / exact.norm().max(1e-300);
        worst = worst.max(rel);
    }
    CheckOutcome::new(name, worst <= 1e-5, format!("worst relative error {worst:.2e} over {pairs} pairs"))
}

fn check_hvp_lasso() -> CheckOutcome {
    match synthetic_lasso(30, 50.0, 0.05, 11) {
        Ok(inst) => hvp_fd_check("hvp_fd_lasso", &inst.oracle, 20, 101, 1.0),
        Err(e) => CheckOutcome::new("hvp_fd_lasso", false, e.to_string()),
    }
}

fn check_hvp_csmri() -> CheckOutcome {
    match make_csmri(&phantom(16), &CsMriParams::desk_defaults(12)) {
        Ok(inst) => hvp_fd_check("hvp_fd_csmri", &inst.oracle, 10, 102, 0.5),
        Err(e) => CheckOutcome::new("hvp_fd_csmri", false, e.to_string()),
    }
}

fn check_hvp_dictlearn() -> CheckOutcome {
    let inst = generate_synthetic_dl(8, 12, 20, 2, 13).and_then(|d| make_dictionary_learning(&d.y, 12, 2));
    match inst {
        Ok(inst) => hvp_fd_check("hvp_fd_dictlearn", &inst.oracle, 20, 103, 1.0),
        Err(e) => CheckOutcome::new("hvp_fd_dictlearn", false, e.to_string()),
    }
}

fn check_scad_grid() -> CheckOutcome {
    let mut rng = seeded_rng(104);
    let mut worst: f64 = 0.0;
    let draws = 200;
    for _ in 0..draws {
        let lambda = rng.random_range(0.2..2.0);
        let a = rng.random_range(2.2..5.0);
        let p = ScadParams::new(lambda, a).expect("valid SCAD parameters");
        let tau = rng.random_range(0.01..0.99) * (a - 1.0);
        let y = rng.random_range(-3.0..3.0) * a * lambda;
        let got = match prox_scad(&Point::from_element(1, y), tau, &p) {
            Ok(v) => v[0],
            Err(e) => return CheckOutcome::new("scad_prox_grid", false, e.to_string()),
        };
        worst = worst.max((got - scad_grid_minimizer(y, tau, &p, 1e-4)).abs());
    }
    CheckOutcome::new("scad_prox_grid", worst <= 1e-3, format!("worst deviation {worst:.2e} over {draws} draws"))
}

fn check_cg_orthogonality() -> CheckOutcome {
    let n = 30;
    let h = random_spd(n, 10.0, 105);
    let g = gaussian_vector(n, &mut seeded_rng(106));
    let state = run_cg(&h, &g, n);
    let (conj, orth) = cg_orthogonality_defects(&h, &state);
    CheckOutcome::new(
        "cg_conjugacy_orthogonality",
        conj <= 1e-8 && orth <= 1e-8,
        format!("conjugacy {conj:.2e}, residual orthogonality {orth:.2e} after {} steps", state.j),
    )
}

fn check_lanczos_eigenvalues() -> CheckOutcome {
    let n = 12;
    let spectrum: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let h = symmetric_with_spectrum(&spectrum, 107);
    let g = gaussian_vector(n, &mut seeded_rng(108));
    let state = run_cg(&h, &g, n);
    let detail_fail = |msg: String| CheckOutcome::new("lanczos_eigenvalues", false, msg);
    if state.j != n {
        return detail_fail(format!("CG stopped after {} of {n} steps", state.j));
    }
    let t = match build_tridiagonal(&state.alphas, &state.betas[..n - 1]) {
        Ok(t) => t,
        Err(e) => return detail_fail(e.to_string()),
    };
    let mut dense_t = DMatrix::from_diagonal(&Point::from_vec(t.diag.clone()));
    for (i, e) in t.offdiag.iter().enumerate() {
        dense_t[(i, i + 1)] = *e;
        dense_t[(i + 1, i)] = *e;
    }
    let want = dense_eigenvalues(&h);
    let got = dense_eigenvalues(&dense_t);
    let worst = want.iter().zip(&got).map(|(a, b)| (a - b).abs() / a.abs()).fold(0.0, f64::max);
    CheckOutcome::new("lanczos_eigenvalues", worst <= 1e-6, format!("worst relative eigenvalue error {worst:.2e}"))
}

fn check_ritz_bounds() -> CheckOutcome {
    let n = 20;
    let h = random_spd(n, 100.0, 109);
    let ev = dense_eigenvalues(&h);
    let (lo, hi) = (ev[0], ev[n - 1]);
    let g = gaussian_vector(n, &mut seeded_rng(110));
    let mut state = CgState::new(&g);
    let mut hvp = |w: &Point| &h * w;
    let mut prev = f64::NEG_INFINITY;
    let mut ok = true;
    while state.j < n && state.can_continue() {
        cg_step(&mut state, &mut hvp);
        if state.curvature == Curvature::Negative || state.curvature == Curvature::Zero {
            break;
        }
        let theta = match state.ritz() {
            Ok(r) => r.theta_max,
            Err(e) => return CheckOutcome::new("ritz_bounds", false, e.to_string()),
        };
        let slack = 1e-10 * hi;
        ok &= theta >= prev - slack && theta >= lo - slack && theta <= hi + slack;
        prev = theta;
    }
    CheckOutcome::new("ritz_bounds", ok, format!("final estimate {prev:.6} within [{lo:.6}, {hi:.6}]"))
}

fn check_interval_sampling() -> CheckOutcome {
    let mut rng = seeded_rng(111);
    let mut worst = f64::INFINITY;
    let mut nonempty = 0;
    for _ in 0..1000 {
        let a: f64 = rng.random_range(0.01..10.0);
        let b: f64 = rng.random_range(-5.0..20.0);
        let c: f64 = rng.random_range(-30.0..5.0);
        let coeffs = LineCoefficients { a, b, c };
        if let Ok((_, upper)) = tau_tilde_interval(&coeffs) {
            nonempty += 1;
            let tau = upper.min(1e6);
            let scale = a + c.abs() + b.abs();
            worst = worst.min(min_sampled_gap(&coeffs, tau, 200) / scale);
        }
    }
    CheckOutcome::new(
        "interval_sampling",
        worst >= -1e-12 && nonempty > 0,
        format!("smallest scaled gap {worst:.2e} over {nonempty} admissible triples"),
    )
}

fn check_csmri_projector() -> CheckOutcome {
    let inst = match make_csmri(&phantom(16), &CsMriParams::desk_defaults(14)) {
        Ok(i) => i,
        Err(e) => return CheckOutcome::new("csmri_hessian_projector", false, e.to_string()),
    };
    let mut rng = seeded_rng(112);
    let n = inst.oracle.dimension();
    let x = Point::zeros(n);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let w = gaussian_vector(n, &mut rng);
        let hw = inst.oracle.hvp(&x, &w);
        let hhw = inst.oracle.hvp(&x, &hw);
        worst = worst.max((&hhw - &hw).norm() / w.norm());
    }
    CheckOutcome::new("csmri_hessian_projector", worst <= 1e-10, format!("‖H²w − Hw‖/‖w‖ ≤ {worst:.2e}"))
}

/// Best achievable kept energy of a column under a `k`-sparsity constraint,
/// by enumerating all supports.
pub fn topk_bruteforce_energy(col: &[f64], k: usize) -> f64 {
    let n = col.len();
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize <= k {
            let e: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| col[i] * col[i]).sum();
            best = best.max(e);
        }
    }
    best
}

fn check_projections() -> CheckOutcome {
    let mut rng = seeded_rng(113);
    let mut ok = true;
    for _ in 0..50 {
        let k = rng.random_range(1..=4);
        let c = DMatrix::from_fn(7, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let p = project_topk_columns(&c, k);
        for j in 0..3 {
            let kept = p.column(j).norm_squared();
            let best = topk_bruteforce_energy(c.column(j).as_slice(), k);
            ok &= (kept - best).abs() <= 1e-12 * best.max(1.0);
            ok &= p.column(j).iter().filter(|v| **v != 0.0).count() <= k;
        }
        let d = DMatrix::from_fn(5, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = project_unit_columns(&d);
        ok &= (project_unit_columns(&u) - &u).amax() <= 1e-15;
    }
    CheckOutcome::new("projections", ok, "top-k against enumeration, unit-column idempotence".into())
}

fn check_hessian_assembly() -> CheckOutcome {
    let h = random_spd(15, 50.0, 114);
    let q = match DenseQuadratic::new(h.clone(), Point::zeros(15)) {
        Ok(q) => q,
        Err(e) => return CheckOutcome::new("hessian_assembly", false, e.to_string()),
    };
    let assembled = dense_hessian(&q, &Point::zeros(15));
    let err = (&assembled - &h).amax();
    let t = build_tridiagonal(&[0.5], &[]).map(|t| max_eigenvalue(&t));
    CheckOutcome::new(
        "hessian_assembly",
        err <= 1e-12 && t.map_or(false, |v| (v - 2.0).abs() < 1e-12),
        format!("assembled Hessian error {err:.2e}"),
    )
}

/// Runs every check. Deterministic.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        check_hvp_lasso(),
        check_hvp_csmri(),
        check_hvp_dictlearn(),
        check_scad_grid(),
        check_cg_orthogonality(),
        check_lanczos_eigenvalues(),
        check_ritz_bounds(),
        check_interval_sampling(),
        check_csmri_projector(),
        check_projections(),
        check_hessian_assembly(),
    ]
}
