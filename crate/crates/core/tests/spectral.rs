use nalgebra::DMatrix;
use proptest::prelude::*;
use proxcg::cg::{cauchy_step, cg_step, find_stepsize, CgState, Curvature, StepsizeParams};
use proxcg::oracle::{objective, DiagonalQuadratic, SmoothOracle, ZeroProx};
use proxcg::problems::seeded_rng;
use proxcg::selftest::{
    cg_orthogonality_defects, dense_eigenvalues, gaussian_vector, random_spd, run_cg, symmetric_with_spectrum,
};
use proxcg::spectrum::{build_tridiagonal, max_eigenvalue, stepsize_from_ritz, TridiagonalMatrix};
use proxcg::Point;

fn tridiagonal_eigenvalues(t: &TridiagonalMatrix) -> Vec<f64> {
    let n = t.order();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = t.diag[i];
    }
    for (i, e) in t.offdiag.iter().enumerate() {
        m[(i, i + 1)] = *e;
        m[(i + 1, i)] = *e;
    }
    dense_eigenvalues(&m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cg_directions_are_conjugate_and_residuals_orthogonal(seed in 0u64..10_000, n in 2usize..=30) {
        let h = random_spd(n, 10.0, seed);
        let g = gaussian_vector(n, &mut seeded_rng(seed + 1));
        let state = run_cg(&h, &g, n);
        let (conj, orth) = cg_orthogonality_defects(&h, &state);
        prop_assert!(conj <= 1e-8, "conjugacy {conj}");
        prop_assert!(orth <= 1e-8, "orthogonality {orth}");
    }

    #[test]
    fn full_cg_tridiagonal_reproduces_the_spectrum(seed in 0u64..10_000, n in 2usize..=20) {
        // equally spaced eigenvalues keep finite-precision Lanczos from
        // converging early and producing ghost copies
        let spectrum: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let h = symmetric_with_spectrum(&spectrum, seed);
        let g = gaussian_vector(n, &mut seeded_rng(seed + 2));
        let state = run_cg(&h, &g, n);
        prop_assume!(state.j == n);
        let t = build_tridiagonal(&state.alphas, &state.betas[..n - 1]).unwrap();
        let want = dense_eigenvalues(&h);
        let got = tridiagonal_eigenvalues(&t);
        for (a, b) in want.iter().zip(&got) {
            prop_assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
        }
        prop_assert!((max_eigenvalue(&t) - want[n - 1]).abs() <= 1e-6 * want[n - 1]);
    }

    #[test]
    fn ritz_values_increase_and_stay_inside_the_spectrum(seed in 0u64..10_000, n in 2usize..=25) {
        let h = random_spd(n, 100.0, seed);
        let ev = dense_eigenvalues(&h);
        let g = gaussian_vector(n, &mut seeded_rng(seed + 3));
        let mut state = CgState::new(&g);
        let mut hvp = |w: &Point| &h * w;
        let mut prev = f64::NEG_INFINITY;
        while state.j < n && state.can_continue() {
            cg_step(&mut state, &mut hvp);
            if state.j == 0 {
                break;
            }
            let theta = state.ritz().unwrap().theta_max;
            let slack = 1e-10 * ev[n - 1];
            prop_assert!(theta >= prev - slack);
            prop_assert!(theta >= ev[0] - slack && theta <= ev[n - 1] + slack);
            prev = theta;
        }
    }

    #[test]
    fn bisection_matches_dense_solver(seed in 0u64..10_000, n in 1usize..40) {
        let mut rng = seeded_rng(seed);
        let diag: Vec<f64> = gaussian_vector(n, &mut rng).iter().copied().collect();
        let off: Vec<f64> = gaussian_vector(n.saturating_sub(1), &mut rng).iter().copied().collect();
        let t = TridiagonalMatrix::new(diag, off).unwrap();
        let want = *tridiagonal_eigenvalues(&t).last().unwrap();
        prop_assert!((max_eigenvalue(&t) - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }
}

#[test]
fn first_alpha_is_the_cauchy_step() {
    let h = random_spd(10, 30.0, 4);
    let g = gaussian_vector(10, &mut seeded_rng(5));
    let state = run_cg(&h, &g, 1);
    let tc = cauchy_step(&g, &mut |w: &Point| &h * w).unwrap();
    assert!((state.alphas[0] - tc).abs() <= 1e-14 * tc);
    let t = build_tridiagonal(&state.alphas, &[]).unwrap();
    assert!((max_eigenvalue(&t) - 1.0 / tc).abs() <= 1e-12 / tc);
}

#[test]
fn negative_curvature_is_flagged_without_update() {
    let h = DMatrix::from_diagonal(&Point::from_column_slice(&[1.0, -2.0]));
    let g = Point::from_column_slice(&[0.0, 1.0]);
    let state = run_cg(&h, &g, 2);
    assert_eq!(state.curvature, Curvature::Negative);
    assert_eq!(state.j, 0);
    assert!(state.z_history.is_empty());
    assert_eq!(cauchy_step(&g, &mut |w: &Point| &h * w), None);
}

#[test]
fn stepsize_from_ritz_domain() {
    assert_eq!(stepsize_from_ritz(2.0, 1.0).unwrap(), 0.5);
    assert_eq!(stepsize_from_ritz(-4.0, 0.5).unwrap(), 0.125);
    assert!(stepsize_from_ritz(0.0, 0.9).is_err());
}

#[test]
fn ritz_step_can_exceed_the_inverse_lipschitz_constant() {
    let q = DiagonalQuadratic::new(vec![1e-3, 1.0]);
    let x = Point::from_column_slice(&[1.0, 0.0]);
    let (f, g) = q.value_and_gradient(&x);
    let params = StepsizeParams { delta: 0.99, c_min: 1e-10, j_max: 2 };
    let f_of = |p: &Point| objective(&q, &ZeroProx, p);
    let mut hvp = |w: &Point| q.hvp(&x, w);
    let s = find_stepsize(&x, f, &g, params, &f_of, &mut hvp, &ZeroProx).unwrap();
    assert!(s.theta.is_some());
    let lambda_max = 1.0;
    assert!(s.tau * lambda_max > 1.0, "tau = {}", s.tau);
    assert!(s.f_plus < f);
}

#[test]
fn stepsize_falls_back_to_halving_under_negative_curvature() {
    struct Saddle;
    impl SmoothOracle for Saddle {
        fn dimension(&self) -> usize {
            2
        }
        fn value(&self, x: &Point) -> f64 {
            0.5 * x[0] * x[0] - 0.5 * x[1] * x[1] + 0.25 * x[1].powi(4)
        }
        fn gradient(&self, x: &Point) -> Point {
            Point::from_column_slice(&[x[0], -x[1] + x[1].powi(3)])
        }
        fn hvp(&self, x: &Point, w: &Point) -> Point {
            Point::from_column_slice(&[w[0], (-1.0 + 3.0 * x[1] * x[1]) * w[1]])
        }
    }
    let x = Point::from_column_slice(&[0.0, 0.1]);
    let (f, g) = Saddle.value_and_gradient(&x);
    let params = StepsizeParams { delta: 0.99, c_min: 1e-10, j_max: 2 };
    let f_of = |p: &Point| objective(&Saddle, &ZeroProx, p);
    let mut hvp = |w: &Point| Saddle.hvp(&x, w);
    let s = find_stepsize(&x, f, &g, params, &f_of, &mut hvp, &ZeroProx).unwrap();
    assert_eq!(s.theta, None);
    assert_eq!(s.cg.curvature, Curvature::Negative);
    assert!(s.f_plus <= f - 1e-10 * (&s.x_plus - &x).norm_squared());
}
