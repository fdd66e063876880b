use nalgebra::DMatrix;
use proxcg::oracle::{objective, DenseQuadratic, SmoothOracle, ZeroProx};
use proxcg::problems::*;
use proxcg::selftest::{gaussian_vector, random_spd};
use proxcg::solvers::gradient_mapping;
use proxcg::{apg_solve, pcg_solve, pg_solve, Error, Point, SolveResult, SolverConfig, Termination};

fn assert_monotone(r: &SolveResult) {
    for w in r.trace.windows(2) {
        assert!(w[1].f <= w[0].f, "f increased from {} to {} at k={}", w[0].f, w[1].f, w[1].k);
    }
}

#[test]
fn identity_quadratic_converges_in_three_iterations() {
    let mut rng = seeded_rng(1);
    let b = gaussian_vector(20, &mut rng);
    let q = DenseQuadratic::new(DMatrix::identity(20, 20), b.clone()).unwrap();
    let x0 = gaussian_vector(20, &mut rng);
    // δ = 1 makes the Ritz step exact for the identity Hessian
    let cfg = SolverConfig { delta: 1.0, ..Default::default() };
    let r = pcg_solve(&q, &ZeroProx, &x0, &cfg).unwrap();
    assert_eq!(r.termination, Termination::Tolerance);
    assert!(r.iterations() <= 3, "{} iterations", r.iterations());
    assert!((&r.x_final - &b).norm() <= 1e-5 * (1.0 + b.norm()));
    let gm = gradient_mapping(&q, &ZeroProx, &r.x_final, 1.0).unwrap().norm();
    assert!(gm <= 1e-6 * (1.0 + r.x_final.norm()));
}

#[test]
fn lasso_agrees_with_a_long_proximal_gradient_run() {
    let inst = synthetic_lasso(50, 100.0, 0.04, 2).unwrap();
    let x0 = inst.initial_point();
    let cfg = SolverConfig { tol_gradmap: 1e-9, max_iters: 5000, ..Default::default() };
    let pcg = pcg_solve(&inst.oracle, &inst.prox, &x0, &cfg).unwrap();
    let reference_cfg = SolverConfig { tol_gradmap: 0.0, max_iters: 20_000, stagnation_window: 200, ..Default::default() };
    let reference = pg_solve(&inst.oracle, &inst.prox, &x0, &reference_cfg).unwrap();
    let rel = (pcg.final_f() - reference.final_f()).abs() / reference.final_f().abs();
    assert!(rel <= 1e-8, "relative gap {rel:e}");
    assert_monotone(&pcg);
}

#[test]
fn dictionary_learning_traces_are_monotone() {
    let data = generate_synthetic_dl(10, 15, 30, 2, 3).unwrap();
    let inst = make_dictionary_learning(&data.y, 15, 2).unwrap();
    let x0 = inst.initial_point(4);
    assert!(inst.prox.is_feasible(&x0));
    let cfg = SolverConfig { max_iters: 300, ..Default::default() };
    for solve in [pcg_solve, pg_solve, apg_solve] {
        let r = solve(&inst.oracle, &inst.prox, &x0, &cfg).unwrap();
        assert_monotone(&r);
        assert!(inst.prox.is_feasible(&r.x_final));
        assert!(r.final_f() < r.trace[0].f);
    }
}

#[test]
fn accelerated_beats_plain_on_an_ill_conditioned_quadratic() {
    let h = random_spd(40, 100.0, 5);
    let mut rng = seeded_rng(6);
    let q = DenseQuadratic::new(h * 0.01, gaussian_vector(40, &mut rng)).unwrap();
    let x0 = Point::zeros(40);
    let cfg = SolverConfig { tol_gradmap: 1e-8, max_iters: 20_000, ..Default::default() };
    let pg = pg_solve(&q, &ZeroProx, &x0, &cfg).unwrap();
    let apg = apg_solve(&q, &ZeroProx, &x0, &cfg).unwrap();
    assert_eq!(pg.termination, Termination::Tolerance);
    assert_eq!(apg.termination, Termination::Tolerance);
    assert!(apg.iterations() < pg.iterations(), "apg {} vs pg {}", apg.iterations(), pg.iterations());
}

#[test]
fn trace_rows_follow_the_documented_layout() {
    let inst = synthetic_lasso(20, 10.0, 0.05, 7).unwrap();
    let x0 = inst.initial_point();
    let cfg = SolverConfig { max_iters: 25, tol_gradmap: 0.0, ..Default::default() };
    let r = pcg_solve(&inst.oracle, &inst.prox, &x0, &cfg).unwrap();
    assert_eq!(r.trace[0].k, 0);
    assert_eq!(r.trace[0].f, objective(&inst.oracle, &inst.prox, &x0));
    assert_eq!(r.trace[0].hvp_count, 0);
    assert_eq!(r.step_norms.len(), r.trace.len() - 1);
    for (i, w) in r.trace.windows(2).enumerate() {
        assert_eq!(w[1].k, i + 1);
        assert!(w[1].hvp_count >= w[0].hvp_count);
        assert!(w[1].wall_time_s >= w[0].wall_time_s);
        assert!(w[1].tau_k > 0.0 && w[1].cg_steps >= 1);
        assert!((0.0..=1.0).contains(&w[1].mu_star));
    }
    assert_eq!(r.stats.hvp_count, r.trace.last().unwrap().hvp_count);
}

#[test]
fn solves_are_deterministic() {
    let inst = synthetic_lasso(30, 50.0, 0.05, 8).unwrap();
    let x0 = inst.initial_point();
    let cfg = SolverConfig { max_iters: 50, ..Default::default() };
    for solve in [pcg_solve, pg_solve, apg_solve] {
        let a = solve(&inst.oracle, &inst.prox, &x0, &cfg).unwrap();
        let b = solve(&inst.oracle, &inst.prox, &x0, &cfg).unwrap();
        assert_eq!(a.x_final, b.x_final);
        let fa: Vec<f64> = a.trace.iter().map(|t| t.f).collect();
        let fb: Vec<f64> = b.trace.iter().map(|t| t.f).collect();
        assert_eq!(fa, fb);
    }
}

#[test]
fn infeasible_start_is_rejected() {
    let data = generate_synthetic_dl(4, 5, 6, 2, 9).unwrap();
    let inst = make_dictionary_learning(&data.y, 5, 2).unwrap();
    let bad = Point::from_element(inst.oracle.dimension(), 1.0);
    for solve in [pcg_solve, pg_solve, apg_solve] {
        assert!(matches!(solve(&inst.oracle, &inst.prox, &bad, &SolverConfig::default()), Err(Error::InvalidInput(_))));
    }
}

#[test]
fn invalid_configuration_is_rejected() {
    let q = DenseQuadratic::new(DMatrix::identity(2, 2), Point::zeros(2)).unwrap();
    let cfg = SolverConfig { xi: 1.5, ..Default::default() };
    assert!(matches!(pcg_solve(&q, &ZeroProx, &Point::zeros(2), &cfg), Err(Error::Configuration(_))));
}

#[test]
fn iteration_cap_and_time_limit_terminate() {
    let inst = synthetic_lasso(30, 100.0, 0.01, 10).unwrap();
    let x0 = inst.initial_point();
    let cfg = SolverConfig { max_iters: 3, tol_gradmap: 0.0, ..Default::default() };
    let r = pcg_solve(&inst.oracle, &inst.prox, &x0, &cfg).unwrap();
    assert_eq!(r.termination, Termination::MaxIters);
    assert_eq!(r.iterations(), 3);
    let cfg = SolverConfig { time_limit_s: Some(1e-9), tol_gradmap: 0.0, ..Default::default() };
    let r = pg_solve(&inst.oracle, &inst.prox, &x0, &cfg).unwrap();
    assert_eq!(r.termination, Termination::TimeLimit);
}

#[test]
fn csmri_reconstruction_improves_on_zero_filling() {
    let params = CsMriParams::desk_defaults(11);
    
    let inst = make_csmri(&phantom(64), &params).unwrap();
    let x0 = inst.initial_point();
    let cfg = SolverConfig { max_iters: 300, ..Default::default() };
    let r = pcg_solve(&inst.oracle, &inst.prox, &x0, &cfg).unwrap();
    assert_monotone(&r);
    let before = psnr(&inst.clean, &inst.to_image(&x0)).unwrap();
    let after = psnr(&inst.clean, &inst.to_image(&r.x_final)).unwrap();
    assert!(after > before, "{after} <= {before}");
}

#[test]
fn unregularized_lasso_matches_normal_equations() {
    let mut rng = seeded_rng(12);
    let a = DMatrix::from_fn(30, 20, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
    let b = gaussian_vector(30, &mut rng);
    let want = (a.transpose() * &a).cholesky().unwrap().solve(&(a.transpose() * &b));
    let inst = make_lasso(a, b, 0.0).unwrap();
    let cfg = SolverConfig { tol_gradmap: 1e-9, max_iters: 500, ..Default::default() };
    let r = pcg_solve(&inst.oracle, &inst.prox, &inst.initial_point(), &cfg).unwrap();
    assert_ne!(r.termination, Termination::MaxIters);
    assert!((&r.x_final - &want).amax() <= 1e-6, "{:e}", (&r.x_final - &want).amax());
}
