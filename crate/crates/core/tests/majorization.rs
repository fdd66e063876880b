use nalgebra::DMatrix;
use proxcg::cg::{find_stepsize, CgState, StepsizeParams};
use proxcg::majorize::*;
use proxcg::oracle::{objective, DenseQuadratic, ProxOperator, SmoothOracle, ZeroProx};
use proxcg::problems::seeded_rng;
use proxcg::prox::L1Norm;
use proxcg::selftest::{gaussian_vector, min_sampled_gap, random_spd};
use proxcg::solvers::segment_backtrack;
use proxcg::Point;
use rand::Rng;

#[test]
fn admissible_radii_keep_the_gap_nonnegative() {
    let mut rng = seeded_rng(1);
    let mut admissible = 0;
    for _ in 0..1000 {
        let c = LineCoefficients {
            a: rng.random_range(1e-3..10.0),
            b: rng.random_range(-5.0..50.0),
            c: rng.random_range(-40.0..5.0),
        };
        let scale = c.a + c.b.abs() + c.c.abs();
        match tau_tilde_interval(&c) {
            Ok((lo, hi)) => {
                admissible += 1;
                assert_eq!(lo, 0.0);
                for tau in [hi.min(1e8), rng.random_range(1e-6..1.0) * hi.min(1e8)] {
                    assert!(min_sampled_gap(&c, tau, 500) >= -1e-12 * scale, "{c:?} at {tau}");
                }
            }
            Err(EmptyInterval) => {
                assert!(c.a + c.c > 0.0);
                // slope −(A + C) < 0 at the base point: some small α goes negative
                for tau in [1e-3, 1.0, 1e3] {
                    let alpha = (c.a + c.c) / (c.a / tau + c.b.abs() + 1.0) * 1e-2;
                    assert!(c.gap(tau, alpha.min(1.0)) < 0.0, "{c:?} at {tau}");
                }
            }
        }
    }
    assert!(admissible > 300);
}

#[test]
fn upper_bound_is_sharp_when_the_linear_term_vanishes() {
    let mut rng = seeded_rng(2);
    for _ in 0..200 {
        let a = rng.random_range(0.1..5.0);
        let b = rng.random_range(0.1..5.0);
        let c = LineCoefficients { a, b, c: -a };
        let (_, hi) = tau_tilde_interval(&c).unwrap();
        assert!((hi - a / b).abs() <= 1e-15 * hi);
        assert!(min_sampled_gap(&c, hi, 100) >= -1e-14);
        assert!(c.gap(hi * (1.0 + 1e-6), 1.0) < 0.0);
    }
}

fn quadratic_context<'a>(
    q: &'a DenseQuadratic,
    x: &'a Point,
    g: &'a Point,
    prox: &'a dyn ProxOperator,
    q_of: &'a dyn Fn(&Point) -> f64,
    tau_k: f64,
    tau_c: f64,
) -> SelectionContext<'a> {
    SelectionContext { x_k: x, q_k: q.value(x), g, tau_k, tau_c, xi: 0.95, q: q_of, prox }
}

#[test]
fn certified_candidates_majorize_along_their_line() {
    for seed in 0..40 {
        let n = 12;
        let h = random_spd(n, 50.0, seed) * 0.3;
        let mut rng = seeded_rng(seed + 100);
        let q = DenseQuadratic::new(h.clone(), gaussian_vector(n, &mut rng)).unwrap();
        let x = gaussian_vector(n, &mut rng);
        let g = q.gradient(&x);
        let prox = L1Norm { lambda: 0.1 };
        let f_k = objective(&q, &prox, &x);
        let params = StepsizeParams { delta: 0.99, c_min: 1e-10, j_max: n };
        let f_of = |p: &Point| objective(&q, &prox, p);
        let mut hvp = |w: &Point| &h * w;
        let found = find_stepsize(&x, f_k, &g, params, &f_of, &mut hvp, &prox).unwrap();
        let tau_c = g.norm_squared() / found.cg.first_curvature.unwrap();
        let q_of = |p: &Point| q.value(p);
        let ctx = quadratic_context(&q, &x, &g, &prox, &q_of, found.tau, tau_c);
        let mut cg = found.cg;
        let scan = scan_directions(&ctx, &mut cg, &mut hvp, n, 1e6);
        for cand in scan.accepted.iter().chain(scan.rejected.iter()) {
            let Some(c) = cand.coeffs else { continue };
            assert!((c.a - cand.z.norm_squared()).abs() <= 1e-12 * c.a);
            assert!((c.b - cand.z.dot(&(&h * &cand.z))).abs() <= 1e-10 * c.b.abs().max(1.0));
            if cand.certified {
                let scale = c.a + c.b.abs() + c.c.abs();
                assert!(min_sampled_gap(&c, cand.tau_tilde, 100) >= -1e-10 * scale);
                assert!(cand.f_trial <= f_k);
            }
        }
    }
}

#[test]
fn cauchy_fallback_is_a_gradient_step() {
    for seed in 0..30 {
        let n = 8;
        let h = random_spd(n, 20.0, seed);
        let lmax = 20.0;
        let mut rng = seeded_rng(seed + 7);
        let q = DenseQuadratic::new(h.clone(), gaussian_vector(n, &mut rng)).unwrap();
        let x = gaussian_vector(n, &mut rng);
        let g = q.gradient(&x);
        let tau_c = g.norm_squared() / g.dot(&(&h * &g));
        let tau_k = 0.99 / lmax;
        let q_of = |p: &Point| q.value(p);
        let ctx = quadratic_context(&q, &x, &g, &ZeroProx, &q_of, tau_k, tau_c);
        let tau_tilde = (1.0f64).min(1.0 / lmax);
        let cand = certify_direction(&ctx, &(&g * -tau_c), tau_tilde);
        let sigma = 0.95 * tau_tilde * tau_k;
        assert!((&cand.offset + &g * sigma).norm() <= 1e-12 * g.norm() * sigma);
        assert!((&cand.x_trial - (&x - &g * sigma)).norm() <= 1e-12 * (1.0 + x.norm()));
        assert!(cand.certified);

        let l1 = L1Norm { lambda: 0.2 };
        let ctx = quadratic_context(&q, &x, &g, &l1, &q_of, tau_k, tau_c);
        let cand = certify_direction(&ctx, &(&g * -tau_c), tau_tilde);
        let pg = l1.prox(&(&x - &g * sigma), 0.95 * tau_tilde);
        assert!((&cand.x_trial - pg).norm() <= 1e-12 * (1.0 + x.norm()));
    }
}

#[test]
fn exact_newton_direction_certifies_on_a_quadratic() {
    let h = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
    let q = DenseQuadratic::new(h.clone(), Point::from_column_slice(&[1.0, -1.0])).unwrap();
    let x = Point::from_column_slice(&[2.0, 0.5]);
    let g = q.gradient(&x);
    let z = -h.clone().lu().solve(&g).unwrap();
    let coeffs = LineCoefficients { a: z.norm_squared(), b: z.dot(&(&h * &z)), c: g.dot(&z) };
    let (_, upper) = tau_tilde_interval(&coeffs).unwrap();
    let tau_c = g.norm_squared() / g.dot(&(&h * &g));
    let lmax = h.clone().symmetric_eigenvalues().max();
    let q_of = |p: &Point| q.value(p);
    let ctx = quadratic_context(&q, &x, &g, &ZeroProx, &q_of, 0.99 / lmax, tau_c);
    let cand = certify_direction(&ctx, &z, upper);
    assert!(cand.certified);
    let expected = &x + &z * (0.95 * upper * ctx.scale());
    assert!((cand.x_trial - expected).norm() < 1e-14);
}

struct SteepCubic;

impl SmoothOracle for SteepCubic {
    fn dimension(&self) -> usize {
        1
    }
    fn value(&self, x: &Point) -> f64 {
        let t = x[0];
        0.5 * t * t - 2.0 * t + 50.0 * t.max(0.0).powi(3)
    }
    fn gradient(&self, x: &Point) -> Point {
        let t = x[0];
        Point::from_element(1, t - 2.0 + 150.0 * t.max(0.0).powi(2))
    }
    fn hvp(&self, x: &Point, w: &Point) -> Point {
        w * (1.0 + 300.0 * x[0].max(0.0))
    }
}

#[test]
fn strong_cubic_growth_fails_certification() {
    let x = Point::zeros(1);
    let g = SteepCubic.gradient(&x);
    let q_of = |p: &Point| SteepCubic.value(p);
    let ctx = SelectionContext { x_k: &x, q_k: 0.0, g: &g, tau_k: 0.99, tau_c: 1.0, xi: 0.95, q: &q_of, prox: &ZeroProx };
    let z = Point::from_element(1, 2.0);
    let cand = certify_direction(&ctx, &z, 1.0);
    assert!(!cand.certified);
    assert!(cand.q_trial > surrogate_value(&cand.x_trial, &x, 0.0, &z, ctx.scale(), 1.0));
}

#[test]
fn trial_that_does_not_move_is_not_certified() {
    let q = DenseQuadratic::new(DMatrix::identity(2, 2), Point::from_column_slice(&[0.1, 0.1])).unwrap();
    let x = Point::zeros(2);
    let g = q.gradient(&x);
    let q_of = |p: &Point| q.value(p);
    let l1 = L1Norm { lambda: 10.0 };
    let ctx = quadratic_context(&q, &x, &g, &l1, &q_of, 0.99, 1.0);
    let cand = certify_direction(&ctx, &(-&g), 1.0);
    assert_eq!(cand.x_trial, x);
    assert!(!cand.certified);
}

#[test]
fn every_cg_direction_certifies_on_a_smooth_quadratic() {
    for seed in 0..20 {
        let n = 10;
        let h = random_spd(n, 10.0, seed);
        let mut rng = seeded_rng(seed + 50);
        let q = DenseQuadratic::new(h.clone(), gaussian_vector(n, &mut rng)).unwrap();
        let x = gaussian_vector(n, &mut rng);
        let g = q.gradient(&x);
        let tau_c = g.norm_squared() / g.dot(&(&h * &g));
        let q_of = |p: &Point| q.value(p);
        let ctx = quadratic_context(&q, &x, &g, &ZeroProx, &q_of, 0.99 / 10.0, tau_c);
        let mut cg = CgState::new(&g);
        let mut hvp = |w: &Point| &h * w;
        let scan = scan_directions(&ctx, &mut cg, &mut hvp, n, 1e6);
        assert!(scan.rejected.is_none(), "seed {seed}");
        let acc = scan.accepted.unwrap();
        assert_eq!(acc.source, CandidateSource::Krylov(cg.z_history.len()));
    }
}

fn manual_candidate(x_k: &Point, offset: Point, radius: f64, f_of: &dyn Fn(&Point) -> f64) -> MajorizationCandidate {
    let x_trial = x_k + &offset;
    let f_trial = f_of(&x_trial);
    MajorizationCandidate {
        source: CandidateSource::Krylov(1),
        z: offset.clone(),
        coeffs: None,
        tau_tilde: radius,
        scale: 1.0,
        radius,
        offset,
        x_trial,
        q_trial: f_trial,
        f_trial,
        certified: true,
    }
}

#[test]
fn segment_search_examples() {
    let f_of = |p: &Point| 0.5 * p.norm_squared();
    let x = Point::from_column_slice(&[1.0, 1.0]);
    let acc = manual_candidate(&x, &x * -0.5, 1.0, &f_of);

    let none = segment_backtrack(&acc, None, &x, &f_of, &ZeroProx, 0.5, 1e-3);
    assert_eq!(none.mu_star, 0.0);
    assert_eq!(none.x_next, acc.x_trial);

    let good = manual_candidate(&x, &x * -0.9, 2.0, &f_of);
    let first = segment_backtrack(&acc, Some(&good), &x, &f_of, &ZeroProx, 0.5, 1e-3);
    assert_eq!(first.mu_star, 1.0);
    assert_eq!(first.x_next, good.x_trial);
    assert_eq!(first.tau_tilde, 2.0);

    let overshoot = manual_candidate(&x, &x * -3.0, 1.0, &f_of);
    let mid = segment_backtrack(&acc, Some(&overshoot), &x, &f_of, &ZeroProx, 0.5, 1e-3);
    assert_eq!(mid.mu_star, 0.25);
    assert!(mid.f_next <= acc.f_trial);
    assert_eq!(mid.evaluations, 3);

    let hopeless = manual_candidate(&x, &x * 5.0, 1.0, &f_of);
    let zero = segment_backtrack(&acc, Some(&hopeless), &x, &f_of, &ZeroProx, 0.5, 1e-3);
    assert_eq!(zero.mu_star, 0.0);
    assert_eq!(zero.x_next, acc.x_trial);
}
