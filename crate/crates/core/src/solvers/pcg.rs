//! Proximal conjugate gradient outer loop.

use super::{initial_point, gradient_mapping_with, Recorder, SolveResult, SolveStats, SolverConfig, StepInfo, Termination};
use crate::cg::{find_stepsize, StepsizeParams};
use crate::error::{Error, Result};
use crate::majorize::{scan_directions, stepsize_candidate, MajorizationCandidate, SelectionContext};
use crate::oracle::{objective, CountingOracle, Point, ProxOperator, SmoothOracle};

/// Winner of the segment search between the accepted and rejected candidates.
#[derive(Debug, Clone)]
pub struct SegmentResult {
    pub mu_star: f64,
    pub x_next: Point,
    pub f_next: f64,
    /// `μτ̃_rej + (1 − μ)τ̃_acc`.
    pub tau_tilde: f64,
    pub evaluations: usize,
}

/// Largest `μ` on the grid `1, ρ, ρ², ...` (down to `mu_floor`) whose
/// interpolated trial `prox_{r(μ)h}(x_k + o(μ))` does not increase `f` above
/// the accepted candidate; `μ = 0` returns the accepted trial itself.
///
/// Radii and offsets are the effective prox radius and full prox-argument
/// offset of each candidate, so `μ = 0` reproduces `acc.x_trial` exactly.
pub fn segment_backtrack(
    acc: &MajorizationCandidate,
    rej: Option<&MajorizationCandidate>,
    x_k: &Point,
    f_of: &dyn Fn(&Point) -> f64,
    prox: &dyn ProxOperator,
    grid_factor: f64,
    mu_floor: f64,
) -> SegmentResult {
    let at_zero = SegmentResult {
        mu_star: 0.0,
        x_next: acc.x_trial.clone(),
        f_next: acc.f_trial,
        tau_tilde: acc.tau_tilde,
        evaluations: 0,
    };
    let Some(rej) = rej else {
        return at_zero;
    };
    let mut mu = 1.0;
    let mut evaluations = 0;
    while mu >= mu_floor {
        let radius = mu * rej.radius + (1.0 - mu) * acc.radius;
        let offset = &rej.offset * mu + &acc.offset * (1.0 - mu);
        let x = prox.prox(&(x_k + offset), radius);
        let f = f_of(&x);
        evaluations += 1;
        if f <= acc.f_trial {
            return SegmentResult {
                mu_star: mu,
                x_next: x,
                f_next: f,
                tau_tilde: mu * rej.tau_tilde + (1.0 - mu) * acc.tau_tilde,
                evaluations,
            };
        }
        mu *= grid_factor;
    }
    SegmentResult { evaluations, ..at_zero }
}

/// Runs the proximal conjugate gradient method from `x0`.
pub fn pcg_solve(
    oracle: &dyn SmoothOracle,
    prox: &dyn ProxOperator,
    x0: &Point,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let (mut q, mut g, h0) = initial_point(oracle, prox, x0)?;
    let counting = CountingOracle::new(oracle);
    let n = oracle.dimension();
    let j_max = config.j_max_for(n);
    let q_of = |p: &Point| oracle.value(p);
    let f_of = |p: &Point| objective(oracle, prox, p);

    let mut x = x0.clone();
    let mut f = q + h0;
    let mut theta_hat: Option<f64> = None;
    let mut rec = Recorder::new(config);
    let mut stats = SolveStats::default();
    let mut step = StepInfo::default();

    let termination = loop {
        let tau_gm = theta_hat.map_or(1.0, |t| 1.0 / t.abs());
        let gm = gradient_mapping_with(&x, &g, tau_gm, prox).norm();
        if let Some(t) = rec.record(&x, f, gm, step, counting.hvp_count()) {
            break t;
        }

        let params = StepsizeParams { delta: config.delta, c_min: config.c_min(f), j_max };
        let mut hvp = |w: &Point| counting.hvp(&x, w);
        let found = match find_stepsize(&x, f, &g, params, &f_of, &mut hvp, prox) {
            Ok(s) => s,
            Err(Error::Stagnation(_)) => break Termination::Stagnation,
            Err(e) => return Err(e),
        };
        if found.theta.is_some() {
            theta_hat = found.theta;
        }
        let tau_k = found.tau;
        let tau_c = match found.cg.first_curvature {
            Some(ghg) if ghg > 0.0 => g.norm_squared() / ghg,
            _ => tau_k,
        };
        let ctx = SelectionContext { x_k: &x, q_k: q, g: &g, tau_k, tau_c, xi: config.xi, q: &q_of, prox };
        let mut cg = found.cg;
        let scan = scan_directions(&ctx, &mut cg, &mut hvp, j_max, config.tau_tilde_cap);
        let acc = match scan.accepted {
            Some(a) => {
                if matches!(a.source, crate::majorize::CandidateSource::Krylov(_)) {
                    stats.krylov_accepts += 1;
                }
                a
            }
            None => {
                stats.stepsize_fallbacks += 1;
                stepsize_candidate(&ctx, &found.x_plus, found.f_plus)
            }
        };
        let mut seg = segment_backtrack(
            &acc,
            scan.rejected.as_ref(),
            &x,
            &f_of,
            prox,
            config.mu_grid_factor,
            config.mu_floor,
        );
        let beaten = config.stepsize_safeguard && found.f_plus < seg.f_next;
        if beaten || !(seg.f_next <= f) {
            stats.stepsize_overrides += 1;
            seg.x_next = found.x_plus;
            seg.f_next = found.f_plus;
            seg.mu_star = 0.0;
            seg.tau_tilde = tau_k;
        }

        rec.step_norms.push((&seg.x_next - &x).norm());
        step = StepInfo { tau_k, tau_tilde: seg.tau_tilde, mu_star: seg.mu_star, cg_steps: cg.j };
        x = seg.x_next;
        let (qn, gn) = counting.value_and_gradient(&x);
        q = qn;
        g = gn;
        f = seg.f_next;
    };
    stats.hvp_count = counting.hvp_count();
    Ok(rec.finish(x, termination, stats))
}
