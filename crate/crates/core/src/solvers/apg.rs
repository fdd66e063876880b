//! Monotone accelerated proximal gradient.

use super::{gradient_mapping_with, initial_point, pg_backtrack, Recorder, SolveResult, SolveStats, SolverConfig, StepInfo, Termination};
use crate::error::Result;
use crate::oracle::{objective, Point, ProxOperator, SmoothOracle};

/// Extrapolates `y = x_k + ((t_{k−1} − 1)/t_k)(x_k − x_{k−1})`, takes the
/// prox-gradient step from `y`, and keeps it only if `f` does not increase;
/// otherwise takes a backtracked proximal-gradient step from `x_k`.
pub fn apg_solve(
    oracle: &dyn SmoothOracle,
    prox: &dyn ProxOperator,
    x0: &Point,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let (q, mut g, h0) = initial_point(oracle, prox, x0)?;
    let mut x = x0.clone();
    let mut x_prev = x0.clone();
    let mut f = q + h0;
    let mut tau = config.pg_tau0;
    let mut t_prev: f64 = 1.0;
    let mut rec = Recorder::new(config);
    let mut stats = SolveStats::default();
    let mut step = StepInfo::default();

    let termination = loop {
        let gm = gradient_mapping_with(&x, &g, tau, prox).norm();
        if let Some(t) = rec.record(&x, f, gm, step, 0) {
            break t;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
        let momentum = (t_prev - 1.0) / t_next;
        t_prev = t_next;

        let mut next = None;
        if momentum > 0.0 && x != x_prev {
            let y = &x + (&x - &x_prev) * momentum;
            let gy = oracle.gradient(&y);
            let z = prox.prox(&(&y - gy * tau), tau);
            let fz = objective(oracle, prox, &z);
            if fz <= f {
                next = Some((z, fz));
            } else {
                stats.extrapolation_rejections += 1;
            }
        }
        let (xn, fnext) = match next {
            Some(v) => v,
            None => {
                let Some((xp, fp, t)) = pg_backtrack(&x, f, &g, tau, config.c_min(f), oracle, prox) else {
                    break Termination::Stagnation;
                };
                tau = t;
                (xp, fp)
            }
        };
        rec.step_norms.push((&xn - &x).norm());
        step = StepInfo { tau_k: tau, tau_tilde: tau, mu_star: 0.0, cg_steps: 0 };
        x_prev = std::mem::replace(&mut x, xn);
        f = fnext;
        g = oracle.gradient(&x);
    };
    Ok(rec.finish(x, termination, stats))
}
