//! Proximal gradient with monotone geometric backtracking.

use super::{gradient_mapping_with, initial_point, pg_backtrack, Recorder, SolveResult, SolveStats, SolverConfig, StepInfo, Termination};
use crate::error::Result;
use crate::oracle::{Point, ProxOperator, SmoothOracle};

/// Proximal gradient from `x0`. The step starts at `pg_tau0`, is halved until
/// the sufficient-decrease test passes, and never grows back.
pub fn pg_solve(
    oracle: &dyn SmoothOracle,
    prox: &dyn ProxOperator,
    x0: &Point,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let (q, mut g, h0) = initial_point(oracle, prox, x0)?;
    let mut x = x0.clone();
    let mut f = q + h0;
    let mut tau = config.pg_tau0;
    let mut rec = Recorder::new(config);
    let mut step = StepInfo::default();

    let termination = loop {
        let gm = gradient_mapping_with(&x, &g, tau, prox).norm();
        if let Some(t) = rec.record(&x, f, gm, step, 0) {
            break t;
        }
        let Some((xp, fp, t)) = pg_backtrack(&x, f, &g, tau, config.c_min(f), oracle, prox) else {
            break Termination::Stagnation;
        };
        tau = t;
        rec.step_norms.push((&xp - &x).norm());
        step = StepInfo { tau_k: tau, tau_tilde: tau, mu_star: 0.0, cg_steps: 0 };
        x = xp;
        f = fp;
        g = oracle.gradient(&x);
    };
    Ok(rec.finish(x, termination, SolveStats::default()))
}
