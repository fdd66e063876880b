//! Inner conjugate-gradient recursion on `H_k z = −g_k` with curvature
//! checks, and the joint direction/step-size search that turns the Ritz
//! values of the CG tridiagonal into proximal step sizes.

use crate::error::{Error, Result};
use crate::oracle::{Point, ProxOperator};
use crate::spectrum::{build_tridiagonal, max_eigenvalue, stepsize_from_ritz, RitzEstimate};

/// Relative threshold below which `dᵀHd` counts as zero curvature.
pub const ZERO_CURVATURE_RTOL: f64 = 1e-14;

/// Outcome of the latest curvature check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Ok,
    /// `dᵀHd < 0`; no update was applied.
    Negative,
    /// `|dᵀHd| ≤ 1e-14·‖d‖²`; no update was applied.
    Zero,
    /// The update was applied and the residual vanished to machine precision.
    Converged,
}

/// CG iterates for one outer iteration.
#[derive(Debug, Clone)]
pub struct CgState {
    pub g: Point,
    pub z: Point,
    pub r: Point,
    pub d: Point,
    /// `α⁰, α¹, ...`
    pub alphas: Vec<f64>,
    /// `β¹, β², ...`, one per completed step.
    pub betas: Vec<f64>,
    pub j: usize,
    pub curvature: Curvature,
    /// `z¹, z², ...`
    pub z_history: Vec<Point>,
    /// `gᵀHg`, recorded by the first curvature check.
    pub first_curvature: Option<f64>,
    rr: f64,
    rr0: f64,
}

impl CgState {
    pub fn new(g: &Point) -> Self {
        let rr = g.norm_squared();
        Self {
            g: g.clone(),
            z: Point::zeros(g.len()),
            r: g.clone(),
            d: -g,
            alphas: Vec::new(),
            betas: Vec::new(),
            j: 0,
            curvature: Curvature::Ok,
            z_history: Vec::new(),
            first_curvature: None,
            rr,
            rr0: rr,
        }
    }

    pub fn can_continue(&self) -> bool {
        self.curvature == Curvature::Ok
    }

    /// Tridiagonal and its largest eigenvalue for the steps taken so far.
    pub fn ritz(&self) -> Result<RitzEstimate> {
        let t = build_tridiagonal(&self.alphas, &self.betas[..self.j.saturating_sub(1)])?;
        Ok(RitzEstimate { theta_max: max_eigenvalue(&t), j: self.j })
    }
}

/// One CG step. `hvp` applies the Hessian at the current outer iterate.
pub fn cg_step(state: &mut CgState, hvp: &mut dyn FnMut(&Point) -> Point) {
    if !state.can_continue() {
        return;
    }
    let hd = hvp(&state.d);
    let dhd = state.d.dot(&hd);
    if state.j == 0 {
        state.first_curvature = Some(dhd);
    }
    let dd = state.d.norm_squared();
    if dd == 0.0 || dhd.abs() <= ZERO_CURVATURE_RTOL * dd {
        state.curvature = Curvature::Zero;
        return;
    }
    if dhd < 0.0 {
        state.curvature = Curvature::Negative;
        return;
    }
    let alpha = state.rr / dhd;
    state.z.axpy(alpha, &state.d, 1.0);
    state.r.axpy(alpha, &hd, 1.0);
    let rr_next = state.r.norm_squared();
    let beta = rr_next / state.rr;
    state.d *= beta;
    state.d -= &state.r;
    state.rr = rr_next;
    state.alphas.push(alpha);
    state.betas.push(beta);
    state.j += 1;
    state.z_history.push(state.z.clone());
    if rr_next <= (f64::EPSILON * f64::EPSILON) * state.rr0 {
        state.curvature = Curvature::Converged;
    }
}

/// Cauchy step length `⟨g,g⟩/⟨g,Hg⟩`; `None` signals nonpositive curvature
/// along `g`.
pub fn cauchy_step(g: &Point, hvp: &mut dyn FnMut(&Point) -> Point) -> Option<f64> {
    let ghg = g.dot(&hvp(g));
    if ghg > 0.0 {
        Some(g.norm_squared() / ghg)
    } else {
        None
    }
}

/// Parameters of the step-size search.
#[derive(Debug, Clone, Copy)]
pub struct StepsizeParams {
    pub delta: f64,
    pub c_min: f64,
    pub j_max: usize,
}

/// Maximum number of step halvings in the backtracking fallback.
pub const MAX_HALVINGS: usize = 60;

/// Accepted step size and the proximal-gradient point it certifies.
#[derive(Debug, Clone)]
pub struct StepsizeResult {
    pub tau: f64,
    pub x_plus: Point,
    pub f_plus: f64,
    /// Ritz value behind `tau`; `None` when the geometric fallback produced it.
    pub theta: Option<f64>,
    pub j_used: usize,
    pub cg: CgState,
    /// Ritz value after each CG step taken by the search.
    pub ritz_trace: Vec<RitzEstimate>,
    pub halvings: usize,
}

/// Grows the CG recursion one step at a time, sets `τ = δ/|θ_max|` and
/// accepts the first `x₊ = prox_{τh}(x − τg)` with
/// `f(x₊) ≤ f_k − c_min‖x₊ − x‖²`. Negative or zero curvature, a degenerate
/// Ritz value, or reaching `j_max` switch to halving `τ`.
pub fn find_stepsize(
    x: &Point,
    f_k: f64,
    g: &Point,
    params: StepsizeParams,
    objective: &dyn Fn(&Point) -> f64,
    hvp: &mut dyn FnMut(&Point) -> Point,
    prox: &dyn ProxOperator,
) -> Result<StepsizeResult> {
    if !(params.delta > 0.0 && params.delta <= 1.0) {
        return Err(Error::ParameterDomain(format!("delta must lie in (0, 1], got {}", params.delta)));
    }
    let trial = |tau: f64| {
        let xp = prox.prox(&(x - g * tau), tau);
        let fp = objective(&xp);
        let ok = fp <= f_k - params.c_min * (&xp - x).norm_squared();
        (xp, fp, ok)
    };

    let mut cg = CgState::new(g);
    let mut ritz_trace = Vec::new();
    let mut last_tau: Option<f64> = None;
    let mut start_tau = 1.0;

    while cg.j < params.j_max.max(1) && cg.can_continue() {
        cg_step(&mut cg, hvp);
        if matches!(cg.curvature, Curvature::Negative | Curvature::Zero) {
            break;
        }
        let ritz = cg.ritz()?;
        ritz_trace.push(ritz);
        let tau = match stepsize_from_ritz(ritz.theta_max, params.delta) {
            Ok(t) => t,
            Err(Error::DegenerateSpectrum) => {
                last_tau = None;
                start_tau = 1.0;
                break;
            }
            Err(e) => return Err(e),
        };
        let (x_plus, f_plus, ok) = trial(tau);
        if ok {
            let j_used = cg.j;
            return Ok(StepsizeResult {
                tau,
                x_plus,
                f_plus,
                theta: Some(ritz.theta_max),
                j_used,
                cg,
                ritz_trace,
                halvings: 0,
            });
        }
        last_tau = Some(tau);
    }

    let mut tau = last_tau.map_or(start_tau, |t| 0.5 * t);
    for halvings in 0..=MAX_HALVINGS {
        let (x_plus, f_plus, ok) = trial(tau);
        if ok {
            let j_used = cg.j;
            return Ok(StepsizeResult { tau, x_plus, f_plus, theta: None, j_used, cg, ritz_trace, halvings });
        }
        tau *= 0.5;
    }
    Err(Error::Stagnation(MAX_HALVINGS))
}
