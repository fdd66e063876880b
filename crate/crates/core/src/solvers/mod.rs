//! Outer solvers sharing one configuration and one trace format.

mod apg;
mod pcg;
mod pg;

use std::fmt;
use std::time::Instant;

pub use apg::apg_solve;
pub use pcg::{pcg_solve, segment_backtrack, SegmentResult};
pub use pg::pg_solve;

use crate::error::{Error, Result};
use crate::oracle::{Point, ProxOperator, SmoothOracle};

/// Solver parameters. `Default` gives the documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Ritz step-size safety factor in `(0, 1]`.
    pub delta: f64,
    /// Radius shrink factor of the trial prox in `(0, 1)`.
    pub xi: f64,
    /// Sufficient-decrease constant relative to `max(1, |f(x_k)|)`.
    pub c_min_factor: f64,
    /// CG step cap; `None` means `min(n, 50)`.
    pub j_max: Option<usize>,
    /// Ratio of the geometric `μ` grid in `(0, 1)`.
    pub mu_grid_factor: f64,
    /// Smallest `μ` tried before falling back to `μ = 0`.
    pub mu_floor: f64,
    pub max_iters: usize,
    /// Tolerance on `‖G_τ(x)‖ / (1 + ‖x‖)`.
    pub tol_gradmap: f64,
    pub time_limit_s: Option<f64>,
    pub seed: u64,
    /// Radius used when a direction has nonpositive curvature.
    pub tau_tilde_cap: f64,
    /// Initial step of the proximal-gradient baselines.
    pub pg_tau0: f64,
    /// Consecutive near-zero objective changes that count as stagnation.
    pub stagnation_window: usize,
    /// PCG takes the step-size point whenever it beats the segment winner.
    pub stepsize_safeguard: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta: 0.99,
            xi: 0.95,
            c_min_factor: 1e-10,
            j_max: None,
            mu_grid_factor: 0.5,
            mu_floor: 1e-3,
            max_iters: 2000,
            tol_gradmap: 1e-6,
            time_limit_s: None,
            seed: 0,
            tau_tilde_cap: 1e6,
            pg_tau0: 1.0,
            stagnation_window: 10,
            stepsize_safeguard: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Configuration(msg));
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return bad(format!("xi must lie in (0, 1), got {}", self.xi));
        }
        if !(self.mu_grid_factor > 0.0 && self.mu_grid_factor < 1.0) {
            return bad(format!("mu_grid_factor must lie in (0, 1), got {}", self.mu_grid_factor));
        }
        if !(self.mu_floor > 0.0 && self.mu_floor <= 1.0) {
            return bad(format!("mu_floor must lie in (0, 1], got {}", self.mu_floor));
        }
        if !(self.c_min_factor >= 0.0) {
            return bad(format!("c_min_factor must be nonnegative, got {}", self.c_min_factor));
        }
        if !(self.tol_gradmap >= 0.0) {
            return bad(format!("tol_gradmap must be nonnegative, got {}", self.tol_gradmap));
        }
        if let Some(t) = self.time_limit_s {
            if !(t > 0.0) {
                return bad(format!("time_limit_s must be positive, got {t}"));
            }
        }
        if self.j_max == Some(0) {
            return bad("j_max must be at least 1".into());
        }
        if !(self.tau_tilde_cap > 0.0) || !(self.pg_tau0 > 0.0) {
            return bad("tau_tilde_cap and pg_tau0 must be positive".into());
        }
        Ok(())
    }

    pub fn j_max_for(&self, n: usize) -> usize {
        self.j_max.unwrap_or_else(|| n.min(50)).max(1)
    }

    pub fn c_min(&self, f: f64) -> f64 {
        self.c_min_factor * f.abs().max(1.0)
    }
}

/// One row of a solver trace. Row 0 describes `x_0`; row `k` describes `x_k`
/// and the step that produced it. `hvp_count` is cumulative.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub f: f64,
    pub gradmap_norm: f64,
    pub tau_k: f64,
    pub tau_tilde: f64,
    pub mu_star: f64,
    pub cg_steps: usize,
    pub hvp_count: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    MaxIters,
    TimeLimit,
    Stagnation,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Tolerance => "tolerance",
            Termination::MaxIters => "max_iters",
            Termination::TimeLimit => "time_limit",
            Termination::Stagnation => "stagnation",
        })
    }
}

/// Per-solve counters beyond the trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub hvp_count: usize,
    /// APG: extrapolated candidates rejected by the monotone safeguard.
    pub extrapolation_rejections: usize,
    /// PCG: iterations that took the step-size point because no surrogate
    /// candidate certified.
    pub stepsize_fallbacks: usize,
    /// PCG: iterations whose segment winner was replaced by the step-size
    /// point, either because it did not decrease `f` in floating point or
    /// because the step-size point was lower.
    pub stepsize_overrides: usize,
    /// PCG: iterations where the accepted direction came from the CG sequence.
    pub krylov_accepts: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: Point,
    pub trace: Vec<IterateRecord>,
    pub termination: Termination,
    /// `‖x_{k+1} − x_k‖` for every completed iteration.
    pub step_norms: Vec<f64>,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn final_f(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.f)
    }

    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.k)
    }
}

/// `G_τ(x) = (x − prox_{τh}(x − τg))/τ` for a known gradient `g`.
pub fn gradient_mapping_with(x: &Point, g: &Point, tau: f64, prox: &dyn ProxOperator) -> Point {
    (x - prox.prox(&(x - g * tau), tau)) / tau
}

/// `G_τ(x)` with the gradient taken from the oracle.
pub fn gradient_mapping(oracle: &dyn SmoothOracle, prox: &dyn ProxOperator, x: &Point, tau: f64) -> Result<Point> {
    if !(tau > 0.0) {
        return Err(Error::ParameterDomain(format!("gradient mapping needs tau > 0, got {tau}")));
    }
    Ok(gradient_mapping_with(x, &oracle.gradient(x), tau, prox))
}

/// Step fields of the next trace row.
#[derive(Debug, Clone, Copy, Default)]
struct StepInfo {
    tau_k: f64,
    tau_tilde: f64,
    mu_star: f64,
    cg_steps: usize,
}

/// Trace bookkeeping and the termination rules shared by all solvers.
struct Recorder<'a> {
    config: &'a SolverConfig,
    start: Instant,
    trace: Vec<IterateRecord>,
    step_norms: Vec<f64>,
    flat_steps: usize,
    last_f: Option<f64>,
}

impl<'a> Recorder<'a> {
    fn new(config: &'a SolverConfig) -> Self {
        Self { config, start: Instant::now(), trace: Vec::new(), step_norms: Vec::new(), flat_steps: 0, last_f: None }
    }

    /// Appends the row for the current iterate and reports whether to stop.
    fn record(&mut self, x: &Point, f: f64, gradmap_norm: f64, step: StepInfo, hvp_count: usize) -> Option<Termination> {
        let k = self.trace.len();
        self.trace.push(IterateRecord {
            k,
            f,
            gradmap_norm,
            tau_k: step.tau_k,
            tau_tilde: step.tau_tilde,
            mu_star: step.mu_star,
            cg_steps: step.cg_steps,
            hvp_count,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        });
        if let Some(prev) = self.last_f {
            if (prev - f).abs() < 1e-15 * (1.0 + f.abs()) {
                self.flat_steps += 1;
            } else {
                self.flat_steps = 0;
            }
        }
        self.last_f = Some(f);

        if gradmap_norm / (1.0 + x.norm()) <= self.config.tol_gradmap {
            return Some(Termination::Tolerance);
        }
        if self.flat_steps >= self.config.stagnation_window {
            return Some(Termination::Stagnation);
        }
        if k >= self.config.max_iters {
            return Some(Termination::MaxIters);
        }
        if let Some(limit) = self.config.time_limit_s {
            if self.start.elapsed().as_secs_f64() >= limit {
                return Some(Termination::TimeLimit);
            }
        }
        None
    }

    fn finish(self, x_final: Point, termination: Termination, stats: SolveStats) -> SolveResult {
        SolveResult { x_final, trace: self.trace, termination, step_norms: self.step_norms, stats }
    }
}

/// Checks `x0` and returns `(q, g, h)` there.
fn initial_point(oracle: &dyn SmoothOracle, prox: &dyn ProxOperator, x0: &Point) -> Result<(f64, Point, f64)> {
    let (q, g) = crate::oracle::evaluate(oracle, x0)?;
    let h = prox.value(x0);
    if !(q + h).is_finite() {
        return Err(Error::InvalidInput("objective is not finite at the starting point".into()));
    }
    Ok((q, g, h))
}

/// One proximal-gradient step from `x` with halving until
/// `f(x₊) ≤ f − c‖x₊ − x‖²`. Returns `(x₊, f₊, τ)`.
fn pg_backtrack(
    x: &Point,
    f: f64,
    g: &Point,
    mut tau: f64,
    c_min: f64,
    oracle: &dyn SmoothOracle,
    prox: &dyn ProxOperator,
) -> Option<(Point, f64, f64)> {
    for _ in 0..=crate::cg::MAX_HALVINGS {
        let xp = prox.prox(&(x - g * tau), tau);
        let fp = crate::oracle::objective(oracle, prox, &xp);
        if fp <= f - c_min * (&xp - x).norm_squared() {
            return Some((xp, fp, tau));
        }
        tau *= 0.5;
    }
    None
}
