//! Curvature-aware isotropic surrogate along CG directions, the admissible
//! proximal-radius interval, the certification test, and the scan over the
//! CG sequence.
//!
//! For a direction `z` with scale `s = τ_k/τ_c` the surrogate is
//!
//! ```text
//! m̃_τ̃(x) = q(x_k) − s·zᵀ(x − x_k) + ‖x − x_k‖²/(2τ̃)
//! ```
//!
//! and `z` is certified when the minimizer `x̃` of `m̃_{ξτ̃} + h` satisfies
//! `q(x̃) ≤ m̃_τ̃(x̃)`, which forces `f(x̃) ≤ f(x_k) − (1/ξ − 1)‖x̃ − x_k‖²/(2τ̃)`.

use crate::cg::{cg_step, CgState};
use crate::oracle::{Point, ProxOperator};

/// Absolute-plus-relative slack in the certification inequality.
pub const CERTIFY_SLACK: f64 = 1e-12;

/// A trial point closer than this (relative) to `x_k` satisfies the
/// inequality trivially and is not certified.
pub const STALL_RTOL: f64 = 1e-14;

/// Relative slack under which `A + C` counts as zero in the interval test.
pub const INTERVAL_RTOL: f64 = 1e-12;

/// Line coefficients of a direction `z`: `A = ‖z‖²`, `B = zᵀHz`, `C = ⟨g, z⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LineCoefficients {
    /// Surrogate-minus-model gap `d(α) = −(A + C)α + ½(A/τ̃ − B)α²` along
    /// `x_k + αz`.
    pub fn gap(&self, tau_tilde: f64, alpha: f64) -> f64 {
        -(self.a + self.c) * alpha + 0.5 * (self.a / tau_tilde - self.b) * alpha * alpha
    }
}

/// The interval is empty: no radius makes the surrogate dominate the model on
/// the whole segment `α ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmptyInterval;

/// Radii `τ̃` for which `d(α) ≥ 0` on `[0, 1]`.
///
/// With `A + C ≤ 0` every `τ̃ ≤ A/B` works (any `τ̃` when `B ≤ 0`). With
/// `A + C > 0` the gap has slope `−(A + C) < 0` at `α = 0`, so it is negative
/// right after the base point whatever `τ̃` is, and the interval is empty.
pub fn tau_tilde_interval(coeffs: &LineCoefficients) -> Result<(f64, f64), EmptyInterval> {
    let LineCoefficients { a, b, c } = *coeffs;
    if !(a > 0.0) {
        return Err(EmptyInterval);
    }
    if a + c > INTERVAL_RTOL * (a + c.abs()) {
        return Err(EmptyInterval);
    }
    let upper = if b > 0.0 { a / b } else { f64::INFINITY };
    Ok((0.0, upper))
}

/// Where a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    /// CG iterate `z^j`.
    Krylov(usize),
    /// `z = −τ_c g`.
    Cauchy,
    /// The proximal-gradient point of the step-size search.
    Stepsize,
}

/// A scaled direction with its radius, trial point and verdict.
///
/// Every candidate has the form `x̃ = prox_{radius·h}(x_k + offset)`, which is
/// what the segment search interpolates.
#[derive(Debug, Clone)]
pub struct MajorizationCandidate {
    pub source: CandidateSource,
    pub z: Point,
    pub coeffs: Option<LineCoefficients>,
    pub tau_tilde: f64,
    /// `τ_k / τ_c`.
    pub scale: f64,
    /// Prox radius used for the trial point (`ξτ̃` for surrogate candidates).
    pub radius: f64,
    /// Prox-argument offset from `x_k` (`ξτ̃·scale·z` for surrogate candidates).
    pub offset: Point,
    pub x_trial: Point,
    pub q_trial: f64,
    pub f_trial: f64,
    pub certified: bool,
}

/// `q(x_k) − scale·zᵀ(x − x_k) + ‖x − x_k‖²/(2·radius)`.
pub fn surrogate_value(x: &Point, x_k: &Point, q_k: f64, z: &Point, scale: f64, radius: f64) -> f64 {
    let dx = x - x_k;
    q_k - scale * z.dot(&dx) + dx.norm_squared() / (2.0 * radius)
}

/// Inputs shared by every candidate of one outer iteration.
pub struct SelectionContext<'a> {
    pub x_k: &'a Point,
    pub q_k: f64,
    pub g: &'a Point,
    pub tau_k: f64,
    pub tau_c: f64,
    pub xi: f64,
    pub q: &'a dyn Fn(&Point) -> f64,
    pub prox: &'a dyn ProxOperator,
}

impl SelectionContext<'_> {
    pub fn scale(&self) -> f64 {
        self.tau_k / self.tau_c
    }
}

/// Trial point `x̃ = prox_{ξτ̃h}(x_k + ξτ̃·(τ_k/τ_c)·z)` and the test
/// `q(x̃) ≤ m̃_τ̃(x̃, x_k)`. A trial that does not move away from `x_k` is
/// never certified.
pub fn certify_direction(ctx: &SelectionContext<'_>, z: &Point, tau_tilde: f64) -> MajorizationCandidate {
    let scale = ctx.scale();
    let radius = ctx.xi * tau_tilde;
    let offset = z * (radius * scale);
    let x_trial = ctx.prox.prox(&(ctx.x_k + &offset), radius);
    let q_trial = (ctx.q)(&x_trial);
    let model = surrogate_value(&x_trial, ctx.x_k, ctx.q_k, z, scale, tau_tilde);
    let moved = (&x_trial - ctx.x_k).norm() > STALL_RTOL * (1.0 + ctx.x_k.norm());
    let certified = moved && q_trial <= model + CERTIFY_SLACK * (1.0 + q_trial.abs());
    let h = ctx.prox.value(&x_trial);
    MajorizationCandidate {
        source: CandidateSource::Cauchy,
        z: z.clone(),
        coeffs: None,
        tau_tilde,
        scale,
        radius,
        offset,
        x_trial,
        q_trial,
        f_trial: q_trial + h,
        certified,
    }
}

/// Largest admissible radius, clamped to `[1e-12, cap]`; the uncertifiable
/// fallback `A/B` (or `cap`) when the interval is empty.
fn pick_radius(coeffs: &LineCoefficients, cap: f64) -> (f64, bool) {
    match tau_tilde_interval(coeffs) {
        Ok((_, upper)) => (upper.clamp(1e-12, cap), true),
        Err(EmptyInterval) => {
            let upper = if coeffs.b > 0.0 { coeffs.a / coeffs.b } else { cap };
            (upper.clamp(1e-12, cap), false)
        }
    }
}

/// Result of scanning the CG sequence.
#[derive(Debug, Clone)]
pub struct ScanResult {
    /// Last certified Krylov direction, or the Cauchy fallback when it
    /// certifies; `None` when neither does.
    pub accepted: Option<MajorizationCandidate>,
    /// First direction that failed.
    pub rejected: Option<MajorizationCandidate>,
    pub directions_tested: usize,
}

/// Walks `z¹, z², ...`, extending the CG recursion as needed up to `j_max`,
/// certifying each direction at the largest admissible radius. Stops at the
/// first failure. Falls back to `z = −τ_c g` with `τ̃ = min(1, upper)` when no
/// CG direction certifies.
pub fn scan_directions(
    ctx: &SelectionContext<'_>,
    cg: &mut CgState,
    hvp: &mut dyn FnMut(&Point) -> Point,
    j_max: usize,
    tau_tilde_cap: f64,
) -> ScanResult {
    let mut accepted = None;
    let mut rejected = None;
    let mut tested = 0;
    let mut j = 0;
    loop {
        if j >= cg.z_history.len() {
            if cg.j >= j_max || !cg.can_continue() {
                break;
            }
            cg_step(cg, hvp);
            if j >= cg.z_history.len() {
                break;
            }
        }
        let z = cg.z_history[j].clone();
        j += 1;
        let a = z.norm_squared();
        if a == 0.0 {
            continue;
        }
        let hz = hvp(&z);
        let coeffs = LineCoefficients { a, b: z.dot(&hz), c: ctx.g.dot(&z) };
        let (tau_tilde, admissible) = pick_radius(&coeffs, tau_tilde_cap);
        let mut cand = certify_direction(ctx, &z, tau_tilde);
        cand.source = CandidateSource::Krylov(j);
        cand.coeffs = Some(coeffs);
        cand.certified &= admissible;
        tested += 1;
        if cand.certified {
            accepted = Some(cand);
        } else {
            rejected = Some(cand);
            break;
        }
    }

    if accepted.is_none() {
        if let Some(cand) = cauchy_candidate(ctx, cg, hvp) {
            tested += 1;
            if cand.certified {
                accepted = Some(cand);
            }
        }
    }
    ScanResult { accepted, rejected, directions_tested: tested }
}

/// `z = −τ_c g` with `τ̃ = min(1, upper)`.
fn cauchy_candidate(
    ctx: &SelectionContext<'_>,
    cg: &CgState,
    hvp: &mut dyn FnMut(&Point) -> Point,
) -> Option<MajorizationCandidate> {
    let gg = ctx.g.norm_squared();
    if gg == 0.0 {
        return None;
    }
    let ghg = match cg.first_curvature {
        Some(v) => v,
        None => ctx.g.dot(&hvp(ctx.g)),
    };
    let tc = ctx.tau_c;
    let z = ctx.g * (-tc);
    let coeffs = LineCoefficients { a: tc * tc * gg, b: tc * tc * ghg, c: -tc * gg };
    let (upper, admissible) = pick_radius(&coeffs, f64::INFINITY);
    let mut cand = certify_direction(ctx, &z, upper.min(1.0));
    cand.source = CandidateSource::Cauchy;
    cand.coeffs = Some(coeffs);
    cand.certified &= admissible;
    Some(cand)
}

/// The proximal-gradient point of the step-size search as a candidate:
/// `prox_{τ_k h}(x_k − τ_k g)`, which satisfies the sufficient-decrease test.
pub fn stepsize_candidate(ctx: &SelectionContext<'_>, x_plus: &Point, f_plus: f64) -> MajorizationCandidate {
    let q_trial = (ctx.q)(x_plus);
    MajorizationCandidate {
        source: CandidateSource::Stepsize,
        z: ctx.g * (-ctx.tau_c),
        coeffs: None,
        tau_tilde: ctx.tau_k,
        scale: ctx.scale(),
        radius: ctx.tau_k,
        offset: ctx.g * (-ctx.tau_k),
        x_trial: x_plus.clone(),
        q_trial,
        f_trial: f_plus,
        certified: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_gap(c: &LineCoefficients, tau: f64) -> f64 {
        (0..=1000).map(|i| c.gap(tau, i as f64 / 1000.0)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn interval_examples() {
        let c = LineCoefficients { a: 1.0, b: 1.0, c: -2.0 };
        assert_eq!(tau_tilde_interval(&c), Ok((0.0, 1.0)));
        let c = LineCoefficients { a: 1.0, b: -1.0, c: -2.0 };
        assert_eq!(tau_tilde_interval(&c), Ok((0.0, f64::INFINITY)));
        for tau in [1.0, 10.0, 100.0] {
            assert!(min_gap(&c, tau) >= 0.0);
        }
    }

    #[test]
    fn positive_slope_branch_is_empty() {
        // A + C > 0: d'(0) = −(A + C) < 0, so d dips below zero for every radius
        let c = LineCoefficients { a: 1.0, b: 1.0, c: 0.0 };
        assert_eq!(tau_tilde_interval(&c), Err(EmptyInterval));
        for tau in [0.5, 0.75, 1.0, 1e-3] {
            assert!(min_gap(&c, tau) < 0.0);
        }
    }

    #[test]
    fn gap_at_upper_bound_is_the_linear_term() {
        let c = LineCoefficients { a: 2.0, b: 3.0, c: -2.5 };
        let (_, upper) = tau_tilde_interval(&c).unwrap();
        assert!((c.gap(upper, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn surrogate_is_anchored_at_base_point() {
        let xk = Point::from_column_slice(&[1.0, 2.0]);
        let z = Point::from_column_slice(&[0.3, -0.4]);
        assert_eq!(surrogate_value(&xk, &xk, 7.5, &z, 0.9, 0.1), 7.5);
    }
}
