//! Interior solves for one segment: the closed-form cubic for the
//! square-root model and a bisection on the marginal level for any
//! concave curve.

use super::kkt::POWER_REL_TOL;
use crate::error::{Error, Result};
use crate::poly_roots::{distinct_real_roots, CubicCoefficients};
use crate::stack_model::{EquivalentStack, PowerCurve};

const NEWTON_STEPS: usize = 5;
const BISECTION_MAX_ITER: usize = 200;
const MU_REL_WIDTH: f64 = 1e-13;
/// Slack on the `√I` bounds when screening roots.
const X_BOUND_TOL: f64 = 1e-9;

/// One real root of the segment cubic mapped back to every interior branch.
#[derive(Debug, Clone, PartialEq)]
pub struct RootCandidate {
    /// `√I` per branch; may be negative for spurious roots.
    pub x: Vec<f64>,
    pub currents: Vec<f64>,
    pub total_current: f64,
    /// Shared marginal power of the candidate.
    pub mu: f64,
}

/// Affine map `x_j = g_j·x_ref + h_j` that equalizes marginal power.
struct EqualMarginalLine {
    g: Vec<f64>,
    h: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl EqualMarginalLine {
    fn new(stacks: &[EquivalentStack], reference: usize) -> Self {
        let (a_ref, b_ref) = (stacks[reference].a_eq(), stacks[reference].b_eq());
        let a: Vec<f64> = stacks.iter().map(|s| s.a_eq()).collect();
        let b: Vec<f64> = stacks.iter().map(|s| s.b_eq()).collect();
        let g = b.iter().map(|&bj| b_ref / bj).collect();
        let h = a.iter().zip(&b).map(|(&aj, &bj)| (a_ref - aj) / (1.5 * bj)).collect();
        EqualMarginalLine { g, h, a, b }
    }

    fn x(&self, x_ref: f64) -> impl Iterator<Item = f64> + '_ {
        self.g.iter().zip(&self.h).map(move |(g, h)| g * x_ref + h)
    }

    /// `Σ a_j x_j² + b_j x_j³` expanded in powers of `x_ref`.
    fn cubic(&self, p_eff: f64) -> CubicCoefficients {
        let mut c = CubicCoefficients::new(0.0, 0.0, 0.0, -p_eff);
        for j in 0..self.g.len() {
            let (a, b, g, h) = (self.a[j], self.b[j], self.g[j], self.h[j]);
            c.c3 += b * g * g * g;
            c.c2 += 3.0 * b * g * g * h + a * g * g;
            c.c1 += 3.0 * b * g * h * h + 2.0 * a * g * h;
            c.c0 += b * h * h * h + a * h * h;
        }
        c
    }

    /// Residual and slope evaluated branch by branch, not via the expansion.
    fn residual(&self, x_ref: f64, p_eff: f64) -> (f64, f64) {
        let mut f = -p_eff;
        let mut df = 0.0;
        for (j, xj) in self.x(x_ref).enumerate() {
            let (a, b, g) = (self.a[j], self.b[j], self.g[j]);
            f += (a + b * xj) * xj * xj;
            df += (2.0 * a + 3.0 * b * xj) * xj * g;
        }
        (f, df)
    }

    fn polish(&self, x0: f64, p_eff: f64) -> f64 {
        let (mut x, mut best) = (x0, x0);
        let mut best_res = self.residual(x0, p_eff).0.abs();
        for _ in 0..NEWTON_STEPS {
            let (f, df) = self.residual(x, p_eff);
            if f == 0.0 || df == 0.0 || !df.is_finite() {
                break;
            }
            x -= f / df;
            let res = self.residual(x, p_eff).0.abs();
            if res < best_res {
                best = x;
                best_res = res;
            }
        }
        best
    }
}

/// Solves the equal-marginal system for the interior branches, using the
/// branch with the smallest `|b|` as reference (so every `|g_j| <= 1`).
///
/// Returns one candidate per distinct real root of the cubic; most are
/// infeasible and are screened by [`select_feasible_root`].
pub fn solve_segment_sqrt(stacks: &[EquivalentStack], p_req_eff: f64) -> Result<Vec<RootCandidate>> {
    let reference = stacks
        .iter()
        .enumerate()
        .min_by(|(_, s), (_, t)| s.b_eq().abs().total_cmp(&t.b_eq().abs()))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::inconsistent("segment solve with no interior branch"))?;
    solve_segment_sqrt_from(stacks, p_req_eff, reference)
}

/// [`solve_segment_sqrt`] with an explicit reference branch.
pub fn solve_segment_sqrt_from(
    stacks: &[EquivalentStack],
    p_req_eff: f64,
    reference: usize,
) -> Result<Vec<RootCandidate>> {
    if reference >= stacks.len() {
        return Err(Error::inconsistent(format!(
            "reference branch {reference} outside {} interior branches",
            stacks.len()
        )));
    }
    let line = EqualMarginalLine::new(stacks, reference);
    let roots = distinct_real_roots(&line.cubic(p_req_eff))?;
    if roots.is_empty() {
        return Err(Error::inconsistent("segment cubic has no real root"));
    }
    let (a_ref, b_ref) = (stacks[reference].a_eq(), stacks[reference].b_eq());
    Ok(roots
        .into_iter()
        .map(|root| {
            let x_ref = line.polish(root, p_req_eff);
            let x: Vec<f64> = line.x(x_ref).collect();
            let currents: Vec<f64> = x.iter().map(|v| v * v).collect();
            RootCandidate {
                total_current: currents.iter().sum(),
                mu: a_ref + 1.5 * b_ref * x_ref,
                x,
                currents,
            }
        })
        .collect())
}

fn x_violation(candidate: &RootCandidate, stacks: &[EquivalentStack]) -> f64 {
    candidate
        .x
        .iter()
        .zip(stacks)
        .map(|(&x, s)| {
            let (lo, hi) = (s.i_lb().sqrt(), s.i_ub_eff().sqrt());
            let scale = hi.max(1.0);
            ((lo - x).max(x - hi).max(0.0)) / scale
        })
        .fold(0.0, f64::max)
}

/// Picks the one candidate whose `√I` values all lie within
/// `[√i_lb, √i_ub_eff]`, and clamps it onto the bounds.
///
/// Screening happens on `x`, not on the currents: a negative `x` squares
/// into a plausible current but is not a point of the power curve.
pub fn select_feasible_root(candidates: &[RootCandidate], stacks: &[EquivalentStack]) -> Result<RootCandidate> {
    let passing: Vec<(&RootCandidate, f64)> = candidates
        .iter()
        .map(|c| (c, x_violation(c, stacks)))
        .filter(|&(_, v)| v <= X_BOUND_TOL)
        .collect();
    let chosen = match passing.as_slice() {
        [] => {
            return Err(Error::inconsistent(format!(
                "none of {} cubic roots lies inside the current bounds",
                candidates.len()
            )))
        }
        [(only, _)] => *only,
        many => {
            let strict: Vec<_> = many.iter().filter(|(_, v)| *v == 0.0).collect();
            match strict.as_slice() {
                [(only, _)] => *only,
                _ => {
                    return Err(Error::inconsistent(format!(
                        "{} cubic roots lie inside the current bounds",
                        many.len()
                    )))
                }
            }
        }
    };
    let mut out = chosen.clone();
    for ((x, i), s) in out.x.iter_mut().zip(out.currents.iter_mut()).zip(stacks) {
        *x = x.clamp(s.i_lb().sqrt(), s.i_ub_eff().sqrt());
        *i = (*x * *x).clamp(s.i_lb(), s.i_ub_eff());
    }
    out.total_current = out.currents.iter().sum();
    Ok(out)
}

/// Bisects the common marginal level `mu` in `mu_range = (low, high)` until
/// the interior branches deliver `p_req_eff` and the bracket has collapsed. Works for any concave curve.
pub fn solve_segment_numeric<B: PowerCurve>(stacks: &[B], p_req_eff: f64, mu_range: (f64, f64)) -> Result<Vec<f64>> {
    let total = |mu: f64| -> f64 { stacks.iter().map(|s| s.power_at(s.current_at_marginal(mu))).sum() };
    let tol = POWER_REL_TOL * p_req_eff.abs().max(1.0);
    let (mut lo, mut hi) = mu_range;
    if stacks.is_empty() || lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) {
        return Err(Error::inconsistent(format!("bad bisection setup over [{lo}, {hi}]")));
    }
    // power falls as mu rises
    let (p_at_lo, p_at_hi) = (total(lo), total(hi));
    if p_at_hi > p_req_eff + tol || p_at_lo < p_req_eff - tol {
        return Err(Error::inconsistent(format!(
            "{p_req_eff} W not bracketed by [{p_at_hi}, {p_at_lo}] W over mu in [{lo}, {hi}]"
        )));
    }
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        mu = 0.5 * (lo + hi);
        let residual = total(mu) - p_req_eff;
        // near the power peak a tiny residual can still hide a visible current error
        if residual.abs() <= tol && hi - lo <= MU_REL_WIDTH * mu.abs().max(1.0) {
            break;
        }
        if residual > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    Ok(stacks.iter().map(|s| s.current_at_marginal(mu)).collect())
}
