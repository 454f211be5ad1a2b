//! Table-free oracles for checking dispatch results.
//!
//! Only `current_at_marginal` is shared with the main path: no observable
//! points, segment logic or cubic algebra are used here.

use crate::dispatch::DispatchResult;
use crate::error::{Error, Result, Shortfall};
use crate::stack_model::PowerCurve;

const POWER_REL_TOL: f64 = 1e-9;
const MAX_ITER: usize = 200;
pub const GRID_MAX_BRANCHES: usize = 3;
pub const GRID_MAX_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    LambdaBisection,
    GridSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub currents: Vec<f64>,
    pub total_current: f64,
    pub total_power: f64,
    /// Converged marginal level; `None` for the grid search.
    pub mu: Option<f64>,
    pub method: OracleMethod,
}

fn network_power<B: PowerCurve>(branches: &[B], currents: &[f64]) -> f64 {
    branches.iter().zip(currents).map(|(b, &i)| b.power_at(i)).sum()
}

fn currents_at<B: PowerCurve>(branches: &[B], mu: f64) -> Vec<f64> {
    branches.iter().map(|b| b.current_at_marginal(mu)).collect()
}

fn oracle<B: PowerCurve>(branches: &[B], currents: Vec<f64>, mu: Option<f64>, method: OracleMethod) -> OracleResult {
    OracleResult {
        total_current: currents.iter().sum(),
        total_power: network_power(branches, &currents),
        currents,
        mu,
        method,
    }
}

/// Bisects one marginal level for the whole network; each branch sits at
/// its clamped inverse marginal.
pub fn lambda_bisection<B: PowerCurve>(branches: &[B], p_req: f64) -> Result<OracleResult> {
    if branches.is_empty() {
        return Err(Error::Argument("empty network".into()));
    }
    let mut hi = branches
        .iter()
        .map(|b| b.marginal_at(b.lower()))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut lo = branches
        .iter()
        .map(|b| b.marginal_at(b.upper()))
        .fold(f64::INFINITY, f64::min);
    let p_min = network_power(branches, &currents_at(branches, hi));
    let p_max = network_power(branches, &currents_at(branches, lo));
    let tol = POWER_REL_TOL * p_req.abs().max(1.0);
    if p_req.is_nan() || p_req < p_min - tol {
        return Err(Error::Infeasible {
            p_req,
            p_min,
            p_max,
            side: Shortfall::Low,
        });
    }
    if p_req > p_max + tol {
        return Err(Error::Infeasible {
            p_req,
            p_min,
            p_max,
            side: Shortfall::High,
        });
    }
    if p_req <= p_min + tol {
        return Ok(oracle(
            branches,
            currents_at(branches, hi),
            Some(hi),
            OracleMethod::LambdaBisection,
        ));
    }
    if p_req >= p_max - tol {
        return Ok(oracle(
            branches,
            currents_at(branches, lo),
            Some(lo),
            OracleMethod::LambdaBisection,
        ));
    }
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        mu = 0.5 * (lo + hi);
        let residual = network_power(branches, &currents_at(branches, mu)) - p_req;
        if residual.abs() <= tol {
            break;
        }
        // more power at lower levels
        if residual > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    Ok(oracle(
        branches,
        currents_at(branches, mu),
        Some(mu),
        OracleMethod::LambdaBisection,
    ))
}

/// Current in `[lower, upper]` at which `branch` delivers `target` watts.
fn solve_scalar<B: PowerCurve>(branch: &B, target: f64) -> Option<f64> {
    let (mut lo, mut hi) = (branch.lower(), branch.upper());
    let tol = POWER_REL_TOL * target.abs().max(1.0);
    let (p_lo, p_hi) = (branch.power_at(lo), branch.power_at(hi));
    if target < p_lo - tol || target > p_hi + tol {
        return None;
    }
    if target <= p_lo {
        return Some(lo);
    }
    if target >= p_hi {
        return Some(hi);
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if branch.power_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn grid_node(branch: &impl PowerCurve, k: usize, intervals: usize) -> f64 {
    let (lo, hi) = (branch.lower(), branch.upper());
    if k == intervals {
        hi
    } else {
        lo + (hi - lo) * k as f64 / intervals as f64
    }
}

/// Brute-force certificate for networks of at most three branches.
///
/// Every branch but the last walks a uniform grid of `points_per_branch`
/// intervals (bounds included, so doubling the count refines the grid);
/// the last branch is solved exactly for the remaining power.
pub fn grid_bruteforce<B: PowerCurve>(branches: &[B], p_req: f64, points_per_branch: usize) -> Result<OracleResult> {
    if branches.is_empty() || branches.len() > GRID_MAX_BRANCHES {
        return Err(Error::Argument(format!(
            "grid search handles 1 to {GRID_MAX_BRANCHES} branches, got {}",
            branches.len()
        )));
    }
    if points_per_branch == 0 || points_per_branch > GRID_MAX_POINTS {
        return Err(Error::Argument(format!(
            "points_per_branch must be in 1..={GRID_MAX_POINTS}, got {points_per_branch}"
        )));
    }
    let (head, last) = branches.split_at(branches.len() - 1);
    let last = &last[0];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut index = vec![0usize; head.len()];
    let mut currents = vec![0.0; branches.len()];
    loop {
        let mut partial = 0.0;
        for (j, (b, &k)) in head.iter().zip(&index).enumerate() {
            currents[j] = grid_node(b, k, points_per_branch);
            partial += b.power_at(currents[j]);
        }
        if let Some(i_last) = solve_scalar(last, p_req - partial) {
            currents[head.len()] = i_last;
            let total: f64 = currents.iter().sum();
            if best.as_ref().is_none_or(|(t, _)| total < *t) {
                best = Some((total, currents.clone()));
            }
        }
        // odometer over the head grid
        let mut d = 0;
        while d < index.len() {
            index[d] += 1;
            if index[d] <= points_per_branch {
                break;
            }
            index[d] = 0;
            d += 1;
        }
        if d == index.len() {
            break;
        }
    }
    match best {
        Some((_, currents)) => Ok(oracle(branches, currents, None, OracleMethod::GridSearch)),
        None => {
            let p_min = branches.iter().map(|b| b.power_at(b.lower())).sum();
            let p_max = branches.iter().map(|b| b.power_at(b.upper())).sum();
            Err(Error::Infeasible {
                p_req,
                p_min,
                p_max,
                side: if p_req < p_min { Shortfall::Low } else { Shortfall::High },
            })
        }
    }
}

/// Largest grid spacing used by [`grid_bruteforce`].
pub fn grid_spacing<B: PowerCurve>(branches: &[B], points_per_branch: usize) -> f64 {
    branches
        .iter()
        .map(|b| (b.upper() - b.lower()) / points_per_branch as f64)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Dispatch minus oracle, per branch.
    pub branch_deltas: Vec<f64>,
    pub total_delta: f64,
    pub max_abs_delta: f64,
    pub tol_current: f64,
    pub pass: bool,
}

pub fn compare(result: &DispatchResult, oracle: &OracleResult, tol_current: f64) -> Comparison {
    if result.currents.len() != oracle.currents.len() {
        return Comparison {
            branch_deltas: Vec::new(),
            total_delta: f64::NAN,
            max_abs_delta: f64::INFINITY,
            tol_current,
            pass: false,
        };
    }
    let branch_deltas: Vec<f64> = result
        .currents
        .iter()
        .zip(&oracle.currents)
        .map(|(a, b)| a - b)
        .collect();
    let max_abs_delta = branch_deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Comparison {
        total_delta: result.total_current - oracle.total_current,
        pass: max_abs_delta <= tol_current,
        branch_deltas,
        max_abs_delta,
        tol_current,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::dispatch::Dispatcher;
    use crate::stack_model::EquivalentStack;

    fn three_stack() -> Vec<EquivalentStack> {
        vec![
            EquivalentStack::new(47.655, -1.297, 2.103, 106.8127).unwrap(),
            EquivalentStack::new(39.895, -0.557, 0.0, 325.6562).unwrap(),
            EquivalentStack::new(33.847, -0.5976, 6.646, 236.4155).unwrap(),
        ]
    }

    #[test]
    fn bisection_at_8000() {
        let r = lambda_bisection(&three_stack(), 8000.0).unwrap();
        for (got, want) in r.currents.iter().zip([81.02, 136.23, 17.07]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-2);
        }
        assert_eq!(r.method, OracleMethod::LambdaBisection);
        assert!((r.total_power - 8000.0).abs() <= 8000.0 * 1e-9);
    }

    #[test]
    fn bisection_at_minimum_power() {
        let stacks = three_stack();
        let p_min: f64 = stacks.iter().map(|s| s.power_at(s.i_lb())).sum();
        let r = lambda_bisection(&stacks, p_min).unwrap();
        for (s, i) in stacks.iter().zip(&r.currents) {
            assert_eq!(*i, s.i_lb());
        }
        assert!(matches!(
            lambda_bisection(&stacks, 100.0),
            Err(Error::Infeasible {
                side: Shortfall::Low,
                ..
            })
        ));
        assert!(matches!(
            lambda_bisection(&stacks, 1e6),
            Err(Error::Infeasible {
                side: Shortfall::High,
                ..
            })
        ));
    }

    #[test]
    fn grid_at_8000() {
        let r = grid_bruteforce(&three_stack(), 8000.0, 200).unwrap();
        assert!((r.total_current - 234.32).abs() <= 1.0);
        assert_eq!(r.method, OracleMethod::GridSearch);
        assert!((r.total_power - 8000.0).abs() < 1e-5);
    }

    #[test]
    fn grid_single_branch_is_exact() {
        let s = [EquivalentStack::new(40.0, -1.0, 0.0, 200.0).unwrap()];
        let r = grid_bruteforce(&s, 3000.0, 10).unwrap();
        let d = Dispatcher::from_stacks(s.to_vec()).dispatch(3000.0).unwrap();
        assert_abs_diff_eq!(r.currents[0], d.currents[0], epsilon = 1e-9);
    }

    #[test]
    fn grid_argument_limits() {
        let mut four = three_stack();
        four.push(four[0]);
        assert!(matches!(grid_bruteforce(&four, 8000.0, 10), Err(Error::Argument(_))));
        assert!(matches!(
            grid_bruteforce(&three_stack(), 8000.0, 401),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            grid_bruteforce(&three_stack(), 8000.0, 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            grid_bruteforce(&three_stack(), 1e7, 10),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn grid_refinement_never_worsens() {
        let stacks = three_stack();
        let mut previous = f64::INFINITY;
        for n in [25, 50, 100, 200, 400] {
            let t = grid_bruteforce(&stacks, 8000.0, n).unwrap().total_current;
            assert!(t <= previous + 1e-9, "{n}: {t} > {previous}");
            previous = t;
        }
    }

    #[test]
    fn compare_reports() {
        let stacks = three_stack();
        let d = Dispatcher::from_stacks(stacks.clone()).dispatch(8000.0).unwrap();
        let same = OracleResult {
            currents: d.currents.clone(),
            total_current: d.total_current,
            total_power: d.total_power,
            mu: Some(d.mu),
            method: OracleMethod::LambdaBisection,
        };
        let c = compare(&d, &same, 0.0);
        assert!(c.pass);
        assert!(c.branch_deltas.iter().all(|&x| x == 0.0));
        assert_eq!(c.total_delta, 0.0);

        let bisect = lambda_bisection(&stacks, 8000.0).unwrap();
        assert!(compare(&d, &bisect, 1e-3).pass);

        let grid = grid_bruteforce(&stacks, 8000.0, 200).unwrap();
        assert!(compare(&d, &grid, grid_spacing(&stacks, 200)).pass);
    }
}
