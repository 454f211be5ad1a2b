use super::DispatchResult;
use crate::error::{Error, Result};
use crate::stack_model::PowerCurve;

/// Pass threshold on `max |dP_j/dI_j − mu|` over interior branches, W/A.
pub const KKT_MARGINAL_TOL: f64 = 1e-6;
/// Relative tolerance on delivered versus requested power.
pub const POWER_REL_TOL: f64 = 1e-9;
/// Relative slack on bound and ordering comparisons.
const CHAIN_REL_TOL: f64 = 1e-9;

/// First-order optimality certificate for one dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Power-constraint multiplier, `1/mu`.
    pub lambda: f64,
    /// Lower-bound multipliers `μ_j`; zero off the lower-bound set.
    pub lower_multipliers: Vec<f64>,
    /// Upper-bound multipliers `γ_j`; zero off the upper-bound set.
    pub upper_multipliers: Vec<f64>,
    pub max_equal_marginal_residual: f64,
    /// `|Σ P_j(I_j) − P_req| / max(1, P_req)`, recomputed from the currents.
    pub power_residual: f64,
    /// Bound activity matches the sets and
    /// `dP/dI|lb ≤ mu ≤ dP/dI|ub` holds across them.
    pub chain_ok: bool,
}

impl KktReport {
    pub fn multipliers_nonnegative(&self) -> bool {
        self.lower_multipliers
            .iter()
            .chain(&self.upper_multipliers)
            .all(|&m| m >= -CHAIN_REL_TOL)
    }

    pub fn passed(&self) -> bool {
        self.max_equal_marginal_residual <= KKT_MARGINAL_TOL
            && self.power_residual <= POWER_REL_TOL
            && self.multipliers_nonnegative()
            && self.chain_ok
    }
}

/// Recomputes the KKT multipliers and residuals of an optimal dispatch.
pub fn verify_kkt<B: PowerCurve>(result: &DispatchResult, branches: &[B]) -> Result<KktReport> {
    if !result.is_optimal() {
        return Err(Error::Argument(format!(
            "KKT check needs an optimal result, got {}",
            result.status.as_str()
        )));
    }
    if result.currents.len() != branches.len() {
        return Err(Error::Argument(format!(
            "result has {} currents for {} branches",
            result.currents.len(),
            branches.len()
        )));
    }
    let mu = result.mu;
    let sets = &result.sets;
    let n = branches.len();
    let mu_tol = CHAIN_REL_TOL * mu.abs().max(1.0);
    let near = |i: f64, bound: f64| (i - bound).abs() <= CHAIN_REL_TOL * bound.abs().max(1.0);
    let ratio = |m: f64| if mu > 0.0 { m / mu } else { f64::INFINITY };

    let mut lower_multipliers = vec![0.0; n];
    let mut upper_multipliers = vec![0.0; n];
    let mut chain_ok = true;

    for &j in &sets.at_lb {
        let b = &branches[j];
        let m_lb = b.marginal_at(b.lower());
        lower_multipliers[j] = 1.0 - ratio(m_lb);
        chain_ok &= near(result.currents[j], b.lower()) && m_lb <= mu + mu_tol;
    }
    for &j in &sets.at_ub {
        let b = &branches[j];
        let m_ub = b.marginal_at(b.upper());
        upper_multipliers[j] = ratio(m_ub) - 1.0;
        chain_ok &= near(result.currents[j], b.upper()) && m_ub >= mu - mu_tol;
    }
    let mut max_equal_marginal_residual: f64 = 0.0;
    for &j in &sets.interior {
        let b = &branches[j];
        let i = result.currents[j];
        let inside =
            i >= b.lower() - CHAIN_REL_TOL * b.lower().max(1.0) && i <= b.upper() + CHAIN_REL_TOL * b.upper().max(1.0);
        chain_ok &= inside && b.marginal_at(b.lower()) >= mu - mu_tol && b.marginal_at(b.upper()) <= mu + mu_tol;
        if inside {
            let m = b.marginal_at(i.max(0.0));
            max_equal_marginal_residual = max_equal_marginal_residual.max((m - mu).abs());
        } else {
            max_equal_marginal_residual = f64::INFINITY;
        }
    }
    let partitioned = sets.at_lb.len() + sets.interior.len() + sets.at_ub.len() == n;
    chain_ok &= partitioned;

    let delivered: f64 = branches
        .iter()
        .zip(&result.currents)
        .map(|(b, &i)| b.power_at(i.max(0.0)))
        .sum();
    let power_residual = (delivered - result.p_req).abs() / result.p_req.abs().max(1.0);

    Ok(KktReport {
        lambda: if mu > 0.0 { 1.0 / mu } else { f64::INFINITY },
        lower_multipliers,
        upper_multipliers,
        max_equal_marginal_residual,
        power_residual,
        chain_ok,
    })
}
