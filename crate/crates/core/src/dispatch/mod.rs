//! Minimum-current dispatch over a parallel network.
//!
//! Offline, every branch contributes two observable points (its marginal
//! power at the lower and the effective upper bound). Sorted by decreasing
//! marginal level they split the demand axis into segments with a fixed
//! active set. Online, a demand is located in its segment and only the
//! interior branches are solved, all at one common marginal level.

mod kkt;
mod segment;
mod table;

pub use kkt::{verify_kkt, KktReport, KKT_MARGINAL_TOL, POWER_REL_TOL};
pub use segment::{
    select_feasible_root, solve_segment_numeric, solve_segment_sqrt, solve_segment_sqrt_from, RootCandidate,
};
pub use table::{build_table, BoundKind, DispatchTable, ObservablePoint, Segment};

use crate::error::{Error, Result, Shortfall};
use crate::stack_model::{EquivalentStack, Network, PowerCurve};

/// Partition of the branches for one demand segment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActiveSets {
    pub at_lb: Vec<usize>,
    pub interior: Vec<usize>,
    pub at_ub: Vec<usize>,
    /// Demand left for the interior branches.
    pub p_req_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchStatus {
    Optimal,
    InfeasibleLow,
    InfeasibleHigh,
}

impl DispatchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DispatchStatus::Optimal => "Optimal",
            DispatchStatus::InfeasibleLow => "InfeasibleLow",
            DispatchStatus::InfeasibleHigh => "InfeasibleHigh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchResult {
    pub p_req: f64,
    /// Empty unless `status` is `Optimal`.
    pub currents: Vec<f64>,
    pub total_current: f64,
    pub total_power: f64,
    /// Common marginal level of the interior branches (KKT λ is `1/mu`).
    /// With no interior branch, the level of the bounding observable point.
    pub mu: f64,
    pub sets: ActiveSets,
    pub status: DispatchStatus,
    pub feasible_range: (f64, f64),
}

impl DispatchResult {
    pub fn is_optimal(&self) -> bool {
        self.status == DispatchStatus::Optimal
    }

    fn infeasible(p_req: f64, side: Shortfall, feasible_range: (f64, f64)) -> Self {
        DispatchResult {
            p_req,
            currents: Vec::new(),
            total_current: f64::NAN,
            total_power: f64::NAN,
            mu: f64::NAN,
            sets: ActiveSets::default(),
            status: match side {
                Shortfall::Low => DispatchStatus::InfeasibleLow,
                Shortfall::High => DispatchStatus::InfeasibleHigh,
            },
            feasible_range,
        }
    }
}

/// Reduced network plus its observable-point table, ready for online solves.
///
/// Immutable once built; share it freely between threads.
#[derive(Debug, Clone)]
pub struct Dispatcher {
    stacks: Vec<EquivalentStack>,
    table: DispatchTable,
}

impl Dispatcher {
    pub fn new(network: &Network) -> Result<Self> {
        Ok(Dispatcher::from_stacks(network.reduce()?))
    }

    pub fn from_stacks(stacks: Vec<EquivalentStack>) -> Self {
        let table = build_table(&stacks);
        Dispatcher { stacks, table }
    }

    pub fn stacks(&self) -> &[EquivalentStack] {
        &self.stacks
    }

    pub fn table(&self) -> &DispatchTable {
        &self.table
    }

    pub fn feasible_power_range(&self) -> (f64, f64) {
        self.table.feasible_power_range()
    }

    /// Minimum-total-current currents delivering `p_req`.
    ///
    /// An out-of-range demand yields an infeasible status, not an error;
    /// errors signal a broken internal invariant.
    pub fn dispatch(&self, p_req: f64) -> Result<DispatchResult> {
        let range = self.table.feasible_power_range();
        let segment = match self.table.locate_segment(p_req) {
            Ok(segment) => segment,
            Err(Error::Infeasible { side, .. }) => return Ok(DispatchResult::infeasible(p_req, side, range)),
            Err(e) => return Err(e),
        };
        let sets = segment.sets;

        let mut currents = vec![0.0; self.stacks.len()];
        for &j in &sets.at_lb {
            currents[j] = self.stacks[j].i_lb();
        }
        for &j in &sets.at_ub {
            currents[j] = self.stacks[j].i_ub_eff();
        }
        let mu = if sets.interior.is_empty() {
            segment.mu_high
        } else {
            let interior: Vec<EquivalentStack> = sets.interior.iter().map(|&j| self.stacks[j]).collect();
            let candidates = solve_segment_sqrt(&interior, sets.p_req_eff)?;
            let chosen = select_feasible_root(&candidates, &interior)?;
            for (&j, &i) in sets.interior.iter().zip(&chosen.currents) {
                currents[j] = i;
            }
            chosen.mu
        };

        let total_current = currents.iter().sum();
        let total_power = self.stacks.iter().zip(&currents).map(|(s, &i)| s.power_at(i)).sum();
        Ok(DispatchResult {
            p_req,
            currents,
            total_current,
            total_power,
            mu,
            sets,
            status: DispatchStatus::Optimal,
            feasible_range: range,
        })
    }
}

/// One-shot: reduce, tabulate and solve.
pub fn dispatch(network: &Network, p_req: f64) -> Result<DispatchResult> {
    Dispatcher::new(network)?.dispatch(p_req)
}
