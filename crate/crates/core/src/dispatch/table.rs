use std::cmp::Ordering;

use super::ActiveSets;
use crate::error::{Error, Result, Shortfall};
use crate::stack_model::PowerCurve;

/// Slack for demands that equal a range endpoint up to rounding.
const RANGE_REL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundKind {
    LowerBound,
    UpperBound,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::LowerBound => "LowerBound",
            BoundKind::UpperBound => "UpperBound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservablePoint {
    /// Marginal power of `branch` at the bound named by `kind`.
    pub mu: f64,
    pub branch: usize,
    pub kind: BoundKind,
    /// Optimal current of every branch when the common level is `mu`.
    pub currents: Vec<f64>,
    pub cumulative_power: f64,
}

/// Observable points sorted by decreasing marginal level.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchTable {
    points: Vec<ObservablePoint>,
    lb_marginal: Vec<f64>,
    ub_marginal: Vec<f64>,
    lb_power: Vec<f64>,
    ub_power: Vec<f64>,
}

/// A demand segment between two consecutive observable points.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Index of the observable point closing the segment (`0` only for
    /// a demand at the all-lower-bound power).
    pub upper_point: usize,
    pub mu_high: f64,
    pub mu_low: f64,
    pub sets: ActiveSets,
}

/// Builds the 2N-point table for a network of reduced branches.
pub fn build_table<B: PowerCurve>(branches: &[B]) -> DispatchTable {
    let lb_marginal: Vec<f64> = branches.iter().map(|b| b.marginal_at(b.lower())).collect();
    let ub_marginal: Vec<f64> = branches.iter().map(|b| b.marginal_at(b.upper())).collect();
    let lb_power = branches.iter().map(|b| b.power_at(b.lower())).collect();
    let ub_power = branches.iter().map(|b| b.power_at(b.upper())).collect();

    let mut levels: Vec<(f64, BoundKind, usize)> = (0..branches.len())
        .flat_map(|j| {
            [
                (lb_marginal[j], BoundKind::LowerBound, j),
                (ub_marginal[j], BoundKind::UpperBound, j),
            ]
        })
        .collect();
    // mu descending, then LowerBound first, then branch index
    levels.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(Ordering::Equal)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });

    let points = levels
        .into_iter()
        .map(|(mu, kind, branch)| {
            let currents: Vec<f64> = branches
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    if lb_marginal[j] <= mu {
                        b.lower()
                    } else if ub_marginal[j] >= mu {
                        b.upper()
                    } else {
                        b.current_at_marginal(mu)
                    }
                })
                .collect();
            let cumulative_power = branches.iter().zip(&currents).map(|(b, &i)| b.power_at(i)).sum();
            ObservablePoint {
                mu,
                branch,
                kind,
                currents,
                cumulative_power,
            }
        })
        .collect();

    DispatchTable {
        points,
        lb_marginal,
        ub_marginal,
        lb_power,
        ub_power,
    }
}

impl DispatchTable {
    pub fn points(&self) -> &[ObservablePoint] {
        &self.points
    }

    pub fn branch_count(&self) -> usize {
        self.lb_marginal.len()
    }

    pub fn p_min(&self) -> f64 {
        self.points[0].cumulative_power
    }

    pub fn p_max(&self) -> f64 {
        self.points[self.points.len() - 1].cumulative_power
    }

    /// `(P at every lower bound, P at every effective upper bound)`.
    pub fn feasible_power_range(&self) -> (f64, f64) {
        (self.p_min(), self.p_max())
    }

    pub fn lb_marginal(&self, branch: usize) -> f64 {
        self.lb_marginal[branch]
    }

    pub fn ub_marginal(&self, branch: usize) -> f64 {
        self.ub_marginal[branch]
    }

    /// Finds the segment whose power interval `(P_{k-1}, P_k]` holds `p_req`.
    ///
    /// A demand equal to an observable point's power falls in the segment
    /// below that point.
    pub fn locate_segment(&self, p_req: f64) -> Result<Segment> {
        let (p_min, p_max) = self.feasible_power_range();
        let slack = |p: f64| RANGE_REL_SLACK * p.abs().max(1.0);
        if p_req.is_nan() {
            return Err(Error::Argument("required power is NaN".into()));
        }
        if p_req < p_min - slack(p_min) {
            return Err(self.infeasible(p_req, Shortfall::Low));
        }
        if p_req > p_max + slack(p_max) {
            return Err(self.infeasible(p_req, Shortfall::High));
        }

        if p_req <= p_min {
            let mu = self.points[0].mu;
            return Ok(Segment {
                upper_point: 0,
                mu_high: mu,
                mu_low: mu,
                sets: ActiveSets {
                    at_lb: (0..self.branch_count()).collect(),
                    interior: Vec::new(),
                    at_ub: Vec::new(),
                    p_req_eff: 0.0,
                },
            });
        }

        let last = self.points.len() - 1;
        let k = self.points.partition_point(|pt| pt.cumulative_power < p_req).min(last);
        let (mu_high, mu_low) = (self.points[k - 1].mu, self.points[k].mu);

        let mut sets = ActiveSets {
            p_req_eff: p_req,
            ..ActiveSets::default()
        };
        for j in 0..self.branch_count() {
            if self.lb_marginal[j] <= mu_low {
                sets.at_lb.push(j);
                sets.p_req_eff -= self.lb_power[j];
            } else if self.ub_marginal[j] >= mu_high {
                sets.at_ub.push(j);
                sets.p_req_eff -= self.ub_power[j];
            } else {
                sets.interior.push(j);
            }
        }
        if sets.interior.is_empty() {
            return Err(Error::inconsistent(format!(
                "segment {k} of positive width has no interior branch"
            )));
        }
        Ok(Segment {
            upper_point: k,
            mu_high,
            mu_low,
            sets,
        })
    }

    fn infeasible(&self, p_req: f64, side: Shortfall) -> Error {
        let (p_min, p_max) = self.feasible_power_range();
        Error::Infeasible {
            p_req,
            p_min,
            p_max,
            side,
        }
    }
}
