//! Square-root stack model and series-branch reduction.
//!
//! A stack follows `V(I) = a + b·√I` and delivers `φ·V(I)·I` watts. Stacks in
//! one branch carry the same current, so a branch collapses to a single
//! equivalent stack with `a_eq = Σ φ·a`, `b_eq = Σ φ·b` and unit efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Issues, Result, Site};

/// Power-versus-current behaviour the solvers need from a branch.
///
/// Implementors must deliver power that is strictly concave on
/// `[lower(), upper()]` and nondecreasing there (so `marginal_at(upper()) >= 0`).
/// Currents passed in are never negative.
pub trait PowerCurve {
    fn power_at(&self, current: f64) -> f64;
    fn marginal_at(&self, current: f64) -> f64;
    /// Current whose marginal power equals `mu`, clamped to the bounds.
    fn current_at_marginal(&self, mu: f64) -> f64;
    fn lower(&self) -> f64;
    /// Upper bound after removing the dominated region past the power peak.
    fn upper(&self) -> f64;
}

/// V-I fit of a single stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtStackParams {
    pub a: f64,
    pub b: f64,
    pub phi: f64,
}

impl SqrtStackParams {
    pub fn new(a: f64, b: f64, phi: f64) -> Result<Self> {
        let params = SqrtStackParams { a, b, phi };
        let mut issues = Vec::new();
        params.check(Site::Stack { branch: 0, stack: 0 }, &mut issues);
        if issues.is_empty() {
            Ok(params)
        } else {
            Err(Error::Validation(Issues(issues)))
        }
    }

    fn check(&self, site: Site, issues: &mut Vec<Issue>) {
        if !(self.a.is_finite() && self.a >= 0.0) {
            issues.push(Issue {
                site,
                field: "a",
                message: format!("must be finite and >= 0, got {}", self.a),
            });
        }
        if !(self.b.is_finite() && self.b < 0.0) {
            issues.push(Issue {
                site,
                field: "b",
                message: format!("must be finite and strictly negative, got {}", self.b),
            });
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            issues.push(Issue {
                site,
                field: "phi",
                message: format!("must lie in (0, 1], got {}", self.phi),
            });
        }
    }
}

/// One series branch. `i_ub` may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub stacks: Vec<SqrtStackParams>,
    pub i_lb: f64,
    pub i_ub: f64,
}

impl BranchSpec {
    pub fn new(stacks: Vec<SqrtStackParams>, i_lb: f64, i_ub: f64) -> Self {
        BranchSpec { stacks, i_lb, i_ub }
    }

    pub fn single(stack: SqrtStackParams, i_lb: f64, i_ub: f64) -> Self {
        BranchSpec::new(vec![stack], i_lb, i_ub)
    }

    fn check(&self, branch: usize, issues: &mut Vec<Issue>) {
        let site = Site::Branch(branch);
        if self.stacks.is_empty() {
            issues.push(Issue {
                site,
                field: "stacks",
                message: "must not be empty".into(),
            });
        }
        for (stack, params) in self.stacks.iter().enumerate() {
            params.check(Site::Stack { branch, stack }, issues);
        }
        if !(self.i_lb.is_finite() && self.i_lb >= 0.0) {
            issues.push(Issue {
                site,
                field: "i_lb",
                message: format!("must be finite and >= 0, got {}", self.i_lb),
            });
        }
        if self.i_ub.is_nan() || self.i_ub < 0.0 {
            issues.push(Issue {
                site,
                field: "i_ub",
                message: format!("must be >= 0 or unbounded, got {}", self.i_ub),
            });
        } else if self.i_lb > self.i_ub {
            issues.push(Issue {
                site,
                field: "i_lb",
                message: format!("{} exceeds upper bound {}", self.i_lb, self.i_ub),
            });
        }
    }

    /// Summed φ-weighted coefficients `(a_eq, b_eq)`.
    pub fn equivalent_coefficients(&self) -> (f64, f64) {
        self.stacks
            .iter()
            .fold((0.0, 0.0), |(a, b), s| (a + s.phi * s.a, b + s.phi * s.b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub branches: Vec<BranchSpec>,
}

impl Network {
    pub fn new(branches: Vec<BranchSpec>) -> Self {
        Network { branches }
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.branches.is_empty() {
            issues.push(Issue {
                site: Site::Network,
                field: "branches",
                message: "must not be empty".into(),
            });
        }
        for (k, branch) in self.branches.iter().enumerate() {
            branch.check(k, &mut issues);
            if issues.iter().all(|i| i.site != Site::Branch(k)) && !branch.stacks.is_empty() {
                let (a, b) = branch.equivalent_coefficients();
                let peak = stationary_current(a, b);
                if branch.i_lb > peak {
                    issues.push(Issue {
                        site: Site::Branch(k),
                        field: "i_lb",
                        message: format!(
                            "{} lies past the power peak at {peak} A (power falls with current there)",
                            branch.i_lb
                        ),
                    });
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(Issues(issues)))
        }
    }

    /// Validates, then reduces every branch to its equivalent stack.
    pub fn reduce(&self) -> Result<Vec<EquivalentStack>> {
        self.validate()?;
        self.branches.iter().map(reduce_branch).collect()
    }
}

/// Current at which `a·I + b·I^1.5` peaks.
fn stationary_current(a: f64, b: f64) -> f64 {
    let x = 2.0 * a / (3.0 * b.abs());
    x * x
}

/// `min(i_ub, I*)`, where `I*` is the stationary point of branch power.
/// Currents above `I*` draw more and deliver less.
pub fn effective_upper_bound(a_eq: f64, b_eq: f64, i_ub: f64) -> f64 {
    i_ub.min(stationary_current(a_eq, b_eq))
}

/// Reduces a series branch to a single stack with the same power curve.
pub fn reduce_branch(branch: &BranchSpec) -> Result<EquivalentStack> {
    let mut issues = Vec::new();
    branch.check(0, &mut issues);
    if !issues.is_empty() {
        return Err(Error::Validation(Issues(issues)));
    }
    let (a_eq, b_eq) = branch.equivalent_coefficients();
    EquivalentStack::new(a_eq, b_eq, branch.i_lb, branch.i_ub)
}

/// Single-stack surrogate of a branch, with unit efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentStack {
    a_eq: f64,
    b_eq: f64,
    i_lb: f64,
    i_ub: f64,
    i_ub_eff: f64,
}

impl EquivalentStack {
    pub fn new(a_eq: f64, b_eq: f64, i_lb: f64, i_ub: f64) -> Result<Self> {
        let mut issues = Vec::new();
        let site = Site::Branch(0);
        if !(a_eq.is_finite() && a_eq >= 0.0) {
            issues.push(Issue {
                site,
                field: "a",
                message: format!("equivalent a must be >= 0, got {a_eq}"),
            });
        }
        if !(b_eq.is_finite() && b_eq < 0.0) {
            issues.push(Issue {
                site,
                field: "b",
                message: format!("equivalent b must be < 0, got {b_eq}"),
            });
        }
        if !(i_lb.is_finite() && i_lb >= 0.0) || i_ub.is_nan() || i_lb > i_ub {
            issues.push(Issue {
                site,
                field: "i_lb",
                message: format!("bounds [{i_lb}, {i_ub}] are not ordered non-negative values"),
            });
        }
        if !issues.is_empty() {
            return Err(Error::Validation(Issues(issues)));
        }
        let i_ub_eff = effective_upper_bound(a_eq, b_eq, i_ub);
        if i_lb > i_ub_eff {
            return Err(Error::Validation(Issues(vec![Issue {
                site,
                field: "i_lb",
                message: format!("{i_lb} lies past the power peak at {i_ub_eff} A"),
            }])));
        }
        Ok(EquivalentStack {
            a_eq,
            b_eq,
            i_lb,
            i_ub,
            i_ub_eff,
        })
    }

    pub fn a_eq(&self) -> f64 {
        self.a_eq
    }

    pub fn b_eq(&self) -> f64 {
        self.b_eq
    }

    pub fn i_lb(&self) -> f64 {
        self.i_lb
    }

    /// Declared upper bound; infinite when unbounded.
    pub fn i_ub(&self) -> f64 {
        self.i_ub
    }

    pub fn i_ub_eff(&self) -> f64 {
        self.i_ub_eff
    }

    /// `a_eq·I + b_eq·I^1.5`.
    pub fn power(&self, current: f64) -> Result<f64> {
        check_current(current)?;
        Ok(self.power_at(current))
    }

    /// `a_eq + 1.5·b_eq·√I`.
    pub fn marginal_power(&self, current: f64) -> Result<f64> {
        check_current(current)?;
        Ok(self.marginal_at(current))
    }

    /// Inverts the marginal power and clamps into `[i_lb, i_ub_eff]`.
    /// Nonincreasing in `mu`.
    pub fn inverse_marginal(&self, mu: f64) -> f64 {
        let x = (mu - self.a_eq) / (1.5 * self.b_eq);
        let current = if x > 0.0 { x * x } else { 0.0 };
        current.clamp(self.i_lb, self.i_ub_eff)
    }
}

fn check_current(current: f64) -> Result<()> {
    if current >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity: "current",
            value: current,
        })
    }
}

impl PowerCurve for EquivalentStack {
    fn power_at(&self, current: f64) -> f64 {
        debug_assert!(current >= 0.0);
        (self.a_eq + self.b_eq * current.sqrt()) * current
    }

    fn marginal_at(&self, current: f64) -> f64 {
        debug_assert!(current >= 0.0);
        // the formula leaves ~1e-15 of rounding at the peak
        if current == self.i_ub_eff && self.i_ub_eff < self.i_ub {
            return 0.0;
        }
        self.a_eq + 1.5 * self.b_eq * current.sqrt()
    }

    fn current_at_marginal(&self, mu: f64) -> f64 {
        self.inverse_marginal(mu)
    }

    fn lower(&self) -> f64 {
        self.i_lb
    }

    fn upper(&self) -> f64 {
        self.i_ub_eff
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn stack(a: f64, b: f64, lb: f64, ub: f64) -> EquivalentStack {
        EquivalentStack::new(a, b, lb, ub).unwrap()
    }

    fn three_stack() -> [EquivalentStack; 3] {
        [
            stack(47.655, -1.297, 2.103, 106.8127),
            stack(39.895, -0.557, 0.0, 325.6562),
            stack(33.847, -0.5976, 6.646, 236.4155),
        ]
    }

    #[test]
    fn power_examples() {
        let [s1, _, s3] = three_stack();
        assert_abs_diff_eq!(s1.power(2.103).unwrap(), 96.27, epsilon = 0.01);
        assert_abs_diff_eq!(s3.power(6.646).unwrap(), 214.71, epsilon = 0.01);
        assert_eq!(s1.power(0.0).unwrap(), 0.0);
        assert!(matches!(s1.power(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn marginal_examples() {
        let [s1, s2, _] = three_stack();
        assert_abs_diff_eq!(s1.marginal_power(2.103).unwrap(), 44.834, epsilon = 1e-3);
        assert_eq!(s2.marginal_power(0.0).unwrap(), 39.895);
        assert_abs_diff_eq!(s1.marginal_power(106.8127).unwrap(), 27.548, epsilon = 1e-3);
        assert!(s1.marginal_power(-0.5).is_err());
    }

    #[test]
    fn inverse_marginal_examples() {
        let [s1, s2, _] = three_stack();
        // 44.834 sits a hair above the exact lb marginal, so the clamp engages
        assert_abs_diff_eq!(s1.inverse_marginal(44.834), 2.103, epsilon = 1e-12);
        assert_eq!(s2.inverse_marginal(39.895), 0.0);
        assert_abs_diff_eq!(s1.inverse_marginal(30.143), 81.02, epsilon = 0.01);
        // above every marginal and below every marginal
        assert_eq!(s1.inverse_marginal(1e6), s1.i_lb());
        assert_eq!(s1.inverse_marginal(-1e6), s1.i_ub_eff());
    }

    #[test]
    fn effective_upper_bound_examples() {
        // 0.8·(49.25 + 49.302), 0.8·(−0.25 − 0.302); oracle: bisect dP/dI = 0
        let (mut lo, mut hi) = (0.0f64, 1e6f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 78.8416 - 1.5 * 0.4416 * mid.sqrt() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let peak = effective_upper_bound(78.8416, -0.4416, f64::INFINITY);
        assert_abs_diff_eq!(peak, lo, epsilon = 1e-6);
        assert_abs_diff_eq!(peak, 14166.75, epsilon = 0.01);
        assert_eq!(effective_upper_bound(78.8416, -0.4416, 10.0), 10.0);
        let [s1, _, _] = three_stack();
        assert_eq!(s1.i_ub_eff(), 106.8127);
        assert!(s1.marginal_at(s1.i_ub_eff()) > 0.0);
        let unbounded = stack(78.8416, -0.4416, 0.1, f64::INFINITY);
        assert_abs_diff_eq!(unbounded.marginal_at(unbounded.i_ub_eff()), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn reduce_branch_examples() {
        let p = |a, b| SqrtStackParams::new(a, b, 0.8).unwrap();
        let two = BranchSpec::new(vec![p(49.25, -0.25), p(49.302, -0.302)], 0.1, f64::INFINITY);
        let eq = reduce_branch(&two).unwrap();
        assert_abs_diff_eq!(eq.a_eq(), 78.8416, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.b_eq(), -0.4416, epsilon = 1e-12);
        assert_eq!(eq.i_lb(), 0.1);
        assert!(eq.i_ub().is_infinite());

        let one = BranchSpec::single(SqrtStackParams::new(47.655, -1.297, 1.0).unwrap(), 2.0, 5.0);
        let eq = reduce_branch(&one).unwrap();
        assert_eq!((eq.a_eq(), eq.b_eq()), (47.655, -1.297));

        let three = BranchSpec::new(
            vec![p(49.405, -0.405), p(49.457, -0.457), p(49.509, -0.509)],
            0.1,
            f64::INFINITY,
        );
        let eq = reduce_branch(&three).unwrap();
        assert_abs_diff_eq!(eq.a_eq(), 118.6968, epsilon = 1e-4);
        assert_abs_diff_eq!(eq.b_eq(), -1.0968, epsilon = 1e-4);
    }

    #[test]
    fn validate_examples() {
        let s = |a, b| SqrtStackParams { a, b, phi: 1.0 };
        let three_stack = Network::new(vec![
            BranchSpec::single(s(47.655, -1.297), 2.103, 106.8127),
            BranchSpec::single(s(39.895, -0.557), 0.0, 325.6562),
            BranchSpec::single(s(33.847, -0.5976), 6.646, 236.4155),
        ]);
        assert!(three_stack.validate().is_ok());

        let flat = Network::new(vec![BranchSpec::single(s(40.0, 0.0), 0.0, 10.0)]);
        let Err(Error::Validation(issues)) = flat.validate() else {
            panic!("b = 0 accepted")
        };
        assert_eq!(issues.0[0].field, "b");
        assert_eq!(issues.0[0].site, Site::Stack { branch: 0, stack: 0 });

        let inverted = Network::new(vec![
            BranchSpec::single(s(40.0, -1.0), 0.0, 10.0),
            BranchSpec::single(s(40.0, -1.0), 5.0, 2.0),
        ]);
        let Err(Error::Validation(issues)) = inverted.validate() else {
            panic!("inverted bounds accepted")
        };
        assert_eq!(issues.0[0].site, Site::Branch(1));
        assert!(issues.to_string().contains("branch 2"));

        assert!(Network::new(vec![]).validate().is_err());
        let bad_phi = Network::new(vec![BranchSpec::single(
            SqrtStackParams {
                a: 40.0,
                b: -1.0,
                phi: 1.2,
            },
            0.0,
            1.0,
        )]);
        assert!(bad_phi.validate().is_err());
        let negative_a = Network::new(vec![BranchSpec::single(s(-1.0, -1.0), 0.0, 1.0)]);
        assert!(negative_a.validate().is_err());
        let negative_lb = Network::new(vec![BranchSpec::single(s(40.0, -1.0), -1.0, 1.0)]);
        assert!(negative_lb.validate().is_err());
        let no_stacks = Network::new(vec![BranchSpec::new(vec![], 0.0, 1.0)]);
        assert!(no_stacks.validate().is_err());
        // peak of 40 I − I^1.5 is at (80/3)² ≈ 711 A
        let past_peak = Network::new(vec![BranchSpec::single(s(40.0, -1.0), 800.0, 900.0)]);
        assert!(past_peak.validate().is_err());
    }

    fn params() -> impl Strategy<Value = SqrtStackParams> {
        (0.0..80.0f64, -3.0..-0.01f64, 0.05..=1.0f64).prop_map(|(a, b, phi)| SqrtStackParams { a, b, phi })
    }

    proptest! {
        #[test]
        fn reduction_is_exact(
            stacks in prop::collection::vec(params(), 1..6),
            currents in prop::collection::vec(0.0..1.0f64, 100),
        ) {
            let branch = BranchSpec::new(stacks.clone(), 0.0, f64::INFINITY);
            let eq = reduce_branch(&branch).unwrap();
            for u in currents {
                let i = u * eq.i_ub_eff();
                let direct: f64 = stacks.iter().map(|s| s.phi * (s.a + s.b * i.sqrt()) * i).sum();
                let reduced = eq.power(i).unwrap();
                prop_assert!((reduced - direct).abs() <= 1e-9 * direct.abs().max(1.0));
            }
        }

        #[test]
        fn marginal_strictly_decreasing(p in params(), i1 in 1e-6..1e4f64, gap in 1e-6..1e4f64) {
            let s = EquivalentStack::new(p.a, p.b, 0.0, f64::INFINITY).unwrap();
            prop_assert!(s.marginal_at(i1) > s.marginal_at(i1 + gap));
        }

        #[test]
        fn inverse_marginal_roundtrip(p in params(), lb_frac in 0.0..0.5f64, u in 0.0..=1.0f64) {
            let peak = effective_upper_bound(p.a, p.b, f64::INFINITY);
            let s = EquivalentStack::new(p.a, p.b, lb_frac * peak, 0.9 * peak).unwrap();
            let i = s.i_lb() + u * (s.i_ub_eff() - s.i_lb());
            let back = s.inverse_marginal(s.marginal_at(i));
            prop_assert!((back - i).abs() <= 1e-9 * i.max(1.0));
        }

        #[test]
        fn power_dominated_past_effective_bound(p in params(), ub_scale in 0.1..3.0f64, over in 0.0..2.0f64) {
            let peak = effective_upper_bound(p.a, p.b, f64::INFINITY);
            let s = EquivalentStack::new(p.a, p.b, 0.0, ub_scale * peak).unwrap();
            let i = s.i_ub_eff() + over * (s.i_ub() - s.i_ub_eff());
            let top = s.power_at(s.i_ub_eff());
            prop_assert!(top >= s.power_at(i) - 1e-9 * top.abs().max(1.0));
        }
    }
}
