#![allow(dead_code)]

use fcdispatch::netconfig::parse_network;
use fcdispatch::{BranchSpec, Network, SqrtStackParams};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const THREE_STACK_POWERS: [f64; 6] = [310.976, 890.577, 6183.777, 12037.033, 16200.563, 19206.708];
pub const THREE_STACK_LEVELS: [f64; 6] = [44.834, 39.895, 31.536, 27.548, 24.818, 20.064];

/// Published per-branch optimum of the 30-stack network at 75 kW.
pub const THIRTY_STACK_CURRENTS: [f64; 15] = [
    9.5355, 0.1, 648.9024, 3.262, 2.674, 2.2766, 1.993, 0.1, 1.6946, 1.55, 90.0715, 1.2976, 64.1877, 1.1365, 0.1,
];

pub fn three_stack() -> Network {
    let stack = |a, b| SqrtStackParams::new(a, b, 1.0).unwrap();
    Network::new(vec![
        BranchSpec::single(stack(47.655, -1.297), 2.103, 106.8127),
        BranchSpec::single(stack(39.895, -0.557), 0.0, 325.6562),
        BranchSpec::single(stack(33.847, -0.5976), 6.646, 236.4155),
    ])
}

pub fn thirty_stack() -> Network {
    parse_network(include_str!("../../../../configs/thirty_stack.json")).unwrap()
}

pub fn thirty_stack_rounded() -> Network {
    parse_network(include_str!("../../../../configs/thirty_stack_rounded.json")).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random concave network: 1-3 stacks per branch, a in [30, 60],
/// b in [-2, -0.1], phi in (0.5, 1], bounds drawn around the power peak.
pub fn random_network(rng: &mut impl Rng, branches: std::ops::RangeInclusive<usize>) -> Network {
    let n = rng.gen_range(branches);
    let branches = (0..n)
        .map(|_| {
            let stacks: Vec<_> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let phi = 1.0 - rng.gen_range(0.0..0.5);
                    SqrtStackParams::new(rng.gen_range(30.0..=60.0), rng.gen_range(-2.0..=-0.1), phi).unwrap()
                })
                .collect();
            let (a, b) = stacks
                .iter()
                .fold((0.0, 0.0), |(a, b), s| (a + s.phi * s.a, b + s.phi * s.b));
            let peak = (2.0 * a / (3.0 * b.abs())).powi(2);
            let i_lb = if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..0.2) * peak
            };
            let i_ub = if rng.gen_bool(0.25) {
                f64::INFINITY
            } else {
                i_lb + rng.gen_range(0.05..1.2) * peak
            };
            BranchSpec::new(stacks, i_lb, i_ub)
        })
        .collect();
    Network::new(branches)
}

/// Demand drawn uniformly from the open feasible range.
pub fn random_demand(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen_range(0.001..0.999)
}
