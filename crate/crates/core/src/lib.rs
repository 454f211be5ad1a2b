//! Minimum-current power sharing for parallel networks of fuel-cell stacks.
//!
//! Each branch of the network is a series string of stacks following the
//! square-root V-I fit `V = a + b·√I`. For a power demand the solver picks
//! the branch currents that deliver it with the least total current (the
//! fuel drawn is proportional to that current). At the optimum every branch
//! strictly inside its current bounds runs at the same marginal power
//! `dP/dI`; the remaining branches sit at a bound.
//!
//! The work splits into an offline [`DispatchTable`] of observable points
//! and an online solve of one cubic per demand:
//!
//! ```
//! use fcdispatch::{BranchSpec, Dispatcher, Network, SqrtStackParams};
//!
//! let stack = |a, b| SqrtStackParams::new(a, b, 1.0).unwrap();
//! let network = Network::new(vec![
//!     BranchSpec::single(stack(47.655, -1.297), 2.103, 106.8127),
//!     BranchSpec::single(stack(39.895, -0.557), 0.0, 325.6562),
//!     BranchSpec::single(stack(33.847, -0.5976), 6.646, 236.4155),
//! ]);
//! let dispatcher = Dispatcher::new(&network).unwrap();
//! let result = dispatcher.dispatch(8000.0).unwrap();
//! assert!((result.total_current - 234.32).abs() < 0.01);
//! ```

pub mod dispatch;
pub mod error;
pub mod netconfig;
pub mod poly_roots;
pub mod reference;
pub mod stack_model;

pub use dispatch::{
    dispatch, verify_kkt, ActiveSets, DispatchResult, DispatchStatus, DispatchTable, Dispatcher, KktReport,
};
pub use error::{Error, Result};
pub use stack_model::{BranchSpec, EquivalentStack, Network, PowerCurve, SqrtStackParams};
