//! Exact auditing of finite mechanism-prior pairs.
//!
//! Computes the tightest LDP, CDP, BDP and BCDP levels, the conditional
//! total-variation bounds of a prior, and checks the hypothesis-testing form
//! of BCDP. Composition and post-processing are provided as kernel
//! transforms so their effect on the levels can be audited directly.

mod finite;
pub mod fixtures;
pub mod format;
mod levels;
mod transform;

pub use finite::{DiscretePrior, FiniteMechanism, ProductDomain, STOCHASTIC_TOLERANCE};
pub use levels::{
    audit, conditional_tv, coordinate_conditionals, exact_bcdp_levels, exact_bdp_level,
    exact_cdp_levels, exact_ldp_level, ht_tradeoff_check, AuditReport, TradeoffCheck,
    TradeoffWitness, TRADEOFF_TOLERANCE,
};
pub use transform::{compose_product, coordinatewise, postprocess};
