//! Valuation of European options written on hedge-fund Net Asset Values when
//! the manager charges an incentive fee under the high-water-mark rule.
//!
//! The NAV follows a geometric Brownian motion whose drift drops by the
//! incentive fee `μ·a` whenever the NAV is above the high-water mark `H`.
//! After a change of measure the option price becomes an expectation over a
//! Brownian motion weighted by its local time and occupation times at the
//! level `d_H = ln(H/S)/σ`. Prices are obtained from closed-form Laplace
//! transforms in time to maturity ([`transforms`]) inverted numerically
//! ([`inversion`]); during the lifetime of the option the part of the price
//! coming from paths that never reach the barrier has a time-domain closed
//! form ([`lifetime`]). [`montecarlo`] simulates the NAV dynamics directly and
//! serves as an independent oracle.
//!
//! The joint density of `(W_t, L_t, A_t^+)` could also be integrated directly
//! but that triple integral is far slower than transform inversion and is not
//! provided here.

pub mod cli;
pub mod error;
pub mod inversion;
pub mod lifetime;
pub mod model;
pub mod montecarlo;
pub mod normal;
pub mod pricing;
pub mod tables;
pub mod transforms;

pub use error::{Error, Result};

pub use inversion::{invert, InversionConfig, Inverted};
pub use lifetime::{BarrierSide, BarrierSplit};
pub use model::{derive_coefficients, validate, Coefficients, FundParameters, HwmMode, Method, PriceQuote};
pub use montecarlo::{McConfig, McPayoff, PathBatchStats, PathFilter};
pub use pricing::{merton_put, merton_reference, price_call, price_forward, price_moving_hwm_call, price_put};
pub use transforms::TransformHandle;
