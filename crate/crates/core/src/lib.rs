//! Outage and DPSK error-rate analysis of a multi-hop, relay-assisted hybrid
//! FSO/RF link with multiuser selection at the first relay.

pub mod analytic;
pub mod channels;
pub mod error;
pub mod montecarlo;
pub mod quad;
pub mod specfun;
pub mod system;

pub use error::{Error, Result};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
