//! Special functions behind every closed-form expression: gamma and
//! Pochhammer helpers, the `₁F₂` series, and a Meijer G-function evaluator
//! with two independent routes (Slater residue series and a numerical
//! Mellin-Barnes contour integral).

mod contour;
mod gamma;
mod hyper;
mod meijer;
mod slater;

pub use contour::meijer_g_contour;
pub use gamma::{ln_gamma, ln_gamma_complex, ln_gamma_signed, pochhammer, recip_gamma_signed};
pub use hyper::{hyp1f2, SeriesSum};
pub use meijer::MeijerGSpec;
pub use slater::meijer_g_slater;

use crate::error::{Error, Result};

/// Truncation controls for infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
    /// Parameter shift applied when residue poles coincide.
    pub pole_epsilon: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 500,
            rel_tol: 1e-10,
            pole_epsilon: 1e-6,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if self.max_terms == 0 || !(self.rel_tol > 0.0) || !(self.pole_epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "series control needs max_terms >= 1 and positive tolerances, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Evaluates a Meijer G-function, preferring the Slater expansion and falling
/// back to the contour integral when the expansion is unusable (outside its
/// convergence region, or too much cancellation to reach `ctl.rel_tol`).
pub fn meijer_g(spec: &MeijerGSpec, ctl: &SeriesControl) -> Result<f64> {
    match meijer_g_slater(spec, ctl) {
        Ok(v) => Ok(v),
        Err(Error::SlaterUnusable { .. }) | Err(Error::SeriesFailure { .. }) => {
            meijer_g_contour(spec, ctl)
        }
        Err(e) => Err(e),
    }
}
