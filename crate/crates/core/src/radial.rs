//! Iterated radial integrals `∫ r^{n-1} ∫ s^{m-1} e^{-Φ(r, s)} ds dr`.
//!
//! Both densities are rotation invariant in `x` and in `y` (or `z`)
//! separately, so every volume and perimeter reduces to (at most) two nested
//! one-dimensional integrals over the radii. The exponent always has the form
//! `Φ(r, s) = (r^{2α} + ω² s²)^β`.

use crate::error::QuadratureError;
use crate::logvalue::LogValue;
use crate::quadrature::{integrate_log, QuadratureConfig};
use crate::special::{ln_pow, pow_diff};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RadialKernel {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
}

impl RadialKernel {
    /// `r^{2α} + ω² s²`
    pub fn base(&self, r: f64, s: f64) -> f64 {
        r.powf(2.0 * self.alpha) + self.omega * self.omega * s * s
    }

    pub fn exponent(&self, r: f64, s: f64) -> f64 {
        self.base(r, s).powf(self.beta)
    }

    /// `Φ(r, s + σ) - Φ(r, s)` for `σ >= -s`, free of cancellation.
    pub fn exponent_step(&self, r: f64, s: f64, sigma: f64) -> f64 {
        let w2 = self.omega * self.omega;
        pow_diff(self.base(r, s), w2 * sigma * (sigma + 2.0 * s), self.beta)
    }

    /// `Φ(r, s) - (ω s_ref)^{2β}`, free of cancellation when `(r, s)` is close
    /// to `(0, s_ref)`.
    pub fn exponent_above(&self, r: f64, s: f64, s_ref: f64) -> f64 {
        let w2 = self.omega * self.omega;
        let delta = r.powf(2.0 * self.alpha) + w2 * (s - s_ref) * (s + s_ref);
        pow_diff(w2 * s_ref * s_ref, delta, self.beta)
    }
}

/// Inner domain of a nested radial integral at outer radius `r`.
pub(crate) enum InnerDomain<'a> {
    /// `[terminal(r), ∞)`
    Tail(&'a (dyn Fn(f64) -> f64 + Sync)),
    /// `[terminal(r), terminal(r) + width(r)]`
    Band {
        terminal: &'a (dyn Fn(f64) -> f64 + Sync),
        width: &'a (dyn Fn(f64) -> f64 + Sync),
    },
}

/// `∫_0^{outer_upper} r^{n-1} ∫_{inner} s^{m-1} e^{-Φ(r, s)} ds dr` where the
/// caller supplies the exponent through two stable differences:
/// `outer_shift(r) = Φ(r, terminal(r)) - phi_ref` and
/// `inner_step(r, terminal, σ) = Φ(r, terminal + σ) - Φ(r, terminal)`.
pub(crate) struct NestedRadial<'a> {
    pub n: usize,
    pub m: usize,
    pub domain: InnerDomain<'a>,
    pub outer_upper: f64,
    pub outer_shift: &'a (dyn Fn(f64) -> f64 + Sync),
    pub inner_step: &'a (dyn Fn(f64, f64, f64) -> f64 + Sync),
    pub phi_ref: f64,
}

impl NestedRadial<'_> {
    pub fn integrate(&self, cfg: &QuadratureConfig) -> Result<LogValue, QuadratureError> {
        let ln_x = (self.n - 1) as f64;
        let ln_y = (self.m - 1) as f64;
        let outer = integrate_log(
            0.0,
            self.outer_upper,
            |r| {
                let (terminal, upper) = match &self.domain {
                    InnerDomain::Tail(t) => (t(r), f64::INFINITY),
                    InnerDomain::Band { terminal, width } => {
                        let w = width(r);
                        if !(w > 0.0) {
                            return Ok(f64::NEG_INFINITY);
                        }
                        (terminal(r), w)
                    }
                };
                let inner = integrate_log(
                    0.0,
                    upper,
                    |sigma| Ok(ln_pow(terminal + sigma, ln_y) - (self.inner_step)(r, terminal, sigma)),
                    cfg,
                )?;
                Ok(ln_pow(r, ln_x) + inner.ln() - (self.outer_shift)(r))
            },
            cfg,
        )?;
        Ok(outer.scale_log(-self.phi_ref))
    }
}
