//! Log-domain adaptive quadrature for integrals of the form
//! `∫_a^b h(r) · exp(-Φ(r)) dr` where `exp(-Φ)` underflows.
//!
//! Every panel is integrated with a tanh-sinh rule whose step is halved level by
//! level (each level doubles the node count) until two successive levels agree.
//! Panels that fail to settle are bisected, largest estimated error first.
//! Nothing is ever accumulated in raw `exp(-Φ)`: the engine works with the
//! logarithm of the integrand and rescales by the largest value it has seen.
//!
//! Semi-infinite domains `[a, ∞)` are compactified with `r = a + t / (1 - t)`
//! and truncated where the log-integrand has fallen
//! [`QuadratureConfig::truncation_log_threshold`] below its running maximum.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, QuadratureError};
use crate::logvalue::LogValue;

/// Below this level two successive estimates agreeing is not trusted.
const MIN_LEVEL: u32 = 3;
const MAX_PANELS: usize = 256;
/// Probe offsets `r - a = 2^j` used to locate the mass of a tail integral.
const PROBE_EXPONENTS: std::ops::RangeInclusive<i32> = -60..=48;
/// How far a node may exceed the reference scale before the panels are
/// recomputed against a new one.
const RESCALE_MARGIN: f64 = 200.0;
const MAX_RESCALES: usize = 8;
const FINITE_PROBES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Target relative error of the integral.
    pub rel_tol: f64,
    /// Accepted error on `log_abs` when refinement is exhausted before
    /// `rel_tol` is met. Beyond this the integral is a `NonConvergence`.
    pub abs_log_tol: f64,
    /// Maximum number of step halvings per panel.
    pub max_levels: u32,
    /// Log-integrand drop (negative) below the running maximum at which a
    /// semi-infinite domain is truncated.
    pub truncation_log_threshold: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_log_tol: 1e-8,
            max_levels: 12,
            truncation_log_threshold: -60.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.rel_tol > 0.0) || !(self.abs_log_tol > 0.0) {
            return Err(Error::InvalidArgument("quadrature tolerances must be positive".into()));
        }
        if self.max_levels < MIN_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "max_levels must be at least {MIN_LEVEL}"
            )));
        }
        if !(self.truncation_log_threshold < 0.0) {
            return Err(Error::InvalidArgument(
                "truncation_log_threshold must be negative".into(),
            ));
        }
        Ok(())
    }
}

/// `∫_lower^upper exp(log_h(r)) · exp(-(phi(r) - phi_min)) dr · exp(-phi_min)`.
///
/// `phi_min` is a lower bound (or at least a good reference level) for `phi`;
/// it is pulled out of the integral exactly.
pub struct TailIntegrand<H, P> {
    pub log_h: H,
    pub phi: P,
    pub phi_min: f64,
    pub lower: f64,
    pub upper: f64,
}

impl<H, P> TailIntegrand<H, P>
where
    H: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    pub fn semi_infinite(log_h: H, phi: P, phi_min: f64, lower: f64) -> Self {
        TailIntegrand {
            log_h,
            phi,
            phi_min,
            lower,
            upper: f64::INFINITY,
        }
    }
}

pub fn integrate<H, P>(itg: &TailIntegrand<H, P>, cfg: &QuadratureConfig) -> Result<LogValue, QuadratureError>
where
    H: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let inner = integrate_log(
        itg.lower,
        itg.upper,
        |r| Ok((itg.log_h)(r) - ((itg.phi)(r) - itg.phi_min)),
        cfg,
    )?;
    Ok(inner.scale_log(-itg.phi_min))
}

/// An integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: LogValue,
    pub rel_err: f64,
    pub evaluations: usize,
}

/// `∫_lower^upper exp(log_f(r)) dr` for a log-integrand that may fail.
///
/// This is the entry point for nested integrals, where evaluating the
/// integrand is itself a quadrature.
pub fn integrate_log<F>(lower: f64, upper: f64, log_f: F, cfg: &QuadratureConfig) -> Result<LogValue, QuadratureError>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    integrate_log_estimate(lower, upper, log_f, cfg).map(|e| e.value)
}

pub fn integrate_log_estimate<F>(
    lower: f64,
    upper: f64,
    log_f: F,
    cfg: &QuadratureConfig,
) -> Result<Estimate, QuadratureError>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    if !(lower < upper) || lower.is_nan() || lower.is_infinite() {
        return Err(QuadratureError::InvalidDomain { lower, upper });
    }
    let mut engine = Engine {
        map: if upper.is_infinite() {
            Map::Compact { lower }
        } else {
            Map::Identity
        },
        log_f,
        evaluations: 0,
        max_seen: f64::NEG_INFINITY,
    };
    let Some(layout) = engine.layout(lower, upper, cfg)? else {
        return Ok(Estimate {
            value: LogValue::ZERO,
            rel_err: 0.0,
            evaluations: engine.evaluations,
        });
    };
    let mut shift = layout.shift;
    for _ in 0..MAX_RESCALES {
        match engine.adapt(&layout.cuts, shift, cfg)? {
            Outcome::Done(estimate) => return Ok(estimate),
            Outcome::Rescale(new_shift) => shift = new_shift,
        }
    }
    Err(QuadratureError::NonConvergence {
        achieved_rel_err: f64::INFINITY,
    })
}

/// `(∫_{x0}^∞ e^{-φ}) · φ'(x0) · e^{φ(x0)}`, which tends to 1 as `x0 → ∞`
/// for increasing, eventually convex `φ`.
pub fn tail_ratio<P, D>(phi: P, dphi: D, x0: f64, cfg: &QuadratureConfig) -> Result<f64, Error>
where
    P: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let slope = dphi(x0);
    if !(slope > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tail_ratio needs phi'(x0) > 0, got {slope}"
        )));
    }
    let phi0 = phi(x0);
    let itg = TailIntegrand::semi_infinite(|_| 0.0, &phi, phi0, x0);
    let tail = integrate(&itg, cfg)?;
    Ok((tail.log_abs() + phi0 + slope.ln()).exp())
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    Compact { lower: f64 },
}

impl Map {
    fn to_r(self, t: f64) -> f64 {
        match self {
            Map::Identity => t,
            Map::Compact { lower } => lower + t / (1.0 - t),
        }
    }

    fn ln_jacobian(self, t: f64) -> f64 {
        match self {
            Map::Identity => 0.0,
            Map::Compact { .. } => -2.0 * (1.0 - t).ln(),
        }
    }

    fn param_of_offset(self, d: f64) -> f64 {
        match self {
            Map::Identity => d,
            Map::Compact { .. } => d / (1.0 + d),
        }
    }
}

struct Layout {
    /// Panel boundaries in the mapped variable.
    cuts: Vec<f64>,
    /// Log scale all node contributions are measured against.
    shift: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

enum Outcome {
    Done(Estimate),
    /// A node exceeded the reference scale by more than [`RESCALE_MARGIN`].
    Rescale(f64),
}

struct Engine<F> {
    map: Map,
    log_f: F,
    evaluations: usize,
    max_seen: f64,
}

impl<F> Engine<F>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    /// Log-integrand in the mapped variable.
    fn eval(&mut self, t: f64) -> Result<f64, QuadratureError> {
        self.evaluations += 1;
        let r = self.map.to_r(t);
        let g = (self.log_f)(r)? + self.map.ln_jacobian(t);
        if g.is_nan() {
            return Err(QuadratureError::NonFiniteIntegrand { at: r });
        }
        self.max_seen = self.max_seen.max(g);
        Ok(g)
    }

    /// Probe the integrand to find the reference scale, the truncation point
    /// and the location of the peak. `None` means the integrand vanishes.
    fn layout(&mut self, lower: f64, upper: f64, cfg: &QuadratureConfig) -> Result<Option<Layout>, QuadratureError> {
        let (t_end, probes): (f64, Vec<f64>) = match self.map {
            Map::Compact { .. } => (
                1.0,
                PROBE_EXPONENTS
                    .map(|j| self.map.param_of_offset((j as f64).exp2()))
                    .collect(),
            ),
            Map::Identity => (
                upper,
                (1..FINITE_PROBES)
                    .map(|k| lower + (upper - lower) * k as f64 / FINITE_PROBES as f64)
                    .collect(),
            ),
        };
        let t_start = match self.map {
            Map::Compact { .. } => 0.0,
            Map::Identity => lower,
        };
        let mut values = Vec::with_capacity(probes.len());
        for &t in &probes {
            values.push(self.eval(t)?);
        }
        let Some((peak, &shift)) = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))
        else {
            // an integrand that is zero (or infinite) at every probe
            if values.contains(&f64::INFINITY) {
                return Err(QuadratureError::NonFiniteIntegrand {
                    at: self.map.to_r(probes[0]),
                });
            }
            return Ok(None);
        };

        let mut t_stop = t_end;
        if let Map::Compact { lower } = self.map {
            let floor = shift + cfg.truncation_log_threshold;
            let last_significant = values
                .iter()
                .rposition(|v| *v >= floor)
                .expect("the peak itself is significant");
            if last_significant + 1 >= probes.len() {
                return Err(QuadratureError::NoDecay { lower });
            }
            t_stop = probes[last_significant + 1];
        }

        let mut cuts = vec![t_start];
        let t_peak = probes[peak];
        if peak > 0 && t_peak < t_stop {
            cuts.push(t_peak);
        }
        cuts.push(t_stop);
        Ok(Some(Layout { cuts, shift }))
    }

    fn adapt(&mut self, cuts: &[f64], shift: f64, cfg: &QuadratureConfig) -> Result<Outcome, QuadratureError> {
        let mut panels = Vec::new();
        for w in cuts.windows(2) {
            panels.push(self.panel(w[0], w[1], shift, cfg)?);
        }
        loop {
            if self.max_seen > shift + RESCALE_MARGIN {
                return Ok(Outcome::Rescale(self.max_seen));
            }
            let total: f64 = panels.iter().map(|p| p.value).sum();
            let total_err: f64 = panels.iter().map(|p| p.err).sum();
            let value = LogValue::from_f64(total).scale_log(shift);
            let rel_err = if total > 0.0 { total_err / total } else { 0.0 };
            if total_err <= cfg.rel_tol * total || total == 0.0 && total_err == 0.0 {
                return Ok(Outcome::Done(Estimate {
                    value,
                    rel_err,
                    evaluations: self.evaluations,
                }));
            }
            // largest error first; ties go to the leftmost panel
            let (worst, _) = panels
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.err.total_cmp(&b.err).then(b.lo.total_cmp(&a.lo)))
                .expect("at least one panel");
            let Panel { lo, hi, .. } = panels[worst];
            let mid = 0.5 * (lo + hi);
            let splittable = mid > lo && mid < hi;
            if panels.len() >= MAX_PANELS || !splittable {
                if rel_err <= cfg.abs_log_tol {
                    return Ok(Outcome::Done(Estimate {
                        value,
                        rel_err,
                        evaluations: self.evaluations,
                    }));
                }
                return Err(QuadratureError::NonConvergence {
                    achieved_rel_err: rel_err,
                });
            }
            let left = self.panel(lo, mid, shift, cfg)?;
            let right = self.panel(mid, hi, shift, cfg)?;
            panels[worst] = left;
            panels.insert(worst + 1, right);
        }
    }

    /// Tanh-sinh on `[lo, hi]`, halving the step until two levels agree.
    fn panel(&mut self, lo: f64, hi: f64, shift: f64, cfg: &QuadratureConfig) -> Result<Panel, QuadratureError> {
        let half = 0.5 * (hi - lo);
        let ln_half = half.ln();
        let mut sum = 0.0;
        let mut prev = f64::NAN;
        let mut estimate = 0.0;
        let mut err = f64::INFINITY;
        for level in 0..=cfg.max_levels {
            let h = (-(level as f64)).exp2();
            let (start, stride) = if level == 0 { (0u64, 1u64) } else { (1, 2) };
            sum += self.level_sum(lo, hi, half, ln_half, h, start, stride, shift)?;
            estimate = h * sum;
            if level > 0 {
                err = (estimate - prev).abs();
                if level >= MIN_LEVEL && (err <= cfg.rel_tol * estimate.abs() || estimate == 0.0 && prev == 0.0) {
                    break;
                }
            }
            prev = estimate;
        }
        Ok(Panel {
            lo,
            hi,
            value: estimate,
            err,
        })
    }

    /// Contribution of the nodes `k·h` for `k = start, start + stride, …`
    /// (and their mirror images), each weighted and rescaled by `shift`.
    #[allow(clippy::too_many_arguments)]
    fn level_sum(
        &mut self,
        lo: f64,
        hi: f64,
        half: f64,
        ln_half: f64,
        h: f64,
        start: u64,
        stride: u64,
        shift: f64,
    ) -> Result<f64, QuadratureError> {
        let ln_pi_2 = FRAC_PI_2.ln();
        let mut sum = 0.0;
        let mut left_open = true;
        let mut right_open = true;
        let mut k = start;
        while left_open || right_open {
            let t = k as f64 * h;
            if t == 0.0 {
                let g = self.eval(lo + half)?;
                sum += (ln_half + ln_pi_2 + g - shift).exp();
                k += stride;
                continue;
            }
            let v = FRAC_PI_2 * t.sinh();
            // 1 - tanh(v) and ln(weight), both without cancellation
            let gap = half * 2.0 / ((2.0 * v).exp() + 1.0);
            let ln_cosh_v = v + (-2.0 * v).exp().ln_1p() - std::f64::consts::LN_2;
            let ln_w = ln_half + ln_pi_2 + t.cosh().ln() - 2.0 * ln_cosh_v;
            if left_open {
                let x = lo + gap;
                if gap == 0.0 || x <= lo {
                    left_open = false;
                } else {
                    let g = self.eval(x)?;
                    sum += (ln_w + g - shift).exp();
                }
            }
            if right_open {
                let x = hi - gap;
                if gap == 0.0 || x >= hi {
                    right_open = false;
                } else {
                    let g = self.eval(x)?;
                    sum += (ln_w + g - shift).exp();
                }
            }
            k += stride;
        }
        Ok(sum)
    }
}
