//! Model isoperimetric profiles `J_r`, fits of `F(K) ≈ C K^a e^{-K^{2β}}`
//! and the ratio `μ⁺(A_K) / J_r(μ(A_K))` over a grid of `K`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::functionals::{
    perimeter_ak_grushin, perimeter_bracket_group, sweep_k, volume_ak, BracketConstants, PerimeterForm,
    SetFamilyHandle, DEFAULT_EPSILON_LADDER,
};
use crate::logvalue::LogValue;
use crate::measures::{model_r, normalization_constant, ProblemSpec};
use crate::quadrature::QuadratureConfig;
use crate::special::{d_ln_gamma_q, ln_gamma_q};

const QUANTILE_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Exponent predicted by the asymptotic formula, when one is attached.
    pub predicted: Option<f64>,
    pub k_grid: Vec<f64>,
}

impl ExponentFit {
    pub fn with_prediction(mut self, predicted: f64) -> Self {
        self.predicted = Some(predicted);
        self
    }
}

/// Ordinary least squares `y = slope · x + intercept`; returns
/// `(slope, intercept, residual_rms)`.
fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::DegenerateGrid("the abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

fn check_grid(k_grid: &[f64]) -> Result<()> {
    if k_grid.len() < 4 {
        return Err(Error::DegenerateGrid(format!(
            "need at least 4 points, got {}",
            k_grid.len()
        )));
    }
    if k_grid.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::DegenerateGrid("K values must be finite and > 0".into()));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateGrid("K values must be strictly increasing".into()));
    }
    Ok(())
}

/// Least-squares fit of `ln F(K) + K^{2β} = a ln K + c`.
pub fn fit_exponent(samples: &[(f64, LogValue)], beta: f64) -> Result<ExponentFit> {
    let k_grid: Vec<f64> = samples.iter().map(|(k, _)| *k).collect();
    check_grid(&k_grid)?;
    if let Some((k, v)) = samples
        .iter()
        .find(|(_, v)| !v.is_positive() || !v.log_abs().is_finite())
    {
        return Err(Error::DegenerateGrid(format!(
            "value at K = {k} is not positive and finite: {v}"
        )));
    }
    let x: Vec<f64> = k_grid.iter().map(|k| k.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|(k, v)| v.log_abs() + k.powf(2.0 * beta)).collect();
    let (exponent, intercept, residual_rms) = least_squares(&x, &y)?;
    Ok(ExponentFit {
        exponent,
        intercept,
        residual_rms,
        predicted: None,
        k_grid,
    })
}

/// `m - 2β - (2β - 1) n / α`.
pub fn predicted_volume_exponent(spec: &ProblemSpec) -> f64 {
    let (a, b) = (spec.alpha(), spec.beta());
    spec.m() as f64 - 2.0 * b - (2.0 * b - 1.0) * spec.n() as f64 / a
}

/// `m - 1 - (2β - 1)(n + α - 1) / α`.
pub fn predicted_perimeter_exponent(spec: &ProblemSpec) -> f64 {
    let (a, b) = (spec.alpha(), spec.beta());
    spec.m() as f64 - 1.0 - (2.0 * b - 1.0) * (spec.n() as f64 + a - 1.0) / a
}

/// `(2β - 1) / α`, the power of `K` the perimeter gains over the volume.
pub fn improvement_factor(spec: &ProblemSpec) -> f64 {
    (2.0 * spec.beta() - 1.0) / spec.alpha()
}

/// `2β (1 - 1/r)` with the model exponent `r`.
pub fn profile_exponent_gain(spec: &ProblemSpec) -> f64 {
    2.0 * spec.beta() * (1.0 - 1.0 / model_r(spec))
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "the profile exponent r must be finite and >= 1, got {r}"
        )));
    }
    Ok(())
}

/// `ln J_r(t)` from `ln t`, for `t ∈ (0, 1)`.
///
/// `J_r(t) = f_r(F_r^{-1}(t))` with `f_r(x) = e^{-|x|^r} / (2Γ(1 + 1/r))`. On the
/// left half `t = Q(1/r, |x|^r) / 2` with `Q` the regularised upper incomplete
/// gamma function, which is solved for `|x|` by safeguarded Newton iteration.
pub fn ln_model_profile_exact(r: f64, ln_t: f64) -> Result<f64> {
    check_r(r)?;
    if !(ln_t < 0.0) || ln_t.is_nan() || ln_t == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!(
            "t must lie in (0, 1), got ln t = {ln_t}"
        )));
    }
    // symmetry about the median
    let ln_tail = if ln_t > -std::f64::consts::LN_2 {
        (-ln_t.exp_m1()).ln()
    } else {
        ln_t
    };
    let x = left_quantile(r, ln_tail)?;
    Ok(-x.powf(r) - std::f64::consts::LN_2 - ln_gamma(1.0 + 1.0 / r))
}

/// `|F_r^{-1}(t)|` for `ln t ≤ -ln 2`.
fn left_quantile(r: f64, ln_t: f64) -> Result<f64> {
    let a = 1.0 / r;
    let target = ln_t + std::f64::consts::LN_2;
    if target >= 0.0 {
        return Ok(0.0);
    }
    let h = |x: f64| ln_gamma_q(a, x.powf(r)) - target;
    let fail = || Error::QuantileNonConvergence { r, log_t: ln_t };

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while h(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(fail());
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..QUANTILE_MAX_ITER {
        let v = x.powf(r);
        let lq = ln_gamma_q(a, v);
        let f = lq - target;
        if f == 0.0 {
            return Ok(x);
        }
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = d_ln_gamma_q(a, v, lq) * r * x.powf(r - 1.0);
        let newton = x - f / slope;
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.max(f64::MIN_POSITIVE) || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(fail())
}

/// `J_r(t)` for `t ∈ (0, 1)`.
pub fn model_profile_exact(r: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("t must lie in (0, 1), got {t}")));
    }
    Ok(ln_model_profile_exact(r, t.ln())?.exp())
}

/// `ln(t · ln(1/t)^{1 - 1/r})` from `ln t`.
pub fn ln_model_profile_asymptotic(r: f64, ln_t: f64) -> f64 {
    let power = 1.0 - 1.0 / r;
    if power == 0.0 {
        ln_t
    } else {
        ln_t + power * (-ln_t).ln()
    }
}

/// `t · ln(1/t)^{1 - 1/r}`.
pub fn model_profile_asymptotic(r: f64, t: f64) -> f64 {
    ln_model_profile_asymptotic(r, t.ln()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub k_grid: Vec<f64>,
    /// Profile exponent the ratio is taken against.
    pub r: f64,
    /// `ln μ(A_K)`, normalised.
    pub log_volume: Vec<f64>,
    /// `ln μ⁺(A_K)`, normalised.
    pub log_perimeter: Vec<f64>,
    pub log_profile: Vec<f64>,
    /// `ln(μ⁺(A_K) / J_r(μ(A_K)))`
    pub ratio_log: Vec<f64>,
    /// Least-squares slope of `ratio_log` against `ln K`.
    pub slope: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// One CSV row of a [`RatioSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    #[serde(rename = "K")]
    pub k: f64,
    pub log_volume: f64,
    pub log_perimeter: f64,
    pub log_ratio: f64,
}

impl RatioSeries {
    pub fn rows(&self) -> Vec<RatioRow> {
        (0..self.k_grid.len())
            .map(|i| RatioRow {
                k: self.k_grid[i],
                log_volume: self.log_volume[i],
                log_perimeter: self.log_perimeter[i],
                log_ratio: self.ratio_log[i],
            })
            .collect()
    }
}

/// Perimeter of `A_K` for either setting, unnormalised: exact for Grushin, the
/// extrapolated upper band integral for groups.
pub fn perimeter_ak(spec: &ProblemSpec, set: &SetFamilyHandle, cfg: &QuadratureConfig) -> Result<LogValue> {
    match spec {
        ProblemSpec::Grushin(s) => perimeter_ak_grushin(s, set, PerimeterForm::Exact, cfg),
        ProblemSpec::Group(s) => {
            Ok(
                perimeter_bracket_group(s, set, &DEFAULT_EPSILON_LADDER, &BracketConstants::default(), cfg)?
                    .extrapolated,
            )
        }
    }
}

/// The isoperimetric ratio against the exact model profile over a grid of `K`.
pub fn ratio_sweep(
    spec: &ProblemSpec,
    k_grid: &[f64],
    r_override: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<RatioSeries> {
    check_grid(k_grid)?;
    let r = r_override.unwrap_or_else(|| model_r(spec));
    check_r(r)?;
    let ln_z = normalization_constant(spec, cfg)?.ln();
    let rows = sweep_k(k_grid, |k| {
        let set = SetFamilyHandle::for_spec(spec, k)?;
        let v = volume_ak(spec, &set, cfg)?.ln() - ln_z;
        let p = perimeter_ak(spec, &set, cfg)?.ln() - ln_z;
        let j = ln_model_profile_exact(r, v)?;
        Ok((v, p, j))
    })?;
    let log_volume: Vec<f64> = rows.iter().map(|t| t.0).collect();
    let log_perimeter: Vec<f64> = rows.iter().map(|t| t.1).collect();
    let log_profile: Vec<f64> = rows.iter().map(|t| t.2).collect();
    let ratio_log: Vec<f64> = rows.iter().map(|t| t.1 - t.2).collect();
    let x: Vec<f64> = k_grid.iter().map(|k| k.ln()).collect();
    let (slope, _, _) = least_squares(&x, &ratio_log)?;
    let lmin = ratio_log.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = ratio_log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RatioSeries {
        k_grid: k_grid.to_vec(),
        r,
        log_volume,
        log_perimeter,
        log_profile,
        ratio_log,
        slope,
        ratio_min: lmin.exp(),
        ratio_max: lmax.exp(),
    })
}
