//! Volumes and perimeters of the anisotropic half-spaces
//! `A_K = {c|y| ≥ |x|^α + K}`.
//!
//! For the Grushin measures both are computed exactly by reduced quadrature.
//! For step-two groups the volume is exact and the perimeter is bracketed by
//! the surface-band integrals that sandwich the ε-enlargement of `A_K`.
//!
//! Every integral is reported relative to the explicit factor
//! `exp(-(ωK/c)^{2β})` so that large `K` never underflows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logvalue::LogValue;
use crate::measures::{GroupSpec, GrushinSpec, ProblemSpec, Setting};
use crate::quadrature::{integrate_log, QuadratureConfig};
use crate::radial::{InnerDomain, NestedRadial, RadialKernel};
use crate::special::{ln_pow, pow_diff};

/// One member `A_K` of the family, with the constant `c` multiplying `|y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetFamilyHandle {
    pub setting: Setting,
    #[serde(rename = "K")]
    pub k: f64,
    pub normalisation: f64,
}

impl SetFamilyHandle {
    pub fn new(setting: Setting, k: f64, normalisation: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!("K must be finite and > 0, got {k}")));
        }
        if !(normalisation > 0.0) || !normalisation.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "the normalisation c must be finite and > 0, got {normalisation}"
            )));
        }
        Ok(SetFamilyHandle {
            setting,
            k,
            normalisation,
        })
    }

    /// `c = 1 + γ`.
    pub fn grushin(spec: &GrushinSpec, k: f64) -> Result<Self> {
        SetFamilyHandle::new(Setting::Grushin, k, spec.alpha())
    }

    /// `c = 1`.
    pub fn group(k: f64) -> Result<Self> {
        SetFamilyHandle::new(Setting::Group, k, 1.0)
    }

    /// The default member for either setting.
    pub fn for_spec(spec: &ProblemSpec, k: f64) -> Result<Self> {
        match spec {
            ProblemSpec::Grushin(s) => SetFamilyHandle::grushin(s, k),
            ProblemSpec::Group(_) => SetFamilyHandle::group(k),
        }
    }

    pub fn with_normalisation(self, c: f64) -> Result<Self> {
        SetFamilyHandle::new(self.setting, self.k, c)
    }

    fn expect(&self, setting: Setting) -> Result<()> {
        if self.setting != setting {
            return Err(Error::InvalidArgument(format!(
                "set family is for the {:?} setting, expected {setting:?}",
                self.setting
            )));
        }
        Ok(())
    }
}

/// Which integrand represents the Grushin perimeter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerimeterForm {
    /// Horizontal normal weight times the Hausdorff element of the graph,
    /// `r^γ √(α² + c²) / c`.
    #[default]
    Exact,
    /// The reduced form that keeps the denominator of the unit normal but not
    /// the graph element, `r^γ √(α² + c²) / √(α² r^{2γ} + c²)`.
    Literal,
}

/// Geometry of `A_K` shared by the Grushin and the group computations.
struct HalfSpace {
    kernel: RadialKernel,
    n: usize,
    m: usize,
    ln_sphere: f64,
    k: f64,
    c: f64,
}

impl HalfSpace {
    fn grushin(spec: &GrushinSpec, set: &SetFamilyHandle) -> Result<Self> {
        set.expect(Setting::Grushin)?;
        Ok(HalfSpace {
            kernel: spec.kernel(),
            n: spec.n(),
            m: spec.m(),
            ln_sphere: spec.ln_sphere_product(),
            k: set.k,
            c: set.normalisation,
        })
    }

    fn group(spec: &GroupSpec, set: &SetFamilyHandle) -> Result<Self> {
        set.expect(Setting::Group)?;
        Ok(HalfSpace {
            kernel: spec.kernel(),
            n: spec.n(),
            m: spec.m(),
            ln_sphere: spec.ln_sphere_product(),
            k: set.k,
            c: set.normalisation,
        })
    }

    /// `g(r) = (r^α + K) / c`, the boundary in the radial variables.
    fn boundary(&self, r: f64) -> f64 {
        (r.powf(self.kernel.alpha) + self.k) / self.c
    }

    /// `s_ref = K / c`, the boundary at `r = 0`.
    fn s_ref(&self) -> f64 {
        self.k / self.c
    }

    fn phi_ref(&self) -> f64 {
        self.kernel.exponent(0.0, self.s_ref())
    }

    fn volume(&self, cfg: &QuadratureConfig) -> Result<LogValue> {
        let kernel = self.kernel;
        let terminal = |r: f64| self.boundary(r);
        let outer_shift = |r: f64| kernel.exponent_above(r, self.boundary(r), self.s_ref());
        let inner_step = |r: f64, s: f64, sigma: f64| kernel.exponent_step(r, s, sigma);
        let v = NestedRadial {
            n: self.n,
            m: self.m,
            domain: InnerDomain::Tail(&terminal),
            outer_upper: f64::INFINITY,
            outer_shift: &outer_shift,
            inner_step: &inner_step,
            phi_ref: self.phi_ref(),
        }
        .integrate(cfg)?;
        Ok(v.scale_log(self.ln_sphere))
    }

    /// `∫ r^{n-1} g^{m-1} W(r) e^{-Φ(r, g(r))} dr` with `ln W` supplied.
    fn surface(&self, ln_weight: impl Fn(f64) -> f64, cfg: &QuadratureConfig) -> Result<LogValue> {
        let kernel = self.kernel;
        let (ln_x, ln_y) = ((self.n - 1) as f64, (self.m - 1) as f64);
        let v = integrate_log(
            0.0,
            f64::INFINITY,
            |r| {
                let g = self.boundary(r);
                Ok(ln_pow(r, ln_x) + ln_pow(g, ln_y) + ln_weight(r) - kernel.exponent_above(r, g, self.s_ref()))
            },
            cfg,
        )?;
        Ok(v.scale_log(self.ln_sphere - self.phi_ref()))
    }
}

/// `μ(A_K)` before dividing by `Z`.
pub fn volume_ak_grushin(spec: &GrushinSpec, set: &SetFamilyHandle, cfg: &QuadratureConfig) -> Result<LogValue> {
    HalfSpace::grushin(spec, set)?.volume(cfg)
}

/// `μ⁺(A_K)` before dividing by `Z`, as the integral of the horizontal normal
/// weight over `∂A_K` against the density.
pub fn perimeter_ak_grushin(
    spec: &GrushinSpec,
    set: &SetFamilyHandle,
    form: PerimeterForm,
    cfg: &QuadratureConfig,
) -> Result<LogValue> {
    let hs = HalfSpace::grushin(spec, set)?;
    let (gamma, alpha, c) = (spec.gamma(), spec.alpha(), set.normalisation);
    let ln_numerator = 0.5 * (alpha * alpha + c * c).ln();
    match form {
        PerimeterForm::Exact => hs.surface(|r| ln_pow(r, gamma) + ln_numerator - c.ln(), cfg),
        PerimeterForm::Literal => hs.surface(
            |r| {
                let r2g = if gamma == 0.0 { 1.0 } else { r.powf(2.0 * gamma) };
                ln_pow(r, gamma) + ln_numerator - 0.5 * (alpha * alpha * r2g + c * c).ln()
            },
            cfg,
        ),
    }
}

/// The two bounds on the Grushin volume obtained by replacing the exponent,
/// in the variable `t = ω s`, by `t^{2β}` (upper) and `(t + r^α)^{2β}` (lower).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeBounds {
    pub lower: LogValue,
    pub upper: LogValue,
}

pub fn volume_bounds_grushin(
    spec: &GrushinSpec,
    set: &SetFamilyHandle,
    cfg: &QuadratureConfig,
) -> Result<VolumeBounds> {
    let hs = HalfSpace::grushin(spec, set)?;
    let (alpha, beta, w) = (spec.alpha(), spec.beta(), hs.kernel.omega);
    let t_ref = w * hs.s_ref();
    let terminal = |r: f64| hs.boundary(r);
    let run = |outer_shift: &(dyn Fn(f64) -> f64 + Sync), inner_step: &(dyn Fn(f64, f64, f64) -> f64 + Sync)| {
        NestedRadial {
            n: hs.n,
            m: hs.m,
            domain: InnerDomain::Tail(&terminal),
            outer_upper: f64::INFINITY,
            outer_shift,
            inner_step,
            phi_ref: t_ref.powf(2.0 * beta),
        }
        .integrate(cfg)
        .map(|v| v.scale_log(hs.ln_sphere))
    };

    let upper_shift = |r: f64| {
        let t = w * hs.boundary(r);
        pow_diff(t_ref * t_ref, (t - t_ref) * (t + t_ref), beta)
    };
    let upper_step = |_r: f64, s: f64, sigma: f64| pow_diff((w * s).powi(2), w * w * sigma * (sigma + 2.0 * s), beta);
    let upper = run(&upper_shift, &upper_step)?;

    let lower_shift = |r: f64| {
        let ra = r.powf(alpha);
        // ωg + r^α - t_ref = r^α (ω/c + 1)
        let above = ra * (w / hs.c + 1.0);
        pow_diff(t_ref * t_ref, above * (above + 2.0 * t_ref), beta)
    };
    let lower_step = |r: f64, s: f64, sigma: f64| {
        let t = w * s + r.powf(alpha);
        pow_diff(t * t, w * sigma * (w * sigma + 2.0 * t), beta)
    };
    let lower = run(&lower_shift, &lower_step)?;
    Ok(VolumeBounds { lower, upper })
}

/// `μ(A_K)` for `A_K = {c|z| ≥ |x|² + K}` before dividing by `Z`.
pub fn volume_ak_group(spec: &GroupSpec, set: &SetFamilyHandle, cfg: &QuadratureConfig) -> Result<LogValue> {
    HalfSpace::group(spec, set)?.volume(cfg)
}

/// Volume for either setting.
pub fn volume_ak(spec: &ProblemSpec, set: &SetFamilyHandle, cfg: &QuadratureConfig) -> Result<LogValue> {
    match spec {
        ProblemSpec::Grushin(s) => volume_ak_grushin(s, set, cfg),
        ProblemSpec::Group(s) => volume_ak_group(s, set, cfg),
    }
}

/// Constants of the band integrals bracketing the group perimeter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl BracketConstants {
    /// `C1 = 4C0`, `C2 = C0`, `C3 = C0^{3/2}/4`.
    pub fn from_c0(c0: f64) -> Self {
        BracketConstants {
            c1: 4.0 * c0,
            c2: c0,
            c3: c0.powf(1.5) / 4.0,
        }
    }
}

impl Default for BracketConstants {
    fn default() -> Self {
        BracketConstants::from_c0(1.0)
    }
}

pub const DEFAULT_EPSILON_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerimeterBracket {
    /// At the smallest ε.
    pub lower: LogValue,
    /// At the smallest ε.
    pub upper: LogValue,
    pub epsilon_ladder: Vec<f64>,
    /// Limit of `upper(ε)` as `ε → 0`, from the two smallest ε.
    pub extrapolated: LogValue,
    pub lower_by_epsilon: Vec<LogValue>,
    pub upper_by_epsilon: Vec<LogValue>,
}

/// Band integrals `(1/ε) ∫∫ r^{n-1} s^{m-1} e^{-Φ}` over
/// `r ∈ [0, 1], s ∈ [r² - C3εr + K, r² + K]` (lower) and
/// `r ∈ [0, ∞), s ∈ [r² - C1εr + K - C2ε², r² + K]` (upper).
pub fn perimeter_bracket_group(
    spec: &GroupSpec,
    set: &SetFamilyHandle,
    epsilon_ladder: &[f64],
    constants: &BracketConstants,
    cfg: &QuadratureConfig,
) -> Result<PerimeterBracket> {
    let hs = HalfSpace::group(spec, set)?;
    if epsilon_ladder.len() < 2 {
        return Err(Error::InvalidArgument(
            "the epsilon ladder needs at least two values".into(),
        ));
    }
    if epsilon_ladder.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidArgument("epsilon values must be finite and > 0".into()));
    }
    if epsilon_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "the epsilon ladder must be strictly decreasing".into(),
        ));
    }
    let BracketConstants { c1, c2, c3 } = *constants;
    if [c1, c2, c3].iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::InvalidArgument(
            "bracket constants must be finite and >= 0".into(),
        ));
    }

    let band = |eps: f64, outer_upper: f64, drop: &(dyn Fn(f64) -> f64 + Sync)| -> Result<LogValue> {
        let top = |r: f64| hs.boundary(r);
        let bottom = |r: f64| (top(r) - drop(r) / hs.c).max(0.0);
        let width = |r: f64| top(r) - bottom(r);
        let kernel = hs.kernel;
        let outer_shift = |r: f64| kernel.exponent_above(r, bottom(r), hs.s_ref());
        let inner_step = |r: f64, s: f64, sigma: f64| kernel.exponent_step(r, s, sigma);
        let v = NestedRadial {
            n: hs.n,
            m: hs.m,
            domain: InnerDomain::Band {
                terminal: &bottom,
                width: &width,
            },
            outer_upper,
            outer_shift: &outer_shift,
            inner_step: &inner_step,
            phi_ref: hs.phi_ref(),
        }
        .integrate(cfg)?;
        Ok(v.scale_log(hs.ln_sphere - eps.ln()))
    };

    let mut lower_by_epsilon = Vec::with_capacity(epsilon_ladder.len());
    let mut upper_by_epsilon = Vec::with_capacity(epsilon_ladder.len());
    for &eps in epsilon_ladder {
        let lower = band(eps, 1.0, &|r: f64| c3 * eps * r)?;
        let upper = band(eps, f64::INFINITY, &|r: f64| c1 * eps * r + c2 * eps * eps)?;
        if lower > upper {
            return Err(Error::BracketInverted {
                epsilon: eps,
                lower_log: lower.log_abs(),
                upper_log: upper.log_abs(),
            });
        }
        lower_by_epsilon.push(lower);
        upper_by_epsilon.push(upper);
    }

    let last = epsilon_ladder.len() - 1;
    let (ea, eb) = (epsilon_ladder[last - 1], epsilon_ladder[last]);
    let (ua, ub) = (upper_by_epsilon[last - 1], upper_by_epsilon[last]);
    // first-order elimination: U(ε) = U0 + ε U1
    let extrapolated = (ub.scale_log(ea.ln()) - ua.scale_log(eb.ln())) / LogValue::from_f64(ea - eb);
    Ok(PerimeterBracket {
        lower: lower_by_epsilon[last],
        upper: upper_by_epsilon[last],
        epsilon_ladder: epsilon_ladder.to_vec(),
        extrapolated,
        lower_by_epsilon,
        upper_by_epsilon,
    })
}

/// Evaluate `f` at every `K` in parallel, keeping the order of `k_grid`.
pub fn sweep_k<T, F>(k_grid: &[f64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    k_grid.par_iter().map(|&k| f(k)).collect()
}

/// `(K, μ(A_K))` over a grid, unnormalised.
pub fn volume_sweep(
    spec: &ProblemSpec,
    k_grid: &[f64],
    c: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<Vec<(f64, LogValue)>> {
    sweep_k(k_grid, |k| {
        let mut set = SetFamilyHandle::for_spec(spec, k)?;
        if let Some(c) = c {
            set = set.with_normalisation(c)?;
        }
        Ok((k, volume_ak(spec, &set, cfg)?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn grushin(gamma: f64, p: f64, n: usize, m: usize) -> GrushinSpec {
        GrushinSpec::new(gamma, p, n, m).unwrap()
    }

    #[test]
    fn set_handle_validation() {
        let s = grushin(1.0, 4.0, 1, 1);
        assert!(SetFamilyHandle::grushin(&s, 0.0).is_err());
        assert!(SetFamilyHandle::grushin(&s, 1.0)
            .unwrap()
            .with_normalisation(-1.0)
            .is_err());
        assert_eq!(SetFamilyHandle::grushin(&s, 1.0).unwrap().normalisation, 2.0);
        let h = GroupSpec::heisenberg(4.0).unwrap();
        let set = SetFamilyHandle::grushin(&s, 1.0).unwrap();
        assert!(volume_ak_group(&h, &set, &cfg()).is_err());
    }

    #[test]
    fn volume_decreases_in_k() {
        let s = grushin(1.0, 4.0, 1, 1);
        let v2 = volume_ak_grushin(&s, &SetFamilyHandle::grushin(&s, 2.0).unwrap(), &cfg()).unwrap();
        let v3 = volume_ak_grushin(&s, &SetFamilyHandle::grushin(&s, 3.0).unwrap(), &cfg()).unwrap();
        assert!(v3 < v2);
        let h = GroupSpec::heisenberg(4.0).unwrap();
        let g2 = volume_ak_group(&h, &SetFamilyHandle::group(2.0).unwrap(), &cfg()).unwrap();
        let g3 = volume_ak_group(&h, &SetFamilyHandle::group(3.0).unwrap(), &cfg()).unwrap();
        assert!(g3 < g2);
    }

    #[test]
    fn volume_stays_finite_far_below_underflow() {
        let s = grushin(1.0, 4.0, 1, 1);
        let v = volume_ak_grushin(&s, &SetFamilyHandle::grushin(&s, 60.0).unwrap(), &cfg()).unwrap();
        assert!(v.is_positive());
        // leading factor e^{-K^2}
        assert!(v.log_abs() < -3600.0 && v.log_abs() > -3620.0, "{v}");
    }

    #[test]
    fn volume_lies_between_its_bounds() {
        for (spec, c) in [
            (grushin(1.0, 4.0, 1, 1), 2.0),
            (grushin(0.0, 2.0, 1, 1), 1.0),
            (grushin(2.0, 6.0, 2, 3), 1.5),
            (grushin(0.5, 5.0, 3, 1), 0.7),
        ] {
            for k in [0.5, 2.0, 6.0] {
                let set = SetFamilyHandle::grushin(&spec, k)
                    .unwrap()
                    .with_normalisation(c)
                    .unwrap();
                let v = volume_ak_grushin(&spec, &set, &cfg()).unwrap();
                let b = volume_bounds_grushin(&spec, &set, &cfg()).unwrap();
                assert!(
                    b.lower <= v && v <= b.upper,
                    "{spec:?} K={k}: {} <= {v} <= {}",
                    b.lower,
                    b.upper
                );
            }
        }
    }

    #[test]
    fn group_volume_matches_grushin_at_gamma_one() {
        // with β = 1, Grushin γ = 1 and c = 2 maps to the group volume by s ↦ 2s
        for (n, m) in [(2, 1), (3, 2)] {
            let g = GrushinSpec::new(1.0, 4.0, n, m).unwrap();
            let h = GroupSpec::with_standard_basis(n, m, 4.0).unwrap();
            for k in [1.0, 4.0] {
                let vg = volume_ak_grushin(&g, &SetFamilyHandle::grushin(&g, k).unwrap(), &cfg()).unwrap();
                let vh = volume_ak_group(&h, &SetFamilyHandle::group(k).unwrap(), &cfg()).unwrap();
                let aligned = vg.scale_log(m as f64 * std::f64::consts::LN_2);
                assert!(aligned.rel_diff(&vh) < 1e-9, "n={n} m={m} K={k}: {aligned} vs {vh}");
            }
        }
    }

    #[test]
    fn perimeter_forms_differ_by_the_graph_factor_at_gamma_zero() {
        let s = grushin(0.0, 2.0, 1, 1);
        let set = SetFamilyHandle::grushin(&s, 1.0).unwrap();
        let e = perimeter_ak_grushin(&s, &set, PerimeterForm::Exact, &cfg()).unwrap();
        let l = perimeter_ak_grushin(&s, &set, PerimeterForm::Literal, &cfg()).unwrap();
        // the boundary |y| = |x| + 1 has constant slope, so dH = √2 dx
        assert!(((e / l).to_f64() - 2f64.sqrt()).abs() < 1e-12);
        let s = grushin(1.0, 4.0, 1, 1);
        let mut prev = LogValue::from_log(f64::INFINITY);
        for k in [1.0, 2.0, 4.0, 8.0] {
            let p = perimeter_ak_grushin(
                &s,
                &SetFamilyHandle::grushin(&s, k).unwrap(),
                PerimeterForm::Exact,
                &cfg(),
            )
            .unwrap();
            assert!(p.is_positive() && p < prev);
            prev = p;
        }
    }

    #[test]
    fn literal_perimeter_is_within_the_graph_factor() {
        // 1 ≤ exact/literal = √(α² r^{2γ} + c²)/c, so literal ≤ exact
        let s = grushin(1.0, 4.0, 2, 1);
        let set = SetFamilyHandle::grushin(&s, 3.0).unwrap();
        let e = perimeter_ak_grushin(&s, &set, PerimeterForm::Exact, &cfg()).unwrap();
        let l = perimeter_ak_grushin(&s, &set, PerimeterForm::Literal, &cfg()).unwrap();
        assert!(l < e);
    }

    #[test]
    fn bracket_is_ordered_and_extrapolation_is_inside() {
        let h = GroupSpec::heisenberg(4.0).unwrap();
        let set = SetFamilyHandle::group(5.0).unwrap();
        let b =
            perimeter_bracket_group(&h, &set, &DEFAULT_EPSILON_LADDER, &BracketConstants::default(), &cfg()).unwrap();
        assert!(b.lower <= b.extrapolated && b.extrapolated <= b.upper);
        for (l, u) in b.lower_by_epsilon.iter().zip(&b.upper_by_epsilon) {
            assert!(l <= u);
        }
    }

    #[test]
    fn bracket_ladder_self_consistency() {
        let h = GroupSpec::heisenberg(4.0).unwrap();
        let set = SetFamilyHandle::group(5.0).unwrap();
        let b = perimeter_bracket_group(&h, &set, &[1e-3, 5e-4], &BracketConstants::default(), &cfg()).unwrap();
        let ratio = (b.upper_by_epsilon[0] / b.upper_by_epsilon[1]).to_f64();
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn bracket_with_zero_constants_is_zero() {
        let h = GroupSpec::heisenberg(4.0).unwrap();
        let set = SetFamilyHandle::group(5.0).unwrap();
        let zero = BracketConstants {
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
        };
        let b = perimeter_bracket_group(&h, &set, &DEFAULT_EPSILON_LADDER, &zero, &cfg()).unwrap();
        assert!(b.lower.is_zero() && b.upper.is_zero() && b.extrapolated.is_zero());
    }

    #[test]
    fn bracket_rejects_bad_ladders() {
        let h = GroupSpec::heisenberg(4.0).unwrap();
        let set = SetFamilyHandle::group(5.0).unwrap();
        let c = BracketConstants::default();
        assert!(perimeter_bracket_group(&h, &set, &[1e-2], &c, &cfg()).is_err());
        assert!(perimeter_bracket_group(&h, &set, &[1e-3, 1e-2], &c, &cfg()).is_err());
        assert!(perimeter_bracket_group(&h, &set, &[1e-2, 0.0], &c, &cfg()).is_err());
    }

    #[test]
    fn sweep_preserves_grid_order() {
        let spec: ProblemSpec = grushin(1.0, 4.0, 1, 1).into();
        let grid = [5.0, 6.0, 7.0, 8.0];
        let out = volume_sweep(&spec, &grid, None, &cfg()).unwrap();
        assert_eq!(out.iter().map(|(k, _)| *k).collect::<Vec<_>>(), grid);
        assert!(out.windows(2).all(|w| w[1].1 < w[0].1));
    }
}
