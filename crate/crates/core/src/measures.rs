//! Problem settings: the Grushin measures `μ_{γ,p}` on `R^n_x × R^m_y` and the
//! step-two group measures `μ_{G,p}` on `R^n_x × R^m_z`, both with density
//! proportional to `exp(-N^p)` for the respective Kaplan-type norm `N`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::logvalue::LogValue;
use crate::quadrature::QuadratureConfig;
use crate::radial::{InnerDomain, NestedRadial, RadialKernel};
use crate::special::ln_sphere_area;

const SKEW_TOL: f64 = 1e-12;

/// Grushin exponent `γ`, tail exponent `p ≥ 1 + γ` and the two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GrushinSpec {
    gamma: f64,
    p: f64,
    n: usize,
    m: usize,
    alpha: f64,
    beta: f64,
    r_model: f64,
    ln_sphere_x: f64,
    ln_sphere_y: f64,
}

impl GrushinSpec {
    pub fn new(gamma: f64, p: f64, n: usize, m: usize) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        if !(p >= 1.0 + gamma) || !p.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "p must satisfy p >= 1 + gamma = {}, got {p}",
                1.0 + gamma
            )));
        }
        if n == 0 || m == 0 {
            return Err(Error::InvalidSpec(format!(
                "dimensions must be >= 1, got n = {n}, m = {m}"
            )));
        }
        let alpha = 1.0 + gamma;
        Ok(GrushinSpec {
            gamma,
            p,
            n,
            m,
            alpha,
            beta: p / (2.0 * alpha),
            r_model: p * alpha / (p * gamma + alpha),
            ln_sphere_x: ln_sphere_area(n - 1),
            ln_sphere_y: ln_sphere_area(m - 1),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    /// `α = 1 + γ`
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// `β = p / (2α) ≥ 1/2`
    pub fn beta(&self) -> f64 {
        self.beta
    }
    /// Exponent of the model profile: `p(1+γ) / (pγ + 1 + γ)`.
    pub fn r_model(&self) -> f64 {
        self.r_model
    }
    /// `ln(σ_{n-1} σ_{m-1})`
    pub fn ln_sphere_product(&self) -> f64 {
        self.ln_sphere_x + self.ln_sphere_y
    }

    pub(crate) fn kernel(&self) -> RadialKernel {
        RadialKernel {
            alpha: self.alpha,
            beta: self.beta,
            omega: self.alpha,
        }
    }
}

/// A step-two stratified group `R^n × R^m` with law
/// `(x, z) ∘ (ξ, ζ) = (x + ξ, z_j + ζ_j + ½⟨B^{(j)} x, ξ⟩)` and tail exponent `p ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    n: usize,
    m: usize,
    /// Row-major `n × n` matrices.
    b: Vec<Vec<f64>>,
    p: f64,
    beta: f64,
    r_model: f64,
    ln_sphere_x: f64,
    ln_sphere_z: f64,
}

impl GroupSpec {
    /// `b` holds `m` row-major `n × n` matrices.
    pub fn new(n: usize, m: usize, b: Vec<Vec<f64>>, p: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidSpec(format!(
                "dimensions must be >= 1, got n = {n}, m = {m}"
            )));
        }
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::InvalidSpec(format!("p must be finite and >= 2, got {p}")));
        }
        if b.len() != m {
            return Err(Error::InvalidSpec(format!("expected {m} matrices B, got {}", b.len())));
        }
        for (j, mat) in b.iter().enumerate() {
            if mat.len() != n * n {
                return Err(Error::InvalidSpec(format!(
                    "B[{j}] has {} entries, expected {}",
                    mat.len(),
                    n * n
                )));
            }
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("B[{j}] has non-finite entries")));
            }
            let scale = mat.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            for i in 0..n {
                for k in 0..n {
                    if (mat[i * n + k] + mat[k * n + i]).abs() > SKEW_TOL * scale {
                        return Err(Error::InvalidSpec(format!(
                            "B[{j}] is not skew-symmetric at ({i}, {k})"
                        )));
                    }
                }
            }
        }
        let stacked = nalgebra::DMatrix::from_fn(m, n * n, |j, e| b[j][e]);
        if stacked.rank(1e-10) < m {
            return Err(Error::InvalidSpec("the matrices B are not linearly independent".into()));
        }
        Ok(GroupSpec {
            n,
            m,
            b,
            p,
            beta: p / 4.0,
            r_model: 2.0 * p / (p + 2.0),
            ln_sphere_x: ln_sphere_area(n - 1),
            ln_sphere_z: ln_sphere_area(m - 1),
        })
    }

    /// The Heisenberg group `H^1` with the law
    /// `(x₁, y₁, z₁) ∘ (x₂, y₂, z₂) = (x₁ + x₂, y₁ + y₂, z₁ + z₂ + 2(x₁y₂ - x₂y₁))`.
    pub fn heisenberg(p: f64) -> Result<Self> {
        GroupSpec::new(2, 1, vec![vec![0.0, -4.0, 4.0, 0.0]], p)
    }

    /// `m` elementary skew matrices `E_{ik} - E_{ki}` in lexicographic order of
    /// `(i, k)`, `i < k`; the Heisenberg matrix when `n = 2, m = 1`.
    pub fn with_standard_basis(n: usize, m: usize, p: f64) -> Result<Self> {
        if n == 2 && m == 1 {
            return GroupSpec::heisenberg(p);
        }
        let mut b = Vec::with_capacity(m);
        'outer: for i in 0..n {
            for k in (i + 1)..n {
                if b.len() == m {
                    break 'outer;
                }
                let mut mat = vec![0.0; n * n];
                mat[i * n + k] = 1.0;
                mat[k * n + i] = -1.0;
                b.push(mat);
            }
        }
        if b.len() < m {
            return Err(Error::InvalidSpec(format!(
                "at most n(n-1)/2 = {} independent skew matrices exist for n = {n}",
                n * n.saturating_sub(1) / 2
            )));
        }
        GroupSpec::new(n, m, b, p)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn matrices(&self) -> &[Vec<f64>] {
        &self.b
    }
    /// `α = 2` for every step-two group.
    pub fn alpha(&self) -> f64 {
        2.0
    }
    /// `β = p / 4`
    pub fn beta(&self) -> f64 {
        self.beta
    }
    /// `2p / (p + 2) < 2`
    pub fn r_model(&self) -> f64 {
        self.r_model
    }
    pub fn ln_sphere_product(&self) -> f64 {
        self.ln_sphere_x + self.ln_sphere_z
    }

    /// `⟨B^{(j)} x, ξ⟩`
    pub fn bilinear(&self, j: usize, x: &[f64], xi: &[f64]) -> f64 {
        let mat = &self.b[j];
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &mat[i * n..(i + 1) * n];
            let bx_i: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += bx_i * xi[i];
        }
        acc
    }

    /// Spectral norm of `B^{(j)}`.
    pub fn operator_norm(&self, j: usize) -> f64 {
        let mat = nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.b[j]);
        mat.singular_values().max()
    }

    pub(crate) fn kernel(&self) -> RadialKernel {
        RadialKernel {
            alpha: 2.0,
            beta: self.beta,
            omega: 1.0,
        }
    }
}

/// Either setting, as read from a spec file.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Grushin(GrushinSpec),
    Group(GroupSpec),
}

impl ProblemSpec {
    pub fn alpha(&self) -> f64 {
        match self {
            ProblemSpec::Grushin(s) => s.alpha(),
            ProblemSpec::Group(s) => s.alpha(),
        }
    }
    pub fn beta(&self) -> f64 {
        match self {
            ProblemSpec::Grushin(s) => s.beta(),
            ProblemSpec::Group(s) => s.beta(),
        }
    }
    pub fn n(&self) -> usize {
        match self {
            ProblemSpec::Grushin(s) => s.n(),
            ProblemSpec::Group(s) => s.n(),
        }
    }
    pub fn m(&self) -> usize {
        match self {
            ProblemSpec::Grushin(s) => s.m(),
            ProblemSpec::Group(s) => s.m(),
        }
    }
    pub fn p(&self) -> f64 {
        match self {
            ProblemSpec::Grushin(s) => s.p(),
            ProblemSpec::Group(s) => s.p(),
        }
    }
    pub fn ln_sphere_product(&self) -> f64 {
        match self {
            ProblemSpec::Grushin(s) => s.ln_sphere_product(),
            ProblemSpec::Group(s) => s.ln_sphere_product(),
        }
    }
    pub(crate) fn kernel(&self) -> RadialKernel {
        match self {
            ProblemSpec::Grushin(s) => s.kernel(),
            ProblemSpec::Group(s) => s.kernel(),
        }
    }
}

impl From<GrushinSpec> for ProblemSpec {
    fn from(s: GrushinSpec) -> Self {
        ProblemSpec::Grushin(s)
    }
}

impl From<GroupSpec> for ProblemSpec {
    fn from(s: GroupSpec) -> Self {
        ProblemSpec::Group(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Grushin,
    Group,
}

/// A matrix in a problem file: either flat row-major or a list of rows.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

/// The JSON form `{"setting", "gamma", "p", "n", "m", "B"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub setting: Setting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub p: f64,
    pub n: usize,
    pub m: usize,
    #[serde(
        rename = "B",
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "deserialize_matrices"
    )]
    pub b: Option<Vec<Vec<f64>>>,
}

fn deserialize_matrices<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Vec<f64>>>, D::Error> {
    let raw: Option<Vec<MatrixRepr>> = Option::deserialize(d)?;
    Ok(raw.map(|mats| {
        mats.into_iter()
            .map(|m| match m {
                MatrixRepr::Flat(v) => v,
                MatrixRepr::Rows(rows) => rows.concat(),
            })
            .collect()
    }))
}

impl TryFrom<SpecFile> for ProblemSpec {
    type Error = Error;

    fn try_from(f: SpecFile) -> Result<Self> {
        match f.setting {
            Setting::Grushin => {
                if f.b.is_some() {
                    return Err(Error::InvalidSpec("B is only meaningful for the group setting".into()));
                }
                let gamma = f
                    .gamma
                    .ok_or_else(|| Error::InvalidSpec("grushin setting requires gamma".into()))?;
                Ok(GrushinSpec::new(gamma, f.p, f.n, f.m)?.into())
            }
            Setting::Group => {
                if f.gamma.is_some_and(|g| g != 1.0) {
                    return Err(Error::InvalidSpec(
                        "gamma is not a parameter of the group setting".into(),
                    ));
                }
                let spec = match f.b {
                    Some(b) => GroupSpec::new(f.n, f.m, b, f.p)?,
                    None => GroupSpec::with_standard_basis(f.n, f.m, f.p)?,
                };
                Ok(spec.into())
            }
        }
    }
}

impl From<&ProblemSpec> for SpecFile {
    fn from(spec: &ProblemSpec) -> Self {
        match spec {
            ProblemSpec::Grushin(s) => SpecFile {
                setting: Setting::Grushin,
                gamma: Some(s.gamma()),
                p: s.p(),
                n: s.n(),
                m: s.m(),
                b: None,
            },
            ProblemSpec::Group(s) => SpecFile {
                setting: Setting::Group,
                gamma: None,
                p: s.p(),
                n: s.n(),
                m: s.m(),
                b: Some(s.matrices().to_vec()),
            },
        }
    }
}

impl Serialize for ProblemSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpecFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProblemSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = SpecFile::deserialize(deserializer)?;
        ProblemSpec::try_from(file).map_err(serde::de::Error::custom)
    }
}

/// `N_γ = (|x|^{2(1+γ)} + (1+γ)² |y|²)^{1/(2(1+γ))}` at radii `|x|`, `|y|`.
pub fn kaplan_norm_grushin(x_rad: f64, y_rad: f64, gamma: f64) -> f64 {
    let alpha = 1.0 + gamma;
    (x_rad.powf(2.0 * alpha) + alpha * alpha * y_rad * y_rad).powf(1.0 / (2.0 * alpha))
}

/// `N_G = (|x|⁴ + |z|²)^{1/4}`.
pub fn kaplan_norm_group(x_rad: f64, z_rad: f64) -> f64 {
    (x_rad.powi(4) + z_rad * z_rad).powf(0.25)
}

/// `exp(-N^p)` at radii `(|x|, |y|)` as a [`LogValue`].
pub fn density_unnormalized(spec: &ProblemSpec, x_rad: f64, y_rad: f64) -> LogValue {
    LogValue::from_log(-spec.kernel().exponent(x_rad, y_rad))
}

/// `Z = ∫ exp(-N^p) dx dy`, reduced to `σ_{n-1} σ_{m-1} ∫∫ r^{n-1} s^{m-1} e^{-N^p} ds dr`.
pub fn normalization_constant(spec: &ProblemSpec, cfg: &QuadratureConfig) -> Result<LogValue> {
    let kernel = spec.kernel();
    let zero = |_r: f64| 0.0;
    let outer_shift = |r: f64| kernel.exponent(r, 0.0);
    let inner_step = |r: f64, s: f64, sigma: f64| kernel.exponent_step(r, s, sigma);
    let integral = NestedRadial {
        n: spec.n(),
        m: spec.m(),
        domain: InnerDomain::Tail(&zero),
        outer_upper: f64::INFINITY,
        outer_shift: &outer_shift,
        inner_step: &inner_step,
        phi_ref: 0.0,
    }
    .integrate(cfg)?;
    Ok(integral.scale_log(spec.ln_sphere_product()))
}

/// Exponent `r` of the model profile `J_r` the measure is compared with.
pub fn model_r(spec: &ProblemSpec) -> f64 {
    match spec {
        ProblemSpec::Grushin(s) => s.r_model(),
        ProblemSpec::Group(s) => s.r_model(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::beta::ln_beta;
    use statrs::function::gamma::ln_gamma;

    /// `Z` in closed form: with `a = r^{2α}`, `b = ω² s²` the integral is a
    /// Dirichlet integral, giving
    /// `σσ ω^{-m} (4α)^{-1} B(n/(2α), m/2) Γ((n/(2α) + m/2)/β) / β`.
    fn ln_z_closed_form(spec: &ProblemSpec) -> f64 {
        let k = spec.kernel();
        let (n, m) = (spec.n() as f64, spec.m() as f64);
        let (pa, qa) = (n / (2.0 * k.alpha), m / 2.0);
        spec.ln_sphere_product() - m * k.omega.ln() - (4.0 * k.alpha).ln()
            + ln_beta(pa, qa)
            + ln_gamma((pa + qa) / k.beta)
            - k.beta.ln()
    }

    #[test]
    fn grushin_norm_examples() {
        assert!((kaplan_norm_grushin(3.0, 4.0, 0.0) - 5.0).abs() < 1e-15);
        assert!((kaplan_norm_grushin(1.0, 0.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((kaplan_norm_grushin(0.0, 1.0, 1.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn group_norm_examples() {
        assert_eq!(kaplan_norm_group(1.0, 0.0), 1.0);
        assert!((kaplan_norm_group(0.0, 4.0) - 2.0).abs() < 1e-15);
        assert!((kaplan_norm_group(1.0, 1.0) - 2f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn density_examples() {
        let s14: ProblemSpec = GrushinSpec::new(1.0, 4.0, 1, 1).unwrap().into();
        let s02: ProblemSpec = GrushinSpec::new(0.0, 2.0, 1, 1).unwrap().into();
        assert_eq!(density_unnormalized(&s14, 0.0, 0.0), LogValue::ONE);
        assert!((density_unnormalized(&s02, 1.0, 1.0).log_abs() + 2.0).abs() < 1e-14);
        assert!((density_unnormalized(&s14, 1.0, 0.0).log_abs() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn z_sanity_constants() {
        let cfg = QuadratureConfig::default();
        let pi = std::f64::consts::PI;
        let s: ProblemSpec = GrushinSpec::new(0.0, 2.0, 1, 1).unwrap().into();
        let z = normalization_constant(&s, &cfg).unwrap().to_f64();
        assert!((z - pi).abs() / pi < 1e-9, "{z}");
        let s: ProblemSpec = GrushinSpec::new(0.0, 1.0, 1, 1).unwrap().into();
        let z = normalization_constant(&s, &cfg).unwrap().to_f64();
        assert!((z - 2.0 * pi).abs() / (2.0 * pi) < 1e-9, "{z}");
    }

    #[test]
    fn z_matches_closed_form_across_settings() {
        let cfg = QuadratureConfig::default();
        let specs: Vec<ProblemSpec> = vec![
            GrushinSpec::new(1.0, 4.0, 1, 1).unwrap().into(),
            GrushinSpec::new(2.0, 6.0, 1, 1).unwrap().into(),
            GrushinSpec::new(0.5, 3.0, 3, 2).unwrap().into(),
            GrushinSpec::new(1.0, 7.0, 2, 4).unwrap().into(),
            GroupSpec::heisenberg(4.0).unwrap().into(),
            GroupSpec::with_standard_basis(4, 3, 6.0).unwrap().into(),
        ];
        for spec in &specs {
            let got = normalization_constant(spec, &cfg).unwrap_or_else(|e| panic!("{spec:?}: {e}"));
            let expect = ln_z_closed_form(spec);
            assert!(
                (got.log_abs() - expect).abs() < 1e-9,
                "{spec:?}: {} vs {expect}",
                got.log_abs()
            );
        }
    }

    #[test]
    fn model_r_examples() {
        let s: ProblemSpec = GrushinSpec::new(1.0, 4.0, 1, 1).unwrap().into();
        assert!((model_r(&s) - 4.0 / 3.0).abs() < 1e-15);
        let s: ProblemSpec = GrushinSpec::new(0.0, 3.5, 1, 1).unwrap().into();
        assert!((model_r(&s) - 3.5).abs() < 1e-15);
        let s: ProblemSpec = GroupSpec::heisenberg(4.0).unwrap().into();
        assert!((model_r(&s) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(GrushinSpec::new(-1.0, 4.0, 1, 1).is_err());
        assert!(GrushinSpec::new(1.0, 1.5, 1, 1).is_err());
        assert!(GrushinSpec::new(1.0, 4.0, 0, 1).is_err());
        assert!(GroupSpec::new(2, 1, vec![vec![0.0, 1.0, 1.0, 0.0]], 4.0).is_err());
        assert!(GroupSpec::new(2, 1, vec![vec![0.0, 1.0, -1.0, 0.0]], 1.0).is_err());
        let j = vec![0.0, 1.0, -1.0, 0.0];
        assert!(GroupSpec::new(2, 2, vec![j.clone(), j.clone()], 4.0).is_err());
        assert!(GroupSpec::with_standard_basis(2, 2, 4.0).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"setting":"group","p":4,"n":2,"m":1,"B":[[0,-4,4,0]]}"#;
        let spec: ProblemSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec, GroupSpec::heisenberg(4.0).unwrap().into());
        let nested = r#"{"setting":"group","p":4,"n":2,"m":1,"B":[[[0,-4],[4,0]]]}"#;
        assert_eq!(serde_json::from_str::<ProblemSpec>(nested).unwrap(), spec);
        let back: ProblemSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);

        let g: ProblemSpec = serde_json::from_str(r#"{"setting":"grushin","gamma":1,"p":4,"n":1,"m":1}"#).unwrap();
        assert_eq!(g, GrushinSpec::new(1.0, 4.0, 1, 1).unwrap().into());
        let err = serde_json::from_str::<ProblemSpec>(r#"{"setting":"grushin","gamma":-1,"p":4,"n":1,"m":1}"#);
        assert!(err.unwrap_err().to_string().contains("gamma"));
    }

    proptest! {
        #[test]
        fn grushin_norm_is_homogeneous(x in 0.0f64..10.0, y in 0.0f64..10.0, lambda in 0.01f64..20.0, gamma in 0.0f64..3.0) {
            let base = kaplan_norm_grushin(x, y, gamma);
            let scaled = kaplan_norm_grushin(lambda * x, lambda.powf(1.0 + gamma) * y, gamma);
            prop_assert!((scaled - lambda * base).abs() <= 1e-12 * (lambda * base).max(1e-300));
        }

        #[test]
        fn gamma_zero_is_euclidean(x in 0.0f64..100.0, y in 0.0f64..100.0) {
            let e = x.hypot(y);
            prop_assert!((kaplan_norm_grushin(x, y, 0.0) - e).abs() <= 1e-14 * e.max(1.0));
        }

        #[test]
        fn density_decreases_along_rays(x in 0.0f64..3.0, y in 0.0f64..3.0, t in 1.0f64..3.0, gamma in 0.0f64..2.0, extra in 0.0f64..4.0) {
            let spec: ProblemSpec = GrushinSpec::new(gamma, 1.0 + gamma + extra, 1, 1).unwrap().into();
            prop_assert!(density_unnormalized(&spec, t * x, t * y) <= density_unnormalized(&spec, x, y));
        }

        #[test]
        fn r_model_bounds(gamma in 0.0f64..5.0, extra in 0.0f64..20.0, pg in 2.0f64..50.0) {
            let s = GrushinSpec::new(gamma, 1.0 + gamma + extra, 1, 1).unwrap();
            prop_assert!(s.r_model() >= 1.0 - 1e-15 && s.r_model() <= s.p() + 1e-12);
            prop_assert!(s.beta() >= 0.5 - 1e-15);
            let g = GroupSpec::heisenberg(pg).unwrap();
            prop_assert!(g.r_model() < 2.0);
        }
    }
}
