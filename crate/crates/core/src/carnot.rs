//! Step-two group algebra, the Kaplan quasi-distance and Monte Carlo checks of
//! the two set inclusions sandwiching the ε-enlargement `A_{K,ε}` of
//! `A_K = {|z| > |x|² + K}`.
//!
//! Distances are measured by the Kaplan surrogate `d(g, h) = N_G(g ∘ h⁻¹)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::GroupSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Self {
        GroupPoint { x, z }
    }

    pub fn identity(spec: &GroupSpec) -> Self {
        GroupPoint {
            x: vec![0.0; spec.n()],
            z: vec![0.0; spec.m()],
        }
    }

    /// `g⁻¹ = -g`.
    pub fn inverse(&self) -> Self {
        GroupPoint {
            x: self.x.iter().map(|v| -v).collect(),
            z: self.z.iter().map(|v| -v).collect(),
        }
    }

    /// `δ_λ(x, z) = (λx, λ²z)`.
    pub fn dilate(&self, lambda: f64) -> Self {
        GroupPoint {
            x: self.x.iter().map(|v| lambda * v).collect(),
            z: self.z.iter().map(|v| lambda * lambda * v).collect(),
        }
    }

    pub fn x_norm(&self) -> f64 {
        euclid(&self.x)
    }

    pub fn z_norm(&self) -> f64 {
        euclid(&self.z)
    }

    /// `N_G = (|x|⁴ + |z|²)^{1/4}`.
    pub fn kaplan_norm(&self) -> f64 {
        crate::measures::kaplan_norm_group(self.x_norm(), self.z_norm())
    }

    fn check(&self, spec: &GroupSpec) -> Result<()> {
        if self.x.len() != spec.n() {
            return Err(Error::DimensionMismatch {
                expected: spec.n(),
                got: self.x.len(),
            });
        }
        if self.z.len() != spec.m() {
            return Err(Error::DimensionMismatch {
                expected: spec.m(),
                got: self.z.len(),
            });
        }
        Ok(())
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `(x, z) ∘ (ξ, ζ) = (x + ξ, z_j + ζ_j + ½⟨B^{(j)} x, ξ⟩)`.
pub fn group_multiply(spec: &GroupSpec, g: &GroupPoint, h: &GroupPoint) -> Result<GroupPoint> {
    g.check(spec)?;
    h.check(spec)?;
    Ok(multiply_unchecked(spec, g, h))
}

fn multiply_unchecked(spec: &GroupSpec, g: &GroupPoint, h: &GroupPoint) -> GroupPoint {
    let x = g.x.iter().zip(&h.x).map(|(a, b)| a + b).collect();
    let z = (0..spec.m())
        .map(|j| g.z[j] + h.z[j] + 0.5 * spec.bilinear(j, &g.x, &h.x))
        .collect();
    GroupPoint { x, z }
}

/// `N_G(g ∘ h⁻¹)`.
pub fn kaplan_quasi_distance(spec: &GroupSpec, g: &GroupPoint, h: &GroupPoint) -> Result<f64> {
    Ok(group_multiply(spec, g, &h.inverse())?.kaplan_norm())
}

/// `g ∈ A_K`, i.e. `|z| > |x|² + K`.
pub fn in_half_space(g: &GroupPoint, k: f64) -> bool {
    half_space_slack(g, k) > 0.0
}

fn half_space_slack(g: &GroupPoint, k: f64) -> f64 {
    let r = g.x_norm();
    g.z_norm() - r * r - k
}

/// Normalised slack of the δ-conditions `|δ_i| ≤ C0 ε`, `|c_j| ≤ C0 ε²`, where
/// `δ = x_g - x_h` and `c` is the centre of `g ∘ h⁻¹`.
fn delta_slack(spec: &GroupSpec, g: &GroupPoint, h: &GroupPoint, epsilon: f64, c0: f64) -> f64 {
    let diff = multiply_unchecked(spec, g, &h.inverse());
    let dx = diff.x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let dz = diff.z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (c0 - dx / epsilon).min(c0 - dz / (epsilon * epsilon))
}

/// Whether the pair satisfies the δ-conditions with constant `C0`. On the
/// Heisenberg group with `g = (u, v, w)`, `h = (x, y, z)` these read
/// `|δ₁|, |δ₂| ≤ C0 ε` and `|δ₃ + 2(δ₂x - δ₁y)| ≤ C0 ε²`.
pub fn delta_conditions_check(spec: &GroupSpec, g: &GroupPoint, h: &GroupPoint, epsilon: f64, c0: f64) -> Result<bool> {
    g.check(spec)?;
    h.check(spec)?;
    Ok(delta_slack(spec, g, h, epsilon, c0) >= 0.0)
}

/// Constants of the outer inclusion
/// `A_{K,ε} ⊂ {|z| > |x|² - C1 ε ‖x‖₁ + K - C2 ε²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterConstants {
    pub c1: f64,
    pub c2: f64,
}

impl OuterConstants {
    /// `C1 = 4C0`, `C2 = C0` on the Heisenberg group.
    pub fn heisenberg(c0: f64) -> Self {
        OuterConstants { c1: 4.0 * c0, c2: c0 }
    }

    /// Constants valid on any step-two group when `|δ| ≤ C0 ε`, `|c| ≤ C0 ε²`:
    /// with `b = (Σ_j ‖B^{(j)}‖²)^{1/2}`, `C1 = (2 + b/2) C0` and
    /// `C2 = (3 + b/2) C0² + C0`.
    pub fn general(spec: &GroupSpec, c0: f64) -> Self {
        let b = (0..spec.m()).map(|j| spec.operator_norm(j).powi(2)).sum::<f64>().sqrt();
        OuterConstants {
            c1: (2.0 + b / 2.0) * c0,
            c2: (3.0 + b / 2.0) * c0 * c0 + c0,
        }
    }

    pub fn for_spec(spec: &GroupSpec, c0: f64) -> Self {
        if is_heisenberg(spec) {
            OuterConstants::heisenberg(c0)
        } else {
            OuterConstants::general(spec, c0)
        }
    }
}

fn outer_slack(g: &GroupPoint, k: f64, epsilon: f64, c: &OuterConstants) -> f64 {
    let r = g.x_norm();
    let l1: f64 = g.x.iter().map(|v| v.abs()).sum();
    g.z_norm() - (r * r - c.c1 * epsilon * l1 + k - c.c2 * epsilon * epsilon)
}

/// `|z| > |x|² - C1 ε ‖x‖₁ + K - C2 ε²`.
pub fn outer_inclusion_check(sample: &GroupPoint, k: f64, epsilon: f64, c1: f64, c2: f64) -> bool {
    outer_slack(sample, k, epsilon, &OuterConstants { c1, c2 }) > 0.0
}

/// Result of looking for a neighbour of a sample inside `A_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerCheck {
    /// The sample lies in `A_K` itself.
    Inside,
    /// The explicit candidate is in `A_K` and closer than ε.
    Found { candidate: GroupPoint, distance: f64 },
    /// The candidate misses `A_K` or is not within ε.
    Failed {
        candidate: GroupPoint,
        distance: f64,
        margin: f64,
    },
    /// `z + δ₃ ≤ 0`, so the construction does not apply.
    PreconditionFailed,
    /// The sample is not in `{x² + y² ≤ 1} ∩ {|z| > x² + y² - C3 ε(|x| + |y|) + K}`.
    OutsideRegion,
}

impl InnerCheck {
    /// The sample is certified to lie in `A_{K,ε}`.
    pub fn holds(&self) -> bool {
        matches!(self, InnerCheck::Inside | InnerCheck::Found { .. })
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn is_heisenberg(spec: &GroupSpec) -> bool {
    spec.n() == 2 && spec.m() == 1 && spec.matrices()[0] == [0.0, -4.0, 4.0, 0.0]
}

/// Heisenberg only: certify `sample ∈ A_{K,ε}` for a sample of the inner
/// region by the explicit displacement
/// `δ₁ = -sgn(x) C0 χ₁ ε`, `δ₂ = -sgn(y) C0 χ₂ ε`, `δ₃ = C0 ε² - 2(δ₂x - δ₁y)`
/// with `{χ₁, χ₂} = {√C0/4, √C0/2}`, the larger one on the axis that gains.
pub fn inner_inclusion_check(
    spec: &GroupSpec,
    sample: &GroupPoint,
    k: f64,
    epsilon: f64,
    c0: f64,
    c3: f64,
) -> Result<InnerCheck> {
    if !is_heisenberg(spec) {
        return Err(Error::UnsupportedGroup(
            "the inner inclusion is only constructed on the Heisenberg group".into(),
        ));
    }
    sample.check(spec)?;
    let (x, y) = (sample.x[0], sample.x[1]);
    if x * x + y * y > 1.0 || sample.z[0].abs() <= x * x + y * y - c3 * epsilon * (x.abs() + y.abs()) + k {
        return Ok(InnerCheck::OutsideRegion);
    }
    if in_half_space(sample, k) {
        return Ok(InnerCheck::Inside);
    }
    // (x, y, z) ↦ (x, -y, -z) is an automorphism preserving A_K and the region
    let flip = sample.z[0] < 0.0;
    let (y, z) = if flip { (-y, -sample.z[0]) } else { (y, sample.z[0]) };
    let chi = c0.sqrt() / 2.0;
    let (chi1, chi2) = if sgn(x) * sgn(y) >= 0.0 {
        (chi / 2.0, chi)
    } else {
        (chi, chi / 2.0)
    };
    let d1 = -sgn(x) * c0 * chi1 * epsilon;
    let d2 = -sgn(y) * c0 * chi2 * epsilon;
    let d3 = c0 * epsilon * epsilon - 2.0 * (d2 * x - d1 * y);
    if z + d3 <= 0.0 {
        return Ok(InnerCheck::PreconditionFailed);
    }
    let (u, v, w) = (x + d1, y + d2, z + d3);
    let candidate = if flip {
        GroupPoint::new(vec![u, -v], vec![-w])
    } else {
        GroupPoint::new(vec![u, v], vec![w])
    };
    let distance = multiply_unchecked(spec, &candidate, &sample.inverse()).kaplan_norm();
    let margin = (half_space_slack(&candidate, k) / (epsilon * epsilon)).min(1.0 - distance / epsilon);
    if margin > 0.0 {
        Ok(InnerCheck::Found { candidate, distance })
    } else {
        Ok(InnerCheck::Failed {
            candidate,
            distance,
            margin,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Outer,
    Inner,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    pub epsilon: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// Radius of the ball the horizontal part of anchors is drawn from.
    pub x_radius: f64,
    /// Anchors sit at height `|z| = |x|² + K + η` with `η ≤ z_slack · ε²`.
    pub z_slack: f64,
    /// Overrides of the outer constants; `None` uses the proof's values.
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    /// Override of the inner constant; `None` uses `C0^{3/2}/4`.
    #[serde(rename = "C3")]
    pub c3: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 0,
            samples: 1_000_000,
            epsilon: 0.05,
            c0: 1.0,
            k: 10.0,
            x_radius: 2.0,
            z_slack: 1.0,
            c1: None,
            c2: None,
            c3: None,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("C0", self.c0),
            ("K", self.k),
            ("x_radius", self.x_radius),
            ("z_slack", self.z_slack),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        for (name, v) in [("C1", self.c1), ("C2", self.c2), ("C3", self.c3)] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "{name} must be finite and >= 0, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn c3_or_default(&self) -> f64 {
        self.c3.unwrap_or(self.c0.powf(1.5) / 4.0)
    }

    pub fn outer_constants(&self, spec: &GroupSpec) -> OuterConstants {
        let base = OuterConstants::for_spec(spec, self.c0);
        OuterConstants {
            c1: self.c1.unwrap_or(base.c1),
            c2: self.c2.unwrap_or(base.c2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub sample_index: u64,
    /// The tested point.
    pub sample: GroupPoint,
    /// Its anchor in `A_K` (outer), constructed neighbour (inner) or the
    /// second point of the pair (delta).
    pub partner: GroupPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub which: Which,
    pub checked: u64,
    pub violations: u64,
    /// Samples where the construction of the inner check does not apply.
    pub precondition_failures: u64,
    /// Smallest slack over all checked samples; `None` when nothing was checked.
    pub worst_margin: Option<f64>,
    pub witness: Option<Witness>,
}

impl ViolationReport {
    fn empty(which: Which) -> Self {
        ViolationReport {
            which,
            checked: 0,
            violations: 0,
            precondition_failures: 0,
            worst_margin: None,
            witness: None,
        }
    }

    fn merge(mut self, other: ViolationReport) -> Self {
        self.checked += other.checked;
        self.violations += other.violations;
        self.precondition_failures += other.precondition_failures;
        self.worst_margin = match (self.worst_margin, other.worst_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.witness = match (self.witness.take(), other.witness) {
            (Some(a), Some(b)) => Some(if b.sample_index < a.sample_index { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }

    fn record(&mut self, index: u64, margin: f64, sample: impl FnOnce() -> (GroupPoint, GroupPoint)) {
        self.checked += 1;
        self.worst_margin = Some(self.worst_margin.map_or(margin, |w| w.min(margin)));
        if !(margin > 0.0) {
            self.violations += 1;
            if self.witness.is_none() {
                let (sample, partner) = sample();
                self.witness = Some(Witness {
                    sample_index: index,
                    sample,
                    partner,
                });
            }
        }
    }
}

const CHUNK: u64 = 4096;

/// Independent stream per sample, so results do not depend on the partition
/// of the index range among workers.
fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = euclid(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let rho = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    unit_vector(rng, dim).into_iter().map(|a| rho * a).collect()
}

/// `u ∈ (0, 1]`.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// A point of `A_K` whose height exceeds the boundary by at most `z_slack ε²`.
fn anchor(spec: &GroupSpec, mc: &McConfig, rng: &mut ChaCha8Rng) -> GroupPoint {
    let xi = in_ball(rng, spec.n(), mc.x_radius);
    let eta = mc.z_slack * mc.epsilon * mc.epsilon * open_unit(rng);
    let height = euclid(&xi).powi(2) + mc.k + eta;
    let zeta = unit_vector(rng, spec.m()).into_iter().map(|a| height * a).collect();
    GroupPoint::new(xi, zeta)
}

/// A translation of Kaplan norm at most ε, biased towards the boundary of
/// the ball by the homogeneous dimension `n + 2m`.
fn translation(spec: &GroupSpec, mc: &McConfig, rng: &mut ChaCha8Rng) -> GroupPoint {
    let tau: f64 = rng.random();
    let q = GroupPoint::new(
        unit_vector(rng, spec.n())
            .into_iter()
            .map(|a| tau.powf(0.25) * a)
            .collect(),
        unit_vector(rng, spec.m())
            .into_iter()
            .map(|a| (1.0 - tau).sqrt() * a)
            .collect(),
    );
    let homogeneous_dim = (spec.n() + 2 * spec.m()) as f64;
    q.dilate(mc.epsilon * open_unit(rng).powf(1.0 / homogeneous_dim))
}

fn run_one(spec: &GroupSpec, mc: &McConfig, which: Which, index: u64, report: &mut ViolationReport) {
    let mut rng = sample_rng(mc.seed, index);
    match which {
        Which::Outer => {
            let a = anchor(spec, mc, &mut rng);
            let q = translation(spec, mc, &mut rng);
            let g = multiply_unchecked(spec, &q, &a);
            let margin = outer_slack(&g, mc.k, mc.epsilon, &mc.outer_constants(spec)) / (mc.epsilon * mc.epsilon);
            report.record(index, margin, || (g.clone(), a.clone()));
        }
        Which::Delta => {
            let h = anchor(spec, mc, &mut rng);
            let q = translation(spec, mc, &mut rng);
            // g ∘ h⁻¹ = q for g = q ∘ h
            let g = multiply_unchecked(spec, &q, &h);
            let margin = delta_slack(spec, &g, &h, mc.epsilon, mc.c0);
            report.record(index, margin, || (g.clone(), h.clone()));
        }
        Which::Inner => {
            let c3 = mc.c3_or_default();
            let xy = in_ball(&mut rng, 2, 1.0);
            let rhs = xy[0] * xy[0] + xy[1] * xy[1] - c3 * mc.epsilon * (xy[0].abs() + xy[1].abs()) + mc.k;
            let eta = mc.z_slack * mc.epsilon * mc.epsilon * open_unit(&mut rng);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let sample = GroupPoint::new(xy, vec![sign * (rhs.max(0.0) + eta)]);
            match inner_inclusion_check(spec, &sample, mc.k, mc.epsilon, mc.c0, c3).expect("validated Heisenberg spec")
            {
                InnerCheck::Inside => report.record(index, f64::INFINITY, || unreachable!()),
                InnerCheck::Found { candidate, distance } => {
                    let margin = (half_space_slack(&candidate, mc.k) / (mc.epsilon * mc.epsilon))
                        .min(1.0 - distance / mc.epsilon);
                    report.record(index, margin, || unreachable!())
                }
                InnerCheck::Failed { candidate, margin, .. } => report.record(index, margin, || (sample, candidate)),
                InnerCheck::PreconditionFailed => {
                    report.checked += 1;
                    report.precondition_failures += 1;
                }
                InnerCheck::OutsideRegion => unreachable!("samples are drawn inside the region"),
            }
        }
    }
}

/// Deterministic in `mc.seed` and independent of the number of threads.
pub fn mc_inclusion_experiment(spec: &GroupSpec, mc: &McConfig, which: Which) -> Result<ViolationReport> {
    mc.validate()?;
    if which == Which::Inner && !is_heisenberg(spec) {
        return Err(Error::UnsupportedGroup(
            "the inner inclusion is only constructed on the Heisenberg group".into(),
        ));
    }
    let chunks = mc.samples.div_ceil(CHUNK);
    let partial: Vec<ViolationReport> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut report = ViolationReport::empty(which);
            for index in c * CHUNK..((c + 1) * CHUNK).min(mc.samples) {
                run_one(spec, mc, which, index, &mut report);
            }
            report
        })
        .collect();
    Ok(partial
        .into_iter()
        .fold(ViolationReport::empty(which), ViolationReport::merge))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h1() -> GroupSpec {
        GroupSpec::heisenberg(4.0).unwrap()
    }

    fn pt(x: f64, y: f64, z: f64) -> GroupPoint {
        GroupPoint::new(vec![x, y], vec![z])
    }

    fn quick(which: Which) -> McConfig {
        McConfig {
            seed: 7,
            samples: 20_000,
            ..Default::default()
        }
        .with_which_defaults(which)
    }

    impl McConfig {
        fn with_which_defaults(mut self, which: Which) -> Self {
            if which == Which::Inner {
                self.c0 = 0.9;
            }
            self
        }
    }

    #[test]
    fn heisenberg_law_example() {
        let g = group_multiply(&h1(), &pt(1.0, 0.0, 0.0), &pt(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(g, pt(1.0, 1.0, 2.0));
    }

    #[test]
    fn dimension_mismatch() {
        let bad = GroupPoint::new(vec![1.0], vec![0.0]);
        assert!(matches!(
            group_multiply(&h1(), &bad, &pt(0.0, 0.0, 0.0)),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn delta_examples() {
        let g = pt(0.3, -0.2, 11.0);
        assert!(delta_conditions_check(&h1(), &g, &g, 0.1, 1e-3).unwrap());
        let moved = pt(0.3 + 0.2, -0.2, 11.0);
        assert!(!delta_conditions_check(&h1(), &moved, &g, 0.1, 1.0).unwrap());
    }

    #[test]
    fn outer_with_zero_epsilon_is_membership() {
        let g = pt(0.5, 0.5, 10.6);
        assert!(in_half_space(&g, 10.0));
        assert!(outer_inclusion_check(&g, 10.0, 0.0, 3.0, 7.0));
    }

    #[test]
    fn inner_examples() {
        let deep = pt(0.2, 0.1, 100.0);
        assert_eq!(
            inner_inclusion_check(&h1(), &deep, 20.0, 0.05, 0.9, 0.2).unwrap(),
            InnerCheck::Inside
        );
        let shell = pt(0.4, -0.3, 0.25 - 0.2 * 0.05 * 0.7 + 20.0 + 1e-9);
        let res = inner_inclusion_check(&h1(), &shell, 20.0, 0.05, 0.9, 0.9f64.powf(1.5) / 4.0).unwrap();
        assert!(res.holds(), "{res:?}");
        let g = GroupSpec::with_standard_basis(3, 1, 4.0).unwrap();
        assert!(inner_inclusion_check(&g, &GroupPoint::new(vec![0.0; 3], vec![30.0]), 20.0, 0.05, 0.9, 0.2).is_err());
    }

    #[test]
    fn candidate_distance_formula() {
        // the displacement has Kaplan norm ε (25 C0⁶/256 + C0²)^{1/4}
        let c0: f64 = 0.9;
        let eps = 0.05;
        let s = pt(0.4, 0.3, 20.0 + 0.25 - 1e-3);
        let InnerCheck::Found { distance, .. } =
            inner_inclusion_check(&h1(), &s, 20.0, eps, c0, c0.powf(1.5) / 4.0).unwrap()
        else {
            panic!()
        };
        let expect = eps * (25.0 * c0.powi(6) / 256.0 + c0 * c0).powf(0.25);
        assert!((distance - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_samples() {
        let r = mc_inclusion_experiment(
            &h1(),
            &McConfig {
                samples: 0,
                ..Default::default()
            },
            Which::Outer,
        )
        .unwrap();
        assert_eq!((r.checked, r.violations, r.witness.is_none()), (0, 0, true));
    }

    #[test]
    fn reports_are_reproducible_and_thread_independent() {
        let mc = quick(Which::Outer);
        let a = mc_inclusion_experiment(&h1(), &mc, Which::Outer).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mc_inclusion_experiment(&h1(), &mc, Which::Outer).unwrap());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn outer_clean_at_proof_constants() {
        for eps in [0.1, 0.05, 0.01] {
            let mc = McConfig {
                epsilon: eps,
                ..quick(Which::Outer)
            };
            let r = mc_inclusion_experiment(&h1(), &mc, Which::Outer).unwrap();
            assert_eq!(r.violations, 0, "{r:?}");
        }
    }

    #[test]
    fn outer_without_first_order_term_fails() {
        let mc = McConfig {
            c1: Some(0.0),
            ..quick(Which::Outer)
        };
        let r = mc_inclusion_experiment(&h1(), &mc, Which::Outer).unwrap();
        assert!(r.violations > 0 && r.witness.is_some());
        let w = r.witness.unwrap();
        assert!(!outer_inclusion_check(&w.sample, mc.k, mc.epsilon, 0.0, mc.c0));
        assert!(kaplan_quasi_distance(&h1(), &w.sample, &w.partner).unwrap() <= mc.epsilon * (1.0 + 1e-12));
    }

    #[test]
    fn outer_clean_on_a_larger_group() {
        let g = GroupSpec::with_standard_basis(4, 3, 4.0).unwrap();
        let r = mc_inclusion_experiment(&g, &quick(Which::Outer), Which::Outer).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
    }

    #[test]
    fn inner_and_delta_clean() {
        let r = mc_inclusion_experiment(&h1(), &quick(Which::Inner), Which::Inner).unwrap();
        assert_eq!((r.violations, r.precondition_failures), (0, 0), "{r:?}");
        let r = mc_inclusion_experiment(&h1(), &quick(Which::Delta), Which::Delta).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
    }

    #[test]
    fn inner_needs_small_c0_for_the_kaplan_surrogate() {
        let mc = McConfig {
            c0: 1.0,
            ..quick(Which::Outer)
        };
        let r = mc_inclusion_experiment(&h1(), &mc, Which::Inner).unwrap();
        assert!(r.violations > 0);
    }

    fn arb_point() -> impl Strategy<Value = GroupPoint> {
        (-5.0f64..5.0, -5.0f64..5.0, -20.0f64..20.0).prop_map(|(x, y, z)| pt(x, y, z))
    }

    fn arb_general() -> impl Strategy<Value = (GroupPoint, GroupPoint, GroupPoint)> {
        let p = || {
            (
                proptest::collection::vec(-3.0f64..3.0, 4),
                proptest::collection::vec(-9.0f64..9.0, 3),
            )
                .prop_map(|(x, z)| GroupPoint::new(x, z))
        };
        (p(), p(), p())
    }

    proptest! {
        #[test]
        fn identity_and_inverse(g in arb_point()) {
            let spec = h1();
            prop_assert_eq!(group_multiply(&spec, &g, &GroupPoint::identity(&spec)).unwrap(), g.clone());
            let e = group_multiply(&spec, &g, &g.inverse()).unwrap();
            prop_assert!(e.x.iter().chain(&e.z).all(|v| v.abs() < 1e-12));
        }

        #[test]
        fn associativity((a, b, c) in arb_general()) {
            let spec = GroupSpec::with_standard_basis(4, 3, 4.0).unwrap();
            let l = group_multiply(&spec, &group_multiply(&spec, &a, &b).unwrap(), &c).unwrap();
            let r = group_multiply(&spec, &a, &group_multiply(&spec, &b, &c).unwrap()).unwrap();
            for (u, v) in l.x.iter().chain(&l.z).zip(r.x.iter().chain(&r.z)) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }

        #[test]
        fn skew_audit(x in proptest::collection::vec(-10.0f64..10.0, 4)) {
            let spec = GroupSpec::with_standard_basis(4, 3, 4.0).unwrap();
            for j in 0..3 {
                prop_assert!(spec.bilinear(j, &x, &x).abs() < 1e-12);
            }
            let h = h1();
            prop_assert!(h.bilinear(0, &x[..2], &x[..2]).abs() < 1e-12);
        }

        #[test]
        fn bilinear_bound(x in proptest::collection::vec(-10.0f64..10.0, 4), d in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let spec = GroupSpec::with_standard_basis(4, 3, 4.0).unwrap();
            for j in 0..3 {
                let lhs = spec.bilinear(j, &x, &d).abs();
                prop_assert!(lhs <= spec.operator_norm(j) * euclid(&d) * euclid(&x) * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn distance_properties(g in arb_point(), h in arb_point(), lambda in 0.01f64..10.0) {
            let spec = h1();
            prop_assert_eq!(kaplan_quasi_distance(&spec, &g, &g).unwrap(), 0.0);
            let d = kaplan_quasi_distance(&spec, &g, &h).unwrap();
            let dl = kaplan_quasi_distance(&spec, &g.dilate(lambda), &h.dilate(lambda)).unwrap();
            prop_assert!((dl - lambda * d).abs() <= 1e-10 * (lambda * d).max(1.0));
            // explicit Heisenberg form
            let (u, v, w) = (g.x[0], g.x[1], g.z[0]);
            let (x, y, z) = (h.x[0], h.x[1], h.z[0]);
            let explicit = (((u - x).powi(2) + (v - y).powi(2)).powi(2) + (w - z + 2.0 * (v * x - u * y)).powi(2)).powf(0.25);
            prop_assert!((d - explicit).abs() <= 1e-12 * explicit.max(1.0));
        }

        #[test]
        fn kaplan_neighbours_satisfy_delta_conditions(g in arb_point(), h in arb_point(), eps in 0.005f64..0.2) {
            let spec = h1();
            let d = kaplan_quasi_distance(&spec, &g, &h).unwrap();
            // rescale the displacement so that the pair is within ε
            let q = group_multiply(&spec, &h, &g.inverse()).unwrap().dilate(eps / d.max(1e-300));
            let h2 = group_multiply(&spec, &q, &g).unwrap();
            prop_assert!(delta_conditions_check(&spec, &h2, &g, eps * (1.0 + 1e-9), 1.0).unwrap());
        }
    }
}
