//! Polar angles, caps, grids and the chordal distance algebra.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::{Error, Result};

/// Nodes of generic pipelines stay at least this far (radians) from a cap rim.
pub const RIM_GUARD: f64 = 1e-6;

/// A polar angle in `[0, π]`, radians.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct PolarAngle(f64);

impl PolarAngle {
    pub const ZERO: PolarAngle = PolarAngle(0.0);
    pub const PI: PolarAngle = PolarAngle(PI);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=PI).contains(&value) {
            Ok(PolarAngle(value))
        } else {
            Err(Error::domain(
                "PolarAngle::new",
                format!("{value} is not a polar angle in [0, π] (radians)"),
            ))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `π − φ`, the mirror image under `x₃ ↦ −x₃`.
    #[inline]
    pub fn reflected(self) -> PolarAngle {
        PolarAngle(PI - self.0)
    }
}

impl From<PolarAngle> for f64 {
    fn from(a: PolarAngle) -> f64 {
        a.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// `{φ ≤ α}`
    NorthCentered,
    /// `{φ ≥ α}`
    SouthCentered,
}

/// A spherical cap: `{φ ≤ α}` when north-centered, `{φ ≥ α}` when south-centered.
///
/// A south cap with `α = 0` is the whole sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphericalCap {
    orientation: Orientation,
    alpha: PolarAngle,
}

impl SphericalCap {
    pub fn new(orientation: Orientation, alpha: f64) -> Result<Self> {
        let a = PolarAngle::new(alpha)?;
        let ok = match orientation {
            Orientation::NorthCentered => alpha > 0.0,
            Orientation::SouthCentered => alpha < PI,
        };
        if !ok {
            return Err(Error::domain(
                "SphericalCap::new",
                format!("α = {alpha} gives an empty {orientation:?} cap"),
            ));
        }
        Ok(SphericalCap {
            orientation,
            alpha: a,
        })
    }

    pub fn south(alpha: f64) -> Result<Self> {
        Self::new(Orientation::SouthCentered, alpha)
    }

    pub fn north(alpha: f64) -> Result<Self> {
        Self::new(Orientation::NorthCentered, alpha)
    }

    pub fn full_sphere() -> Self {
        SphericalCap {
            orientation: Orientation::SouthCentered,
            alpha: PolarAngle::ZERO,
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.0
    }

    pub fn is_full_sphere(&self) -> bool {
        match self.orientation {
            Orientation::SouthCentered => self.alpha.0 == 0.0,
            Orientation::NorthCentered => self.alpha.0 == PI,
        }
    }

    /// Angular interval `(lo, hi)` covered by the cap.
    pub fn interval(&self) -> (f64, f64) {
        match self.orientation {
            Orientation::NorthCentered => (0.0, self.alpha.0),
            Orientation::SouthCentered => (self.alpha.0, PI),
        }
    }

    pub fn contains(&self, phi: f64) -> bool {
        let (lo, hi) = self.interval();
        (lo..=hi).contains(&phi)
    }

    /// Polar angle of the point of the cap farthest from the rim.
    pub fn pole(&self) -> f64 {
        match self.orientation {
            Orientation::NorthCentered => 0.0,
            Orientation::SouthCentered => PI,
        }
    }

    /// Angular distance from the rim, `|φ − α|`; infinite when there is no rim.
    pub fn rim_distance(&self, phi: f64) -> f64 {
        if self.is_full_sphere() {
            f64::INFINITY
        } else {
            (phi - self.alpha.0).abs()
        }
    }

    /// `|cos α − cos φ|` evaluated without cancellation.
    pub fn depth(&self, phi: f64) -> f64 {
        let a = self.alpha.0;
        (2.0 * ((phi + a) / 2.0).sin() * ((phi - a) / 2.0).sin()).abs()
    }

    /// The mirror cap under `φ ↦ π − φ` (north `α` ↔ south `π − α`).
    pub fn reflected(&self) -> SphericalCap {
        SphericalCap {
            orientation: match self.orientation {
                Orientation::NorthCentered => Orientation::SouthCentered,
                Orientation::SouthCentered => Orientation::NorthCentered,
            },
            alpha: self.alpha.reflected(),
        }
    }

    /// Closure of the complement, or `None` for the full sphere.
    pub fn complement(&self) -> Option<SphericalCap> {
        if self.is_full_sphere() {
            return None;
        }
        Some(SphericalCap {
            orientation: match self.orientation {
                Orientation::NorthCentered => Orientation::SouthCentered,
                Orientation::SouthCentered => Orientation::NorthCentered,
            },
            alpha: self.alpha,
        })
    }
}

/// `γ = cos φ₁ cos φ₂ + sin φ₁ sin φ₂ cos(θ₁ − θ₂)`; the squared chordal
/// distance between the two points is `2 − 2γ`.
pub fn chordal_gamma(phi1: PolarAngle, theta1: f64, phi2: PolarAngle, theta2: f64) -> f64 {
    let (p1, p2) = (phi1.0, phi2.0);
    // cos(φ₁−φ₂) − sin φ₁ sin φ₂ (1 − cos Δθ), with 1 − cos Δθ = 2 sin²(Δθ/2)
    let half = ((theta1 - theta2) / 2.0).sin();
    let g = (p1 - p2).cos() - 2.0 * p1.sin() * p2.sin() * half * half;
    g.clamp(-1.0, 1.0)
}

/// Surface area of the cap.
pub fn cap_area(cap: &SphericalCap) -> f64 {
    let a = cap.alpha();
    match cap.orientation() {
        Orientation::SouthCentered => 2.0 * PI * (1.0 + a.cos()),
        Orientation::NorthCentered => 2.0 * PI * (1.0 - a.cos()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Spacing {
    Uniform,
    /// `φ = lo + (hi − lo) sin²(πu/2)`: nodes crowd both ends of the interval.
    #[default]
    BoundaryClustered,
}

impl Spacing {
    fn map(self, lo: f64, hi: f64, u: f64) -> f64 {
        match self {
            Spacing::Uniform => lo + (hi - lo) * u,
            Spacing::BoundaryClustered => {
                let s = (FRAC_PI_2 * u).sin();
                lo + (hi - lo) * s * s
            }
        }
    }
}

/// Strictly increasing polar-angle nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiGrid {
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl PhiGrid {
    /// `n` nodes strictly inside `(lo, hi)`, at `u = (j+1)/(n+1)`.
    pub fn open(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Result<Self> {
        check_interval("PhiGrid::open", lo, hi, n, 1)?;
        let nodes = (0..n)
            .map(|j| spacing.map(lo, hi, (j + 1) as f64 / (n + 1) as f64))
            .collect();
        Self::from_nodes_with(nodes, spacing)
    }

    /// `n ≥ 2` nodes including both endpoints, at `u = j/(n−1)`.
    pub fn closed(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Result<Self> {
        check_interval("PhiGrid::closed", lo, hi, n, 2)?;
        let nodes = (0..n)
            .map(|j| {
                if j == n - 1 {
                    hi
                } else {
                    spacing.map(lo, hi, j as f64 / (n - 1) as f64)
                }
            })
            .collect();
        Self::from_nodes_with(nodes, spacing)
    }

    /// `n` nodes inside the cap: the rim is excluded together with a guard
    /// band of [`RIM_GUARD`], the pole is included.
    pub fn for_cap(cap: &SphericalCap, n: usize, spacing: Spacing) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("PhiGrid::for_cap", "need at least one node"));
        }
        let rim = cap.alpha();
        let pole = cap.pole();
        let guard = if cap.is_full_sphere() { 0.0 } else { RIM_GUARD };
        let nodes: Vec<f64> = (1..=n)
            .map(|j| {
                let u = j as f64 / n as f64;
                let w = match spacing {
                    Spacing::Uniform => u,
                    Spacing::BoundaryClustered => {
                        let s = (FRAC_PI_2 * u).sin();
                        s * s
                    }
                };
                if j == n {
                    pole
                } else {
                    let phi = rim + (pole - rim) * w;
                    if (phi - rim).abs() < guard {
                        rim + guard * (pole - rim).signum()
                    } else {
                        phi
                    }
                }
            })
            .collect();
        let mut nodes = nodes;
        if pole < rim {
            nodes.reverse();
        }
        nodes.dedup();
        Self::from_nodes_with(nodes, spacing)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        Self::from_nodes_with(nodes, Spacing::Uniform)
    }

    fn from_nodes_with(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::domain("PhiGrid", "empty grid"));
        }
        for &x in &nodes {
            PolarAngle::new(x)?;
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "PhiGrid",
                "nodes must be strictly increasing",
            ));
        }
        Ok(PhiGrid { nodes, spacing })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `π − φ` for every node, re-sorted.
    pub fn reflected(&self) -> PhiGrid {
        PhiGrid {
            nodes: self.nodes.iter().rev().map(|&x| PI - x).collect(),
            spacing: self.spacing,
        }
    }

    pub fn within(&self, cap: &SphericalCap) -> bool {
        self.nodes.iter().all(|&x| cap.contains(x))
    }
}

fn check_interval(op: &'static str, lo: f64, hi: f64, n: usize, min: usize) -> Result<()> {
    PolarAngle::new(lo)?;
    PolarAngle::new(hi)?;
    if lo >= hi {
        return Err(Error::domain(op, format!("empty interval [{lo}, {hi}]")));
    }
    if n < min {
        return Err(Error::domain(
            op,
            format!("need at least {min} nodes, got {n}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pa(x: f64) -> PolarAngle {
        PolarAngle::new(x).unwrap()
    }

    fn cartesian(phi: f64, theta: f64) -> [f64; 3] {
        [phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()]
    }

    #[test]
    fn gamma_special_points() {
        assert_eq!(chordal_gamma(pa(0.0), 0.0, pa(0.0), 1.3), 1.0);
        let g = chordal_gamma(pa(0.0), 0.0, pa(PI), 0.0);
        assert_eq!(g, -1.0);
        assert_eq!(2.0 - 2.0 * g, 4.0);
        let g = chordal_gamma(pa(FRAC_PI_2), 0.0, pa(FRAC_PI_2), FRAC_PI_2);
        assert_abs_diff_eq!(g, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((2.0 - 2.0 * g).sqrt(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn cap_areas() {
        assert_abs_diff_eq!(cap_area(&SphericalCap::south(0.0).unwrap()), 4.0 * PI);
        assert_abs_diff_eq!(
            cap_area(&SphericalCap::south(FRAC_PI_2).unwrap()),
            2.0 * PI,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            cap_area(&SphericalCap::north(FRAC_PI_2).unwrap()),
            2.0 * PI,
            epsilon = 1e-14
        );
    }

    #[test]
    fn cap_bounds() {
        assert!(SphericalCap::north(0.0).is_err());
        assert!(SphericalCap::north(PI).is_ok());
        assert!(SphericalCap::south(PI).is_err());
        assert!(SphericalCap::south(-0.1).is_err());
        assert!(SphericalCap::south(0.0).unwrap().is_full_sphere());
        assert!(PolarAngle::new(f64::NAN).is_err());
        assert!(PolarAngle::new(180.0).is_err());
    }

    #[test]
    fn cap_grid_respects_guard_band() {
        for cap in [
            SphericalCap::south(1.0).unwrap(),
            SphericalCap::north(2.0).unwrap(),
        ] {
            let g = PhiGrid::for_cap(&cap, 64, Spacing::BoundaryClustered).unwrap();
            assert_eq!(g.len(), 64);
            assert!(g.within(&cap));
            assert!(g.nodes().iter().all(|&x| cap.rim_distance(x) >= RIM_GUARD));
            assert!(g.nodes().contains(&cap.pole()));
        }
        let g = PhiGrid::for_cap(&SphericalCap::full_sphere(), 8, Spacing::Uniform).unwrap();
        assert_eq!(*g.nodes().last().unwrap(), PI);
    }

    #[test]
    fn grids_are_ordered() {
        let g = PhiGrid::closed(0.3, 2.0, 5, Spacing::BoundaryClustered).unwrap();
        assert_eq!(g.nodes()[0], 0.3);
        assert_eq!(g.nodes()[4], 2.0);
        assert!(PhiGrid::from_nodes(vec![0.1, 0.1]).is_err());
        let r = g.reflected();
        assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn depth_is_cancellation_free() {
        let cap = SphericalCap::south(1.0).unwrap();
        let phi = 1.0 + 1e-12;
        let d = cap.depth(phi);
        assert!((d / (1.0f64.sin() * (phi - 1.0)) - 1.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn gamma_matches_cartesian(p1 in 0.0..PI, t1 in -7.0..7.0f64, p2 in 0.0..PI, t2 in -7.0..7.0f64) {
            let g = chordal_gamma(pa(p1), t1, pa(p2), t2);
            let (x, y) = (cartesian(p1, t1), cartesian(p2, t2));
            let d2: f64 = (0..3).map(|i| (x[i] - y[i]).powi(2)).sum();
            prop_assert!((2.0 - 2.0 * g - d2).abs() <= 1e-14);
            prop_assert!((-1.0..=1.0).contains(&g));
        }

        #[test]
        fn gamma_symmetric_and_shift_invariant(p1 in 0.0..PI, t1 in -7.0..7.0f64, p2 in 0.0..PI, t2 in -7.0..7.0f64, s in -10.0..10.0f64) {
            let g = chordal_gamma(pa(p1), t1, pa(p2), t2);
            prop_assert_eq!(g, chordal_gamma(pa(p2), t2, pa(p1), t1));
            prop_assert!((g - chordal_gamma(pa(p1), t1 + s, pa(p2), t2 + s)).abs() <= 1e-14);
        }
    }
}
