//! Newtonian potential of a cap density and the Gauss variational
//! inequalities `U + Q = F_Q` on the support, `U + Q ≥ F_Q` off it.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::equilibrium::DensityProfile;
use crate::fields::ExternalField;
use crate::geometry::{PhiGrid, PolarAngle, Spacing, SphericalCap};
use crate::par::{self, Execution};
use crate::quadrature::{graded_panels, GaussLegendre};
use crate::{Error, Result};

/// Arithmetic–geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let m = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = m;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind `K(k)` (modulus `k`).
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::domain(
            "elliptic_k",
            format!("modulus must lie in [0, 1), got {k}"),
        ));
    }
    Ok(PI / (2.0 * agm(1.0, ((1.0 - k) * (1.0 + k)).sqrt())))
}

/// Ring kernel `M(φ, ξ) = ∫₀^{2π} dη / √(2 − 2γ)`: the potential at polar
/// angle `φ` of a unit line density spread over the circle at `ξ`.
///
/// With `a = 2 sin(φ/2) cos(ξ/2)`, `b = 2 sin(ξ/2) cos(φ/2)` this is
/// `(4/max) K(min/max) = 2π / AGM(max, √(max² − min²))`, where
/// `max² − min² = 4 |sin((φ−ξ)/2) sin((φ+ξ)/2)|`.
pub fn ring_kernel(phi: f64, xi: f64) -> Result<f64> {
    let phi = PolarAngle::new(phi)?.value();
    let xi = PolarAngle::new(xi)?.value();
    if phi == xi {
        return Err(Error::domain(
            "ring_kernel",
            format!("kernel is singular on the diagonal φ = ξ = {phi}"),
        ));
    }
    Ok(ring_kernel_unchecked(phi, xi))
}

#[inline]
pub(crate) fn ring_kernel_unchecked(phi: f64, xi: f64) -> f64 {
    ring_kernel_offset(phi, xi, xi - phi)
}

/// Ring kernel with `delta = ξ − φ` supplied by the caller, who can often
/// form it without the cancellation of subtracting nearby angles.
#[inline]
pub(crate) fn ring_kernel_offset(phi: f64, xi: f64, delta: f64) -> f64 {
    let a = 2.0 * (phi / 2.0).sin() * (xi / 2.0).cos();
    let b = 2.0 * (xi / 2.0).sin() * (phi / 2.0).cos();
    let mx = a.max(b);
    let diff = 4.0 * ((delta / 2.0).sin() * ((phi + xi) / 2.0).sin()).abs();
    2.0 * PI / agm(mx, diff.sqrt())
}

/// Quadrature settings for [`potential_on_sphere_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialConfig {
    pub points: usize,
    /// Halvings toward the diagonal on each side.
    pub levels: u32,
    /// Upper bound on panel width in the clustering variable `u`.
    pub max_panel: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            points: 16,
            levels: 28,
            max_panel: 0.125,
        }
    }
}

/// `U(φ) = ∫ f(ξ) sin ξ M(φ, ξ) dξ` over the cap of `profile`.
pub fn potential_on_sphere(profile: &DensityProfile, phi: f64) -> Result<f64> {
    potential_on_sphere_with(profile, phi, &PotentialConfig::default())
}

/// The cap is parametrized by `ξ = α + (pole − α) sin²(πu/2)`, which absorbs
/// the `(cos α − cos ξ)^{−1/2}` rim factor; the `u`-interval is graded toward
/// the log-singular diagonal (or toward the rim when `φ` is off the cap).
pub fn potential_on_sphere_with(
    profile: &DensityProfile,
    phi: f64,
    cfg: &PotentialConfig,
) -> Result<f64> {
    let phi = PolarAngle::new(phi)?.value();
    let cap = profile.cap();
    let rim = cap.alpha();
    let span = cap.pole() - rim;
    let c = if cap.contains(phi) {
        2.0 / PI * ((phi - rim) / span).clamp(0.0, 1.0).sqrt().asin()
    } else {
        0.0
    };
    let mut panels = Vec::new();
    for (lo, hi) in graded_panels(0.0, 1.0, c, cfg.levels) {
        let k = ((hi - lo) / cfg.max_panel).ceil().max(1.0) as usize;
        let w = (hi - lo) / k as f64;
        panels.extend((0..k).map(|j| {
            (
                lo + w * j as f64,
                if j + 1 == k {
                    hi
                } else {
                    lo + w * (j + 1) as f64
                },
            )
        }));
    }
    let rule = GaussLegendre::cached(cfg.points);
    rule.integrate_panels(&panels, |u| {
        let (s, co) = (FRAC_PI_2 * u).sin_cos();
        let delta = span * s * s;
        let xi = rim + delta;
        if xi == phi {
            return Ok(0.0);
        }
        let depth = (2.0 * (rim + delta / 2.0).sin() * (delta / 2.0).sin()).abs();
        let dxi = (span * PI * s * co).abs();
        let f = profile.density_at_depth(xi, depth)?;
        Ok(f * xi.sin() * dxi * ring_kernel_unchecked(phi, xi))
    })
}

/// One row of a potential table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSample {
    pub phi: f64,
    pub f: Option<f64>,
    pub q: f64,
    pub u: f64,
}

impl PotentialSample {
    pub fn weighted(&self) -> f64 {
        self.u + self.q
    }
}

/// `U` and `Q` at the given angles (density where the angle is on the cap).
pub fn potential_table(
    field: &ExternalField,
    profile: &DensityProfile,
    phis: &[f64],
    exec: Execution,
) -> Result<Vec<PotentialSample>> {
    let cfg = PotentialConfig::default();
    par::try_map_range(exec, phis.len(), |i| {
        let phi = phis[i];
        let f = if profile.cap().contains(phi) {
            profile.density_at(phi).ok()
        } else {
            None
        };
        Ok(PotentialSample {
            phi,
            f,
            q: field.evaluate(phi)?,
            u: potential_on_sphere_with(profile, phi, &cfg)?,
        })
    })
}

/// Residuals of the Gauss variational inequalities for a candidate
/// equilibrium density.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    /// `max |U + Q − F_Q|` over interior support nodes.
    pub sup_deviation_on_support: f64,
    /// `min (U + Q − F_Q)` off the support; `None` for the full sphere.
    pub min_slack_off_support: Option<f64>,
    pub mass_error: f64,
    /// Smallest density over the support nodes.
    pub min_density: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub failures: Vec<String>,
    pub support: Vec<PotentialSample>,
    pub off_support: Vec<PotentialSample>,
}

/// Settings for [`verify_equilibrium_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    pub support_nodes: usize,
    pub off_support_nodes: usize,
    /// The set the measure lives on. `None` means the whole sphere, except
    /// for a zero field, whose nontrivial problems are cap conductors: then
    /// the profile's own cap is used.
    pub conductor: Option<SphericalCap>,
    pub exec: Execution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            support_nodes: 48,
            off_support_nodes: 64,
            conductor: None,
            exec: Execution::default(),
        }
    }
}

pub fn verify_equilibrium(
    field: &ExternalField,
    profile: &DensityProfile,
    tol_eq: f64,
) -> Result<EquilibriumReport> {
    verify_equilibrium_with(field, profile, tol_eq, &VerifyConfig::default())
}

/// Checks `|U + Q − F_Q| ≤ tol` on the support, `U + Q − F_Q ≥ −tol` on the
/// rest of the conductor, `f ≥ −tol` and `|mass − 1| ≤ tol`. The last two
/// reject densities that solve the integral equation on a cap that is too
/// large.
pub fn verify_equilibrium_with(
    field: &ExternalField,
    profile: &DensityProfile,
    tol_eq: f64,
    cfg: &VerifyConfig,
) -> Result<EquilibriumReport> {
    let cap = profile.cap();
    let conductor = match cfg.conductor {
        Some(c) => c,
        None if field.is_zero() => *cap,
        None => SphericalCap::full_sphere(),
    };
    let fq = profile.robin_constant();
    let mut failures = Vec::new();
    let (clo, chi) = conductor.interval();
    let (slo, shi) = cap.interval();
    let inside = slo >= clo && shi <= chi;
    if !inside {
        failures.push(format!(
            "support [{slo:.6}, {shi:.6}] is not contained in the conductor [{clo:.6}, {chi:.6}]"
        ));
    }
    let on = PhiGrid::for_cap(cap, cfg.support_nodes, Spacing::BoundaryClustered)?;
    let support = potential_table(field, profile, on.nodes(), cfg.exec)?;
    let off_support = match (
        inside,
        off_support_grid(cap, &conductor, cfg.off_support_nodes)?,
    ) {
        (true, Some(g)) => potential_table(field, profile, g.nodes(), cfg.exec)?,
        _ => Vec::new(),
    };
    let sup_dev = support
        .iter()
        .map(|s| (s.weighted() - fq).abs())
        .fold(0.0, f64::max);
    let slack = if off_support.is_empty() {
        None
    } else {
        Some(
            off_support
                .iter()
                .map(|s| s.weighted() - fq)
                .fold(f64::INFINITY, f64::min),
        )
    };
    let min_density = support
        .iter()
        .filter_map(|s| s.f)
        .chain(profile.values().iter().copied())
        .fold(f64::INFINITY, f64::min);
    let mass_error = (profile.mass() - 1.0).abs();
    if !(sup_dev <= tol_eq) {
        failures.push(format!(
            "max |U + Q − F_Q| on the support is {sup_dev:.3e} > {tol_eq:.1e}"
        ));
    }
    if let Some(s) = slack {
        if !(s >= -tol_eq) {
            failures.push(format!(
                "min (U + Q − F_Q) off the support is {s:.3e} < −{tol_eq:.1e}"
            ));
        }
    }
    if !(min_density >= -tol_eq) {
        failures.push(format!("density reaches {min_density:.3e} < 0"));
    }
    if !(mass_error <= tol_eq) {
        failures.push(format!("mass deviates from 1 by {mass_error:.3e}"));
    }
    Ok(EquilibriumReport {
        sup_deviation_on_support: sup_dev,
        min_slack_off_support: slack,
        mass_error,
        min_density,
        tolerance: tol_eq,
        passed: failures.is_empty(),
        failures,
        support,
        off_support,
    })
}

/// `n` boundary-clustered open nodes on `conductor` minus the cap, or `None`
/// when nothing is left. The conductor must be the sphere or a cap of the
/// same orientation.
pub fn off_support_grid(
    cap: &SphericalCap,
    conductor: &SphericalCap,
    n: usize,
) -> Result<Option<PhiGrid>> {
    let rest = if conductor.is_full_sphere() {
        cap.complement().map(|c| c.interval())
    } else if conductor.orientation() == cap.orientation() {
        let (a, b) = (conductor.alpha(), cap.alpha());
        (a != b).then(|| (a.min(b), a.max(b)))
    } else {
        return Err(Error::domain(
            "off_support_grid",
            "conductor and support caps point in opposite directions",
        ));
    };
    match rest {
        Some((lo, hi)) if hi > lo => {
            Ok(Some(PhiGrid::open(lo, hi, n, Spacing::BoundaryClustered)?))
        }
        _ => Ok(None),
    }
}
