//! Equilibrium densities `f` (with `dμ = f(φ) sin φ dθ dφ`) and Robin
//! constants: closed forms for the no-field, point-charge, North-Pole charge
//! and quadratic cases, and the generic two-stage Abel pipeline.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::fields::{check_quadratic, ExternalField};
use crate::geometry::{Orientation, PhiGrid, PolarAngle, SphericalCap, RIM_GUARD};
use crate::par::{self, Execution};
use crate::quadrature::{integrate_adaptive, AbelConfig, GaussLegendre, SouthAbel};
use crate::support::{cap_robin, ffunctional_pointcharge, ffunctional_quadratic};
use crate::{Error, Result};

/// Density evaluator `(φ, |cos α − cos φ|) ↦ f(φ)`. The second argument lets
/// quadratures that parametrize by the distance to the rim pass it exactly.
pub type DensityFn = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;

/// A density on a cap, sampled on a grid, with its Robin constant and mass.
#[derive(Clone)]
pub struct DensityProfile {
    cap: SphericalCap,
    grid: PhiGrid,
    values: Vec<f64>,
    robin_constant: f64,
    mass: f64,
    negative_nodes: Vec<usize>,
    density: DensityFn,
}

impl fmt::Debug for DensityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityProfile")
            .field("cap", &self.cap)
            .field("nodes", &self.grid.len())
            .field("robin_constant", &self.robin_constant)
            .field("mass", &self.mass)
            .field("negative_nodes", &self.negative_nodes)
            .finish()
    }
}

/// Nodes with `f < −NEGATIVE_TOL` are flagged as negative.
pub const NEGATIVE_TOL: f64 = 1e-9;

impl DensityProfile {
    /// Samples `density` on `grid` and integrates its mass.
    pub fn from_fn(
        cap: SphericalCap,
        grid: PhiGrid,
        robin_constant: f64,
        density: DensityFn,
        exec: Execution,
    ) -> Result<Self> {
        if !grid.within(&cap) {
            return Err(Error::domain(
                "DensityProfile",
                "grid nodes lie outside the cap",
            ));
        }
        let nodes = grid.nodes();
        let values = par::try_map_range(exec, nodes.len(), |i| {
            density(nodes[i], cap.depth(nodes[i]))
        })?;
        let mass = mass_of(&cap, &density)?;
        let negative_nodes = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < -NEGATIVE_TOL)
            .map(|(i, _)| i)
            .collect();
        Ok(DensityProfile {
            cap,
            grid,
            values,
            robin_constant,
            mass,
            negative_nodes,
            density,
        })
    }

    /// Like [`from_fn`](Self::from_fn) with a mass computed by the caller.
    pub(crate) fn with_mass(
        cap: SphericalCap,
        grid: PhiGrid,
        robin_constant: f64,
        density: DensityFn,
        mass: f64,
        exec: Execution,
    ) -> Result<Self> {
        let nodes = grid.nodes();
        let values = par::try_map_range(exec, nodes.len(), |i| {
            density(nodes[i], cap.depth(nodes[i]))
        })?;
        let negative_nodes = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < -NEGATIVE_TOL)
            .map(|(i, _)| i)
            .collect();
        Ok(DensityProfile {
            cap,
            grid,
            values,
            robin_constant,
            mass,
            negative_nodes,
            density,
        })
    }

    pub fn cap(&self) -> &SphericalCap {
        &self.cap
    }

    pub fn grid(&self) -> &PhiGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn robin_constant(&self) -> f64 {
        self.robin_constant
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Indices of grid nodes where the density is negative.
    pub fn negative_nodes(&self) -> &[usize] {
        &self.negative_nodes
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `f(φ)` anywhere on the cap (rim excluded when it is singular).
    pub fn density_at(&self, phi: f64) -> Result<f64> {
        let phi = PolarAngle::new(phi)?.value();
        if !self.cap.contains(phi) {
            return Err(Error::domain(
                "density_at",
                format!("φ = {phi} lies outside the cap"),
            ));
        }
        (self.density)(phi, self.cap.depth(phi))
    }

    pub(crate) fn density_at_depth(&self, phi: f64, depth: f64) -> Result<f64> {
        (self.density)(phi, depth)
    }

    pub fn density_fn(&self) -> DensityFn {
        self.density.clone()
    }

    /// The same density times `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let inner = self.density.clone();
        DensityProfile {
            cap: self.cap,
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
            robin_constant: self.robin_constant,
            mass: self.mass * k,
            negative_nodes: self.negative_nodes.clone(),
            density: Arc::new(move |p, d| Ok(k * inner(p, d)?)),
        }
    }

    /// The same profile with its density replaced by a Chebyshev series of
    /// `f·√(cos α − cos φ)` (smooth up to the rim) in a rim-clustering
    /// variable, fitted to `n` samples. Grid values and mass are kept. Use it
    /// before computing potentials of an expensive density.
    pub fn interpolated(&self, n: usize, exec: Execution) -> Result<Self> {
        if n < 8 {
            return Err(Error::domain(
                "interpolated",
                format!("need at least 8 samples, got {n}"),
            ));
        }
        let map = RimMap::new(&self.cap);
        let xs: Vec<f64> = (0..n)
            .map(|k| (PI * (k as f64 + 0.5) / n as f64).cos())
            .collect();
        let samples = par::try_map_range(exec, n, |k| {
            let (phi, depth) = map.point(xs[k]);
            Ok::<f64, Error>((self.density)(phi, depth)? * map.edge(depth))
        })?;
        let coeffs: Vec<f64> = (0..n)
            .map(|j| {
                let s: f64 = (0..n)
                    .map(|k| samples[k] * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                s * if j == 0 { 1.0 } else { 2.0 } / n as f64
            })
            .collect();
        let density: DensityFn = Arc::new(move |phi, depth| {
            if map.rim.is_some() && depth <= 0.0 {
                return Err(Error::domain("density", "density is singular at the rim"));
            }
            Ok(clenshaw(&coeffs, map.x_of(phi)) / map.edge(depth))
        });
        Ok(DensityProfile {
            density,
            ..self.clone()
        })
    }

    /// The same density resampled on another grid.
    pub fn resampled(&self, grid: PhiGrid, exec: Execution) -> Result<Self> {
        Self::from_fn(
            self.cap,
            grid,
            self.robin_constant,
            self.density.clone(),
            exec,
        )
    }
}

// Cap coordinates for interpolation: distance from the rim t = 2·span·sin²(πu/4),
// u ∈ [u_guard, 1] mapped to x ∈ [−1, 1]; on the whole sphere φ = πu.
#[derive(Clone, Copy)]
struct RimMap {
    /// Rim angle and the direction into the cap.
    rim: Option<(f64, f64)>,
    span: f64,
    u0: f64,
}

impl RimMap {
    fn new(cap: &SphericalCap) -> Self {
        if cap.is_full_sphere() {
            return RimMap {
                rim: None,
                span: PI,
                u0: 0.0,
            };
        }
        let (rim, dir, span) = match cap.orientation() {
            Orientation::SouthCentered => (cap.alpha(), 1.0, PI - cap.alpha()),
            Orientation::NorthCentered => (cap.alpha(), -1.0, cap.alpha()),
        };
        RimMap {
            rim: Some((rim, dir)),
            span,
            u0: Self::u_of_t(2.0 * RIM_GUARD, span),
        }
    }

    fn u_of_t(t: f64, span: f64) -> f64 {
        4.0 / PI * (t / (2.0 * span)).clamp(0.0, 1.0).sqrt().asin()
    }

    fn u_of_x(&self, x: f64) -> f64 {
        self.u0 + (1.0 - self.u0) * (x + 1.0) / 2.0
    }

    /// `(φ, depth)` at series coordinate `x`.
    fn point(&self, x: f64) -> (f64, f64) {
        let u = self.u_of_x(x);
        match self.rim {
            None => {
                let phi = PI * u;
                (phi, 1.0 - phi.cos())
            }
            Some((rim, dir)) => {
                let s = (PI / 4.0 * u).sin();
                let t = 2.0 * self.span * s * s;
                let depth = 2.0 * (rim + dir * t / 2.0).sin() * (t / 2.0).sin();
                (rim + dir * t, depth.abs())
            }
        }
    }

    fn x_of(&self, phi: f64) -> f64 {
        let u = match self.rim {
            None => phi / PI,
            Some((rim, _)) => Self::u_of_t((phi - rim).abs(), self.span),
        };
        2.0 * (u - self.u0) / (1.0 - self.u0) - 1.0
    }

    fn edge(&self, depth: f64) -> f64 {
        if self.rim.is_some() {
            depth.sqrt()
        } else {
            1.0
        }
    }
}

// Σ c_j T_j(x), also slightly outside [−1, 1].
fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &cj in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + cj;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

/// `2π ∫ f sin φ dφ` over the cap.
pub fn total_mass(profile: &DensityProfile) -> Result<f64> {
    mass_of(&profile.cap, &profile.density)
}

// ∫ f sin φ dφ = ∫ f dy; with y = cos α ∓ s² the rim factor (cos α − cos φ)^{−1/2}
// turns into 1/s and cancels against dy = 2s ds.
fn mass_of(cap: &SphericalCap, density: &DensityFn) -> Result<f64> {
    const OP: &str = "total_mass";
    let a = cap.alpha().cos();
    let (sign, smax) = match cap.orientation() {
        Orientation::SouthCentered => (-1.0, (1.0 + a).sqrt()),
        Orientation::NorthCentered => (1.0, (1.0 - a).max(0.0).sqrt()),
    };
    let e = integrate_adaptive(
        OP,
        |s| {
            let y = (a + sign * s * s).clamp(-1.0, 1.0);
            Ok(2.0 * s * density(y.acos(), s * s)?)
        },
        0.0,
        smax,
        1e-10,
    )?;
    Ok(2.0 * PI * e.value)
}

// 1 + (2/π)(r − atan r), r = √((1 − a)/d), d = a − cos φ.
fn edge(a: f64, d: f64) -> f64 {
    let r = ((1.0 - a) / d).sqrt();
    1.0 + 2.0 / PI * (r - r.atan())
}

/// Capacity `(π − α + sin α)/π` of the south cap `{φ ≥ α}`.
pub fn capacity_south_cap(alpha: f64) -> Result<f64> {
    let alpha = PolarAngle::new(alpha)?.value();
    Ok((PI - alpha + alpha.sin()) / PI)
}

fn check_point(op: &'static str, alpha: f64, phi: f64) -> Result<(f64, f64)> {
    let alpha = PolarAngle::new(alpha)?.value();
    let phi = PolarAngle::new(phi)?.value();
    if alpha >= PI {
        return Err(Error::domain(op, "α must be below π"));
    }
    if phi < alpha || (alpha > 0.0 && phi == alpha) {
        return Err(Error::domain(
            op,
            format!("φ = {phi} must exceed α = {alpha}"),
        ));
    }
    Ok((alpha, phi))
}

fn depth(alpha: f64, phi: f64) -> f64 {
    (2.0 * ((phi + alpha) / 2.0).sin() * ((phi - alpha) / 2.0).sin()).abs()
}

/// Equilibrium density of `{φ ≥ α}` without external field.
pub fn nofield_density(alpha: f64, phi: f64) -> Result<f64> {
    let (alpha, phi) = check_point("nofield_density", alpha, phi)?;
    Ok(nofield_at(alpha, depth(alpha, phi)))
}

fn nofield_at(alpha: f64, d: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0 / (4.0 * PI);
    }
    cap_robin(alpha) / (4.0 * PI) * edge(alpha.cos(), d)
}

/// Point charge `q` at height `h` on the cap `{φ ≥ α₀}`: returns `(f(φ), F_Q)`.
pub fn pointcharge_density(q: f64, h: f64, alpha0: f64, phi: f64) -> Result<(f64, f64)> {
    let (alpha0, phi) = check_point("pointcharge_density", alpha0, phi)?;
    ExternalField::point_charge(q, h)?;
    let fq = ffunctional_pointcharge(q, h, alpha0)?;
    Ok((
        pointcharge_at(q, h, alpha0, fq, phi, depth(alpha0, phi))?,
        fq,
    ))
}

fn pointcharge_at(q: f64, h: f64, alpha0: f64, fq: f64, phi: f64, d: f64) -> Result<f64> {
    let a = alpha0.cos();
    // 1 − a = 2 sin²(α₀/2), D = 1 + h² − 2h cos φ = (h−1)² + 4h sin²(φ/2)
    let one_a = 2.0 * (alpha0 / 2.0).sin().powi(2);
    let dd = (h - 1.0) * (h - 1.0) + 4.0 * h * (phi / 2.0).sin().powi(2);
    if dd <= 0.0 {
        return Err(Error::domain(
            "pointcharge_density",
            "density evaluated at the charge",
        ));
    }
    let sd = dd.sqrt();
    let first = (one_a / d).sqrt() / dd;
    let second = (h - 1.0) / (dd * sd) * ((h - 1.0) * d.sqrt()).atan2(sd * one_a.sqrt());
    let big_f = -q * (h + 1.0) / (2.0 * PI * PI) * (first + second);
    let e = if alpha0 == 0.0 { 1.0 } else { edge(a, d) };
    Ok(fq / (4.0 * PI) * e + big_f)
}

/// Charge `q` at the North Pole on the cap `{φ ≥ α₀}`.
pub fn northpole_density(q: f64, alpha0: f64, phi: f64) -> Result<f64> {
    let (alpha0, phi) = check_point("northpole_density", alpha0, phi)?;
    ExternalField::point_charge(q, 1.0)?;
    if alpha0 == 0.0 {
        return Err(Error::domain(
            "northpole_density",
            "a charge at the pole needs α₀ > 0",
        ));
    }
    Ok(northpole_at(q, alpha0, phi, depth(alpha0, phi)))
}

fn northpole_at(q: f64, alpha0: f64, phi: f64, d: f64) -> f64 {
    let a = alpha0.cos();
    let one_a = 2.0 * (alpha0 / 2.0).sin().powi(2);
    let one_y = 2.0 * (phi / 2.0).sin().powi(2);
    let lead = (PI + q * (PI - alpha0)) / (4.0 * PI * (alpha0.sin() + PI - alpha0));
    lead * edge(a, d) - q / (2.0 * PI * PI) / one_y * (one_a / d).sqrt()
}

/// Quadratic field `a x₃² + b x₃ + c` on the cap `{φ ≥ α₀}`: returns `(f(φ), F_Q)`.
pub fn quadratic_density(a: f64, b: f64, c: f64, alpha0: f64, phi: f64) -> Result<(f64, f64)> {
    let (alpha0, phi) = check_point("quadratic_density", alpha0, phi)?;
    check_quadratic(a, b, c)?;
    let fq = ffunctional_quadratic(a, b, c, alpha0)?;
    Ok((
        quadratic_at(a, b, c, alpha0, fq, phi, depth(alpha0, phi)),
        fq,
    ))
}

fn quadratic_at(ca: f64, cb: f64, cc: f64, alpha0: f64, fq: f64, phi: f64, d: f64) -> f64 {
    let a = alpha0.cos();
    let y = phi.cos();
    let one_a = 2.0 * (alpha0 / 2.0).sin().powi(2);
    let cos2 = (2.0 * phi).cos();
    let t1 = one_a.sqrt() * d.sqrt() * (20.0 * ca * a + 60.0 * ca * y + 10.0 * ca + 27.0 * cb);
    let t2 = (one_a / d).sqrt()
        * (8.0 * ca * a * a
            + 10.0 * ca * a * y
            + (4.0 * ca + 9.0 * cb) * a
            + (20.0 * ca + 27.0 * cb) * y
            + 15.0 * ca * cos2
            + 9.0 * ca
            + 18.0 * cb
            + 18.0 * cc);
    let t3 = 6.0
        * d.sqrt().atan2(one_a.sqrt())
        * (15.0 * ca * y * y + 9.0 * cb * y - 4.0 * ca + 3.0 * cc);
    let big_f = (t1 - t2 - t3) / (36.0 * PI * PI);
    let e = if alpha0 == 0.0 { 1.0 } else { edge(a, d) };
    fq / (4.0 * PI) * e + big_f
}

/// The closed-form equilibrium densities, each tied to its south cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosedForm {
    NoField { alpha: f64 },
    PointCharge { q: f64, h: f64, alpha0: f64 },
    NorthPole { q: f64, alpha0: f64 },
    Quadratic { a: f64, b: f64, c: f64, alpha0: f64 },
}

impl ClosedForm {
    pub fn alpha(&self) -> f64 {
        match *self {
            ClosedForm::NoField { alpha } => alpha,
            ClosedForm::PointCharge { alpha0, .. }
            | ClosedForm::NorthPole { alpha0, .. }
            | ClosedForm::Quadratic { alpha0, .. } => alpha0,
        }
    }

    pub fn cap(&self) -> Result<SphericalCap> {
        SphericalCap::south(self.alpha())
    }

    pub fn field(&self) -> Result<ExternalField> {
        match *self {
            ClosedForm::NoField { .. } => Ok(ExternalField::zero()),
            ClosedForm::PointCharge { q, h, .. } => ExternalField::point_charge(q, h),
            ClosedForm::NorthPole { q, .. } => ExternalField::point_charge(q, 1.0),
            ClosedForm::Quadratic { a, b, c, .. } => ExternalField::quadratic(a, b, c),
        }
    }

    pub fn robin_constant(&self) -> Result<f64> {
        match *self {
            ClosedForm::NoField { alpha } => Ok(cap_robin(alpha)),
            ClosedForm::PointCharge { q, h, alpha0 } => ffunctional_pointcharge(q, h, alpha0),
            ClosedForm::NorthPole { q, alpha0 } => {
                Ok((PI + q * (PI - alpha0)) / (PI - alpha0 + alpha0.sin()))
            }
            ClosedForm::Quadratic { a, b, c, alpha0 } => ffunctional_quadratic(a, b, c, alpha0),
        }
    }

    pub fn density(&self, phi: f64) -> Result<f64> {
        match *self {
            ClosedForm::NoField { alpha } => nofield_density(alpha, phi),
            ClosedForm::PointCharge { q, h, alpha0 } => {
                Ok(pointcharge_density(q, h, alpha0, phi)?.0)
            }
            ClosedForm::NorthPole { q, alpha0 } => northpole_density(q, alpha0, phi),
            ClosedForm::Quadratic { a, b, c, alpha0 } => {
                Ok(quadratic_density(a, b, c, alpha0, phi)?.0)
            }
        }
    }

    fn evaluator(&self) -> Result<DensityFn> {
        self.field()?;
        let cap = self.cap()?;
        let fq = self.robin_constant()?;
        let me = *self;
        Ok(Arc::new(move |phi: f64, d: f64| {
            if !(d > 0.0 || (cap.is_full_sphere() && phi >= 0.0)) {
                return Err(Error::domain(
                    "density",
                    format!("density is singular at the rim φ = {phi}"),
                ));
            }
            Ok(match me {
                ClosedForm::NoField { alpha } => nofield_at(alpha, d),
                ClosedForm::PointCharge { q, h, alpha0 } => {
                    pointcharge_at(q, h, alpha0, fq, phi, d)?
                }
                ClosedForm::NorthPole { q, alpha0 } => northpole_at(q, alpha0, phi, d),
                ClosedForm::Quadratic { a, b, c, alpha0 } => {
                    quadratic_at(a, b, c, alpha0, fq, phi, d)
                }
            })
        }))
    }

    pub fn profile(&self, grid: PhiGrid) -> Result<DensityProfile> {
        self.profile_with(grid, Execution::default())
    }

    pub fn profile_with(&self, grid: PhiGrid, exec: Execution) -> Result<DensityProfile> {
        DensityProfile::from_fn(
            self.cap()?,
            grid,
            self.robin_constant()?,
            self.evaluator()?,
            exec,
        )
    }
}

/// Equilibrium density of `field` on `cap` through the Abel pipeline:
/// `F_Q` first, then `f = F_Q/(4π)·edge + F` at every node. Within
/// [`RIM_GUARD`] of the rim, `f·√(cos α − cos φ)` is extrapolated linearly in
/// `√(cos α − cos φ)`.
pub fn density_general(
    field: &ExternalField,
    cap: &SphericalCap,
    grid: &PhiGrid,
) -> Result<DensityProfile> {
    density_general_with(
        field,
        cap,
        grid,
        &AbelConfig::default(),
        Execution::default(),
    )
}

pub fn density_general_with(
    field: &ExternalField,
    cap: &SphericalCap,
    grid: &PhiGrid,
    cfg: &AbelConfig,
    exec: Execution,
) -> Result<DensityProfile> {
    // everything is computed on a south cap; a north cap is its mirror image
    let north = cap.orientation() == Orientation::NorthCentered;
    let (sfield, scap) = if north {
        (field.mirrored(), cap.reflected())
    } else {
        (field.clone(), *cap)
    };
    let alpha = scap.alpha();
    let pipe = Arc::new(SouthAbel::new(sfield, alpha.cos(), cfg));
    let fq = pipe.robin_constant(alpha)?;
    let full = scap.is_full_sphere();
    let south = {
        let pipe = pipe.clone();
        move |phi: f64, d: f64| -> Result<f64> {
            let interior = |d: f64| -> Result<f64> {
                let e = if full { 1.0 } else { edge(pipe.a, d) };
                Ok(fq / (4.0 * PI) * e + pipe.f_stage(pipe.a - d)?)
            };
            if full {
                return interior(2.0 * (phi / 2.0).sin().powi(2));
            }
            if phi - alpha >= RIM_GUARD {
                return interior(d);
            }
            if d <= 0.0 {
                return Err(Error::domain(
                    "density_general",
                    "density is singular at the rim",
                ));
            }
            // f·√d is smooth in √d: interpolate it quadratically from three
            // points past the guard, exact for both f ∝ 1/√d and f ∝ √d
            let mut pts = [(0.0, 0.0); 3];
            for (k, pt) in pts.iter_mut().enumerate() {
                let dk = depth(alpha, alpha + ((k + 1) * (k + 1)) as f64 * RIM_GUARD);
                let sk = dk.sqrt();
                *pt = (sk, interior(dk)? * sk);
            }
            let s = d.sqrt();
            let v: f64 = (0..3)
                .map(|i| {
                    let (si, vi) = pts[i];
                    (0..3)
                        .filter(|&j| j != i)
                        .fold(vi, |acc, j| acc * (s - pts[j].0) / (si - pts[j].0))
                })
                .sum();
            Ok(v / s)
        }
    };
    let density: DensityFn = if north {
        Arc::new(move |phi, d| south(PI - phi, d))
    } else {
        Arc::new(south)
    };
    if !grid.within(cap) {
        return Err(Error::domain(
            "density_general",
            "grid nodes lie outside the cap",
        ));
    }
    // each evaluation is costly, so the mass uses a fixed rule, not an adaptive one
    let mass = mass_fixed(cap, &density, exec)?;
    DensityProfile::with_mass(*cap, grid.clone(), fq, density, mass, exec)
}

/// Mass by a composite Gauss rule in `s = √|cos α − cos φ|`, where `2s·f` is
/// smooth up to the rim.
fn mass_fixed(cap: &SphericalCap, density: &DensityFn, exec: Execution) -> Result<f64> {
    const PANELS: usize = 16;
    let rule = GaussLegendre::cached(16);
    let a = cap.alpha().cos();
    let (sign, smax) = match cap.orientation() {
        Orientation::SouthCentered => (-1.0, (1.0 + a).sqrt()),
        Orientation::NorthCentered => (1.0, (1.0 - a).max(0.0).sqrt()),
    };
    let m = rule.nodes.len();
    let h = smax / PANELS as f64;
    let terms = par::try_map_range(exec, PANELS * m, |i| {
        let (p, k) = (i / m, i % m);
        let s = h * (p as f64 + 0.5 * (1.0 + rule.nodes[k]));
        let y = (a + sign * s * s).clamp(-1.0, 1.0);
        Ok::<f64, Error>(rule.weights[k] * 2.0 * s * density(y.acos(), s * s)?)
    })?;
    Ok(2.0 * PI * 0.5 * h * terms.iter().sum::<f64>())
}
