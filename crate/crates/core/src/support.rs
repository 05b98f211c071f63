//! The support angle `α₀` of the equilibrium measure: F-functionals, the
//! transcendental support equations, and the Gonchar critical heights.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::fields::{check_quadratic, ExternalField};
use crate::geometry::{PolarAngle, SphericalCap};
use crate::quadrature::integrate_adaptive;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SupportMethod {
    TranscendentalRoot,
    FFunctionalMin,
    FullSphere,
}

impl SupportMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SupportMethod::TranscendentalRoot => "TranscendentalRoot",
            SupportMethod::FFunctionalMin => "FFunctionalMin",
            SupportMethod::FullSphere => "FullSphere",
        }
    }
}

/// Support `{φ ≥ α₀}` with its Robin constant and solver diagnostics.
///
/// `residual` is the support-equation residual for root solves and the final
/// bracket width for minimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportSolution {
    pub alpha0: PolarAngle,
    pub robin_constant: f64,
    pub method: SupportMethod,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: Option<(f64, f64)>,
}

impl SupportSolution {
    pub fn alpha0(&self) -> f64 {
        self.alpha0.value()
    }

    pub fn cap(&self) -> SphericalCap {
        SphericalCap::south(self.alpha0.value()).expect("α₀ < π by construction")
    }

    fn full_sphere(robin_constant: f64) -> Self {
        SupportSolution {
            alpha0: PolarAngle::ZERO,
            robin_constant,
            method: SupportMethod::FullSphere,
            residual: 0.0,
            iterations: 0,
            bracket: None,
        }
    }
}

/// Critical heights: a charge `q` at height `h` has a proper cap as support
/// exactly when `h₋ < h < h₊`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoncharHeights {
    pub h_minus: f64,
    pub h_plus: f64,
}

fn check_alpha(op: &'static str, alpha: f64) -> Result<f64> {
    let a = PolarAngle::new(alpha)?.value();
    if a >= PI {
        return Err(Error::domain(op, "α must be below π"));
    }
    Ok(a)
}

/// `π / (π − α + sin α)`, the Robin constant of the unweighted cap.
pub(crate) fn cap_robin(alpha: f64) -> f64 {
    PI / (PI - alpha + alpha.sin())
}

/// F-functional of `{φ ≥ α}` by quadrature of the field against the three
/// kernels `1`, `√((1−cos α)/(cos α−cos φ))` and its arctangent.
pub fn ffunctional_numeric(field: &ExternalField, alpha: f64) -> Result<f64> {
    const OP: &str = "ffunctional_numeric";
    let alpha = check_alpha(OP, alpha)?;
    let a = alpha.cos();
    let tol = 1e-13;
    // y = cos φ on [−1, a]; the rim terms use y = a − s²
    let i1 = integrate_adaptive(OP, |y| field.at_x3(y), -1.0, a, tol)?.value;
    let sa = (1.0 - a).sqrt();
    let smax = (1.0 + a).sqrt();
    let i2 = if sa == 0.0 {
        0.0
    } else {
        integrate_adaptive(
            OP,
            |s| Ok(2.0 * sa * field.at_x3((a - s * s).max(-1.0))?),
            0.0,
            smax,
            tol,
        )?
        .value
    };
    let i3 = integrate_adaptive(
        OP,
        |s| Ok(2.0 * s * sa.atan2(s) * field.at_x3((a - s * s).max(-1.0))?),
        0.0,
        smax,
        tol,
    )?
    .value;
    Ok(PI / (2.0 * (PI - alpha + alpha.sin())) * (2.0 + i1 + 2.0 / PI * (i2 - i3)))
}

/// F-functional of `{φ ≥ α}` for a point charge `q` at height `h`.
///
/// The arctangent is taken as `atan2((h−1) cos(α/2), (h+1) sin(α/2))`, which
/// equals the principal value of `atan(cot(α/2)(h−1)/(h+1))` for `α > 0` and
/// is its limit `±π/2` at `α = 0`.
pub fn ffunctional_pointcharge(q: f64, h: f64, alpha: f64) -> Result<f64> {
    const OP: &str = "ffunctional_pointcharge";
    let alpha = check_alpha(OP, alpha)?;
    if !(q >= 0.0 && h > 0.0 && q.is_finite() && h.is_finite()) {
        return Err(Error::domain(
            OP,
            format!("need q ≥ 0 and h > 0, got q = {q}, h = {h}"),
        ));
    }
    let at = ((h - 1.0) * (alpha / 2.0).cos()).atan2((h + 1.0) * (alpha / 2.0).sin());
    let brace =
        1.0 + q * (h + 1.0) / (2.0 * h) * (1.0 - alpha / PI) - q * (h - 1.0) / (PI * h) * at;
    Ok(cap_robin(alpha) * brace)
}

/// F-functional of `{φ ≥ α}` for `Q = a x₃² + b x₃ + c`.
pub fn ffunctional_quadratic(a: f64, b: f64, c: f64, alpha: f64) -> Result<f64> {
    let alpha = check_alpha("ffunctional_quadratic", alpha)?;
    check_quadratic(a, b, c)?;
    let co = alpha.cos();
    let poly = 32.0 * a * co.powi(3)
        + 4.0 * (2.0 * a + 9.0 * b) * co * co
        + 4.0 * (9.0 * c - 5.0 * a) * co
        + 4.0 * a
        - 36.0 * b
        + 36.0 * c;
    let v = (alpha / 2.0).tan() * poly + 12.0 * (a + 3.0 * c) * (PI - alpha) + 36.0 * PI;
    Ok(v / (36.0 * (PI - alpha + alpha.sin())))
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of an F-functional on `[lo, hi]` after a
/// 64-interval scan that both brackets the minimum and rejects objectives
/// with an interior local maximum.
pub fn minimize_ffunctional<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<SupportSolution>
where
    F: Fn(f64) -> Result<f64>,
{
    const OP: &str = "minimize_ffunctional";
    PolarAngle::new(lo)?;
    PolarAngle::new(hi)?;
    if lo >= hi {
        return Err(Error::domain(OP, format!("need lo < hi, got [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(
            OP,
            format!("tolerance must be positive, got {tol}"),
        ));
    }
    const N: usize = 64;
    let xs: Vec<f64> = (0..=N)
        .map(|i| {
            if i == N {
                hi
            } else {
                lo + (hi - lo) * i as f64 / N as f64
            }
        })
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    if let Some(bad) = fs.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(
            OP,
            format!("objective is not finite at α = {}", xs[bad]),
        ));
    }
    let scale = fs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let noise = 1e-12 * scale;
    let k = (0..=N).fold(0, |b, i| if fs[i] < fs[b] { i } else { b });
    // unimodal about the scan minimum k: nonincreasing before, nondecreasing after
    for j in 0..N {
        if j < k && fs[j + 1] > fs[j] + noise {
            return Err(Error::NotUnimodal {
                at: [xs[j], xs[j + 1], xs[k]],
            });
        }
        if j >= k && fs[j + 1] < fs[j] - noise {
            return Err(Error::NotUnimodal {
                at: [xs[k], xs[j], xs[j + 1]],
            });
        }
    }
    let (mut a, mut b) = (xs[k.saturating_sub(1)], xs[(k + 1).min(N)]);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let (mut fa, mut fb) = (fs[k.saturating_sub(1)], fs[(k + 1).min(N)]);
    let mut iterations = 0;
    while b - a > tol && iterations < 500 {
        iterations += 1;
        if fc.max(fd) > fa.max(fb) + noise {
            let at = if fc > fd { [a, c, d] } else { [c, d, b] };
            return Err(Error::NotUnimodal { at });
        }
        if fc <= fd {
            b = d;
            fb = fd;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            fa = fc;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    let _ = (fa, fb);
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    if lo == 0.0 {
        // an objective this flat at 0 leaves golden section wandering in
        // rounding noise, so the boundary also wins on value
        let f0 = fs[0];
        if x - lo <= tol || f0 <= fx + 8.0 * f64::EPSILON * fx.abs() {
            return Ok(SupportSolution {
                iterations,
                ..SupportSolution::full_sphere(f0)
            });
        }
    }
    Ok(SupportSolution {
        alpha0: PolarAngle::new(x)?,
        robin_constant: fx,
        method: SupportMethod::FFunctionalMin,
        residual: b - a,
        iterations,
        bracket: Some((a, b)),
    })
}

/// First sign change of `r` on a 256-interval scan of `[lo, hi]`, refined by
/// bisection. Scan values within rounding noise of zero are skipped so that a
/// tangential root at an end cannot masquerade as a crossing.
fn scan_bisect<R: Fn(f64) -> f64>(
    r: &R,
    lo: f64,
    hi: f64,
) -> Option<(f64, f64, usize, (f64, f64))> {
    const N: usize = 256;
    let xs: Vec<f64> = (0..=N)
        .map(|i| {
            if i == N {
                hi
            } else {
                lo + (hi - lo) * i as f64 / N as f64
            }
        })
        .collect();
    let rs: Vec<f64> = xs.iter().map(|&x| r(x)).collect();
    let scale = rs
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 1e-13 * scale;
    let mut prev: Option<usize> = None;
    for i in 0..=N {
        if !rs[i].is_finite() || rs[i].abs() <= noise {
            continue;
        }
        if let Some(p) = prev {
            if rs[p].signum() != rs[i].signum() {
                let bracket = (xs[p], xs[i]);
                let (mut a, mut b, mut ra) = (xs[p], xs[i], rs[p]);
                let mut it = 0;
                while it < 200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    it += 1;
                    let rm = r(m);
                    if rm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if rm.signum() == ra.signum() {
                        a = m;
                        ra = rm;
                    } else {
                        b = m;
                    }
                }
                let x = if r(a).abs() <= r(b).abs() { a } else { b };
                return Some((x, r(x).abs(), it, bracket));
            }
        }
        prev = Some(i);
    }
    None
}

/// Residual of the point-charge support equation, `F(α) − q(h+1)/(h²+1−2h cos α)`.
pub fn pointcharge_support_residual(q: f64, h: f64, alpha: f64) -> Result<f64> {
    let ff = ffunctional_pointcharge(q, h, alpha)?;
    let d2 = (h - 1.0) * (h - 1.0) + 4.0 * h * (alpha / 2.0).sin().powi(2);
    Ok(ff - q * (h + 1.0) / d2)
}

const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = PI - 1e-6;

/// Support of a point charge `q` at height `h ≠ 1`.
pub fn solve_support_pointcharge(q: f64, h: f64) -> Result<SupportSolution> {
    ExternalField::point_charge(q, h)?;
    let r = |al: f64| pointcharge_support_residual(q, h, al).unwrap_or(f64::NAN);
    match scan_bisect(&r, SCAN_LO, SCAN_HI) {
        Some((x, res, it, br)) => Ok(SupportSolution {
            alpha0: PolarAngle::new(x)?,
            robin_constant: ffunctional_pointcharge(q, h, x)?,
            method: SupportMethod::TranscendentalRoot,
            residual: res,
            iterations: it,
            bracket: Some(br),
        }),
        None => Ok(SupportSolution::full_sphere(ffunctional_pointcharge(
            q, h, 0.0,
        )?)),
    }
}

/// Residual of the North-Pole support equation, multiplied through by `cos α`:
/// `π(1 − cos α) − q(π − α) cos α − q sin α`.
pub fn northpole_support_residual(q: f64, alpha: f64) -> f64 {
    // 1 − cos α = 2 sin²(α/2)
    2.0 * PI * (alpha / 2.0).sin().powi(2) - q * (PI - alpha) * alpha.cos() - q * alpha.sin()
}

/// Support of a charge `q` sitting at the North Pole (`h = 1`).
pub fn solve_support_northpole(q: f64) -> Result<SupportSolution> {
    ExternalField::point_charge(q, 1.0)?;
    let r = |al: f64| northpole_support_residual(q, al);
    match scan_bisect(&r, SCAN_LO, FRAC_PI_2) {
        Some((x, res, it, br)) => Ok(SupportSolution {
            alpha0: PolarAngle::new(x)?,
            robin_constant: (PI + q * (PI - x)) / (PI - x + x.sin()),
            method: SupportMethod::TranscendentalRoot,
            residual: res,
            iterations: it,
            bracket: Some(br),
        }),
        None => Ok(SupportSolution::full_sphere(1.0 + q)),
    }
}

/// Residual (left minus right side) of the quadratic-field support equation.
/// It does not involve `c`.
pub fn quadratic_support_residual(a: f64, b: f64, alpha: f64) -> f64 {
    let (co, si) = (alpha.cos(), alpha.sin());
    let pa = PI - alpha;
    let lhs = 8.0 * a * co.powi(3) * (2.0 * si + 3.0 * pa)
        + co * co * ((2.0 * a + 9.0 * b) * si - 6.0 * (2.0 * a - 3.0 * b) * pa)
        + 0.5 * (2.0 * alpha).sin() * (9.0 * b - 22.0 * a)
        + 3.0 * (2.0 * a - 3.0 * b) * pa
        + 9.0 * PI;
    let rhs = 9.0 * co * (PI + (2.0 * a + b) * pa) - 2.0 * si * (2.0 * a - 9.0 * b);
    lhs - rhs
}

/// Support of the quadratic field. The support equation also vanishes to
/// second order at `α = 0`; only crossings inside the scan range count.
pub fn solve_support_quadratic(a: f64, b: f64, c: f64) -> Result<SupportSolution> {
    check_quadratic(a, b, c)?;
    let r = |al: f64| quadratic_support_residual(a, b, al);
    match scan_bisect(&r, SCAN_LO, SCAN_HI) {
        Some((x, res, it, br)) => Ok(SupportSolution {
            alpha0: PolarAngle::new(x)?,
            robin_constant: ffunctional_quadratic(a, b, c, x)?,
            method: SupportMethod::TranscendentalRoot,
            residual: res,
            iterations: it,
            bracket: Some(br),
        }),
        None => Ok(SupportSolution::full_sphere(ffunctional_quadratic(
            a, b, c, 0.0,
        )?)),
    }
}

/// Residual of `1/q = (h+1)/(h−1)² − 1/h`.
pub fn gonchar_plus_residual(q: f64, h: f64) -> f64 {
    (h + 1.0) / ((h - 1.0) * (h - 1.0)) - 1.0 / h - 1.0 / q
}

/// Residual of `1/q = (h+1)/(1−h)² − 1`.
pub fn gonchar_minus_residual(q: f64, h: f64) -> f64 {
    (h + 1.0) / ((1.0 - h) * (1.0 - h)) - 1.0 - 1.0 / q
}

/// Critical heights for a charge `q > 0`.
///
/// `h₊` is the root in `(1, ∞)` of `h³ − 2h² + (1 − 3q)h + q = 0`, which has
/// three real roots (one negative, one in `(0, 1)`); `h₋` is the root in
/// `(0, 1)` of `(1 + q)h² − (2 + 3q)h + 1 = 0`.
pub fn gonchar_heights(q: f64) -> Result<GoncharHeights> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::domain(
            "gonchar_heights",
            format!("need q > 0, got {q}"),
        ));
    }
    // depressed cubic via h = t + 2/3: t³ + p t + r = 0
    let (b2, b1, b0) = (-2.0, 1.0 - 3.0 * q, q);
    let p = b1 - b2 * b2 / 3.0;
    let r = 2.0 * b2.powi(3) / 27.0 - b2 * b1 / 3.0 + b0;
    let m = 2.0 * (-p / 3.0).sqrt();
    let theta = (3.0 * r / (p * m)).clamp(-1.0, 1.0).acos() / 3.0;
    // k = 0 gives the largest of the three real roots
    let mut h = m * theta.cos() - b2 / 3.0;
    for _ in 0..4 {
        let f = ((h + b2) * h + b1) * h + b0;
        let df = (3.0 * h + 2.0 * b2) * h + b1;
        let step = f / df;
        h -= step;
        if step.abs() <= 1e-16 * h {
            break;
        }
    }
    let bq = 2.0 + 3.0 * q;
    let h_minus = 2.0 / (bq + (bq * bq - 4.0 * (1.0 + q)).sqrt());
    Ok(GoncharHeights { h_minus, h_plus: h })
}
