//! Quadrature and differentiation for inverse-square-root kernels, and the
//! two Abel stages `Q ↦ g ↦ F` of the density pipeline.
//!
//! Both stages work in cosine coordinates. For a south cap `{φ ≥ α}` with
//! `a = cos α`:
//!
//! ```text
//! K(x)  = ∫₀¹ Q(−1 + (1−σ²)(1+x)) dσ
//! g̃(x)  = −√(1−x)/(4π) · (K(x) + 2(1+x) K′(x))              g(t) = g̃(cos t)
//! L(y)  = ∫₀¹ g̃(y + σ²(a−y)) dσ
//! F(y)  = (2/π) · (L(y)/√(a−y) − 2√(a−y) L′(y))              y = cos φ
//! ```
//!
//! The substitutions remove the moving singular endpoints, so the remaining
//! derivatives act on smooth functions and are taken by Richardson-extrapolated
//! finite differences. North caps are mapped to south caps by `φ ↦ π − φ`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use crate::fields::ExternalField;
use crate::geometry::{Orientation, PolarAngle, SphericalCap};
use crate::{Error, Result};

/// Gauss–Legendre rule on `[−1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared instance of the `n`-point rule.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let mut map = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        map.entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    /// `∫_lo^hi f` with the rule mapped onto `[lo, hi]`.
    pub fn integrate<F: FnMut(f64) -> Result<f64>>(
        &self,
        lo: f64,
        hi: f64,
        mut f: F,
    ) -> Result<f64> {
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + r * x)?;
        }
        Ok(s * r)
    }

    /// Composite rule over the given panels.
    pub fn integrate_panels<F: FnMut(f64) -> Result<f64>>(
        &self,
        panels: &[(f64, f64)],
        mut f: F,
    ) -> Result<f64> {
        let mut s = 0.0;
        for &(lo, hi) in panels {
            s += self.integrate(lo, hi, &mut f)?;
        }
        Ok(s)
    }
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Equal panels covering `[lo, hi]`.
pub fn uniform_panels(lo: f64, hi: f64, count: usize) -> Vec<(f64, f64)> {
    let w = (hi - lo) / count as f64;
    (0..count)
        .map(|k| {
            (
                lo + w * k as f64,
                if k + 1 == count {
                    hi
                } else {
                    lo + w * (k + 1) as f64
                },
            )
        })
        .collect()
}

/// Panels on `[lo, hi]` halving in width toward `c` (`levels` halvings on
/// each side of `c`).
pub fn graded_panels(lo: f64, hi: f64, c: f64, levels: u32) -> Vec<(f64, f64)> {
    let c = c.clamp(lo, hi);
    let mut out = Vec::new();
    if c > lo {
        let len = c - lo;
        let mut x = lo;
        for k in 1..=levels {
            let nx = c - len / f64::powi(2.0, k as i32);
            if nx > x {
                out.push((x, nx));
                x = nx;
            }
        }
        out.push((x, c));
    }
    if hi > c {
        let len = hi - c;
        let mut pts = vec![hi];
        for k in 1..=levels {
            pts.push(c + len / f64::powi(2.0, k as i32));
        }
        pts.push(c);
        pts.dedup();
        for w in pts.windows(2).rev() {
            if w[0] > w[1] {
                out.push((w[1], w[0]));
            }
        }
    }
    out
}

/// Integral estimate with an error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = r * XGK[j];
        let s = f(c - x)? + f(c + x)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * r, ((k - g) * r).abs()))
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature to absolute tolerance `tol`.
pub fn integrate_adaptive<F>(
    op: &'static str,
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    const MAX_SEGMENTS: usize = 2000;
    if lo == hi {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let (v, e) = gk15(&mut f, lo, hi)?;
    let mut segs = vec![(lo, hi, v, e)];
    let (mut total, mut err) = (v, e);
    loop {
        if !total.is_finite() {
            return Err(Error::NonConvergence {
                op,
                estimate: total,
                error_bound: err,
            });
        }
        if err <= tol || err <= 1e-15 * total.abs() {
            return Ok(Estimate {
                value: total,
                error: err,
            });
        }
        let (i, _) =
            segs.iter().enumerate().fold(
                (0, -1.0),
                |best, (i, s)| if s.3 > best.1 { (i, s.3) } else { best },
            );
        let (a, b, sv, se) = segs.swap_remove(i);
        let m = 0.5 * (a + b);
        if segs.len() >= MAX_SEGMENTS || m <= a || m >= b {
            return Err(Error::NonConvergence {
                op,
                estimate: total,
                error_bound: err,
            });
        }
        let (v1, e1) = gk15(&mut f, a, m)?;
        let (v2, e2) = gk15(&mut f, m, b)?;
        total += v1 + v2 - sv;
        err += e1 + e2 - se;
        segs.push((a, m, v1, e1));
        segs.push((m, b, v2, e2));
        // refresh the running sums now and then to stop drift
        if segs.len() % 64 == 0 {
            total = segs.iter().map(|s| s.2).sum();
            err = segs.iter().map(|s| s.3).sum();
        }
    }
}

/// `f′(x)` for `f` defined on `[lo, hi]`: Richardson-extrapolated central
/// differences with steps `h`, `h/2`, or a one-sided second-order stencil
/// extrapolated over `h`, `h/2`, `h/4` when `x` is within `h` of an end.
pub fn derivative<F: Fn(f64) -> Result<f64>>(
    f: &F,
    x: f64,
    lo: f64,
    hi: f64,
    h: f64,
) -> Result<f64> {
    let room = (x - lo).min(hi - x);
    if room >= h {
        let d1 = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let d2 = (f(x + 0.5 * h)? - f(x - 0.5 * h)?) / h;
        return Ok((4.0 * d2 - d1) / 3.0);
    }
    let s = if x - lo < hi - x { 1.0 } else { -1.0 };
    let f0 = f(x)?;
    let one = |h: f64| -> Result<f64> {
        Ok(s * (-3.0 * f0 + 4.0 * f(x + s * h)? - f(x + 2.0 * s * h)?) / (2.0 * h))
    };
    let (d1, d2, d4) = (one(h)?, one(0.5 * h)?, one(0.25 * h)?);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    Ok((8.0 * r2 - r1) / 7.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
}

/// `smooth(t) / √|cos e − cos t|` on `[lo, hi]`, singular at the endpoint `e`.
pub struct SingularIntegrand<F> {
    pub smooth: F,
    pub endpoint: Endpoint,
    pub lo: f64,
    pub hi: f64,
}

impl<F: Fn(f64) -> f64> SingularIntegrand<F> {
    pub fn new(smooth: F, endpoint: Endpoint, lo: f64, hi: f64) -> Result<Self> {
        PolarAngle::new(lo)?;
        PolarAngle::new(hi)?;
        if lo >= hi {
            return Err(Error::domain(
                "SingularIntegrand::new",
                format!("empty interval [{lo}, {hi}]"),
            ));
        }
        Ok(SingularIntegrand {
            smooth,
            endpoint,
            lo,
            hi,
        })
    }

    /// Integrand after `cos t = cos e ∓ s²`, as a function of `s`.
    pub fn substituted(&self, s: f64) -> f64 {
        let (e, sign) = match self.endpoint {
            Endpoint::Lower => (self.lo, -1.0),
            Endpoint::Upper => (self.hi, 1.0),
        };
        let c = (e.cos() + sign * s * s).clamp(-1.0, 1.0);
        let t = c.acos();
        // dt = ∓2s ds / sin t and the kernel is 1/s
        2.0 * (self.smooth)(t) / (1.0 - c * c).sqrt()
    }
}

/// `∫ smooth(t)/√|cos e − cos t| dt`: the half of the interval next to the
/// singular endpoint is integrated in `s` (`cos t = cos e ∓ s²`), the other
/// half directly in `t`.
pub fn integrate_sqrt_singular<F: Fn(f64) -> f64>(
    f: &SingularIntegrand<F>,
    tol: f64,
) -> Result<f64> {
    const OP: &str = "integrate_sqrt_singular";
    if !(tol > 0.0) {
        return Err(Error::domain(
            OP,
            format!("tolerance must be positive, got {tol}"),
        ));
    }
    let m = 0.5 * (f.lo + f.hi);
    let (e, far) = match f.endpoint {
        Endpoint::Lower => (f.lo, (m, f.hi)),
        Endpoint::Upper => (f.hi, (f.lo, m)),
    };
    let ce = e.cos();
    let direct = integrate_adaptive(
        OP,
        |t| Ok((f.smooth)(t) / (ce - t.cos()).abs().sqrt()),
        far.0,
        far.1,
        0.5 * tol,
    )?;
    let s_max = (ce - m.cos()).abs().sqrt();
    let near = integrate_adaptive(OP, |s| Ok(f.substituted(s)), 0.0, s_max, 0.5 * tol)?;
    Ok(direct.value + near.value)
}

/// Discretization settings for the Abel stages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbelConfig {
    /// Gauss–Legendre points per panel.
    pub points: usize,
    pub panels: usize,
    /// Base finite-difference step in cosine units.
    pub step: f64,
}

impl Default for AbelConfig {
    fn default() -> Self {
        AbelConfig {
            points: 20,
            panels: 4,
            step: 1e-3,
        }
    }
}

/// The Abel stages for one south cap `{φ ≥ α}`, `a = cos α`, in cosine
/// coordinates. North caps are handled by the callers through reflection.
pub(crate) struct SouthAbel {
    field: ExternalField,
    pub a: f64,
    rule: Arc<GaussLegendre>,
    panels: Vec<(f64, f64)>,
    theta_panels: Vec<(f64, f64)>,
    step: f64,
}

impl SouthAbel {
    pub fn new(field: ExternalField, a: f64, cfg: &AbelConfig) -> Self {
        SouthAbel {
            field,
            a,
            rule: GaussLegendre::cached(cfg.points),
            panels: uniform_panels(0.0, 1.0, cfg.panels),
            theta_panels: uniform_panels(0.0, FRAC_PI_2, cfg.panels),
            step: cfg.step,
        }
    }

    fn k(&self, x: f64) -> Result<f64> {
        let w = 1.0 + x;
        self.rule.integrate_panels(&self.panels, |s| {
            self.field.at_x3((-1.0 + (1.0 - s * s) * w).max(-1.0))
        })
    }

    /// `g̃(x) = g(acos x)`.
    pub fn g(&self, x: f64) -> Result<f64> {
        let k = self.k(x)?;
        let kp = derivative(&|z| self.k(z), x, -1.0, 1.0, self.step)?;
        Ok(-(1.0 - x).max(0.0).sqrt() / (4.0 * PI) * (k + 2.0 * (1.0 + x) * kp))
    }

    /// `g̃(x) / √(1 − x)`.
    fn g_reduced(&self, x: f64) -> Result<f64> {
        let k = self.k(x)?;
        let kp = derivative(&|z| self.k(z), x, -1.0, 1.0, self.step)?;
        Ok(-(k + 2.0 * (1.0 + x) * kp) / (4.0 * PI))
    }

    pub fn f_stage(&self, y: f64) -> Result<f64> {
        if self.a == 1.0 {
            // L(y) = √d·m(y) with m smooth, so F = (4/π)(m − d·m′) stays
            // regular at the pole.
            let m = |z: f64| -> Result<f64> {
                let d = 1.0 - z;
                self.rule.integrate_panels(&self.theta_panels, |th| {
                    let (s, c) = th.sin_cos();
                    Ok(c * c * self.g_reduced((z + s * s * d).min(1.0))?)
                })
            };
            let mp = derivative(&m, y, -1.0, 1.0, self.step)?;
            return Ok(4.0 / PI * (m(y)? - (1.0 - y) * mp));
        }
        f_stage_with(
            &|x| self.g(x),
            self.a,
            y,
            &self.rule,
            &self.theta_panels,
            self.step,
        )
    }

    /// Robin constant of the cap from `H(−1) = 2√(1+a) L(−1)`.
    pub fn robin_constant(&self, alpha: f64) -> Result<f64> {
        let l = l_integral(&|x| self.g(x), self.a, -1.0, &self.rule, &self.theta_panels)?;
        let h = 2.0 * (1.0 + self.a).sqrt() * l;
        Ok(PI / (alpha.sin() + PI - alpha) * (1.0 - 4.0 * h))
    }
}

// L(y) with σ = sin θ, which keeps the integrand smooth when a = 1.
fn l_integral<G: Fn(f64) -> Result<f64>>(
    g: &G,
    a: f64,
    y: f64,
    rule: &GaussLegendre,
    panels: &[(f64, f64)],
) -> Result<f64> {
    let d = a - y;
    rule.integrate_panels(panels, |th| {
        let s = th.sin();
        Ok(g((y + s * s * d).min(1.0))? * th.cos())
    })
}

fn f_stage_with<G: Fn(f64) -> Result<f64>>(
    g: &G,
    a: f64,
    y: f64,
    rule: &GaussLegendre,
    panels: &[(f64, f64)],
    step: f64,
) -> Result<f64> {
    let d = a - y;
    let l = l_integral(g, a, y, rule, panels)?;
    let lp = derivative(&|z| l_integral(g, a, z, rule, panels), y, -1.0, a, step)?;
    Ok(2.0 / PI * (l / d.sqrt() - 2.0 * d.sqrt() * lp))
}

fn strictly_inside(op: &'static str, cap: &SphericalCap, t: f64) -> Result<()> {
    let (lo, hi) = cap.interval();
    let t = PolarAngle::new(t)?.value();
    let inside = match cap.orientation() {
        Orientation::SouthCentered => t > lo || (cap.is_full_sphere() && t >= lo),
        Orientation::NorthCentered => t < hi || (cap.is_full_sphere() && t <= hi),
    } && (lo..=hi).contains(&t);
    if !inside {
        return Err(Error::domain(
            op,
            format!("φ = {t} is not inside the cap {cap:?}"),
        ));
    }
    Ok(())
}

/// `g(t)`, the first Abel stage applied to the field, at `t` inside the cap.
pub fn abel_stage_g(field: &ExternalField, t: f64, cap: &SphericalCap) -> Result<f64> {
    abel_stage_g_with(field, t, cap, &AbelConfig::default())
}

pub fn abel_stage_g_with(
    field: &ExternalField,
    t: f64,
    cap: &SphericalCap,
    cfg: &AbelConfig,
) -> Result<f64> {
    strictly_inside("abel_stage_g", cap, t)?;
    match cap.orientation() {
        Orientation::SouthCentered => {
            SouthAbel::new(field.clone(), cap.alpha().cos(), cfg).g(t.cos())
        }
        Orientation::NorthCentered => {
            let m = field.mirrored();
            let r = cap.reflected();
            Ok(-SouthAbel::new(m, r.alpha().cos(), cfg).g((PI - t).cos())?)
        }
    }
}

/// `F(φ)`, the second Abel stage applied to `g`, at `φ` inside the cap and at
/// least 1e−9 from its rim.
pub fn abel_stage_f<G>(g: G, phi: f64, cap: &SphericalCap) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    abel_stage_f_with(g, phi, cap, &AbelConfig::default())
}

pub fn abel_stage_f_with<G>(g: G, phi: f64, cap: &SphericalCap, cfg: &AbelConfig) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    const OP: &str = "abel_stage_F";
    strictly_inside(OP, cap, phi)?;
    if cap.rim_distance(phi) < 1e-9 {
        return Err(Error::domain(
            OP,
            format!("φ = {phi} is within 1e−9 of the cap rim"),
        ));
    }
    let rule = GaussLegendre::cached(cfg.points);
    let panels = uniform_panels(0.0, FRAC_PI_2, cfg.panels);
    match cap.orientation() {
        Orientation::SouthCentered => {
            let gx = |x: f64| g(x.clamp(-1.0, 1.0).acos());
            f_stage_with(&gx, cap.alpha().cos(), phi.cos(), &rule, &panels, cfg.step)
        }
        Orientation::NorthCentered => {
            // F_north^g(φ) = F_south^{g_r}(π − φ) with g_r(s) = −g(π − s)
            let r = cap.reflected();
            let gx = |x: f64| Ok(-g(PI - x.clamp(-1.0, 1.0).acos())?);
            f_stage_with(
                &gx,
                r.alpha().cos(),
                (PI - phi).cos(),
                &rule,
                &panels,
                cfg.step,
            )
        }
    }
}
