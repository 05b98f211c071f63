//! Ground truth that uses none of the closed forms: a Nyström solver for the
//! integral equation `U + Q = F_Q` on a given cap, and constrained discrete
//! energy minimization over rings covering the whole sphere.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::equilibrium::{DensityFn, DensityProfile};
use crate::fields::ExternalField;
use crate::geometry::{Orientation, PhiGrid, SphericalCap};
use crate::par::{self, Execution};
use crate::potential::{ring_kernel_offset, ring_kernel_unchecked};
use crate::quadrature::{graded_panels, GaussLegendre};
use crate::{Error, Result};

/// Nyström discretization settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NystromConfig {
    /// Gauss–Legendre points per panel.
    pub points: usize,
    /// Halvings toward the collocation point in the two adjacent elements.
    pub levels: u32,
    pub exec: Execution,
}

impl Default for NystromConfig {
    fn default() -> Self {
        NystromConfig {
            points: 10,
            levels: 40,
            exec: Execution::default(),
        }
    }
}

// Nodes are equispaced in u. On a cap, ξ(u) = α + 2(π − α) sin²(πu/4)
// clusters them at the rim only, and the edge factor s = √(cos α − cos ξ)
// is then a smooth function of u vanishing linearly at the rim. The whole
// sphere has no rim: ξ = πu and s = 1.
struct CapMap {
    alpha: f64,
    span: f64,
    edge: bool,
}

impl CapMap {
    fn new(alpha: f64) -> Self {
        CapMap {
            alpha,
            span: PI - alpha,
            edge: alpha > 0.0,
        }
    }

    fn offset(&self, u: f64) -> f64 {
        if self.edge {
            let s = (FRAC_PI_4 * u).sin();
            2.0 * self.span * s * s
        } else {
            self.span * u
        }
    }

    fn xi(&self, u: f64) -> f64 {
        self.alpha + self.offset(u)
    }

    /// `ξ(u) − ξ(v)` without cancellation.
    fn gap(&self, v: f64, u: f64) -> f64 {
        if self.edge {
            2.0 * self.span * (FRAC_PI_4 * (u - v)).sin() * (FRAC_PI_4 * (u + v)).sin()
        } else {
            self.span * (u - v)
        }
    }

    fn dxi(&self, u: f64) -> f64 {
        if self.edge {
            self.span * FRAC_PI_2 * (FRAC_PI_2 * u).sin()
        } else {
            self.span
        }
    }

    fn s(&self, u: f64) -> f64 {
        if !self.edge {
            return 1.0;
        }
        let d = self.offset(u);
        (2.0 * (self.alpha + d / 2.0).sin() * (d / 2.0).sin())
            .max(0.0)
            .sqrt()
    }

    /// `sin ξ · ξ′(u) / s(u)`, bounded on `[0, 1]`.
    fn jacobian(&self, u: f64) -> f64 {
        let s = self.s(u);
        if s == 0.0 {
            // u → 0 on a cap: s ≈ √(span sin α / 2)·πu/2
            return PI * (self.span * self.alpha.sin() / 2.0).sqrt();
        }
        self.xi(u).sin() * self.dxi(u) / s
    }

    fn u_of(&self, phi: f64) -> f64 {
        let x = ((phi - self.alpha) / self.span).clamp(0.0, 1.0);
        if self.edge {
            4.0 / PI * (x / 2.0).sqrt().asin()
        } else {
            x
        }
    }
}

/// Solves `∫ f(ξ) sin ξ M(φ, ξ) dξ − F_Q = −Q(φ)` on `cap` together with the
/// unit-mass condition. The unknown is `v = f·√(cos α − cos φ)`, represented
/// by its values at `n` nodes equispaced in the clustering variable `u` and
/// interpolated by local cubics, so the rim factor of `f` is part of the
/// ansatz. Returns the density (sampled at
/// the nodes off the rim) and `F_Q`.
pub fn nystrom_solve(
    field: &ExternalField,
    cap: &SphericalCap,
    n: usize,
) -> Result<(DensityProfile, f64)> {
    nystrom_solve_with(field, cap, n, &NystromConfig::default())
}

pub fn nystrom_solve_with(
    field: &ExternalField,
    cap: &SphericalCap,
    n: usize,
    cfg: &NystromConfig,
) -> Result<(DensityProfile, f64)> {
    const OP: &str = "nystrom_solve";
    if n < 16 {
        return Err(Error::domain(OP, format!("need n ≥ 16 nodes, got {n}")));
    }
    let north = cap.orientation() == Orientation::NorthCentered;
    let (sfield, scap) = if north {
        (field.mirrored(), cap.reflected())
    } else {
        (field.clone(), *cap)
    };
    let alpha = scap.alpha();
    if PI - alpha < 1e-6 {
        return Err(Error::SingularSystem { op: OP });
    }
    let map = Arc::new(CapMap::new(alpha));
    let h_inv = (n - 1) as f64;
    let us: Vec<f64> = (0..n).map(|j| j as f64 / (n - 1) as f64).collect();
    let phis: Vec<f64> = us.iter().map(|&u| map.xi(u)).collect();
    let rule = GaussLegendre::cached(cfg.points);

    // ∫ over interval k of M(φ_i, ξ(u)) J(u) times the cardinal functions of
    // the interval's cubic stencil
    let rows = par::try_map_range(cfg.exec, n, |i| -> Result<(Vec<f64>, f64)> {
        let phi = phis[i];
        let mut row = vec![0.0; n + 1];
        for k in 0..n - 1 {
            let (lo, hi) = (us[k], us[k + 1]);
            let panels = if i == k || i == k + 1 {
                graded_panels(lo, hi, us[i], cfg.levels)
            } else {
                vec![(lo, hi)]
            };
            let mut acc = [0.0; 4];
            let mut idx = [0; 4];
            for (pl, ph) in panels {
                let (c, r) = (0.5 * (pl + ph), 0.5 * (ph - pl));
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let u = c + r * x;
                    let delta = map.gap(us[i], u);
                    if delta == 0.0 {
                        continue;
                    }
                    let m = w * r * ring_kernel_offset(phi, map.xi(u), delta) * map.jacobian(u);
                    let card = cardinals(u, k, n, !map.edge);
                    for (j, (node, l)) in card.into_iter().enumerate() {
                        acc[j] += m * l;
                        idx[j] = node;
                    }
                }
            }
            for (node, a) in idx.into_iter().zip(acc) {
                row[node] += a;
            }
        }
        row[n] = -1.0;
        Ok((row, -sfield.evaluate(phi)?))
    })?;
    let mut mass_row = vec![0.0; n + 1];
    for k in 0..n - 1 {
        let (lo, hi) = (us[k], us[k + 1]);
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = c + r * x;
            let m = 2.0 * PI * w * r * map.jacobian(u);
            for (node, l) in cardinals(u, k, n, !map.edge) {
                mass_row[node] += m * l;
            }
        }
    }
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut b = DVector::<f64>::zeros(n + 1);
    for (i, (row, rhs)) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] = v;
        }
        b[i] = rhs;
    }
    for (j, v) in mass_row.iter().enumerate() {
        a[(n, j)] = *v;
    }
    b[n] = 1.0;
    let sol = a.lu().solve(&b).ok_or(Error::SingularSystem { op: OP })?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { op: OP });
    }
    let fq = sol[n];
    let v: Vec<f64> = sol.iter().take(n).copied().collect();
    let mass: f64 = mass_row.iter().zip(&v).map(|(m, x)| m * x).sum();

    let vs = Arc::new(v);
    let south = {
        let map = map.clone();
        move |phi: f64, d: f64| -> Result<f64> {
            if d <= 0.0 && map.edge {
                return Err(Error::domain("density", "density is singular at the rim"));
            }
            let u = map.u_of(phi);
            let k = ((u * h_inv).floor() as usize).min(n - 2);
            let val: f64 = cardinals(u, k, n, !map.edge)
                .iter()
                .map(|(j, l)| l * vs[*j])
                .sum();
            let s = if !map.edge {
                1.0
            } else if d > 0.0 {
                d.sqrt()
            } else {
                map.s(u)
            };
            Ok(val / s)
        }
    };
    let density: DensityFn = if north {
        Arc::new(move |phi, d| south(PI - phi, d))
    } else {
        Arc::new(south)
    };
    let interior = PhiGrid::from_nodes(phis[1..].to_vec())?;
    let grid = if north {
        interior.reflected()
    } else {
        interior
    };
    let profile = DensityProfile::with_mass(*cap, grid, fq, density, mass, cfg.exec)?;
    Ok((profile, fq))
}

// Cubic interpolation weights at `u` in interval `k` of `n` equispaced
// nodes on [0, 1], as (node, weight) pairs. Stencils are centred; the
// unknown is even about u = 1 (a pole), so nodes past it are mirrored. The
// start u = 0 is mirrored too when it is a pole, else the stencil is
// one-sided there.
fn cardinals(u: f64, k: usize, n: usize, even_at_start: bool) -> [(usize, f64); 4] {
    let last = (n - 1) as i64;
    let j0 = if even_at_start || k > 0 {
        k as i64 - 1
    } else {
        0
    };
    let w = lagrange4(u * last as f64 - j0 as f64);
    std::array::from_fn(|j| {
        let node = j0 + j as i64;
        let node = if node < 0 {
            -node
        } else if node > last {
            2 * last - node
        } else {
            node
        };
        (node as usize, w[j])
    })
}

// Cubic Lagrange cardinal functions on the equispaced nodes 0, 1, 2, 3.
fn lagrange4(t: f64) -> [f64; 4] {
    let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

/// Rings (latitude bands) with weights: a probability measure on the sphere
/// in discretized form, plus the optimality data of the minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    /// Band midpoints.
    pub ring_angles: Vec<f64>,
    pub ring_halfwidths: Vec<f64>,
    pub weights: Vec<f64>,
    /// `(K w + q)_i`, the discrete weighted potential of each band.
    pub potential: Vec<f64>,
    /// Mean of `potential` over bands with weight above 1e−6.
    pub multiplier: f64,
    pub energy: f64,
    pub iterations: usize,
    pub projected_gradient_norm: f64,
}

impl DiscreteMeasure {
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > threshold)
            .collect()
    }
}

/// Settings for [`discrete_energy_minimize_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyConfig {
    /// Halvings toward band edges in the near-field integrals.
    pub levels: u32,
    /// Stop once the projected gradient norm drops below this.
    pub tolerance: f64,
    pub exec: Execution,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            levels: 14,
            tolerance: 1e-10,
            exec: Execution::default(),
        }
    }
}

pub fn discrete_energy_minimize(
    field: &ExternalField,
    n: usize,
    iterations: usize,
) -> Result<DiscreteMeasure> {
    discrete_energy_minimize_with(field, n, iterations, &EnergyConfig::default())
}

/// Minimizes `wᵀKw + 2qᵀw` over the probability simplex by projected gradient
/// with step `1/L`, `L = 2λ_max(K)`. The sphere is cut into `n` bands of equal
/// polar width; `w_i` is the mass of band `i`, spread uniformly over the band
/// in surface measure. `K` holds the exact band-to-band interaction energies
/// (ring kernel integrated over both bands, graded toward the log-singular
/// shared edges), so no self-energy regularization is needed.
pub fn discrete_energy_minimize_with(
    field: &ExternalField,
    n: usize,
    iterations: usize,
    cfg: &EnergyConfig,
) -> Result<DiscreteMeasure> {
    const OP: &str = "discrete_energy_minimize";
    if n < 32 {
        return Err(Error::domain(
            OP,
            format!("need at least 32 rings, got {n}"),
        ));
    }
    let edges: Vec<f64> = (0..=n)
        .map(|i| if i == n { PI } else { PI * i as f64 / n as f64 })
        .collect();
    let dy: Vec<f64> = (0..n).map(|i| band_dy(edges[i], edges[i + 1])).collect();
    let k = band_matrix(&edges, &dy, cfg.levels, cfg.exec);
    let rule = GaussLegendre::cached(16);
    let q = par::try_map_range(cfg.exec, n, |i| {
        let v = rule.integrate(edges[i], edges[i + 1], |p| Ok(field.evaluate(p)? * p.sin()))?;
        Ok::<f64, Error>(v / dy[i])
    })?;

    let kmul = |w: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| k[i * n + j] * w[j]).sum())
            .collect()
    };
    // power iteration from a deterministic start
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64)
        .collect();
    let mut lam = 0.0;
    for _ in 0..200 {
        let y = kmul(&x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let next = y.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
            / x.iter().map(|v| v * v).sum::<f64>();
        x = y.into_iter().map(|v| v / norm).collect();
        if (next - lam).abs() <= 1e-12 * next {
            lam = next;
            break;
        }
        lam = next;
    }
    let l = 2.0 * lam * 1.01;

    let mut w = vec![1.0 / n as f64; n];
    let mut pg = f64::INFINITY;
    let mut it = 0;
    let mut kw = kmul(&w);
    while it < iterations {
        it += 1;
        let step: Vec<f64> = (0..n).map(|i| w[i] - 2.0 * (kw[i] + q[i]) / l).collect();
        let next = project_simplex(&step);
        pg = l * next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        w = next;
        kw = kmul(&w);
        if pg <= cfg.tolerance {
            break;
        }
    }
    let potential: Vec<f64> = (0..n).map(|i| kw[i] + q[i]).collect();
    let on: Vec<f64> = (0..n)
        .filter(|&i| w[i] > 1e-6)
        .map(|i| potential[i])
        .collect();
    let multiplier = on.iter().sum::<f64>() / on.len().max(1) as f64;
    let energy = (0..n).map(|i| w[i] * (kw[i] + 2.0 * q[i])).sum();
    let m = DiscreteMeasure {
        ring_angles: (0..n).map(|i| 0.5 * (edges[i] + edges[i + 1])).collect(),
        ring_halfwidths: (0..n).map(|i| 0.5 * (edges[i + 1] - edges[i])).collect(),
        weights: w,
        potential,
        multiplier,
        energy,
        iterations: it,
        projected_gradient_norm: pg,
    };
    if pg > cfg.tolerance {
        return Err(Error::EnergyNotConverged(Box::new(m)));
    }
    Ok(m)
}

fn band_dy(lo: f64, hi: f64) -> f64 {
    // cos lo − cos hi
    2.0 * ((lo + hi) / 2.0).sin() * ((hi - lo) / 2.0).sin()
}

// K_ij = (1/(2π Δy_i Δy_j)) ∫_{band i} ∫_{band j} M(φ, ξ) sin φ sin ξ dξ dφ, row-major.
fn band_matrix(edges: &[f64], dy: &[f64], levels: u32, exec: Execution) -> Vec<f64> {
    let n = dy.len();
    let g8 = GaussLegendre::cached(8);
    let rows: Vec<Vec<f64>> = par::map_range(exec, n, |i| {
        let (pi0, pi1) = (edges[i], edges[i + 1]);
        (0..n)
            .map(|j| {
                let (xj0, xj1) = (edges[j], edges[j + 1]);
                let val = if i.abs_diff(j) >= 2 {
                    let mut s = 0.0;
                    let (pc, pr) = (0.5 * (pi0 + pi1), 0.5 * (pi1 - pi0));
                    let (xc, xr) = (0.5 * (xj0 + xj1), 0.5 * (xj1 - xj0));
                    for (a, wa) in g8.nodes.iter().zip(&g8.weights) {
                        let p = pc + pr * a;
                        for (b, wb) in g8.nodes.iter().zip(&g8.weights) {
                            let x = xc + xr * b;
                            s += wa * wb * p.sin() * x.sin() * ring_kernel_unchecked(p, x);
                        }
                    }
                    s * pr * xr
                } else {
                    near_band(pi0, pi1, xj0, xj1, levels, &g8)
                };
                val / (2.0 * PI * dy[i] * dy[j])
            })
            .collect()
    });
    rows.into_iter().flatten().collect()
}

// Self or neighbouring bands: outer points graded toward the band edges,
// inner integral graded toward the outer point (or the shared edge).
fn near_band(pi0: f64, pi1: f64, xj0: f64, xj1: f64, levels: u32, rule: &GaussLegendre) -> f64 {
    let mid = 0.5 * (pi0 + pi1);
    let mut outer = graded_panels(pi0, mid, pi0, levels);
    outer.extend(graded_panels(mid, pi1, pi1, levels));
    let mut total = 0.0;
    for (lo, hi) in outer {
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (a, wa) in rule.nodes.iter().zip(&rule.weights) {
            let p = c + r * a;
            let inner_panels = graded_panels(xj0, xj1, p.clamp(xj0, xj1), levels);
            let mut inner = 0.0;
            for (il, ih) in inner_panels {
                let (ic, ir) = (0.5 * (il + ih), 0.5 * (ih - il));
                for (b, wb) in rule.nodes.iter().zip(&rule.weights) {
                    let x = ic + ir * b;
                    if x != p {
                        inner += wb * ir * x.sin() * ring_kernel_unchecked(p, x);
                    }
                }
            }
            total += wa * r * p.sin() * inner;
        }
    }
    total
}

/// Euclidean projection onto `{w ≥ 0, Σw = 1}` (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
