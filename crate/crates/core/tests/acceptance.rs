//! Acceptance criteria. Each criterion prints one `PASS`/`FAIL` line with its
//! measured figures and wall time; the test fails if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use capfield::{
    capacity_south_cap, density_general, discrete_energy_minimize, ffunctional_pointcharge,
    gonchar_heights, minimize_ffunctional, nofield_density, nystrom_solve, pointcharge_density,
    quadratic_density, solve_support_northpole, solve_support_pointcharge, solve_support_quadratic,
    total_mass, verify_equilibrium_with, ClosedForm, ExternalField, PhiGrid, Spacing, SphericalCap,
    VerifyConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: u32, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "criterion {id}: {} {} [{:.3} s, budget {:.3} s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

const POINT_CHARGES: [(f64, f64); 4] = [(1.0, 2.0), (1.0, 0.5), (2.0, 1.5), (0.5, 2.2)];
const QUADRATIC: (f64, f64, f64) = (1.0, 2.5, 2.0);
const NOFIELD_ALPHAS: [f64; 4] = [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0];

fn c1() -> Outcome {
    let half = capacity_south_cap(PI / 2.0).unwrap();
    let zero = capacity_south_cap(0.0).unwrap();
    let e = (half - (0.5 + 1.0 / PI)).abs();
    Outcome {
        pass: e <= 1e-12 && zero == 1.0,
        detail: format!("|cap(π/2) − (1/2 + 1/π)| = {e:.2e}, cap(0) = {zero}"),
    }
}

fn c2() -> Outcome {
    let g = gonchar_heights(1.0).unwrap();
    let ep = (g.h_plus - (3.0 + 5f64.sqrt()) / 2.0).abs();
    let em = (g.h_minus - (5.0 - 17f64.sqrt()) / 4.0).abs();
    Outcome {
        pass: ep <= 1e-10 && em <= 1e-10,
        detail: format!("h+ error {ep:.2e}, h− error {em:.2e}"),
    }
}

fn c3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (q, h) in POINT_CHARGES {
        let root = solve_support_pointcharge(q, h).unwrap().alpha0();
        let min = minimize_ffunctional(|a| ffunctional_pointcharge(q, h, a), 0.0, PI - 1e-6, 1e-10)
            .unwrap()
            .alpha0();
        let d = (root - min).abs();
        worst = worst.max(d);
        parts.push(format!("({q},{h}): α₀={root:.9} Δ={d:.1e}"));
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: parts.join("; "),
    }
}

fn c4() -> Outcome {
    let mut worst: f64 = 0.0;
    for q in [0.5, 1.0, 2.0] {
        let np = solve_support_northpole(q).unwrap().alpha0();
        for h in [1.0 - 1e-9, 1.0 + 1e-9] {
            let pc = solve_support_pointcharge(q, h).unwrap().alpha0();
            worst = worst.max((np - pc).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("max |Δα₀| = {worst:.2e}"),
    }
}

fn interior_grid(cap: &SphericalCap, n: usize) -> PhiGrid {
    let (lo, hi) = cap.interval();
    PhiGrid::open(lo, hi, n, Spacing::BoundaryClustered).unwrap()
}

fn c5() -> Outcome {
    let (q, h) = (1.0, 2.0);
    let s = solve_support_pointcharge(q, h).unwrap();
    let grid = interior_grid(&s.cap(), 64);
    let field = ExternalField::point_charge(q, h).unwrap();
    let p = density_general(&field, &s.cap(), &grid).unwrap();
    let e_pc = grid
        .nodes()
        .iter()
        .zip(p.values())
        .map(|(&x, v)| (v - pointcharge_density(q, h, s.alpha0(), x).unwrap().0).abs())
        .fold(0.0, f64::max);

    let (a, b, c) = QUADRATIC;
    let s = solve_support_quadratic(a, b, c).unwrap();
    let grid = interior_grid(&s.cap(), 64);
    let field = ExternalField::quadratic(a, b, c).unwrap();
    let p = density_general(&field, &s.cap(), &grid).unwrap();
    let e_q = grid
        .nodes()
        .iter()
        .zip(p.values())
        .map(|(&x, v)| (v - quadratic_density(a, b, c, s.alpha0(), x).unwrap().0).abs())
        .fold(0.0, f64::max);
    Outcome {
        pass: e_pc <= 1e-5 && e_q <= 1e-5,
        detail: format!("point charge max error {e_pc:.2e}, quadratic max error {e_q:.2e}"),
    }
}

fn shipped() -> Vec<ClosedForm> {
    let mut v: Vec<ClosedForm> = NOFIELD_ALPHAS
        .iter()
        .map(|&alpha| ClosedForm::NoField { alpha })
        .collect();
    for (q, h) in POINT_CHARGES {
        let alpha0 = solve_support_pointcharge(q, h).unwrap().alpha0();
        v.push(ClosedForm::PointCharge { q, h, alpha0 });
    }
    let alpha0 = solve_support_northpole(1.0).unwrap().alpha0();
    v.push(ClosedForm::NorthPole { q: 1.0, alpha0 });
    let (a, b, c) = QUADRATIC;
    let alpha0 = solve_support_quadratic(a, b, c).unwrap().alpha0();
    v.push(ClosedForm::Quadratic { a, b, c, alpha0 });
    v
}

fn with_alpha(cf: &ClosedForm, alpha: f64) -> ClosedForm {
    match *cf {
        ClosedForm::NoField { .. } => ClosedForm::NoField { alpha },
        ClosedForm::PointCharge { q, h, .. } => ClosedForm::PointCharge {
            q,
            h,
            alpha0: alpha,
        },
        ClosedForm::NorthPole { q, .. } => ClosedForm::NorthPole { q, alpha0: alpha },
        ClosedForm::Quadratic { a, b, c, .. } => ClosedForm::Quadratic {
            a,
            b,
            c,
            alpha0: alpha,
        },
    }
}

fn label(cf: &ClosedForm) -> String {
    match cf {
        ClosedForm::NoField { alpha } => format!("no-field α={alpha:.4}"),
        ClosedForm::PointCharge { q, h, .. } => format!("point-charge ({q},{h})"),
        ClosedForm::NorthPole { q, .. } => format!("north-pole q={q}"),
        ClosedForm::Quadratic { a, b, c, .. } => format!("quadratic ({a},{b},{c})"),
    }
}

fn c6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for cf in shipped() {
        let cap = cf.cap().unwrap();
        let p = cf
            .profile(PhiGrid::for_cap(&cap, 32, Spacing::BoundaryClustered).unwrap())
            .unwrap();
        let m = total_mass(&p).unwrap();
        worst = worst.max((m - 1.0).abs());
        names.push(label(&cf));
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("{} densities, max |mass − 1| = {worst:.2e}", names.len()),
    }
}

fn verify(cf: &ClosedForm, conductor: Option<SphericalCap>) -> capfield::EquilibriumReport {
    let cap = cf.cap().unwrap();
    let grid = PhiGrid::for_cap(&cap, 48, Spacing::BoundaryClustered).unwrap();
    let p = cf.profile(grid).unwrap();
    let cfg = VerifyConfig {
        conductor,
        ..VerifyConfig::default()
    };
    verify_equilibrium_with(&cf.field().unwrap(), &p, 1e-4, &cfg).unwrap()
}

fn c7() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for cf in shipped() {
        let alpha = cf.alpha();
        // a zero field has a nontrivial equilibrium only on a cap conductor
        let conductor = match cf {
            ClosedForm::NoField { alpha } => Some(SphericalCap::south(alpha).unwrap()),
            _ => None,
        };
        let base = verify(&cf, conductor);
        let mut s = format!(
            "{}: dev {:.1e} {}",
            label(&cf),
            base.sup_deviation_on_support,
            if base.passed { "ok" } else { "NOT OK" }
        );
        ok &= base.passed;
        for d in [-0.2, 0.2] {
            let a = alpha + d;
            if a < 0.0 {
                s.push_str(&format!(", α{d:+} n/a"));
                continue;
            }
            let rep = verify(&with_alpha(&cf, a), conductor);
            ok &= !rep.passed;
            s.push_str(&format!(
                ", α{d:+} {}",
                if rep.passed {
                    "PASSED (bad)"
                } else {
                    "rejected"
                }
            ));
        }
        lines.push(s);
    }
    Outcome {
        pass: ok,
        detail: lines.join("; "),
    }
}

fn nofield_nystrom_error(n: usize) -> f64 {
    let al = PI / 3.0;
    let cap = SphericalCap::south(al).unwrap();
    let (p, _) = nystrom_solve(&ExternalField::zero(), &cap, n).unwrap();
    p.grid()
        .nodes()
        .iter()
        .zip(p.values())
        .map(|(&x, &v)| (v / nofield_density(al, x).unwrap() - 1.0).abs())
        .fold(0.0, f64::max)
}

fn c8() -> Outcome {
    let (e64, e128) = (nofield_nystrom_error(64), nofield_nystrom_error(128));
    let (q, h) = (1.0, 2.0);
    let s = solve_support_pointcharge(q, h).unwrap();
    let field = ExternalField::point_charge(q, h).unwrap();
    let (p, _) = nystrom_solve(&field, &s.cap(), 96).unwrap();
    let exact: Vec<f64> = p
        .grid()
        .nodes()
        .iter()
        .map(|&x| pointcharge_density(q, h, s.alpha0(), x).unwrap().0)
        .collect();
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let e_pc = p
        .values()
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;
    Outcome {
        pass: e64 <= 0.01 && e64 / e128 >= 2.0 && e_pc <= 0.01,
        detail: format!(
            "no-field rel error n=64 {e64:.2e}, n=128 {e128:.2e} (ratio {:.2}); point charge n=96 {e_pc:.2e} of sup f",
            e64 / e128
        ),
    }
}

fn c9() -> Outcome {
    let n = 64;
    let spacing = PI / n as f64;
    let (q, h) = (1.0, 2.0);
    let a0 = solve_support_pointcharge(q, h).unwrap().alpha0();
    let m =
        discrete_energy_minimize(&ExternalField::point_charge(q, h).unwrap(), n, 20_000).unwrap();
    let mut bad = Vec::new();
    for (x, w) in m.ring_angles.iter().zip(&m.weights) {
        if *x < a0 - 2.0 * spacing && *w >= 1e-6 {
            bad.push(format!("charged ring at {x:.3}"));
        }
        if *x > a0 + 2.0 * spacing && *w < 1e-6 {
            bad.push(format!("empty ring at {x:.3}"));
        }
    }
    let first = m
        .ring_angles
        .iter()
        .zip(&m.weights)
        .find(|(_, w)| **w >= 1e-6)
        .map(|(x, _)| *x)
        .unwrap_or(f64::NAN);
    let full = discrete_energy_minimize(&ExternalField::point_charge(1.0, 3.0).unwrap(), n, 20_000)
        .unwrap();
    let min_full = full.weights.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome {
        pass: bad.is_empty() && min_full >= 1e-6,
        detail: format!(
            "(1,2): first charged ring {first:.4} vs α₀ {a0:.4}, multiplier {:.6}{}; (1,3): min weight {min_full:.2e}",
            m.multiplier,
            if bad.is_empty() { String::new() } else { format!(" [{}]", bad.join(", ")) }
        ),
    }
}

fn slope(f: impl Fn(f64) -> f64) -> f64 {
    // least-squares slope of log f against log ε
    let eps = [1e-2f64, 1e-3, 1e-4, 1e-5];
    let pts: Vec<(f64, f64)> = eps.iter().map(|&e| (e.ln(), f(e).ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

fn c10() -> Outcome {
    let (q, h) = (1.0, 2.0);
    let a0 = solve_support_pointcharge(q, h).unwrap().alpha0();
    let field = ExternalField::point_charge(q, h).unwrap();
    let eps = [1e-5, 1e-4, 1e-3, 1e-2];
    let pipeline = |alpha: f64| {
        let cap = SphericalCap::south(alpha).unwrap();
        let grid = PhiGrid::from_nodes(eps.iter().map(|e| alpha + e).collect()).unwrap();
        let p = density_general(&field, &cap, &grid).unwrap();
        move |e: f64| p.values()[eps.iter().position(|x| *x == e).unwrap()]
    };
    let s_opt = slope(pipeline(a0));
    let s_off = slope(pipeline(a0 + 0.2));
    let c_opt = slope(|e| pointcharge_density(q, h, a0, a0 + e).unwrap().0);
    let c_off = slope(|e| pointcharge_density(q, h, a0 + 0.2, a0 + 0.2 + e).unwrap().0);
    Outcome {
        pass: s_opt > -0.1 && c_opt > -0.1 && s_off <= -0.45 && c_off <= -0.45,
        detail: format!(
            "slope at α₀: pipeline {s_opt:.3}, closed form {c_opt:.3}; at α₀+0.2: pipeline {s_off:.3}, closed form {c_off:.3}"
        ),
    }
}

// Runs without the libtest harness so that every criterion line is shown.
fn main() {
    let ms = Duration::from_millis;
    let results = [
        run(1, ms(1), c1),
        run(2, ms(1), c2),
        run(3, ms(1000), c3),
        run(4, ms(1000), c4),
        run(5, ms(30_000), c5),
        run(6, ms(10_000), c6),
        run(7, ms(60_000), c7),
        run(8, ms(60_000), c8),
        run(9, ms(120_000), c9),
        run(10, ms(5_000), c10),
    ];
    let failed: Vec<usize> = (0..results.len())
        .filter(|&i| !results[i])
        .map(|i| i + 1)
        .collect();
    if failed.is_empty() {
        println!("all {} criteria passed", results.len());
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
