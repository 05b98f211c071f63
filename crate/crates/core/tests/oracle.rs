use std::f64::consts::PI;

use capfield::{
    discrete_energy_minimize, nystrom_solve, solve_support_northpole, solve_support_pointcharge,
    solve_support_quadratic, ClosedForm, ExternalField, SupportSolution,
};

fn canonical() -> Vec<(ExternalField, SupportSolution)> {
    vec![
        (
            ExternalField::point_charge(1.0, 2.0).unwrap(),
            solve_support_pointcharge(1.0, 2.0).unwrap(),
        ),
        (
            ExternalField::quadratic(1.0, 2.5, 2.0).unwrap(),
            solve_support_quadratic(1.0, 2.5, 2.0).unwrap(),
        ),
    ]
}

#[test]
fn kkt_conditions_hold_at_discrete_minimizer() {
    for (field, sol) in canonical() {
        let m = discrete_energy_minimize(&field, 64, 20_000).unwrap();
        let fq = sol.robin_constant;
        assert!(
            (m.multiplier - fq).abs() <= 0.01 * fq,
            "{} vs {fq}",
            m.multiplier
        );
        for (w, p) in m.weights.iter().zip(&m.potential) {
            if *w > 1e-6 {
                assert!((p - m.multiplier).abs() <= 0.01 * fq);
            } else {
                assert!(*p >= m.multiplier - 0.01 * fq);
            }
        }
        assert!(m.weights.iter().all(|w| *w >= 0.0));
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

fn shipped() -> Vec<ClosedForm> {
    let pc = |q, h| ClosedForm::PointCharge {
        q,
        h,
        alpha0: solve_support_pointcharge(q, h).unwrap().alpha0(),
    };
    let mut v = vec![
        ClosedForm::NoField { alpha: PI / 6.0 },
        ClosedForm::NoField { alpha: PI / 3.0 },
        ClosedForm::NoField { alpha: PI / 2.0 },
        ClosedForm::NoField {
            alpha: 2.0 * PI / 3.0,
        },
        pc(1.0, 2.0),
        pc(1.0, 0.5),
        pc(2.0, 1.5),
        pc(0.5, 2.2),
        ClosedForm::NorthPole {
            q: 1.0,
            alpha0: solve_support_northpole(1.0).unwrap().alpha0(),
        },
    ];
    let alpha0 = solve_support_quadratic(1.0, 2.5, 2.0).unwrap().alpha0();
    v.push(ClosedForm::Quadratic {
        a: 1.0,
        b: 2.5,
        c: 2.0,
        alpha0,
    });
    v
}

fn nystrom_error(cf: &ClosedForm, n: usize) -> f64 {
    let (p, _) = nystrom_solve(&cf.field().unwrap(), &cf.cap().unwrap(), n).unwrap();
    let exact: Vec<f64> = p
        .grid()
        .nodes()
        .iter()
        .map(|&x| cf.density(x).unwrap())
        .collect();
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    p.values()
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn nystrom_converges_at_least_first_order() {
    for cf in shipped() {
        let e: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| nystrom_error(&cf, n))
            .collect();
        for w in e.windows(2) {
            assert!(w[0] / w[1] >= 2.0, "{cf:?}: {e:?}");
        }
    }
}

#[test]
fn nystrom_robin_constants() {
    for cf in shipped() {
        let (_, fq) = nystrom_solve(&cf.field().unwrap(), &cf.cap().unwrap(), 96).unwrap();
        let exact = cf.robin_constant().unwrap();
        assert!((fq - exact).abs() <= 1e-3, "{cf:?}: {fq} vs {exact}");
    }
}
