use std::f64::consts::PI;

use capfield::{
    capacity_south_cap, density_general, discrete_energy_minimize, ffunctional_numeric,
    ffunctional_pointcharge, ffunctional_quadratic, gonchar_heights, minimize_ffunctional,
    nystrom_solve, potential_table, solve_support_northpole, solve_support_pointcharge,
    solve_support_quadratic, verify_equilibrium_with, ClosedForm, DensityProfile, Execution,
    ExternalField, PhiGrid, Spacing, SphericalCap, SupportSolution, VerifyConfig,
};

use crate::args::{
    CapArgs, Command, DensityChoice, FieldArgs, FieldChoice, OracleKind, SupportChoice,
};
use crate::output::{density_table, FieldDesc, Summary};
use crate::CliError;

/// Everything a command produces; written out by the caller in one go.
pub struct Outcome {
    pub summary: Summary,
    pub table: Option<String>,
    /// Set when the computation succeeded but its check did not pass.
    pub failure: Option<String>,
}

impl Outcome {
    fn new(summary: Summary) -> Self {
        Outcome {
            summary,
            table: None,
            failure: None,
        }
    }
}

/// Upper end of F-functional searches; the full interval ends at a point cap.
const ALPHA_MAX: f64 = PI - 1e-6;

pub struct Field {
    pub field: ExternalField,
    pub desc: FieldDesc,
    choice: FieldChoice,
}

fn need(v: Option<f64>, flag: &str, kind: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --field {kind}")))
}

impl Field {
    pub fn from_args(a: &FieldArgs) -> Result<Self, CliError> {
        let extra = |flags: &[(&str, bool)]| -> Result<(), CliError> {
            match flags.iter().find(|(_, set)| *set) {
                Some((f, _)) => Err(CliError::Usage(format!(
                    "--{f} does not apply to this field"
                ))),
                None => Ok(()),
            }
        };
        let pc = [("q", a.q.is_some()), ("h", a.h.is_some())];
        let quad = [
            ("a", a.a.is_some()),
            ("b", a.b.is_some()),
            ("c", a.c.is_some()),
        ];
        let tab = [("table", a.table.is_some())];
        let (field, desc) = match a.field {
            FieldChoice::Zero => {
                extra(&[pc.as_slice(), &quad, &tab].concat())?;
                (
                    ExternalField::zero(),
                    FieldDesc {
                        kind: "zero",
                        ..FieldDesc::default()
                    },
                )
            }
            FieldChoice::PointCharge => {
                extra(&[quad.as_slice(), &tab].concat())?;
                let (q, h) = (
                    need(a.q, "q", "point-charge")?,
                    need(a.h, "h", "point-charge")?,
                );
                let desc = FieldDesc {
                    kind: "point-charge",
                    q: Some(q),
                    h: Some(h),
                    ..FieldDesc::default()
                };
                (ExternalField::point_charge(q, h)?, desc)
            }
            FieldChoice::Quadratic => {
                extra(&[pc.as_slice(), &tab].concat())?;
                let (qa, qb, qc) = (
                    need(a.a, "a", "quadratic")?,
                    need(a.b, "b", "quadratic")?,
                    need(a.c, "c", "quadratic")?,
                );
                let desc = FieldDesc {
                    kind: "quadratic",
                    a: Some(qa),
                    b: Some(qb),
                    c: Some(qc),
                    ..FieldDesc::default()
                };
                (ExternalField::quadratic(qa, qb, qc)?, desc)
            }
            FieldChoice::Tabulated => {
                extra(&[pc.as_slice(), &quad].concat())?;
                let path = a.table.as_ref().ok_or_else(|| {
                    CliError::Usage("--table is required for --field tabulated".into())
                })?;
                let desc = FieldDesc {
                    kind: "tabulated",
                    table: Some(path.display().to_string()),
                    ..FieldDesc::default()
                };
                (ExternalField::from_csv(path)?, desc)
            }
        };
        Ok(Field {
            field,
            desc,
            choice: a.field,
        })
    }

    fn ffunctional(&self, alpha: f64, numeric: bool) -> capfield::Result<(f64, &'static str)> {
        let d = &self.desc;
        match self.choice {
            FieldChoice::PointCharge if !numeric => Ok((
                ffunctional_pointcharge(d.q.unwrap(), d.h.unwrap(), alpha)?,
                "closed form",
            )),
            FieldChoice::Quadratic if !numeric => Ok((
                ffunctional_quadratic(d.a.unwrap(), d.b.unwrap(), d.c.unwrap(), alpha)?,
                "closed form",
            )),
            FieldChoice::Zero if !numeric => Ok((
                ClosedForm::NoField { alpha }.robin_constant()?,
                "closed form",
            )),
            _ => Ok((ffunctional_numeric(&self.field, alpha)?, "quadrature")),
        }
    }

    fn support(&self, method: SupportChoice) -> capfield::Result<SupportSolution> {
        let d = &self.desc;
        match (self.choice, method) {
            (FieldChoice::PointCharge, SupportChoice::Auto) => {
                let (q, h) = (d.q.unwrap(), d.h.unwrap());
                if h == 1.0 {
                    solve_support_northpole(q)
                } else {
                    solve_support_pointcharge(q, h)
                }
            }
            (FieldChoice::Quadratic, SupportChoice::Auto) => {
                solve_support_quadratic(d.a.unwrap(), d.b.unwrap(), d.c.unwrap())
            }
            _ => minimize_ffunctional(|a| Ok(self.ffunctional(a, false)?.0), 0.0, ALPHA_MAX, 1e-10),
        }
    }

    fn closed_form(&self, alpha: f64) -> Option<ClosedForm> {
        let d = &self.desc;
        match self.choice {
            FieldChoice::Zero => Some(ClosedForm::NoField { alpha }),
            FieldChoice::PointCharge if d.h == Some(1.0) => Some(ClosedForm::NorthPole {
                q: d.q.unwrap(),
                alpha0: alpha,
            }),
            FieldChoice::PointCharge => Some(ClosedForm::PointCharge {
                q: d.q.unwrap(),
                h: d.h.unwrap(),
                alpha0: alpha,
            }),
            FieldChoice::Quadratic => Some(ClosedForm::Quadratic {
                a: d.a.unwrap(),
                b: d.b.unwrap(),
                c: d.c.unwrap(),
                alpha0: alpha,
            }),
            FieldChoice::Tabulated => None,
        }
    }

    /// Density on the requested cap (the support by default) and how it was
    /// obtained.
    fn profile(
        &self,
        cap_args: &CapArgs,
        nodes: usize,
    ) -> Result<(DensityProfile, &'static str, Option<SupportSolution>), CliError> {
        let (alpha, support) = match cap_args.alpha {
            Some(a) => (a, None),
            None => {
                let s = self.support(SupportChoice::Auto)?;
                (s.alpha0(), Some(s))
            }
        };
        if alpha >= PI {
            return Err(CliError::Usage("--alpha must be below π".into()));
        }
        let cap = SphericalCap::south(alpha)?;
        let grid = PhiGrid::for_cap(&cap, nodes, Spacing::BoundaryClustered)?;
        let closed = match cap_args.method {
            DensityChoice::Auto => self.closed_form(alpha),
            DensityChoice::Pipeline => None,
        };
        Ok(match closed {
            Some(cf) => (cf.profile(grid)?, "closed form", support),
            None => (
                density_general(&self.field, &cap, &grid)?.interpolated(64, Execution::Parallel)?,
                "Abel pipeline",
                support,
            ),
        })
    }
}

fn potential_rows(
    field: &ExternalField,
    profile: &DensityProfile,
) -> Result<Vec<(f64, f64, f64, f64)>, CliError> {
    let samples = potential_table(field, profile, profile.grid().nodes(), Execution::Parallel)?;
    Ok(samples
        .iter()
        .map(|s| (s.phi, s.f.unwrap_or(0.0), s.q, s.u))
        .collect())
}

fn max_deviation(rows: &[(f64, f64, f64, f64)], fq: f64) -> f64 {
    rows.iter()
        .map(|r| (r.3 + r.2 - fq).abs())
        .fold(0.0, f64::max)
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Capacity { alpha, .. } => {
            let mut s = Summary::new("capacity");
            s.alpha0 = Some(*alpha);
            s.value("capacity", capacity_south_cap(*alpha)?);
            Ok(Outcome::new(s))
        }
        Command::Gonchar { q, .. } => {
            let g = gonchar_heights(*q)?;
            let mut s = Summary::new("gonchar");
            s.value("q", *q)
                .value("h_minus", g.h_minus)
                .value("h_plus", g.h_plus);
            Ok(Outcome::new(s))
        }
        Command::Support { field, method, .. } => {
            let f = Field::from_args(field)?;
            let sol = f.support(*method)?;
            let mut s = Summary::new("support");
            s.field = Some(f.desc.clone());
            s.alpha0 = Some(sol.alpha0());
            s.fq = Some(sol.robin_constant);
            s.method = Some(sol.method.as_str().into());
            s.residuals.insert("support", sol.residual);
            s.value("iterations", sol.iterations);
            if let Some((lo, hi)) = sol.bracket {
                s.value("bracket", vec![lo, hi]);
            }
            Ok(Outcome::new(s))
        }
        Command::Ffunctional {
            field,
            alpha,
            numeric,
            ..
        } => {
            let f = Field::from_args(field)?;
            let (v, how) = f.ffunctional(*alpha, *numeric)?;
            let mut s = Summary::new("ffunctional");
            s.field = Some(f.desc.clone());
            s.method = Some(how.into());
            s.value("alpha", *alpha).value("ffunctional", v);
            Ok(Outcome::new(s))
        }
        Command::Density { field, cap, .. } => {
            let f = Field::from_args(field)?;
            let (p, how, support) = f.profile(cap, cap.nodes)?;
            let rows = potential_rows(&f.field, &p)?;
            let mut s = Summary::new("density");
            s.field = Some(f.desc.clone());
            s.alpha0 = Some(p.cap().alpha());
            s.fq = Some(p.robin_constant());
            s.mass = Some(p.mass());
            s.method = Some(how.into());
            s.residuals.insert("mass", (p.mass() - 1.0).abs());
            s.residuals.insert(
                "weighted_potential",
                max_deviation(&rows, p.robin_constant()),
            );
            if let Some(sol) = support {
                s.residuals.insert("support", sol.residual);
            }
            s.value("nodes", rows.len())
                .value("min_density", p.min_value());
            let mut out = Outcome::new(s);
            out.table = Some(density_table(&rows));
            Ok(out)
        }
        Command::Verify {
            field,
            cap,
            tol,
            conductor,
            ..
        } => {
            let f = Field::from_args(field)?;
            let (p, how, _) = f.profile(cap, cap.nodes)?;
            let cfg = VerifyConfig {
                conductor: conductor.map(SphericalCap::south).transpose()?,
                ..VerifyConfig::default()
            };
            let r = verify_equilibrium_with(&f.field, &p, *tol, &cfg)?;
            let mut s = Summary::new("verify");
            s.field = Some(f.desc.clone());
            s.alpha0 = Some(p.cap().alpha());
            s.fq = Some(p.robin_constant());
            s.mass = Some(p.mass());
            s.method = Some(how.into());
            s.residuals.insert("on_support", r.sup_deviation_on_support);
            s.residuals.insert("mass", r.mass_error);
            if let Some(m) = r.min_slack_off_support {
                s.residuals.insert("off_support_slack", m);
            }
            s.value("min_density", r.min_density)
                .value("tolerance", r.tolerance)
                .value("passed", r.passed)
                .value("failures", r.failures.clone());
            let mut rows: Vec<(f64, f64, f64, f64)> = r
                .support
                .iter()
                .chain(&r.off_support)
                .map(|x| (x.phi, x.f.unwrap_or(0.0), x.q, x.u))
                .collect();
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut out = Outcome::new(s);
            out.table = Some(density_table(&rows));
            if !r.passed {
                out.failure = Some(format!("verification failed: {}", r.failures.join("; ")));
            }
            Ok(out)
        }
        Command::Oracle {
            field,
            kind,
            n,
            alpha,
            iterations,
            ..
        } => {
            let f = Field::from_args(field)?;
            match kind {
                OracleKind::Nystrom => {
                    let (a, support) = match alpha {
                        Some(a) => (*a, None),
                        None => {
                            let sol = f.support(SupportChoice::Auto)?;
                            (sol.alpha0(), Some(sol))
                        }
                    };
                    let (p, fq) = nystrom_solve(&f.field, &SphericalCap::south(a)?, *n)?;
                    let rows = potential_rows(&f.field, &p)?;
                    let mut s = Summary::new("oracle");
                    s.field = Some(f.desc.clone());
                    s.alpha0 = Some(a);
                    s.fq = Some(fq);
                    s.mass = Some(p.mass());
                    s.method = Some("Nystrom".into());
                    s.residuals
                        .insert("weighted_potential", max_deviation(&rows, fq));
                    if let Some(sol) = support {
                        s.residuals.insert("support", sol.residual);
                    }
                    if let Some(cf) = f.closed_form(a) {
                        let exact: Vec<f64> = p
                            .grid()
                            .nodes()
                            .iter()
                            .map(|&x| cf.density(x))
                            .collect::<capfield::Result<_>>()?;
                        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                        let dev = p
                            .values()
                            .iter()
                            .zip(&exact)
                            .map(|(u, v)| (u - v).abs())
                            .fold(0.0, f64::max);
                        s.residuals.insert("closed_form_relative", dev / scale);
                    }
                    s.value("n", *n);
                    let mut out = Outcome::new(s);
                    out.table = Some(density_table(&rows));
                    Ok(out)
                }
                OracleKind::Energy => {
                    let m = discrete_energy_minimize(&f.field, *n, *iterations)?;
                    let first = m
                        .weights
                        .iter()
                        .position(|w| *w > 1e-6)
                        .map(|i| m.ring_angles[i] - m.ring_halfwidths[i])
                        .unwrap_or(PI);
                    let mut s = Summary::new("oracle");
                    s.field = Some(f.desc.clone());
                    s.alpha0 = Some(first);
                    s.fq = Some(m.multiplier);
                    s.mass = Some(m.weights.iter().sum());
                    s.method = Some("EnergyMinimization".into());
                    s.residuals
                        .insert("projected_gradient", m.projected_gradient_norm);
                    s.value("n", *n)
                        .value("iterations", m.iterations)
                        .value("energy", m.energy);
                    let mut t = String::from("phi,halfwidth,weight,weighted_potential\n");
                    for i in 0..m.weights.len() {
                        t.push_str(&format!(
                            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                            m.ring_angles[i], m.ring_halfwidths[i], m.weights[i], m.potential[i]
                        ));
                    }
                    let mut out = Outcome::new(s);
                    out.table = Some(t);
                    Ok(out)
                }
            }
        }
    }
}
