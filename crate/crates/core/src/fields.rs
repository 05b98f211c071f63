//! Axially symmetric external fields `Q`, written as functions of `x₃ = cos φ`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::geometry::PolarAngle;
use crate::{Error, Result};

/// User-supplied evaluator `x₃ ↦ Q(x₃)`.
pub type FieldFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FieldKind {
    Zero,
    /// Charge `q > 0` on the polar axis at height `h > 0`:
    /// `Q = q (1 + h² − 2h x₃)^{−1/2}`.
    PointCharge {
        q: f64,
        h: f64,
    },
    /// `Q = a x₃² + b x₃ + c`.
    Quadratic {
        a: f64,
        b: f64,
        c: f64,
    },
    Tabulated(Arc<Table>),
    Custom(FieldFn),
}

impl fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Zero => write!(f, "Zero"),
            FieldKind::PointCharge { q, h } => write!(f, "PointCharge {{ q: {q}, h: {h} }}"),
            FieldKind::Quadratic { a, b, c } => write!(f, "Quadratic {{ a: {a}, b: {b}, c: {c} }}"),
            FieldKind::Tabulated(t) => write!(f, "Tabulated({} samples)", t.x.len()),
            FieldKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// An external field: a [`FieldKind`], optionally mirrored (`x₃ ↦ −x₃`) and
/// shifted by a constant.
#[derive(Clone, Debug)]
pub struct ExternalField {
    kind: FieldKind,
    mirrored: bool,
    offset: f64,
}

impl ExternalField {
    pub fn zero() -> Self {
        Self::from_kind(FieldKind::Zero)
    }

    pub fn point_charge(q: f64, h: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidField(format!(
                "point charge needs q > 0, got q = {q}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidField(format!(
                "point charge needs h > 0, got h = {h}"
            )));
        }
        Ok(Self::from_kind(FieldKind::PointCharge { q, h }))
    }

    /// Quadratic field; requires `a, b > 0` and `4a² < b² ≤ 4ac`.
    pub fn quadratic(a: f64, b: f64, c: f64) -> Result<Self> {
        check_quadratic(a, b, c)?;
        Ok(Self::from_kind(FieldKind::Quadratic { a, b, c }))
    }

    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        Ok(Self::from_kind(FieldKind::Tabulated(Arc::new(Table::new(
            samples,
        )?))))
    }

    /// Two-column CSV `x3,Q`; a non-numeric first row is taken as a header.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let table = Table::from_csv(path.as_ref())?;
        Ok(Self::from_kind(FieldKind::Tabulated(Arc::new(table))))
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_kind(FieldKind::Custom(Arc::new(f)))
    }

    fn from_kind(kind: FieldKind) -> Self {
        ExternalField {
            kind,
            mirrored: false,
            offset: 0.0,
        }
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    /// `Q + c`.
    pub fn shifted(&self, c: f64) -> Self {
        ExternalField {
            offset: self.offset + c,
            ..self.clone()
        }
    }

    /// `x₃ ↦ Q(−x₃)`, i.e. `φ ↦ Q(π − φ)`.
    pub fn mirrored(&self) -> Self {
        ExternalField {
            mirrored: !self.mirrored,
            ..self.clone()
        }
    }

    /// True when the field is identically zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.kind, FieldKind::Zero) && self.offset == 0.0
    }

    /// `Q(φ)`.
    pub fn evaluate(&self, phi: f64) -> Result<f64> {
        let phi = PolarAngle::new(phi)?.value();
        self.at_x3(phi.cos()).map_err(|e| match e {
            Error::Domain { msg, .. } => Error::Domain {
                op: "evaluate",
                msg: format!("{msg} (φ = {phi})"),
            },
            e => e,
        })
    }

    /// `Q(x₃)` for `x₃ ∈ [−1, 1]`.
    pub fn at_x3(&self, x3: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&x3) {
            return Err(Error::domain(
                "evaluate",
                format!("x₃ = {x3} outside [−1, 1]"),
            ));
        }
        let x = if self.mirrored { -x3 } else { x3 };
        let v = match &self.kind {
            FieldKind::Zero => 0.0,
            FieldKind::PointCharge { q, h } => {
                // 1 + h² − 2hx = (h − 1)² + 2h(1 − x), free of cancellation
                let d2 = (h - 1.0) * (h - 1.0) + 2.0 * h * (1.0 - x);
                if d2 <= 0.0 {
                    return Err(Error::domain(
                        "evaluate",
                        "field is singular at the charge location",
                    ));
                }
                q / d2.sqrt()
            }
            FieldKind::Quadratic { a, b, c } => (a * x + b) * x + c,
            FieldKind::Tabulated(t) => t.eval(x)?,
            FieldKind::Custom(f) => {
                let v = f(x);
                if !v.is_finite() {
                    return Err(Error::domain(
                        "evaluate",
                        format!("field is not finite at x₃ = {x}"),
                    ));
                }
                v
            }
        };
        Ok(v + self.offset)
    }
}

pub(crate) fn check_quadratic(a: f64, b: f64, c: f64) -> Result<()> {
    let finite = a.is_finite() && b.is_finite() && c.is_finite();
    if !(finite && a > 0.0 && b > 0.0 && 4.0 * a * a < b * b && b * b <= 4.0 * a * c) {
        return Err(Error::InvalidField(format!(
            "quadratic field needs a, b > 0 and 4a² < b² ≤ 4ac, got a = {a}, b = {b}, c = {c}"
        )));
    }
    Ok(())
}

/// Samples `(x₃, Q)` with a monotone piecewise-cubic Hermite interpolant.
#[derive(Clone, Debug)]
pub struct Table {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Table {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidField(
                "tabulated field needs at least two samples".into(),
            ));
        }
        let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidField(
                "tabulated field has non-finite samples".into(),
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidField(
                "tabulated x₃ must be strictly increasing".into(),
            ));
        }
        let d = pchip_slopes(&x, &y);
        Ok(Table { x, y, d })
    }

    fn from_csv(path: &Path) -> Result<Self> {
        let table_err = |msg: String| Error::Table {
            path: path.to_path_buf(),
            msg,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => Error::Io {
                    path: path.to_path_buf(),
                    source,
                },
                k => table_err(format!("{k:?}")),
            })?;
        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| table_err(e.to_string()))?;
            if rec.len() != 2 {
                return Err(table_err(format!(
                    "row {}: expected 2 columns, found {}",
                    i + 1,
                    rec.len()
                )));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(x), Ok(q)) => samples.push((x, q)),
                _ if i == 0 => continue,
                _ => return Err(table_err(format!("row {}: not a pair of numbers", i + 1))),
            }
        }
        Table::new(&samples).map_err(|e| table_err(e.to_string()))
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&x) {
            return Err(Error::domain(
                "evaluate",
                format!("x₃ = {x} outside the tabulated range [{lo}, {hi}]"),
            ));
        }
        let k = match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[k + 1] - self.x[k];
        let t = (x - self.x[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1])
    }
}

// Fritsch–Carlson slopes with the usual three-point end conditions.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![del[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() || d0 == 0.0 {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    Monotonicity,
    Convexity,
}

/// Outcome of [`validate_south_cap_hypotheses`].
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub passed: bool,
    /// First failing triple `(x₃, Q)` in grid order, with the failed test.
    pub first_violation: Option<(Violation, [(f64, f64); 3])>,
    /// Non-fatal findings, e.g. negative field values.
    pub warnings: Vec<String>,
}

/// Checks on an `n`-point uniform grid of `[−1, 1]` that `Q(x₃)` is
/// nondecreasing and midpoint convex, the hypotheses under which the support
/// is a south cap.
pub fn validate_south_cap_hypotheses(field: &ExternalField, n: usize) -> Result<HypothesisReport> {
    if n < 3 {
        return Err(Error::domain(
            "validate_south_cap_hypotheses",
            format!("need n ≥ 3, got {n}"),
        ));
    }
    let xs: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                1.0
            } else {
                -1.0 + 2.0 * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let mut qs = Vec::with_capacity(n);
    for &x in &xs {
        qs.push(match field.at_x3(x) {
            Ok(v) => v,
            // a charge sitting on the sphere: Q → +∞ at the North Pole
            Err(Error::Domain { .. })
                if x == 1.0 && matches!(field.kind, FieldKind::PointCharge { .. }) =>
            {
                f64::INFINITY
            }
            Err(e) => return Err(e),
        });
    }
    let scale = qs
        .iter()
        .filter(|v| v.is_finite())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let mut warnings = Vec::new();
    if let Some(i) = qs.iter().position(|&v| v < 0.0) {
        warnings.push(format!(
            "field is negative at x₃ = {} (Q = {})",
            xs[i], qs[i]
        ));
    }
    let mut first_violation = None;
    for i in 0..n - 2 {
        let tri = [
            (xs[i], qs[i]),
            (xs[i + 1], qs[i + 1]),
            (xs[i + 2], qs[i + 2]),
        ];
        let kind = if qs[i + 1] < qs[i] - tol || qs[i + 2] < qs[i + 1] - tol {
            Some(Violation::Monotonicity)
        } else if qs[i + 2].is_finite() && qs[i + 1] > 0.5 * (qs[i] + qs[i + 2]) + tol {
            Some(Violation::Convexity)
        } else {
            None
        };
        if let Some(k) = kind {
            first_violation = Some((k, tri));
            break;
        }
    }
    Ok(HypothesisReport {
        passed: first_violation.is_none(),
        first_violation,
        warnings,
    })
}
