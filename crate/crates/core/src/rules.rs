//! Modified-ruin boundary rules: the severity weight w(y) = ψ(y) applied to
//! the surplus y < 0 at the ruin time, with the regularity flags the limit
//! theorems ask for.

use std::fmt;

use serde::Serialize;

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BoundaryKind {
    /// w ≡ 1.
    Classical,
    /// w(y) = 1 iff y ≤ −d.
    Threshold { d: f64 },
    /// w(y) = 1 − e^{a y}.
    ExpAbsorption { a: f64 },
    /// Piecewise linear through `(y_i, w_i)`, y strictly increasing and negative;
    /// constant beyond the grid.
    Table { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegularityFlags {
    pub is_monotone: bool,
    pub is_continuous: bool,
    pub limit_at_minus_infinity_is_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryFunction {
    pub kind: BoundaryKind,
    pub flags: RegularityFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Subexponential integrated tail: ψ ~ ψ_cl ~ E[a(Λ)] F̄_I(u).
    Heavy,
    /// Fixed intensity, Cramér case: ψ_ℓ ~ C_ℓ ψ_cl(·, ℓ).
    LightFixed,
    /// Atom of G at its upper endpoint.
    LightAtom,
    /// Regular density of G at its upper endpoint.
    LightSharp,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Theorem::Heavy => "heavy-tail equivalence",
            Theorem::LightFixed => "fixed-intensity Cramér ratio",
            Theorem::LightAtom => "endpoint-atom asymptotic",
            Theorem::LightSharp => "endpoint-density sharp asymptotic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisItem {
    pub name: String,
    pub passed: bool,
    pub reason: String,
}

/// Pass/fail per hypothesis of one theorem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub theorem: Theorem,
    pub items: Vec<HypothesisItem>,
}

impl HypothesisReport {
    pub fn new(theorem: Theorem) -> Self {
        HypothesisReport {
            theorem,
            items: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, reason: impl Into<String>) -> &mut Self {
        self.items.push(HypothesisItem {
            name: name.to_string(),
            passed,
            reason: reason.into(),
        });
        self
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisItem> {
        self.items.iter().filter(|i| !i.passed)
    }

    pub fn merge(mut self, other: HypothesisReport) -> Self {
        self.items.extend(other.items);
        self
    }

    /// `Ok(())` when every item passed, otherwise the report as an error.
    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(crate::Error::HypothesisViolation(self))
        }
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.theorem)?;
        let mut any = false;
        for item in self.failures() {
            write!(f, " [{}] {};", item.name, item.reason)?;
            any = true;
        }
        if !any {
            write!(f, " all hypotheses hold")?;
        }
        Ok(())
    }
}

fn check_table(points: &[(f64, f64)]) -> Result<()> {
    if points.is_empty() {
        return Err(domain("table rule needs at least one point"));
    }
    for w in points.windows(2) {
        if !(w[0].0 < w[1].0) {
            return Err(domain("table abscissae must be strictly increasing"));
        }
    }
    for &(y, v) in points {
        if !(y < 0.0 && y.is_finite()) {
            return Err(domain(format!("table abscissa {y} must be negative")));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(domain(format!("table weight {v} outside [0, 1]")));
        }
    }
    Ok(())
}

impl BoundaryFunction {
    pub fn classical() -> Self {
        BoundaryFunction {
            kind: BoundaryKind::Classical,
            flags: RegularityFlags {
                is_monotone: true,
                is_continuous: true,
                limit_at_minus_infinity_is_one: true,
            },
        }
    }

    pub fn threshold(d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(domain(format!("threshold d must be positive, got {d}")));
        }
        Ok(BoundaryFunction {
            kind: BoundaryKind::Threshold { d },
            flags: RegularityFlags {
                is_monotone: true,
                is_continuous: false,
                limit_at_minus_infinity_is_one: true,
            },
        })
    }

    pub fn exp_absorption(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(domain(format!("absorption rate a must be positive, got {a}")));
        }
        Ok(BoundaryFunction {
            kind: BoundaryKind::ExpAbsorption { a },
            flags: RegularityFlags {
                is_monotone: true,
                is_continuous: true,
                limit_at_minus_infinity_is_one: true,
            },
        })
    }

    /// Tabulated rule with flags read off the table.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        check_table(&points)?;
        let flags = RegularityFlags {
            is_monotone: points.windows(2).all(|w| w[1].1 <= w[0].1),
            is_continuous: true,
            limit_at_minus_infinity_is_one: points[0].1 > 1.0 - 1e-6,
        };
        Ok(BoundaryFunction {
            kind: BoundaryKind::Table { points },
            flags,
        })
    }

    /// Tabulated rule with declared flags; a flag claiming more than the table
    /// shows is rejected.
    pub fn table_with_flags(points: Vec<(f64, f64)>, flags: RegularityFlags) -> Result<Self> {
        let derived = Self::table(points)?;
        let f = derived.flags;
        if flags.is_monotone && !f.is_monotone {
            return Err(domain("table declared monotone but its weights increase with y somewhere"));
        }
        if flags.limit_at_minus_infinity_is_one && !f.limit_at_minus_infinity_is_one {
            return Err(domain("table declared to tend to 1 at -inf but its leftmost weight is below 1"));
        }
        Ok(BoundaryFunction { flags, ..derived })
    }

    /// w(y) for y < 0.
    pub fn evaluate(&self, y: f64) -> Result<f64> {
        if !(y < 0.0) {
            return Err(domain(format!("boundary rule evaluated at y = {y}, needs y < 0")));
        }
        Ok(self.weight(y))
    }

    /// w(−deficit) for a positive deficit; no domain check.
    #[inline]
    pub(crate) fn weight_at_deficit(&self, deficit: f64) -> f64 {
        self.weight(-deficit)
    }

    #[inline]
    fn weight(&self, y: f64) -> f64 {
        match &self.kind {
            BoundaryKind::Classical => 1.0,
            BoundaryKind::Threshold { d } => {
                if y <= -d {
                    1.0
                } else {
                    0.0
                }
            }
            BoundaryKind::ExpAbsorption { a } => -(a * y).exp_m1(),
            BoundaryKind::Table { points } => interpolate(points, y),
        }
    }

    /// Deficits −y where w may jump or kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            BoundaryKind::Threshold { d } => vec![*d],
            BoundaryKind::Table { points } => points.iter().rev().map(|p| -p.0).collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_classical(&self) -> bool {
        matches!(self.kind, BoundaryKind::Classical)
    }

    /// Numeric sanity check of the declared flags against the model's claim
    /// mean `mu_ref`.
    pub fn validate_flags(&self, mu_ref: f64) -> Result<()> {
        if self.flags.limit_at_minus_infinity_is_one && self.weight(-1e6 * mu_ref) <= 1.0 - 1e-6 {
            return Err(domain("rule declared to tend to 1 at -inf fails at y = -1e6 μ"));
        }
        if self.flags.is_monotone {
            // deficits from 1e-3 μ to 1e6 μ; w must not decrease
            let mut prev = 0.0;
            for i in 0..=2000 {
                let y = -1e-3 * mu_ref * (1e9f64).powf(i as f64 / 2000.0);
                let v = self.weight(y);
                if v < prev - 1e-15 {
                    return Err(domain(format!(
                        "rule declared monotone but w decreases in deficit near y = {y}"
                    )));
                }
                prev = v;
            }
        }
        Ok(())
    }

    /// Which of the theorem's rule hypotheses hold.
    pub fn check_hypotheses(&self, theorem: Theorem) -> HypothesisReport {
        let mut report = HypothesisReport::new(theorem);
        let f = self.flags;
        match theorem {
            Theorem::Heavy => {
                report.check(
                    "boundary limit at -inf equals 1",
                    f.limit_at_minus_infinity_is_one,
                    if f.limit_at_minus_infinity_is_one {
                        "w(y) -> 1 as y -> -inf"
                    } else {
                        "w(y) does not tend to 1 as y -> -inf"
                    },
                );
            }
            Theorem::LightFixed | Theorem::LightAtom | Theorem::LightSharp => {
                let ok = f.is_continuous || f.is_monotone;
                report.check(
                    "boundary rule continuous or monotone on (-inf, 0)",
                    ok,
                    match (f.is_continuous, f.is_monotone) {
                        (true, true) => "continuous and monotone",
                        (true, false) => "continuous",
                        (false, true) => "monotone",
                        (false, false) => "neither continuous nor monotone; no prediction is emitted",
                    },
                );
            }
        }
        report
    }
}

fn interpolate(points: &[(f64, f64)], y: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if y <= first.0 {
        return first.1;
    }
    if y >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|p| p.0 <= y);
    let (y0, w0) = points[i - 1];
    let (y1, w1) = points[i];
    w0 + (w1 - w0) * (y - y0) / (y1 - y0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(BoundaryFunction::classical().evaluate(-3.7).unwrap(), 1.0);
        let t = BoundaryFunction::threshold(2.0).unwrap();
        assert_eq!(t.evaluate(-1.0).unwrap(), 0.0);
        assert_eq!(t.evaluate(-2.0).unwrap(), 1.0);
        let e = BoundaryFunction::exp_absorption(0.5).unwrap();
        let want = 1.0 - (-1.0f64).exp();
        assert!((e.evaluate(-2.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.632_121).abs() < 1e-6);
    }

    #[test]
    fn nonnegative_argument_is_a_domain_error() {
        let w = BoundaryFunction::classical();
        assert!(w.evaluate(0.0).is_err());
        assert!(w.evaluate(1.0).is_err());
    }

    #[test]
    fn exp_absorption_complement_identity() {
        let e = BoundaryFunction::exp_absorption(1.3).unwrap();
        for i in 1..200 {
            let y = -0.05 * i as f64;
            assert!((e.evaluate(y).unwrap() + (1.3 * y).exp() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn table_clamps_and_interpolates() {
        let w = BoundaryFunction::table(vec![(-4.0, 0.5), (-2.0, 0.3), (-1.0, 0.0)]).unwrap();
        assert_eq!(w.evaluate(-10.0).unwrap(), 0.5);
        assert_eq!(w.evaluate(-0.5).unwrap(), 0.0);
        assert!((w.evaluate(-3.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((w.evaluate(-1.5).unwrap() - 0.15).abs() < 1e-15);
        assert!(w.flags.is_monotone);
        assert!(!w.flags.limit_at_minus_infinity_is_one);
    }

    #[test]
    fn hypothesis_examples() {
        assert!(BoundaryFunction::classical().check_hypotheses(Theorem::Heavy).passed());
        assert!(BoundaryFunction::exp_absorption(1.0)
            .unwrap()
            .check_hypotheses(Theorem::LightFixed)
            .passed());
        assert!(BoundaryFunction::threshold(1.0).unwrap().check_hypotheses(Theorem::Heavy).passed());
        let half = BoundaryFunction::table(vec![(-100.0, 0.5), (-1.0, 0.2)]).unwrap();
        let report = half.check_hypotheses(Theorem::Heavy);
        assert!(!report.passed());
        assert_eq!(report.failures().count(), 1);
    }

    #[test]
    fn neither_continuous_nor_monotone_is_refused() {
        let bumpy = BoundaryFunction::table_with_flags(
            vec![(-3.0, 1.0), (-2.0, 0.2), (-1.0, 0.6)],
            RegularityFlags {
                is_monotone: false,
                is_continuous: false,
                limit_at_minus_infinity_is_one: true,
            },
        )
        .unwrap();
        for t in [Theorem::LightFixed, Theorem::LightAtom, Theorem::LightSharp] {
            assert!(!bumpy.check_hypotheses(t).passed());
        }
    }

    #[test]
    fn overclaimed_flags_rejected() {
        let pts = vec![(-3.0, 1.0), (-2.0, 0.2), (-1.0, 0.6)];
        let flags = RegularityFlags {
            is_monotone: true,
            is_continuous: true,
            limit_at_minus_infinity_is_one: true,
        };
        assert!(BoundaryFunction::table_with_flags(pts, flags).is_err());
    }

    #[test]
    fn catalog_flags_validate() {
        for w in [
            BoundaryFunction::classical(),
            BoundaryFunction::threshold(2.0).unwrap(),
            BoundaryFunction::exp_absorption(0.1).unwrap(),
        ] {
            w.validate_flags(1.0).unwrap();
        }
    }

    #[test]
    fn threshold_is_monotone_indicator() {
        let t = BoundaryFunction::threshold(1.5).unwrap();
        let mut prev = 0.0;
        for i in 1..400 {
            let deficit = 0.01 * i as f64;
            let v = t.evaluate(-deficit).unwrap();
            assert!(v == 0.0 || v == 1.0);
            assert!(v >= prev);
            assert_eq!(v == 1.0, deficit >= 1.5);
            prev = v;
        }
    }
}
