//! Two-level full-factorial designs and coded/actual value conversion.
//!
//! A factor's coded value is `(v - a) / b` where `a` is the midpoint of the
//! low and high levels and `b` is half the range, so the low level maps to
//! -1, the high level to +1 and the baseline to 0.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported number of factors in a full factorial.
pub const MAX_FACTORS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Continuous,
    /// Actual values are whole numbers; `to_actual` rounds half away from zero.
    Integer,
    /// Actual values are proportions in `[0, 1]`.
    Fraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorRepr", into = "FactorRepr")]
pub struct Factor {
    name: String,
    low: f64,
    high: f64,
    kind: FactorKind,
    baseline: f64,
}

#[derive(Serialize, Deserialize)]
struct FactorRepr {
    name: String,
    low: f64,
    high: f64,
    kind: FactorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    baseline: Option<f64>,
}

impl TryFrom<FactorRepr> for Factor {
    type Error = Error;

    fn try_from(r: FactorRepr) -> Result<Self> {
        let mut f = Factor::new(r.name, r.low, r.high, r.kind)?;
        if let Some(b) = r.baseline {
            f = f.with_baseline(b);
        }
        Ok(f)
    }
}

impl From<Factor> for FactorRepr {
    fn from(f: Factor) -> Self {
        let midpoint = (f.low + f.high) / 2.0;
        FactorRepr {
            baseline: (f.baseline != midpoint).then_some(f.baseline),
            name: f.name,
            low: f.low,
            high: f.high,
            kind: f.kind,
        }
    }
}

impl Factor {
    pub fn new(name: impl Into<String>, low: f64, high: f64, kind: FactorKind) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidArgument("factor name must not be empty".into()));
        }
        if !(low.is_finite() && high.is_finite()) || low >= high {
            return Err(Error::InvalidArgument(format!(
                "factor `{name}`: low level {low} must be below high level {high}"
            )));
        }
        match kind {
            FactorKind::Fraction if low < 0.0 || high > 1.0 => {
                return Err(Error::InvalidArgument(format!(
                    "fraction factor `{name}` must stay within [0, 1]"
                )));
            }
            FactorKind::Integer if low.fract() != 0.0 || high.fract() != 0.0 => {
                return Err(Error::InvalidArgument(format!(
                    "integer factor `{name}` needs whole-number levels"
                )));
            }
            _ => {}
        }
        Ok(Factor {
            name,
            low,
            high,
            kind,
            baseline: (low + high) / 2.0,
        })
    }

    /// Overrides the reported baseline. Coding still uses the level midpoint.
    pub fn with_baseline(mut self, baseline: f64) -> Self {
        self.baseline = baseline;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    fn center(&self) -> f64 {
        (self.high + self.low) / 2.0
    }

    fn half_range(&self) -> f64 {
        (self.high - self.low) / 2.0
    }

    /// Maps an actual value to its coded value. Values outside the levels
    /// give `|coded| > 1`.
    pub fn to_coded(&self, actual: f64) -> f64 {
        (actual - self.center()) / self.half_range()
    }

    /// Maps a coded value back to the factor's units.
    pub fn to_actual(&self, coded: f64) -> f64 {
        // written so that coded ±1 lands exactly on the levels
        let v = ((1.0 - coded) * self.low + (1.0 + coded) * self.high) / 2.0;
        match self.kind {
            FactorKind::Integer => v.round(),
            _ => v,
        }
    }

    /// Nearest coded value whose actual value is a whole number; ties go
    /// toward coded zero. Non-integer factors are returned unchanged.
    pub fn snap_coded(&self, coded: f64) -> f64 {
        if self.kind != FactorKind::Integer {
            return coded;
        }
        let raw = self.center() + self.half_range() * coded;
        let (lo, hi) = (raw.floor(), raw.ceil());
        if lo == hi {
            return self.to_coded(lo);
        }
        let (c_lo, c_hi) = (self.to_coded(lo), self.to_coded(hi));
        let (d_lo, d_hi) = (raw - lo, hi - raw);
        if d_lo < d_hi {
            c_lo
        } else if d_hi < d_lo {
            c_hi
        } else if c_lo.abs() <= c_hi.abs() {
            c_lo
        } else {
            c_hi
        }
    }
}

/// The ordered list of factors studied in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Factor>", into = "Vec<Factor>")]
pub struct FactorSpace {
    factors: Vec<Factor>,
}

impl TryFrom<Vec<Factor>> for FactorSpace {
    type Error = Error;

    fn try_from(factors: Vec<Factor>) -> Result<Self> {
        FactorSpace::new(factors)
    }
}

impl From<FactorSpace> for Vec<Factor> {
    fn from(s: FactorSpace) -> Self {
        s.factors
    }
}

impl FactorSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("factor space needs at least one factor".into()));
        }
        let mut seen = HashSet::new();
        for f in &factors {
            if !seen.insert(f.name()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate factor name `{}`",
                    f.name()
                )));
            }
        }
        Ok(FactorSpace { factors })
    }

    /// The six poll factors with the levels used for the first experiment:
    /// Pr[truth] 10–90 %, tree depth 1–5, alternatives 2–10, target weight
    /// 10–90 %, population 1 000–100 000 and share of target answers 10–90 %.
    pub fn randori() -> Self {
        let f = |name: &str, lo, hi, kind| Factor::new(name, lo, hi, kind).expect("valid default");
        FactorSpace {
            factors: vec![
                f("truth", 0.1, 0.9, FactorKind::Fraction),
                f("depth", 1.0, 5.0, FactorKind::Integer),
                f("alts", 2.0, 10.0, FactorKind::Integer),
                f("weight", 0.1, 0.9, FactorKind::Fraction),
                f("pop", 1000.0, 100_000.0, FactorKind::Integer),
                f("answers", 0.1, 0.9, FactorKind::Fraction),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name().to_string()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name() == name)
    }

    pub fn to_actual(&self, point: &DesignPoint) -> Result<Vec<f64>> {
        self.check_arity(point)?;
        Ok(self
            .factors
            .iter()
            .zip(point.coords())
            .map(|(f, &c)| f.to_actual(c))
            .collect())
    }

    pub fn to_coded(&self, actual: &[f64]) -> Result<DesignPoint> {
        if actual.len() != self.len() {
            return Err(arity_error(self.len(), actual.len()));
        }
        Ok(DesignPoint::unchecked(
            self.factors.iter().zip(actual).map(|(f, &v)| f.to_coded(v)).collect(),
        ))
    }

    fn check_arity(&self, point: &DesignPoint) -> Result<()> {
        if point.len() != self.len() {
            return Err(arity_error(self.len(), point.len()));
        }
        Ok(())
    }
}

fn arity_error(expected: usize, got: usize) -> Error {
    Error::InvalidArgument(format!("expected {expected} coordinates, got {got}"))
}

/// A point in coded factor space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignPoint(Vec<f64>);

impl DesignPoint {
    /// Builds a design point; every coordinate must lie in `[-1, 1]`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !(-1.0..=1.0).contains(*c)) {
            return Err(Error::InvalidArgument(format!(
                "coded value {c} outside [-1, 1]"
            )));
        }
        Ok(DesignPoint(coords))
    }

    /// Builds a point without range checks, for extrapolation queries.
    pub fn unchecked(coords: Vec<f64>) -> Self {
        DesignPoint(coords)
    }

    pub fn splat(k: usize, value: f64) -> Self {
        DesignPoint(vec![value; k])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<DesignPoint> for Vec<f64> {
    fn from(p: DesignPoint) -> Self {
        p.0
    }
}

/// An ordered set of design points with their standard-order labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    points: Vec<DesignPoint>,
    order_labels: Vec<u32>,
}

impl Design {
    pub fn new(points: Vec<DesignPoint>, order_labels: Vec<u32>) -> Result<Self> {
        if points.len() != order_labels.len() {
            return Err(Error::InvalidArgument(
                "design needs one order label per point".into(),
            ));
        }
        for p in &points {
            DesignPoint::new(p.coords().to_vec())?;
        }
        Ok(Design { points, order_labels })
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn order_labels(&self) -> &[u32] {
        &self.order_labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &DesignPoint)> {
        self.order_labels.iter().copied().zip(self.points.iter())
    }

    /// CSV with header `std_order,<names…>`. Coordinates use the shortest
    /// representation that round-trips exactly.
    pub fn to_csv(&self, names: &[String]) -> Result<String> {
        if let Some(p) = self.points.first() {
            if p.len() != names.len() {
                return Err(arity_error(p.len(), names.len()));
            }
        }
        let mut out = String::from("std_order");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (label, p) in self.iter() {
            write!(out, "{label}").unwrap();
            for c in p.coords() {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Two-level full factorial over `k` factors in Yates standard order
/// (factor 1 alternates fastest), with coordinates `±scale`.
pub fn full_factorial(k: usize, scale: f64) -> Result<Design> {
    if !(1..=MAX_FACTORS).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "number of factors must be in 1..={MAX_FACTORS}, got {k}"
        )));
    }
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "scale must be in (0, 1], got {scale}"
        )));
    }
    let n = 1usize << k;
    let points = (0..n)
        .map(|run| {
            DesignPoint(
                (0..k)
                    .map(|j| if run >> j & 1 == 1 { scale } else { -scale })
                    .collect(),
            )
        })
        .collect();
    let order_labels = (1..=n as u32).collect();
    Ok(Design { points, order_labels })
}

/// The three quick-check points: baseline, all `+0.5` and all `-0.5`.
pub fn diagonal_probe(k: usize) -> Vec<DesignPoint> {
    [0.0, 0.5, -0.5]
        .iter()
        .map(|&v| DesignPoint::splat(k, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factor(lo: f64, hi: f64) -> Factor {
        Factor::new("x", lo, hi, FactorKind::Continuous).unwrap()
    }

    #[test]
    fn coded_value_of_500_between_100_and_1000() {
        let f = factor(100.0, 1000.0);
        assert!((f.to_coded(500.0) - (-1.0 / 9.0)).abs() < 1e-12);
        assert_eq!(f.to_coded(550.0), 0.0);
        assert_eq!(factor(1000.0, 100_000.0).to_coded(100_000.0), 1.0);
    }

    #[test]
    fn to_actual_rounds_integer_factors() {
        let space = FactorSpace::randori();
        let pop = &space.factors()[4];
        assert_eq!(pop.to_actual(0.0), 50_500.0);
        let depth = &space.factors()[1];
        assert_eq!(depth.to_actual(0.5), 4.0);
        assert_eq!(depth.to_actual(0.25), 4.0); // 3.5 rounds away from zero
        assert_eq!(depth.to_actual(-0.25), 3.0); // 2.5 -> 3
        for f in space.factors() {
            assert_eq!(f.to_actual(1.0), f.high());
            assert_eq!(f.to_actual(-1.0), f.low());
        }
    }

    #[test]
    fn snapping_ties_go_toward_zero() {
        let space = FactorSpace::randori();
        let depth = &space.factors()[1];
        assert_eq!(depth.snap_coded(0.25), 0.0);
        assert_eq!(depth.snap_coded(-0.25), 0.0);
        assert_eq!(depth.snap_coded(0.3), 0.5);
        let alts = &space.factors()[2];
        assert_eq!(alts.snap_coded(0.25), 0.25);
        assert_eq!(alts.snap_coded(-0.1), 0.0);
        let truth = &space.factors()[0];
        assert_eq!(truth.snap_coded(0.123), 0.123);
    }

    #[test]
    fn factor_invariants() {
        assert!(Factor::new("a", 1.0, 1.0, FactorKind::Continuous).is_err());
        assert!(Factor::new("a", 0.0, 1.5, FactorKind::Fraction).is_err());
        assert!(Factor::new("a", 0.5, 3.0, FactorKind::Integer).is_err());
        let dup = vec![factor(0.0, 1.0), factor(0.0, 2.0)];
        assert!(FactorSpace::new(dup).is_err());
        assert!(FactorSpace::new(vec![]).is_err());
    }

    #[test]
    fn full_factorial_two_factors() {
        let d = full_factorial(2, 1.0).unwrap();
        let pts: Vec<_> = d.points().iter().map(|p| p.coords().to_vec()).collect();
        assert_eq!(
            pts,
            vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0]]
        );
        assert_eq!(d.order_labels(), &[1, 2, 3, 4]);
        let d1 = full_factorial(1, 1.0).unwrap();
        assert_eq!(d1.points()[0].coords(), &[-1.0]);
        assert_eq!(d1.points()[1].coords(), &[1.0]);
    }

    #[test]
    fn full_factorial_six_half_scale() {
        let d = full_factorial(6, 0.5).unwrap();
        assert_eq!(d.len(), 64);
        assert_eq!(d.points()[0].coords(), &[-0.5; 6]);
        assert_eq!(d.points()[63].coords(), &[0.5; 6]);
        // row 9 in standard order toggles only the fourth factor high
        assert_eq!(d.points()[8].coords(), &[-0.5, -0.5, -0.5, 0.5, -0.5, -0.5]);
    }

    #[test]
    fn full_factorial_rejects_bad_arguments() {
        assert!(matches!(full_factorial(0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(full_factorial(21, 1.0), Err(Error::InvalidArgument(_))));
        assert!(full_factorial(3, 0.0).is_err());
        assert!(full_factorial(3, 1.5).is_err());
    }

    #[test]
    fn design_rejects_out_of_range_points() {
        let p = DesignPoint::unchecked(vec![1.5]);
        assert!(Design::new(vec![p], vec![1]).is_err());
        assert!(DesignPoint::new(vec![-1.01]).is_err());
    }

    #[test]
    fn probe_points() {
        for k in [1, 2, 6] {
            let p = diagonal_probe(k);
            assert_eq!(p.len(), 3);
            assert_eq!(p[0].coords(), vec![0.0; k].as_slice());
            assert_eq!(p[1].coords(), vec![0.5; k].as_slice());
            assert_eq!(p[2].coords(), vec![-0.5; k].as_slice());
        }
    }

    #[test]
    fn design_csv_layout() {
        let d = full_factorial(2, 0.5).unwrap();
        let csv = d.to_csv(&["a".into(), "b".into()]).unwrap();
        assert_eq!(csv, "std_order,a,b\n1,-0.5,-0.5\n2,0.5,-0.5\n3,-0.5,0.5\n4,0.5,0.5\n");
    }

    #[test]
    fn factor_space_json_round_trip() {
        let space = FactorSpace::randori();
        let json = serde_json::to_string(&space).unwrap();
        let back: FactorSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, space);
        let bad = r#"[{"name":"x","low":2,"high":1,"kind":"continuous"}]"#;
        assert!(serde_json::from_str::<FactorSpace>(bad).is_err());
    }

    proptest! {
        #[test]
        fn coded_round_trip(lo in -1e4f64..1e4, width in 1e-3f64..1e4, c in -1.0f64..=1.0) {
            let f = factor(lo, lo + width);
            let back = f.to_coded(f.to_actual(c));
            prop_assert!((back - c).abs() < 1e-9);
        }

        #[test]
        fn factorial_columns_balanced_and_orthogonal(k in 1usize..=8, s in 0.05f64..=1.0) {
            let d = full_factorial(k, s).unwrap();
            for i in 0..k {
                let sum: f64 = d.points().iter().map(|p| p.coords()[i]).sum();
                prop_assert!(sum.abs() < 1e-9);
                for j in (i + 1)..k {
                    let dot: f64 = d.points().iter().map(|p| p.coords()[i] * p.coords()[j]).sum();
                    prop_assert!(dot.abs() < 1e-9);
                }
            }
        }
    }
}
