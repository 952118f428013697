//! Residual diagnostics for fitted models: histogram, residual vs fitted with
//! a LOWESS smoother, normal Q-Q data and a Pareto ordering of effects.

mod lowess;
mod render;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::doe::DesignPoint;
use crate::regression::FittedModel;
use crate::special::normal_quantile;
use crate::{Error, Result};

pub use lowess::{lowess, DEFAULT_ITERATIONS, DEFAULT_SPAN};
pub use render::{render_report, PlotKind, RenderedPlot};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub fitted: f64,
    pub sample: f64,
    /// `fitted − sample`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualSet {
    pub entries: Vec<Residual>,
}

impl ResidualSet {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        ResidualSet {
            entries: pairs
                .into_iter()
                .map(|(fitted, sample)| Residual { fitted, sample, residual: fitted - sample })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.residual).collect()
    }

    /// Residual with the largest magnitude.
    pub fn max_abs(&self) -> Option<Residual> {
        self.entries.iter().copied().max_by(|a, b| a.residual.abs().total_cmp(&b.residual.abs()))
    }
}

/// Prediction minus measurement at each sample point.
pub fn residuals(model: &FittedModel, samples: &[(DesignPoint, f64)]) -> Result<ResidualSet> {
    let pairs = samples
        .iter()
        .map(|(p, s)| Ok((model.predict(p)?.value, *s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualSet::from_pairs(pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinRule {
    /// `⌈log₂ n⌉ + 1` bins.
    #[default]
    Sturges,
    Fixed(usize),
}

impl BinRule {
    pub fn bin_count(self, n: usize) -> usize {
        match self {
            BinRule::Sturges => (n.max(1) as f64).log2().ceil() as usize + 1,
            BinRule::Fixed(k) => k.max(1),
        }
    }
}

impl FromStr for BinRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("sturges") {
            return Ok(BinRule::Sturges);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(BinRule::Fixed(k)),
            _ => Err(Error::InvalidArgument(format!(
                "bin rule must be `sturges` or a positive count, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for BinRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinRule::Sturges => f.write_str("sturges"),
            BinRule::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub width: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]`, right-open except the last. When all
/// values coincide there is a single unit-width bin centred on them.
pub fn histogram(values: &[f64], rule: BinRule) -> Result<Vec<Bin>> {
    if values.is_empty() {
        return Err(Error::InsufficientData("histogram of no values".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("histogram input contains non-finite values".into()));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(vec![Bin { lower: min - 0.5, width: 1.0, count: values.len() }]);
    }
    let k = rule.bin_count(values.len());
    let width = (max - min) / k as f64;
    let mut bins: Vec<Bin> =
        (0..k).map(|i| Bin { lower: min + i as f64 * width, width, count: 0 }).collect();
    for &v in values {
        let i = (((v - min) / width).floor() as usize).min(k - 1);
        bins[i].count += 1;
    }
    Ok(bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqPlot {
    /// `(theoretical, sample)` pairs in increasing order.
    pub points: Vec<(f64, f64)>,
    /// Line through the first and third quartiles.
    pub slope: f64,
    pub intercept: f64,
}

/// Normal Q-Q data with plotting positions `(i − 0.5)/n`.
pub fn qq_normal(values: &[f64]) -> Result<QqPlot> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData("Q-Q plot needs at least two values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let points: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (normal_quantile((i as f64 + 0.5) / n as f64), v))
        .collect();
    let (y1, y3) = (quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.75));
    let (x1, x3) = (normal_quantile(0.25), normal_quantile(0.75));
    let slope = (y3 - y1) / (x3 - x1);
    Ok(QqPlot { points, slope, intercept: y1 - slope * x1 })
}

/// Linear-interpolation sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub term: String,
    pub coefficient: f64,
    pub magnitude: f64,
}

/// Non-intercept terms by decreasing `|coefficient|`.
pub fn pareto_effects(model: &FittedModel) -> Vec<Effect> {
    let mut effects: Vec<Effect> = model
        .terms
        .iter()
        .zip(&model.coefficients)
        .filter(|(t, _)| !t.is_intercept())
        .map(|(t, &c)| Effect {
            term: t.label(&model.factor_names),
            coefficient: c,
            magnitude: c.abs(),
        })
        .collect();
    effects.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    effects
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOptions {
    pub bins: BinRule,
    pub span: f64,
    pub iterations: usize,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions { bins: BinRule::Sturges, span: DEFAULT_SPAN, iterations: DEFAULT_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub residuals: ResidualSet,
    pub histogram: Vec<Bin>,
    /// `(fitted, residual)` sorted by fitted value.
    pub fitted_vs_residual: Vec<(f64, f64)>,
    /// LOWESS of `fitted_vs_residual`, evaluated at the same points.
    pub lowess_curve: Vec<(f64, f64)>,
    pub qq: QqPlot,
    pub pareto: Vec<Effect>,
}

impl DiagnosticsReport {
    pub fn build(
        model: &FittedModel,
        samples: &[(DesignPoint, f64)],
        options: DiagnosticsOptions,
    ) -> Result<Self> {
        let residuals = residuals(model, samples)?;
        let values = residuals.values();
        let histogram = histogram(&values, options.bins)?;
        let mut scatter: Vec<(f64, f64)> =
            residuals.entries.iter().map(|e| (e.fitted, e.residual)).collect();
        scatter.sort_by(|a, b| a.0.total_cmp(&b.0));
        let lowess_curve = lowess(&scatter, options.span, options.iterations)?;
        let qq = qq_normal(&values)?;
        Ok(DiagnosticsReport {
            residuals,
            histogram,
            fitted_vs_residual: scatter,
            lowess_curve,
            qq,
            pareto: pareto_effects(model),
        })
    }
}

/// Headline numbers written next to the plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub r_squared: f64,
    pub adj_r_squared: Option<f64>,
    pub n_samples: usize,
    pub min_residual: f64,
    pub max_residual: f64,
    pub max_abs_residual: f64,
}

impl DiagnosticsSummary {
    pub fn new(model: &FittedModel, report: &DiagnosticsReport) -> Self {
        let values = report.residuals.values();
        DiagnosticsSummary {
            r_squared: model.r_squared,
            adj_r_squared: model.adj_r_squared,
            n_samples: values.len(),
            min_residual: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max_residual: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            max_abs_residual: values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }
}
