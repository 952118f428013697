use serde::{Deserialize, Serialize};

use super::{refine_step, CampaignConfig, Decision, FixtureName, TableSource};
use crate::diagnostics::pareto_effects;
use crate::doe::{diagonal_probe, DesignPoint};
use crate::regression::{expand_formula, fit_ols, saturated_terms, FittedModel};
use crate::Result;

/// The reduced model the study settled on.
pub const SIMPLIFIED_FORMULA: &str =
    "MAPE ~ truth + alts + weight + truth*depth+depth*weight + truth*depth*weight + depth*weight*answers";

/// Published coefficients of the reduced model, keyed by term label.
pub const PUBLISHED_SIMPLIFIED: [(&str, f64); 13] = [
    ("(Intercept)", 32.501266),
    ("truth", -29.023493),
    ("alts", 5.037411),
    ("weight", -16.562410),
    ("depth", 1.449934),
    ("answers", 1.856916),
    ("truth:depth", 10.044302),
    ("depth:weight", -28.397984),
    ("truth:weight", 4.175231),
    ("depth:answers", 8.535667),
    ("weight:answers", -8.402531),
    ("truth:depth:weight", 51.134829),
    ("depth:weight:answers", 25.945740),
];

/// Published predictions and residuals of the first model at the baseline
/// and the `±0.5` diagonal.
const FIRST_MODEL_PROBES: [(f64, f64, f64); 3] = [
    (418.7087, 34.04411, 384.6646),
    (124.8765, 14.41732, 110.4592),
    (731.8813, 38.23649, 693.6448),
];

const SECOND_MODEL_BASELINE: f64 = 32.89371;
const FULL_R2: f64 = 0.8419;
const FULL_ADJ_R2: f64 = 0.5929;
const SIMPLIFIED_R2: f64 = 0.7846;
const SIMPLIFIED_ADJ_R2: f64 = 0.7562;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, expected: f64, actual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), expected, actual, tolerance, passed: (actual - expected).abs() <= tolerance }
    }

    fn flag(name: impl Into<String>, passed: bool) -> Self {
        let v = if passed { 1.0 } else { 0.0 };
        Check { name: name.into(), expected: 1.0, actual: v, tolerance: 0.0, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub checks: Vec<Check>,
    /// Informational results that do not decide the outcome.
    pub supplementary: Vec<Check>,
    /// Reduced-model terms by decreasing effect size.
    pub pareto_order: Vec<String>,
}

impl ReplicationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Re-runs the published analysis on the bundled fixtures.
pub fn replicate_paper() -> Result<ReplicationReport> {
    let exp1 = FixtureName::Exp1.load();
    let exp2 = FixtureName::Exp2.load();
    let validation = FixtureName::Validation.load();
    let names = exp1.factor_names().to_vec();
    let all_terms = saturated_terms(names.len());
    let mut checks = Vec::new();
    let mut supplementary = Vec::new();

    // first model and its probe residuals
    let first = fit_ols(&exp1.without_baseline(), &all_terms)?;
    let refine = refine_step(&first, &CampaignConfig::default(), &TableSource { table: &exp2 })?;
    for (probe, (prediction, sample, residual)) in refine.probes.iter().zip(FIRST_MODEL_PROBES) {
        let at = probe_name(&probe.point);
        checks.push(Check::new(format!("first model prediction at {at}"), prediction, probe.prediction, 0.01));
        checks.push(Check::new(format!("first model sample at {at}"), sample, probe.sample, 1e-9));
        checks.push(Check::new(format!("first model residual at {at}"), residual, probe.residual, 0.01));
    }
    checks.push(Check::flag(
        "first model refinement zooms to scale 0.5",
        matches!(refine.decision, Decision::Zoom { scale, .. } if scale == 0.5),
    ));

    // second model at the baseline
    let corners2 = exp2.without_baseline();
    let second = fit_ols(&corners2, &all_terms)?;
    let origin = second.predict(&DesignPoint::splat(names.len(), 0.0))?.value;
    checks.push(Check::new("second model baseline prediction", SECOND_MODEL_BASELINE, origin, 0.001));
    let mean = corners2.responses().iter().sum::<f64>() / corners2.len() as f64;
    checks.push(Check::new("second model baseline equals corner mean", mean, origin, 1e-9));
    let config2 = CampaignConfig { scale: 0.5, ..CampaignConfig::default() };
    let refine2 = refine_step(&second, &config2, &TableSource { table: &exp2 })?;
    checks.push(Check::new("second model baseline residual magnitude", 1.1504, refine2.probes[0].residual.abs(), 1e-4));
    checks.push(Check::flag("second model refinement accepts", refine2.decision == Decision::Accept));

    // full model on corners plus validation points
    let combined = corners2.concat(&validation)?;
    let full = fit_ols(&combined, &all_terms)?;
    checks.push(Check::new("combined observation count", 104.0, full.n_obs as f64, 0.0));
    checks.push(Check::new("full model R²", FULL_R2, full.r_squared, 0.001));
    checks.push(Check::new("full model adjusted R²", FULL_ADJ_R2, adj(&full), 0.002));

    // the same fit with the baseline row counted twice
    let with_baseline = exp2.concat(&validation)?;
    let full105 = fit_ols(&with_baseline, &all_terms)?;
    supplementary.push(Check::new("full model R² on 105 points", FULL_R2, full105.r_squared, 0.001));
    supplementary.push(Check::new("full model adjusted R² on 105 points", FULL_ADJ_R2, adj(&full105), 0.002));

    // reduced model
    let terms = expand_formula(SIMPLIFIED_FORMULA, &names)?;
    checks.push(Check::new("simplified model term count", 13.0, terms.len() as f64, 0.0));
    let simplified = fit_ols(&combined, &terms)?;
    checks.push(Check::new("simplified model R²", SIMPLIFIED_R2, simplified.r_squared, 0.001));
    checks.push(Check::new("simplified model adjusted R²", SIMPLIFIED_ADJ_R2, adj(&simplified), 0.002));
    for (label, published) in PUBLISHED_SIMPLIFIED {
        let actual = simplified.coefficient(label).unwrap_or(f64::NAN);
        checks.push(Check::new(format!("simplified coefficient {label}"), published, actual, 0.01));
    }
    let pareto_order: Vec<String> = pareto_effects(&simplified).into_iter().map(|e| e.term).collect();
    checks.push(Check::flag(
        "largest effect is truth:depth:weight",
        pareto_order.first().map(String::as_str) == Some("truth:depth:weight"),
    ));

    Ok(ReplicationReport { checks, supplementary, pareto_order })
}

fn adj(model: &FittedModel) -> f64 {
    model.adj_r_squared.unwrap_or(f64::NAN)
}

fn probe_name(point: &DesignPoint) -> String {
    let k = point.len();
    let probes = diagonal_probe(k);
    match probes.iter().position(|p| p == point) {
        Some(0) => "baseline".into(),
        Some(1) => "+0.5 diagonal".into(),
        Some(2) => "-0.5 diagonal".into(),
        _ => format!("{:?}", point.coords()),
    }
}
