//! The experiment workflow: design a factorial campaign, measure it on the
//! simulator, fit, check the fit on probe points and zoom in when needed.

mod fixtures;
mod refine;
mod replicate;
mod validation;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doe::{full_factorial, DesignPoint, FactorSpace};
use crate::regression::{expand_formula, saturated_terms, ExperimentRow, ExperimentTable, Term};
use crate::sim::{derive_seed, run_setting_with, ScenarioParams, TallyMethod};
use crate::{Error, Result};

pub use fixtures::{load_fixture, FixtureName};
pub use refine::{refine_step, Decision, Probe, RefineOutcome};
pub use replicate::{replicate_paper, Check, ReplicationReport, PUBLISHED_SIMPLIFIED, SIMPLIFIED_FORMULA};
pub use validation::{measure_points, sample_validation_points, ValidationSample, ValidationSet};

/// Settings for one factorial campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub factors: FactorSpace,
    /// Half-width of the design in coded units.
    pub scale: f64,
    /// Simulator repetitions per setting.
    pub reps: usize,
    pub seed: u64,
    /// Model formula; `None` means all interactions.
    pub formula: Option<String>,
    /// Largest acceptable absolute probe residual, in MAPE points.
    pub refine_threshold: f64,
    pub max_refinements: u32,
    /// Actual values that replace the design's value for a factor at every
    /// point, keyed by factor name.
    pub overrides: BTreeMap<String, f64>,
    pub tally: TallyMethod,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            factors: FactorSpace::randori(),
            scale: 1.0,
            reps: 30,
            seed: 0x5EED,
            formula: None,
            refine_threshold: 10.0,
            max_refinements: 3,
            overrides: BTreeMap::new(),
            tally: TallyMethod::default(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::InvalidArgument(format!("scale must be in (0, 1], got {}", self.scale)));
        }
        if self.reps < 1 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if self.refine_threshold.is_nan() || self.refine_threshold < 0.0 {
            return Err(Error::InvalidArgument("refine_threshold must be non-negative".into()));
        }
        for name in self.overrides.keys() {
            if !PARAM_NAMES.contains(&name.as_str()) {
                return Err(Error::InvalidArgument(format!("override for unknown parameter `{name}`")));
            }
        }
        scenario_for(self, &DesignPoint::splat(self.factors.len(), 0.0)).map(|_| ())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: CampaignConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    /// Model terms for this campaign's formula.
    pub fn terms(&self) -> Result<Vec<Term>> {
        match &self.formula {
            Some(f) => expand_formula(f, &self.factors.names()),
            None => Ok(saturated_terms(self.factors.len())),
        }
    }
}

const PARAM_NAMES: [&str; 6] = ["truth", "depth", "alts", "weight", "pop", "answers"];

/// Simulator parameters at a coded point. Factors are matched to parameters
/// by name; parameters without a factor keep their baseline value.
pub fn scenario_for(config: &CampaignConfig, point: &DesignPoint) -> Result<ScenarioParams> {
    let actual = config.factors.to_actual(point)?;
    let mut s = ScenarioParams::baseline();
    let values = config
        .factors
        .names()
        .into_iter()
        .zip(actual)
        .chain(config.overrides.iter().map(|(k, v)| (k.clone(), *v)));
    for (name, v) in values {
        match name.as_str() {
            "truth" => s.pr_truth = v,
            "depth" => s.depth = whole(&name, v)? as u32,
            "alts" => s.n_alts = whole(&name, v)? as u32,
            "weight" => s.target_weight = v,
            "pop" => s.population = whole(&name, v)?,
            "answers" => s.answers_fraction = v,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "factor `{other}` is not a simulator parameter (expected one of {})",
                    PARAM_NAMES.join(", ")
                )))
            }
        }
    }
    s.validate()?;
    Ok(s)
}

fn whole(name: &str, v: f64) -> Result<u64> {
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 * 4.0 {
        return Err(Error::InvalidArgument(format!("`{name}` must be a non-negative whole number, got {v}")));
    }
    Ok(v as u64)
}

/// Somewhere to obtain a MAPE measurement for a coded point.
pub trait MeasurementSource: Sync {
    fn measure(&self, point: &DesignPoint) -> Result<f64>;
}

/// Runs the simulator. The seed for a point is derived from the campaign
/// seed and the point's coordinates, so repeated probes agree.
#[derive(Debug, Clone)]
pub struct SimulatorSource<'a> {
    pub config: &'a CampaignConfig,
}

impl MeasurementSource for SimulatorSource<'_> {
    fn measure(&self, point: &DesignPoint) -> Result<f64> {
        let seed = point
            .coords()
            .iter()
            .fold(derive_seed(self.config.seed, u64::MAX), |s, c| derive_seed(s, c.to_bits()));
        measure_at(self.config, point, seed)
    }
}

/// Looks measurements up in a table of earlier results.
#[derive(Debug, Clone)]
pub struct TableSource<'a> {
    pub table: &'a ExperimentTable,
}

impl MeasurementSource for TableSource<'_> {
    fn measure(&self, point: &DesignPoint) -> Result<f64> {
        self.table
            .rows()
            .iter()
            .find(|r| {
                r.coded.len() == point.len()
                    && r.coded.iter().zip(point.coords()).all(|(a, b)| (a - b).abs() < 1e-9)
            })
            .map(|r| r.response)
            .ok_or_else(|| Error::MissingMeasurement(point.coords().to_vec()))
    }
}

fn measure_at(config: &CampaignConfig, point: &DesignPoint, seed: u64) -> Result<f64> {
    let scenario = scenario_for(config, point)?;
    Ok(run_setting_with(&scenario, config.reps, seed, config.tally)?.mape)
}

/// Measures the baseline and every corner of `full_factorial(k, scale)`.
/// The baseline is row `0`; the corners follow in standard order.
pub fn run_campaign(config: &CampaignConfig) -> Result<ExperimentTable> {
    run_campaign_with(config, None)
}

/// As [`run_campaign`], taking measurements already present in `known`
/// instead of re-running them.
pub fn run_campaign_with(config: &CampaignConfig, known: Option<&ExperimentTable>) -> Result<ExperimentTable> {
    config.validate()?;
    let k = config.factors.len();
    let design = full_factorial(k, config.scale)?;
    let mut settings = vec![(0u32, DesignPoint::splat(k, 0.0))];
    settings.extend(design.iter().map(|(label, p)| (label, p.clone())));

    let rows = settings
        .into_par_iter()
        .map(|(std_order, point)| {
            let reused = known.and_then(|t| TableSource { table: t }.measure(&point).ok());
            let response = match reused {
                Some(v) => v,
                None => measure_at(config, &point, derive_seed(config.seed, std_order as u64))
                    .map_err(|e| Error::CampaignRow { std_order, source: Box::new(e) })?,
            };
            Ok(ExperimentRow { std_order, coded: point.coords().to_vec(), response })
        })
        .collect::<Result<Vec<_>>>()?;
    ExperimentTable::new(config.factors.names(), rows)
}
