use serde::{Deserialize, Serialize};

use super::{CampaignConfig, MeasurementSource};
use crate::doe::{diagonal_probe, DesignPoint};
use crate::regression::{ExperimentRow, FittedModel};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub point: DesignPoint,
    pub prediction: f64,
    pub sample: f64,
    /// `prediction − sample`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Accept,
    /// Re-run the factorial at `scale`. `reused` holds probe measurements that
    /// land on the new design (its baseline and diagonal corners).
    Zoom { scale: f64, reused: Vec<ExperimentRow> },
    /// The residuals are still large after `max_refinements` halvings.
    NotConverged { refinements: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub probes: Vec<Probe>,
    pub threshold: f64,
    pub max_abs_residual: f64,
    pub decision: Decision,
}

/// Checks `model` at the baseline and the `±0.5` diagonal and decides
/// whether to accept it. `config.scale` is the scale the model was fitted
/// at; every halving below 1 counts as one refinement already spent.
pub fn refine_step(
    model: &FittedModel,
    config: &CampaignConfig,
    source: &dyn MeasurementSource,
) -> Result<RefineOutcome> {
    let k = model.factor_names.len();
    let probes = diagonal_probe(k)
        .into_iter()
        .map(|point| {
            let prediction = model.predict(&point)?.value;
            let sample = source.measure(&point)?;
            Ok(Probe { point, prediction, sample, residual: prediction - sample })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_residual = probes.iter().map(|p| p.residual.abs()).fold(0.0, f64::max);

    let decision = if max_abs_residual <= config.refine_threshold {
        Decision::Accept
    } else {
        let spent = (1.0 / config.scale).log2().round().max(0.0) as u32;
        if spent >= config.max_refinements {
            Decision::NotConverged { refinements: spent }
        } else {
            let scale = config.scale / 2.0;
            let n_corners = 1u32 << k;
            let reused = probes
                .iter()
                .filter_map(|p| {
                    let v = p.point.coords()[0];
                    let std_order = if v == 0.0 {
                        0
                    } else if v == scale {
                        n_corners
                    } else if v == -scale {
                        1
                    } else {
                        return None;
                    };
                    Some(ExperimentRow { std_order, coded: p.point.coords().to_vec(), response: p.sample })
                })
                .collect();
            Decision::Zoom { scale, reused }
        }
    };
    Ok(RefineOutcome { probes, threshold: config.refine_threshold, max_abs_residual, decision })
}
