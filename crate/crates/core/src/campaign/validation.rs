use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{measure_at, CampaignConfig};
use crate::doe::{DesignPoint, Factor, FactorSpace};
use crate::regression::{ExperimentRow, ExperimentTable};
use crate::sim::derive_seed;
use crate::{Error, Result};

/// Half-width of the mid-corner cube.
const MID_CORNER: f64 = 0.25;
/// Half-width of the region random points are drawn from.
const RANDOM_HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationSet {
    /// The centre plus corners of the cube at `±0.25`.
    MidCorners,
    /// Uniform points in `[−0.5, 0.5]^k`.
    RandomSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSample {
    pub set: ValidationSet,
    pub point: DesignPoint,
    /// `None` until measured.
    pub mape: Option<f64>,
}

/// Snaps a coordinate of an integer factor to a whole actual value without
/// leaving `[−limit, limit]`.
fn snap_within(factor: &Factor, coded: f64, limit: f64) -> f64 {
    let s = factor.snap_coded(coded);
    if s.abs() <= limit + 1e-12 {
        return s;
    }
    // step one whole unit back toward the centre
    let actual = factor.to_actual(s);
    let back = if s > 0.0 { actual - 1.0 } else { actual + 1.0 };
    factor.to_coded(back)
}

/// Two validation sets of `count` points each.
///
/// The first is the centre followed by `count − 1` distinct corners of the
/// `±0.25` cube, chosen before integer factors are snapped (so two corners
/// may coincide afterwards). The second is `count` uniform points in
/// `[−0.5, 0.5]^k`, integer factors snapped likewise.
pub fn sample_validation_points(
    space: &FactorSpace,
    count: usize,
    seed: u64,
) -> Result<Vec<ValidationSample>> {
    if count < 1 {
        return Err(Error::InvalidArgument("at least one point per set is required".into()));
    }
    let k = space.len();
    let n_corners = 1usize.checked_shl(k as u32).filter(|_| k < usize::BITS as usize);
    if n_corners.is_some_and(|n| count - 1 > n) {
        return Err(Error::InvalidArgument(format!(
            "{} distinct mid-corners requested but only {} exist",
            count - 1,
            n_corners.unwrap_or(0)
        )));
    }
    let snap = |coords: Vec<f64>, limit: f64| {
        DesignPoint::unchecked(
            space.factors().iter().zip(coords).map(|(f, c)| snap_within(f, c, limit)).collect(),
        )
    };

    let mut out = vec![ValidationSample {
        set: ValidationSet::MidCorners,
        point: DesignPoint::splat(k, 0.0),
        mape: None,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let chosen = index::sample(&mut rng, n_corners.unwrap_or(usize::MAX), count - 1);
    for corner in chosen.iter() {
        let coords = (0..k)
            .map(|j| if corner >> j & 1 == 1 { MID_CORNER } else { -MID_CORNER })
            .collect();
        out.push(ValidationSample { set: ValidationSet::MidCorners, point: snap(coords, MID_CORNER), mape: None });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    for _ in 0..count {
        let coords = (0..k).map(|_| rng.random_range(-RANDOM_HALF_WIDTH..=RANDOM_HALF_WIDTH)).collect();
        out.push(ValidationSample {
            set: ValidationSet::RandomSpace,
            point: snap(coords, RANDOM_HALF_WIDTH),
            mape: None,
        });
    }
    Ok(out)
}

/// Measures each sample on the simulator. Sample `i` uses the stream
/// `derive_seed(config.seed, 1_000_000 + i)`, clear of the campaign rows.
pub fn measure_points(config: &CampaignConfig, samples: &[ValidationSample]) -> Result<Vec<ValidationSample>> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = derive_seed(config.seed, 1_000_000 + i as u64);
            let mape = measure_at(config, &s.point, seed)
                .map_err(|e| Error::CampaignRow { std_order: i as u32, source: Box::new(e) })?;
            Ok(ValidationSample { mape: Some(mape), ..s.clone() })
        })
        .collect()
}

impl ValidationSample {
    /// Measured samples as an experiment table, numbered from 0.
    pub fn to_table(names: Vec<String>, samples: &[ValidationSample]) -> Result<ExperimentTable> {
        let rows = samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let response = s
                    .mape
                    .ok_or_else(|| Error::MissingMeasurement(s.point.coords().to_vec()))?;
                Ok(ExperimentRow { std_order: i as u32, coded: s.point.coords().to_vec(), response })
            })
            .collect::<Result<Vec<_>>>()?;
        ExperimentTable::new(names, rows)
    }
}
