use crate::{Error, Result};

pub const DEFAULT_SPAN: f64 = 2.0 / 3.0;
pub const DEFAULT_ITERATIONS: usize = 3;

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

fn bisquare(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u;
        t * t
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Cleveland's robust locally weighted regression, evaluated at every input
/// point. The curve comes back sorted by `x` (stable for ties).
///
/// Each local fit uses the `⌈span·n⌉` nearest neighbours with tricube
/// weights scaled by the distance to the farthest of them; each robustness
/// pass multiplies in bisquare weights of the residuals over six median
/// absolute residuals.
pub fn lowess(points: &[(f64, f64)], span: f64, iterations: usize) -> Result<Vec<(f64, f64)>> {
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::InvalidArgument(format!("LOWESS span must be in (0, 1], got {span}")));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidArgument("LOWESS input contains non-finite values".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let distinct = sorted.windows(2).filter(|w| w[0].0 != w[1].0).count() + usize::from(n > 0);
    if distinct < 2 {
        return Err(Error::InsufficientData(
            "LOWESS needs at least two distinct x values".into(),
        ));
    }
    let xs: Vec<f64> = sorted.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let q = ((span * n as f64).ceil() as usize).clamp(2, n);
    let range = xs[n - 1] - xs[0];

    let mut robustness = vec![1.0; n];
    let mut fitted = vec![0.0; n];
    for pass in 0..=iterations {
        for (i, f) in fitted.iter_mut().enumerate() {
            *f = local_fit(&xs, &ys, &robustness, i, q, range);
        }
        if pass == iterations {
            break;
        }
        let mut abs_res: Vec<f64> = ys.iter().zip(&fitted).map(|(y, f)| (y - f).abs()).collect();
        let scale = 6.0 * median(&mut abs_res);
        let mean_abs_y = ys.iter().map(|y| y.abs()).sum::<f64>() / n as f64;
        if scale <= 1e-7 * mean_abs_y || scale == 0.0 {
            break;
        }
        for i in 0..n {
            robustness[i] = bisquare((ys[i] - fitted[i]).abs() / scale);
        }
    }
    Ok(xs.into_iter().zip(fitted).collect())
}

fn local_fit(xs: &[f64], ys: &[f64], robustness: &[f64], i: usize, q: usize, range: f64) -> f64 {
    let x0 = xs[i];
    let mut dist: Vec<f64> = xs.iter().map(|x| (x - x0).abs()).collect();
    dist.sort_by(f64::total_cmp);
    let h = dist[q - 1];
    let weights: Vec<f64> = xs
        .iter()
        .zip(robustness)
        .map(|(x, r)| {
            let d = (x - x0).abs();
            let w = if h > 0.0 { tricube(d / h) } else if d == 0.0 { 1.0 } else { 0.0 };
            w * r
        })
        .collect();
    let sw: f64 = weights.iter().sum();
    if sw <= 0.0 {
        return ys[i];
    }
    let xbar = weights.iter().zip(xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = weights.iter().zip(ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = weights.iter().zip(xs).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    // all weight sits on x0 (or numerically so): the local line is flat
    if sxx <= 1e-30 * sw * range * range {
        return ybar;
    }
    let sxy: f64 = weights
        .iter()
        .zip(xs.iter().zip(ys))
        .map(|(w, (x, y))| w * (x - xbar) * (y - ybar))
        .sum();
    ybar + sxy / sxx * (x0 - xbar)
}
