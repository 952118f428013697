//! Reference oracles for the acceptance suite. Each one computes its answer
//! a different way from the library it checks: exact enumeration, exact
//! rational arithmetic, or an external statistics crate.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use rrdoe::poll::build_spine_poll;
use rrdoe::sim::{estimate_target, QuestionTally, ResponseTally};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Exact expectation of the library's target estimate for a one-question
/// poll with `n_alts` alternatives, summed over every joint report outcome.
///
/// `true_alts[r]` is respondent `r`'s true alternative; the target is
/// alternative 0. A respondent reports their true answer with probability
/// `p`, otherwise draws from the weights `(w, (1−w)/(m−1), …)`.
pub fn expected_estimate(true_alts: &[usize], n_alts: usize, p: f64, w: f64) -> f64 {
    let poll = build_spine_poll(1, n_alts, w).expect("valid poll");
    let question_id = poll.root.id.clone();
    let weights: Vec<f64> =
        (0..n_alts).map(|a| if a == 0 { w } else { (1.0 - w) / (n_alts - 1) as f64 }).collect();
    let pop = true_alts.len();

    let mut expectation = 0.0;
    let mut outcome = vec![0usize; pop];
    loop {
        let prob: f64 = outcome
            .iter()
            .zip(true_alts)
            .map(|(&reported, &truth)| {
                let honest = if reported == truth { p } else { 0.0 };
                honest + (1.0 - p) * weights[reported]
            })
            .product();
        let mut counts = vec![0u64; n_alts];
        for &r in &outcome {
            counts[r] += 1;
        }
        let tally = ResponseTally {
            questions: BTreeMap::from([(
                question_id.clone(),
                QuestionTally { answered: pop as u64, counts },
            )]),
        };
        expectation += prob * estimate_target(&poll, &tally, p).expect("estimable");

        // odometer over n_alts^pop outcomes
        let mut i = 0;
        while i < pop {
            outcome[i] += 1;
            if outcome[i] < n_alts {
                break;
            }
            outcome[i] = 0;
            i += 1;
        }
        if i == pop {
            break;
        }
    }
    expectation
}

/// Least-squares coefficients from the normal equations `XᵀX β = Xᵀy`,
/// solved exactly and rounded once at the end. Returns `None` when `XᵀX` is
/// singular.
///
/// Every double is a dyadic rational, so scaling by a power of two turns the
/// system into integers; Bareiss fraction-free elimination then keeps all
/// intermediate values integral.
pub fn rational_least_squares(x: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = x.first().map_or(0, Vec::len);
    let to_q = |v: f64| BigRational::from_f64(v).expect("finite input");
    let xq: Vec<Vec<BigRational>> = x.iter().map(|r| r.iter().map(|&v| to_q(v)).collect()).collect();
    let yq: Vec<BigRational> = y.iter().map(|&v| to_q(v)).collect();

    // augmented [XᵀX | Xᵀy], each row scaled to integers
    let mut a: Vec<Vec<BigInt>> = (0..p)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..p)
                .map(|j| xq.iter().fold(BigRational::zero(), |s, r| s + &r[i] * &r[j]))
                .collect();
            row.push(xq.iter().zip(&yq).fold(BigRational::zero(), |s, (r, yv)| s + &r[i] * yv));
            let den = row.iter().fold(BigInt::from(1), |l, q| l.lcm(q.denom()));
            row.iter().map(|q| q.numer() * (&den / q.denom())).collect()
        })
        .collect();

    let mut prev = BigInt::from(1);
    for k in 0..p {
        let pivot = (k..p).find(|&r| !a[r][k].is_zero())?;
        a.swap(k, pivot);
        for i in (k + 1)..p {
            for j in (k + 1)..=p {
                let v = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }

    let mut beta: Vec<BigRational> = vec![BigRational::zero(); p];
    for i in (0..p).rev() {
        let mut acc = BigRational::from_integer(a[i][p].clone());
        for j in (i + 1)..p {
            acc -= BigRational::from_integer(a[i][j].clone()) * &beta[j];
        }
        beta[i] = acc / BigRational::from_integer(a[i][i].clone());
    }
    Some(beta.iter().map(|b| b.to_f64().unwrap_or(f64::NAN)).collect())
}

/// `|a − b|` measured exactly, for checks that must not be blurred by
/// floating-point subtraction.
pub fn exact_distance(a: f64, num: i64, den: i64) -> f64 {
    let q = BigRational::new(BigInt::from(num), BigInt::from(den));
    (BigRational::from_f64(a).expect("finite") - q).abs().to_f64().unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Welch {
    pub t: f64,
    pub df: f64,
    /// One-sided p-value for `mean(a) < mean(b)`.
    pub p_less: f64,
}

/// Welch's unequal-variance t statistic for `a` against `b`.
pub fn welch(a: &[f64], b: &[f64]) -> Welch {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, var)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Welch { t, df, p_less: dist.cdf(t) }
}
