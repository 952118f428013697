use serde::{Deserialize, Serialize};

use super::formula::Term;
use super::linalg::{back_substitute, householder, singular_values, upper_inverse, Matrix};
use super::table::ExperimentTable;
use crate::doe::DesignPoint;
use crate::special::student_t_two_sided;
use crate::{Error, Result};

/// Singular values below this fraction of the largest one make a design
/// rank-deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Default significance level for [`significant_terms`].
pub const DEFAULT_ALPHA: f64 = 0.05;

/// A least-squares model over coded factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelFile", try_from = "ModelFile")]
pub struct FittedModel {
    pub factor_names: Vec<String>,
    pub terms: Vec<Term>,
    pub coefficients: Vec<f64>,
    /// `None` when the fit has no residual degrees of freedom.
    pub std_errors: Option<Vec<f64>>,
    pub t_values: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
    pub r_squared: f64,
    pub adj_r_squared: Option<f64>,
    pub n_obs: usize,
    pub df_residual: usize,
    /// Observed minus fitted, per observation.
    pub residuals: Vec<f64>,
    pub fitted_values: Vec<f64>,
    /// Largest `|coded|` per factor among the fitted observations.
    pub span: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    /// Set when some coordinate lies outside the span the model was fitted on.
    pub extrapolation: bool,
}

/// One column per term; each entry is the product of the row's coded values
/// over the term's factors.
pub fn design_matrix(table: &ExperimentTable, terms: &[Term]) -> Matrix {
    let rows = table.rows();
    Matrix::from_fn(rows.len(), terms.len(), |i, j| terms[j].evaluate(&rows[i].coded))
}

fn check_terms(terms: &[Term], k: usize) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument("model needs at least one term".into()));
    }
    for (i, t) in terms.iter().enumerate() {
        if let Some(&bad) = t.factors().iter().find(|&&f| f >= k) {
            return Err(Error::InvalidArgument(format!(
                "term references factor {bad} but only {k} factors exist"
            )));
        }
        if terms[..i].contains(t) {
            return Err(Error::InvalidArgument("duplicate model term".into()));
        }
    }
    Ok(())
}

/// Ordinary least squares by Householder QR.
pub fn fit_ols(table: &ExperimentTable, terms: &[Term]) -> Result<FittedModel> {
    let names = table.factor_names();
    check_terms(terms, names.len())?;
    let n = table.len();
    let p = terms.len();
    if n < p {
        return Err(Error::UnderDetermined { n_obs: n, n_terms: p });
    }

    let x = design_matrix(table, terms);
    let y = table.responses();
    let qr = householder(&x, &y);

    let sv = singular_values(&qr.r);
    let sv_max = sv.iter().cloned().fold(0.0, f64::max);
    let sv_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if sv_max == 0.0 || sv_min <= RANK_TOLERANCE * sv_max {
        let threshold = RANK_TOLERANCE * sv_max;
        let diag = |j: usize| qr.r[(j, j)].abs();
        let column = (0..p)
            .find(|&j| diag(j) <= threshold)
            .unwrap_or_else(|| (0..p).min_by(|&a, &b| diag(a).total_cmp(&diag(b))).unwrap_or(0));
        return Err(Error::SingularDesign { column: terms[column].label(names) });
    }

    let coefficients = back_substitute(&qr.r, &qr.qty);
    let fitted_values = x.mul_vec(&coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted_values).map(|(a, b)| a - b).collect();

    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let df_residual = n - p;

    let (r_squared, adj_r_squared, std_errors, t_values, p_values) = if df_residual == 0 {
        (1.0, None, None, None, None)
    } else {
        let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
        let adj = 1.0 - (1.0 - r2) * (n - 1) as f64 / df_residual as f64;
        let sigma2 = ss_res / df_residual as f64;
        let r_inv = upper_inverse(&qr.r);
        let se: Vec<f64> = (0..p)
            .map(|i| {
                let row_norm2: f64 = (i..p).map(|j| r_inv[(i, j)].powi(2)).sum();
                (sigma2 * row_norm2).sqrt()
            })
            .collect();
        let t: Vec<f64> = coefficients.iter().zip(&se).map(|(c, s)| c / s).collect();
        let pv: Vec<f64> = t.iter().map(|&t| student_t_two_sided(t, df_residual as f64)).collect();
        (r2, Some(adj), Some(se), Some(t), Some(pv))
    };

    let span = (0..names.len())
        .map(|j| table.rows().iter().map(|r| r.coded[j].abs()).fold(0.0, f64::max))
        .collect();

    Ok(FittedModel {
        factor_names: names.to_vec(),
        terms: terms.to_vec(),
        coefficients,
        std_errors,
        t_values,
        p_values,
        r_squared,
        adj_r_squared,
        n_obs: n,
        df_residual,
        residuals,
        fitted_values,
        span,
    })
}

/// `Σ γ_T · Π coded` over the model's terms.
pub fn predict(model: &FittedModel, point: &DesignPoint) -> Result<Prediction> {
    model.predict(point)
}

impl FittedModel {
    pub fn predict(&self, point: &DesignPoint) -> Result<Prediction> {
        let coords = point.coords();
        if coords.len() != self.factor_names.len() {
            return Err(Error::InvalidArgument(format!(
                "model has {} factors, point has {}",
                self.factor_names.len(),
                coords.len()
            )));
        }
        let value = self
            .terms
            .iter()
            .zip(&self.coefficients)
            .map(|(t, c)| c * t.evaluate(coords))
            .sum();
        let extrapolation = coords.iter().zip(&self.span).any(|(c, s)| c.abs() > *s);
        Ok(Prediction { value, extrapolation })
    }

    pub fn intercept(&self) -> Option<f64> {
        self.terms.iter().position(Term::is_intercept).map(|i| self.coefficients[i])
    }

    pub fn term_labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label(&self.factor_names)).collect()
    }

    /// Coefficient of the term labelled `label` (e.g. `truth:depth`).
    pub fn coefficient(&self, label: &str) -> Option<f64> {
        let term = Term::parse_label(label, &self.factor_names).ok()?;
        self.terms.iter().position(|t| *t == term).map(|i| self.coefficients[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Terms with `p < alpha`; the intercept is always kept.
pub fn significant_terms(model: &FittedModel, alpha: f64) -> Result<Vec<Term>> {
    let p = model.p_values.as_ref().ok_or(Error::StatisticsUnavailable)?;
    Ok(model
        .terms
        .iter()
        .zip(p)
        .filter(|(t, &pv)| t.is_intercept() || pv < alpha)
        .map(|(t, _)| t.clone())
        .collect())
}

/// Serialized model layout; terms are written as factor-name labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    factor_names: Vec<String>,
    terms: Vec<String>,
    coefficients: Vec<f64>,
    std_errors: Option<Vec<f64>>,
    t_values: Option<Vec<f64>>,
    p_values: Option<Vec<f64>>,
    r_squared: f64,
    adj_r_squared: Option<f64>,
    n_obs: usize,
    df_residual: usize,
    residuals: Vec<f64>,
    fitted_values: Vec<f64>,
    span: Vec<f64>,
}

impl From<FittedModel> for ModelFile {
    fn from(m: FittedModel) -> Self {
        ModelFile {
            terms: m.term_labels(),
            factor_names: m.factor_names,
            coefficients: m.coefficients,
            std_errors: m.std_errors,
            t_values: m.t_values,
            p_values: m.p_values,
            r_squared: m.r_squared,
            adj_r_squared: m.adj_r_squared,
            n_obs: m.n_obs,
            df_residual: m.df_residual,
            residuals: m.residuals,
            fitted_values: m.fitted_values,
            span: m.span,
        }
    }
}

impl TryFrom<ModelFile> for FittedModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let terms = f
            .terms
            .iter()
            .map(|l| Term::parse_label(l, &f.factor_names))
            .collect::<Result<Vec<_>>>()?;
        let p = terms.len();
        let lens_ok = f.coefficients.len() == p
            && [&f.std_errors, &f.t_values, &f.p_values]
                .iter()
                .all(|v| v.as_ref().is_none_or(|v| v.len() == p))
            && f.span.len() == f.factor_names.len();
        if !lens_ok {
            return Err(Error::Schema("model arrays do not match the term list".into()));
        }
        Ok(FittedModel {
            factor_names: f.factor_names,
            terms,
            coefficients: f.coefficients,
            std_errors: f.std_errors,
            t_values: f.t_values,
            p_values: f.p_values,
            r_squared: f.r_squared,
            adj_r_squared: f.adj_r_squared,
            n_obs: f.n_obs,
            df_residual: f.df_residual,
            residuals: f.residuals,
            fitted_values: f.fitted_values,
            span: f.span,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::full_factorial;
    use crate::regression::formula::{expand_formula, saturated_terms};
    use crate::regression::table::ExperimentRow;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("x{i}")).collect()
    }

    fn line_table(xs: &[f64], ys: &[f64]) -> ExperimentTable {
        let rows = xs
            .iter()
            .zip(ys)
            .enumerate()
            .map(|(i, (&x, &y))| ExperimentRow { std_order: i as u32 + 1, coded: vec![x], response: y })
            .collect();
        ExperimentTable::new(names(1), rows).unwrap()
    }

    #[test]
    fn simple_line_with_statistics() {
        // y = 1 + 2x with residuals ±0.1 alternating; hand-computed values
        let xs = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let ys = [-1.0 + 0.1, 0.0 - 0.1, 1.0 + 0.1, 2.0 - 0.1, 3.0 + 0.1];
        let t = line_table(&xs, &ys);
        let m = fit_ols(&t, &saturated_terms(1)).unwrap();
        // slope = Σxy/Σx² with centered x (mean 0): (Σx y) / 2.5
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let mean_y = ys.iter().sum::<f64>() / 5.0;
        assert!((m.coefficients[0] - mean_y).abs() < 1e-12);
        assert!((m.coefficients[1] - sxy / 2.5).abs() < 1e-12);
        assert_eq!(m.df_residual, 3);
        let ss_res: f64 = m.residuals.iter().map(|r| r * r).sum();
        let se_slope = (ss_res / 3.0 / 2.5).sqrt();
        assert!((m.std_errors.as_ref().unwrap()[1] - se_slope).abs() < 1e-12);
        let adj = 1.0 - (1.0 - m.r_squared) * 4.0 / 3.0;
        assert!((m.adj_r_squared.unwrap() - adj).abs() < 1e-12);
        assert!(m.p_values.as_ref().unwrap()[1] < 1e-3);
    }

    #[test]
    fn exact_fit_has_no_statistics() {
        let d = full_factorial(3, 1.0).unwrap();
        let ys: Vec<f64> = (0..8).map(|i| (i * i) as f64 - 3.0).collect();
        let t = ExperimentTable::from_design(names(3), &d, &ys).unwrap();
        let m = fit_ols(&t, &saturated_terms(3)).unwrap();
        assert_eq!(m.df_residual, 0);
        assert_eq!(m.r_squared, 1.0);
        assert!(m.p_values.is_none() && m.adj_r_squared.is_none());
        assert!(m.residuals.iter().all(|r| r.abs() < 1e-12));
        assert!(matches!(significant_terms(&m, 0.05), Err(Error::StatisticsUnavailable)));
    }

    #[test]
    fn orthogonal_design_closed_form_coefficients() {
        for &s in &[1.0, 0.5, 0.25] {
            let k = 4;
            let d = full_factorial(k, s).unwrap();
            let ys: Vec<f64> = (0..16).map(|i| ((i * 7919) % 23) as f64 + 0.5 * i as f64).collect();
            let t = ExperimentTable::from_design(names(k), &d, &ys).unwrap();
            let terms = saturated_terms(k);
            let m = fit_ols(&t, &terms).unwrap();
            for (term, &coef) in terms.iter().zip(&m.coefficients) {
                let contrast: f64 = d
                    .points()
                    .iter()
                    .zip(&ys)
                    .map(|(p, y)| y * term.factors().iter().map(|&f| p.coords()[f].signum()).product::<f64>())
                    .sum();
                let expected = contrast / 16.0 / s.powi(term.order() as i32);
                assert!((coef - expected).abs() < 1e-9 * (1.0 + expected.abs()));
            }
            // origin prediction is the intercept, which is the mean here
            let origin = m.predict(&DesignPoint::splat(k, 0.0)).unwrap();
            assert_eq!(origin.value, m.coefficients[0]);
            assert!((origin.value - ys.iter().sum::<f64>() / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_design_names_the_dependent_column() {
        // x1 duplicates x0
        let rows: Vec<ExperimentRow> = (0..6)
            .map(|i| {
                let v = i as f64 / 5.0 - 0.5;
                ExperimentRow { std_order: i + 1, coded: vec![v, v], response: i as f64 }
            })
            .collect();
        let t = ExperimentTable::new(names(2), rows).unwrap();
        let terms = expand_formula("x0 + x1", &names(2)).unwrap();
        match fit_ols(&t, &terms) {
            Err(Error::SingularDesign { column }) => assert_eq!(column, "x1"),
            other => panic!("expected singular design, got {other:?}"),
        }
    }

    #[test]
    fn under_determined() {
        let t = line_table(&[0.0], &[1.0]);
        assert!(matches!(
            fit_ols(&t, &saturated_terms(1)),
            Err(Error::UnderDetermined { n_obs: 1, n_terms: 2 })
        ));
    }

    #[test]
    fn design_matrix_entries() {
        let t = ExperimentTable::new(
            names(2),
            vec![ExperimentRow { std_order: 1, coded: vec![0.5, -0.5], response: 0.0 }],
        )
        .unwrap();
        let x = design_matrix(&t, &saturated_terms(2));
        assert_eq!(x.row(0), &[1.0, 0.5, -0.5, -0.25]);

        let d = full_factorial(2, 1.0).unwrap();
        let t = ExperimentTable::from_design(names(2), &d, &[0.0; 4]).unwrap();
        let g = design_matrix(&t, &saturated_terms(2)).gram();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g[(i, j)], if i == j { 4.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn significance_filter() {
        let mut m = fit_ols(&line_table(&[-1.0, 0.0, 1.0, 0.5], &[0.0, 1.0, 2.1, 1.4]), &saturated_terms(1)).unwrap();
        m.p_values = Some(vec![0.5, 0.5]);
        assert_eq!(significant_terms(&m, 0.05).unwrap(), vec![Term::intercept()]);
        m.p_values = Some(vec![0.5, 0.01]);
        assert_eq!(significant_terms(&m, 0.05).unwrap().len(), 2);
    }

    #[test]
    fn prediction_flags_extrapolation() {
        let d = full_factorial(2, 0.5).unwrap();
        let t = ExperimentTable::from_design(names(2), &d, &[1.0, 2.0, 3.0, 5.0]).unwrap();
        let m = fit_ols(&t, &saturated_terms(2)).unwrap();
        assert!(!m.predict(&DesignPoint::splat(2, 0.5)).unwrap().extrapolation);
        assert!(m.predict(&DesignPoint::unchecked(vec![0.0, 0.75])).unwrap().extrapolation);
        assert!(m.predict(&DesignPoint::splat(3, 0.0)).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let d = full_factorial(2, 1.0).unwrap();
        let t = ExperimentTable::from_design(names(2), &d, &[1.0, 2.5, 3.0, 5.0]).unwrap();
        let m = fit_ols(&t, &expand_formula("x0 + x1", &names(2)).unwrap()).unwrap();
        let json = m.to_json();
        assert!(json.contains("\"x0\""));
        assert_eq!(FittedModel::from_json(&json).unwrap(), m);
        assert_eq!(m.coefficient("x1"), Some(m.coefficients[2]));
        assert!(FittedModel::from_json("{\"factor_names\": []}").is_err());
    }

    proptest! {
        #[test]
        fn residual_and_r2_invariants(
            ys in prop::collection::vec(-100.0f64..100.0, 12),
            xs in prop::collection::vec(-1.0f64..1.0, 24),
        ) {
            let rows: Vec<ExperimentRow> = (0..12)
                .map(|i| ExperimentRow { std_order: i as u32, coded: vec![xs[2 * i], xs[2 * i + 1]], response: ys[i] })
                .collect();
            let t = ExperimentTable::new(names(2), rows).unwrap();
            for terms in [vec![Term::intercept()], saturated_terms(2)] {
                let m = fit_ols(&t, &terms).unwrap();
                let norm = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
                prop_assert!(m.residuals.iter().sum::<f64>().abs() <= 1e-9 * norm.max(1.0));
                prop_assert!((0.0..=1.0).contains(&m.r_squared));
                let adj = m.adj_r_squared.unwrap();
                if terms.len() == 1 {
                    prop_assert!((adj - m.r_squared).abs() < 1e-12);
                } else {
                    prop_assert!(adj <= m.r_squared);
                }
                let origin = m.predict(&DesignPoint::splat(2, 0.0)).unwrap().value;
                prop_assert_eq!(origin, m.coefficients[0]);
            }
        }
    }
}
