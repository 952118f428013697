//! The published regression pipeline run on the bundled tables.

use rrdoe::campaign::{load_fixture, refine_step, CampaignConfig, Decision, TableSource, SIMPLIFIED_FORMULA};
use rrdoe::diagnostics::{pareto_effects, DiagnosticsOptions, DiagnosticsReport, DiagnosticsSummary};
use rrdoe::doe::{diagonal_probe, DesignPoint};
use rrdoe::regression::{expand_formula, fit_ols, saturated_terms, ExperimentTable};

fn combined() -> ExperimentTable {
    let corners = load_fixture("exp2").unwrap().without_baseline();
    corners.concat(&load_fixture("validation").unwrap()).unwrap()
}

#[test]
fn first_model_probes() {
    let exp1 = load_fixture("exp1").unwrap();
    let model = fit_ols(&exp1.without_baseline(), &saturated_terms(6)).unwrap();
    let expected = [418.7087, 124.8765, 731.8813];
    for (point, want) in diagonal_probe(6).iter().zip(expected) {
        let got = model.predict(point).unwrap().value;
        assert!((got - want).abs() < 0.01, "{:?}: {got} vs {want}", point.coords());
    }
    // a saturated fit on 64 corners interpolates them
    assert_eq!(model.df_residual, 0);
    assert!(model.residuals.iter().all(|r| r.abs() < 1e-6));
    assert!(model.std_errors.is_none());
}

#[test]
fn second_model_baseline_is_the_corner_mean() {
    let corners = load_fixture("exp2").unwrap().without_baseline();
    let model = fit_ols(&corners, &saturated_terms(6)).unwrap();
    let origin = model.predict(&DesignPoint::splat(6, 0.0)).unwrap().value;
    let mean = corners.responses().iter().sum::<f64>() / 64.0;
    assert!((origin - 32.89371).abs() < 0.001);
    assert!((origin - mean).abs() < 1e-9);
}

#[test]
fn refinement_decisions() {
    let exp1 = load_fixture("exp1").unwrap();
    let exp2 = load_fixture("exp2").unwrap();
    let first = fit_ols(&exp1.without_baseline(), &saturated_terms(6)).unwrap();
    let out = refine_step(&first, &CampaignConfig::default(), &TableSource { table: &exp2 }).unwrap();
    let residuals: Vec<f64> = out.probes.iter().map(|p| p.residual).collect();
    for (r, want) in residuals.iter().zip([384.6646, 110.4592, 693.6448]) {
        assert!((r - want).abs() < 0.01);
    }
    assert!(matches!(out.decision, Decision::Zoom { scale, .. } if scale == 0.5));

    let second = fit_ols(&exp2.without_baseline(), &saturated_terms(6)).unwrap();
    let config = CampaignConfig { scale: 0.5, ..CampaignConfig::default() };
    let out = refine_step(&second, &config, &TableSource { table: &exp2 }).unwrap();
    assert_eq!(out.decision, Decision::Accept);
    assert!((out.probes[0].residual.abs() - 1.1504).abs() < 1e-4);
}

#[test]
fn full_model_on_104_points() {
    let table = combined();
    assert_eq!(table.len(), 104);
    let model = fit_ols(&table, &saturated_terms(6)).unwrap();
    assert!((model.r_squared - 0.8419).abs() < 0.001);
    assert!((model.adj_r_squared.unwrap() - 0.5929).abs() < 0.002);
    assert_eq!(model.df_residual, 40);
}

#[test]
fn simplified_model_fit_and_ordering() {
    let table = combined();
    let terms = expand_formula(SIMPLIFIED_FORMULA, table.factor_names()).unwrap();
    assert_eq!(terms.len(), 13);
    let model = fit_ols(&table, &terms).unwrap();
    assert!((model.r_squared - 0.7846).abs() < 0.001);
    assert!((model.adj_r_squared.unwrap() - 0.7562).abs() < 0.002);
    let effects = pareto_effects(&model);
    assert_eq!(effects[0].term, "truth:depth:weight");
    assert!(effects.windows(2).all(|w| w[0].magnitude >= w[1].magnitude));
    // the intercept is not an effect
    assert!(effects.iter().all(|e| e.term != "(Intercept)"));
}

#[test]
fn simplified_model_diagnostics() {
    let table = combined();
    let terms = expand_formula(SIMPLIFIED_FORMULA, table.factor_names()).unwrap();
    let model = fit_ols(&table, &terms).unwrap();
    let validation = load_fixture("validation").unwrap();
    let report = DiagnosticsReport::build(&model, &validation.samples(), DiagnosticsOptions::default()).unwrap();
    assert_eq!(report.residuals.len(), 40);
    assert_eq!(report.histogram.len(), 7);
    assert_eq!(report.histogram.iter().map(|b| b.count).sum::<usize>(), 40);
    assert_eq!(report.qq.points.len(), 40);
    assert_eq!(report.lowess_curve.len(), 40);
    let summary = DiagnosticsSummary::new(&model, &report);
    assert_eq!(summary.n_samples, 40);
    assert!(summary.min_residual <= summary.max_residual);
    assert_eq!(summary.max_abs_residual, summary.min_residual.abs().max(summary.max_residual.abs()));
}
