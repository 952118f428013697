//! `rrdoe` command-line front end.

mod error;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rrdoe::campaign::{
    load_fixture, measure_points, refine_step, replicate_paper, run_campaign_with, sample_validation_points,
    CampaignConfig, MeasurementSource, SimulatorSource, TableSource, ValidationSample, ValidationSet,
};
use rrdoe::diagnostics::{render_report, BinRule, DiagnosticsOptions, DiagnosticsReport, DiagnosticsSummary, PlotKind};
use rrdoe::doe::{full_factorial, DesignPoint};
use rrdoe::regression::{expand_formula, fit_ols, saturated_terms, ExperimentTable, FittedModel};
use rrdoe::sim::{run_setting_with, ScenarioParams, TallyMethod};
use serde::Serialize;

use error::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "rrdoe", version, about = "Factorial experiments and error models for randomized-response polls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a two-level full-factorial design as CSV.
    Design(DesignArgs),
    /// Run the simulator at one setting and print the result as JSON.
    Simulate(SimulateArgs),
    /// Measure the baseline and every corner of a factorial design.
    RunCampaign(RunCampaignArgs),
    /// Fit a least-squares model and write it as JSON.
    Fit(FitArgs),
    /// Sample and measure validation points.
    Validate(ValidateArgs),
    /// Write residual plots and a summary for a model.
    Diagnose(DiagnoseArgs),
    /// Evaluate a model at coded points.
    Predict(PredictArgs),
    /// Check a model on the diagonal probes and decide whether to zoom in.
    Refine(RefineArgs),
    /// Re-run the published analysis on the bundled data.
    ReplicatePaper,
}

/// Campaign settings shared by the commands that use the simulator.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// Campaign config JSON; defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Half-width of the design in coded units.
    #[arg(long)]
    scale: Option<f64>,
    /// Simulator repetitions per setting.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<CampaignConfig> {
        let mut config = match &self.config {
            Some(path) => CampaignConfig::from_json(&read(path)?)?,
            None => CampaignConfig::default(),
        };
        if let Some(s) = self.scale {
            config.scale = s;
        }
        if let Some(r) = self.reps {
            config.reps = r;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Print actual factor values instead of coded ones.
    #[arg(long)]
    actual: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Probability of answering truthfully.
    #[arg(long, default_value_t = ScenarioParams::baseline().pr_truth)]
    truth: f64,
    /// Number of questions on the target chain.
    #[arg(long, default_value_t = ScenarioParams::baseline().depth)]
    depth: u32,
    /// Alternatives per question.
    #[arg(long, default_value_t = ScenarioParams::baseline().n_alts)]
    alts: u32,
    /// Randomization weight of the target alternative.
    #[arg(long, default_value_t = ScenarioParams::baseline().target_weight)]
    weight: f64,
    /// Number of respondents.
    #[arg(long, default_value_t = ScenarioParams::baseline().population)]
    pop: u64,
    /// Fraction of respondents whose true answer is the target.
    #[arg(long, default_value_t = ScenarioParams::baseline().answers_fraction)]
    answers: f64,
    #[arg(long, default_value_t = 30)]
    reps: usize,
    #[arg(long, default_value_t = CampaignConfig::default().seed)]
    seed: u64,
    /// Draw every respondent separately instead of one multinomial per group.
    #[arg(long)]
    per_respondent: bool,
}

#[derive(Debug, Args)]
struct RunCampaignArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Earlier results to reuse instead of re-measuring matching points.
    #[arg(long)]
    known: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Experiment CSV (or `fixture:<name>`); may be repeated.
    #[arg(long)]
    data: Vec<String>,
    /// As `--data`, but the baseline row (std_order 0) is left out.
    #[arg(long)]
    corners: Vec<String>,
    /// Model formula such as `MAPE ~ a*b + c`; all interactions when absent.
    #[arg(long)]
    formula: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Points per validation set.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Seed for choosing the points; the campaign seed when absent.
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Also report residuals of this model on the measured points.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    model: PathBuf,
    /// Experiment CSV (or `fixture:<name>`) of measured points.
    #[arg(long)]
    samples: Vec<String>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Histogram bins: `sturges` or a count.
    #[arg(long, default_value = "sturges")]
    bins: BinRule,
    /// LOWESS span.
    #[arg(long, default_value_t = DiagnosticsOptions::default().span)]
    span: f64,
    /// LOWESS robustness iterations.
    #[arg(long, default_value_t = DiagnosticsOptions::default().iterations)]
    iterations: usize,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated coded coordinates; may be repeated.
    #[arg(long = "point", required = true, allow_hyphen_values = true)]
    points: Vec<String>,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Largest acceptable absolute probe residual.
    #[arg(long)]
    threshold: Option<f64>,
    /// Look probe measurements up here instead of running the simulator.
    #[arg(long)]
    samples: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            return report(&CliError::Usage(message.trim_end().to_string()));
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> ExitCode {
    let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{body}");
    ExitCode::from(e.exit_code())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Design(a) => design(a),
        Command::Simulate(a) => simulate(a),
        Command::RunCampaign(a) => campaign(a),
        Command::Fit(a) => fit(a),
        Command::Validate(a) => validate(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Predict(a) => predict(a),
        Command::Refine(a) => refine(a),
        Command::ReplicatePaper => replicate(),
    }
}

fn design(a: DesignArgs) -> Result<()> {
    let config = a.config.load()?;
    let names = config.factors.names();
    let design = full_factorial(names.len(), config.scale)?;
    let text = if a.actual {
        let mut out = format!("std_order,{}\n", names.join(","));
        for (label, p) in design.iter() {
            write!(out, "{label}").unwrap();
            for v in config.factors.to_actual(p)? {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    } else {
        design.to_csv(&names)?
    };
    emit(a.out.as_deref(), &text)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let scenario = ScenarioParams {
        pr_truth: a.truth,
        depth: a.depth,
        n_alts: a.alts,
        target_weight: a.weight,
        population: a.pop,
        answers_fraction: a.answers,
    };
    let method = if a.per_respondent { TallyMethod::PerRespondent } else { TallyMethod::Aggregated };
    let result = run_setting_with(&scenario, a.reps, a.seed, method)?;
    print_json(&result)
}

fn campaign(a: RunCampaignArgs) -> Result<()> {
    let config = a.config.load()?;
    let known = a.known.as_deref().map(load_table).transpose()?;
    let table = run_campaign_with(&config, known.as_ref())?;
    emit(a.out.as_deref(), &table.to_csv())
}

fn fit(a: FitArgs) -> Result<()> {
    let mut tables = Vec::new();
    for spec in &a.data {
        tables.push(load_table(spec)?);
    }
    for spec in &a.corners {
        tables.push(load_table(spec)?.without_baseline());
    }
    let table = concat(tables)?;
    let names = table.factor_names().to_vec();
    let terms = match &a.formula {
        Some(f) => expand_formula(f, &names)?,
        None => saturated_terms(names.len()),
    };
    let model = fit_ols(&table, &terms)?;
    emit(a.out.as_deref(), &format!("{}\n", model.to_json()))
}

#[derive(Serialize)]
struct ValidationSummary {
    mid_corners: usize,
    random_space: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_abs_residual: Option<f64>,
}

fn validate(a: ValidateArgs) -> Result<()> {
    let config = a.config.load()?;
    let seed = a.sample_seed.unwrap_or(config.seed);
    let points = sample_validation_points(&config.factors, a.count, seed)?;
    let measured = measure_points(&config, &points)?;
    let table = ValidationSample::to_table(config.factors.names(), &measured)?;
    emit(a.out.as_deref(), &table.to_csv())?;

    let in_set = |s: ValidationSet| measured.iter().filter(|m| m.set == s).count();
    let mut summary = ValidationSummary {
        mid_corners: in_set(ValidationSet::MidCorners),
        random_space: in_set(ValidationSet::RandomSpace),
        max_abs_residual: None,
        mean_abs_residual: None,
    };
    if let Some(path) = &a.model {
        let model = load_model(path)?;
        let residuals = rrdoe::diagnostics::residuals(&model, &table.samples())?.values();
        let abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
        summary.max_abs_residual = Some(abs.iter().cloned().fold(0.0, f64::max));
        summary.mean_abs_residual = Some(abs.iter().sum::<f64>() / abs.len() as f64);
    }
    // the table went to stdout already when there is no --out
    if a.out.is_some() {
        print_json(&summary)?;
    } else {
        eprintln!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    }
    Ok(())
}

fn diagnose(a: DiagnoseArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    if a.samples.is_empty() {
        return Err(CliError::Usage("at least one --samples file is required".into()));
    }
    let mut tables = Vec::new();
    for spec in &a.samples {
        tables.push(load_table(spec)?);
    }
    let table = concat(tables)?;
    if table.factor_names() != model.factor_names.as_slice() {
        return Err(CliError::Usage(format!(
            "sample factors [{}] do not match the model's [{}]",
            table.factor_names().join(", "),
            model.factor_names.join(", ")
        )));
    }
    let options = DiagnosticsOptions { bins: a.bins, span: a.span, iterations: a.iterations };
    let report = DiagnosticsReport::build(&model, &table.samples(), options)?;

    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    for kind in PlotKind::ALL {
        let plot = render_report(&report, kind);
        write(&a.out_dir.join(format!("{}.svg", kind.name())), &plot.svg)?;
        write(&a.out_dir.join(format!("{}.csv", kind.name())), &plot.csv)?;
    }
    let summary = DiagnosticsSummary::new(&model, &report);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&a.out_dir.join("summary.json"), &format!("{text}\n"))?;
    print_json(&summary)
}

#[derive(Serialize)]
struct PointPrediction<'a> {
    point: &'a [f64],
    value: f64,
    extrapolation: bool,
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let points = a.points.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?;
    for p in &points {
        let pred = model.predict(p)?;
        let line = PointPrediction { point: p.coords(), value: pred.value, extrapolation: pred.extrapolation };
        println!("{}", serde_json::to_string(&line).expect("prediction serializes"));
    }
    Ok(())
}

fn refine(a: RefineArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let mut config = a.config.load()?;
    if let Some(t) = a.threshold {
        config.refine_threshold = t;
        config.validate()?;
    }
    let table = a.samples.as_deref().map(load_table).transpose()?;
    let source: Box<dyn MeasurementSource + '_> = match &table {
        Some(t) => Box::new(TableSource { table: t }),
        None => Box::new(SimulatorSource { config: &config }),
    };
    let outcome = refine_step(&model, &config, source.as_ref())?;
    print_json(&outcome)
}

fn replicate() -> Result<()> {
    let report = replicate_paper()?;
    print_json(&report)?;
    let failed: Vec<String> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(failed))
    }
}

fn parse_point(s: &str) -> Result<DesignPoint> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad coordinate `{c}` in `{s}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignPoint::new(coords)?)
}

/// A CSV path, or `fixture:<name>` for a bundled table.
fn load_table(spec: &str) -> Result<ExperimentTable> {
    match spec.strip_prefix("fixture:") {
        Some(name) => Ok(load_fixture(name)?),
        None => Ok(ExperimentTable::from_csv_str(&read(Path::new(spec))?)?),
    }
}

fn concat(tables: Vec<ExperimentTable>) -> Result<ExperimentTable> {
    let mut iter = tables.into_iter();
    let first = iter.next().ok_or_else(|| CliError::Usage("no experiment data given".into()))?;
    iter.try_fold(first, |acc, t| acc.concat(&t)).map_err(Into::into)
}

fn load_model(path: &Path) -> Result<FittedModel> {
    Ok(FittedModel::from_json(&read(path)?)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
    Ok(())
}
