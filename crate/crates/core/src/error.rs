use thiserror::Error;

use crate::poll::Violation;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate population: {target} of {population} respondents chose the target")]
    DegeneratePopulation { population: u64, target: u64 },

    #[error("randomized response with Pr[truth] = 0 cannot be inverted")]
    NonInvertibleMechanism,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular design: column `{column}` is linearly dependent on earlier columns")]
    SingularDesign { column: String },

    #[error("under-determined fit: {n_obs} observations for {n_terms} terms")]
    UnderDetermined { n_obs: usize, n_terms: usize },

    #[error("model statistics unavailable (zero residual degrees of freedom); add observations")]
    StatisticsUnavailable,

    #[error("formula error: {0}")]
    Formula(String),

    #[error("JSON parse error at line {line}, column {column}: {message}")]
    JsonSyntax { line: usize, column: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("poll validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("CSV error: {0}")]
    Csv(String),

    #[error("unknown fixture `{0}` (expected exp1, exp2 or validation)")]
    UnknownFixture(String),

    #[error("unknown plot kind `{0}` (expected histogram, fitted_vs_residual, qq or pareto)")]
    UnknownPlotKind(String),

    #[error("no measurement available for point {0:?}")]
    MissingMeasurement(Vec<f64>),

    #[error("campaign row {std_order} failed: {source}")]
    CampaignRow {
        std_order: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DegeneratePopulation { .. } => "degenerate_population",
            Error::NonInvertibleMechanism => "non_invertible_mechanism",
            Error::InsufficientData(_) => "insufficient_data",
            Error::SingularDesign { .. } => "singular_design",
            Error::UnderDetermined { .. } => "under_determined",
            Error::StatisticsUnavailable => "statistics_unavailable",
            Error::Formula(_) => "formula",
            Error::JsonSyntax { .. } => "json_syntax",
            Error::Schema(_) => "schema",
            Error::Validation(_) => "validation",
            Error::Csv(_) => "csv",
            Error::UnknownFixture(_) => "unknown_fixture",
            Error::UnknownPlotKind(_) => "unknown_plot_kind",
            Error::MissingMeasurement(_) => "missing_measurement",
            Error::CampaignRow { .. } => "campaign_row",
            Error::Io(_) => "io",
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof => Error::JsonSyntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Data => Error::Schema(e.to_string()),
            Category::Io => Error::Io(e.into()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
