//! Monte Carlo studies of the estimator and analysis of lineage data.

mod ingest;
mod metrics;
mod output;
mod study;

pub use ingest::{
    analyze_experimental, ingest_lineage_csv, ingest_lineage_reader, ColumnMapping, ExperimentalAnalysis,
    ExperimentalReport, Ingested, RejectedRow,
};
pub use metrics::{fit_slope, quantile_sorted, relative_error, ErrorSummary};
pub use output::{write_band_tsv, write_json, write_study_tsv};
pub use study::{
    confidence_band, replicate_error, run_convergence_study, simulate_observations, variability_ablation,
    AblationReport, ConfidenceBand, ConvergenceStudy, StudyConfig, StudyRow,
};
