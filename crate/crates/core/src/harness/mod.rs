//! Config-driven experiment runner: victim training, querying, cleaning,
//! substitute training, sweeps and report emission.

mod config;
mod pipeline;
mod report;

pub use config::{ExperimentConfig, MixupSettings, NoiseSettings, PretrainSettings, QuerySettings, Scheme};
pub use pipeline::{rounds_summary, run_pipeline, sweep_rounds, sweep_rr, Harness};
pub use report::{
    emit_reports, report_from_dir, variance_histogram, CurvePoint, HourPoint, ReportFiles, ResultRow, ResultTable,
    RunReport, Table3, VariancePoint,
};
