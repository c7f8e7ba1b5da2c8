//! Config-driven experiment runs: generation, selection, oracle headroom,
//! dataset building, evaluation, and the prompt-robustness and model-swap
//! protocols. Every command writes a manifest next to its outputs.

pub mod config;
pub mod corrector;
pub mod manifest;
pub mod mock;
mod report;
mod run;
pub mod synthetic;

pub use config::{DataPaths, Endpoints, ExperimentConfig, MetricKind, ModelSpec, PromptSet};
pub use corrector::{CorrectRequest, CorrectResponse, Corrector, HttpCorrector};
pub use manifest::Manifest;
pub use mock::{mock_complete, MockItem, MockLlm, MockLlmSpec};
pub use report::{metric_config, render_table, score_outputs, MetricReport};
pub use run::{
    metric_table, oracle_table, read_pools, read_rerank_results, robustness_table, swap_table, CurvePoint,
    DatasetReport, GenerateReport, Harness, ItemFailure, MethodScore, OracleReport, RobustnessReport,
    RobustnessRow, SelectionReport, SwapReport, SwapRow,
};
