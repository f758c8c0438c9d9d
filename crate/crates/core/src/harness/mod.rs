//! Experiment orchestration: configuration, replications, the d₃ proxy,
//! rate fits and report files.

pub mod config;
pub mod d3;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::{load_config, save_config, ExperimentConfig, KernelRecord, ReferenceLaw};
pub use d3::{d3_proxy, D3Entry, D3Proxy, D3ProxyDictionary};
pub use experiments::{
    run_clt_experiment, run_covariance_experiment, run_rates_study, run_rho_dump, run_simulate_dump, CltReport,
    CovarianceReport, RatesReport, RhoReport, SimulateReport,
};
pub use fit::{fit_rate, RateFitResult};
pub use report::{write_report, Report, ReportPaths};
