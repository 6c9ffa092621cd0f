//! Run configuration, the coupled ε-sweep, rate fits, the verification suite
//! and plot output.

mod config;
mod pipeline;
mod plot;
mod rate;
mod verify;

pub use config::{AnalysisConfig, DataConfig, GevreyConfig, NumericsConfig, RunConfig, SweepConfig};
pub use pipeline::{
    epsilon_dir, gen_data, resolve_out, run, worker_count, EnergySample, EpsilonRun, ErrorSample, GeneratedData,
    RunSummary, DATA_TOLERANCE,
};
pub use plot::{plot, EnergyRow, ErrorRow, PlotSummary, RadiusRow};
pub use rate::{fit_errors, fit_line, fit_rate, load_reports, LineFit, LoadedReport, RateFit, SLOPE_THRESHOLD};
pub use verify::{
    eigenfunction_error, energy_identity, exactness_error, kernel_collocation_gap, lift_oracle, manufactured_error,
    random_smooth_field, verify, Check, VerifyLevel, VerifyReport,
};
