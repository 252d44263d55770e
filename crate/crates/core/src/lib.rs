//! Post-selection inference for sequential regression.
//!
//! Run forward stepwise or least angle regression for a fixed number of
//! steps, describe the selection as a polyhedral cone, and compute truncated
//! Gaussian pivots, their plug-in and bootstrap variants, and confidence
//! intervals for projection coefficients of the selected variables. The
//! [`sim`] module reproduces the standard Monte Carlo experiments.

pub mod error;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod path;
pub mod sigma_free;
pub mod sim;
pub mod tg;

pub use error::{Error, Result};
pub use inference::{infer_path, infer_step, PathInference, SigmaMode, StepInference};
pub use model::{
    master_statistic, projection_contrast, Contrast, Dataset, MasterStatistic, PivotConfig, ResponseColumn,
    SelectedModel, SelectionEvent, Sign, Step,
};
pub use path::{check_membership, fs_path, lar_path, run_path, Method, PathConfig, TieBreak};
pub use tg::{
    invert_interval, invert_interval_unbounded, one_sided_pvalue, tg_pivot, truncation_bounds, PivotResult,
    TruncationInterval,
};
pub use sigma_free::{
    bootstrap_interval, bootstrap_inference, bootstrap_pivot, moment_stats, plugin_pivot, resample_contrasts,
    BootstrapConfig, BootstrapInference, ContrastSample, MomentStats,
};
