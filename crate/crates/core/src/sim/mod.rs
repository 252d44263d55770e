//! Monte Carlo experiments: p-value uniformity and interval coverage for LAR
//! under several error laws, and the many-means counterexample.
//!
//! Every repetition draws from its own random stream keyed by the seed and
//! the repetition index, so results do not depend on the worker count.

pub mod experiment;
pub mod manymeans;
pub mod output;
pub mod random;

pub use experiment::{
    run_experiment, ExperimentConfig, ExperimentKind, ExperimentSummary, RepFailure, RepRecord, SelectionStats,
    Statistic, SummaryCell,
};
pub use manymeans::{
    manymeans_log_pivot, manymeans_pivot, run_manymeans_experiment, ManyMeansConfig, ManyMeansRecord,
    ManyMeansSummary, ZERO_PIVOT,
};
pub use random::{gen_design, gen_errors, ColumnLaw, Design, DesignSpec, ErrorFamily, ErrorModel};

use crate::error::{Error, Result};

/// `sup_t |F̂(t) − t|` for the empirical CDF of `pvals` against `U(0, 1)`.
/// Returns NaN for an empty sample.
pub fn ks_statistic(pvals: &[f64]) -> f64 {
    if pvals.is_empty() {
        return f64::NAN;
    }
    let mut sorted = pvals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let above = (i + 1) as f64 / n - p;
            let below = p - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Median, NaN for an empty slice. Infinite values sort to the ends.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        let (a, b) = (sorted[mid - 1], sorted[mid]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

/// Runs `f` on a pool with `threads` workers, or on the global pool.
pub(crate) fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot start {t} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
