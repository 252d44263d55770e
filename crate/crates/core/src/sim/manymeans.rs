//! The many-means model: `d` groups of `m` replicates under the global null,
//! with errors from a three-component normal mixture of variance 2.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normal::log_survival_ratio;

use super::random::{standard_draw, stream, ErrorFamily, ErrorModel};
use super::{ks_statistic, with_pool};

/// Pivots below this count as numerically zero.
pub const ZERO_PIVOT: f64 = 1e-8;

const MIXTURE_VARIANCE: f64 = 2.0;

/// `[1 − Φ(√m·w1/√2)] / [1 − Φ(√m·w2/√2)]` for the largest and second largest
/// absolute group means.
pub fn manymeans_pivot(w1: f64, w2: f64, m: usize) -> Result<f64> {
    Ok(manymeans_log_pivot(w1, w2, m)?.exp())
}

pub fn manymeans_log_pivot(w1: f64, w2: f64, m: usize) -> Result<f64> {
    if !(w1 >= w2 && w2 >= 0.0) || m == 0 {
        return Err(Error::InvalidConfig(format!(
            "many-means pivot needs w1 >= w2 >= 0 and m >= 1, got w1 = {w1}, w2 = {w2}, m = {m}"
        )));
    }
    let k = (m as f64 / 2.0).sqrt();
    Ok(log_survival_ratio(k * w1, k * w2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManyMeansConfig {
    pub d: usize,
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl ManyMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 groups, got d = {}", self.d)));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("replicates per group must be positive".into()));
        }
        if self.reps == 0 || self.reps > u32::MAX as usize {
            return Err(Error::InvalidConfig(format!("invalid repetition count {}", self.reps)));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        Ok(())
    }

    /// Mixture weight `(1/d)^{1/m}`, capped at 1/2, and whether the cap bound.
    pub fn mixture_weight(&self) -> (f64, bool) {
        let pi = (1.0 / self.d as f64).powf(1.0 / self.m as f64);
        if pi > 0.5 {
            (0.5, true)
        } else {
            (pi, false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManyMeansRecord {
    pub rep: usize,
    pub w1: f64,
    pub w2: f64,
    pub pivot: f64,
    pub log_pivot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManyMeansSummary {
    pub config: ManyMeansConfig,
    pub pi: f64,
    pub shift: f64,
    pub capped: bool,
    pub records: Vec<ManyMeansRecord>,
    /// Fraction of pivots below [`ZERO_PIVOT`].
    pub zero_fraction: f64,
    pub ks: f64,
}

pub fn run_manymeans_experiment(cfg: &ManyMeansConfig) -> Result<ManyMeansSummary> {
    cfg.validate()?;
    let (pi, capped) = cfg.mixture_weight();
    if capped {
        log::info!("mixture weight capped at 1/2 for d = {}, m = {}", cfg.d, cfg.m);
    }
    let model = ErrorModel::new(ErrorFamily::Mixture3 { pi }, MIXTURE_VARIANCE);
    let shift = model.mixture_shift().expect("mixture family");

    let records: Vec<Result<ManyMeansRecord>> = with_pool(cfg.threads, || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(cfg.seed, 0, rep as u32, 0);
                let (mut w1, mut w2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for _ in 0..cfg.d {
                    let mut sum = 0.0;
                    for _ in 0..cfg.m {
                        sum += standard_draw(&mut rng, model.family, shift);
                    }
                    let w = (sum / cfg.m as f64).abs();
                    if w > w1 {
                        w2 = w1;
                        w1 = w;
                    } else if w > w2 {
                        w2 = w;
                    }
                }
                let log_pivot = manymeans_log_pivot(w1, w2, cfg.m)?;
                Ok(ManyMeansRecord {
                    rep,
                    w1,
                    w2,
                    pivot: log_pivot.exp(),
                    log_pivot,
                })
            })
            .collect()
    })?;
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let pivots: Vec<f64> = records.iter().map(|r| r.pivot).collect();
    let zero_fraction = pivots.iter().filter(|&&p| p < ZERO_PIVOT).count() as f64 / pivots.len() as f64;
    Ok(ManyMeansSummary {
        config: *cfg,
        pi,
        shift,
        capped,
        ks: ks_statistic(&pivots),
        records,
        zero_fraction,
    })
}
