//! Inference without a known error variance: the plug-in pivot, which swaps
//! `σ` for `c·s_Y`, and the bootstrap pivot, which replaces the truncated
//! normal law by resampled contrasts shifted to mean `μ`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Contrast;
use crate::tg::{invert_interval_unbounded, tg_pivot, TruncationInterval};

/// Responses whose standard deviation is below this fraction of their
/// magnitude are treated as constant.
const DEGENERATE_RELATIVE_SD: f64 = 1e-12;

/// Hard cap on bootstrap grid points, whatever the spread of the sample.
const MAX_GRID_POINTS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentStats {
    pub mean: f64,
    /// `(1/n) Σ (Y_i − Ȳ)²`
    pub s2: f64,
    /// `(1/n) Σ |Y_i − Ȳ|³`
    pub r3: f64,
    pub degenerate: bool,
}

impl MomentStats {
    pub fn sd(&self) -> f64 {
        self.s2.sqrt()
    }
}

pub fn moment_stats(y: &DVector<f64>) -> Result<MomentStats> {
    let n = y.len();
    if n < 2 {
        return Err(Error::InvalidDataset(format!("need at least 2 responses, got {n}")));
    }
    let nf = n as f64;
    let mean = y.sum() / nf;
    let (mut s2, mut r3) = (0.0, 0.0);
    for &yi in y.iter() {
        let dev = (yi - mean).abs();
        s2 += dev * dev;
        r3 += dev * dev * dev;
    }
    s2 /= nf;
    r3 /= nf;
    let magnitude = y.amax().max(f64::MIN_POSITIVE);
    Ok(MomentStats {
        mean,
        s2,
        r3,
        degenerate: s2.sqrt() <= DEGENERATE_RELATIVE_SD * magnitude,
    })
}

/// The truncation interval rescaled to standard deviation `c·s_Y·‖v‖`.
pub fn plugin_interval(ti: &TruncationInterval, ms: &MomentStats, c: f64) -> Result<TruncationInterval> {
    if ms.degenerate {
        return Err(Error::DegenerateResponse);
    }
    Ok(ti.with_scale(c * ms.sd() * ti.v_norm))
}

pub fn plugin_pivot(ti: &TruncationInterval, mu: f64, ms: &MomentStats, c: f64) -> Result<f64> {
    tg_pivot(&plugin_interval(ti, ms, c)?, mu)
}

/// Two-sided `1 − α` interval from the plug-in pivot. Endpoints that cannot
/// be bracketed are infinite.
pub fn plugin_confidence_interval(ti: &TruncationInterval, ms: &MomentStats, c: f64, alpha: f64) -> Result<(f64, f64)> {
    invert_interval_unbounded(&plugin_interval(ti, ms, c)?, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    /// Resamples drawn first.
    pub resamples: usize,
    /// Resample count used when the first batch leaves the pivot vacuous.
    pub max_resamples: usize,
    /// Padding is `gamma · n^{-1/4}`.
    pub gamma: f64,
    pub c: f64,
    pub seed: u64,
    /// The inversion grid step is the sample's standard deviation over this.
    pub grid_divisions: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 1000,
            max_resamples: 50_000,
            gamma: 1e-4,
            c: 1.0,
            seed: 0,
            grid_divisions: 200,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(Error::InvalidConfig("bootstrap resample count must be at least 1".into()));
        }
        if self.max_resamples < self.resamples {
            return Err(Error::InvalidConfig(format!(
                "maximum resample count {} is below the initial count {}",
                self.max_resamples, self.resamples
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c must be at least 1, got {}", self.c)));
        }
        if self.grid_divisions == 0 {
            return Err(Error::InvalidConfig("grid divisions must be positive".into()));
        }
        Ok(())
    }

    pub fn padding(&self, n: usize) -> f64 {
        self.gamma * (n as f64).powf(-0.25)
    }
}

/// `B` draws of `v^T (Y* − Ȳ1)`, each `Y*` resampling the components of `y`
/// with replacement. The sequence is a pure function of `seed`, and a longer
/// draw extends a shorter one with the same seed.
pub fn resample_contrasts(y: &DVector<f64>, contrast: &Contrast, resamples: usize, seed: u64) -> Vec<f64> {
    let n = y.len();
    let mean = y.sum() / n as f64;
    let centered: Vec<f64> = y.iter().map(|&yi| yi - mean).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..resamples)
        .map(|_| {
            contrast
                .v
                .iter()
                .map(|&vi| vi * centered[rng.random_range(0..n)])
                .sum()
        })
        .collect()
}

/// Resampled contrasts, sorted so that interval counts are binary searches.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSample {
    sorted: Vec<f64>,
    sd: f64,
}

impl ContrastSample {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let b = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / b;
        let sd = (values.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / b).sqrt();
        Self { sorted: values, sd }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn min(&self) -> f64 {
        self.sorted.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.sorted.last().copied().unwrap_or(0.0)
    }

    /// Number of values `u` with `lo <= c·u <= hi`.
    pub fn count_scaled_within(&self, c: f64, lo: f64, hi: f64) -> usize {
        if !(lo <= hi) {
            return 0;
        }
        let start = self.sorted.partition_point(|&u| c * u < lo);
        let end = self.sorted.partition_point(|&u| c * u <= hi);
        end.saturating_sub(start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapCounts {
    /// Shifted contrasts in `[v^T y, b]`.
    pub numerator: usize,
    /// Shifted contrasts in `[a, b]`.
    pub denominator: usize,
    pub total: usize,
}

pub fn bootstrap_counts(ti: &TruncationInterval, mu: f64, sample: &ContrastSample, c: f64) -> BootstrapCounts {
    BootstrapCounts {
        numerator: sample.count_scaled_within(c, ti.vty - mu, ti.upper - mu),
        denominator: sample.count_scaled_within(c, ti.lower - mu, ti.upper - mu),
        total: sample.len(),
    }
}

/// Padded ratio of the empirical probabilities that `c·u + μ` lands in
/// `[v^T y, b]` and in `[a, b]`. Equals 1 when both counts vanish.
pub fn bootstrap_pivot(ti: &TruncationInterval, mu: f64, sample: &ContrastSample, n: usize, cfg: &BootstrapConfig) -> f64 {
    let counts = bootstrap_counts(ti, mu, sample, cfg.c);
    let total = counts.total.max(1) as f64;
    let delta = cfg.padding(n);
    ((counts.numerator as f64 / total + delta) / (counts.denominator as f64 / total + delta)).min(1.0)
}

/// Hull of `{μ : α/2 <= T*(μ) <= 1 − α/2}` over a grid with step
/// `c·sd(u) / grid_divisions`. Outside `[v^T y − c·max u, v^T y − c·min u]`
/// the numerator is empty or equals the denominator, so the scan stays there.
pub fn bootstrap_interval(
    ti: &TruncationInterval,
    sample: &ContrastSample,
    n: usize,
    cfg: &BootstrapConfig,
    alpha: f64,
) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let start = ti.vty - cfg.c * sample.max();
    let stop = ti.vty - cfg.c * sample.min();
    let step = cfg.c * sample.sd() / cfg.grid_divisions as f64;
    let points = if step > 0.0 {
        (((stop - start) / step).ceil() as usize + 1).min(MAX_GRID_POINTS)
    } else {
        1
    };
    let step = if points > 1 { (stop - start) / (points - 1) as f64 } else { 0.0 };

    let (lo_level, hi_level) = (0.5 * alpha, 1.0 - 0.5 * alpha);
    let mut hull: Option<(f64, f64)> = None;
    let mut trace = Vec::with_capacity(points);
    for i in 0..points {
        let mu = if i + 1 == points { stop } else { start + step * i as f64 };
        let t = bootstrap_pivot(ti, mu, sample, n, cfg);
        trace.push((mu, t));
        if (lo_level..=hi_level).contains(&t) {
            hull = Some(match hull {
                None => (mu, mu),
                Some((lo, _)) => (lo, mu),
            });
        }
    }
    hull.ok_or(Error::EmptyAcceptance { trace })
}

/// Bootstrap p-value and interval for one contrast, with automatic escalation
/// to `max_resamples` when the first batch leaves the pivot vacuous.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapInference {
    /// Pivot at `μ = 0`.
    pub pvalue: f64,
    /// `None` when no grid point is accepted even after escalation.
    pub interval: Option<(f64, f64)>,
    pub resamples: usize,
    pub escalated: bool,
}

/// Escalates when the denominator count at `μ = 0` is zero or when the
/// acceptance set of the interval is empty.
pub fn bootstrap_inference(
    ti: &TruncationInterval,
    y: &DVector<f64>,
    contrast: &Contrast,
    cfg: &BootstrapConfig,
    alpha: f64,
) -> Result<BootstrapInference> {
    cfg.validate()?;
    let n = y.len();
    let attempt = |resamples: usize| -> Result<(f64, Option<(f64, f64)>, BootstrapCounts)> {
        let sample = ContrastSample::new(resample_contrasts(y, contrast, resamples, cfg.seed));
        let counts = bootstrap_counts(ti, 0.0, &sample, cfg.c);
        let pvalue = bootstrap_pivot(ti, 0.0, &sample, n, cfg);
        let interval = match bootstrap_interval(ti, &sample, n, cfg, alpha) {
            Ok(iv) => Some(iv),
            Err(Error::EmptyAcceptance { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok((pvalue, interval, counts))
    };

    let (pvalue, interval, counts) = attempt(cfg.resamples)?;
    let vacuous = counts.denominator == 0 || interval.is_none();
    if !vacuous || cfg.max_resamples == cfg.resamples {
        return Ok(BootstrapInference {
            pvalue,
            interval,
            resamples: cfg.resamples,
            escalated: false,
        });
    }
    log::debug!(
        "bootstrap escalated from {} to {} resamples (denominator count {}, interval {})",
        cfg.resamples,
        cfg.max_resamples,
        counts.denominator,
        if interval.is_some() { "nonempty" } else { "empty" }
    );
    let (pvalue, interval, _) = attempt(cfg.max_resamples)?;
    Ok(BootstrapInference {
        pvalue,
        interval,
        resamples: cfg.max_resamples,
        escalated: true,
    })
}
