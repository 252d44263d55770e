//! Per-step inference along a selected path: the p-value and interval for the
//! projection coefficient of the variable that entered at each step.

use crate::error::Result;
use crate::model::{projection_contrast, Contrast, Dataset, SelectionEvent, Sign};
use crate::path::{run_path, PathConfig};
use crate::sigma_free::{bootstrap_inference, moment_stats, plugin_confidence_interval, plugin_pivot, BootstrapConfig};
use crate::sim::random::subseed;
use crate::tg::{invert_interval_unbounded, tg_pivot, truncation_bounds};

/// How the error scale is handled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// Known error standard deviation.
    Known(f64),
    /// Sample standard deviation of the response, inflated by `c`.
    Plugin { c: f64 },
    Bootstrap(BootstrapConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInference {
    pub step: usize,
    pub variable: usize,
    /// Sign of the variable's least-squares coefficient; orients the contrast.
    pub sign: Sign,
    /// Observed `v^T y`.
    pub estimate: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub pvalue: f64,
    /// `None` when a bootstrap acceptance set is empty.
    pub interval: Option<(f64, f64)>,
    pub resamples: usize,
    pub escalated: bool,
}

/// Inference at step `step` (1-based) of `ev`, conditioning on the decisions
/// of steps `1..=step`. Returns the tested contrast alongside the result.
pub fn infer_step(
    ds: &Dataset,
    ev: &SelectionEvent,
    step: usize,
    mode: &SigmaMode,
    alpha: f64,
) -> Result<(Contrast, StepInference)> {
    let prefix = ev.prefix(step);
    let st = &ev.model.steps[step - 1];
    let j = st.active.len() - 1;
    let contrast = projection_contrast(ds, &st.active, j, st.signs[j])?;
    let y = ds.y();
    let sigma = match mode {
        SigmaMode::Known(s) => *s,
        _ => 1.0,
    };
    let ti = truncation_bounds(&prefix, &contrast, y, sigma)?;

    let (pvalue, interval, resamples, escalated) = match mode {
        SigmaMode::Known(_) => (tg_pivot(&ti, 0.0)?, Some(invert_interval_unbounded(&ti, alpha)?), 0, false),
        SigmaMode::Plugin { c } => {
            let ms = moment_stats(y)?;
            (
                plugin_pivot(&ti, 0.0, &ms, *c)?,
                Some(plugin_confidence_interval(&ti, &ms, *c, alpha)?),
                0,
                false,
            )
        }
        SigmaMode::Bootstrap(cfg) => {
            let out = bootstrap_inference(&ti, y, &contrast, cfg, alpha)?;
            (out.pvalue, out.interval, out.resamples, out.escalated)
        }
    };
    let result = StepInference {
        step,
        variable: st.entered,
        sign: st.signs[j],
        estimate: ti.vty,
        lower_bound: ti.lower,
        upper_bound: ti.upper,
        pvalue,
        interval,
        resamples,
        escalated,
    };
    Ok((contrast, result))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathInference {
    pub event: SelectionEvent,
    pub steps: Vec<StepInference>,
}

/// Runs the path and infers at every step. In bootstrap mode step `s` draws
/// from seed `subseed(seed, 0, 0, s)`.
pub fn infer_path(ds: &Dataset, path: &PathConfig, mode: &SigmaMode, alpha: f64) -> Result<PathInference> {
    let event = run_path(ds, path)?;
    let steps = (1..=path.steps)
        .map(|s| {
            let mode = match mode {
                SigmaMode::Bootstrap(cfg) => SigmaMode::Bootstrap(BootstrapConfig {
                    seed: subseed(cfg.seed, 0, 0, s as u32),
                    ..*cfg
                }),
                other => *other,
            };
            infer_step(ds, &event, s, &mode, alpha).map(|(_, r)| r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathInference { event, steps })
}
