//! Truncated Gaussian pivot for a contrast `v^T y` restricted to a selection
//! event, plus its one/two-sided p-values and confidence interval.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{Contrast, PivotConfig, SelectionEvent};
use crate::normal::log_interval_mass;
use crate::path::MEMBERSHIP_SLACK;

/// Entries of `w` with magnitude at or below this are treated as zero.
pub const DIRECTION_TOLERANCE: f64 = 1e-12;

/// Target accuracy of inverted interval endpoints, in pivot units.
pub const PIVOT_TOLERANCE: f64 = 1e-6;

const INITIAL_BRACKET: f64 = 10.0;
const MAX_BRACKET: f64 = 1e6;

/// The range `[lower, upper]` that `v^T y` may move through, with the
/// component of `y` orthogonal to `v` held fixed, without leaving the event.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationInterval {
    pub lower: f64,
    pub upper: f64,
    /// `Q v / ‖v‖²`
    pub w: DVector<f64>,
    pub vty: f64,
    /// Standard deviation of `v^T y`, i.e. `σ‖v‖`.
    pub scale: f64,
    pub v_norm: f64,
}

impl TruncationInterval {
    /// Same truncation with a different standard deviation for `v^T y`.
    pub fn with_scale(&self, scale: f64) -> Self {
        Self {
            scale,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotResult {
    pub pivot: f64,
    pub one_sided_p: f64,
    pub two_sided_p: f64,
}

impl PivotResult {
    pub fn from_pivot(pivot: f64) -> Self {
        Self {
            pivot,
            one_sided_p: pivot,
            two_sided_p: (2.0 * pivot.min(1.0 - pivot)).clamp(0.0, 1.0),
        }
    }
}

pub fn truncation_bounds(
    ev: &SelectionEvent,
    contrast: &Contrast,
    y: &DVector<f64>,
    sigma: f64,
) -> Result<TruncationInterval> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    if contrast.v.len() != ev.n() {
        return Err(Error::DimensionMismatch {
            expected: ev.n(),
            found: contrast.v.len(),
        });
    }
    let slack = ev.slack(y)?;
    let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
    if min_slack < -MEMBERSHIP_SLACK {
        return Err(Error::OutsideSelection { min_slack });
    }

    let v_norm = contrast.v.norm();
    let w = (ev.q() * &contrast.v) / (v_norm * v_norm);
    let vty = contrast.v.dot(y);

    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for (i, (&wi, &si)) in w.iter().zip(slack.iter()).enumerate() {
        if wi > DIRECTION_TOLERANCE {
            lower = lower.max(vty - si / wi);
        } else if wi < -DIRECTION_TOLERANCE {
            upper = upper.min(vty - si / wi);
        } else if si < -MEMBERSHIP_SLACK {
            return Err(Error::InconsistentEvent { row: i, slack: si });
        }
    }

    Ok(TruncationInterval {
        lower: lower.min(vty),
        upper: upper.max(vty),
        w,
        vty,
        scale: sigma * v_norm,
        v_norm,
    })
}

/// `[Φ(β) − Φ(x)] / [Φ(β) − Φ(α)]` with `α, x, β` the lower bound, observed
/// value and upper bound standardized at mean `mu`. Evaluated in log space, so
/// it stays finite when every argument sits far in one tail.
pub fn tg_pivot(ti: &TruncationInterval, mu: f64) -> Result<f64> {
    if !(ti.lower < ti.upper) {
        return Err(Error::DegenerateInterval {
            lower: ti.lower,
            upper: ti.upper,
        });
    }
    if !(ti.scale > 0.0) {
        return Err(Error::InvalidConfig(format!("pivot scale must be positive, got {}", ti.scale)));
    }
    let lo = (ti.lower - mu) / ti.scale;
    let obs = (ti.vty - mu) / ti.scale;
    let hi = (ti.upper - mu) / ti.scale;

    let denominator = log_interval_mass(lo, hi);
    if !denominator.is_finite() {
        return Err(Error::Cancellation { lower: lo, upper: hi });
    }
    let numerator = log_interval_mass(obs, hi);
    if numerator == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((numerator - denominator).exp().clamp(0.0, 1.0))
}

/// Pivot at `μ = 0` for a contrast already oriented by the sign of its
/// observed coefficient.
pub fn one_sided_pvalue(
    ev: &SelectionEvent,
    contrast: &Contrast,
    y: &DVector<f64>,
    cfg: &PivotConfig,
) -> Result<PivotResult> {
    let ti = truncation_bounds(ev, contrast, y, cfg.sigma)?;
    Ok(PivotResult::from_pivot(tg_pivot(&ti, 0.0)?))
}

/// The set of `μ` with `α/2 <= T(μ) <= 1 − α/2`. The pivot increases in `μ`,
/// so the lower endpoint solves `T = α/2` and the upper solves `T = 1 − α/2`.
pub fn invert_interval(ti: &TruncationInterval, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let lo = solve_level(ti, 0.5 * alpha)?;
    let hi = solve_level(ti, 1.0 - 0.5 * alpha)?;
    Ok((lo, hi.max(lo)))
}

/// Like [`invert_interval`], but an endpoint whose bracket overflows is
/// reported as infinite instead of failing.
pub fn invert_interval_unbounded(ti: &TruncationInterval, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let lo = match solve_level(ti, 0.5 * alpha) {
        Err(Error::BracketOverflow { .. }) => f64::NEG_INFINITY,
        other => other?,
    };
    let hi = match solve_level(ti, 1.0 - 0.5 * alpha) {
        Err(Error::BracketOverflow { .. }) => f64::INFINITY,
        other => other?,
    };
    Ok((lo, hi.max(lo)))
}

/// The `μ` at which `T(μ) = target`, by bracket doubling then bisection.
pub fn solve_level(ti: &TruncationInterval, target: f64) -> Result<f64> {
    let scale = ti.scale;
    let center = ti.vty;
    let limit = MAX_BRACKET * scale;
    let overflow = || Error::BracketOverflow { limit, target };

    let mut reach = INITIAL_BRACKET * scale;
    let mut lo = center - reach;
    while tg_pivot(ti, lo)? > target {
        reach *= 2.0;
        if reach > limit {
            return Err(overflow());
        }
        lo = center - reach;
    }
    reach = INITIAL_BRACKET * scale;
    let mut hi = center + reach;
    while tg_pivot(ti, hi)? < target {
        reach *= 2.0;
        if reach > limit {
            return Err(overflow());
        }
        hi = center + reach;
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let t = tg_pivot(ti, mid)?;
        if t < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (scale + mid.abs()) {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    if (tg_pivot(ti, mid)? - target).abs() > PIVOT_TOLERANCE {
        log::debug!("interval endpoint at {mid} misses level {target} by more than {PIVOT_TOLERANCE}");
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SelectedModel, Sign};
    use crate::path::{check_membership, fs_path, Method, PathConfig};
    use crate::Dataset;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn event(rows: &[f64], n: usize) -> SelectionEvent {
        let q = DMatrix::from_row_slice(rows.len() / n, n, rows);
        SelectionEvent::from_matrix(SelectedModel { steps: vec![] }, q)
    }

    fn interval(lower: f64, upper: f64, vty: f64, scale: f64) -> TruncationInterval {
        TruncationInterval {
            lower,
            upper,
            w: DVector::zeros(0),
            vty,
            scale,
            v_norm: 1.0,
        }
    }

    fn e1() -> Contrast {
        Contrast::from_vector(DVector::from_vec(vec![1.0, 0.0])).unwrap()
    }

    #[test]
    fn bounds_one_sided_case() {
        let ev = event(&[1.0, -1.0, 1.0, 1.0], 2);
        let y = DVector::from_vec(vec![2.0, 1.0]);
        let ti = truncation_bounds(&ev, &e1(), &y, 1.0).unwrap();
        assert_eq!(ti.w.as_slice(), &[1.0, 1.0]);
        assert_eq!(ti.lower, 1.0);
        assert_eq!(ti.upper, f64::INFINITY);
        assert_eq!(ti.vty, 2.0);
    }

    /// Oracle: membership of y(t) = y + (t − v^T y) v / ‖v‖² along a fine grid.
    fn scan_membership(ev: &SelectionEvent, v: &DVector<f64>, y: &DVector<f64>, ts: &[f64]) -> Vec<bool> {
        let vty = v.dot(y);
        let vv = v.norm_squared();
        ts.iter()
            .map(|&t| check_membership(ev, &(y + v * ((t - vty) / vv))).unwrap())
            .collect()
    }

    #[test]
    fn bounds_two_sided_case_agrees_with_scan() {
        let ev = event(&[1.0, -1.0, -1.0, 3.0], 2);
        let y = DVector::from_vec(vec![2.0, 1.0]);
        let ti = truncation_bounds(&ev, &e1(), &y, 1.0).unwrap();
        assert_eq!(ti.w.as_slice(), &[1.0, -1.0]);
        assert_eq!((ti.lower, ti.upper), (1.0, 3.0));

        let ts: Vec<f64> = (0..=4000).map(|i| i as f64 * 1e-3).collect();
        let inside = scan_membership(&ev, &e1().v, &y, &ts);
        for (t, inside) in ts.iter().zip(inside) {
            let expect = *t >= 1.0 - 1e-9 && *t <= 3.0 + 1e-9;
            assert_eq!(inside, expect, "t = {t}");
        }
    }

    #[test]
    fn orthogonal_contrast_is_untruncated() {
        let ev = event(&[0.0, 1.0, 0.0, 2.0], 2);
        let y = DVector::from_vec(vec![-3.0, 1.0]);
        let ti = truncation_bounds(&ev, &e1(), &y, 1.0).unwrap();
        assert_eq!((ti.lower, ti.upper), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn bounds_reject_outside_and_inconsistent() {
        let ev = event(&[1.0, -1.0, 1.0, 1.0], 2);
        let y = DVector::from_vec(vec![-2.0, 1.0]);
        assert!(matches!(
            truncation_bounds(&ev, &e1(), &y, 1.0),
            Err(Error::OutsideSelection { .. })
        ));
        assert!(truncation_bounds(&ev, &e1(), &DVector::from_vec(vec![2.0, 1.0]), 0.0).is_err());
    }

    #[test]
    fn pivot_examples() {
        // (1 − Φ(2)) / (1 − Φ(1)) at 50 digits
        let p = tg_pivot(&interval(1.0, f64::INFINITY, 2.0, 1.0), 0.0).unwrap();
        assert!((p - 0.14339349869880653564).abs() < 1e-14);
        assert_eq!(tg_pivot(&interval(-1.0, 2.0, 2.0, 1.0), 0.3).unwrap(), 0.0);
        assert_eq!(tg_pivot(&interval(-1.0, 2.0, -1.0, 1.0), 0.3).unwrap(), 1.0);
        let half = tg_pivot(&interval(-1.7, 1.7, 0.0, 1.0), 0.0).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        assert!(matches!(
            tg_pivot(&interval(1.0, 1.0, 1.0, 1.0), 0.0),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn pivot_is_finite_in_the_far_tail() {
        let p = tg_pivot(&interval(200.0, f64::INFINITY, 201.0, 1.0), 0.0).unwrap();
        // S(201)/S(200) ≈ exp(−200.5) · 200/201
        let approx = (-200.5f64).exp() * 200.0 / 201.0;
        assert!(p > 0.0 && ((p - approx) / approx).abs() < 1e-3);
        let p = tg_pivot(&interval(f64::NEG_INFINITY, -300.0, -300.5, 1.0), 0.0).unwrap();
        assert!(p.is_finite() && p > 0.99);
    }

    #[test]
    fn one_sided_pvalue_composes() {
        let ds = Dataset::new(DMatrix::identity(2, 2), DVector::from_vec(vec![2.0, 1.0])).unwrap();
        let ev = fs_path(&ds, &PathConfig::new(Method::ForwardStepwise, 1)).unwrap();
        let c = crate::model::projection_contrast(&ds, &[0], 0, Sign::Pos).unwrap();
        let r = one_sided_pvalue(&ev, &c, ds.y(), &PivotConfig::default()).unwrap();
        assert!((r.one_sided_p - 0.14339349869880653564).abs() < 1e-12);
        assert!((r.two_sided_p - 2.0 * 0.14339349869880653564).abs() < 1e-12);
    }

    #[test]
    fn untruncated_interval_is_z_interval() {
        let ti = interval(f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0);
        let (lo, hi) = invert_interval(&ti, 0.10).unwrap();
        assert!((lo + 1.6448536269514728).abs() < 1e-6);
        assert!((hi - 1.6448536269514728).abs() < 1e-6);
        assert!((tg_pivot(&ti, hi).unwrap() - 0.95).abs() < PIVOT_TOLERANCE);
        assert!((tg_pivot(&ti, lo).unwrap() - 0.05).abs() < PIVOT_TOLERANCE);
    }

    /// Oracle pivot from plain erfc; adequate for the moderate arguments used here.
    fn naive_pivot(a: f64, x: f64, mu: f64) -> f64 {
        let sf = |z: f64| 0.5 * libm::erfc(z / std::f64::consts::SQRT_2);
        sf(x - mu) / sf(a - mu)
    }

    #[test]
    fn one_sided_truncation_matches_grid_search() {
        let ti = interval(0.0, f64::INFINITY, 2.0, 1.0);
        let (lo, hi) = invert_interval(&ti, 0.10).unwrap();
        let grid: Vec<f64> = (0..=200_000).map(|i| -10.0 + i as f64 * 1e-4).collect();
        let accepted: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|&mu| {
                let t = naive_pivot(0.0, 2.0, mu);
                (0.05..=0.95).contains(&t)
            })
            .collect();
        let (glo, ghi) = (accepted[0], *accepted.last().unwrap());
        assert!((lo - glo).abs() <= 1e-4, "{lo} vs {glo}");
        assert!((hi - ghi).abs() <= 1e-4, "{hi} vs {ghi}");
    }

    #[test]
    fn overflowing_bracket_is_reported() {
        // Observed value sits on the lower bound: the pivot is 1 for every μ.
        let ti = interval(1.0, f64::INFINITY, 1.0, 1.0);
        assert!(matches!(invert_interval(&ti, 0.1), Err(Error::BracketOverflow { .. })));
        let (lo, hi) = invert_interval_unbounded(&ti, 0.1).unwrap();
        assert_eq!(lo, f64::NEG_INFINITY);
        assert_eq!(hi, f64::INFINITY);
    }

    #[test]
    fn truncated_survival_increases_with_sigma() {
        for &(a, b) in &[(0.0, 1.0), (0.5, 4.0), (2.0, f64::INFINITY), (0.0, 10.0)] {
            for k in 1..10 {
                let x = a + (b.min(a + 5.0) - a) * k as f64 / 10.0;
                let mut prev = 0.0;
                for s in [0.2, 0.5, 1.0, 2.0, 4.0] {
                    let t = tg_pivot(&interval(a, b, x, s), 0.0).unwrap();
                    assert!(t >= prev - 1e-12, "a={a} b={b} x={x} s={s}");
                    prev = t;
                }
            }
        }
    }

    #[test]
    fn bounds_match_line_scan_on_fs_events() {
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        for trial in 0..30 {
            let x = DMatrix::from_fn(20, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = DVector::from_fn(20, |_, _| rng.sample::<f64, _>(StandardNormal));
            let ds = Dataset::new(x, y.clone()).unwrap();
            let k = 1 + trial % 3;
            let ev = fs_path(&ds, &PathConfig::new(Method::ForwardStepwise, k)).unwrap();
            let last = ev.model.last().unwrap();
            let j = last.active.len() - 1;
            let c = crate::model::projection_contrast(&ds, &last.active, j, last.signs[j]).unwrap();
            let ti = truncation_bounds(&ev, &c, &y, 1.0).unwrap();
            let eps = 1e-4 * ti.scale;
            if ti.lower.is_finite() {
                let probe = scan_membership(&ev, &c.v, &y, &[ti.lower + eps, ti.lower - eps]);
                assert_eq!(probe, vec![true, false]);
            }
            if ti.upper.is_finite() {
                let probe = scan_membership(&ev, &c.v, &y, &[ti.upper - eps, ti.upper + eps]);
                assert_eq!(probe, vec![true, false]);
            }
        }
    }

    proptest! {
        #[test]
        fn pivot_monotone_in_mu_and_interval_duality(
            lower in -5.0f64..2.0,
            width in 0.1f64..8.0,
            frac in 0.05f64..0.95,
            scale in 0.3f64..3.0,
        ) {
            let upper = lower + width;
            let ti = interval(lower, upper, lower + frac * width, scale);
            let (lo, hi) = invert_interval(&ti, 0.1).unwrap();
            let mut prev = -1.0;
            for i in 0..=400 {
                let mu = ti.vty + (i as f64 - 200.0) * 0.05 * scale;
                let t = tg_pivot(&ti, mu).unwrap();
                prop_assert!(t >= prev - 1e-12);
                prev = t;
                let inside = mu >= lo && mu <= hi;
                let accepted = (0.05..=0.95).contains(&t);
                // Skip points within solver tolerance of an endpoint.
                let near = (mu - lo).abs() < 1e-6 * scale || (mu - hi).abs() < 1e-6 * scale;
                if !near {
                    prop_assert_eq!(inside, accepted, "mu={} t={}", mu, t);
                }
            }
        }
    }
}
