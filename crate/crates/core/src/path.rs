//! Forward stepwise (FS) and least angle regression (LAR) paths, each run for
//! a fixed number of steps, returning the selected model together with the
//! cone `{y : Q y >= 0}` of responses that reproduce every decision.
//!
//! FS rows per step ℓ: `2(d − ℓ)` entry comparisons between the winning
//! residualized column and every other candidate, followed by `ℓ` rows fixing
//! the sign of every active least-squares coefficient.
//!
//! LAR rows per step: each competing `(variable, sign)` pair either has its
//! hitting time below the winning knot (when it could have entered, i.e. its
//! time is at most the previous knot) or above the previous knot (when it
//! could not); then rows ordering successive knots, `λ >= 0`, and one row
//! fixing the least-squares sign of the entering variable.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{gram_inverse, least_squares_operator, OrthoBasis};
use crate::model::{Dataset, SelectedModel, SelectionEvent, Sign, Step};

/// Slack allowed on `Q y >= 0` when testing membership.
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

const TIE_TOLERANCE: f64 = 1e-12;
const REPEATED_KNOT_TOLERANCE: f64 = 1e-12;
const DEGENERATE_DIRECTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ForwardStepwise,
    Lar,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ForwardStepwise => "fs",
            Method::Lar => "lar",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fs" | "forward" | "forward-stepwise" => Ok(Method::ForwardStepwise),
            "lar" | "lars" => Ok(Method::Lar),
            other => Err(Error::InvalidConfig(format!("unknown path method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// The candidate with the smallest variable index wins; for equal indices
    /// the positive sign wins.
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathConfig {
    pub method: Method,
    pub steps: usize,
    pub tie_break: TieBreak,
}

impl PathConfig {
    pub fn new(method: Method, steps: usize) -> Self {
        Self {
            method,
            steps,
            tie_break: TieBreak::LowestIndex,
        }
    }

    fn validate(&self, ds: &Dataset) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("number of steps must be at least 1".into()));
        }
        if self.steps > ds.d() {
            return Err(Error::InvalidConfig(format!(
                "cannot take {} steps with {} predictors",
                self.steps,
                ds.d()
            )));
        }
        Ok(())
    }
}

/// Runs the configured path.
pub fn run_path(ds: &Dataset, cfg: &PathConfig) -> Result<SelectionEvent> {
    match cfg.method {
        Method::ForwardStepwise => fs_path(ds, cfg),
        Method::Lar => lar_path(ds, cfg),
    }
}

/// True iff `min_i (Q y)_i >= -MEMBERSHIP_SLACK`.
pub fn check_membership(ev: &SelectionEvent, y: &DVector<f64>) -> Result<bool> {
    let slack = ev.slack(y)?;
    Ok(slack.iter().all(|&s| s >= -MEMBERSHIP_SLACK))
}

/// Index of the largest value; near-ties keep the earliest candidate.
fn pick_max<I: Iterator<Item = f64>>(values: I, step: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) => {
                let tol = TIE_TOLERANCE * b.abs().max(f64::MIN_POSITIVE);
                if v > b + tol {
                    best = Some((i, v));
                } else if v >= b - tol {
                    log::debug!("step {step}: entry tie at {v:e}; keeping lowest index");
                }
            }
        }
    }
    best.map(|(i, _)| i)
}

fn residual_is_zero(basis: &OrthoBasis, y: &DVector<f64>) -> bool {
    let r = basis.residual(y);
    !(r.norm() > DEGENERATE_DIRECTION * y.norm())
}

/// Appends the rows `sign_i · e_i^T (X_A^T X_A)^{-1} X_A^T` for the active
/// positions in `fixed` and returns the signs of every active coefficient.
fn push_sign_rows(
    ds: &Dataset,
    active: &[usize],
    fixed: impl IntoIterator<Item = usize>,
    rows: &mut Vec<DVector<f64>>,
) -> Result<Vec<Sign>> {
    let op = least_squares_operator(ds.x(), active)?;
    let coef = &op * ds.y();
    let signs: Vec<Sign> = coef.iter().map(|&b| Sign::of(b)).collect();
    for i in fixed {
        rows.push(op.row(i).transpose() * signs[i].as_f64());
    }
    Ok(signs)
}

fn finish(ds: &Dataset, model: SelectedModel, rows: Vec<DVector<f64>>, ends: Vec<usize>) -> Result<SelectionEvent> {
    let ev = SelectionEvent::from_rows(model, rows, ends, ds.n());
    let slack = ev.slack(ds.y())?;
    let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
    if min_slack < -MEMBERSHIP_SLACK {
        return Err(Error::OutsideSelection { min_slack });
    }
    Ok(ev)
}

struct FsCandidate {
    var: usize,
    /// `P^⊥ X_j / ‖P^⊥ X_j‖²`
    direction: DVector<f64>,
    score: f64,
}

/// Forward stepwise: at each step the entering variable maximizes
/// `|X̃_j^T y| / ‖X̃_j‖²`, where `X̃_j` is `X_j` residualized on the active set.
pub fn fs_path(ds: &Dataset, cfg: &PathConfig) -> Result<SelectionEvent> {
    cfg.validate(ds)?;
    let (n, d) = (ds.n(), ds.d());
    let y = ds.y();
    let cols: Vec<DVector<f64>> = (0..d).map(|j| ds.x().column(j).into_owned()).collect();

    let mut basis = OrthoBasis::new(n);
    let mut active: Vec<usize> = Vec::with_capacity(cfg.steps);
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut ends = Vec::with_capacity(cfg.steps);
    let mut steps = Vec::with_capacity(cfg.steps);

    for step in 1..=cfg.steps {
        if residual_is_zero(&basis, y) {
            return Err(Error::PathExhausted { step });
        }
        let candidates: Vec<FsCandidate> = (0..d)
            .filter(|j| !active.contains(j))
            .filter_map(|j| {
                let resid = basis.residual(&cols[j]);
                let norm2 = resid.norm_squared();
                let floor = DEGENERATE_DIRECTION * cols[j].norm();
                if !(norm2 > floor * floor) {
                    return None;
                }
                let direction = resid / norm2;
                let score = direction.dot(y);
                Some(FsCandidate { var: j, direction, score })
            })
            .collect();
        let best = pick_max(candidates.iter().map(|c| c.score.abs()), step)
            .ok_or(Error::PathExhausted { step })?;
        let winner = &candidates[best];
        let sign = Sign::of(winner.score);
        let lead = &winner.direction * sign.as_f64();

        for (i, cand) in candidates.iter().enumerate() {
            if i == best {
                continue;
            }
            rows.push(&lead - &cand.direction);
            rows.push(&lead + &cand.direction);
        }

        active.push(winner.var);
        basis.push(&cols[winner.var]);
        let signs = push_sign_rows(ds, &active, 0..active.len(), &mut rows)?;
        ends.push(rows.len());
        steps.push(Step {
            active: active.clone(),
            signs,
            entered: winner.var,
            entry_sign: sign,
            knot: winner.score.abs(),
        });
    }

    finish(ds, SelectedModel { steps }, rows, ends)
}

struct LarPair {
    var: usize,
    sign: Sign,
    /// Joining-time functional: `c^T y` is the knot at which this pair would enter.
    c: DVector<f64>,
    knot: f64,
}

/// Least angle regression. Knots are the values of λ at which each variable
/// joins, with λ the common absolute correlation of the active set.
pub fn lar_path(ds: &Dataset, cfg: &PathConfig) -> Result<SelectionEvent> {
    cfg.validate(ds)?;
    let (n, d) = (ds.n(), ds.d());
    let y = ds.y();
    let x = ds.x();
    let cols: Vec<DVector<f64>> = (0..d).map(|j| x.column(j).into_owned()).collect();

    let mut basis = OrthoBasis::new(n);
    let mut active: Vec<usize> = Vec::with_capacity(cfg.steps);
    let mut entry_signs: Vec<f64> = Vec::with_capacity(cfg.steps);
    // X_A (X_A^T X_A)^{-1} s_A; inner products with X_j give the equiangular drift.
    let mut drift: Option<DVector<f64>> = None;
    let mut previous: Option<(DVector<f64>, f64)> = None;

    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut ends = Vec::with_capacity(cfg.steps);
    let mut steps = Vec::with_capacity(cfg.steps);

    for step in 1..=cfg.steps {
        if residual_is_zero(&basis, y) {
            return Err(Error::PathExhausted { step });
        }

        let mut pairs: Vec<LarPair> = Vec::new();
        for j in (0..d).filter(|j| !active.contains(j)) {
            let p = basis.residual(&cols[j]);
            if !(p.norm() > DEGENERATE_DIRECTION * cols[j].norm()) {
                continue;
            }
            let q = drift.as_ref().map_or(0.0, |u| cols[j].dot(u));
            for sign in [Sign::Pos, Sign::Neg] {
                let denom = sign.as_f64() - q;
                if denom.abs() < DEGENERATE_DIRECTION {
                    continue;
                }
                let c = &p / denom;
                let knot = c.dot(y);
                pairs.push(LarPair { var: j, sign, c, knot });
            }
        }

        // Pairs whose hitting time exceeds the previous knot cannot enter;
        // which pairs these are is part of the conditioning.
        let prev_knot = previous.as_ref().map_or(f64::INFINITY, |(_, k)| *k);
        let eligible: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].knot <= prev_knot).collect();
        let best = pick_max(eligible.iter().map(|&i| pairs[i].knot), step)
            .map(|i| eligible[i])
            .ok_or(Error::PathExhausted { step })?;
        let winner_knot = pairs[best].knot;
        if winner_knot < 0.0 {
            return Err(Error::PathExhausted { step });
        }
        if step > 1 && winner_knot >= prev_knot * (1.0 - REPEATED_KNOT_TOLERANCE) {
            return Err(Error::NonGeneric {
                step,
                knot: winner_knot,
                previous: prev_knot,
            });
        }

        let lead = pairs[best].c.clone();
        let winner_var = pairs[best].var;
        for (i, pair) in pairs.iter().enumerate() {
            if i == best {
                continue;
            }
            match &previous {
                // The winner's opposite sign is implied by the coefficient sign row.
                None if pair.var == winner_var => {}
                None => rows.push(&lead - &pair.c),
                Some(_) if pair.knot <= prev_knot => rows.push(&lead - &pair.c),
                Some((prev_c, _)) => rows.push(&pair.c - prev_c),
            }
        }
        if let Some((prev_c, _)) = &previous {
            rows.push(prev_c - &lead);
            rows.push(lead.clone());
        }

        let entry_sign = pairs[best].sign;
        active.push(winner_var);
        entry_signs.push(entry_sign.as_f64());
        basis.push(&cols[winner_var]);

        // Only the entering coefficient's sign is fixed: it orients the
        // contrast tested at this step.
        let signs = push_sign_rows(ds, &active, [active.len() - 1], &mut rows)?;
        ends.push(rows.len());
        steps.push(Step {
            active: active.clone(),
            signs,
            entered: winner_var,
            entry_sign,
            knot: winner_knot,
        });

        let ginv = gram_inverse(x, &active)?;
        let xa = x.select_columns(active.iter());
        drift = Some(xa * (ginv * DVector::from_column_slice(&entry_signs)));
        previous = Some((lead, winner_knot));
    }

    finish(ds, SelectedModel { steps }, rows, ends)
}
