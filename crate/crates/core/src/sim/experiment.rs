//! Repeated-draw experiments with a fixed design: null uniformity, interval
//! coverage under a sparse signal, heteroskedastic errors and `d >> n`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{infer_step, SigmaMode};
use crate::model::Dataset;
use crate::path::{run_path, Method, PathConfig};
use crate::sigma_free::BootstrapConfig;

use super::random::{gen_design, hetero_scales, sample_errors, stream, subseed, DesignSpec, ErrorFamily, ErrorModel};
use super::{ks_statistic, median, with_pool};

/// Stream group reserved for the design; families use their index.
const DESIGN_GROUP: u8 = 255;
const ERROR_PURPOSE: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistic {
    Tg,
    Plugin,
    Bootstrap,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::Tg, Statistic::Plugin, Statistic::Bootstrap];

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Tg => "tg",
            Statistic::Plugin => "plugin",
            Statistic::Bootstrap => "bootstrap",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tg" => Ok(Statistic::Tg),
            "plugin" | "plug-in" => Ok(Statistic::Plugin),
            "bootstrap" | "boot" => Ok(Statistic::Bootstrap),
            other => Err(Error::InvalidConfig(format!("unknown statistic {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Null,
    Signal,
    Hetero,
    HighDim,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Null => "null",
            ExperimentKind::Signal => "signal",
            ExperimentKind::Hetero => "hetero",
            ExperimentKind::HighDim => "highdim",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "null" => Ok(ExperimentKind::Null),
            "signal" => Ok(ExperimentKind::Signal),
            "hetero" => Ok(ExperimentKind::Hetero),
            "highdim" => Ok(ExperimentKind::HighDim),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment {other:?} (expected null, signal, hetero or highdim)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub steps: usize,
    pub reps: usize,
    pub method: Method,
    pub alpha: f64,
    /// Error standard deviation assumed by the known-variance pivot.
    pub sigma: f64,
    /// Inflation factor for the plug-in scale.
    pub c: f64,
    /// Leading nonzero coefficients of `β0`; the rest are zero.
    pub beta: Vec<f64>,
    pub hetero: bool,
    pub families: Vec<ErrorFamily>,
    pub statistics: Vec<Statistic>,
    /// Resampling settings; the seed is replaced per repetition and step.
    pub bootstrap: BootstrapConfig,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    fn base() -> Self {
        Self {
            n: 50,
            d: 10,
            steps: 1,
            reps: 500,
            method: Method::Lar,
            alpha: 0.1,
            sigma: 1.0,
            c: 1.0,
            beta: Vec::new(),
            hetero: false,
            families: ErrorFamily::STANDARD.to_vec(),
            statistics: Statistic::ALL.to_vec(),
            bootstrap: BootstrapConfig::default(),
            seed: 1,
            threads: None,
        }
    }

    /// `θ = 0`, one LAR step.
    pub fn null() -> Self {
        Self::base()
    }

    /// `β0 = (−4, 4, 0, …)`, three LAR steps.
    pub fn signal() -> Self {
        Self {
            steps: 3,
            beta: vec![-4.0, 4.0],
            ..Self::base()
        }
    }

    /// Errors scaled by `sqrt(3‖x_i‖²)`. There is no single variance for the
    /// known-variance pivot, so only the plug-in and bootstrap run.
    pub fn hetero(signal: bool) -> Self {
        let base = if signal { Self::signal() } else { Self::null() };
        Self {
            hetero: true,
            statistics: vec![Statistic::Plugin, Statistic::Bootstrap],
            ..base
        }
    }

    pub fn highdim(signal: bool) -> Self {
        let base = if signal { Self::signal() } else { Self::null() };
        Self { d: 1000, ..base }
    }

    pub fn for_kind(kind: ExperimentKind, signal: bool) -> Self {
        match kind {
            ExperimentKind::Null => Self::null(),
            ExperimentKind::Signal => Self::signal(),
            ExperimentKind::Hetero => Self::hetero(signal),
            ExperimentKind::HighDim => Self::highdim(signal),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("at least one repetition is required".into()));
        }
        if self.reps > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many repetitions".into()));
        }
        if self.steps == 0 || self.steps > self.d.min(self.n) {
            return Err(Error::InvalidConfig(format!(
                "steps must lie in 1..={}, got {}",
                self.d.min(self.n),
                self.steps
            )));
        }
        if self.beta.len() > self.d {
            return Err(Error::InvalidConfig("more nonzero coefficients than variables".into()));
        }
        if self.families.is_empty() || self.statistics.is_empty() {
            return Err(Error::InvalidConfig("no error families or statistics selected".into()));
        }
        if self.families.len() > DESIGN_GROUP as usize {
            return Err(Error::InvalidConfig("too many error families".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c must be at least 1, got {}", self.c)));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        self.bootstrap.validate()
    }

    pub fn design_spec(&self) -> DesignSpec {
        DesignSpec {
            n: self.n,
            d: self.d,
            unit_norm: true,
            seed: subseed(self.seed, DESIGN_GROUP, 0, 0),
        }
    }
}

/// One statistic at one step of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub family: ErrorFamily,
    pub rep: usize,
    pub step: usize,
    pub method: Method,
    pub statistic: Statistic,
    pub pvalue: f64,
    /// NaN when the bootstrap acceptance set is empty.
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    pub covered: bool,
    pub excl_zero: bool,
    /// Variable that entered at this step.
    pub entered: usize,
    pub resamples: usize,
    pub escalated: bool,
}

impl RepRecord {
    pub fn has_interval(&self) -> bool {
        !self.lo.is_nan()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCell {
    pub family: ErrorFamily,
    pub step: usize,
    pub method: Method,
    pub statistic: Statistic,
    pub coverage: f64,
    pub power: f64,
    /// Median width over repetitions with a nonempty interval.
    pub width: f64,
    pub ks: f64,
    pub count: usize,
    pub escalations: usize,
    pub empty: usize,
}

/// How often the first variables (those with nonzero `β0`) were picked.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStats {
    pub family: ErrorFamily,
    /// Fraction of repetitions whose first step picked one of them.
    pub first_step: f64,
    /// Fraction whose first two steps picked exactly the first two variables.
    pub first_two_steps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepFailure {
    pub family: ErrorFamily,
    pub rep: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub records: Vec<RepRecord>,
    pub cells: Vec<SummaryCell>,
    pub selection: Vec<SelectionStats>,
    pub failures: Vec<RepFailure>,
}

impl ExperimentSummary {
    pub fn cell(&self, family: ErrorFamily, step: usize, statistic: Statistic) -> Option<&SummaryCell> {
        self.cells
            .iter()
            .find(|c| c.family == family && c.step == step && c.statistic == statistic)
    }

    /// P-values of one statistic at one step, in repetition order.
    pub fn pvalues(&self, family: ErrorFamily, step: usize, statistic: Statistic) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.family == family && r.step == step && r.statistic == statistic)
            .map(|r| r.pvalue)
            .collect()
    }
}

struct RepOutcome {
    records: Vec<RepRecord>,
    entered: Vec<usize>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let design = gen_design(&cfg.design_spec())?.x;
    let mut beta = DVector::zeros(cfg.d);
    for (j, &b) in cfg.beta.iter().enumerate() {
        beta[j] = b;
    }
    let theta = &design * beta;
    let scales = cfg.hetero.then(|| hetero_scales(&design));

    let mut records = Vec::new();
    let mut selection = Vec::new();
    let mut failures = Vec::new();
    for (fi, &family) in cfg.families.iter().enumerate() {
        let model = ErrorModel {
            family,
            variance: cfg.sigma * cfg.sigma,
            row_scales: scales.clone(),
        };
        let outcomes: Vec<Result<RepOutcome>> = with_pool(cfg.threads, || {
            (0..cfg.reps)
                .into_par_iter()
                .map(|rep| run_rep(cfg, &design, &theta, &model, fi as u8, rep))
                .collect()
        })?;

        let (mut first, mut first_two, mut ok) = (0usize, 0usize, 0usize);
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(out) => {
                    ok += 1;
                    let strong = cfg.beta.len().max(1);
                    if out.entered.first().is_some_and(|&j| j < strong) {
                        first += 1;
                    }
                    if out.entered.len() >= 2 {
                        let mut two = [out.entered[0], out.entered[1]];
                        two.sort_unstable();
                        if two == [0, 1] {
                            first_two += 1;
                        }
                    }
                    records.extend(out.records);
                }
                Err(e) => {
                    log::warn!("{family} repetition {rep} failed: {e}");
                    failures.push(RepFailure {
                        family,
                        rep,
                        message: e.to_string(),
                    });
                }
            }
        }
        let denom = ok.max(1) as f64;
        selection.push(SelectionStats {
            family,
            first_step: first as f64 / denom,
            first_two_steps: first_two as f64 / denom,
        });
    }

    let cells = summarize(cfg, &records);
    Ok(ExperimentSummary {
        records,
        cells,
        selection,
        failures,
    })
}

fn run_rep(
    cfg: &ExperimentConfig,
    design: &DMatrix<f64>,
    theta: &DVector<f64>,
    model: &ErrorModel,
    family_index: u8,
    rep: usize,
) -> Result<RepOutcome> {
    let mut rng = stream(cfg.seed, family_index, rep as u32, ERROR_PURPOSE);
    let y = theta + sample_errors(model, cfg.n, &mut rng)?;
    let ds = Dataset::new(design.clone(), y)?;
    let ev = run_path(&ds, &PathConfig::new(cfg.method, cfg.steps))?;

    let mut records = Vec::with_capacity(cfg.steps * cfg.statistics.len());
    let mut entered = Vec::with_capacity(cfg.steps);
    for s in 1..=cfg.steps {
        let step = &ev.model.steps[s - 1];
        entered.push(step.entered);

        for &statistic in &cfg.statistics {
            let mode = match statistic {
                Statistic::Tg => SigmaMode::Known(cfg.sigma),
                Statistic::Plugin => SigmaMode::Plugin { c: cfg.c },
                Statistic::Bootstrap => SigmaMode::Bootstrap(BootstrapConfig {
                    seed: subseed(cfg.seed, family_index, rep as u32, s as u32),
                    ..cfg.bootstrap
                }),
            };
            let (contrast, out) = infer_step(&ds, &ev, s, &mode, cfg.alpha)?;
            let target = contrast.dot(theta);
            let (pvalue, interval, resamples, escalated) = (out.pvalue, out.interval, out.resamples, out.escalated);
            let (lo, hi) = interval.unwrap_or((f64::NAN, f64::NAN));
            records.push(RepRecord {
                family: model.family,
                rep,
                step: s,
                method: cfg.method,
                statistic,
                pvalue,
                lo,
                hi,
                target,
                covered: lo <= target && target <= hi,
                excl_zero: lo > 0.0 || hi < 0.0,
                entered: step.entered,
                resamples,
                escalated,
            });
        }
    }
    Ok(RepOutcome { records, entered })
}

fn summarize(cfg: &ExperimentConfig, records: &[RepRecord]) -> Vec<SummaryCell> {
    let mut cells = Vec::new();
    for &family in &cfg.families {
        for step in 1..=cfg.steps {
            for &statistic in &cfg.statistics {
                let group: Vec<&RepRecord> = records
                    .iter()
                    .filter(|r| r.family == family && r.step == step && r.statistic == statistic)
                    .collect();
                let count = group.len();
                let frac = |pred: &dyn Fn(&RepRecord) -> bool| {
                    group.iter().filter(|r| pred(r)).count() as f64 / count.max(1) as f64
                };
                let widths: Vec<f64> = group.iter().filter(|r| r.has_interval()).map(|r| r.width()).collect();
                let pvalues: Vec<f64> = group.iter().map(|r| r.pvalue).collect();
                cells.push(SummaryCell {
                    family,
                    step,
                    method: cfg.method,
                    statistic,
                    coverage: frac(&|r| r.covered),
                    power: frac(&|r| r.excl_zero),
                    width: median(&widths),
                    ks: ks_statistic(&pvalues),
                    count,
                    escalations: group.iter().filter(|r| r.escalated).count(),
                    empty: group.iter().filter(|r| !r.has_interval()).count(),
                });
            }
        }
    }
    cells
}
