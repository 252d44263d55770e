//! Error laws, the design recipe and per-task random streams.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Open01, StandardNormal};

use crate::error::{Error, Result};

/// Skew-normal shape used for both design columns and errors.
pub const SKEW_SHAPE: f64 = 5.0;

/// An independent generator for the task tagged `(group, index, purpose)`.
///
/// Every tag maps to its own ChaCha stream under the same key, so results do
/// not depend on how tasks are scheduled across threads.
pub fn stream(seed: u64, group: u8, index: u32, purpose: u32) -> ChaCha8Rng {
    debug_assert!(purpose < 1 << 24);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((group as u64) << 56) | ((index as u64) << 24) | purpose as u64);
    rng
}

/// A 64-bit seed drawn from [`stream`], for APIs that take a seed.
pub fn subseed(seed: u64, group: u8, index: u32, purpose: u32) -> u64 {
    stream(seed, group, index, purpose).next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorFamily {
    Normal,
    Laplace,
    Uniform,
    SkewNormal,
    /// `π·N(−B,1) + (1−2π)·N(0,1) + π·N(B,1)` with `B` set by the variance.
    Mixture3 { pi: f64 },
}

impl ErrorFamily {
    /// The four families of the low- and high-dimensional experiments.
    pub const STANDARD: [ErrorFamily; 4] = [
        ErrorFamily::Normal,
        ErrorFamily::Laplace,
        ErrorFamily::Uniform,
        ErrorFamily::SkewNormal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ErrorFamily::Normal => "normal",
            ErrorFamily::Laplace => "laplace",
            ErrorFamily::Uniform => "uniform",
            ErrorFamily::SkewNormal => "skew_normal",
            ErrorFamily::Mixture3 { .. } => "mixture3",
        }
    }
}

impl fmt::Display for ErrorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(ErrorFamily::Normal),
            "laplace" => Ok(ErrorFamily::Laplace),
            "uniform" => Ok(ErrorFamily::Uniform),
            "skew_normal" | "skew-normal" | "skewnormal" | "sn" => Ok(ErrorFamily::SkewNormal),
            other => Err(Error::InvalidConfig(format!(
                "unknown error family {other:?} (expected normal, laplace, uniform or skew_normal)"
            ))),
        }
    }
}

/// Mean-zero errors with a fixed variance, optionally multiplied by
/// per-row standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub family: ErrorFamily,
    pub variance: f64,
    pub row_scales: Option<Vec<f64>>,
}

impl ErrorModel {
    pub fn new(family: ErrorFamily, variance: f64) -> Self {
        Self {
            family,
            variance,
            row_scales: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidConfig(format!("error variance must be positive, got {}", self.variance)));
        }
        if let ErrorFamily::Mixture3 { pi } = self.family {
            if !(pi > 0.0 && pi <= 0.5) {
                return Err(Error::InvalidConfig(format!("mixture weight must lie in (0, 1/2], got {pi}")));
            }
            if !(self.variance > 1.0) {
                return Err(Error::InvalidConfig("mixture variance must exceed 1".into()));
            }
        }
        Ok(())
    }

    /// The mixture's outer mean `B`, from `1 + 2πB² = variance`.
    pub fn mixture_shift(&self) -> Option<f64> {
        match self.family {
            ErrorFamily::Mixture3 { pi } => Some(((self.variance - 1.0) / (2.0 * pi)).sqrt()),
            _ => None,
        }
    }
}

/// Heteroskedastic row scales `σ_i = sqrt(3‖x_i‖²)`.
pub fn hetero_scales(x: &DMatrix<f64>) -> Vec<f64> {
    x.row_iter().map(|row| (3.0 * row.norm_squared()).sqrt()).collect()
}

/// One draw of `SN(0, 1, shape)` from `δ|U0| + sqrt(1 − δ²)·U1`, `δ = shape / sqrt(1 + shape²)`.
pub fn skew_normal<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    let delta = shape / (1.0 + shape * shape).sqrt();
    let u0: f64 = rng.sample(StandardNormal);
    let u1: f64 = rng.sample(StandardNormal);
    delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1
}

/// Mean and standard deviation of `SN(0, 1, shape)`.
pub fn skew_normal_moments(shape: f64) -> (f64, f64) {
    let delta = shape / (1.0 + shape * shape).sqrt();
    let mean = delta * FRAC_2_PI.sqrt();
    (mean, (1.0 - 2.0 * delta * delta / PI).sqrt())
}

/// One mean-zero draw before the model's variance and row scales are
/// applied: unit variance, except for the mixture, which already has its own.
pub(crate) fn standard_draw<R: Rng + ?Sized>(rng: &mut R, family: ErrorFamily, shift: f64) -> f64 {
    match family {
        ErrorFamily::Normal => rng.sample(StandardNormal),
        ErrorFamily::Laplace => {
            // Inverse CDF with scale 1/√2.
            let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
            -u.signum() * (1.0 - 2.0 * u.abs()).ln() / std::f64::consts::SQRT_2
        }
        ErrorFamily::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
        ErrorFamily::SkewNormal => {
            let (mean, sd) = skew_normal_moments(SKEW_SHAPE);
            (skew_normal(rng, SKEW_SHAPE) - mean) / sd
        }
        ErrorFamily::Mixture3 { pi } => {
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            if u < pi {
                z - shift
            } else if u < 2.0 * pi {
                z + shift
            } else {
                z
            }
        }
    }
}

pub fn sample_errors<R: Rng + ?Sized>(model: &ErrorModel, n: usize, rng: &mut R) -> Result<DVector<f64>> {
    model.validate()?;
    if let Some(scales) = &model.row_scales {
        if scales.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: scales.len(),
            });
        }
    }
    let (shift, sd) = match model.mixture_shift() {
        // The mixture's own variance already equals the target.
        Some(b) => (b, 1.0),
        None => (0.0, model.variance.sqrt()),
    };
    Ok(DVector::from_fn(n, |i, _| {
        let e = standard_draw(rng, model.family, shift) * sd;
        match &model.row_scales {
            Some(scales) => e * scales[i],
            None => e,
        }
    }))
}

pub fn gen_errors(model: &ErrorModel, n: usize, seed: u64) -> Result<DVector<f64>> {
    sample_errors(model, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnLaw {
    Normal,
    Bernoulli,
    SkewNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignSpec {
    pub n: usize,
    pub d: usize,
    pub unit_norm: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub laws: Vec<ColumnLaw>,
}

/// Each column is, with equal probability, i.i.d. `N(0,1)`, `Bern(0.5)` or
/// `SN(0,1,5)`. A column that comes out constant zero is redrawn.
pub fn gen_design(spec: &DesignSpec) -> Result<Design> {
    if spec.n < 2 || spec.d < 1 {
        return Err(Error::InvalidConfig(format!(
            "design needs n >= 2 and d >= 1, got n = {}, d = {}",
            spec.n, spec.d
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let coin = Bernoulli::new(0.5).expect("valid probability");
    let mut x = DMatrix::zeros(spec.n, spec.d);
    let mut laws = Vec::with_capacity(spec.d);
    for j in 0..spec.d {
        let law = match rng.random_range(0..3) {
            0 => ColumnLaw::Normal,
            1 => ColumnLaw::Bernoulli,
            _ => ColumnLaw::SkewNormal,
        };
        loop {
            for i in 0..spec.n {
                x[(i, j)] = match law {
                    ColumnLaw::Normal => rng.sample(StandardNormal),
                    ColumnLaw::Bernoulli => f64::from(u8::from(coin.sample(&mut rng))),
                    ColumnLaw::SkewNormal => skew_normal(&mut rng, SKEW_SHAPE),
                };
            }
            if x.column(j).norm() > 0.0 {
                break;
            }
        }
        if spec.unit_norm {
            let norm = x.column(j).norm();
            x.column_mut(j).unscale_mut(norm);
        }
        laws.push(law);
    }
    Ok(Design { x, laws })
}
