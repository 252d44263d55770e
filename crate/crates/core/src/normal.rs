//! Standard normal tail probabilities that stay accurate far into the tails.
//!
//! Everything is expressed through the log-survival function `ln(1 - Φ(x))`.
//! Below the asymptotic cutoff it comes from `erfc`; above it, from the
//! continued fraction for Mills' ratio, which never underflows because it is
//! evaluated directly in log space.

use libm::{erf, erfc};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standardized arguments at or above this use the Mills-ratio expansion.
pub const ASYMPTOTIC_CUTOFF: f64 = 8.0;

const MILLS_TERMS: usize = 120;

/// `ln(1 - Φ(x))`.
pub fn log_sf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x >= ASYMPTOTIC_CUTOFF {
        return log_sf_mills(x);
    }
    if x >= 0.0 {
        (0.5 * erfc(x * FRAC_1_SQRT_2)).ln()
    } else {
        // 1 - Φ(x) = 1 - Φ(-|x|); the subtracted tail is accurate, so ln_1p keeps precision.
        (-0.5 * erfc(-x * FRAC_1_SQRT_2)).ln_1p()
    }
}

/// `ln Φ(x)`.
pub fn log_cdf(x: f64) -> f64 {
    log_sf(-x)
}

/// Mills' ratio R(x) = (1 - Φ(x)) / φ(x) by backward evaluation of
/// R(x) = 1 / (x + 1/(x + 2/(x + 3/(x + ...)))).
fn mills_ratio(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=MILLS_TERMS).rev() {
        tail = x + k as f64 / tail;
    }
    1.0 / tail
}

fn log_sf_mills(x: f64) -> f64 {
    mills_ratio(x).ln() - 0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// `(1 - Φ(x1)) / (1 - Φ(x2))` for `x1 >= x2`, via a difference of log survivals.
///
/// Saturates to zero once the ratio leaves the representable range; use
/// [`log_survival_ratio`] when the magnitude itself matters.
pub fn stable_survival_ratio(x1: f64, x2: f64) -> f64 {
    log_survival_ratio(x1, x2).exp()
}

pub fn log_survival_ratio(x1: f64, x2: f64) -> f64 {
    debug_assert!(x1 >= x2 || x1.is_nan() || x2.is_nan());
    if x1 == x2 {
        return 0.0;
    }
    log_sf(x1) - log_sf(x2)
}

/// `ln(Φ(hi) - Φ(lo))` for `lo <= hi`, choosing the representation that
/// avoids cancellation: right-tail survivals when the interval sits right of
/// zero, left-tail CDFs when it sits left, and `erf` when it straddles zero.
pub fn log_interval_mass(lo: f64, hi: f64) -> f64 {
    if !(lo < hi) {
        return f64::NEG_INFINITY;
    }
    if lo >= 0.0 {
        log_diff_from_logs(log_sf(lo), log_sf(hi))
    } else if hi <= 0.0 {
        log_diff_from_logs(log_cdf(hi), log_cdf(lo))
    } else {
        (0.5 * (erf(hi * FRAC_1_SQRT_2) - erf(lo * FRAC_1_SQRT_2))).ln()
    }
}

/// `ln(exp(big) - exp(small))` for `big >= small`.
fn log_diff_from_logs(big: f64, small: f64) -> f64 {
    if small == f64::NEG_INFINITY {
        return big;
    }
    let delta = small - big;
    if delta >= 0.0 {
        return f64::NEG_INFINITY;
    }
    big + (-delta.exp_m1()).ln()
}

/// Standard normal quantile, polished with Newton steps on the accurate CDF.
pub fn quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let mut z = Normal::standard().inverse_cdf(p);
    if !z.is_finite() {
        return z;
    }
    for _ in 0..2 {
        let density = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        if density == 0.0 {
            break;
        }
        z -= (cdf(z) - p) / density;
    }
    z
}

/// Standard normal CDF without log-space handling, for moderate arguments.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(got: f64, want: f64) -> f64 {
        ((got - want) / want).abs()
    }

    // ln(1 - Φ(x)) at 50 significant digits.
    const LOG_SF_REFERENCE: [(f64, f64); 11] = [
        (-10.0, -7.619853024160526065973372e-24),
        (-1.0, -0.1727537790234498895264832),
        (0.0, -std::f64::consts::LN_2),
        (1.0, -1.841021645009263505770783),
        (5.0, -15.0649983939887257360837),
        (8.0, -35.01343715991454989550413),
        (10.0, -53.23128515051247057834703),
        (20.0, -203.9171553710972639368045),
        (37.5, -707.6689893175071910661132),
        (38.0, -726.5572160188201300965035),
        (50.0, -1254.831361139419901254133),
    ];

    #[test]
    fn log_sf_matches_reference() {
        for &(x, want) in &LOG_SF_REFERENCE {
            let got = log_sf(x);
            assert!(rel_err(got, want) < 1e-12, "x={x}: {got} vs {want}");
        }
        assert_eq!(log_sf(-40.0), 0.0);
        assert_eq!(log_sf(f64::INFINITY), f64::NEG_INFINITY);
        assert_eq!(log_sf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn continuity_at_cutoff() {
        let below = log_sf(ASYMPTOTIC_CUTOFF - 1e-9);
        let above = log_sf(ASYMPTOTIC_CUTOFF);
        assert!((below - above).abs() < 1e-7);
    }

    #[test]
    fn interval_mass_regimes() {
        // straddling zero
        let m = log_interval_mass(-1.0, 1.0).exp();
        assert!((m - 0.682_689_492_137_085_9).abs() < 1e-14);
        // deep right tail: S(30) - S(31) ~ S(30)
        let m = log_interval_mass(30.0, 31.0);
        assert!((m - log_sf(30.0)).abs() < 1e-6);
        // left tail mirrors right tail
        assert!((log_interval_mass(-31.0, -30.0) - m).abs() < 1e-12);
        assert_eq!(log_interval_mass(2.0, 2.0), f64::NEG_INFINITY);
        assert!((log_interval_mass(f64::NEG_INFINITY, f64::INFINITY)).abs() < 1e-15);
    }

    #[test]
    fn survival_ratio_identity_and_small_cases() {
        assert_eq!(stable_survival_ratio(3.0, 3.0), 1.0);
        assert!(rel_err(stable_survival_ratio(2.0, 1.0), 0.14339349869880653564) < 1e-12);
    }

    #[test]
    fn quantile_round_trip() {
        assert!((quantile(0.95) - 1.6448536269514728225).abs() < 1e-12);
        assert!((cdf(quantile(0.3)) - 0.3).abs() < 1e-14);
    }
}
