//! Asymptotic allocation for many retransmissions.
//!
//! With `Z^(m) = s / sum_{n<=m} P_n` (`s = e^R - 1` for RTD, `s = R` for
//! fixed-length INR) the stationarity conditions of the average power give
//!
//! ```text
//! Z^(m) = sqrt((m+1)/m * Z^(m-1) Z^(m+1)),   m >= 2
//! Z^(2) = h Z^(1)^2 / (2 (1 + h Z^(1))),      h = f_G(Z^(1)) / (1 - F_G(Z^(1)))
//! ```
//!
//! and the outage constraint pins `Z^(M+1) = F_G^-1(eps)`. The two-point
//! problem is solved by shooting on `log Z^(1)`.

use super::objective::{solve_last_round_power, HarqScheme, Objective};
use crate::error::{HarqError, Result};
use crate::fading::FadingSpec;
use crate::policy::{CommModel, PowerPolicy};
use crate::roots::bisect_increasing;
use crate::rtd::check_epsilon;
use crate::Real;

/// Relative accuracy of the shooting match on `Z^(M+1)`.
pub const SHOOTING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricAllocation<T> {
    pub policy: PowerPolicy<T>,
    /// `Z^(1) .. Z^(M+1)`.
    pub z: Vec<T>,
}

impl<T: Real> GeometricAllocation<T> {
    /// `|Z^(m) - sqrt((m+1)/m Z^(m-1) Z^(m+1))| / Z^(m)` for `2 <= m <= M`.
    pub fn residuals(&self) -> Vec<T> {
        recursion_residuals(&self.z)
    }

    /// `max/min - 1` over the last `count` ratios `Z^(m+1)/Z^(m)`.
    pub fn ratio_variation(&self, count: usize) -> T {
        ratio_variation(&self.z, count)
    }
}

pub fn recursion_residuals<T: Real>(z: &[T]) -> Vec<T> {
    (2..z.len())
        .map(|m| {
            let mt = T::from_usize_lossy(m);
            let log_rhs = T::lit(0.5) * (((mt + T::one()) / mt).ln() + z[m - 2].ln() + z[m].ln());
            (T::one() - (log_rhs - z[m - 1].ln()).exp()).abs()
        })
        .collect()
}

pub fn ratio_variation<T: Real>(z: &[T], count: usize) -> T {
    let ratios: Vec<T> = z.windows(2).map(|w| w[1] / w[0]).collect();
    let tail = &ratios[ratios.len().saturating_sub(count)..];
    if tail.is_empty() {
        return T::zero();
    }
    let max = tail.iter().fold(T::neg_infinity(), |a, &r| a.max(r));
    let min = tail.iter().fold(T::infinity(), |a, &r| a.min(r));
    max / min - T::one()
}

/// `log Z^(1) .. log Z^(M+1)` for a given `log Z^(1)`.
fn forward<T: Real>(log_z1: T, rounds: usize, fading: &FadingSpec<T>) -> Result<Vec<T>> {
    let z1 = log_z1.exp();
    let h = fading.hazard(z1)?;
    let mut log_z = Vec::with_capacity(rounds);
    log_z.push(log_z1);
    if rounds > 1 {
        // log(h Z1 / (2 (1 + h Z1))) without overflow for huge Z1.
        let hz = h * z1;
        let ratio = if hz.is_finite() {
            (hz / (T::lit(2.0) * (T::one() + hz))).ln()
        } else {
            -T::LN_2()
        };
        log_z.push(log_z1 + ratio);
    }
    for m in 2..rounds {
        let mt = T::from_usize_lossy(m);
        let next = (mt / (mt + T::one())).ln() + T::lit(2.0) * log_z[m - 1] - log_z[m - 2];
        log_z.push(next);
    }
    Ok(log_z)
}

/// Allocation from the asymptotic optimality recursion. For fixed-length INR
/// the last round is re-solved so that the exact outage constraint binds.
pub fn geometric_allocation<T: Real>(
    scheme: &HarqScheme<T>,
    epsilon: T,
    fading: &FadingSpec<T>,
) -> Result<GeometricAllocation<T>> {
    check_epsilon(epsilon)?;
    let scale = match scheme {
        HarqScheme::Rtd(spec) => spec.snr_threshold(),
        HarqScheme::Inr(sched) => {
            if !sched.is_fixed_length() {
                return Err(HarqError::Unsupported(
                    "geometric allocation assumes fixed-length INR".into(),
                ));
            }
            sched.initial_rate()
        }
    };
    let rounds = scheme.rounds();
    let target = fading.inv_cdf(epsilon)?.ln();

    let log_z = if rounds == 1 {
        vec![target]
    } else {
        let mismatch = |lz1: T| match forward(lz1, rounds, fading) {
            Ok(lz) => lz[rounds - 1] - target,
            Err(_) => T::nan(),
        };
        // Every ratio is below one, so Z^(1) = Z^(M+1) undershoots.
        let lo = target;
        let mut step = T::one();
        let mut hi = lo + step;
        let mut tries = 0;
        while !(mismatch(hi) >= T::zero()) {
            step = step + step;
            hi = lo + step;
            tries += 1;
            if tries > 64 || !hi.is_finite() {
                return Err(HarqError::Numeric(format!(
                    "shooting could not bracket Z(1) for M = {} (last log Z(1) tried: {hi})",
                    rounds - 1
                )));
            }
        }
        let lz1 = bisect_increasing(mismatch, lo, hi, T::epsilon())?;
        let mut lz = forward(lz1, rounds, fading)?;
        let miss = (lz[rounds - 1] - target).abs();
        if !(miss <= T::lit(SHOOTING_TOL)) {
            return Err(HarqError::Numeric(format!(
                "shooting missed Z(M+1) by a relative {miss} (log Z(1) = {lz1})"
            )));
        }
        lz[rounds - 1] = target;
        lz
    };

    let z: Vec<T> = log_z.iter().map(|l| l.exp()).collect();
    let mut prev_inv = T::zero();
    let mut powers: Vec<T> = z
        .iter()
        .map(|&zm| {
            let inv = zm.recip();
            let p = scale * (inv - prev_inv);
            prev_inv = inv;
            p.max(T::zero())
        })
        .collect();

    if let HarqScheme::Inr(_) = scheme {
        let objective = Objective::new(scheme.clone(), CommModel::Continuous, fading.canonical(), epsilon)?;
        let last = solve_last_round_power(&objective, &powers[..rounds - 1])?;
        powers[rounds - 1] = last.power;
    }

    Ok(GeometricAllocation {
        policy: PowerPolicy::new(powers)?,
        z,
    })
}
