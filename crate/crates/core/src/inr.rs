//! Incremental redundancy (INR) HARQ.
//!
//! Round `m` sends `l_m` new parity symbols; after round `m` the effective
//! code rate is `R^(m) = Q / l^(m)` with `l^(m) = sum_{n<=m} l_n`. The receiver
//! decodes iff the accumulated information
//!
//! ```text
//! A_m(g) = sum_{n<=m} c_n log(1 + g P_n),   c_n = 1/R^(n) - 1/R^(n-1),  R^(0) = inf
//! ```
//!
//! reaches one. Lengths are normalized so that `l_1 = 1`, giving
//! `l_n = c_n R^(1)`.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, HarqError, Result};
use crate::fading::{FadingSpec, GainProcess};
use crate::policy::{CommModel, DecodeProfile, Metrics, PowerPolicy};
use crate::roots::positive_root_increasing;
use crate::rng::stream_rng;
use crate::rtd::{check_epsilon, require_block};
use crate::Real;

/// Tolerance of the decoding-threshold root finder.
pub const THRESHOLD_REL_TOL: f64 = 1e-12;

/// Strictly decreasing effective rates `R^(1) > ... > R^(M+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InrRateSchedule<T> {
    rates: Vec<T>,
}

impl<T: Real> InrRateSchedule<T> {
    pub fn new(rates: Vec<T>) -> Result<Self> {
        if rates.is_empty() {
            return Err(HarqError::Config("rate schedule needs at least one round".into()));
        }
        if let Some(&r) = rates.iter().find(|r| !(**r > T::zero()) || !r.is_finite()) {
            return Err(domain("rate", r));
        }
        if rates.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(HarqError::Config("INR rates must be strictly decreasing".into()));
        }
        Ok(Self { rates })
    }

    /// Equal-length rounds: `R^(m) = R / m`.
    pub fn fixed_length(rate: T, max_retransmissions: usize) -> Result<Self> {
        Self::new(
            (1..=max_retransmissions + 1)
                .map(|m| rate / T::from_usize_lossy(m))
                .collect(),
        )
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    pub fn rounds(&self) -> usize {
        self.rates.len()
    }

    pub fn max_retransmissions(&self) -> usize {
        self.rates.len() - 1
    }

    /// Initial rate `R^(1)`.
    pub fn initial_rate(&self) -> T {
        self.rates[0]
    }

    /// Whether every round has the length of the first one.
    pub fn is_fixed_length(&self) -> bool {
        let r = self.rates[0];
        self.rates.iter().enumerate().all(|(i, &ri)| {
            let want = r / T::from_usize_lossy(i + 1);
            (ri - want).abs() <= T::lit(1e-12) * want
        })
    }

    /// `c_n = 1/R^(n) - 1/R^(n-1)`.
    pub fn coefficients(&self) -> Vec<T> {
        let mut prev = T::zero();
        self.rates
            .iter()
            .map(|&r| {
                let inv = r.recip();
                let c = inv - prev;
                prev = inv;
                c
            })
            .collect()
    }

    /// Round lengths relative to the first round, `l_n / l_1`.
    pub fn length_fractions(&self) -> Vec<T> {
        let r1 = self.rates[0];
        self.coefficients().into_iter().map(|c| c * r1).collect()
    }

    /// `l_n / l^(m)`: the share of round `n` in a packet that ends at round `m`.
    pub fn length_shares(&self, m: usize) -> Vec<T> {
        let rm = self.rates[m - 1];
        self.coefficients()[..m].iter().map(|&c| c * rm).collect()
    }

    /// `A_m(g)` for `m = 1 ..= M+1` is `accumulated_information(m, ...)`.
    pub fn accumulated_information(&self, m: usize, powers: &[T], g: T) -> T {
        self.coefficients()[..m]
            .iter()
            .zip(powers)
            .fold(T::zero(), |acc, (&c, &p)| acc + c * (g * p).ln_1p())
    }
}

/// Per-round energies `xi_n = l_n P_n` and their running sums, per unit `l_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySchedule<T> {
    pub per_round: Vec<T>,
    pub cumulative: Vec<T>,
}

impl<T: Real> EnergySchedule<T> {
    pub fn new(schedule: &InrRateSchedule<T>, policy: &PowerPolicy<T>) -> Result<Self> {
        policy.expect_rounds(schedule.rounds())?;
        let per_round: Vec<T> = schedule
            .length_fractions()
            .into_iter()
            .zip(policy.powers())
            .map(|(l, &p)| l * p)
            .collect();
        let cumulative = per_round
            .iter()
            .scan(T::zero(), |acc, &e| {
                *acc = *acc + e;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            per_round,
            cumulative,
        })
    }

    /// `xi^(m) / l^(m)` with `l^(m)` in units of `l_1`.
    pub fn average_powers(&self, schedule: &InrRateSchedule<T>) -> Vec<T> {
        let r1 = schedule.initial_rate();
        self.cumulative
            .iter()
            .zip(schedule.rates())
            .map(|(&xi, &rm)| xi * rm / r1)
            .collect()
    }
}

/// Equivalent per-packet powers `P^(m) = R^(m) sum_{n<=m} c_n P_n`.
pub fn inr_equivalent_powers<T: Real>(schedule: &InrRateSchedule<T>, policy: &PowerPolicy<T>) -> Result<Vec<T>> {
    policy.expect_rounds(schedule.rounds())?;
    let mut acc = T::zero();
    Ok(schedule
        .coefficients()
        .iter()
        .zip(policy.powers())
        .zip(schedule.rates())
        .map(|((&c, &p), &r)| {
            acc = acc + c * p;
            r * acc
        })
        .collect())
}

/// Decoding thresholds `g*_m`: the packet decodes by round `m` iff `g >= g*_m`.
/// Rounds that cannot carry information yet have threshold `+inf`.
pub fn inr_thresholds<T: Real>(schedule: &InrRateSchedule<T>, policy: &PowerPolicy<T>) -> Result<Vec<T>> {
    policy.expect_rounds(schedule.rounds())?;
    if policy.is_all_zero() {
        return Err(HarqError::DegeneratePolicy);
    }
    let coeffs = schedule.coefficients();
    let powers = policy.powers();
    let tol = T::lit(THRESHOLD_REL_TOL);
    let mut thresholds = Vec::with_capacity(powers.len());
    let mut prev = T::infinity();
    let mut max_power = T::zero();
    for m in 1..=powers.len() {
        let p = powers[m - 1];
        if p == T::zero() {
            thresholds.push(prev);
            continue;
        }
        max_power = max_power.max(p);
        let (c, p) = (&coeffs[..m], &powers[..m]);
        let info = |g: T| {
            c.iter()
                .zip(p)
                .fold(-T::one(), |acc, (&cn, &pn)| acc + cn * (g * pn).ln_1p())
        };
        // A_m(g) <= log(1 + g max P) / R^(m), so this point never overshoots.
        let lower = schedule.rates()[m - 1].exp_m1() / max_power;
        let root = positive_root_increasing(info, lower, tol)?;
        let g = root.min(prev);
        thresholds.push(g);
        prev = g;
    }
    Ok(thresholds)
}

/// Gain below which the packet is in outage after all rounds.
pub fn inr_outage_threshold<T: Real>(schedule: &InrRateSchedule<T>, policy: &PowerPolicy<T>) -> Result<T> {
    Ok(*inr_thresholds(schedule, policy)?.last().expect("nonempty"))
}

fn undecoded<T: Real>(thresholds: &[T], fading: &FadingSpec<T>) -> Vec<T> {
    thresholds.iter().map(|&g| fading.cdf_unchecked(g)).collect()
}

pub fn inr_decode_profile<T: Real>(
    schedule: &InrRateSchedule<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<DecodeProfile<T>> {
    require_block(fading)?;
    let thresholds = inr_thresholds(schedule, policy)?;
    Ok(DecodeProfile::from_undecoded(&undecoded(&thresholds, fading)))
}

pub fn inr_avg_power_continuous<T: Real>(
    schedule: &InrRateSchedule<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<T> {
    Ok(inr_continuous_metrics(schedule, policy, fading)?.avg_power)
}

pub fn inr_throughput_continuous<T: Real>(
    schedule: &InrRateSchedule<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<T> {
    if policy.is_all_zero() {
        require_block(fading)?;
        policy.expect_rounds(schedule.rounds())?;
        return Ok(T::zero());
    }
    Ok(inr_continuous_metrics(schedule, policy, fading)?.throughput)
}

/// Continuous model: per-packet average powers `P^(m)` and rates `R^(m)`
/// weighted by the round the packet ends in. `expected_energy` is the
/// per-packet energy in units of `l_1`.
pub fn inr_continuous_metrics<T: Real>(
    schedule: &InrRateSchedule<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<Metrics<T>> {
    let profile = inr_decode_profile(schedule, policy, fading)?;
    let equivalent = inr_equivalent_powers(schedule, policy)?;
    let energy = EnergySchedule::new(schedule, policy)?;
    let last = schedule.rounds() - 1;

    let weighted = |values: &[T]| {
        values
            .iter()
            .zip(&profile.p_success)
            .fold(T::zero(), |acc, (&v, &p)| acc + v * p)
            + values[last] * profile.p_outage
    };
    let throughput = schedule
        .rates()
        .iter()
        .zip(&profile.p_success)
        .fold(T::zero(), |acc, (&r, &p)| acc + r * p);
    Ok(Metrics {
        outage: profile.p_outage,
        avg_power: weighted(&equivalent),
        throughput,
        expected_rounds: profile.expected_rounds(),
        expected_energy: weighted(&energy.cumulative),
    })
}

/// Bursting model, with `Theta_n = F_G(g*_{n-1})` the probability that round
/// `n` is needed:
///
/// ```text
/// phi = (P_1/R^(1) + sum_{n>=2} c_n P_n Theta_n) / (1/R^(1) + sum_{n>=2} c_n Theta_n)
/// eta = (1 - F_G(g*_{M+1}))                    / (1/R^(1) + sum_{n>=2} c_n Theta_n)
/// ```
pub fn inr_bursting_metrics<T: Real>(
    schedule: &InrRateSchedule<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<Metrics<T>> {
    require_block(fading)?;
    let thresholds = inr_thresholds(schedule, policy)?;
    let undecoded = undecoded(&thresholds, fading);
    let coeffs = schedule.coefficients();
    let powers = policy.powers();
    let r1 = schedule.initial_rate();
    let m = schedule.max_retransmissions();

    let mut energy = powers[0] * coeffs[0];
    let mut uses = coeffs[0];
    let mut rounds = T::one();
    for n in 1..=m {
        let theta = undecoded[n - 1];
        energy = energy + coeffs[n] * powers[n] * theta;
        uses = uses + coeffs[n] * theta;
        rounds = rounds + theta;
    }
    let outage = undecoded[m];
    Ok(Metrics {
        outage,
        avg_power: energy / uses,
        throughput: (T::one() - outage) / uses,
        expected_rounds: rounds,
        expected_energy: energy * r1,
    })
}

pub fn inr_metrics<T: Real>(
    schedule: &InrRateSchedule<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
    model: CommModel,
) -> Result<Metrics<T>> {
    match model {
        CommModel::Continuous => inr_continuous_metrics(schedule, policy, fading),
        CommModel::Bursting => inr_bursting_metrics(schedule, policy, fading),
    }
}

/// Uniform power meeting outage `epsilon` with equality.
pub fn inr_short_term_power<T: Real>(schedule: &InrRateSchedule<T>, epsilon: T, fading: &FadingSpec<T>) -> Result<T> {
    check_epsilon(epsilon)?;
    let last = *schedule.rates().last().expect("nonempty");
    Ok(last.exp_m1() / fading.inv_cdf(epsilon)?)
}

/// Outage when the gain varies between rounds, by Monte Carlo with
/// `mc_budget` packets. Only fixed-length schedules are supported off block
/// fading; block fading returns the closed form.
pub fn inr_fast_fading_outage<T: Real>(
    schedule: &InrRateSchedule<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
    mc_budget: usize,
    seed: u64,
) -> Result<T>
where
    StandardNormal: Distribution<T>,
{
    policy.expect_rounds(schedule.rounds())?;
    let fading = fading.canonical();
    if fading.is_block() {
        if policy.is_all_zero() {
            return Ok(T::one());
        }
        return Ok(fading.cdf_unchecked(inr_outage_threshold(schedule, policy)?));
    }
    if !schedule.is_fixed_length() {
        return Err(HarqError::Unsupported(
            "INR under time-varying fading is defined for fixed-length coding only".into(),
        ));
    }
    if mc_budget == 0 {
        return Err(HarqError::Config("Monte Carlo budget must be positive".into()));
    }
    // Fixed length: decode iff prod (1 + g_n P_n) >= e^R.
    let target = schedule.initial_rate();
    let mut rng = stream_rng(seed, &[0x1a7e]);
    let mut outages = 0usize;
    for _ in 0..mc_budget {
        let mut process = GainProcess::start(&fading, &mut rng);
        let mut info = T::zero();
        for (n, &p) in policy.powers().iter().enumerate() {
            if n > 0 {
                process.advance(&mut rng);
            }
            info = info + (process.gain() * p).ln_1p();
        }
        if info < target {
            outages += 1;
        }
    }
    Ok(T::from_usize_lossy(outages) / T::from_usize_lossy(mc_budget))
}
