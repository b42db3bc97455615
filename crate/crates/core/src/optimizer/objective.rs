use crate::error::{HarqError, Result};
use crate::fading::FadingSpec;
use crate::inr::{inr_metrics, inr_outage_threshold, inr_short_term_power, InrRateSchedule};
use crate::policy::{CommModel, Metrics, PowerPolicy, Protocol};
use crate::rtd::{check_epsilon, require_block, rtd_metrics, rtd_outage, rtd_short_term_power, RtdSpec};
use crate::Real;

/// Protocol together with its rate parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum HarqScheme<T> {
    Rtd(RtdSpec<T>),
    Inr(InrRateSchedule<T>),
}

impl<T: Real> HarqScheme<T> {
    pub fn rtd(rate: T, max_retransmissions: usize) -> Result<Self> {
        Ok(Self::Rtd(RtdSpec::new(rate, max_retransmissions)?))
    }

    pub fn inr_fixed_length(rate: T, max_retransmissions: usize) -> Result<Self> {
        Ok(Self::Inr(InrRateSchedule::fixed_length(rate, max_retransmissions)?))
    }

    pub fn protocol(&self) -> Protocol {
        match self {
            Self::Rtd(_) => Protocol::Rtd,
            Self::Inr(_) => Protocol::Inr,
        }
    }

    pub fn rounds(&self) -> usize {
        match self {
            Self::Rtd(s) => s.rounds(),
            Self::Inr(s) => s.rounds(),
        }
    }

    pub fn max_retransmissions(&self) -> usize {
        self.rounds() - 1
    }

    pub fn initial_rate(&self) -> T {
        match self {
            Self::Rtd(s) => s.rate,
            Self::Inr(s) => s.initial_rate(),
        }
    }

    /// Uniform power meeting outage `epsilon` with equality.
    pub fn short_term_power(&self, epsilon: T, fading: &FadingSpec<T>) -> Result<T> {
        match self {
            Self::Rtd(s) => rtd_short_term_power(s, epsilon, fading),
            Self::Inr(s) => inr_short_term_power(s, epsilon, fading),
        }
    }

    pub fn metrics(&self, policy: &PowerPolicy<T>, fading: &FadingSpec<T>, model: CommModel) -> Result<Metrics<T>> {
        match self {
            Self::Rtd(s) => rtd_metrics(s, policy, fading, model),
            Self::Inr(s) => inr_metrics(s, policy, fading, model),
        }
    }

    pub fn outage(&self, policy: &PowerPolicy<T>, fading: &FadingSpec<T>) -> Result<T> {
        match self {
            Self::Rtd(s) => rtd_outage(s, policy, fading),
            Self::Inr(s) => {
                require_block(fading)?;
                if policy.is_all_zero() {
                    return Ok(T::one());
                }
                Ok(fading.cdf_unchecked(inr_outage_threshold(s, policy)?))
            }
        }
    }

    /// Per-round energies in units of the first round length. Equal to the
    /// powers for RTD and fixed-length INR.
    pub fn energies(&self, policy: &PowerPolicy<T>) -> Vec<T> {
        match self {
            Self::Rtd(_) => policy.powers().to_vec(),
            Self::Inr(s) => s
                .length_fractions()
                .iter()
                .zip(policy.powers())
                .map(|(&l, &p)| l * p)
                .collect(),
        }
    }
}

/// Minimize the long-term average power of `scheme` under `model` subject to
/// `Pr{outage} <= epsilon`, with block fading.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective<T> {
    pub scheme: HarqScheme<T>,
    pub model: CommModel,
    pub fading: FadingSpec<T>,
    pub epsilon: T,
}

impl<T: Real> Objective<T> {
    pub fn new(scheme: HarqScheme<T>, model: CommModel, fading: FadingSpec<T>, epsilon: T) -> Result<Self> {
        check_epsilon(epsilon)?;
        require_block(&fading)?;
        Ok(Self {
            scheme,
            model,
            fading,
            epsilon,
        })
    }

    pub fn rounds(&self) -> usize {
        self.scheme.rounds()
    }

    pub fn evaluate(&self, policy: &PowerPolicy<T>) -> Result<Metrics<T>> {
        self.scheme.metrics(policy, &self.fading, self.model)
    }

    /// Short-term (uniform) power meeting the constraint: the baseline.
    pub fn baseline_power(&self) -> Result<T> {
        self.scheme.short_term_power(self.epsilon, &self.fading)
    }

    pub fn baseline_policy(&self) -> Result<PowerPolicy<T>> {
        PowerPolicy::uniform(self.baseline_power()?, self.rounds())
    }
}

/// Last-round power that makes the outage constraint bind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LastRoundPower<T> {
    /// `max(raw, 0)`: the constraint holds with this power.
    pub power: T,
    /// Unclamped solution of the constraint equation; negative when the
    /// earlier rounds already over-satisfy the constraint.
    pub raw: T,
}

impl<T: Real> LastRoundPower<T> {
    /// Whether the earlier rounds alone already beat the outage target.
    pub fn overshoots(&self) -> bool {
        self.raw < T::zero()
    }
}

/// Solves the outage constraint with equality for `P_{M+1}` given `P_1..P_M`.
///
/// RTD: `P_{M+1} = (e^R - 1)/F^-1(eps) - sum P_n`. INR: at `g* = F^-1(eps)`,
/// `P_{M+1} = (exp((1 - S)/c_{M+1}) - 1)/g*` with `S` the information
/// accumulated by the first `M` rounds.
pub fn solve_last_round_power<T: Real>(objective: &Objective<T>, partial: &[T]) -> Result<LastRoundPower<T>> {
    let m = objective.scheme.max_retransmissions();
    if partial.len() != m {
        return Err(HarqError::RoundCount {
            expected: m,
            got: partial.len(),
        });
    }
    let g = objective.fading.inv_cdf(objective.epsilon)?;
    if !(g > T::zero()) {
        return Err(HarqError::Infeasible("outage target needs unbounded power".into()));
    }
    let raw = match &objective.scheme {
        HarqScheme::Rtd(spec) => {
            let sum = partial.iter().fold(T::zero(), |s, &p| s + p);
            spec.snr_threshold() / g - sum
        }
        HarqScheme::Inr(sched) => {
            let c = sched.coefficients();
            let info = c[..m]
                .iter()
                .zip(partial)
                .fold(T::zero(), |s, (&cn, &p)| s + cn * (g * p).ln_1p());
            ((T::one() - info) / c[m]).exp_m1() / g
        }
    };
    if raw.is_nan() {
        return Err(HarqError::Numeric("last-round power is NaN".into()));
    }
    Ok(LastRoundPower {
        power: raw.max(T::zero()),
        raw,
    })
}
