//! Repetition time diversity (RTD) HARQ.
//!
//! The same codeword of rate `R` is sent in up to `M + 1` rounds and the
//! receiver combines them coherently, so after round `m` the data decodes iff
//! `log(1 + g * sum_{n<=m} P_n) >= R`, i.e. iff `g >= (e^R - 1) / sum_{n<=m} P_n`.
//! Codeword length cancels from every long-term quantity, so powers and
//! energies here are per unit codeword length.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, HarqError, Result};
use crate::fading::{FadingSpec, GainProcess, Temporal};
use crate::hypoexp::sum_of_exponentials_cdf;
use crate::policy::{CommModel, DecodeProfile, Metrics, PowerPolicy};
use crate::rng::stream_rng;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtdSpec<T> {
    /// Initial code rate in nats per channel use.
    pub rate: T,
    /// Maximum number of retransmissions `M`.
    pub max_retransmissions: usize,
}

impl<T: Real> RtdSpec<T> {
    pub fn new(rate: T, max_retransmissions: usize) -> Result<Self> {
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(domain("rate", rate));
        }
        Ok(Self {
            rate,
            max_retransmissions,
        })
    }

    pub fn rounds(&self) -> usize {
        self.max_retransmissions + 1
    }

    /// `e^R - 1`: the combined SNR needed to decode.
    pub fn snr_threshold(&self) -> T {
        self.rate.exp_m1()
    }

    /// Smallest total power meeting outage `epsilon`.
    pub fn required_total_power(&self, epsilon: T, fading: &FadingSpec<T>) -> Result<T> {
        check_epsilon(epsilon)?;
        Ok(self.snr_threshold() / fading.inv_cdf(epsilon)?)
    }
}

pub(crate) fn check_epsilon<T: Real>(epsilon: T) -> Result<()> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(domain("outage probability", epsilon));
    }
    Ok(())
}

pub(crate) fn require_block<T: Real>(fading: &FadingSpec<T>) -> Result<()> {
    if !fading.is_block() {
        return Err(HarqError::Unsupported(
            "closed-form HARQ probabilities assume block fading".into(),
        ));
    }
    Ok(())
}

/// `F_G((e^R - 1) / S_m)` for each cumulative power `S_m`; an empty or zero
/// sum means the round cannot decode, so the probability is one.
fn undecoded_probs<T: Real>(spec: &RtdSpec<T>, policy: &PowerPolicy<T>, fading: &FadingSpec<T>) -> Vec<T> {
    let a = spec.snr_threshold();
    policy
        .cumulative()
        .into_iter()
        .map(|s| {
            if s > T::zero() {
                fading.cdf_unchecked(a / s)
            } else {
                T::one()
            }
        })
        .collect()
}

fn validate<T: Real>(spec: &RtdSpec<T>, policy: &PowerPolicy<T>, fading: &FadingSpec<T>) -> Result<()> {
    require_block(fading)?;
    policy.expect_rounds(spec.rounds())?;
    if policy.is_all_zero() {
        return Err(HarqError::DegeneratePolicy);
    }
    Ok(())
}

pub fn rtd_decode_profile<T: Real>(
    spec: &RtdSpec<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<DecodeProfile<T>> {
    validate(spec, policy, fading)?;
    Ok(DecodeProfile::from_undecoded(&undecoded_probs(spec, policy, fading)))
}

/// Continuous-model average power: the per-packet average power
/// `P^(m) = (1/m) sum_{n<=m} P_n` weighted by the round the packet ends in.
pub fn rtd_avg_power_continuous<T: Real>(
    spec: &RtdSpec<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<T> {
    let profile = rtd_decode_profile(spec, policy, fading)?;
    Ok(continuous_avg_power(&policy.cumulative(), &profile))
}

fn continuous_avg_power<T: Real>(cumulative: &[T], profile: &DecodeProfile<T>) -> T {
    let rounds = cumulative.len();
    let decoded = cumulative
        .iter()
        .zip(&profile.p_success)
        .enumerate()
        .fold(T::zero(), |acc, (i, (&s, &p))| {
            acc + s / T::from_usize_lossy(i + 1) * p
        });
    decoded + cumulative[rounds - 1] / T::from_usize_lossy(rounds) * profile.p_outage
}

pub fn rtd_outage<T: Real>(spec: &RtdSpec<T>, policy: &PowerPolicy<T>, fading: &FadingSpec<T>) -> Result<T> {
    require_block(fading)?;
    policy.expect_rounds(spec.rounds())?;
    let total = policy.total();
    if total <= T::zero() {
        return Ok(T::one());
    }
    Ok(fading.cdf_unchecked(spec.snr_threshold() / total))
}

/// Uniform per-round power meeting outage `epsilon` with equality.
pub fn rtd_short_term_power<T: Real>(spec: &RtdSpec<T>, epsilon: T, fading: &FadingSpec<T>) -> Result<T> {
    Ok(spec.required_total_power(epsilon, fading)? / T::from_usize_lossy(spec.rounds()))
}

/// Continuous-model throughput `sum_m (R/m) Pr{S_m}`.
pub fn rtd_throughput_continuous<T: Real>(
    spec: &RtdSpec<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<T> {
    if policy.is_all_zero() {
        require_block(fading)?;
        policy.expect_rounds(spec.rounds())?;
        return Ok(T::zero());
    }
    let profile = rtd_decode_profile(spec, policy, fading)?;
    Ok(profile
        .p_success
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &p)| acc + spec.rate / T::from_usize_lossy(i + 1) * p))
}

pub fn rtd_continuous_metrics<T: Real>(
    spec: &RtdSpec<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<Metrics<T>> {
    let profile = rtd_decode_profile(spec, policy, fading)?;
    let cumulative = policy.cumulative();
    let throughput = profile
        .p_success
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &p)| acc + spec.rate / T::from_usize_lossy(i + 1) * p);
    Ok(Metrics {
        outage: profile.p_outage,
        avg_power: continuous_avg_power(&cumulative, &profile),
        throughput,
        expected_rounds: profile.expected_rounds(),
        expected_energy: expected_energy(&cumulative, &profile),
    })
}

fn expected_energy<T: Real>(cumulative: &[T], profile: &DecodeProfile<T>) -> T {
    let decoded = cumulative
        .iter()
        .zip(&profile.p_success)
        .fold(T::zero(), |acc, (&s, &p)| acc + s * p);
    decoded + cumulative[cumulative.len() - 1] * profile.p_outage
}

/// Bursting-model metrics: `phi = E{energy} / E{channel uses}` per packet,
/// using the telescoped forms
///
/// ```text
/// E{energy}/L = P_1 + sum_{m>=2} P_m F_G(a / S_{m-1})
/// E{uses}/L   = 1 + sum_{m<=M} F_G(a / S_m)
/// ```
pub fn rtd_bursting_metrics<T: Real>(
    spec: &RtdSpec<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
) -> Result<Metrics<T>> {
    validate(spec, policy, fading)?;
    let undecoded = undecoded_probs(spec, policy, fading);
    let powers = policy.powers();
    let m = spec.max_retransmissions;

    let energy = powers[1..]
        .iter()
        .zip(&undecoded[..m])
        .fold(powers[0], |acc, (&p, &u)| acc + p * u);
    let uses = undecoded[..m].iter().fold(T::one(), |acc, &u| acc + u);
    let outage = undecoded[m];
    Ok(Metrics {
        outage,
        avg_power: energy / uses,
        throughput: spec.rate * (T::one() - outage) / uses,
        expected_rounds: uses,
        expected_energy: energy,
    })
}

pub fn rtd_metrics<T: Real>(
    spec: &RtdSpec<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
    model: CommModel,
) -> Result<Metrics<T>> {
    match model {
        CommModel::Continuous => rtd_continuous_metrics(spec, policy, fading),
        CommModel::Bursting => rtd_bursting_metrics(spec, policy, fading),
    }
}

/// Outage `Pr{log(1 + sum_n g_n P_n) < R}` when the gain changes between rounds.
///
/// Fast fading uses the exact distribution of `sum g_n P_n` (a sum of
/// independent exponentials with means `P_n / lambda`). Correlated fading is
/// estimated by Monte Carlo with `mc_budget` packets; block fading falls back
/// to the closed form.
pub fn rtd_fast_fading_outage<T: Real>(
    spec: &RtdSpec<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
    mc_budget: usize,
    seed: u64,
) -> Result<T>
where
    StandardNormal: Distribution<T>,
{
    policy.expect_rounds(spec.rounds())?;
    let fading = fading.canonical();
    let a = spec.snr_threshold();
    match fading.temporal {
        Temporal::Block => rtd_outage(spec, policy, &fading),
        Temporal::Fast => {
            let rates: Vec<T> = policy
                .powers()
                .iter()
                .filter(|&&p| p > T::zero())
                .map(|&p| fading.lambda / p)
                .collect();
            if rates.is_empty() {
                return Ok(T::one());
            }
            Ok(sum_of_exponentials_cdf(&rates, a))
        }
        Temporal::Correlated { .. } => {
            if mc_budget == 0 {
                return Err(HarqError::Config("Monte Carlo budget must be positive".into()));
            }
            let mut rng = stream_rng(seed, &[0x0d7d]);
            let mut outages = 0usize;
            for _ in 0..mc_budget {
                let mut process = GainProcess::start(&fading, &mut rng);
                let mut snr = T::zero();
                for (n, &p) in policy.powers().iter().enumerate() {
                    if n > 0 {
                        process.advance(&mut rng);
                    }
                    snr = snr + process.gain() * p;
                }
                if snr < a {
                    outages += 1;
                }
            }
            Ok(T::from_usize_lossy(outages) / T::from_usize_lossy(mc_budget))
        }
    }
}

/// Exponential-Chebyshev lower bound on the continuous average power of any
/// policy that meets outage `epsilon` and has nondecreasing powers:
///
/// ```text
/// P-bar >= e^{-R} sum_{m<=M} (S_m - m P_{m+1}) / (m(m+1)) * (1 + E{G} S_m)
///          + (e^R - 1) / ((M+1) F_G^{-1}(epsilon))
/// ```
///
/// The bound is loose, particularly at low rates.
pub fn rtd_avg_power_lower_bound<T: Real>(
    spec: &RtdSpec<T>,
    policy: &PowerPolicy<T>,
    fading: &FadingSpec<T>,
    epsilon: T,
) -> Result<T> {
    policy.expect_rounds(spec.rounds())?;
    let cumulative = policy.cumulative();
    let powers = policy.powers();
    let mean_gain = fading.mean_gain();
    let chebyshev = (1..=spec.max_retransmissions).fold(T::zero(), |acc, m| {
        let mt = T::from_usize_lossy(m);
        let s = cumulative[m - 1];
        let coeff = (s - mt * powers[m]) / (mt * (mt + T::one()));
        acc + coeff * (T::one() + mean_gain * s)
    });
    Ok((-spec.rate).exp() * chebyshev + rtd_short_term_power(spec, epsilon, fading)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> FadingSpec<f64> {
        FadingSpec::rayleigh(1.0).unwrap()
    }

    fn pol(p: &[f64]) -> PowerPolicy<f64> {
        PowerPolicy::new(p.to_vec()).unwrap()
    }

    #[test]
    fn decode_profile_example() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let prof = rtd_decode_profile(&spec, &pol(&[10.0, 10.0]), &unit()).unwrap();
        assert_relative_eq!(prof.p_success[0], 0.842_12, epsilon = 2e-5);
        assert_relative_eq!(prof.p_success[1], 0.075_56, epsilon = 2e-5);
        assert_relative_eq!(prof.p_outage, 0.082_32, epsilon = 2e-5);
        assert!((prof.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_round_profile() {
        let spec = RtdSpec::new(1.0, 0).unwrap();
        let prof = rtd_decode_profile(&spec, &pol(&[10.0]), &unit()).unwrap();
        assert_relative_eq!(prof.p_success[0], 0.842_12, epsilon = 2e-5);
        assert_relative_eq!(prof.p_outage, 0.157_88, epsilon = 5e-6);
    }

    #[test]
    fn huge_first_power_always_decodes() {
        let spec = RtdSpec::new(1.0, 2).unwrap();
        let prof = rtd_decode_profile(&spec, &pol(&[1e15, 1.0, 1.0]), &unit()).unwrap();
        assert!(prof.p_success[0] > 1.0 - 1e-12);
        let eta = rtd_throughput_continuous(&spec, &pol(&[1e15, 1.0, 1.0]), &unit()).unwrap();
        assert!((eta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_policy() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        assert_eq!(
            rtd_decode_profile(&spec, &pol(&[0.0, 0.0]), &unit()),
            Err(HarqError::DegeneratePolicy)
        );
        assert_eq!(rtd_outage(&spec, &pol(&[0.0, 0.0]), &unit()).unwrap(), 1.0);
        assert_eq!(rtd_throughput_continuous(&spec, &pol(&[0.0, 0.0]), &unit()).unwrap(), 0.0);
    }

    #[test]
    fn leading_zero_rounds_never_decode() {
        let spec = RtdSpec::new(1.0, 2).unwrap();
        let prof = rtd_decode_profile(&spec, &pol(&[0.0, 5.0, 5.0]), &unit()).unwrap();
        assert_eq!(prof.p_success[0], 0.0);
        assert!((prof.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_policy_average_power_is_exact() {
        for m in 0..4 {
            let spec = RtdSpec::new(1.0, m).unwrap();
            let p = 7.25;
            let policy = PowerPolicy::uniform(p, m + 1).unwrap();
            assert_relative_eq!(rtd_avg_power_continuous(&spec, &policy, &unit()).unwrap(), p, max_relative = 1e-14);
            assert_relative_eq!(rtd_bursting_metrics(&spec, &policy, &unit()).unwrap().avg_power, p, max_relative = 1e-14);
        }
    }

    #[test]
    fn outage_examples() {
        let spec = RtdSpec::new(1.0, 0).unwrap();
        let out = rtd_outage(&spec, &pol(&[1717.7]), &unit()).unwrap();
        assert!((out - 1e-3).abs() < 5e-6);
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let out = rtd_outage(&spec, &pol(&[10.0, 10.0]), &unit()).unwrap();
        assert_relative_eq!(out, 0.082_32, epsilon = 2e-5);
        assert!(rtd_outage(&spec, &pol(&[1e300, 1.0]), &unit()).unwrap() < 1e-200);
    }

    #[test]
    fn short_term_power_examples() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let p = rtd_short_term_power(&spec, 1e-3, &unit()).unwrap();
        assert_relative_eq!(p, 858.8, epsilon = 0.1);
        assert_relative_eq!(crate::to_db(p), 29.34, epsilon = 0.01);
        let spec0 = RtdSpec::new(1.0, 0).unwrap();
        assert_relative_eq!(rtd_short_term_power(&spec0, 1e-3, &unit()).unwrap(), 1717.7, epsilon = 0.5);
        assert!(rtd_short_term_power(&spec, 1.0 - 1e-12, &unit()).unwrap() < 0.05);
        assert!(rtd_short_term_power(&spec, 1.0, &unit()).is_err());
        assert!(rtd_short_term_power(&spec, 0.0, &unit()).is_err());
    }

    #[test]
    fn throughput_example() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let eta = rtd_throughput_continuous(&spec, &pol(&[10.0, 10.0]), &unit()).unwrap();
        assert_relative_eq!(eta, 0.879_90, epsilon = 2e-5);
    }

    #[test]
    fn bursting_examples() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let m = rtd_bursting_metrics(&spec, &pol(&[10.0, 10.0]), &unit()).unwrap();
        assert_relative_eq!(m.throughput, 0.792_55, epsilon = 2e-5);
        assert_relative_eq!(m.expected_rounds, 1.157_88, epsilon = 2e-5);
        assert_relative_eq!(m.outage, 0.082_32, epsilon = 2e-5);
    }

    #[test]
    fn fast_fading_single_round_is_block_outage() {
        let spec = RtdSpec::new(1.0, 0).unwrap();
        let a = rtd_fast_fading_outage(&spec, &pol(&[12.0]), &unit().fast(), 0, 0).unwrap();
        let b = rtd_outage(&spec, &pol(&[12.0]), &unit()).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }

    #[test]
    fn fast_fading_two_rounds_closed_form() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let a = std::f64::consts::E - 1.0;
        let out = rtd_fast_fading_outage(&spec, &pol(&[10.0, 20.0]), &unit().fast(), 0, 0).unwrap();
        let want = 1.0 - (20.0 * (-a / 20.0).exp() - 10.0 * (-a / 10.0).exp()) / 10.0;
        assert_relative_eq!(out, want, max_relative = 1e-12);
        assert_relative_eq!(out, 0.006_781, epsilon = 5e-6);
    }

    #[test]
    fn lower_bound_single_round_is_exact() {
        let spec = RtdSpec::new(1.0, 0).unwrap();
        let p = rtd_short_term_power(&spec, 1e-3, &unit()).unwrap();
        let lb = rtd_avg_power_lower_bound(&spec, &pol(&[p]), &unit(), 1e-3).unwrap();
        assert_relative_eq!(lb, p, max_relative = 1e-14);
    }

    #[test]
    fn closed_forms_reject_fast_fading() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        assert!(matches!(
            rtd_decode_profile(&spec, &pol(&[1.0, 1.0]), &unit().fast()),
            Err(HarqError::Unsupported(_))
        ));
        assert!(matches!(
            rtd_decode_profile(&spec, &pol(&[1.0]), &unit()),
            Err(HarqError::RoundCount { expected: 2, got: 1 })
        ));
    }
}
