//! Library outputs against independent oracles: direct formulas, numerical
//! quadrature over the gain density and standalone Monte Carlo.

use approx::assert_relative_eq;
use harq_power::fading::sample_coefficient_path;
use harq_power::optimizer::{optimize, solve_last_round_power, HarqScheme, Objective, OptimizerConfig};
use harq_power::simulator::{simulate, SimConfig};
use harq_power::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

const E: f64 = std::f64::consts::E;

fn unit() -> FadingSpec64 {
    FadingSpec::rayleigh(1.0).unwrap()
}

fn cdf(g: f64) -> f64 {
    1.0 - (-g).exp()
}

fn midpoint<H: Fn(f64) -> f64>(h: &H, lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let g = lo + (i as f64 + 0.5) * step;
            h(g) * (-g).exp()
        })
        .sum::<f64>()
        * step
}

/// Midpoint rule for `E[h(G)]`, `G ~ Exp(1)`, truncated at `g = 60`. The
/// integrands jump at decoding thresholds, all below `g = 2` here, so that
/// range gets a fine grid.
fn expect<H: Fn(f64) -> f64>(h: H) -> f64 {
    midpoint(&h, 0.0, 2.0, 8_000_000) + midpoint(&h, 2.0, 60.0, 1_000_000)
}

/// First round `m` (1-based) in which an RTD packet decodes, `None` on outage.
fn rtd_round(rate: f64, powers: &[f64], g: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (n, p) in powers.iter().enumerate() {
        acc += g * p;
        if acc >= rate.exp_m1() {
            return Some(n + 1);
        }
    }
    None
}

/// Same for fixed-length INR at initial rate `rate`.
fn inr_round(rate: f64, powers: &[f64], g: f64) -> Option<usize> {
    let mut info = 0.0;
    for (n, p) in powers.iter().enumerate() {
        info += (g * p).ln_1p();
        if info >= rate {
            return Some(n + 1);
        }
    }
    None
}

#[test]
fn gain_law_closed_forms() {
    assert_relative_eq!(gain_cdf(&unit(), 1.0).unwrap(), 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
    let two = FadingSpec::rayleigh(2.0).unwrap();
    assert_relative_eq!(gain_cdf(&two, 0.5).unwrap(), 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
    assert_relative_eq!(gain_inv_cdf(&unit(), 1e-3).unwrap(), -(0.999f64).ln(), max_relative = 1e-12);
    assert_relative_eq!(gain_inv_cdf(&unit(), 0.5).unwrap(), 2f64.ln(), max_relative = 1e-14);
}

#[test]
fn fast_fading_mean_gain() {
    let path = sample_gain_path(&unit().fast(), 1_000_000, 5);
    let mean = path.iter().sum::<f64>() / path.len() as f64;
    assert!((mean - 1.0).abs() < 0.005, "{mean}");
}

#[test]
fn gauss_markov_lag_one_correlation() {
    for beta in [0.3, 0.9] {
        let path = sample_coefficient_path(&unit().correlated(beta).unwrap(), 1_000_000, 6);
        // Real and imaginary parts are independent AR(1) sequences with the same coefficient.
        let (mut num, mut den) = (0.0, 0.0);
        for w in path.windows(2) {
            num += w[0].0 * w[1].0 + w[0].1 * w[1].1;
            den += w[0].0 * w[0].0 + w[0].1 * w[0].1;
        }
        assert!((num / den - beta).abs() < 0.01, "beta {beta}: {}", num / den);
    }
}

#[test]
fn correlated_one_is_block_path() {
    let a = sample_gain_path(&unit(), 50, 9);
    let b = sample_gain_path(&unit().correlated(1.0).unwrap(), 50, 9);
    assert_eq!(a, b);
    assert!(a.iter().all(|&g| g == a[0]));
}

#[test]
fn rtd_decode_profile_direct_formula() {
    let spec = RtdSpec::new(1.0, 1).unwrap();
    let policy = PowerPolicy::new(vec![10.0, 10.0]).unwrap();
    let prof = rtd_decode_profile(&spec, &policy, &unit()).unwrap();
    let a = E - 1.0;
    assert_relative_eq!(prof.p_success[0], 1.0 - cdf(a / 10.0), max_relative = 1e-13);
    assert_relative_eq!(prof.p_success[1], cdf(a / 10.0) - cdf(a / 20.0), max_relative = 1e-12);
    assert_relative_eq!(prof.p_outage, cdf(a / 20.0), max_relative = 1e-13);
    assert!((prof.p_outage - 0.08232).abs() < 1e-5);
}

#[test]
fn rtd_continuous_power_and_throughput_by_quadrature() {
    let spec = RtdSpec::new(1.0, 1).unwrap();
    for powers in [vec![10.0, 10.0], vec![38.4, 1679.3], vec![2.0, 7.0]] {
        let policy = PowerPolicy::new(powers.clone()).unwrap();
        let p_bar = expect(|g| {
            let m = rtd_round(1.0, &powers, g).unwrap_or(powers.len());
            powers[..m].iter().sum::<f64>() / m as f64
        });
        let eta = expect(|g| rtd_round(1.0, &powers, g).map_or(0.0, |m| 1.0 / m as f64));
        assert_relative_eq!(rtd_avg_power_continuous(&spec, &policy, &unit()).unwrap(), p_bar, max_relative = 1e-4);
        assert_relative_eq!(rtd_throughput_continuous(&spec, &policy, &unit()).unwrap(), eta, max_relative = 1e-4);
    }
}

#[test]
fn rtd_bursting_by_quadrature() {
    let spec = RtdSpec::new(1.0, 1).unwrap();
    let powers = [10.0, 10.0];
    let policy = PowerPolicy::new(powers.to_vec()).unwrap();
    let m = rtd_bursting_metrics(&spec, &policy, &unit()).unwrap();
    let rounds = expect(|g| rtd_round(1.0, &powers, g).unwrap_or(2) as f64);
    let decoded = expect(|g| rtd_round(1.0, &powers, g).map_or(0.0, |_| 1.0));
    assert_relative_eq!(m.expected_rounds, rounds, max_relative = 1e-4);
    assert_relative_eq!(m.throughput, decoded / rounds, max_relative = 1e-4);
    assert!((m.throughput - 0.79255).abs() < 5e-5);
}

#[test]
fn short_term_powers() {
    let eps = 1e-3;
    let g = -(1.0f64 - eps).ln();
    let rtd = rtd_short_term_power(&RtdSpec::new(1.0, 1).unwrap(), eps, &unit()).unwrap();
    assert_relative_eq!(rtd, (E - 1.0) / (2.0 * g), max_relative = 1e-12);
    let rtd0 = rtd_short_term_power(&RtdSpec::new(1.0, 0).unwrap(), eps, &unit()).unwrap();
    assert_relative_eq!(rtd0, (E - 1.0) / g, max_relative = 1e-12);
    let sched = InrRateSchedule::fixed_length(1.0, 1).unwrap();
    let inr = inr_short_term_power(&sched, eps, &unit()).unwrap();
    assert_relative_eq!(inr, (0.5f64.exp() - 1.0) / g, max_relative = 1e-12);
    let half = inr_short_term_power(&sched, 0.5, &unit()).unwrap();
    assert_relative_eq!(half, (0.5f64.exp() - 1.0) / 2f64.ln(), max_relative = 1e-12);
}

#[test]
fn inr_threshold_is_quadratic_root() {
    let sched = InrRateSchedule::fixed_length(1.0, 1).unwrap();
    let g = inr_outage_threshold(&sched, &PowerPolicy::new(vec![5.0, 20.0]).unwrap()).unwrap();
    // (1 + 5g)(1 + 20g) = e
    let root = (-25.0 + (625.0f64 + 400.0 * (E - 1.0)).sqrt()) / 200.0;
    assert_relative_eq!(g, root, max_relative = 1e-10);
    let g_equal = inr_outage_threshold(&sched, &PowerPolicy::new(vec![10.0, 10.0]).unwrap()).unwrap();
    assert_relative_eq!(g_equal, (0.5f64.exp() - 1.0) / 10.0, max_relative = 1e-10);
}

#[test]
fn inr_continuous_by_quadrature() {
    let sched = InrRateSchedule::fixed_length(1.0, 1).unwrap();
    for powers in [vec![10.0, 10.0], vec![30.0, 1000.0], vec![3.0, 40.0]] {
        let policy = PowerPolicy::new(powers.clone()).unwrap();
        let m = inr_continuous_metrics(&sched, &policy, &unit()).unwrap();
        let outage = expect(|g| inr_round(1.0, &powers, g).map_or(1.0, |_| 0.0));
        let p_bar = expect(|g| {
            let m = inr_round(1.0, &powers, g).unwrap_or(powers.len());
            powers[..m].iter().sum::<f64>() / m as f64
        });
        let eta = expect(|g| inr_round(1.0, &powers, g).map_or(0.0, |m| 1.0 / m as f64));
        assert_relative_eq!(m.outage, outage, max_relative = 1e-4);
        assert_relative_eq!(m.avg_power, p_bar, max_relative = 1e-4);
        assert_relative_eq!(m.throughput, eta, max_relative = 1e-4);
    }
}

#[test]
fn inr_bursting_by_quadrature() {
    let sched = InrRateSchedule::fixed_length(1.0, 1).unwrap();
    let powers = [10.0, 10.0];
    let m = inr_bursting_metrics(&sched, &PowerPolicy::new(powers.to_vec()).unwrap(), &unit()).unwrap();
    let rounds = expect(|g| inr_round(1.0, &powers, g).unwrap_or(2) as f64);
    let decoded = expect(|g| inr_round(1.0, &powers, g).map_or(0.0, |_| 1.0));
    assert_relative_eq!(m.throughput, decoded / rounds, max_relative = 1e-4);
    assert_relative_eq!(m.avg_power, 10.0, max_relative = 1e-12);
}

#[test]
fn rtd_fast_fading_against_monte_carlo() {
    let spec = RtdSpec::new(1.0, 1).unwrap();
    let policy = PowerPolicy::new(vec![10.0, 20.0]).unwrap();
    let exact = rtd_fast_fading_outage(&spec, &policy, &unit().fast(), 0, 0).unwrap();
    let a = E - 1.0;
    // Hypoexponential with rates 1/10 and 1/20.
    let direct = 1.0 - (20.0 * (-a / 20.0).exp() - 10.0 * (-a / 10.0).exp()) / 10.0;
    assert_relative_eq!(exact, direct, max_relative = 1e-12);
    let n = 4_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let fails = (0..n)
        .filter(|_| {
            let g1: f64 = Exp1.sample(&mut rng);
            let g2: f64 = Exp1.sample(&mut rng);
            10.0 * g1 + 20.0 * g2 < a
        })
        .count();
    let p = fails as f64 / n as f64;
    assert!((p - exact).abs() < 4.0 * (exact * (1.0 - exact) / n as f64).sqrt());
}

#[test]
fn inr_fast_fading_against_quadrature() {
    let sched = InrRateSchedule::fixed_length(1.0, 1).unwrap();
    let policy = PowerPolicy::new(vec![10.0, 10.0]).unwrap();
    let n = 2_000_000;
    let est = inr_fast_fading_outage(&sched, &policy, &unit().fast(), n, 3).unwrap();
    // Pr{(1 + 10 g1)(1 + 10 g2) < e} = E[F((e / (1 + 10 g1) - 1) / 10)] over g1 < (e - 1)/10.
    let exact = expect(|g1| {
        let t = (E / (1.0 + 10.0 * g1) - 1.0) / 10.0;
        if t > 0.0 {
            cdf(t)
        } else {
            0.0
        }
    });
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((est - exact).abs() < 4.0 * sigma, "{est} vs {exact}");
}

#[test]
fn last_round_power_closes_the_constraint() {
    let eps = 1e-3;
    let obj = Objective::new(HarqScheme::rtd(1.0, 1).unwrap(), CommModel::Continuous, unit(), eps).unwrap();
    let p2 = solve_last_round_power(&obj, &[38.4]).unwrap();
    assert_relative_eq!(p2.power, (E - 1.0) / -(1.0f64 - eps).ln() - 38.4, max_relative = 1e-12);
    assert!((p2.power - 1679.3).abs() < 0.5);
    let over = solve_last_round_power(&obj, &[5000.0]).unwrap();
    assert!(over.overshoots() && over.power == 0.0);
}

#[test]
fn lower_bound_is_tight_at_high_rate() {
    let spec = RtdSpec::new(4.0, 1).unwrap();
    let eps = 1e-3;
    let p = rtd_short_term_power(&spec, eps, &unit()).unwrap();
    let policy = PowerPolicy::uniform(p, 2).unwrap();
    let p_bar = rtd_avg_power_continuous(&spec, &policy, &unit()).unwrap();
    let bound = rtd_avg_power_lower_bound(&spec, &policy, &unit(), eps).unwrap();
    assert!(bound <= p_bar);
    assert!(to_db(p_bar) - to_db(bound) < 3.0, "{bound} vs {p_bar}");
}

/// Continuous-model average power for M = 1 written out directly.
fn rtd_two_round_power(p1: f64, p2: f64) -> f64 {
    let f1 = cdf((E - 1.0) / p1);
    p1 * (1.0 - f1) + 0.5 * (p1 + p2) * f1
}

#[test]
fn optimizer_matches_one_dimensional_grid() {
    let eps = 1e-3;
    let total = (E - 1.0) / -(1.0f64 - eps).ln();
    let best = (0..200_000)
        .map(|k| {
            let p1 = total * (k as f64 + 0.5) / 200_000.0;
            rtd_two_round_power(p1, total - p1)
        })
        .fold(f64::INFINITY, f64::min);
    let obj = Objective::new(HarqScheme::rtd(1.0, 1).unwrap(), CommModel::Continuous, unit(), eps).unwrap();
    let res = optimize(&obj, &OptimizerConfig::default()).unwrap();
    assert_relative_eq!(res.objective(), best, max_relative = 1e-4);
    assert!(res.achieved.outage <= eps + 1e-9);
}

#[test]
fn simulator_rtd_bursting_matches_closed_form() {
    let policy = PowerPolicy::new(vec![10.0, 10.0]).unwrap();
    let cfg = SimConfig::new(
        HarqScheme::rtd(1.0, 1).unwrap(),
        CommModel::Bursting,
        policy,
        unit(),
        1_000_000,
        21,
    );
    let r = simulate(&cfg).unwrap();
    assert!(r.outage.within(0.082318, 4.0), "{:?}", r.outage);
    assert!(r.throughput.within(0.792549, 4.0), "{:?}", r.throughput);
}

#[test]
fn simulator_inr_continuous_matches_quadrature() {
    let powers = vec![30.0, 1000.0];
    let cfg = SimConfig::new(
        HarqScheme::inr_fixed_length(1.0, 1).unwrap(),
        CommModel::Continuous,
        PowerPolicy::new(powers.clone()).unwrap(),
        unit(),
        1_000_000,
        22,
    );
    let r = simulate(&cfg).unwrap();
    let p_bar = expect(|g| {
        let m = inr_round(1.0, &powers, g).unwrap_or(2);
        powers[..m].iter().sum::<f64>() / m as f64
    });
    assert!(r.avg_power.within(p_bar, 4.0), "{:?} vs {p_bar}", r.avg_power);
}
