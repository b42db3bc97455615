//! ACK/NACK-driven power adaptation for RTD with one retransmission.
//!
//! The transmit power `P` is shared by both rounds and updated after every
//! round: an ACK in round one scales it by `1 - d1`; a NACK by `1 + d2`
//! before the retransmission goes out at the new value; an ACK in round two
//! by `1 - d3`; an outage by `1 + d4`.

use rayon::prelude::*;

use super::engine::{Engine, PowerControl, Static};
use super::{run, SimResult, DEFAULT_BATCHES, DEFAULT_SLOTS_PER_BLOCK};
use crate::error::{HarqError, Result};
use crate::fading::FadingSpec;
use crate::optimizer::HarqScheme;
use crate::policy::CommModel;
use crate::rtd::RtdSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinforcementPolicy {
    pub p_initial: f64,
    /// `d1 .. d4`.
    pub d: [f64; 4],
}

impl ReinforcementPolicy {
    pub fn fixed(power: f64) -> Self {
        Self {
            p_initial: power,
            d: [0.0; 4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_initial > 0.0 && self.p_initial.is_finite()) {
            return Err(HarqError::Config("initial power must be positive".into()));
        }
        let [d1, d2, d3, d4] = self.d;
        let down = |d: f64| (0.0..1.0).contains(&d);
        let up = |d: f64| d >= 0.0 && d.is_finite();
        if !(down(d1) && down(d3) && up(d2) && up(d4)) {
            return Err(HarqError::Config(format!(
                "update fractions need d1, d3 in [0, 1) and d2, d4 >= 0, got {:?}",
                self.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Adaptive {
    power: f64,
    d: [f64; 4],
    min: f64,
    max: f64,
}

impl Adaptive {
    fn new(policy: &ReinforcementPolicy) -> Self {
        Self {
            power: policy.p_initial,
            d: policy.d,
            min: policy.p_initial,
            max: policy.p_initial,
        }
    }
}

impl PowerControl for Adaptive {
    #[inline]
    fn power(&mut self, _: usize) -> f64 {
        self.power
    }

    #[inline]
    fn feedback(&mut self, round: usize, decoded: bool) {
        let [d1, d2, d3, d4] = self.d;
        let factor = match (round, decoded) {
            (0, true) => 1.0 - d1,
            (0, false) => 1.0 + d2,
            (_, true) => 1.0 - d3,
            (_, false) => 1.0 + d4,
        };
        self.power *= factor;
        self.min = self.min.min(self.power);
        self.max = self.max.max(self.power);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinforcementResult {
    pub estimates: SimResult,
    /// Smallest and largest state power reached in any batch.
    pub power_min: f64,
    pub power_max: f64,
    /// Mean state power at the end of the batches.
    pub power_final: f64,
}

fn check_setting(spec: &RtdSpec<f64>, fading: &FadingSpec<f64>) -> Result<()> {
    if spec.max_retransmissions != 1 {
        return Err(HarqError::Unsupported(
            "power reinforcement is defined for one retransmission".into(),
        ));
    }
    if fading.is_block() {
        return Err(HarqError::Unsupported(
            "power reinforcement needs time-varying fading in the continuous model".into(),
        ));
    }
    Ok(())
}

/// Continuous-model simulation of the adaptive scheme; uses the same stream,
/// batches and seeds as [`super::simulate`] with a static uniform policy.
pub fn simulate_reinforcement(
    policy: &ReinforcementPolicy,
    spec: &RtdSpec<f64>,
    fading: &FadingSpec<f64>,
    n_packets: usize,
    seed: u64,
) -> Result<ReinforcementResult> {
    policy.validate()?;
    check_setting(spec, fading)?;
    if n_packets == 0 {
        return Err(HarqError::Config("simulation counts must be at least one".into()));
    }
    let engine = Engine::new(&HarqScheme::Rtd(*spec));
    let (estimates, controls) = run(
        &engine,
        fading,
        CommModel::Continuous,
        n_packets,
        DEFAULT_SLOTS_PER_BLOCK,
        DEFAULT_BATCHES,
        seed,
        || Adaptive::new(policy),
    );
    let power_min = controls.iter().map(|c| c.min).fold(f64::INFINITY, f64::min);
    let power_max = controls.iter().map(|c| c.max).fold(0.0, f64::max);
    let power_final = controls.iter().map(|c| c.power).sum::<f64>() / controls.len() as f64;
    Ok(ReinforcementResult {
        estimates,
        power_min,
        power_max,
        power_final,
    })
}

fn uniform_stream(spec: &RtdSpec<f64>, fading: &FadingSpec<f64>, power: f64, n_packets: usize, seed: u64) -> SimResult {
    let engine = Engine::new(&HarqScheme::Rtd(*spec));
    let powers = [power, power];
    run(
        &engine,
        fading,
        CommModel::Continuous,
        n_packets,
        DEFAULT_SLOTS_PER_BLOCK,
        DEFAULT_BATCHES,
        seed,
        || Static(&powers),
    )
    .0
}

/// Empirical feasibility rule shared by the static and adaptive searches:
/// outage within `epsilon` plus two standard errors.
fn feasible(r: &SimResult, epsilon: f64) -> bool {
    r.outage.mean <= epsilon + 2.0 * r.outage.std_error
}

/// Smallest uniform power whose simulated stream meets `epsilon` under the
/// same rule as [`tune_reinforcement`], by bisection in log power. Returns
/// the power and its simulation.
pub fn static_uniform_power(
    spec: &RtdSpec<f64>,
    fading: &FadingSpec<f64>,
    epsilon: f64,
    n_packets: usize,
    seed: u64,
) -> Result<(f64, SimResult)> {
    check_setting(spec, fading)?;
    crate::rtd::check_epsilon(epsilon)?;
    let mut lo = 1e-3f64;
    let mut hi = 1e6f64;
    let hi_run = uniform_stream(spec, fading, hi, n_packets, seed);
    if !feasible(&hi_run, epsilon) {
        return Err(HarqError::Infeasible(format!("no uniform power up to {hi} meets outage {epsilon}")));
    }
    let mut best = (hi, hi_run);
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        let r = uniform_stream(spec, fading, mid, n_packets, seed);
        if feasible(&r, epsilon) {
            hi = mid;
            best = (mid, r);
        } else {
            lo = mid;
        }
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReinforcementGrid {
    pub p_initial: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    pub d4: Vec<f64>,
}

impl ReinforcementGrid {
    /// Default grid: four initial powers `center * 2^(k/2)`, `k = -2 ..= 1`;
    /// small steps for the per-ACK decrease `d1`, large ones for the
    /// retransmission boost `d2` and its undo `d3`.
    pub fn around(center: f64) -> Self {
        Self {
            p_initial: (-2..=1).map(|k| center * 2f64.powf(k as f64 / 2.0)).collect(),
            d1: vec![0.0, 0.005, 0.01, 0.02, 0.05],
            d2: vec![0.0, 0.2, 0.5, 1.0, 2.0],
            d3: vec![0.0, 0.2, 0.4, 0.5, 0.6],
            d4: vec![0.0, 0.05, 0.1, 0.2, 0.4],
        }
    }

    fn points(&self) -> Vec<ReinforcementPolicy> {
        let mut out = Vec::new();
        for &p in &self.p_initial {
            for &d1 in &self.d1 {
                for &d2 in &self.d2 {
                    for &d3 in &self.d3 {
                        for &d4 in &self.d4 {
                            out.push(ReinforcementPolicy {
                                p_initial: p,
                                d: [d1, d2, d3, d4],
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunedReinforcement {
    pub policy: ReinforcementPolicy,
    pub result: ReinforcementResult,
    pub evaluated: usize,
}

/// Exhaustive grid search for the lowest simulated average power among
/// settings whose outage is within `epsilon + 2 sigma`. All grid points share
/// one seed (common random numbers).
pub fn tune_reinforcement(
    spec: &RtdSpec<f64>,
    fading: &FadingSpec<f64>,
    epsilon: f64,
    grid: &ReinforcementGrid,
    n_packets: usize,
    seed: u64,
) -> Result<TunedReinforcement> {
    check_setting(spec, fading)?;
    crate::rtd::check_epsilon(epsilon)?;
    let points = grid.points();
    if points.is_empty() {
        return Err(HarqError::Config("reinforcement grid is empty".into()));
    }
    for p in &points {
        p.validate()?;
    }
    let runs: Vec<Result<ReinforcementResult>> = points
        .par_iter()
        .map(|p| simulate_reinforcement(p, spec, fading, n_packets, seed))
        .collect();
    let mut best: Option<(ReinforcementPolicy, ReinforcementResult)> = None;
    for (p, r) in points.iter().zip(runs) {
        let r = r?;
        if !feasible(&r.estimates, epsilon) {
            continue;
        }
        let wins = match &best {
            None => true,
            Some((_, b)) => r.estimates.avg_power.mean < b.estimates.avg_power.mean,
        };
        if wins {
            best = Some((*p, r));
        }
    }
    let (policy, result) = best.ok_or_else(|| {
        HarqError::Infeasible(format!("no grid point meets outage {epsilon} within two standard errors"))
    })?;
    Ok(TunedReinforcement {
        policy,
        result,
        evaluated: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PowerPolicy;
    use crate::simulator::{simulate, SimConfig};

    fn corr() -> FadingSpec<f64> {
        FadingSpec::rayleigh(1.0).unwrap().correlated(0.9).unwrap()
    }

    #[test]
    fn zero_updates_reproduce_static_policy() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let r = simulate_reinforcement(&ReinforcementPolicy::fixed(12.0), &spec, &corr(), 20_000, 8).unwrap();
        let s = simulate(&SimConfig::new(
            HarqScheme::Rtd(spec),
            CommModel::Continuous,
            PowerPolicy::uniform(12.0, 2).unwrap(),
            corr(),
            20_000,
            8,
        ))
        .unwrap();
        assert_eq!(r.estimates, s);
        assert_eq!((r.power_min, r.power_max), (12.0, 12.0));
    }

    #[test]
    fn power_stays_positive() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let p = ReinforcementPolicy {
            p_initial: 3.0,
            d: [0.4, 0.4, 0.2, 0.4],
        };
        let r = simulate_reinforcement(&p, &spec, &corr(), 20_000, 2).unwrap();
        assert!(r.power_min > 0.0);
        assert!((0.0..=1.0).contains(&r.estimates.outage.mean));
    }

    #[test]
    fn rejects_bad_settings() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let block = FadingSpec::rayleigh(1.0).unwrap();
        assert!(simulate_reinforcement(&ReinforcementPolicy::fixed(1.0), &spec, &block, 10, 0).is_err());
        let bad = ReinforcementPolicy {
            p_initial: 1.0,
            d: [1.0, 0.0, 0.0, 0.0],
        };
        assert!(simulate_reinforcement(&bad, &spec, &corr(), 10, 0).is_err());
    }

    #[test]
    fn singleton_grid_and_infeasible_grid() {
        let spec = RtdSpec::new(1.0, 1).unwrap();
        let grid = ReinforcementGrid {
            p_initial: vec![50.0],
            d1: vec![0.0],
            d2: vec![0.0],
            d3: vec![0.0],
            d4: vec![0.0],
        };
        let t = tune_reinforcement(&spec, &corr(), 0.2, &grid, 5_000, 1).unwrap();
        assert_eq!(t.policy, ReinforcementPolicy::fixed(50.0));
        let tiny = ReinforcementGrid {
            p_initial: vec![1e-3],
            ..grid
        };
        assert!(matches!(
            tune_reinforcement(&spec, &corr(), 1e-3, &tiny, 5_000, 1),
            Err(HarqError::Infeasible(_))
        ));
    }
}
