//! Monte Carlo packet simulator.
//!
//! Three modes, chosen from the communication model and the temporal fading:
//!
//! * bursting: every packet starts a fresh, stationary fading process; all
//!   `M + 1` gains are drawn up front so runs with different policies see the
//!   same channel;
//! * continuous, block fading: a fading block holds `slots_per_block` first-round
//!   codeword slots filled with identical packets; outage, rounds and energy are
//!   per-block averages and power/throughput are per-block ratios;
//! * continuous, fast or correlated fading: one packet stream over a single
//!   fading process that advances every codeword transmission.
//!
//! Work is split into independent batches with derived seeds; batch means
//! give the standard errors.

mod engine;
mod reinforcement;
mod saa;

pub use engine::PacketOutcome;
pub use reinforcement::{
    simulate_reinforcement, static_uniform_power, tune_reinforcement, ReinforcementGrid, ReinforcementPolicy,
    ReinforcementResult, TunedReinforcement,
};
pub use saa::{CorrelatedSaa, SaaSolution};

use rayon::prelude::*;

use crate::error::{HarqError, Result};
use crate::fading::{FadingSpec, GainProcess, Temporal};
use crate::optimizer::HarqScheme;
use crate::policy::{CommModel, Metrics, PowerPolicy};
use crate::rng::stream_rng;
use engine::{check_policy, Engine, PowerControl, Static};

pub const DEFAULT_SLOTS_PER_BLOCK: usize = 120;
pub const DEFAULT_BATCHES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scheme: HarqScheme<f64>,
    pub model: CommModel,
    pub policy: PowerPolicy<f64>,
    pub fading: FadingSpec<f64>,
    /// Packets to simulate (rounded up to whole fading blocks).
    pub n_packets: usize,
    pub seed: u64,
    /// First-round codeword slots per fading block (continuous, block fading).
    pub slots_per_block: usize,
    pub batches: usize,
}

impl SimConfig {
    pub fn new(
        scheme: HarqScheme<f64>,
        model: CommModel,
        policy: PowerPolicy<f64>,
        fading: FadingSpec<f64>,
        n_packets: usize,
        seed: u64,
    ) -> Self {
        Self {
            scheme,
            model,
            policy,
            fading,
            n_packets,
            seed,
            slots_per_block: DEFAULT_SLOTS_PER_BLOCK,
            batches: DEFAULT_BATCHES,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_packets == 0 || self.slots_per_block == 0 || self.batches == 0 {
            return Err(HarqError::Config("simulation counts must be at least one".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `(mean - target) / std_error`; zero when both the error and the
    /// difference vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.mean - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }

    /// `|mean - target| <= sigmas * std_error`, with a relative slack of
    /// `1e-12` for estimates that carry no sampling noise.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_error + 1e-12 * target.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub outage: Estimate,
    /// `sum energy / sum channel uses` (per-block average for block fading).
    pub avg_power: Estimate,
    pub throughput: Estimate,
    pub expected_rounds: Estimate,
    pub expected_energy: Estimate,
    pub packets: u64,
}

impl SimResult {
    pub fn metrics(&self) -> Metrics<f64> {
        Metrics {
            outage: self.outage.mean,
            avg_power: self.avg_power.mean,
            throughput: self.throughput.mean,
            expected_rounds: self.expected_rounds.mean,
            expected_energy: self.expected_energy.mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Bursting,
    Blocks,
    Stream,
}

fn mode(model: CommModel, fading: &FadingSpec<f64>) -> Mode {
    match (model, fading.temporal) {
        (CommModel::Bursting, _) => Mode::Bursting,
        (CommModel::Continuous, Temporal::Block) => Mode::Blocks,
        (CommModel::Continuous, _) => Mode::Stream,
    }
}

/// Running sums for one batch. Packet sums count every packet; block sums
/// hold one entry per fading block.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    packets: u64,
    outages: u64,
    rounds: u64,
    energy: f64,
    uses: f64,
    info: f64,
    blocks: u64,
    block_outages: u64,
    block_rounds: u64,
    block_energy: f64,
    block_power: f64,
    block_rate: f64,
}

impl Tally {
    fn packet(&mut self, o: &PacketOutcome, copies: u64) {
        let c = copies as f64;
        self.packets += copies;
        self.outages += copies * u64::from(!o.decoded);
        self.rounds += copies * o.rounds_used as u64;
        self.energy += c * o.energy_spent;
        self.uses += c * o.channel_uses;
        self.info += c * o.info_delivered;
    }

    fn block(&mut self, o: &PacketOutcome) {
        self.blocks += 1;
        self.block_outages += u64::from(!o.decoded);
        self.block_rounds += o.rounds_used as u64;
        self.block_energy += o.energy_spent;
        self.block_power += o.energy_spent / o.channel_uses;
        self.block_rate += o.info_delivered / o.channel_uses;
    }

    fn merge(&mut self, o: &Tally) {
        self.packets += o.packets;
        self.outages += o.outages;
        self.rounds += o.rounds;
        self.energy += o.energy;
        self.uses += o.uses;
        self.info += o.info;
        self.blocks += o.blocks;
        self.block_outages += o.block_outages;
        self.block_rounds += o.block_rounds;
        self.block_energy += o.block_energy;
        self.block_power += o.block_power;
        self.block_rate += o.block_rate;
    }

    /// outage, power, throughput, rounds, energy.
    fn estimates(&self, mode: Mode) -> [f64; 5] {
        if mode == Mode::Blocks {
            let b = self.blocks as f64;
            [
                self.block_outages as f64 / b,
                self.block_power / b,
                self.block_rate / b,
                self.block_rounds as f64 / b,
                self.block_energy / b,
            ]
        } else {
            let n = self.packets as f64;
            [
                self.outages as f64 / n,
                self.energy / self.uses,
                self.info / self.uses,
                self.rounds as f64 / n,
                self.energy / n,
            ]
        }
    }
}

#[allow(clippy::too_many_arguments)]
/// Runs one independent replication with `quota` packets.
fn run_batch<C: PowerControl>(
    engine: &Engine,
    fading: &FadingSpec<f64>,
    mode: Mode,
    slots_per_block: usize,
    quota: u64,
    seed: u64,
    control: &mut C,
    observe: &mut dyn FnMut(&PacketOutcome),
) -> Tally {
    let mut rng = stream_rng(seed, &[0x5eed]);
    let mut tally = Tally::default();
    let rounds = engine.rounds();
    match mode {
        Mode::Bursting => {
            let mut gains = vec![0.0; rounds];
            while tally.packets < quota {
                let mut process = GainProcess::start(fading, &mut rng);
                for (n, g) in gains.iter_mut().enumerate() {
                    if n > 0 {
                        process.advance(&mut rng);
                    }
                    *g = process.gain();
                }
                let o = engine.run(|n| gains[n], &mut *control);
                observe(&o);
                tally.packet(&o, 1);
            }
        }
        Mode::Blocks => {
            let slots = slots_per_block as f64;
            while tally.packets < quota {
                let g = GainProcess::start(fading, &mut rng).gain();
                let o = engine.run(|_| g, &mut *control);
                let copies = ((slots / o.channel_uses + 1e-9).floor() as u64).max(1);
                observe(&o);
                tally.packet(&o, copies);
                tally.block(&o);
            }
        }
        Mode::Stream => {
            let mut process = GainProcess::start(fading, &mut rng);
            while tally.packets < quota {
                let o = engine.run(
                    |_| {
                        let g = process.gain();
                        process.advance(&mut rng);
                        g
                    },
                    &mut *control,
                );
                observe(&o);
                tally.packet(&o, 1);
            }
        }
    }
    tally
}

fn batch_quotas(n_packets: usize, batches: usize) -> Vec<u64> {
    let b = batches.min(n_packets).max(1);
    let base = n_packets / b;
    let extra = n_packets % b;
    (0..b).map(|i| (base + usize::from(i < extra)) as u64).collect()
}

#[allow(clippy::too_many_arguments)]
/// Shared driver: runs all batches (in parallel) and forms batch-mean
/// estimates. `make_control` builds the per-batch power controller.
pub(crate) fn run<C, M>(
    engine: &Engine,
    fading: &FadingSpec<f64>,
    model: CommModel,
    n_packets: usize,
    slots_per_block: usize,
    batches: usize,
    seed: u64,
    make_control: M,
) -> (SimResult, Vec<C>)
where
    C: PowerControl + Send,
    M: Fn() -> C + Sync,
{
    let fading = fading.canonical();
    let mode = mode(model, &fading);
    let quotas = batch_quotas(n_packets, batches);
    let runs: Vec<(Tally, C)> = quotas
        .par_iter()
        .enumerate()
        .map(|(i, &quota)| {
            let mut control = make_control();
            let seed = crate::rng::derive_seed(seed, &[i as u64]);
            let tally = run_batch(engine, &fading, mode, slots_per_block, quota, seed, &mut control, &mut |_| {});
            (tally, control)
        })
        .collect();

    let mut pooled = Tally::default();
    for (t, _) in &runs {
        pooled.merge(t);
    }
    let point = pooled.estimates(mode);
    let per_batch: Vec<[f64; 5]> = runs.iter().map(|(t, _)| t.estimates(mode)).collect();
    let k = per_batch.len() as f64;
    let est = |i: usize| {
        let mean = per_batch.iter().map(|e| e[i]).sum::<f64>() / k;
        let var = if k > 1.0 {
            per_batch.iter().map(|e| (e[i] - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            f64::INFINITY
        };
        Estimate {
            mean: point[i],
            std_error: (var / k).sqrt(),
        }
    };
    let result = SimResult {
        outage: est(0),
        avg_power: est(1),
        throughput: est(2),
        expected_rounds: est(3),
        expected_energy: est(4),
        packets: pooled.packets,
    };
    (result, runs.into_iter().map(|(_, c)| c).collect())
}

pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let engine = Engine::new(&config.scheme);
    check_policy(&engine, &config.policy)?;
    let powers = config.policy.powers();
    let (result, _) = run(
        &engine,
        &config.fading,
        config.model,
        config.n_packets,
        config.slots_per_block,
        config.batches,
        config.seed,
        || Static(powers),
    );
    Ok(result)
}

/// Outcomes of the first batch, in transmission order (one entry per fading
/// block in the continuous block-fading mode).
pub fn simulate_outcomes(config: &SimConfig, count: usize) -> Result<Vec<PacketOutcome>> {
    config.validate()?;
    let engine = Engine::new(&config.scheme);
    check_policy(&engine, &config.policy)?;
    let fading = config.fading.canonical();
    let mode = mode(config.model, &fading);
    let seed = crate::rng::derive_seed(config.seed, &[0]);
    let mut out = Vec::with_capacity(count);
    let mut control = Static(config.policy.powers());
    if mode == Mode::Blocks {
        let mut rng = stream_rng(seed, &[0x5eed]);
        for _ in 0..count {
            let g = GainProcess::start(&fading, &mut rng).gain();
            out.push(engine.run(|_| g, &mut control));
        }
        return Ok(out);
    }
    run_batch(&engine, &fading, mode, config.slots_per_block, count as u64, seed, &mut control, &mut |o| out.push(*o));
    Ok(out)
}
