//! Restarted elite random search.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::objective::{solve_last_round_power, Objective};
use crate::error::{HarqError, Result};
use crate::policy::{Metrics, PowerPolicy};
use crate::rng::stream_rng;
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    /// Population size `J`.
    pub population: usize,
    /// Number of perturbed copies of the elite per iteration, `b`.
    pub elite: usize,
    pub max_iters: usize,
    /// Relative improvement below which an iteration counts as stalled.
    pub convergence_tol: T,
    /// Stalled iterations tolerated before a restart stops.
    pub patience: usize,
    pub restarts: usize,
    /// Initial standard deviation of the log-normal elite perturbation.
    pub perturbation_scale: T,
    /// Per-iteration factor applied to the perturbation scale.
    pub anneal: T,
    pub min_perturbation: T,
    pub seed: u64,
    /// Range for fresh random powers; defaults to `[1e-2, 10 * baseline]`.
    pub init_power_range: Option<(T, T)>,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            population: 20,
            elite: 5,
            max_iters: 5000,
            convergence_tol: T::lit(1e-6),
            patience: 50,
            restarts: 10,
            perturbation_scale: T::lit(0.25),
            anneal: T::lit(0.95),
            min_perturbation: T::lit(1e-3),
            seed: 0,
            init_power_range: None,
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.elite >= self.population {
            return Err(HarqError::Config(format!(
                "elite count b = {} must be smaller than the population J = {}",
                self.elite, self.population
            )));
        }
        if self.population == 0 || self.max_iters == 0 || self.restarts == 0 || self.patience == 0 {
            return Err(HarqError::Config("optimizer counts must be at least one".into()));
        }
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(self.convergence_tol) || !positive(self.perturbation_scale) || !positive(self.min_perturbation) {
            return Err(HarqError::Config("optimizer tolerances must be positive".into()));
        }
        if !(self.anneal > T::zero() && self.anneal <= T::one()) {
            return Err(HarqError::Config("anneal factor must lie in (0, 1]".into()));
        }
        if let Some((lo, hi)) = self.init_power_range {
            if !(positive(lo) && positive(hi) && lo < hi) {
                return Err(HarqError::Config("init_power_range must satisfy 0 < low < high".into()));
            }
        }
        Ok(())
    }
}

/// Ordering check of the returned policy and the adjacent-swap test.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport<T> {
    /// `P_m <= P_{m+1}(1 + tol)` for all `m`.
    pub powers_nondecreasing: bool,
    /// Same for the per-round energies `l_m P_m`.
    pub energies_nondecreasing: bool,
    /// Objective after swapping rounds `k` and `k+1`, for each `k`.
    pub swapped_objectives: Vec<T>,
    /// No adjacent swap lowers the objective.
    pub swaps_never_improve: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult<T> {
    pub best_policy: PowerPolicy<T>,
    pub achieved: Metrics<T>,
    /// Best objective so far after each iteration, all restarts in order.
    pub trace: Vec<T>,
    pub iterations: usize,
    /// Whether the winning restart stopped on the stall criterion.
    pub converged: bool,
    pub monotonicity: MonotonicityReport<T>,
}

impl<T: Real> OptimizationResult<T> {
    pub fn objective(&self) -> T {
        self.achieved.avg_power
    }
}

/// Relative tolerance of the ordering checks in [`MonotonicityReport`].
pub const ORDER_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Candidate<T> {
    partial: Vec<T>,
    value: Option<(T, PowerPolicy<T>)>,
}

fn better<T: Real>(a: &(T, PowerPolicy<T>), b: &(T, PowerPolicy<T>)) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Less) => true,
        Some(Ordering::Equal) => lexicographic(a.1.powers(), b.1.powers()) == Ordering::Less,
        _ => false,
    }
}

fn lexicographic<T: Real>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Completes `partial` with the constraint-solved last round and scores it.
/// Candidates whose earlier rounds already overshoot the constraint are
/// eliminated.
fn score<T: Real>(objective: &Objective<T>, partial: &[T]) -> Option<(T, PowerPolicy<T>)> {
    let last = solve_last_round_power(objective, partial).ok()?;
    if last.overshoots() {
        return None;
    }
    let mut powers = partial.to_vec();
    powers.push(last.power);
    let policy = PowerPolicy::new(powers).ok()?;
    let value = objective.evaluate(&policy).ok()?.avg_power;
    value.is_finite().then_some((value, policy))
}

fn log_uniform<T: Real, R: Rng>(rng: &mut R, lo: f64, hi: f64, dims: usize) -> Vec<T> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..dims)
        .map(|_| T::lit((a + rng.random::<f64>() * (b - a)).exp()))
        .collect()
}

fn perturb<T: Real, R: Rng>(rng: &mut R, base: &[T], sigma: f64) -> Vec<T> {
    base.iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(rng);
            p * T::lit((sigma * z).exp())
        })
        .collect()
}

struct RestartOutcome<T> {
    best: Option<(T, PowerPolicy<T>)>,
    trace: Vec<T>,
    iterations: usize,
    converged: bool,
}

fn run_restart<T: Real>(
    objective: &Objective<T>,
    config: &OptimizerConfig<T>,
    restart: usize,
    range: (f64, f64),
    seed_policy: Option<Vec<T>>,
) -> RestartOutcome<T> {
    let dims = objective.rounds() - 1;
    let j = config.population;
    let b = config.elite;
    let stream = |iter: usize, idx: usize| stream_rng(config.seed, &[restart as u64, iter as u64, idx as u64]);

    let mut population: Vec<Candidate<T>> = (0..j)
        .into_par_iter()
        .map(|idx| {
            let partial = match (&seed_policy, idx) {
                (Some(p), 0) => p.clone(),
                _ => log_uniform(&mut stream(0, idx), range.0, range.1, dims),
            };
            Candidate { partial, value: None }
        })
        .collect();

    let mut best: Option<(T, PowerPolicy<T>)> = None;
    let mut best_partial: Option<Vec<T>> = None;
    let mut trace = Vec::new();
    let mut stalled = 0usize;
    let mut converged = false;
    let mut sigma = config.perturbation_scale.to_f64_lossy();
    let anneal = config.anneal.to_f64_lossy();
    let min_sigma = config.min_perturbation.to_f64_lossy();
    let tol = config.convergence_tol;
    let mut iterations = 0;

    for iter in 0..config.max_iters {
        iterations = iter + 1;
        population.par_iter_mut().for_each(|c| {
            if c.value.is_none() {
                c.value = score(objective, &c.partial);
            }
        });

        let mut iter_best: Option<usize> = None;
        for (i, c) in population.iter().enumerate() {
            if let Some(v) = &c.value {
                let wins = match iter_best {
                    None => true,
                    Some(k) => better(v, population[k].value.as_ref().expect("scored")),
                };
                if wins {
                    iter_best = Some(i);
                }
            }
        }

        if let Some(i) = iter_best {
            let cand = population[i].value.clone().expect("scored");
            let improved = match &best {
                None => true,
                Some(cur) => better(&cand, cur),
            };
            if improved {
                let gain = match &best {
                    None => T::infinity(),
                    Some(cur) => (cur.0 - cand.0) / cur.0.abs(),
                };
                if gain < tol {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                best = Some(cand);
                best_partial = Some(population[i].partial.clone());
            } else {
                stalled += 1;
            }
        } else {
            stalled += 1;
        }
        trace.push(best.as_ref().map_or(T::infinity(), |b| b.0));

        if best.is_some() && stalled >= config.patience {
            converged = true;
            break;
        }
        if iter + 1 == config.max_iters {
            break;
        }

        // Slot 1 keeps the elite, slots 2..=b+1 perturb it, the rest are fresh.
        let elite = best_partial.clone();
        let elite_value = best.clone();
        let next = iter + 1;
        population = (0..j)
            .into_par_iter()
            .map(|idx| {
                let mut rng = stream(next, idx);
                match (&elite, idx) {
                    (Some(e), 0) => Candidate {
                        partial: e.clone(),
                        value: elite_value.clone(),
                    },
                    (Some(e), k) if k <= b => Candidate {
                        partial: perturb(&mut rng, e, sigma),
                        value: None,
                    },
                    _ => Candidate {
                        partial: log_uniform(&mut rng, range.0, range.1, dims),
                        value: None,
                    },
                }
            })
            .collect();
        sigma = (sigma * anneal).max(min_sigma);
    }

    RestartOutcome {
        best,
        trace,
        iterations,
        converged,
    }
}

pub fn monotonicity_report<T: Real>(objective: &Objective<T>, policy: &PowerPolicy<T>) -> Result<MonotonicityReport<T>> {
    let tol = T::lit(ORDER_TOL);
    let ordered = |v: &[T]| v.windows(2).all(|w| w[0] <= w[1] * (T::one() + tol));
    let base = objective.evaluate(policy)?.avg_power;
    let mut swapped_objectives = Vec::new();
    for k in 0..policy.rounds().saturating_sub(1) {
        swapped_objectives.push(objective.evaluate(&policy.swapped(k))?.avg_power);
    }
    let swaps_never_improve = swapped_objectives.iter().all(|&s| s >= base * (T::one() - tol));
    Ok(MonotonicityReport {
        powers_nondecreasing: ordered(policy.powers()),
        energies_nondecreasing: ordered(&objective.scheme.energies(policy)),
        swapped_objectives,
        swaps_never_improve,
    })
}

/// Restarted random search over `P_1..P_M`; `P_{M+1}` always makes the
/// outage constraint bind. The first restart is seeded with the uniform
/// short-term policy, so the result is never worse than the baseline.
pub fn optimize<T: Real>(objective: &Objective<T>, config: &OptimizerConfig<T>) -> Result<OptimizationResult<T>> {
    config.validate()?;
    let baseline = objective.baseline_power()?;
    let dims = objective.rounds() - 1;

    if dims == 0 {
        let last = solve_last_round_power(objective, &[])?;
        let policy = PowerPolicy::new(vec![last.power])?;
        let achieved = objective.evaluate(&policy)?;
        return Ok(OptimizationResult {
            monotonicity: monotonicity_report(objective, &policy)?,
            best_policy: policy,
            trace: vec![achieved.avg_power],
            achieved,
            iterations: 0,
            converged: true,
        });
    }

    let range = match config.init_power_range {
        Some((lo, hi)) => (lo.to_f64_lossy(), hi.to_f64_lossy()),
        None => (1e-2, (baseline * T::lit(10.0)).to_f64_lossy().max(1e-1)),
    };

    let mut best: Option<(T, PowerPolicy<T>)> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for restart in 0..config.restarts {
        let seed_policy = (restart == 0).then(|| vec![baseline; dims]);
        let out = run_restart(objective, config, restart, range, seed_policy);
        iterations += out.iterations;
        if let Some(cand) = out.best {
            let wins = match &best {
                None => true,
                Some(cur) => better(&cand, cur),
            };
            if wins {
                best = Some(cand);
                converged = out.converged;
            }
        }
        let offset = trace.len();
        trace.extend(out.trace);
        // Keep the trace as the running best across restarts.
        let mut running = if offset == 0 { T::infinity() } else { trace[offset - 1] };
        for t in &mut trace[offset..] {
            running = running.min(*t);
            *t = running;
        }
    }

    let (_, policy) = best.ok_or_else(|| HarqError::Infeasible("no candidate met the outage constraint".into()))?;
    let achieved = objective.evaluate(&policy)?;
    Ok(OptimizationResult {
        monotonicity: monotonicity_report(objective, &policy)?,
        best_policy: policy,
        achieved,
        trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::HarqScheme;
    use crate::policy::CommModel;
    use crate::FadingSpec;

    fn objective(model: CommModel, m: usize) -> Objective<f64> {
        Objective::new(HarqScheme::rtd(1.0, m).unwrap(), model, FadingSpec::rayleigh(1.0).unwrap(), 1e-3).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::<f64>::default().validate().is_ok());
        let bad = OptimizerConfig::<f64> {
            elite: 20,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(HarqError::Config(_))));
        let bad = OptimizerConfig::<f64> {
            anneal: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_round_is_the_baseline() {
        let obj = objective(CommModel::Continuous, 0);
        let r = optimize(&obj, &OptimizerConfig::default()).unwrap();
        assert!((r.objective() / obj.baseline_power().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let obj = objective(CommModel::Bursting, 2);
        let cfg = OptimizerConfig::default().with_seed(5);
        let a = optimize(&obj, &cfg).unwrap();
        let b = optimize(&obj, &cfg).unwrap();
        assert_eq!(a.best_policy, b.best_policy);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn optimum_is_ordered_and_binding() {
        let obj = objective(CommModel::Continuous, 2);
        let r = optimize(&obj, &OptimizerConfig::default()).unwrap();
        assert!(r.monotonicity.powers_nondecreasing);
        assert!(r.monotonicity.swaps_never_improve);
        assert!((r.achieved.outage - 1e-3).abs() < 1e-9);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn reversed_policy_reports_disorder() {
        let obj = objective(CommModel::Continuous, 1);
        let rep = monotonicity_report(&obj, &PowerPolicy::new(vec![1679.0, 38.4]).unwrap()).unwrap();
        assert!(!rep.powers_nondecreasing);
        assert!(!rep.swaps_never_improve);
    }

    #[test]
    fn runs_in_f32() {
        let obj = Objective::new(
            HarqScheme::rtd(1.0f32, 1).unwrap(),
            CommModel::Continuous,
            FadingSpec::rayleigh(1.0f32).unwrap(),
            1e-3,
        )
        .unwrap();
        let r = optimize(&obj, &OptimizerConfig::default()).unwrap();
        assert!((r.objective() - 74.28).abs() < 0.2, "{}", r.objective());
    }
}
