//! Sample-average optimization for one retransmission under time-varying
//! fading.
//!
//! The per-packet average power keeps its block-fading form with the decode
//! probabilities taken over the joint law of the two round gains:
//!
//! ```text
//! P-bar = P_1 Pr{S_1} + (E_2 / 2) (1 - Pr{S_1}),   E_2 = P_1 + P_2 (RTD) or l-weighted (INR)
//! ```
//!
//! `Pr{S_1}` depends only on the stationary first gain and is exact. The
//! outage is the fraction of sampled gain pairs `(g1, g2)` that fail, so for
//! a fixed `P_1` the smallest feasible `P_2` is an order statistic of the
//! per-sample power the second round would need.

use crate::error::{HarqError, Result};
use crate::fading::{FadingSpec, GainProcess};
use crate::optimizer::HarqScheme;
use crate::policy::PowerPolicy;
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SaaSolution {
    pub policy: PowerPolicy<f64>,
    pub avg_power: f64,
    /// Sample outage of `policy`.
    pub outage: f64,
}

/// Sampled gain pairs for one `(scheme, fading)` setting.
#[derive(Debug, Clone)]
pub struct CorrelatedSaa {
    scheme: HarqScheme<f64>,
    fading: FadingSpec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

const GRID_POINTS: usize = 240;
const REFINE_STEPS: usize = 60;

impl CorrelatedSaa {
    pub fn new(scheme: HarqScheme<f64>, fading: FadingSpec<f64>, n_samples: usize, seed: u64) -> Result<Self> {
        if scheme.max_retransmissions() != 1 {
            return Err(HarqError::Unsupported("sample-average optimizer handles M = 1".into()));
        }
        if let HarqScheme::Inr(s) = &scheme {
            if !s.is_fixed_length() {
                return Err(HarqError::Unsupported(
                    "INR under time-varying fading is defined for fixed-length coding only".into(),
                ));
            }
        }
        if n_samples == 0 {
            return Err(HarqError::Config("sample count must be positive".into()));
        }
        let fading = fading.canonical();
        let mut rng = stream_rng(seed, &[0x5aa]);
        let mut g1 = Vec::with_capacity(n_samples);
        let mut g2 = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let mut p = GainProcess::start(&fading, &mut rng);
            g1.push(p.gain());
            p.advance(&mut rng);
            g2.push(p.gain());
        }
        Ok(Self { scheme, fading, g1, g2 })
    }

    fn rate(&self) -> f64 {
        self.scheme.initial_rate()
    }

    /// `Pr{S_1}` from the marginal gain law.
    fn p_first(&self, p1: f64) -> f64 {
        if p1 <= 0.0 {
            return 0.0;
        }
        self.fading.ccdf_unchecked(self.rate().exp_m1() / p1)
    }

    fn avg_power(&self, p1: f64, p2: f64) -> f64 {
        let s1 = self.p_first(p1);
        p1 * s1 + 0.5 * (p1 + p2) * (1.0 - s1)
    }

    /// Second-round power needed by sample `i` (`<= 0` if round one decodes).
    fn need(&self, i: usize, p1: f64) -> f64 {
        let (g1, g2) = (self.g1[i], self.g2[i]);
        match self.scheme {
            HarqScheme::Rtd(_) => (self.rate().exp_m1() - g1 * p1) / g2,
            HarqScheme::Inr(_) => ((self.rate()).exp() / (1.0 + g1 * p1) - 1.0) / g2,
        }
    }

    fn fails(&self, i: usize, p1: f64, p2: f64) -> bool {
        let (g1, g2) = (self.g1[i], self.g2[i]);
        let r = self.rate();
        match self.scheme {
            HarqScheme::Rtd(_) => g1 * p1 + g2 * p2 < r.exp_m1(),
            HarqScheme::Inr(_) => (g1 * p1).ln_1p() + (g2 * p2).ln_1p() < r,
        }
    }

    pub fn outage(&self, policy: &PowerPolicy<f64>) -> Result<f64> {
        if policy.rounds() != 2 {
            return Err(HarqError::RoundCount {
                expected: 2,
                got: policy.rounds(),
            });
        }
        let (p1, p2) = (policy.powers()[0], policy.powers()[1]);
        let fails = (0..self.g1.len()).filter(|&i| self.fails(i, p1, p2)).count();
        Ok(fails as f64 / self.g1.len() as f64)
    }

    /// Smallest `P_2` keeping the sample outage at or below `epsilon`.
    fn second_power(&self, p1: f64, epsilon: f64, scratch: &mut Vec<f64>) -> f64 {
        let allowed = (epsilon * self.g1.len() as f64).floor() as usize;
        scratch.clear();
        scratch.extend((0..self.g1.len()).map(|i| self.need(i, p1)).filter(|&n| n > 0.0));
        if scratch.len() <= allowed {
            return 0.0;
        }
        // The `allowed` largest needs may fail; the next one must not.
        let k = scratch.len() - allowed - 1;
        let (_, nth, _) = scratch.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
        // Exactly meeting a need decodes, so the order statistic is feasible.
        *nth
    }

    fn search<F: FnMut(f64) -> f64>(mut cost: F, lo: f64, hi: f64) -> (f64, f64) {
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (GRID_POINTS - 1) as f64;
        let mut best = (f64::INFINITY, lo);
        let mut best_k = 0;
        for k in 0..GRID_POINTS {
            let p = (a + step * k as f64).exp();
            let c = cost(p);
            if c < best.0 {
                best = (c, p);
                best_k = k;
            }
        }
        // Golden-section refinement on the bracketing grid cells.
        let mut l = a + step * best_k.saturating_sub(1) as f64;
        let mut r = a + step * (best_k + 1).min(GRID_POINTS - 1) as f64;
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..REFINE_STEPS {
            let x1 = r - phi * (r - l);
            let x2 = l + phi * (r - l);
            let (c1, c2) = (cost(x1.exp()), cost(x2.exp()));
            if c1 < best.0 {
                best = (c1, x1.exp());
            }
            if c2 < best.0 {
                best = (c2, x2.exp());
            }
            if c1 <= c2 {
                r = x2;
            } else {
                l = x1;
            }
        }
        best
    }

    /// Minimum average power meeting sample outage `epsilon`.
    pub fn min_power(&self, epsilon: f64) -> Result<SaaSolution> {
        crate::rtd::check_epsilon(epsilon)?;
        let total = self.scheme.short_term_power(epsilon, &self.fading.with_temporal(crate::Temporal::Block)?)?;
        let mut scratch = Vec::with_capacity(self.g1.len());
        let (_, p1) = Self::search(
            |p1| {
                let p2 = self.second_power(p1, epsilon, &mut scratch);
                self.avg_power(p1, p2)
            },
            total * 1e-4,
            total * 1e2,
        );
        let p2 = self.second_power(p1, epsilon, &mut scratch);
        self.solution(p1, p2)
    }

    /// Uniform power meeting sample outage `epsilon`.
    pub fn uniform_min_power(&self, epsilon: f64) -> Result<SaaSolution> {
        crate::rtd::check_epsilon(epsilon)?;
        let r = self.rate();
        let mut needs: Vec<f64> = (0..self.g1.len())
            .map(|i| {
                let (g1, g2) = (self.g1[i], self.g2[i]);
                match self.scheme {
                    HarqScheme::Rtd(_) => r.exp_m1() / (g1 + g2),
                    // (1 + g1 P)(1 + g2 P) = e^R
                    HarqScheme::Inr(_) => {
                        let (s, q) = (g1 + g2, g1 * g2);
                        2.0 * r.exp_m1() / (s + (s * s + 4.0 * q * r.exp_m1()).sqrt())
                    }
                }
            })
            .collect();
        let allowed = (epsilon * needs.len() as f64).floor() as usize;
        let k = needs.len() - allowed - 1;
        let (_, p, _) = needs.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
        let p = *p;
        self.solution(p, p)
    }

    /// Minimum sample outage at average power `budget`.
    pub fn min_outage(&self, budget: f64) -> Result<SaaSolution> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(HarqError::Config("average power budget must be positive".into()));
        }
        // P-bar is linear in P_2 for fixed P_1.
        let second = |p1: f64| {
            let s1 = self.p_first(p1);
            if s1 >= 1.0 {
                return f64::NAN;
            }
            2.0 * (budget - p1 * s1) / (1.0 - s1) - p1
        };
        let cost = |p1: f64| {
            let p2 = second(p1);
            if !(p2 >= 0.0) {
                return f64::INFINITY;
            }
            let fails = (0..self.g1.len()).filter(|&i| self.fails(i, p1, p2)).count();
            fails as f64
        };
        let (c, p1) = Self::search(cost, budget * 1e-3, budget * 2.0);
        if !c.is_finite() {
            return Err(HarqError::Infeasible("no policy spends exactly the budget".into()));
        }
        self.solution(p1, second(p1))
    }

    /// Uniform policy at average power `budget`.
    pub fn uniform_outage(&self, budget: f64) -> Result<SaaSolution> {
        self.solution(budget, budget)
    }

    fn solution(&self, p1: f64, p2: f64) -> Result<SaaSolution> {
        let policy = PowerPolicy::new(vec![p1, p2.max(0.0)])?;
        let outage = self.outage(&policy)?;
        Ok(SaaSolution {
            avg_power: self.avg_power(p1, p2.max(0.0)),
            outage,
            policy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtd::{rtd_avg_power_continuous, RtdSpec};

    #[test]
    fn block_limit_matches_closed_form_optimum() {
        let f = FadingSpec::rayleigh(1.0).unwrap();
        let saa = CorrelatedSaa::new(HarqScheme::rtd(1.0, 1).unwrap(), f, 200_000, 3).unwrap();
        let sol = saa.min_power(1e-2).unwrap();
        assert!(sol.outage <= 1e-2);
        // Block fading: the optimum satisfies the closed-form constraint up to sampling error.
        let closed = rtd_avg_power_continuous(&RtdSpec::new(1.0, 1).unwrap(), &sol.policy, &f).unwrap();
        assert!((closed - sol.avg_power).abs() < 1e-9 * closed);
        let uni = saa.uniform_min_power(1e-2).unwrap();
        assert!(sol.avg_power < uni.avg_power);
        assert!((uni.avg_power / (1f64.exp_m1() / 2.0 / 0.01005) - 1.0).abs() < 0.05);
    }

    #[test]
    fn min_outage_beats_uniform() {
        let f = FadingSpec::rayleigh(1.0).unwrap().correlated(0.5).unwrap();
        let saa = CorrelatedSaa::new(HarqScheme::inr_fixed_length(1.0, 1).unwrap(), f, 100_000, 4).unwrap();
        let opt = saa.min_outage(10.0).unwrap();
        let uni = saa.uniform_outage(10.0).unwrap();
        assert!((opt.avg_power - 10.0).abs() < 1e-9);
        assert!(opt.outage <= uni.outage);
    }
}
