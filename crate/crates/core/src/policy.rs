//! Power policies and the quantities every protocol model reports.

use crate::error::{domain, HarqError, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Repetition time diversity: the same codeword is repeated and combined.
    Rtd,
    /// Incremental redundancy: new parity in every round.
    Inr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommModel {
    /// Many packets per fading block; the transmitter is always busy.
    Continuous,
    /// One packet per fading block followed by a long idle period.
    Bursting,
}

/// Per-round transmit powers `P_1 .. P_{M+1}` (linear, noise normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPolicy<T> {
    powers: Vec<T>,
}

impl<T: Real> PowerPolicy<T> {
    pub fn new(powers: Vec<T>) -> Result<Self> {
        if powers.is_empty() {
            return Err(HarqError::Config("power policy needs at least one round".into()));
        }
        if let Some(&p) = powers.iter().find(|p| !(**p >= T::zero()) || !p.is_finite()) {
            return Err(domain("transmit power", p));
        }
        Ok(Self { powers })
    }

    pub fn uniform(power: T, rounds: usize) -> Result<Self> {
        Self::new(vec![power; rounds])
    }

    pub fn powers(&self) -> &[T] {
        &self.powers
    }

    pub fn into_powers(self) -> Vec<T> {
        self.powers
    }

    pub fn rounds(&self) -> usize {
        self.powers.len()
    }

    /// Running sums `sum_{n<=m} P_n` for `m = 1 .. M+1`.
    pub fn cumulative(&self) -> Vec<T> {
        self.powers
            .iter()
            .scan(T::zero(), |acc, &p| {
                *acc = *acc + p;
                Some(*acc)
            })
            .collect()
    }

    pub fn total(&self) -> T {
        self.powers.iter().fold(T::zero(), |s, &p| s + p)
    }

    pub fn is_all_zero(&self) -> bool {
        self.powers.iter().all(|&p| p == T::zero())
    }

    /// Policy with rounds `k` and `k + 1` exchanged.
    pub fn swapped(&self, k: usize) -> Self {
        let mut powers = self.powers.clone();
        powers.swap(k, k + 1);
        Self { powers }
    }

    pub(crate) fn expect_rounds(&self, expected: usize) -> Result<()> {
        if self.rounds() != expected {
            return Err(HarqError::RoundCount {
                expected,
                got: self.rounds(),
            });
        }
        Ok(())
    }
}

/// Probabilities of decoding in each round and of ending in outage.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeProfile<T> {
    /// `Pr{S_m}`: decoded at the end of round `m` and not before.
    pub p_success: Vec<T>,
    /// `Pr{not S_{M+1}}`: not decodable after all rounds.
    pub p_outage: T,
}

impl<T: Real> DecodeProfile<T> {
    /// Builds the profile from the probabilities of *not* having decoded by
    /// the end of each round (`undecoded[m-1]` for round `m`).
    pub(crate) fn from_undecoded(undecoded: &[T]) -> Self {
        let mut prev = T::one();
        let p_success = undecoded
            .iter()
            .map(|&u| {
                let p = (prev - u).max(T::zero());
                prev = u;
                p
            })
            .collect();
        Self {
            p_success,
            p_outage: prev,
        }
    }

    pub fn total(&self) -> T {
        self.p_success.iter().fold(self.p_outage, |s, &p| s + p)
    }

    /// Expected number of rounds used per packet.
    pub fn expected_rounds(&self) -> T {
        let used = self
            .p_success
            .iter()
            .enumerate()
            .fold(T::zero(), |s, (i, &p)| s + T::from_usize_lossy(i + 1) * p);
        used + T::from_usize_lossy(self.p_success.len()) * self.p_outage
    }
}

/// Long-term performance of a protocol under a fixed power policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics<T> {
    pub outage: T,
    /// Long-term average transmit power (`P-bar` continuous, `phi` bursting).
    pub avg_power: T,
    /// Long-term throughput in nats per channel use.
    pub throughput: T,
    pub expected_rounds: T,
    /// Expected energy per packet, in units of the first-round codeword length.
    pub expected_energy: T,
}
