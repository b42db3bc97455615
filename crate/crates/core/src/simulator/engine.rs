//! Packet-level decoding shared by every simulation mode.

use crate::error::{HarqError, Result};
use crate::optimizer::HarqScheme;
use crate::policy::PowerPolicy;

/// What happened to one packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketOutcome {
    /// Rounds transmitted, in `1 ..= M+1`.
    pub rounds_used: usize,
    pub decoded: bool,
    /// Energy spent, in units of (first-round length x power).
    pub energy_spent: f64,
    /// Channel uses, in units of the first-round length.
    pub channel_uses: f64,
    /// Information delivered, in nats per first-round length.
    pub info_delivered: f64,
}

#[derive(Debug, Clone)]
enum Rule {
    /// Decode iff `sum g_n P_n >= threshold`.
    Combining { threshold: f64 },
    /// Decode iff `sum c_n log(1 + g_n P_n) >= 1`.
    Accumulating { coeffs: Vec<f64> },
}

/// Decoder plus round lengths for one HARQ scheme.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    rule: Rule,
    lengths: Vec<f64>,
    payload: f64,
}

impl Engine {
    pub(crate) fn new(scheme: &HarqScheme<f64>) -> Self {
        match scheme {
            HarqScheme::Rtd(spec) => Self {
                rule: Rule::Combining {
                    threshold: spec.snr_threshold(),
                },
                lengths: vec![1.0; spec.rounds()],
                payload: spec.rate,
            },
            HarqScheme::Inr(sched) => Self {
                rule: Rule::Accumulating {
                    coeffs: sched.coefficients(),
                },
                lengths: sched.length_fractions(),
                payload: sched.initial_rate(),
            },
        }
    }

    pub(crate) fn rounds(&self) -> usize {
        self.lengths.len()
    }

    /// Runs one packet. `gain(n)` is called once per transmitted round, after
    /// the controller picks the power and before it receives the feedback.
    #[inline]
    pub(crate) fn run<G, C>(&self, mut gain: G, control: &mut C) -> PacketOutcome
    where
        G: FnMut(usize) -> f64,
        C: PowerControl + ?Sized,
    {
        let mut acc = 0.0;
        let mut energy = 0.0;
        let mut uses = 0.0;
        for n in 0..self.rounds() {
            let p = control.power(n);
            let g = gain(n);
            let l = self.lengths[n];
            energy += l * p;
            uses += l;
            let decoded = match &self.rule {
                Rule::Combining { threshold } => {
                    acc += g * p;
                    acc >= *threshold
                }
                Rule::Accumulating { coeffs } => {
                    acc += coeffs[n] * (g * p).ln_1p();
                    acc >= 1.0
                }
            };
            control.feedback(n, decoded);
            if decoded {
                return PacketOutcome {
                    rounds_used: n + 1,
                    decoded: true,
                    energy_spent: energy,
                    channel_uses: uses,
                    info_delivered: self.payload,
                };
            }
        }
        PacketOutcome {
            rounds_used: self.rounds(),
            decoded: false,
            energy_spent: energy,
            channel_uses: uses,
            info_delivered: 0.0,
        }
    }
}

/// Per-round powers for the next packet, updated from ACK/NACK feedback.
pub(crate) trait PowerControl {
    fn power(&mut self, round: usize) -> f64;
    fn feedback(&mut self, round: usize, decoded: bool);
}

/// Same policy for every packet.
#[derive(Debug, Clone)]
pub(crate) struct Static<'a>(pub &'a [f64]);

impl PowerControl for Static<'_> {
    #[inline]
    fn power(&mut self, round: usize) -> f64 {
        self.0[round]
    }

    #[inline]
    fn feedback(&mut self, _: usize, _: bool) {}
}

pub(crate) fn check_policy(engine: &Engine, policy: &PowerPolicy<f64>) -> Result<()> {
    if policy.rounds() != engine.rounds() {
        return Err(HarqError::RoundCount {
            expected: engine.rounds(),
            got: policy.rounds(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rtd_combines_snr() {
        let e = Engine::new(&HarqScheme::rtd(1.0, 2).unwrap());
        let mut c = Static(&[1.0, 1.0, 1.0]);
        // threshold e - 1 = 1.718: one round at gain 1 falls short, two pass
        let o = e.run(|_| 1.0, &mut c);
        assert_eq!(o.rounds_used, 2);
        assert!(o.decoded);
        let o = e.run(|_| 0.5, &mut c);
        assert!(!o.decoded && o.rounds_used == 3 && o.info_delivered == 0.0);
        assert_eq!(o.energy_spent, 3.0);
    }

    #[test]
    fn inr_accumulates_information() {
        let e = Engine::new(&HarqScheme::inr_fixed_length(1.0, 1).unwrap());
        let mut c = Static(&[1.0, 1.0]);
        // log(1 + g) twice must reach R = 1: g = e^0.5 - 1 is the edge
        let g = 0.5f64.exp() - 1.0;
        let o = e.run(|_| g * 1.000001, &mut c);
        assert!(o.decoded && o.rounds_used == 2);
        assert_eq!(o.channel_uses, 2.0);
        let o = e.run(|_| g * 0.999999, &mut c);
        assert!(!o.decoded);
    }
}
