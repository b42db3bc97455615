//! Outage-limited power allocation for RTD and INR hybrid ARQ over fading
//! channels.
//!
//! The analytic layer ([`fading`], [`rtd`], [`inr`], [`optimizer`]) is generic
//! over the floating point type through [`Real`]; the Monte Carlo engine in
//! [`simulator`] works in `f64`. Powers are linear and noise-normalized.

// Negated comparisons are how inputs reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fading;
pub mod hypoexp;
pub mod inr;
pub mod optimizer;
pub mod policy;
pub mod rng;
pub mod roots;
pub mod rtd;
mod scalar;
pub mod simulator;

pub use error::{HarqError, Result};
pub use fading::{gain_cdf, gain_inv_cdf, gain_pdf, sample_gain_path, FadingSpec, GainFamily, Temporal};
pub use inr::{
    inr_avg_power_continuous, inr_bursting_metrics, inr_continuous_metrics, inr_decode_profile,
    inr_fast_fading_outage, inr_metrics, inr_outage_threshold, inr_short_term_power, inr_thresholds,
    inr_throughput_continuous, EnergySchedule, InrRateSchedule,
};
pub use policy::{CommModel, DecodeProfile, Metrics, PowerPolicy, Protocol};
pub use rtd::{
    rtd_avg_power_continuous, rtd_avg_power_lower_bound, rtd_bursting_metrics, rtd_continuous_metrics,
    rtd_decode_profile, rtd_fast_fading_outage, rtd_metrics, rtd_outage, rtd_short_term_power,
    rtd_throughput_continuous, RtdSpec,
};
pub use scalar::{from_db, to_db, Real};

pub type FadingSpec64 = FadingSpec<f64>;
pub type PowerPolicy64 = PowerPolicy<f64>;
pub type RtdSpec64 = RtdSpec<f64>;
pub type InrRateSchedule64 = InrRateSchedule<f64>;
pub type Metrics64 = Metrics<f64>;
pub type DecodeProfile64 = DecodeProfile<f64>;
