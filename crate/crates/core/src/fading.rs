//! Channel gain distributions and temporal fading processes.
//!
//! The channel gain is `g = |h|^2`. For Rayleigh fading `h ~ CN(0, 1/lambda)`
//! so `g` is exponential with rate `lambda`. Temporal evolution follows a
//! first-order Gauss-Markov recursion on `h`,
//!
//! ```text
//! h[k+1] = beta * h[k] + sqrt(1 - beta^2) * w[k],   w[k] ~ CN(0, 1/lambda)
//! ```
//!
//! started from the stationary law, so the marginal gain distribution is the
//! same at every step. `beta = 1` is block fading and `beta = 0` is fast
//! (independent per round) fading.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::rng::stream_rng;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainFamily {
    Rayleigh,
}

/// How the gain evolves between consecutive codeword transmissions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temporal<T> {
    /// Constant over a packet (or a fading block), independent across blocks.
    Block,
    /// Independent gain in every (re)transmission round.
    Fast,
    /// Gauss-Markov correlated with factor `beta` per codeword transmission.
    Correlated { beta: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSpec<T> {
    pub family: GainFamily,
    pub lambda: T,
    pub temporal: Temporal<T>,
}

impl<T: Real> FadingSpec<T> {
    /// Block Rayleigh fading with gain pdf `lambda * exp(-lambda g)`.
    pub fn rayleigh(lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(domain("lambda", lambda));
        }
        Ok(Self {
            family: GainFamily::Rayleigh,
            lambda,
            temporal: Temporal::Block,
        })
    }

    pub fn with_temporal(mut self, temporal: Temporal<T>) -> Result<Self> {
        if let Temporal::Correlated { beta } = temporal {
            if !(beta >= T::zero() && beta <= T::one()) {
                return Err(domain("beta", beta));
            }
        }
        self.temporal = temporal;
        Ok(self)
    }

    pub fn fast(self) -> Self {
        Self {
            temporal: Temporal::Fast,
            ..self
        }
    }

    pub fn correlated(self, beta: T) -> Result<Self> {
        self.with_temporal(Temporal::Correlated { beta })
    }

    /// Correlation factor between consecutive codeword transmissions.
    pub fn beta(&self) -> T {
        match self.temporal {
            Temporal::Block => T::one(),
            Temporal::Fast => T::zero(),
            Temporal::Correlated { beta } => beta,
        }
    }

    /// Maps `Correlated` with `beta` 1 or 0 onto `Block` / `Fast`.
    pub fn canonical(&self) -> Self {
        let temporal = match self.temporal {
            Temporal::Correlated { beta } if beta == T::one() => Temporal::Block,
            Temporal::Correlated { beta } if beta == T::zero() => Temporal::Fast,
            t => t,
        };
        Self { temporal, ..*self }
    }

    pub fn is_block(&self) -> bool {
        matches!(self.canonical().temporal, Temporal::Block)
    }

    /// Expected gain `E{G}`.
    pub fn mean_gain(&self) -> T {
        match self.family {
            GainFamily::Rayleigh => self.lambda.recip(),
        }
    }

    pub fn cdf(&self, g: T) -> Result<T> {
        if !(g >= T::zero()) {
            return Err(domain("channel gain", g));
        }
        Ok(self.cdf_unchecked(g))
    }

    /// `F_G(g)` for `g >= 0`, including `g = +inf` (empty power sums).
    #[inline]
    pub(crate) fn cdf_unchecked(&self, g: T) -> T {
        if g.is_infinite() {
            return T::one();
        }
        match self.family {
            GainFamily::Rayleigh => -(-self.lambda * g).exp_m1(),
        }
    }

    /// `1 - F_G(g)` without cancellation.
    #[inline]
    pub(crate) fn ccdf_unchecked(&self, g: T) -> T {
        if g.is_infinite() {
            return T::zero();
        }
        match self.family {
            GainFamily::Rayleigh => (-self.lambda * g).exp(),
        }
    }

    pub fn inv_cdf(&self, p: T) -> Result<T> {
        if !(p >= T::zero() && p < T::one()) {
            return Err(domain("probability", p));
        }
        Ok(match self.family {
            GainFamily::Rayleigh => -(-p).ln_1p() / self.lambda,
        })
    }

    pub fn pdf(&self, g: T) -> Result<T> {
        if !(g >= T::zero()) {
            return Err(domain("channel gain", g));
        }
        Ok(match self.family {
            GainFamily::Rayleigh => self.lambda * (-self.lambda * g).exp(),
        })
    }

    /// Hazard rate `f_G(g) / (1 - F_G(g))`, finite even where both underflow.
    pub fn hazard(&self, g: T) -> Result<T> {
        if !(g >= T::zero()) {
            return Err(domain("channel gain", g));
        }
        Ok(match self.family {
            GainFamily::Rayleigh => self.lambda,
        })
    }
}

pub fn gain_cdf<T: Real>(spec: &FadingSpec<T>, g: T) -> Result<T> {
    spec.cdf(g)
}

pub fn gain_inv_cdf<T: Real>(spec: &FadingSpec<T>, p: T) -> Result<T> {
    spec.inv_cdf(p)
}

pub fn gain_pdf<T: Real>(spec: &FadingSpec<T>, g: T) -> Result<T> {
    spec.pdf(g)
}

/// Complex channel coefficient evolving under the Gauss-Markov recursion.
///
/// Two standard normals are consumed per step for every `beta`, so the random
/// stream stays aligned between temporal models.
#[derive(Debug, Clone)]
pub struct GainProcess<T> {
    re: T,
    im: T,
    beta: T,
    innovation: T,
    component_std: T,
}

impl<T: Real> GainProcess<T>
where
    StandardNormal: Distribution<T>,
{
    /// Draws the initial coefficient from the stationary law.
    pub fn start<R: Rng + ?Sized>(spec: &FadingSpec<T>, rng: &mut R) -> Self {
        let GainFamily::Rayleigh = spec.family;
        let component_std = (T::lit(0.5) / spec.lambda).sqrt();
        let beta = spec.beta();
        let innovation = (T::one() - beta * beta).max(T::zero()).sqrt();
        let re = component_std * StandardNormal.sample(rng);
        let im = component_std * StandardNormal.sample(rng);
        Self {
            re,
            im,
            beta,
            innovation,
            component_std,
        }
    }

    #[inline]
    pub fn gain(&self) -> T {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn coefficient(&self) -> (T, T) {
        (self.re, self.im)
    }

    #[inline]
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let wr: T = StandardNormal.sample(rng);
        let wi: T = StandardNormal.sample(rng);
        let s = self.innovation * self.component_std;
        self.re = self.beta * self.re + s * wr;
        self.im = self.beta * self.im + s * wi;
    }
}

/// Gains `g_0 .. g_{n-1}` of one realization of the fading process.
pub fn sample_gain_path<T: Real>(spec: &FadingSpec<T>, n_steps: usize, seed: u64) -> Vec<T>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = stream_rng(seed, &[0x9a17]);
    let mut process = GainProcess::start(spec, &mut rng);
    let mut path = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        if k > 0 {
            process.advance(&mut rng);
        }
        path.push(process.gain());
    }
    path
}

/// Same as [`sample_gain_path`] but returns the complex coefficients.
pub fn sample_coefficient_path<T: Real>(
    spec: &FadingSpec<T>,
    n_steps: usize,
    seed: u64,
) -> Vec<(T, T)>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = stream_rng(seed, &[0x9a17]);
    let mut process = GainProcess::start(spec, &mut rng);
    let mut path = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        if k > 0 {
            process.advance(&mut rng);
        }
        path.push(process.coefficient());
    }
    path
}
