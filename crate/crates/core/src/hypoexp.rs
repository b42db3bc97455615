//! Distribution of a sum of independent exponential random variables.
//!
//! With `g_n ~ Exp(lambda)` and powers `P_n`, the received SNR of repetition
//! combining under fast fading is `sum g_n P_n`, a sum of exponentials with
//! rates `lambda / P_n`.

use crate::Real;

/// Smallest pairwise relative rate gap for which the partial-fraction form
/// is well conditioned.
pub const PARTIAL_FRACTION_MIN_GAP: f64 = 1e-3;

/// CDF at `x` of a sum of independent exponentials with the given rates.
///
/// Uses the partial-fraction (hypoexponential) form when all rates are well
/// separated and the phase-type matrix exponential otherwise, which stays
/// exact for repeated rates.
pub fn sum_of_exponentials_cdf<T: Real>(rates: &[T], x: T) -> T {
    if rates.is_empty() {
        return if x > T::zero() { T::one() } else { T::zero() };
    }
    if x <= T::zero() {
        return T::zero();
    }
    if min_relative_gap(rates) > T::lit(PARTIAL_FRACTION_MIN_GAP) {
        hypoexponential_cdf(rates, x)
    } else {
        phase_type_cdf(rates, x)
    }
}

/// Smallest `|mu_i - mu_j| / max(mu_i, mu_j)` over all pairs (infinite for one rate).
pub fn min_relative_gap<T: Real>(rates: &[T]) -> T {
    let mut gap = T::infinity();
    for (i, &a) in rates.iter().enumerate() {
        for &b in &rates[i + 1..] {
            gap = gap.min((a - b).abs() / a.max(b));
        }
    }
    gap
}

/// Partial-fraction form `sum_i w_i (1 - exp(-mu_i x))` with
/// `w_i = prod_{j != i} mu_j / (mu_j - mu_i)`. Requires distinct rates.
pub fn hypoexponential_cdf<T: Real>(rates: &[T], x: T) -> T {
    let mut cdf = T::zero();
    for (i, &mi) in rates.iter().enumerate() {
        let mut w = T::one();
        for (j, &mj) in rates.iter().enumerate() {
            if i != j {
                w = w * mj / (mj - mi);
            }
        }
        cdf = cdf + w * -(-mi * x).exp_m1();
    }
    cdf.max(T::zero()).min(T::one())
}

/// `1 - e_1' exp(S x) 1` for the bidiagonal sub-generator `S` with
/// `S_ii = -mu_i`, `S_i,i+1 = mu_i`.
pub fn phase_type_cdf<T: Real>(rates: &[T], x: T) -> T {
    let n = rates.len();
    let mut a = vec![T::zero(); n * n];
    for (i, &mu) in rates.iter().enumerate() {
        a[i * n + i] = -mu * x;
        if i + 1 < n {
            a[i * n + i + 1] = mu * x;
        }
    }
    let e = expm(&a, n);
    let survival: T = e[..n].iter().fold(T::zero(), |s, &v| s + v);
    (T::one() - survival).max(T::zero()).min(T::one())
}

/// Dense matrix exponential by scaling and squaring with a Taylor core.
fn expm<T: Real>(a: &[T], n: usize) -> Vec<T> {
    let norm = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().fold(T::zero(), |s, v| s + v.abs()))
        .fold(T::zero(), T::max);
    let mut squarings = 0usize;
    let mut scale = T::one();
    while norm * scale > T::lit(0.25) {
        scale = scale * T::lit(0.5);
        squarings += 1;
    }
    let scaled: Vec<T> = a.iter().map(|&v| v * scale).collect();

    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=24 {
        term = matmul(&term, &scaled, n);
        let inv_k = T::from_usize_lossy(k).recip();
        term.iter_mut().for_each(|v| *v = *v * inv_k);
        result.iter_mut().zip(&term).for_each(|(r, t)| *r = *r + *t);
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, n);
    }
    result
}

fn identity<T: Real>(n: usize) -> Vec<T> {
    let mut m = vec![T::zero(); n * n];
    (0..n).for_each(|i| m[i * n + i] = T::one());
    m
}

fn matmul<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == T::zero() {
                continue;
            }
            for j in 0..n {
                c[i * n + j] = c[i * n + j] + aik * b[k * n + j];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rate_is_exponential() {
        let x = 0.7;
        let want = 1.0 - (-2.0f64 * x).exp();
        assert!((sum_of_exponentials_cdf(&[2.0], x) - want).abs() < 1e-15);
        assert!((phase_type_cdf(&[2.0], x) - want).abs() < 1e-14);
    }

    #[test]
    fn erlang_two() {
        // Erlang(2, mu): 1 - e^{-mu x}(1 + mu x)
        let (mu, x) = (1.5f64, 0.9);
        let want = 1.0 - (-mu * x).exp() * (1.0 + mu * x);
        assert!((phase_type_cdf(&[mu, mu], x) - want).abs() < 1e-13);
        assert!((sum_of_exponentials_cdf(&[mu, mu * (1.0 + 1e-12)], x) - want).abs() < 1e-11);
    }

    #[test]
    fn routes_agree_for_separated_rates() {
        let rates = [0.1f64, 0.05, 0.37, 2.0];
        for &x in &[0.01, 0.5, 3.0, 40.0] {
            let a = hypoexponential_cdf(&rates, x);
            let b = phase_type_cdf(&rates, x);
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }
}
