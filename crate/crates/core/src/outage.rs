//! Exact conditional outage probability under Nakagami fading.
//!
//! For an integer desired-link parameter `m0`, the ccdf of
//! `Z = g0 Ω0 / β - Σ I_i g_i Ω_i` is
//!
//! ```text
//! F̄(z) = e^{-β0 z} Σ_{s<m0} (β0 z)^s Σ_{t≤s} z^{-t} H_t / (s-t)!,   β0 = β m0 / Ω0
//! ```
//!
//! where `H_t` is the coefficient of `x^t` in `Π_i Σ_ℓ G_ℓ(Ψ_i) x^ℓ`. The
//! outage probability at unit-distance SNR `Γ` is `1 - F̄(1/Γ)`.
//!
//! Substituting `k = s - t` gives the equivalent form used for evaluation,
//!
//! ```text
//! F̄(z) = Σ_{t<m0} (β0^t H_t) · Q(m0 - t, β0 z),   Q(n, x) = e^{-x} Σ_{k<n} x^k / k!
//! ```
//!
//! Each `β0^t H_t` is itself a truncated product of the rescaled factors
//! `β0^ℓ G_ℓ = p c_ℓ (1-Ψ)^ℓ Ψ^m`, all of which lie in `[0, 1]`, and `Q` is
//! a Poisson cdf. No intermediate quantity can overflow, and `z = 0` needs no
//! special casing.

use crate::channel::NormalizedPowers;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// `Ψ_i = (β0 Ω_i / m_i + 1)^-1`.
#[inline]
pub fn psi<T: Scalar>(omega: T, m: T, beta0: T) -> T {
    T::one() / (beta0 * omega / m + T::one())
}

/// Coefficients `G_0..=G_{ell_max}` of one interferer.
///
/// `G_0 = 1 - p (1 - Ψ^m)` and, for `ℓ > 0`,
/// `G_ℓ = p Γ(ℓ+m)/(ℓ! Γ(m)) (Ω/m)^ℓ Ψ^{m+ℓ}`; the gamma ratio is built by the
/// recurrence `c_ℓ = c_{ℓ-1} (ℓ-1+m)/ℓ`, so `m` need not be an integer.
pub fn g_coefficients<T: Scalar>(omega: T, m: T, p: T, beta0: T, ell_max: usize) -> Vec<T> {
    let psi = psi(omega, m, beta0);
    let psi_m = psi.powf(m);
    let ratio = omega / m * psi;
    let mut out = Vec::with_capacity(ell_max + 1);
    out.push(T::one() - p * (T::one() - psi_m));
    let mut c = T::one();
    let mut ratio_pow = T::one();
    for ell in 1..=ell_max {
        let l = T::of_usize(ell);
        c = c * (l - T::one() + m) / l;
        ratio_pow = ratio_pow * ratio;
        out.push(p * c * ratio_pow * psi_m);
    }
    out
}

/// `β0^ℓ G_ℓ` for `ℓ = 0..=ell_max`.
fn scaled_g_coefficients<T: Scalar>(omega: T, m: T, p: T, beta0: T, ell_max: usize) -> Vec<T> {
    let a = beta0 * omega / m;
    let psi = T::one() / (a + T::one());
    let one_minus_psi = a / (a + T::one());
    let psi_m = psi.powf(m);
    let mut out = Vec::with_capacity(ell_max + 1);
    out.push(T::one() - p * (T::one() - psi_m));
    let mut c = T::one();
    let mut q = T::one();
    for ell in 1..=ell_max {
        let l = T::of_usize(ell);
        c = c * (l - T::one() + m) / l;
        q = q * one_minus_psi;
        out.push(p * c * q * psi_m);
    }
    out
}

/// Multiplies `acc` in place by the polynomial `factor`, keeping only the
/// coefficients of degree `< acc.len()`.
fn truncated_mul_assign<T: Scalar>(acc: &mut [T], factor: &[T]) {
    for t in (0..acc.len()).rev() {
        let top = t.min(factor.len().saturating_sub(1));
        acc[t] = (0..=top).fold(T::zero(), |s, l| s + acc[t - l] * factor[l]);
    }
}

/// `H_0..=H_{t_max}`: coefficients of the product of the per-interferer
/// generating polynomials, truncated at degree `t_max`.
pub fn h_coefficients<T: Scalar, G: AsRef<[T]>>(g_vectors: &[G], t_max: usize) -> Vec<T> {
    let mut h = vec![T::zero(); t_max + 1];
    h[0] = T::one();
    for g in g_vectors {
        let g = g.as_ref();
        debug_assert!(g.len() > t_max, "G vector shorter than t_max + 1");
        truncated_mul_assign(&mut h, g);
    }
    h
}

/// Regularized Poisson tail `e^{-x} Σ_{k<n} x^k / k!`.
fn poisson_cdf<T: Scalar>(n: usize, x: T) -> T {
    let mut term = (-x).exp();
    let mut sum = T::zero();
    for k in 0..n {
        if k > 0 {
            term = term * x / T::of_usize(k);
        }
        sum = sum + term;
    }
    sum
}

/// Complementary tail `P(N >= n)` for `N ~ Poisson(x)`, summed directly
/// when `x <= n` so small values keep their relative accuracy.
fn poisson_upper<T: Scalar>(n: usize, x: T) -> T {
    if n == 0 {
        return T::one();
    }
    if x > T::of_usize(n) {
        return T::one() - poisson_cdf(n, x);
    }
    let mut term = (-x).exp();
    for k in 1..=n {
        term = term * x / T::of_usize(k);
    }
    let mut sum = T::zero();
    let mut k = n;
    loop {
        sum = sum + term;
        k += 1;
        term = term * x / T::of_usize(k);
        if term <= sum * T::epsilon() {
            return sum;
        }
    }
}

fn check_probability<T: Scalar>(what: &'static str, v: T) -> Result<T> {
    let tol = T::of(1e-9).max(T::epsilon() * T::of(64.0));
    if !(v >= -tol && v <= T::one() + tol) {
        return Err(Error::NumericalFailure {
            what,
            value: v.to_f64_lossy(),
        });
    }
    Ok(v.max(T::zero()).min(T::one()))
}

/// Inputs to a single conditional-outage evaluation.
#[derive(Debug, Clone, Copy)]
pub struct OutageInputs<'a, T> {
    pub powers: &'a NormalizedPowers<T>,
    /// SINR threshold on the linear scale.
    pub beta: T,
    pub m0: u32,
    /// Evaluation point `z = 1/Γ`.
    pub gamma_inv: T,
}

/// Everything about the ccdf of `Z` that does not depend on `z`.
///
/// Build once per geometry, then evaluate at any number of SNR points.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageKernel<T> {
    beta0: T,
    /// `β0^t H_t` for `t = 0..m0`.
    h_scaled: Vec<T>,
}

impl<T: Scalar> OutageKernel<T> {
    pub fn new(powers: &NormalizedPowers<T>, beta: T, m0: u32) -> Result<Self> {
        powers.validate()?;
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(invalid("beta", "SINR threshold must be positive"));
        }
        if m0 == 0 {
            return Err(invalid("m0", "must be a positive integer"));
        }
        let t_max = m0 as usize - 1;
        let beta0 = beta * T::of(f64::from(m0)) / powers.omega0;
        let mut h_scaled = vec![T::zero(); t_max + 1];
        h_scaled[0] = T::one();
        for ip in &powers.interferers {
            if ip.p == T::zero() || ip.omega == T::zero() {
                continue;
            }
            let g = scaled_g_coefficients(ip.omega, ip.m, ip.p, beta0, t_max);
            truncated_mul_assign(&mut h_scaled, &g);
        }
        Ok(Self { beta0, h_scaled })
    }

    pub fn beta0(&self) -> T {
        self.beta0
    }

    /// `F̄_Z(z)`.
    pub fn ccdf(&self, z: T) -> Result<T> {
        if !(z >= T::zero()) {
            return Err(invalid("gamma_inv", "must be >= 0"));
        }
        let m0 = self.h_scaled.len();
        let x = self.beta0 * z;
        let v = self
            .h_scaled
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (t, &h)| acc + h * poisson_cdf(m0 - t, x));
        check_probability("ccdf of Z", v)
    }

    /// Conditional outage probability `F_Z(z)`, evaluated as the outage at
    /// `z = 0` plus upper Poisson tails rather than as `1 - F̄_Z(z)`.
    pub fn outage(&self, z: T) -> Result<T> {
        if !(z >= T::zero()) {
            return Err(invalid("gamma_inv", "must be >= 0"));
        }
        let m0 = self.h_scaled.len();
        let x = self.beta0 * z;
        let floor = T::one() - self.h_scaled.iter().copied().sum::<T>();
        let v = self
            .h_scaled
            .iter()
            .enumerate()
            .fold(floor, |acc, (t, &h)| acc + h * poisson_upper(m0 - t, x));
        check_probability("outage", v)
    }
}

/// `F̄_Z(z | Ω)`.
pub fn ccdf_z<T: Scalar>(inputs: &OutageInputs<'_, T>) -> Result<T> {
    OutageKernel::new(inputs.powers, inputs.beta, inputs.m0)?.ccdf(inputs.gamma_inv)
}

/// Conditional outage probability `ε = F_Z(1/Γ | Ω)`.
pub fn conditional_outage<T: Scalar>(inputs: &OutageInputs<'_, T>) -> Result<T> {
    OutageKernel::new(inputs.powers, inputs.beta, inputs.m0)?.outage(inputs.gamma_inv)
}
