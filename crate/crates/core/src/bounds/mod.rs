//! Union-bound BER for the MRC-JML receiver.
//!
//! Each error event `k` pairs a U1 symbol difference `a` with a U2 symbol
//! difference `b`. Over i.i.d. Rayleigh branches the normalized squared distance
//! `|h1·a + h2·b|²/2N0` is Erlang with shape `L` and scale
//! `Γ = (σ1²|a|² + σ2²|b|²)/2`, and the Rayleigh-averaged pairwise error
//! probability has a closed form in `Γ` and `L`. The bound for a user with
//! order `M` is
//!
//! ```text
//! (1/log2 M) · Σ_m Σ_k 2·averaged_pep(Γ_mk, L)
//! ```
//!
//! with the outer sum over the `M/4` first-quadrant symbols (full variant) or
//! only the first of them (dominant variant).

pub mod quadrature;

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::constellation::{chord, Constellation};
use crate::error::{invalid, Error, Result};
use crate::User;

pub use quadrature::Tolerance;

/// Largest diversity order whose binomial weights fit exactly in `u128`.
pub const MAX_ANTENNAS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVariant {
    Full,
    Dominant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    m1: usize,
    m2: usize,
    antennas: usize,
    sigma1_sq: f64,
    sigma2_sq: f64,
    variant: BoundVariant,
}

impl BoundConfig {
    /// `sigma_i_sq` are the per-branch variances already scaled by `P/N0`.
    pub fn new(
        m1: usize,
        m2: usize,
        antennas: usize,
        sigma1_sq: f64,
        sigma2_sq: f64,
        variant: BoundVariant,
    ) -> Result<Self> {
        Constellation::new(m1)?;
        Constellation::new(m2)?;
        if m1 < m2 {
            return Err(invalid("m2", format!("M2 = {m2} exceeds M1 = {m1}")));
        }
        if antennas == 0 || antennas > MAX_ANTENNAS {
            return Err(invalid(
                "antennas",
                format!("must be in 1..={MAX_ANTENNAS}, got {antennas}"),
            ));
        }
        for (name, v) in [("sigma1_sq", sigma1_sq), ("sigma2_sq", sigma2_sq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(Self {
            m1,
            m2,
            antennas,
            sigma1_sq,
            sigma2_sq,
            variant,
        })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }

    pub fn sigma2_sq(&self) -> f64 {
        self.sigma2_sq
    }

    pub fn variant(&self) -> BoundVariant {
        self.variant
    }

    pub fn with_variant(mut self, variant: BoundVariant) -> Self {
        self.variant = variant;
        self
    }
}

/// One error event: `a = s1[u1_pair.0] − s1[u1_pair.1]`, `b = s2[u2_pair.0] − s2[u2_pair.1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRow {
    /// Outer (first-quadrant) symbol index, 1-based.
    pub m: usize,
    /// Event index within the outer symbol, `1..=M1·M2/2`.
    pub k: usize,
    pub u1_pair: (usize, usize),
    pub u2_pair: (usize, usize),
    pub a_mag: f64,
    pub b_mag: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    pub user: User,
    pub rows: Vec<PairRow>,
}

impl PairTable {
    /// Rows belonging to outer index `m`.
    pub fn outer(&self, m: usize) -> impl Iterator<Item = &PairRow> {
        self.rows.iter().filter(move |r| r.m == m)
    }
}

/// Lists every error event of the union bound for `user`.
///
/// Near user: for `k` in sub-interval `n = ⌈k/M2⌉` the U1 pair is
/// `(m1, M1/2 + n)` and the U2 pair `(1, m2)` with `m2 = (k−1) mod M2 + 1`.
/// Far user: sub-intervals have size `M2/2`; the U1 pair is `(1, n)` and the U2
/// pair `(m2, M2/2 + μ)` with `μ = (k−1) mod (M2/2) + 1`.
pub fn enumerate_pairs(cfg: &BoundConfig, user: User) -> PairTable {
    let (m1, m2) = (cfg.m1, cfg.m2);
    let events = m1 * m2 / 2;
    let outer = match user {
        User::Near => m1 / 4,
        User::Far => m2 / 4,
    };
    let mut rows = Vec::with_capacity(outer * events);
    for m in 1..=outer {
        for k in 1..=events {
            let (u1_pair, u2_pair) = match user {
                User::Near => {
                    let n = (k - 1) / m2 + 1;
                    let mu2 = (k - 1) % m2 + 1;
                    ((m, m1 / 2 + n), (1, mu2))
                }
                User::Far => {
                    let half = m2 / 2;
                    let n = (k - 1) / half + 1;
                    let mu = (k - 1) % half + 1;
                    ((1, n), (m, half + mu))
                }
            };
            let a_mag = chord(u1_pair.0 as f64 - u1_pair.1 as f64, m1);
            let b_mag = chord(u2_pair.0 as f64 - u2_pair.1 as f64, m2);
            let gamma = (cfg.sigma1_sq * a_mag * a_mag + cfg.sigma2_sq * b_mag * b_mag) / 2.0;
            rows.push(PairRow {
                m,
                k,
                u1_pair,
                u2_pair,
                a_mag,
                b_mag,
                gamma,
            });
        }
    }
    PairTable { user, rows }
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Erlang density with shape `L` and scale `gamma`.
pub fn erlang_pdf(z: f64, antennas: usize, gamma: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(invalid("z", format!("must be >= 0, got {z}")));
    }
    check_kernel_args(gamma, antennas)?;
    if z == 0.0 {
        return Ok(if antennas == 1 { 1.0 / gamma } else { 0.0 });
    }
    let l = antennas as f64;
    let log_pdf = (l - 1.0) * z.ln() - z / gamma - ln_gamma(l) - l * gamma.ln();
    Ok(log_pdf.exp())
}

fn check_kernel_args(gamma: f64, antennas: usize) -> Result<()> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(invalid("gamma", format!("must be > 0, got {gamma}")));
    }
    if antennas == 0 || antennas > MAX_ANTENNAS {
        return Err(invalid(
            "antennas",
            format!("must be in 1..={MAX_ANTENNAS}, got {antennas}"),
        ));
    }
    Ok(())
}

/// Exact `C(n, k)`, failing if it does not fit in `u128`.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        // c·(n−k+i)/i is integral; divide out the common factor first
        let num = n as u128 - k as u128 + i;
        let g = num_integer::gcd(c, i);
        let (c_red, i_red) = (c / g, i / g);
        let num_red = num / i_red;
        debug_assert_eq!(num % i_red, 0);
        c = c_red
            .checked_mul(num_red)
            .ok_or(Error::BinomialOverflow(n))?;
    }
    Ok(c)
}

/// `∫₀^∞ Q(√z)·erlang_pdf(z, L, γ) dz` in closed form.
///
/// Evaluated as `((1−μ)/2)^L · Σ_{l<L} C(L−1+l, l)·((1+μ)/2)^l` with
/// `μ = √(γ/(γ+2))`, which equals
/// `½[1 − Σ_{l<L} C(2l, l)·√(1/(1+2/γ))·(2γ+4)^(−l)]` but keeps full relative
/// precision when the result is tiny.
pub fn averaged_pep(gamma: f64, antennas: usize) -> Result<f64> {
    check_kernel_args(gamma, antennas)?;
    if gamma.is_infinite() {
        return Ok(0.0);
    }
    let mu = (gamma / (gamma + 2.0)).sqrt();
    // 1 − μ = (1 − μ²)/(1 + μ) without cancellation
    let lower = (2.0 / (gamma + 2.0)) / (1.0 + mu) / 2.0;
    let upper = (1.0 + mu) / 2.0;
    let l_minus_1 = antennas as u64 - 1;
    let mut sum = 0.0;
    let mut power = 1.0;
    for l in 0..antennas as u64 {
        sum += binomial(l_minus_1 + l, l)? as f64 * power;
        power *= upper;
    }
    Ok(lower.powi(antennas as i32) * sum)
}

/// The bracketed expression `½[1 − Σ C(2l,l)·√(1/(1+2/γ))·(2γ+4)^(−l)]` as written.
///
/// Mathematically equal to [`averaged_pep`]; loses relative precision as the
/// result approaches zero.
pub fn averaged_pep_bracketed(gamma: f64, antennas: usize) -> Result<f64> {
    check_kernel_args(gamma, antennas)?;
    let root = (1.0 / (1.0 + 2.0 / gamma)).sqrt();
    let mut sum = 0.0;
    for l in 0..antennas as u64 {
        sum += binomial(2 * l, l)? as f64 * root / (2.0 * gamma + 4.0).powi(l as i32);
    }
    Ok(0.5 * (1.0 - sum))
}

/// Reference value of [`averaged_pep`] by adaptive quadrature of the Erlang average.
///
/// Uses `z = s·v²` with `s = 1/(1/2 + 1/γ)`, which removes the `√z` behaviour of
/// `Q(√z)` at the origin and puts the integrand's bulk at `v = O(√L)`.
pub fn averaged_pep_oracle(gamma: f64, antennas: usize) -> Result<f64> {
    averaged_pep_oracle_with(gamma, antennas, Tolerance::default())
}

pub fn averaged_pep_oracle_with(gamma: f64, antennas: usize, tol: Tolerance) -> Result<f64> {
    check_kernel_args(gamma, antennas)?;
    let scale = 1.0 / (0.5 + 1.0 / gamma);
    let integrand = |v: f64| {
        let z = scale * v * v;
        let pdf = erlang_pdf(z, antennas, gamma).unwrap_or(0.0);
        q_function(z.sqrt()) * pdf * 2.0 * scale * v
    };
    let split = (antennas as f64).sqrt() + 10.0;
    let mut total = 0.0;
    let mut error = 0.0;
    // unit pieces keep the global error estimate honest over the bulk
    let pieces = split.ceil() as usize;
    for i in 0..pieces {
        let a = i as f64 * split / pieces as f64;
        let b = (i + 1) as f64 * split / pieces as f64;
        let (v, e) = quadrature::integrate(integrand, a, b, tol)?;
        total += v;
        error += e;
    }
    let (v, e) = quadrature::integrate_to_infinity(integrand, split, tol)?;
    total += v;
    error += e;
    if error > tol.abs.max(tol.rel * total.abs()) * (pieces + 1) as f64 {
        return Err(Error::QuadratureNonConvergence {
            estimate: total,
            error,
        });
    }
    Ok(total)
}

/// Union bound on the BER of `user`, using `cfg.variant()`. Not clamped.
pub fn ber_upper_bound(cfg: &BoundConfig, user: User) -> Result<f64> {
    let table = enumerate_pairs(cfg, user);
    let order = match user {
        User::Near => cfg.m1,
        User::Far => cfg.m2,
    };
    let mut sum = 0.0;
    for row in &table.rows {
        if cfg.variant == BoundVariant::Dominant && row.m != 1 {
            continue;
        }
        sum += 2.0 * averaged_pep(row.gamma, cfg.antennas)?;
    }
    Ok(sum / order.trailing_zeros() as f64)
}

/// All four bound values at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub u1_full: f64,
    pub u1_dom: f64,
    pub u2_full: f64,
    pub u2_dom: f64,
}

impl BoundSet {
    pub fn evaluate(
        m1: usize,
        m2: usize,
        antennas: usize,
        sigma1_sq: f64,
        sigma2_sq: f64,
    ) -> Result<Self> {
        let full = BoundConfig::new(m1, m2, antennas, sigma1_sq, sigma2_sq, BoundVariant::Full)?;
        let dom = full.with_variant(BoundVariant::Dominant);
        Ok(Self {
            u1_full: ber_upper_bound(&full, User::Near)?,
            u1_dom: ber_upper_bound(&dom, User::Near)?,
            u2_full: ber_upper_bound(&full, User::Far)?,
            u2_dom: ber_upper_bound(&dom, User::Far)?,
        })
    }

    pub fn get(&self, user: User, variant: BoundVariant) -> f64 {
        match (user, variant) {
            (User::Near, BoundVariant::Full) => self.u1_full,
            (User::Near, BoundVariant::Dominant) => self.u1_dom,
            (User::Far, BoundVariant::Full) => self.u2_full,
            (User::Far, BoundVariant::Dominant) => self.u2_dom,
        }
    }
}
