//! Rayleigh fading, AWGN and the superposed two-user received vector.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Link parameters shared by every trial at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    antennas: usize,
    sigma1_sq: f64,
    sigma2_sq: f64,
    noise_density: f64,
    power: f64,
}

impl ChannelParams {
    /// `noise_density` may be zero, which disables the noise; everything else must be
    /// strictly positive and the near user must have the larger channel variance.
    pub fn new(
        antennas: usize,
        sigma1_sq: f64,
        sigma2_sq: f64,
        noise_density: f64,
        power: f64,
    ) -> Result<Self> {
        if antennas == 0 {
            return Err(invalid("antennas", "must be at least 1"));
        }
        positive("sigma1_sq", sigma1_sq)?;
        positive("sigma2_sq", sigma2_sq)?;
        positive("power", power)?;
        if !(noise_density >= 0.0 && noise_density.is_finite()) {
            return Err(invalid("noise_density", "must be finite and >= 0"));
        }
        if sigma1_sq <= sigma2_sq {
            return Err(invalid(
                "sigma2_sq",
                format!("near-user variance {sigma1_sq} must exceed far-user variance {sigma2_sq}"),
            ));
        }
        Ok(Self {
            antennas,
            sigma1_sq,
            sigma2_sq,
            noise_density,
            power,
        })
    }

    /// Normalized operating point: `P = N0 = 1`, `σ1² = 10^(dB/10)`, `σ2² = ratio·σ1²`.
    pub fn normalized(antennas: usize, sigma1_db: f64, sigma_ratio: f64) -> Result<Self> {
        let sigma1_sq = db_to_linear(sigma1_db);
        Self::new(antennas, sigma1_sq, sigma1_sq * sigma_ratio, 1.0, 1.0)
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

    pub fn noise_density(&self) -> f64 {
        self.noise_density
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Copy with the noise switched off.
    pub fn noiseless(mut self) -> Self {
        self.noise_density = 0.0;
        self
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Large-scale channel variance `μ·d^(-λ)`.
pub fn pathloss_variance(mu: f64, distance: f64, exponent: f64) -> Result<f64> {
    positive("mu", mu)?;
    positive("distance", distance)?;
    positive("exponent", exponent)?;
    Ok(mu * distance.powf(-exponent))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h1: Vec<Complex64>,
    pub h2: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn zeros(antennas: usize) -> Self {
        Self {
            h1: vec![Complex64::new(0.0, 0.0); antennas],
            h2: vec![Complex64::new(0.0, 0.0); antennas],
        }
    }

    pub fn antennas(&self) -> usize {
        self.h1.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedVector {
    pub y: Vec<Complex64>,
}

impl ReceivedVector {
    pub fn zeros(antennas: usize) -> Self {
        Self {
            y: vec![Complex64::new(0.0, 0.0); antennas],
        }
    }
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Draws `h1` then `h2`, antenna by antenna, real part before imaginary part.
pub fn draw_channels<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> ChannelRealization {
    let mut ch = ChannelRealization::zeros(params.antennas);
    draw_channels_into(params, rng, &mut ch);
    ch
}

pub fn draw_channels_into<R: Rng + ?Sized>(
    params: &ChannelParams,
    rng: &mut R,
    ch: &mut ChannelRealization,
) {
    ch.h1.resize(params.antennas, Complex64::new(0.0, 0.0));
    ch.h2.resize(params.antennas, Complex64::new(0.0, 0.0));
    for h in ch.h1.iter_mut() {
        *h = complex_gaussian(rng, params.sigma1_sq);
    }
    for h in ch.h2.iter_mut() {
        *h = complex_gaussian(rng, params.sigma2_sq);
    }
}

/// `y = √P·h1·x1 + √P·h2·x2 + w`, with `w` of total variance `N0` per antenna.
///
/// The noise samples are always drawn, even when `N0 = 0`, so toggling noise
/// does not shift the random stream.
pub fn synthesize_rx<R: Rng + ?Sized>(
    params: &ChannelParams,
    ch: &ChannelRealization,
    x1: Complex64,
    x2: Complex64,
    rng: &mut R,
) -> ReceivedVector {
    let mut rx = ReceivedVector::zeros(ch.antennas());
    synthesize_rx_into(params, ch, x1, x2, rng, &mut rx);
    rx
}

pub fn synthesize_rx_into<R: Rng + ?Sized>(
    params: &ChannelParams,
    ch: &ChannelRealization,
    x1: Complex64,
    x2: Complex64,
    rng: &mut R,
    rx: &mut ReceivedVector,
) {
    let amp = params.power.sqrt();
    let a1 = x1 * amp;
    let a2 = x2 * amp;
    rx.y.resize(ch.antennas(), Complex64::new(0.0, 0.0));
    for ((y, h1), h2) in rx.y.iter_mut().zip(&ch.h1).zip(&ch.h2) {
        let w = complex_gaussian(rng, params.noise_density);
        *y = h1 * a1 + h2 * a2 + w;
    }
}
