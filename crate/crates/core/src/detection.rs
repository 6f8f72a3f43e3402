//! MRC-SIC and MRC-JML detectors.
//!
//! Both detectors work from the matched-filter outputs `h_i^H y` and the
//! cross-correlation `h2^H h1`. Because PSK symbols have unit modulus,
//!
//! ```text
//! ‖y − a·h1·x1 − a·h2·x2‖² = ‖y‖² + a²‖h1‖² + a²‖h2‖²
//!     − 2a·Re(x1*·h1^H y) − 2a·Re(x2*·(h2^H y − a·x1·h2^H h1))
//! ```
//!
//! with `a = √P`, so every candidate pair is scored in constant time once the
//! per-realization statistics are known. For each `x1` the JML search scores
//! all `M2` partners, keeps the best, and only a strictly smaller metric
//! replaces the incumbent; with the first-index choice among equal partners
//! this gives the lexicographic lowest-index tie-break.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ChannelRealization, ReceivedVector};
use crate::constellation::{BitWord, Constellation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Sic,
    Jml,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 2] = [DetectorKind::Sic, DetectorKind::Jml];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Sic => "sic",
            DetectorKind::Jml => "jml",
        }
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sic" => Ok(DetectorKind::Sic),
            "jml" => Ok(DetectorKind::Jml),
            other => Err(crate::error::invalid(
                "detector",
                format!("unknown detector {other:?}"),
            )),
        }
    }
}

/// Detected symbols (1-based indices) and the bit-words they carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionResult {
    pub x1_index: usize,
    pub x2_index: usize,
    pub bits1: BitWord,
    pub bits2: BitWord,
}

impl DetectionResult {
    fn from_zero_based(i: usize, j: usize, c1: &Constellation, c2: &Constellation) -> Self {
        Self {
            x1_index: i + 1,
            x2_index: j + 1,
            bits1: BitWord::new(c1.word_at(i), c1.bits_per_symbol()),
            bits2: BitWord::new(c2.word_at(j), c2.bits_per_symbol()),
        }
    }
}

/// Per-realization sufficient statistics.
#[derive(Debug, Clone, Copy)]
struct MatchedFilter {
    amp: f64,
    /// h1^H y
    r1: Complex64,
    /// h2^H y
    r2: Complex64,
    /// h2^H h1
    cross: Complex64,
}

impl MatchedFilter {
    fn new(y: &ReceivedVector, ch: &ChannelRealization, params: &ChannelParams) -> Self {
        debug_assert_eq!(y.y.len(), ch.h1.len());
        debug_assert_eq!(y.y.len(), ch.h2.len());
        let zero = Complex64::new(0.0, 0.0);
        let (mut r1, mut r2, mut cross) = (zero, zero, zero);
        for ((y, h1), h2) in y.y.iter().zip(&ch.h1).zip(&ch.h2) {
            r1 += h1.conj() * y;
            r2 += h2.conj() * y;
            cross += h2.conj() * h1;
        }
        Self {
            amp: params.power().sqrt(),
            r1,
            r2,
            cross,
        }
    }
}

/// `Re(s*·z)`
#[inline(always)]
fn re_conj_mul(s: Complex64, z: Complex64) -> f64 {
    s.re * z.re + s.im * z.im
}

/// `max_j Re(s_j*·z)` over an alphabet split into real and imaginary parts.
///
/// Four independent lanes keep the comparisons off one dependency chain; every
/// order here is a multiple of four.
#[inline(always)]
fn max_score(re: &[f64], im: &[f64], z: Complex64) -> f64 {
    let mut lanes = [f64::NEG_INFINITY; 4];
    for (r, i) in re.chunks_exact(4).zip(im.chunks_exact(4)) {
        for k in 0..4 {
            let score = r[k] * z.re + i[k] * z.im;
            lanes[k] = if score > lanes[k] { score } else { lanes[k] };
        }
    }
    let a = if lanes[1] > lanes[0] {
        lanes[1]
    } else {
        lanes[0]
    };
    let b = if lanes[3] > lanes[2] {
        lanes[3]
    } else {
        lanes[2]
    };
    if b > a {
        b
    } else {
        a
    }
}

/// First index attaining `top` (as computed by [`max_score`]).
#[inline(always)]
fn first_at(re: &[f64], im: &[f64], z: Complex64, top: f64) -> usize {
    re.iter()
        .zip(im)
        .position(|(&r, &i)| r * z.re + i * z.im == top)
        .unwrap_or(0)
}

/// Index of the symbol maximizing `Re(s*·z)`, lowest index on ties.
#[inline]
fn best_symbol(c: &Constellation, z: Complex64) -> usize {
    let (re, im) = (c.real_parts(), c.imag_parts());
    first_at(re, im, z, max_score(re, im, z))
}

/// Two-stage detector: U1 first treating U2 as noise, then U2 after cancelling `x̂1`.
pub fn detect_sic(
    y: &ReceivedVector,
    ch: &ChannelRealization,
    params: &ChannelParams,
    c1: &Constellation,
    c2: &Constellation,
) -> DetectionResult {
    let mf = MatchedFilter::new(y, ch, params);
    // argmin ‖y − a·h1·x1‖² = argmax Re(x1*·h1^H y)
    let i = best_symbol(c1, mf.r1);
    // argmin ‖(y − a·h1·x̂1) − a·h2·x2‖² = argmax Re(x2*·h2^H(y − a·h1·x̂1))
    let residual = mf.r2 - c1.symbols()[i] * mf.cross * mf.amp;
    let j = best_symbol(c2, residual);
    DetectionResult::from_zero_based(i, j, c1, c2)
}

/// Exhaustive joint ML search over all `M1·M2` candidate pairs.
pub fn detect_jml(
    y: &ReceivedVector,
    ch: &ChannelRealization,
    params: &ChannelParams,
    c1: &Constellation,
    c2: &Constellation,
) -> DetectionResult {
    detect_jml_instrumented(y, ch, params, c1, c2).0
}

/// As [`detect_jml`], also returning how many candidate pairs were scored.
pub fn detect_jml_instrumented(
    y: &ReceivedVector,
    ch: &ChannelRealization,
    params: &ChannelParams,
    c1: &Constellation,
    c2: &Constellation,
) -> (DetectionResult, u64) {
    let mf = MatchedFilter::new(y, ch, params);
    let a = mf.amp;
    let (re2, im2) = (c2.real_parts(), c2.imag_parts());
    let mut best = (0, 0);
    let mut best_metric = f64::INFINITY;
    let mut evaluated = 0u64;
    for (i, &s1) in c1.symbols().iter().enumerate() {
        // candidate-independent terms dropped; metric/2a relative to ‖y‖² + a²(‖h1‖² + ‖h2‖²)
        let base = -re_conj_mul(s1, mf.r1);
        let p = mf.r2 - s1 * mf.cross * a;
        // the smallest metric among pairs (x1, ·) is base − max_j Re(s2_j*·p)
        let top = max_score(re2, im2, p);
        evaluated += re2.len() as u64;
        let metric = base - top;
        if metric < best_metric {
            best_metric = metric;
            best = (i, first_at(re2, im2, p, top));
        }
    }
    (
        DetectionResult::from_zero_based(best.0, best.1, c1, c2),
        evaluated,
    )
}

/// `‖y − √P·h1·x1 − √P·h2·x2‖²` evaluated directly.
pub fn joint_metric(
    y: &ReceivedVector,
    ch: &ChannelRealization,
    params: &ChannelParams,
    x1: Complex64,
    x2: Complex64,
) -> f64 {
    let a = params.power().sqrt();
    y.y.iter()
        .zip(&ch.h1)
        .zip(&ch.h2)
        .map(|((y, h1), h2)| (y - h1 * x1 * a - h2 * x2 * a).norm_sqr())
        .sum()
}

pub fn count_bit_errors(truth: BitWord, detected: BitWord) -> Result<u32> {
    if truth.len() != detected.len() {
        return Err(Error::BitLength {
            expected: truth.len(),
            got: detected.len(),
        });
    }
    Ok(truth.hamming(detected))
}
