//! Seeded, parallel Monte Carlo BER estimation over a σ1² sweep.
//!
//! Trials at one sweep point are grouped into chunks of [`CHUNK_TRIALS`]. Chunk
//! `c` of point `p` seeds its generator from a ChaCha8 stream keyed by the root
//! seed with stream id `(p << 40) | c`, so every chunk's randomness is fixed
//! before any scheduling happens. Chunks are evaluated in parallel waves and folded in
//! chunk order; the estimate stops at the first chunk boundary where the
//! stopping rule holds. Counts therefore depend only on the seed and the spec.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundSet;
use crate::channel::{
    draw_channels_into, synthesize_rx_into, ChannelParams, ChannelRealization, ReceivedVector,
};
use crate::constellation::Constellation;
use crate::detection::{detect_jml, detect_sic, DetectorKind};
use crate::error::{invalid, Error, Result};
use crate::User;

pub const CHUNK_TRIALS: u64 = 4096;
const MAX_WAVE_CHUNKS: u64 = 256;
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_bit_errors: u64,
    pub max_trials: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_bit_errors: 200,
            max_trials: 100_000_000,
        }
    }
}

/// A set of detectors, always iterated SIC before JML.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct DetectorSet {
    sic: bool,
    jml: bool,
}

impl DetectorSet {
    pub const NONE: DetectorSet = DetectorSet {
        sic: false,
        jml: false,
    };
    pub const BOTH: DetectorSet = DetectorSet {
        sic: true,
        jml: true,
    };

    pub fn only(d: DetectorKind) -> Self {
        Self::NONE.with(d)
    }

    pub fn with(mut self, d: DetectorKind) -> Self {
        match d {
            DetectorKind::Sic => self.sic = true,
            DetectorKind::Jml => self.jml = true,
        }
        self
    }

    pub fn contains(&self, d: DetectorKind) -> bool {
        match d {
            DetectorKind::Sic => self.sic,
            DetectorKind::Jml => self.jml,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.sic || self.jml)
    }

    pub fn iter(&self) -> impl Iterator<Item = DetectorKind> + '_ {
        DetectorKind::ALL.into_iter().filter(|d| self.contains(*d))
    }
}

impl FromIterator<DetectorKind> for DetectorSet {
    fn from_iter<I: IntoIterator<Item = DetectorKind>>(iter: I) -> Self {
        iter.into_iter().fold(Self::NONE, Self::with)
    }
}

/// Bit-error counts indexed by detector then user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCounts([[u64; 2]; 2]);

impl ErrorCounts {
    pub fn get(&self, d: DetectorKind, u: User) -> u64 {
        self.0[d as usize][u.slot()]
    }

    pub fn add(&mut self, d: DetectorKind, u: User, n: u64) {
        self.0[d as usize][u.slot()] += n;
    }

    fn accumulate(&mut self, other: &ErrorCounts) {
        for d in 0..2 {
            for u in 0..2 {
                self.0[d][u] += other.0[d][u];
            }
        }
    }
}

/// Reusable per-trial buffers; after a trial they hold what that trial saw.
#[derive(Debug, Clone)]
pub struct TrialScratch {
    pub channel: ChannelRealization,
    pub rx: ReceivedVector,
    pub sent: (usize, usize),
}

impl TrialScratch {
    pub fn new(antennas: usize) -> Self {
        Self {
            channel: ChannelRealization::zeros(antennas),
            rx: ReceivedVector::zeros(antennas),
            sent: (0, 0),
        }
    }
}

/// One draw-transmit-detect-count experiment, shared by all requested detectors.
///
/// Randomness is consumed in a fixed order (U1 word, U2 word, channels, noise)
/// regardless of which detectors run.
pub fn run_trial_with<R: Rng + ?Sized>(
    params: &ChannelParams,
    c1: &Constellation,
    c2: &Constellation,
    detectors: DetectorSet,
    rng: &mut R,
    scratch: &mut TrialScratch,
) -> ErrorCounts {
    let mask1 = (c1.order() - 1) as u32;
    let mask2 = (c2.order() - 1) as u32;
    let word1 = rng.random::<u32>() & mask1;
    let word2 = rng.random::<u32>() & mask2;
    let i1 = c1.index_of_word(word1);
    let i2 = c2.index_of_word(word2);
    scratch.sent = (i1 + 1, i2 + 1);
    draw_channels_into(params, rng, &mut scratch.channel);
    synthesize_rx_into(
        params,
        &scratch.channel,
        c1.symbols()[i1],
        c2.symbols()[i2],
        rng,
        &mut scratch.rx,
    );
    let mut counts = ErrorCounts::default();
    for d in detectors.iter() {
        let det = match d {
            DetectorKind::Sic => detect_sic(&scratch.rx, &scratch.channel, params, c1, c2),
            DetectorKind::Jml => detect_jml(&scratch.rx, &scratch.channel, params, c1, c2),
        };
        counts.add(
            d,
            User::Near,
            (det.bits1.value() ^ word1).count_ones() as u64,
        );
        counts.add(
            d,
            User::Far,
            (det.bits2.value() ^ word2).count_ones() as u64,
        );
    }
    counts
}

pub fn run_trial<R: Rng + ?Sized>(
    params: &ChannelParams,
    c1: &Constellation,
    c2: &Constellation,
    detectors: DetectorSet,
    rng: &mut R,
) -> ErrorCounts {
    let mut scratch = TrialScratch::new(params.antennas());
    run_trial_with(params, c1, c2, detectors, rng, &mut scratch)
}

/// Generator driving the trials of one chunk.
pub type TrialRng = Xoshiro256PlusPlus;

/// Random stream for chunk `chunk` of sweep point `point`.
pub fn chunk_rng(seed: u64, point: u64, chunk: u64) -> TrialRng {
    debug_assert!(point < 1 << 24 && chunk < 1 << 40);
    let mut key = ChaCha8Rng::seed_from_u64(seed);
    key.set_stream((point << 40) | chunk);
    TrialRng::from_rng(&mut key)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointCounts {
    pub trials: u64,
    pub errors: ErrorCounts,
    /// The trial cap was reached before every tracked counter met the target.
    pub hit_cap: bool,
}

/// Runs chunks of `trial` until every `tracked` counter reaches
/// `stop.min_bit_errors` or `stop.max_trials` trials have been spent.
///
/// `make_chunk` builds per-chunk state (scratch buffers) once per chunk.
pub fn estimate_point<S, Init, Trial>(
    seed: u64,
    point: u64,
    stop: StopRule,
    tracked: &[(DetectorKind, User)],
    make_chunk: Init,
    trial: Trial,
) -> PointCounts
where
    Init: Fn() -> S + Sync,
    Trial: Fn(&mut TrialRng, &mut S) -> ErrorCounts + Sync,
{
    let mut total = PointCounts {
        trials: 0,
        errors: ErrorCounts::default(),
        hit_cap: false,
    };
    if tracked.is_empty() || stop.max_trials == 0 {
        return total;
    }
    let done = |e: &ErrorCounts| {
        tracked
            .iter()
            .all(|&(d, u)| e.get(d, u) >= stop.min_bit_errors)
    };
    let total_chunks = stop.max_trials.div_ceil(CHUNK_TRIALS);
    let mut next_chunk = 0u64;
    let mut wave = 1u64;
    while next_chunk < total_chunks {
        let end = (next_chunk + wave).min(total_chunks);
        let results: Vec<(u64, ErrorCounts)> = (next_chunk..end)
            .into_par_iter()
            .map(|c| {
                let mut rng = chunk_rng(seed, point, c);
                let mut state = make_chunk();
                let n = CHUNK_TRIALS.min(stop.max_trials - c * CHUNK_TRIALS);
                let mut counts = ErrorCounts::default();
                for _ in 0..n {
                    counts.accumulate(&trial(&mut rng, &mut state));
                }
                (n, counts)
            })
            .collect();
        for (n, counts) in results {
            total.trials += n;
            total.errors.accumulate(&counts);
            if done(&total.errors) {
                return total;
            }
        }
        next_chunk = end;
        wave = (wave * 2).min(MAX_WAVE_CHUNKS);
    }
    total.hit_cap = true;
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub sigma1_db_points: Vec<f64>,
    pub sigma_ratio: f64,
    pub antennas: usize,
    pub m1: usize,
    pub m2: usize,
    pub detectors: Vec<DetectorKind>,
    pub stop: StopRule,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sigma1_db_points.is_empty() {
            return Err(invalid("sigma1_db_points", "must not be empty"));
        }
        if self.sigma1_db_points.iter().any(|x| !x.is_finite()) {
            return Err(invalid("sigma1_db_points", "must be finite"));
        }
        if !(self.sigma_ratio > 0.0 && self.sigma_ratio < 1.0) {
            return Err(invalid("sigma_ratio", "must lie in (0, 1)"));
        }
        if self.stop.min_bit_errors == 0 {
            return Err(invalid("min_bit_errors", "must be at least 1"));
        }
        if self.stop.max_trials == 0 {
            return Err(invalid("max_trials", "must be at least 1"));
        }
        if self.sigma1_db_points.len() >= 1 << 24 {
            return Err(invalid("sigma1_db_points", "too many points"));
        }
        crate::bounds::BoundConfig::new(
            self.m1,
            self.m2,
            self.antennas,
            1.0,
            self.sigma_ratio,
            crate::bounds::BoundVariant::Full,
        )?;
        Ok(())
    }

    pub fn detector_set(&self) -> DetectorSet {
        self.detectors.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserEstimate {
    pub bit_errors: u64,
    pub ber: f64,
    /// 95% normal-approximation half-width.
    pub ci_halfwidth: f64,
    /// At least `min_bit_errors` errors were observed.
    pub reliable: bool,
}

impl UserEstimate {
    pub fn from_counts(bit_errors: u64, bits: u64, min_bit_errors: u64) -> Self {
        let ber = if bits == 0 {
            0.0
        } else {
            bit_errors as f64 / bits as f64
        };
        let ci_halfwidth = if bits == 0 {
            0.0
        } else {
            Z_95 * (ber * (1.0 - ber) / bits as f64).sqrt()
        };
        Self {
            bit_errors,
            ber,
            ci_halfwidth,
            reliable: bit_errors >= min_bit_errors,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorEstimate {
    pub detector: DetectorKind,
    pub u1: UserEstimate,
    pub u2: UserEstimate,
}

impl DetectorEstimate {
    pub fn user(&self, u: User) -> &UserEstimate {
        match u {
            User::Near => &self.u1,
            User::Far => &self.u2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sigma1_db: f64,
    pub trials: u64,
    pub low_confidence: bool,
    pub estimates: Vec<DetectorEstimate>,
    pub bounds: BoundSet,
}

impl CurvePoint {
    pub fn estimate(&self, d: DetectorKind) -> Option<&DetectorEstimate> {
        self.estimates.iter().find(|e| e.detector == d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub m1: usize,
    pub m2: usize,
    pub antennas: usize,
    pub sigma_ratio: f64,
    pub detectors: Vec<DetectorKind>,
    pub stop: StopRule,
    pub seed: u64,
    pub points: Vec<CurvePoint>,
}

impl BerCurve {
    pub fn any_low_confidence(&self) -> bool {
        self.points.iter().any(|p| p.low_confidence)
    }

    /// `(σ1² dB, estimate)` for every point.
    pub fn series(&self, d: DetectorKind, u: User) -> Vec<(f64, UserEstimate)> {
        self.points
            .iter()
            .filter_map(|p| p.estimate(d).map(|e| (p.sigma1_db, *e.user(u))))
            .collect()
    }
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<BerCurve> {
    spec.validate()?;
    let c1 = Constellation::new(spec.m1)?;
    let c2 = Constellation::new(spec.m2)?;
    let detectors = spec.detector_set();
    let tracked: Vec<(DetectorKind, User)> = detectors
        .iter()
        .flat_map(|d| User::BOTH.map(|u| (d, u)))
        .collect();
    let mut points = Vec::with_capacity(spec.sigma1_db_points.len());
    for (p, &db) in spec.sigma1_db_points.iter().enumerate() {
        let params = ChannelParams::normalized(spec.antennas, db, spec.sigma_ratio)?;
        let counts = estimate_point(
            spec.seed,
            p as u64,
            spec.stop,
            &tracked,
            || TrialScratch::new(spec.antennas),
            |rng, scratch| run_trial_with(&params, &c1, &c2, detectors, rng, scratch),
        );
        let bits1 = counts.trials * c1.bits_per_symbol() as u64;
        let bits2 = counts.trials * c2.bits_per_symbol() as u64;
        let estimates = detectors
            .iter()
            .map(|d| DetectorEstimate {
                detector: d,
                u1: UserEstimate::from_counts(
                    counts.errors.get(d, User::Near),
                    bits1,
                    spec.stop.min_bit_errors,
                ),
                u2: UserEstimate::from_counts(
                    counts.errors.get(d, User::Far),
                    bits2,
                    spec.stop.min_bit_errors,
                ),
            })
            .collect();
        let snr = params.power() / params.noise_density();
        let bounds = BoundSet::evaluate(
            spec.m1,
            spec.m2,
            spec.antennas,
            params.sigma1_sq() * snr,
            params.sigma2_sq() * snr,
        )?;
        points.push(CurvePoint {
            sigma1_db: db,
            trials: counts.trials,
            low_confidence: counts.hit_cap,
            estimates,
            bounds,
        });
    }
    Ok(BerCurve {
        m1: spec.m1,
        m2: spec.m2,
        antennas: spec.antennas,
        sigma_ratio: spec.sigma_ratio,
        detectors: detectors.iter().collect(),
        stop: spec.stop,
        seed: spec.seed,
        points,
    })
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid("threads", e.to_string()))?;
    Ok(pool.install(f))
}

/// Least-squares slope of `log10(BER)` against σ1² in dB, in decades per 10 dB.
///
/// Only reliable, non-zero estimates inside `window` (inclusive) are used.
pub fn fit_diversity_slope(
    curve: &BerCurve,
    user: User,
    detector: DetectorKind,
    window: (f64, f64),
) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .series(detector, user)
        .into_iter()
        .filter(|(db, e)| *db >= window.0 && *db <= window.1 && e.reliable && e.ber > 0.0)
        .map(|(db, e)| (db, e.ber.log10()))
        .collect();
    slope_per_decade(&pts)
}

pub(crate) fn slope_per_decade(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 2 {
        return Err(Error::InsufficientPoints { found: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints { found: 1 });
    }
    Ok(10.0 * sxy / sxx)
}
