//! Intensity-difference squeezing analysis.
//!
//! Twin traces are binned photon counts per sample interval: a common pair
//! count per interval, independently thinned into the two channels. The
//! squeezing figure is the PSD of n₁ − n₂ divided by the PSD of a shot-noise
//! calibration trace of equal total power (two independent Poisson channels
//! at half the total rate), in dB. The broadband expectation for the
//! pair-thinning model is 1 − 2η₁η₂/(η₁+η₂).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use rustfft::FftPlanner;

/// dB clamp for zero-variance ratios.
pub const DB_FLOOR: f64 = -60.0;

/// Photon counts per sample interval on both channels.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    pub sample_rate_hz: f64,
    pub n1: Vec<u32>,
    pub n2: Vec<u32>,
}

impl IntensityTrace {
    pub fn duration_s(&self) -> f64 {
        self.n1.len() as f64 / self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.n1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n1.is_empty()
    }

    /// Mean total count rate (both channels, Hz).
    pub fn total_rate_hz(&self) -> f64 {
        let sum: u64 = self.n1.iter().map(|&v| v as u64).sum::<u64>()
            + self.n2.iter().map(|&v| v as u64).sum::<u64>();
        sum as f64 * self.sample_rate_hz / self.n1.len() as f64
    }
}

/// Difference-noise spectrum relative to the shot-noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    pub frequencies_hz: Vec<f64>,
    pub power_db_rel_snl: Vec<f64>,
    pub rbw_hz: f64,
    pub vbw_hz: Option<f64>,
}

impl NoiseSpectrum {
    /// Mean dB level across the analysis band.
    pub fn band_average_db(&self) -> f64 {
        self.power_db_rel_snl.iter().sum::<f64>() / self.power_db_rel_snl.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SqueezeError {
    BadParameter(String),
    SampleRateMismatch { trace_hz: f64, snl_hz: f64 },
    RateMismatch { trace_hz: f64, snl_hz: f64 },
    TooShort { samples: usize, segment: usize },
}

impl std::fmt::Display for SqueezeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SqueezeError::BadParameter(m) => write!(f, "invalid parameter: {m}"),
            SqueezeError::SampleRateMismatch { trace_hz, snl_hz } => write!(
                f,
                "sample-rate mismatch: trace {trace_hz} Hz vs calibration {snl_hz} Hz"
            ),
            SqueezeError::RateMismatch { trace_hz, snl_hz } => write!(
                f,
                "calibration power mismatch: trace {trace_hz:.4e} cps vs SNL {snl_hz:.4e} cps \
                 differ by more than 1%"
            ),
            SqueezeError::TooShort { samples, segment } => write!(
                f,
                "trace of {samples} samples shorter than one {segment}-sample segment"
            ),
        }
    }
}

impl std::error::Error for SqueezeError {}

/// Simulate correlated twin traces: common Poisson pair count per interval,
/// independent Bernoulli(η₁), Bernoulli(η₂) thinning into the channels.
pub fn simulate_twin_traces(
    pair_rate_per_s: f64,
    eta1: f64,
    eta2: f64,
    sample_rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<IntensityTrace, SqueezeError> {
    validate_rate(pair_rate_per_s, "pair rate")?;
    validate_eta(eta1)?;
    validate_eta(eta2)?;
    validate_rate(sample_rate_hz, "sample rate")?;
    if !(duration_s > 0.0) {
        return Err(SqueezeError::BadParameter(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    let n = (duration_s * sample_rate_hz).round() as usize;
    let lambda = pair_rate_per_s / sample_rate_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pois = Poisson::new(lambda)
        .map_err(|_| SqueezeError::BadParameter(format!("bad mean pair count {lambda}")))?;
    let mut n1 = Vec::with_capacity(n);
    let mut n2 = Vec::with_capacity(n);
    for _ in 0..n {
        let pairs = pois.sample(&mut rng) as u64;
        n1.push(thin(pairs, eta1, &mut rng));
        n2.push(thin(pairs, eta2, &mut rng));
    }
    Ok(IntensityTrace {
        sample_rate_hz,
        n1,
        n2,
    })
}

/// Shot-noise calibration: two independent Poisson channels at half the
/// total rate each (equal total optical power).
pub fn simulate_snl_trace(
    total_rate_per_s: f64,
    sample_rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<IntensityTrace, SqueezeError> {
    validate_rate(total_rate_per_s, "total rate")?;
    validate_rate(sample_rate_hz, "sample rate")?;
    if !(duration_s > 0.0) {
        return Err(SqueezeError::BadParameter(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    let n = (duration_s * sample_rate_hz).round() as usize;
    let lambda = 0.5 * total_rate_per_s / sample_rate_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pois = Poisson::new(lambda)
        .map_err(|_| SqueezeError::BadParameter(format!("bad mean count {lambda}")))?;
    let mut n1 = Vec::with_capacity(n);
    let mut n2 = Vec::with_capacity(n);
    for _ in 0..n {
        n1.push(pois.sample(&mut rng) as u32);
        n2.push(pois.sample(&mut rng) as u32);
    }
    Ok(IntensityTrace {
        sample_rate_hz,
        n1,
        n2,
    })
}

fn thin(n: u64, eta: f64, rng: &mut ChaCha8Rng) -> u32 {
    if n == 0 {
        return 0;
    }
    if eta >= 1.0 {
        return n as u32;
    }
    if eta <= 0.0 {
        return 0;
    }
    Binomial::new(n, eta).expect("eta in (0,1)").sample(rng) as u32
}

fn validate_eta(eta: f64) -> Result<(), SqueezeError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(SqueezeError::BadParameter(format!(
            "efficiency must be in [0,1], got {eta}"
        )));
    }
    Ok(())
}

fn validate_rate(rate: f64, what: &str) -> Result<(), SqueezeError> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(SqueezeError::BadParameter(format!(
            "{what} must be positive, got {rate}"
        )));
    }
    Ok(())
}

/// Analytic broadband expectation 1 − 2η₁η₂/(η₁+η₂) in dB (negative =
/// squeezed below the shot-noise level).
pub fn expected_ratio_db(eta1: f64, eta2: f64) -> f64 {
    let ratio = 1.0 - 2.0 * eta1 * eta2 / (eta1 + eta2);
    10.0 * ratio.max(10f64.powf(DB_FLOOR / 10.0)).log10()
}

/// Averaged-periodogram PSD of the per-sample difference n₁ − n₂, global
/// mean removed, boxcar window, non-overlapping full segments.
///
/// Returns (one-sided frequencies excluding DC, PSD values at those
/// frequencies, mean square of the included samples, per-segment DC power).
/// The PSD normalization satisfies Σ_k PSD_k·Δf = mean square (Parseval)
/// when the DC bin is included.
fn difference_psd(trace: &IntensityTrace, segment: usize) -> Result<(Vec<f64>, Vec<f64>, f64), SqueezeError> {
    let n = trace.len();
    if n < segment {
        return Err(SqueezeError::TooShort {
            samples: n,
            segment,
        });
    }
    let n_segments = n / segment;
    let used = n_segments * segment;
    let diff: Vec<f64> = trace.n1[..used]
        .iter()
        .zip(&trace.n2[..used])
        .map(|(&a, &b)| a as f64 - b as f64)
        .collect();
    let mean = diff.iter().sum::<f64>() / used as f64;

    let fft = FftPlanner::new().plan_fft_forward(segment);
    let spectra: Vec<Vec<f64>> = (0..n_segments)
        .into_par_iter()
        .map(|s| {
            let mut buf: Vec<Complex64> = diff[s * segment..(s + 1) * segment]
                .iter()
                .map(|&v| Complex64::new(v - mean, 0.0))
                .collect();
            fft.process(&mut buf);
            buf.iter().map(|c| c.norm_sqr()).collect()
        })
        .collect();

    // deterministic ordered average over segments
    let mut mean_spec = vec![0.0f64; segment];
    for spec in &spectra {
        for (m, v) in mean_spec.iter_mut().zip(spec) {
            *m += v;
        }
    }
    let fs = trace.sample_rate_hz;
    let norm = 1.0 / (n_segments as f64 * segment as f64 * fs);
    for v in mean_spec.iter_mut() {
        *v *= norm;
    }

    // fold to one-sided, excluding DC; Nyquist kept unweighted
    let half = segment / 2;
    let mut freqs = Vec::with_capacity(half);
    let mut psd = Vec::with_capacity(half);
    for k in 1..=half {
        let f = k as f64 * fs / segment as f64;
        let p = if k == half {
            mean_spec[k]
        } else {
            mean_spec[k] + mean_spec[segment - k]
        };
        freqs.push(f);
        psd.push(p);
    }
    let msq = diff.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / used as f64;
    Ok((freqs, psd, msq))
}

/// Segment length for a requested resolution bandwidth: sample_rate/rbw
/// rounded to the nearest power of two.
pub fn segment_length(sample_rate_hz: f64, rbw_hz: f64) -> usize {
    let raw = (sample_rate_hz / rbw_hz).max(2.0);
    let exp = raw.log2().round().max(1.0) as u32;
    1usize << exp
}

/// Difference-noise power spectrum of `trace`, normalized bin-for-bin to the
/// SNL calibration `snl_trace`, in dB. Both traces must share the sample
/// rate and agree in total mean rate within 1% (the equal-power calibration
/// rule). Optional video-bandwidth smoothing is a moving average of the dB
/// trace over ≈ rbw/vbw bins.
pub fn difference_noise_spectrum(
    trace: &IntensityTrace,
    snl_trace: &IntensityTrace,
    rbw_hz: f64,
    vbw_hz: Option<f64>,
) -> Result<NoiseSpectrum, SqueezeError> {
    validate_rate(rbw_hz, "resolution bandwidth")?;
    if trace.sample_rate_hz != snl_trace.sample_rate_hz {
        return Err(SqueezeError::SampleRateMismatch {
            trace_hz: trace.sample_rate_hz,
            snl_hz: snl_trace.sample_rate_hz,
        });
    }
    let r1 = trace.total_rate_hz();
    let r2 = snl_trace.total_rate_hz();
    if (r1 - r2).abs() > 0.01 * r2 {
        return Err(SqueezeError::RateMismatch {
            trace_hz: r1,
            snl_hz: r2,
        });
    }
    let segment = segment_length(trace.sample_rate_hz, rbw_hz);
    let (freqs, psd_d, _) = difference_psd(trace, segment)?;
    let (_, psd_s, _) = difference_psd(snl_trace, segment)?;
    let floor = 10f64.powf(DB_FLOOR / 10.0);
    let mut db: Vec<f64> = psd_d
        .iter()
        .zip(&psd_s)
        .map(|(&d, &s)| {
            if s <= 0.0 {
                return 0.0;
            }
            10.0 * (d / s).max(floor).log10()
        })
        .collect();
    if let Some(vbw) = vbw_hz {
        validate_rate(vbw, "video bandwidth")?;
        let w = ((rbw_hz / vbw).round() as usize).max(1);
        db = moving_average(&db, w);
    }
    Ok(NoiseSpectrum {
        frequencies_hz: freqs,
        power_db_rel_snl: db,
        rbw_hz,
        vbw_hz,
    })
}

/// Parseval check value: (Σ PSD·Δf including DC, mean square of samples).
pub fn parseval_check(trace: &IntensityTrace, rbw_hz: f64) -> Result<(f64, f64), SqueezeError> {
    let segment = segment_length(trace.sample_rate_hz, rbw_hz);
    let n = trace.len();
    if n < segment {
        return Err(SqueezeError::TooShort {
            samples: n,
            segment,
        });
    }
    let (_, psd, msq) = difference_psd(trace, segment)?;
    let df = trace.sample_rate_hz / segment as f64;
    // one-sided sum already excludes DC; DC power is included in msq via the
    // per-segment offsets, so add it back from the direct computation
    let n_segments = n / segment;
    let used = n_segments * segment;
    let diff: Vec<f64> = trace.n1[..used]
        .iter()
        .zip(&trace.n2[..used])
        .map(|(&a, &b)| a as f64 - b as f64)
        .collect();
    let mean = diff.iter().sum::<f64>() / used as f64;
    let mut dc = 0.0;
    for s in 0..n_segments {
        let seg_mean: f64 =
            diff[s * segment..(s + 1) * segment].iter().map(|v| v - mean).sum::<f64>()
                / segment as f64;
        dc += seg_mean * seg_mean;
    }
    dc /= n_segments as f64;
    Ok((psd.iter().sum::<f64>() * df + dc, msq))
}

fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return values.to_vec();
    }
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(window / 2);
            let hi = (i + window / 2 + 1).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}
