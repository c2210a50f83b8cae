//! Synthetic two-channel photon streams with known statistics.
//!
//! Sources: independent coherent beams, twin pairs with an arbitrary delay
//! profile, gamma-renewal pair epochs (the sub-Poissonian surrogate: counting
//! Fano factor → 1/shape for wide bins, so Q → 1/shape − 1), and an SPDC-like
//! source (twin pairs with a fixed narrow Gaussian delay). A detector model
//! applies Bernoulli(η) thinning, Gaussian timing jitter, a re-sort, then the
//! non-paralyzable dead-time filter — in that fixed order.
//!
//! Generation is single-threaded per stream (ChaCha8, deterministic per
//! seed); delays follow τ = t_probe − t_conjugate, so the conjugate event of
//! a pair lands at epoch − τ. If any timestamp would be negative the whole
//! record is shifted, preserving every pairwise difference.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use serde::Serialize;

use crate::physmodel::TemporalDensity;
use crate::timetags::{apply_dead_time, Channel, TimeTagStream};

const PS_PER_S: f64 = 1e12;

/// Pair-delay distribution, normalized to unit integral before sampling.
#[derive(Debug, Clone)]
pub enum DelayProfile {
    /// All pairs simultaneous.
    Delta,
    /// Gaussian of the given standard deviation.
    Gaussian { sigma_s: f64 },
    /// Two-sided exponential, density ∝ e^{−|τ|/tau_s}.
    DoubleExponential { tau_s: f64 },
    /// Arbitrary density on a uniform τ grid, sampled by inverse CDF with
    /// linear interpolation within cells.
    Sampled(TemporalDensity),
}

impl DelayProfile {
    fn sample_s(&self, rng: &mut ChaCha8Rng) -> Result<f64, SynthError> {
        match self {
            DelayProfile::Delta => Ok(0.0),
            DelayProfile::Gaussian { sigma_s } => {
                let n = Normal::new(0.0, *sigma_s).map_err(|_| SynthError::BadProfile)?;
                Ok(n.sample(rng))
            }
            DelayProfile::DoubleExponential { tau_s } => {
                if !(*tau_s > 0.0) {
                    return Err(SynthError::BadProfile);
                }
                let u: f64 = rng.random::<f64>();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Ok(-tau_s * (1.0 - u).ln() * sign)
            }
            DelayProfile::Sampled(density) => sample_density(density, rng),
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        match self {
            DelayProfile::Gaussian { sigma_s } if !(*sigma_s >= 0.0) => Err(SynthError::BadProfile),
            DelayProfile::DoubleExponential { tau_s } if !(*tau_s > 0.0) => {
                Err(SynthError::BadProfile)
            }
            DelayProfile::Sampled(d) => {
                let total = d.integral();
                if !(total > 0.0) || !total.is_finite() || d.values().iter().any(|v| *v < 0.0) {
                    Err(SynthError::BadProfile)
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Inverse-CDF sampling of a gridded density with in-cell linear
/// interpolation (cell mass from the trapezoid rule).
fn sample_density(density: &TemporalDensity, rng: &mut ChaCha8Rng) -> Result<f64, SynthError> {
    let v = density.values();
    let n = v.len();
    if n < 2 {
        return Err(SynthError::BadProfile);
    }
    let dt = density.tau_step_s();
    let mut cdf = Vec::with_capacity(n);
    cdf.push(0.0);
    for j in 1..n {
        let mass = 0.5 * (v[j - 1] + v[j]) * dt;
        cdf.push(cdf[j - 1] + mass);
    }
    let total = cdf[n - 1];
    if !(total > 0.0) {
        return Err(SynthError::BadProfile);
    }
    let u = rng.random::<f64>() * total;
    let cell = match cdf.binary_search_by(|p| p.partial_cmp(&u).unwrap()) {
        Ok(c) => c.min(n - 2),
        Err(c) => c.saturating_sub(1).min(n - 2),
    };
    let mass = cdf[cell + 1] - cdf[cell];
    let frac = if mass > 0.0 { (u - cdf[cell]) / mass } else { 0.5 };
    Ok(density.tau_at(cell) + frac * dt)
}

/// What to generate.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Pair rate for pair sources; per-channel rate for `Coherent`.
    pub pair_rate_per_s: f64,
    pub delay_profile: DelayProfile,
    /// Uncorrelated background, per channel.
    pub background_rate_per_s: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    Coherent,
    TwinPairs,
    /// Gamma-renewal pair epochs with the given shape (≥ 1).
    RenewalPairs { shape: f64 },
    /// Twin pairs with a fixed 300 ps Gaussian delay profile.
    SpdcLike,
}

impl SourceSpec {
    pub fn coherent(rate_per_s: f64) -> Self {
        SourceSpec {
            kind: SourceKind::Coherent,
            pair_rate_per_s: rate_per_s,
            delay_profile: DelayProfile::Delta,
            background_rate_per_s: [0.0, 0.0],
        }
    }

    pub fn twin_pairs(rate_per_s: f64, profile: DelayProfile) -> Self {
        SourceSpec {
            kind: SourceKind::TwinPairs,
            pair_rate_per_s: rate_per_s,
            delay_profile: profile,
            background_rate_per_s: [0.0, 0.0],
        }
    }

    pub fn renewal_pairs(rate_per_s: f64, shape: f64) -> Self {
        SourceSpec {
            kind: SourceKind::RenewalPairs { shape },
            pair_rate_per_s: rate_per_s,
            delay_profile: DelayProfile::Delta,
            background_rate_per_s: [0.0, 0.0],
        }
    }

    pub fn spdc_like(rate_per_s: f64) -> Self {
        SourceSpec {
            kind: SourceKind::SpdcLike,
            pair_rate_per_s: rate_per_s,
            delay_profile: DelayProfile::Gaussian { sigma_s: 300e-12 },
            background_rate_per_s: [0.0, 0.0],
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(self.pair_rate_per_s >= 0.0) || !self.pair_rate_per_s.is_finite() {
            return Err(SynthError::BadRate(self.pair_rate_per_s));
        }
        for &r in &self.background_rate_per_s {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(SynthError::BadRate(r));
            }
        }
        if let SourceKind::RenewalPairs { shape } = self.kind {
            if !(shape >= 1.0) || !shape.is_finite() {
                return Err(SynthError::BadShape(shape));
            }
        }
        self.delay_profile.validate()
    }
}

/// Detector imperfections applied by [`detect`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetectorSpec {
    pub efficiency: f64,
    pub dead_time_ps: u64,
    pub gaussian_jitter_ps: f64,
}

impl DetectorSpec {
    pub fn ideal() -> Self {
        DetectorSpec {
            efficiency: 1.0,
            dead_time_ps: 0,
            gaussian_jitter_ps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(SynthError::BadEfficiency(self.efficiency));
        }
        if !(self.gaussian_jitter_ps >= 0.0) {
            return Err(SynthError::BadJitter(self.gaussian_jitter_ps));
        }
        Ok(())
    }
}

/// Exact generation parameters, recorded alongside every synthetic dataset.
#[derive(Debug, Clone, Serialize)]
pub struct TruthRecord {
    pub kind: String,
    pub pair_rate_per_s: f64,
    pub renewal_shape: Option<f64>,
    pub background_rate_per_s: [f64; 2],
    pub duration_s: f64,
    pub seed: u64,
    pub record_shift_ps: u64,
    pub n_probe: u64,
    pub n_conjugate: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    BadRate(f64),
    BadShape(f64),
    BadEfficiency(f64),
    BadJitter(f64),
    BadProfile,
    BadDuration(f64),
}

impl std::fmt::Display for SynthError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SynthError::BadRate(r) => write!(f, "rate must be finite and >= 0, got {r}"),
            SynthError::BadShape(k) => write!(f, "renewal shape must be >= 1, got {k}"),
            SynthError::BadEfficiency(e) => write!(f, "efficiency must be in [0,1], got {e}"),
            SynthError::BadJitter(j) => write!(f, "jitter must be >= 0, got {j}"),
            SynthError::BadProfile => write!(f, "delay profile is not normalizable"),
            SynthError::BadDuration(d) => write!(f, "duration must be positive, got {d}"),
        }
    }
}

impl std::error::Error for SynthError {}

/// Generate a two-channel record of the requested duration.
pub fn generate(
    spec: &SourceSpec,
    duration_s: f64,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream, TruthRecord), SynthError> {
    spec.validate()?;
    if !(duration_s > 0.0) {
        return Err(SynthError::BadDuration(duration_s));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration_ps = (duration_s * PS_PER_S).round() as i64;

    let (mut probe, mut conjugate): (Vec<i64>, Vec<i64>) = match spec.kind {
        SourceKind::Coherent => {
            let p = poisson_times(spec.pair_rate_per_s, duration_s, &mut rng);
            let c = poisson_times(spec.pair_rate_per_s, duration_s, &mut rng);
            (p, c)
        }
        SourceKind::TwinPairs | SourceKind::SpdcLike => {
            let epochs = poisson_times(spec.pair_rate_per_s, duration_s, &mut rng);
            pair_streams(&epochs, &spec.delay_profile, &mut rng)?
        }
        SourceKind::RenewalPairs { shape } => {
            let epochs = renewal_times(spec.pair_rate_per_s, shape, duration_s, &mut rng)?;
            pair_streams(&epochs, &spec.delay_profile, &mut rng)?
        }
    };

    for (ch, rate) in [(0usize, spec.background_rate_per_s[0]), (1, spec.background_rate_per_s[1])]
    {
        if rate > 0.0 {
            let extra = poisson_times(rate, duration_s, &mut rng);
            let target = if ch == 0 { &mut probe } else { &mut conjugate };
            target.extend(extra);
        }
    }
    probe.sort_unstable();
    conjugate.sort_unstable();

    // Clip negative times by shifting the whole record.
    let min_ts = probe
        .first()
        .copied()
        .unwrap_or(0)
        .min(conjugate.first().copied().unwrap_or(0))
        .min(0);
    let shift = (-min_ts) as u64;
    let to_u64 = |v: Vec<i64>| -> Vec<u64> { v.into_iter().map(|t| (t + shift as i64) as u64).collect() };
    let probe = to_u64(probe);
    let conjugate = to_u64(conjugate);
    let max_ts = probe
        .last()
        .copied()
        .unwrap_or(0)
        .max(conjugate.last().copied().unwrap_or(0));
    let duration = (duration_ps as u64 + shift).max(max_ts + 1);

    let truth = TruthRecord {
        kind: match spec.kind {
            SourceKind::Coherent => "coherent".into(),
            SourceKind::TwinPairs => "twin_pairs".into(),
            SourceKind::RenewalPairs { .. } => "renewal_pairs".into(),
            SourceKind::SpdcLike => "spdc_like".into(),
        },
        pair_rate_per_s: spec.pair_rate_per_s,
        renewal_shape: match spec.kind {
            SourceKind::RenewalPairs { shape } => Some(shape),
            _ => None,
        },
        background_rate_per_s: spec.background_rate_per_s,
        duration_s,
        seed,
        record_shift_ps: shift,
        n_probe: probe.len() as u64,
        n_conjugate: conjugate.len() as u64,
    };
    let p = TimeTagStream::new(Channel::Probe, probe, duration).expect("sorted by construction");
    let c = TimeTagStream::new(Channel::Conjugate, conjugate, duration)
        .expect("sorted by construction");
    Ok((p, c, truth))
}

fn poisson_times(rate_per_s: f64, duration_s: f64, rng: &mut ChaCha8Rng) -> Vec<i64> {
    if rate_per_s <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(rate_per_s).expect("positive rate");
    let mut t = 0.0f64;
    let mut out = Vec::with_capacity((rate_per_s * duration_s * 1.05) as usize + 16);
    loop {
        t += exp.sample(rng);
        if t >= duration_s {
            return out;
        }
        out.push((t * PS_PER_S).round() as i64);
    }
}

fn renewal_times(
    rate_per_s: f64,
    shape: f64,
    duration_s: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<i64>, SynthError> {
    if rate_per_s <= 0.0 {
        return Ok(Vec::new());
    }
    // Gamma inter-arrivals with mean 1/rate: scale = 1/(shape*rate).
    let gamma =
        Gamma::new(shape, 1.0 / (shape * rate_per_s)).map_err(|_| SynthError::BadShape(shape))?;
    let mut t = 0.0f64;
    let mut out = Vec::with_capacity((rate_per_s * duration_s * 1.05) as usize + 16);
    loop {
        t += gamma.sample(rng);
        if t >= duration_s {
            return Ok(out);
        }
        out.push((t * PS_PER_S).round() as i64);
    }
}

fn pair_streams(
    epochs: &[i64],
    profile: &DelayProfile,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<i64>, Vec<i64>), SynthError> {
    let mut probe = Vec::with_capacity(epochs.len());
    let mut conjugate = Vec::with_capacity(epochs.len());
    for &e in epochs {
        let tau = profile.sample_s(rng)?;
        probe.push(e);
        conjugate.push(e - (tau * PS_PER_S).round() as i64);
    }
    Ok((probe, conjugate))
}

/// Detector model: Bernoulli(η) thinning, then Gaussian jitter, re-sort,
/// then the non-paralyzable dead-time filter. This order is fixed.
pub fn detect(
    stream: &TimeTagStream,
    detector: &DetectorSpec,
    seed: u64,
) -> Result<TimeTagStream, SynthError> {
    detector.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept: Vec<u64> = Vec::with_capacity(stream.len());
    for &t in stream.timestamps() {
        if detector.efficiency >= 1.0 || rng.random::<f64>() < detector.efficiency {
            kept.push(t);
        }
    }
    if detector.gaussian_jitter_ps > 0.0 {
        let normal = Normal::new(0.0, detector.gaussian_jitter_ps)
            .map_err(|_| SynthError::BadJitter(detector.gaussian_jitter_ps))?;
        let dur = stream.acquisition_duration_ps();
        for t in kept.iter_mut() {
            let jit = normal.sample(&mut rng);
            let shifted = (*t as f64 + jit).round().clamp(0.0, dur as f64);
            *t = shifted as u64;
        }
        kept.sort_unstable();
    }
    let jittered = TimeTagStream::new(
        stream.channel(),
        kept,
        stream.acquisition_duration_ps(),
    )
    .expect("sorted and clamped");
    Ok(apply_dead_time(&jittered, detector.dead_time_ps))
}
