//! Binned photon-counting statistics and the Mandel-Q parameter.
//!
//! Events are partitioned into contiguous bins of fixed width; the Mandel
//! parameter Q = [Var(n) − ⟨n⟩]/⟨n⟩ uses the population (1/N) variance of
//! the per-bin counts. Q = 0 for Poissonian light, Q < 0 sub-Poissonian,
//! −1 for a perfectly regular stream.

pub mod bootstrap;

pub use bootstrap::{bin_width_sweep, bootstrap_q};

use crate::timetags::TimeTagStream;

/// Per-bin counts of one stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedCounts {
    bin_width_ps: u64,
    counts: Vec<u32>,
    total_events: u64,
}

impl BinnedCounts {
    pub fn bin_width_ps(&self) -> u64 {
        self.bin_width_ps
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total_events(&self) -> u64 {
        self.total_events
    }

    /// Exact integer moments: (Σn, Σn²).
    fn moment_sums(&self) -> (u64, u128) {
        let mut s = 0u64;
        let mut s2 = 0u128;
        for &c in &self.counts {
            s += c as u64;
            s2 += (c as u128) * (c as u128);
        }
        (s, s2)
    }

    pub fn mean(&self) -> f64 {
        let (s, _) = self.moment_sums();
        s as f64 / self.counts.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let (s, s2) = self.moment_sums();
        let n = self.counts.len() as f64;
        let mean = s as f64 / n;
        s2 as f64 / n - mean * mean
    }
}

/// Mandel-Q estimate, optionally with a bootstrap standard deviation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MandelResult {
    pub q: f64,
    pub q_std: Option<f64>,
    pub mean: f64,
    pub variance: f64,
    pub n_bins: usize,
    pub iterations: u64,
}

/// Counting errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CountingError {
    ZeroBinWidth,
    /// Acquisition shorter than one bin.
    ZeroBins {
        duration_ps: u64,
        bin_width_ps: u64,
    },
    /// All-zero counts: ⟨n⟩ = 0 leaves Q undefined.
    UndefinedQ,
    ZeroIterations,
}

impl std::fmt::Display for CountingError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CountingError::ZeroBinWidth => write!(f, "bin width must be nonzero"),
            CountingError::ZeroBins {
                duration_ps,
                bin_width_ps,
            } => write!(
                f,
                "acquisition of {duration_ps} ps is shorter than one {bin_width_ps} ps bin"
            ),
            CountingError::UndefinedQ => {
                write!(f, "mean count is zero; Mandel-Q is undefined")
            }
            CountingError::ZeroIterations => write!(f, "bootstrap needs at least one iteration"),
        }
    }
}

impl std::error::Error for CountingError {}

/// Partition a stream into bins of `bin_width_ps`; the trailing partial bin
/// is discarded so every bin has equal exposure.
pub fn bin_counts(stream: &TimeTagStream, bin_width_ps: u64) -> Result<BinnedCounts, CountingError> {
    if bin_width_ps == 0 {
        return Err(CountingError::ZeroBinWidth);
    }
    let n_bins = (stream.acquisition_duration_ps() / bin_width_ps) as usize;
    if n_bins == 0 {
        return Err(CountingError::ZeroBins {
            duration_ps: stream.acquisition_duration_ps(),
            bin_width_ps,
        });
    }
    let mut counts = vec![0u32; n_bins];
    let mut total = 0u64;
    for &t in stream.timestamps() {
        let idx = (t / bin_width_ps) as usize;
        if idx < n_bins {
            counts[idx] += 1;
            total += 1;
        }
    }
    Ok(BinnedCounts {
        bin_width_ps,
        counts,
        total_events: total,
    })
}

/// Mandel-Q from binned counts (no uncertainty).
pub fn mandel_q(binned: &BinnedCounts) -> Result<MandelResult, CountingError> {
    let mean = binned.mean();
    if mean == 0.0 {
        return Err(CountingError::UndefinedQ);
    }
    let variance = binned.variance();
    Ok(MandelResult {
        q: (variance - mean) / mean,
        q_std: None,
        mean,
        variance,
        n_bins: binned.n_bins(),
        iterations: 0,
    })
}

/// Data-quality warnings for a bin-width choice.
#[derive(Debug, Clone, PartialEq)]
pub enum CountingWarning {
    /// Bin width below the detector dead time: dead-time artifacts dominate.
    BinBelowDeadTime { bin_ps: u64, dead_ps: u64 },
    /// Bin width above the mean inter-arrival time: bins saturate.
    BinAboveMeanInterarrival { bin_ps: u64, mean_interarrival_ps: f64 },
}

impl std::fmt::Display for CountingWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CountingWarning::BinBelowDeadTime { bin_ps, dead_ps } => write!(
                f,
                "bin width {bin_ps} ps is below the detector dead time {dead_ps} ps"
            ),
            CountingWarning::BinAboveMeanInterarrival {
                bin_ps,
                mean_interarrival_ps,
            } => write!(
                f,
                "bin width {bin_ps} ps exceeds the mean inter-arrival time {mean_interarrival_ps:.0} ps"
            ),
        }
    }
}

/// Guard band for a trustworthy Q: the bin should exceed the detector dead
/// time while staying below the mean inter-photon arrival time.
pub fn bin_width_guard(
    stream: &TimeTagStream,
    bin_width_ps: u64,
    dead_time_ps: Option<u64>,
) -> Vec<CountingWarning> {
    let mut warnings = Vec::new();
    if let Some(dead) = dead_time_ps {
        if bin_width_ps < dead {
            warnings.push(CountingWarning::BinBelowDeadTime {
                bin_ps: bin_width_ps,
                dead_ps: dead,
            });
        }
    }
    if let Some(mean) = stream.mean_interarrival_ps() {
        if (bin_width_ps as f64) > mean {
            warnings.push(CountingWarning::BinAboveMeanInterarrival {
                bin_ps: bin_width_ps,
                mean_interarrival_ps: mean,
            });
        }
    }
    warnings
}
