//! Windowed coincidence histogramming.
//!
//! Counts every ordered (probe, conjugate) pair whose delay
//! τ = t_probe − t_conjugate falls in the half-open window [lo, hi); a
//! sliding two-pointer pass over the sorted streams makes this
//! O(N + M + pairs). A start-stop mode is offered for comparison: each
//! probe pairs with the unconsumed conjugate of smallest |τ| in the window.

use rayon::prelude::*;

use super::{CoincidenceHistogram, TagError, TimeTagStream};

/// Delay window and binning. The default is the ±30 ns window with 250 ps
/// bins (240 bins).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramSpec {
    pub window_lo_ps: i64,
    pub window_hi_ps: i64,
    pub bin_width_ps: u64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            window_lo_ps: -30_000,
            window_hi_ps: 30_000,
            bin_width_ps: 250,
        }
    }
}

impl HistogramSpec {
    /// Symmetric window of ±half_width with the given bin width.
    pub fn symmetric(half_width_ps: i64, bin_width_ps: u64) -> Self {
        HistogramSpec {
            window_lo_ps: -half_width_ps,
            window_hi_ps: half_width_ps,
            bin_width_ps,
        }
    }

    pub fn n_bins(&self) -> Result<usize, TagError> {
        if self.bin_width_ps == 0 {
            return Err(TagError::ZeroBinWidth);
        }
        if self.window_hi_ps <= self.window_lo_ps {
            return Err(TagError::EmptyWindow);
        }
        let span = (self.window_hi_ps - self.window_lo_ps) as u64;
        if !span.is_multiple_of(self.bin_width_ps) {
            return Err(TagError::WindowNotDivisible {
                window_ps: span as i64,
                bin_ps: self.bin_width_ps,
            });
        }
        Ok((span / self.bin_width_ps) as usize)
    }
}

/// Pair-counting mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMode {
    /// Every pair with τ in the window (default, TCSPC-equivalent).
    AllPairs,
    /// One conjugate per probe, nearest in |τ|, each used at most once.
    StartStop,
}

/// All-pairs coincidence histogram, serial two-pointer.
pub fn coincidence_histogram(
    probe: &TimeTagStream,
    conjugate: &TimeTagStream,
    spec: &HistogramSpec,
) -> Result<CoincidenceHistogram, TagError> {
    let n_bins = spec.n_bins()?;
    let mut counts = vec![0u64; n_bins];
    fill_counts(
        probe.timestamps(),
        conjugate.timestamps(),
        spec,
        &mut counts,
    );
    Ok(CoincidenceHistogram {
        window_lo_ps: spec.window_lo_ps,
        window_hi_ps: spec.window_hi_ps,
        bin_width_ps: spec.bin_width_ps,
        counts,
        n_start_events: probe.len() as u64,
        n_stop_events: conjugate.len() as u64,
    })
}

/// All-pairs histogram, probe stream partitioned across workers. Each worker
/// fills a private histogram over its contiguous probe slice; integer merges
/// make the result bit-identical to the serial path for any worker count.
pub fn coincidence_histogram_parallel(
    probe: &TimeTagStream,
    conjugate: &TimeTagStream,
    spec: &HistogramSpec,
) -> Result<CoincidenceHistogram, TagError> {
    let n_bins = spec.n_bins()?;
    let p = probe.timestamps();
    let n_chunks = (rayon::current_num_threads() * 4).max(1);
    let chunk = (p.len() / n_chunks + 1).max(1);
    let partials: Vec<Vec<u64>> = p
        .par_chunks(chunk)
        .map(|slice| {
            let mut counts = vec![0u64; n_bins];
            fill_counts(slice, conjugate.timestamps(), spec, &mut counts);
            counts
        })
        .collect();
    let mut counts = vec![0u64; n_bins];
    for part in partials {
        for (c, v) in counts.iter_mut().zip(part) {
            *c += v;
        }
    }
    Ok(CoincidenceHistogram {
        window_lo_ps: spec.window_lo_ps,
        window_hi_ps: spec.window_hi_ps,
        bin_width_ps: spec.bin_width_ps,
        counts,
        n_start_events: probe.len() as u64,
        n_stop_events: conjugate.len() as u64,
    })
}

fn fill_counts(probe: &[u64], conjugate: &[u64], spec: &HistogramSpec, counts: &mut [u64]) {
    // τ = p − c ∈ [lo, hi)  ⇔  c ∈ (p − hi, p − lo]
    let lo = spec.window_lo_ps;
    let hi = spec.window_hi_ps;
    let bin = spec.bin_width_ps as i64;
    let mut start = 0usize; // first c with c > p − hi
    let mut end = 0usize; // first c with c > p − lo
    for &pt in probe {
        let pt = pt as i64;
        while start < conjugate.len() && (conjugate[start] as i64) <= pt - hi {
            start += 1;
        }
        if end < start {
            end = start;
        }
        while end < conjugate.len() && (conjugate[end] as i64) <= pt - lo {
            end += 1;
        }
        for &ct in &conjugate[start..end] {
            let tau = pt - ct as i64;
            let idx = ((tau - lo) / bin) as usize;
            counts[idx] += 1;
        }
    }
}

/// Start-stop histogram: probes in time order, each claiming the unconsumed
/// conjugate of smallest |τ| inside the window.
pub fn start_stop_histogram(
    probe: &TimeTagStream,
    conjugate: &TimeTagStream,
    spec: &HistogramSpec,
) -> Result<CoincidenceHistogram, TagError> {
    let n_bins = spec.n_bins()?;
    let mut counts = vec![0u64; n_bins];
    let lo = spec.window_lo_ps;
    let hi = spec.window_hi_ps;
    let bin = spec.bin_width_ps as i64;
    let c = conjugate.timestamps();
    let mut consumed = vec![false; c.len()];
    let mut start = 0usize;
    for &pt in probe.timestamps() {
        let pt = pt as i64;
        while start < c.len() && ((c[start] as i64) <= pt - hi || consumed[start]) {
            start += 1;
        }
        let mut best: Option<(usize, i64)> = None;
        let mut j = start;
        while j < c.len() && (c[j] as i64) <= pt - lo {
            if !consumed[j] {
                let tau = pt - c[j] as i64;
                if best.is_none_or(|(_, b)| tau.abs() < b.abs()) {
                    best = Some((j, tau));
                }
            }
            j += 1;
        }
        if let Some((idx, tau)) = best {
            consumed[idx] = true;
            counts[((tau - lo) / bin) as usize] += 1;
        }
    }
    Ok(CoincidenceHistogram {
        window_lo_ps: spec.window_lo_ps,
        window_hi_ps: spec.window_hi_ps,
        bin_width_ps: spec.bin_width_ps,
        counts,
        n_start_events: probe.len() as u64,
        n_stop_events: conjugate.len() as u64,
    })
}
