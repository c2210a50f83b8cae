//! Bootstrap uncertainty for Mandel-Q.
//!
//! Resamples the bins with replacement. Because Q only depends on how many
//! bins hold each count value, one resample is a multinomial draw over the
//! count-value histogram — O(distinct values) per iteration, which is what
//! makes 10⁴ iterations over 10⁷ bins practical.
//!
//! PRNG: ChaCha8. Iteration i draws from an independent stream seeded by
//! (master seed, i), so iterations can run in any order on any number of
//! workers; results are reduced in iteration order, making q_std
//! bit-identical across thread counts for a fixed seed (per rand_distr
//! version).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::{bin_counts, mandel_q, BinnedCounts, CountingError, MandelResult};
use crate::timetags::TimeTagStream;

fn iteration_rng(master_seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&iteration.to_le_bytes());
    seed[16..24].copy_from_slice(b"tbQboot\0");
    ChaCha8Rng::from_seed(seed)
}

/// Count-value histogram of the bins: (value, multiplicity).
fn value_histogram(binned: &BinnedCounts) -> Vec<(u32, u64)> {
    let max = binned.counts().iter().copied().max().unwrap_or(0) as usize;
    let mut freq = vec![0u64; max + 1];
    for &c in binned.counts() {
        freq[c as usize] += 1;
    }
    freq.into_iter()
        .enumerate()
        .filter(|&(_, n)| n > 0)
        .map(|(v, n)| (v as u32, n))
        .collect()
}

/// One resampled Q: multinomial draw over the value histogram via chained
/// binomials. Returns None when the resample is all zeros (Q undefined).
fn resample_q(hist: &[(u32, u64)], n_bins: u64, rng: &mut ChaCha8Rng) -> Option<f64> {
    let mut remaining = n_bins;
    let mut prob_left = 1.0f64;
    let mut sum = 0u64;
    let mut sum_sq = 0u128;
    for (i, &(value, mult)) in hist.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let draw = if i + 1 == hist.len() {
            remaining
        } else {
            let p = (mult as f64 / n_bins as f64) / prob_left;
            let b = Binomial::new(remaining, p.clamp(0.0, 1.0)).expect("p in [0,1]");
            b.sample(rng)
        };
        sum += draw * value as u64;
        sum_sq += (draw as u128) * (value as u128) * (value as u128);
        remaining -= draw;
        prob_left -= mult as f64 / n_bins as f64;
    }
    if sum == 0 {
        return None;
    }
    let n = n_bins as f64;
    let mean = sum as f64 / n;
    let var = sum_sq as f64 / n - mean * mean;
    Some((var - mean) / mean)
}

/// Mandel-Q with a bootstrap standard deviation from `iterations` resamples.
pub fn bootstrap_q(
    binned: &BinnedCounts,
    iterations: u64,
    seed: u64,
) -> Result<MandelResult, CountingError> {
    if iterations == 0 {
        return Err(CountingError::ZeroIterations);
    }
    let base = mandel_q(binned)?;
    let hist = value_histogram(binned);
    let n_bins = binned.n_bins() as u64;

    let qs: Vec<Option<f64>> = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = iteration_rng(seed, i);
            resample_q(&hist, n_bins, &mut rng)
        })
        .collect();

    // Reduce in iteration order; skipped all-zero resamples are excluded.
    let mut n = 0u64;
    let mut mean_acc = 0.0f64;
    for q in qs.iter().flatten() {
        n += 1;
        mean_acc += q;
    }
    let q_std = if n > 0 {
        let mean = mean_acc / n as f64;
        let mut var_acc = 0.0f64;
        for q in qs.iter().flatten() {
            var_acc += (q - mean) * (q - mean);
        }
        (var_acc / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(MandelResult {
        q_std: Some(q_std),
        iterations,
        ..base
    })
}

/// Mandel-Q as a function of bin width: one bootstrap result per width, in
/// input order.
pub fn bin_width_sweep(
    stream: &TimeTagStream,
    widths_ps: &[u64],
    iterations: u64,
    seed: u64,
) -> Result<Vec<(u64, MandelResult)>, CountingError> {
    widths_ps
        .iter()
        .map(|&w| {
            let binned = bin_counts(stream, w)?;
            let r = bootstrap_q(&binned, iterations, seed)?;
            Ok((w, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timetags::Channel;

    fn constant_stream() -> TimeTagStream {
        // one event per 100 ns bin, exactly
        let ts: Vec<u64> = (0..1000u64).map(|i| i * 100_000 + 50_000).collect();
        TimeTagStream::new(Channel::Probe, ts, 100_000_000).unwrap()
    }

    #[test]
    fn constant_counts_give_q_minus_one_sigma_zero() {
        let b = bin_counts(&constant_stream(), 100_000).unwrap();
        let r = bootstrap_q(&b, 500, 7).unwrap();
        assert_eq!(r.q, -1.0);
        assert_eq!(r.q_std, Some(0.0));
        assert_eq!(r.iterations, 500);
    }

    #[test]
    fn bootstrap_is_deterministic_per_seed() {
        let ts: Vec<u64> = (0..5000u64).map(|i| (i * i * 37 + i * 1013) % 10_000_000).collect();
        let (s, _) = TimeTagStream::from_unsorted(Channel::Probe, ts, 10_000_000).unwrap();
        let b = bin_counts(&s, 10_000).unwrap();
        let r1 = bootstrap_q(&b, 1000, 42).unwrap();
        let r2 = bootstrap_q(&b, 1000, 42).unwrap();
        assert_eq!(r1.q_std.unwrap().to_bits(), r2.q_std.unwrap().to_bits());
        let r3 = bootstrap_q(&b, 1000, 43).unwrap();
        assert_ne!(r1.q_std.unwrap().to_bits(), r3.q_std.unwrap().to_bits());
    }

    #[test]
    fn zero_iterations_rejected() {
        let b = bin_counts(&constant_stream(), 100_000).unwrap();
        assert!(matches!(
            bootstrap_q(&b, 0, 1),
            Err(CountingError::ZeroIterations)
        ));
    }

    #[test]
    fn sweep_preserves_input_order_and_flux() {
        let s = constant_stream();
        let widths = [50_000u64, 250_000, 500_000];
        let out = bin_width_sweep(&s, &widths, 200, 9).unwrap();
        assert_eq!(out.len(), 3);
        for ((w, r), &expect) in out.iter().zip(&widths) {
            assert_eq!(*w, expect);
            // flux conservation: mean * n_bins = events counted in the bins
            // (the 100 us record divides evenly into all three widths)
            let events = r.mean * r.n_bins as f64;
            assert!((events - 1000.0).abs() < 1e-6);
        }
    }
}
