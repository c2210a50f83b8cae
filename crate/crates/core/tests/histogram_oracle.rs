//! Coincidence engine vs the O(N·M) brute-force oracle, plus the stream
//! property tests.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twinbeam_core::timetags::{
    apply_dead_time, coincidence_histogram, coincidence_histogram_parallel, Channel,
    HistogramSpec, TimeTagStream,
};

/// Brute force: check every pair, no sorting assumptions, no sliding state.
fn brute_force(probe: &[u64], conjugate: &[u64], spec: &HistogramSpec) -> Vec<u64> {
    let n_bins = ((spec.window_hi_ps - spec.window_lo_ps) / spec.bin_width_ps as i64) as usize;
    let mut counts = vec![0u64; n_bins];
    for &p in probe {
        for &c in conjugate {
            let tau = p as i64 - c as i64;
            if tau >= spec.window_lo_ps && tau < spec.window_hi_ps {
                counts[((tau - spec.window_lo_ps) / spec.bin_width_ps as i64) as usize] += 1;
            }
        }
    }
    counts
}

fn random_stream(rng: &mut ChaCha8Rng, n: usize, span_ps: u64, channel: Channel) -> TimeTagStream {
    let ts: Vec<u64> = (0..n).map(|_| rng.random_range(0..span_ps)).collect();
    let (s, _) = TimeTagStream::from_unsorted(channel, ts, span_ps).unwrap();
    s
}

#[test]
fn matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b1a5);
    for case in 0..60 {
        let n_p = rng.random_range(0..1500);
        let n_c = rng.random_range(0..1500);
        let span = rng.random_range(100_000..5_000_000);
        let p = random_stream(&mut rng, n_p, span, Channel::Probe);
        let c = random_stream(&mut rng, n_c, span, Channel::Conjugate);
        let bin = [50u64, 100, 250, 1000][case % 4];
        let half = bin as i64 * rng.random_range(1..200);
        let spec = HistogramSpec::symmetric(half, bin);
        let fast = coincidence_histogram(&p, &c, &spec).unwrap();
        let slow = brute_force(p.timestamps(), c.timestamps(), &spec);
        assert_eq!(fast.counts, slow, "case {case}");
        let par = coincidence_histogram_parallel(&p, &c, &spec).unwrap();
        assert_eq!(par.counts, slow, "parallel case {case}");
    }
}

#[test]
fn edge_cases_match_brute_force() {
    let spec = HistogramSpec::default();
    let empty = TimeTagStream::new(Channel::Probe, vec![], 0).unwrap();
    let single = TimeTagStream::new(Channel::Conjugate, vec![500], 1000).unwrap();
    let h = coincidence_histogram(&empty, &single, &spec).unwrap();
    assert_eq!(h.total_counts(), 0);

    // all-simultaneous: every pair lands in the tau = 0 bin
    let sim_p = TimeTagStream::new(Channel::Probe, vec![77_777; 300], 100_000).unwrap();
    let sim_c = TimeTagStream::new(Channel::Conjugate, vec![77_777; 400], 100_000).unwrap();
    let h = coincidence_histogram(&sim_p, &sim_c, &spec).unwrap();
    assert_eq!(h.total_counts(), 300 * 400);
    assert_eq!(h.counts[120], 300 * 400); // bin containing tau = 0
    assert_eq!(
        brute_force(sim_p.timestamps(), sim_c.timestamps(), &spec),
        h.counts
    );
}

#[test]
fn throughput_at_least_ten_million_tags_per_second() {
    // performance contract, not correctness: sorted input at a realistic
    // MHz-scale flux (sub-pair-per-tag occupancy in the ±30 ns window)
    let n = 2_000_000usize;
    let p: Vec<u64> = (0..n as u64).map(|i| i * 167_000).collect();
    let c: Vec<u64> = (0..n as u64).map(|i| i * 167_000 + 3100).collect();
    let span = n as u64 * 167_000 + 10_000;
    let p = TimeTagStream::new(Channel::Probe, p, span).unwrap();
    let c = TimeTagStream::new(Channel::Conjugate, c, span).unwrap();
    let spec = HistogramSpec::default();
    let start = std::time::Instant::now();
    let h = coincidence_histogram(&p, &c, &spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(h.total_counts() > 0);
    let rate = 2.0 * n as f64 / secs;
    assert!(
        rate >= 1e7,
        "throughput {rate:.2e} tags/s below the 1e7 contract"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn histogram_symmetry_under_stream_exchange(
        mut p in proptest::collection::vec(0u64..800, 0..400),
        mut c in proptest::collection::vec(0u64..800, 0..400),
        half_bins in 1i64..40,
    ) {
        // Offsets keep every delay away from bin edges, so the half-open
        // edge effects (otherwise confined to the boundary bins) never
        // trigger and the mirror equality is exact on all bins.
        p.sort_unstable();
        c.sort_unstable();
        let p: Vec<u64> = p.into_iter().map(|v| v * 250 + 101).collect();
        let c: Vec<u64> = c.into_iter().map(|v| v * 250 + 30).collect();
        let bin = 250u64;
        let dur = 800 * 250 + 200;
        let spec = HistogramSpec::symmetric(half_bins * bin as i64, bin);
        let ps = TimeTagStream::new(Channel::Probe, p, dur).unwrap();
        let cs = TimeTagStream::new(Channel::Conjugate, c, dur).unwrap();
        let fwd = coincidence_histogram(&ps, &cs, &spec).unwrap();
        let rev = coincidence_histogram(&cs, &ps, &spec).unwrap();
        let n = fwd.counts.len();
        for i in 0..n {
            prop_assert_eq!(fwd.counts[i], rev.counts[n - 1 - i], "bin {}", i);
        }
    }

    #[test]
    fn dead_time_minimum_gap(
        mut ts in proptest::collection::vec(0u64..1_000_000, 0..600),
        dead in 0u64..50_000,
    ) {
        ts.sort_unstable();
        let s = TimeTagStream::new(Channel::Probe, ts, 1_000_000).unwrap();
        let out = apply_dead_time(&s, dead);
        for w in out.timestamps().windows(2) {
            prop_assert!(w[1] - w[0] >= dead);
        }
        // idempotent
        let twice = apply_dead_time(&out, dead);
        prop_assert_eq!(&twice, &out);
    }
}
