//! Non-paralyzable dead-time filter.

use super::TimeTagStream;

/// Keep an event iff it arrives at least `dead_ps` after the last kept event
/// (non-paralyzable detector model). The first event is always kept.
pub fn apply_dead_time(stream: &TimeTagStream, dead_ps: u64) -> TimeTagStream {
    if dead_ps == 0 || stream.is_empty() {
        return stream.clone();
    }
    let mut kept = Vec::with_capacity(stream.len());
    let mut last: Option<u64> = None;
    for &t in stream.timestamps() {
        match last {
            Some(prev) if t < prev + dead_ps => {}
            _ => {
                kept.push(t);
                last = Some(t);
            }
        }
    }
    TimeTagStream::new(stream.channel(), kept, stream.acquisition_duration_ps())
        .expect("filtered subsequence keeps invariants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timetags::Channel;

    #[test]
    fn zero_dead_time_is_identity() {
        let s = TimeTagStream::new(Channel::Probe, vec![1, 5, 9], 10).unwrap();
        assert_eq!(apply_dead_time(&s, 0), s);
    }

    #[test]
    fn thirty_ns_example() {
        // [0, 10, 40, 45] ns with 30 ns dead time keeps [0, 40] ns.
        let ts: Vec<u64> = [0u64, 10_000, 40_000, 45_000].to_vec();
        let s = TimeTagStream::new(Channel::Probe, ts, 50_000).unwrap();
        let out = apply_dead_time(&s, 30_000);
        assert_eq!(out.timestamps(), &[0, 40_000]);
    }

    #[test]
    fn minimum_gap_holds() {
        let ts: Vec<u64> = (0..1000u64).map(|i| i * 7 % 911 * 13).collect();
        let (s, _) = TimeTagStream::from_unsorted(Channel::Probe, ts, 1_000_000).unwrap();
        let out = apply_dead_time(&s, 57);
        for w in out.timestamps().windows(2) {
            assert!(w[1] - w[0] >= 57);
        }
    }
}
