//! Two-channel photon time-tag streams and coincidence analysis.
//!
//! Timestamps are unsigned integer picoseconds end-to-end; no floating-point
//! time ever enters the hot path. Channel 0 is the probe, channel 1 the
//! conjugate.

pub mod coincidence;
pub mod deadtime;
pub mod io;

pub use coincidence::{
    coincidence_histogram, coincidence_histogram_parallel, start_stop_histogram, HistogramSpec,
    PairingMode,
};
pub use deadtime::apply_dead_time;
pub use io::{parse_csv, parse_ttag, write_csv, write_histogram_csv, write_ttag, ParsedStreams};

/// Detection channel identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Probe = 0,
    Conjugate = 1,
}

impl Channel {
    pub fn index(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for Channel {
    type Error = TagError;

    fn try_from(v: u8) -> Result<Self, TagError> {
        match v {
            0 => Ok(Channel::Probe),
            1 => Ok(Channel::Conjugate),
            other => Err(TagError::InvalidChannel(other)),
        }
    }
}

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeTag {
    pub timestamp_ps: u64,
    pub channel: Channel,
}

/// Sorted timestamps of one detection channel.
///
/// Invariants: non-decreasing timestamps, all ≤ the acquisition duration,
/// and every timestamp fits in i64 so delay arithmetic stays exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagStream {
    channel: Channel,
    timestamps: Vec<u64>,
    acquisition_duration_ps: u64,
}

/// Largest representable timestamp (delays are computed in i64).
pub const MAX_TIMESTAMP_PS: u64 = i64::MAX as u64;

impl TimeTagStream {
    /// Build from already-sorted timestamps.
    pub fn new(
        channel: Channel,
        timestamps: Vec<u64>,
        acquisition_duration_ps: u64,
    ) -> Result<Self, TagError> {
        if let Some(&last) = timestamps.last() {
            if last > acquisition_duration_ps {
                return Err(TagError::BeyondDuration {
                    timestamp_ps: last,
                    duration_ps: acquisition_duration_ps,
                });
            }
        }
        for w in timestamps.windows(2) {
            if w[1] < w[0] {
                return Err(TagError::Unsorted);
            }
        }
        if timestamps.iter().any(|&t| t > MAX_TIMESTAMP_PS) {
            return Err(TagError::TimestampOverflow);
        }
        Ok(TimeTagStream {
            channel,
            timestamps,
            acquisition_duration_ps,
        })
    }

    /// Build from possibly unsorted timestamps; returns how many were out of
    /// order (a data-quality warning counter, not an error).
    pub fn from_unsorted(
        channel: Channel,
        mut timestamps: Vec<u64>,
        acquisition_duration_ps: u64,
    ) -> Result<(Self, u64), TagError> {
        let out_of_order = timestamps.windows(2).filter(|w| w[1] < w[0]).count() as u64;
        if out_of_order > 0 {
            timestamps.sort_unstable();
        }
        let stream = Self::new(channel, timestamps, acquisition_duration_ps)?;
        Ok((stream, out_of_order))
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn acquisition_duration_ps(&self) -> u64 {
        self.acquisition_duration_ps
    }

    /// Mean rate over the acquisition (Hz).
    pub fn mean_rate_hz(&self) -> f64 {
        if self.acquisition_duration_ps == 0 {
            return 0.0;
        }
        self.timestamps.len() as f64 / (self.acquisition_duration_ps as f64 * 1e-12)
    }

    /// Mean inter-arrival time (ps), if there are at least two events.
    pub fn mean_interarrival_ps(&self) -> Option<f64> {
        if self.timestamps.len() < 2 {
            return None;
        }
        let span = (self.timestamps[self.timestamps.len() - 1] - self.timestamps[0]) as f64;
        Some(span / (self.timestamps.len() - 1) as f64)
    }
}

/// Coincidence histogram over a half-open delay window [lo, hi).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceHistogram {
    pub window_lo_ps: i64,
    pub window_hi_ps: i64,
    pub bin_width_ps: u64,
    pub counts: Vec<u64>,
    pub n_start_events: u64,
    pub n_stop_events: u64,
}

impl CoincidenceHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Center delay of bin i (ps).
    pub fn bin_center_ps(&self, i: usize) -> i64 {
        self.window_lo_ps + i as i64 * self.bin_width_ps as i64 + self.bin_width_ps as i64 / 2
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Errors from stream construction and coincidence analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagError {
    Unsorted,
    TimestampOverflow,
    BeyondDuration { timestamp_ps: u64, duration_ps: u64 },
    InvalidChannel(u8),
    ZeroBinWidth,
    WindowNotDivisible { window_ps: i64, bin_ps: u64 },
    EmptyWindow,
}

impl std::fmt::Display for TagError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TagError::Unsorted => write!(f, "timestamps are not sorted"),
            TagError::TimestampOverflow => {
                write!(f, "timestamp exceeds {} ps", MAX_TIMESTAMP_PS)
            }
            TagError::BeyondDuration {
                timestamp_ps,
                duration_ps,
            } => write!(
                f,
                "timestamp {timestamp_ps} ps beyond acquisition duration {duration_ps} ps"
            ),
            TagError::InvalidChannel(ch) => write!(f, "channel {ch} is not 0 or 1"),
            TagError::ZeroBinWidth => write!(f, "bin width must be nonzero"),
            TagError::WindowNotDivisible { window_ps, bin_ps } => write!(
                f,
                "window of {window_ps} ps is not divisible by bin width {bin_ps} ps"
            ),
            TagError::EmptyWindow => write!(f, "delay window is empty"),
        }
    }
}

impl std::error::Error for TagError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_invariants() {
        let s = TimeTagStream::new(Channel::Probe, vec![1, 2, 2, 5], 10).unwrap();
        assert_eq!(s.len(), 4);
        assert!(TimeTagStream::new(Channel::Probe, vec![3, 1], 10).is_err());
        assert!(TimeTagStream::new(Channel::Probe, vec![11], 10).is_err());
        let (s, warn) = TimeTagStream::from_unsorted(Channel::Probe, vec![5, 1, 3], 10).unwrap();
        assert_eq!(warn, 1);
        assert_eq!(s.timestamps(), &[1, 3, 5]);
    }

    #[test]
    fn channel_conversion() {
        assert_eq!(Channel::try_from(0u8).unwrap(), Channel::Probe);
        assert_eq!(Channel::try_from(1u8).unwrap(), Channel::Conjugate);
        assert!(matches!(
            Channel::try_from(2u8),
            Err(TagError::InvalidChannel(2))
        ));
    }
}
