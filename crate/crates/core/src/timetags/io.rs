//! Time-tag file formats.
//!
//! CSV: one `timestamp_ps,channel` record per line, header optional.
//!
//! TTAG binary (little-endian): magic `TTAG`, u16 version = 1, u16 reserved,
//! u64 record count, then per record { u64 timestamp_ps, u8 channel, 3 pad
//! bytes }.

use std::io::{BufRead, Read, Write};

use super::{Channel, TimeTagStream, MAX_TIMESTAMP_PS};

pub const TTAG_MAGIC: [u8; 4] = *b"TTAG";
pub const TTAG_VERSION: u16 = 1;

/// Both channels of a parsed file plus the out-of-order warning counter.
#[derive(Debug, Clone)]
pub struct ParsedStreams {
    pub probe: TimeTagStream,
    pub conjugate: TimeTagStream,
    pub out_of_order: u64,
}

/// I/O and format errors, with line numbers for text input.
#[derive(Debug)]
pub enum FormatError {
    Io(std::io::Error),
    NonNumeric { line: usize, field: String },
    MissingField { line: usize },
    BadChannel { line: usize, value: String },
    TimestampOverflow { line: usize },
    BadMagic { found: [u8; 4] },
    UnsupportedVersion { found: u16 },
    Truncated { expected_records: u64, got: u64 },
    InvalidChannelByte { record: u64, value: u8 },
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "i/o error: {e}"),
            FormatError::NonNumeric { line, field } => {
                write!(f, "line {line}: non-numeric field {field:?}")
            }
            FormatError::MissingField { line } => {
                write!(f, "line {line}: expected timestamp_ps,channel")
            }
            FormatError::BadChannel { line, value } => {
                write!(f, "line {line}: channel {value:?} is not 0 or 1")
            }
            FormatError::TimestampOverflow { line } => {
                write!(f, "line {line}: timestamp overflows {MAX_TIMESTAMP_PS} ps")
            }
            FormatError::BadMagic { found } => {
                write!(f, "bad magic {found:02x?}, expected \"TTAG\"")
            }
            FormatError::UnsupportedVersion { found } => {
                write!(f, "unsupported TTAG version {found}")
            }
            FormatError::Truncated {
                expected_records,
                got,
            } => write!(
                f,
                "truncated TTAG file: header promises {expected_records} records, got {got}"
            ),
            FormatError::InvalidChannelByte { record, value } => {
                write!(f, "record {record}: channel byte {value} is not 0 or 1")
            }
        }
    }
}

impl std::error::Error for FormatError {}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e)
    }
}

fn assemble(
    mut probe: Vec<u64>,
    mut conjugate: Vec<u64>,
) -> Result<ParsedStreams, FormatError> {
    let mut out_of_order = 0;
    for v in [&mut probe, &mut conjugate] {
        out_of_order += v.windows(2).filter(|w| w[1] < w[0]).count() as u64;
        if out_of_order > 0 {
            v.sort_unstable();
        }
    }
    // Duration: one past the last event so every event lies in [0, T).
    let max_ts = probe
        .last()
        .copied()
        .unwrap_or(0)
        .max(conjugate.last().copied().unwrap_or(0));
    let duration = if probe.is_empty() && conjugate.is_empty() {
        0
    } else {
        max_ts + 1
    };
    Ok(ParsedStreams {
        probe: TimeTagStream::new(Channel::Probe, probe, duration).expect("sorted by construction"),
        conjugate: TimeTagStream::new(Channel::Conjugate, conjugate, duration)
            .expect("sorted by construction"),
        out_of_order,
    })
}

/// Parse CSV time tags; header line optional, blank lines ignored.
pub fn parse_csv<R: BufRead>(reader: R) -> Result<ParsedStreams, FormatError> {
    let mut probe = Vec::new();
    let mut conjugate = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 && trimmed.starts_with("timestamp_ps") {
            continue;
        }
        let mut fields = trimmed.split(',');
        let ts_field = fields.next().ok_or(FormatError::MissingField { line: lineno })?;
        let ch_field = fields
            .next()
            .ok_or(FormatError::MissingField { line: lineno })?
            .trim();
        let ts: u64 = ts_field.trim().parse().map_err(|_| FormatError::NonNumeric {
            line: lineno,
            field: ts_field.trim().to_string(),
        })?;
        if ts > MAX_TIMESTAMP_PS {
            return Err(FormatError::TimestampOverflow { line: lineno });
        }
        match ch_field {
            "0" => probe.push(ts),
            "1" => conjugate.push(ts),
            other => {
                return Err(FormatError::BadChannel {
                    line: lineno,
                    value: other.to_string(),
                })
            }
        }
    }
    assemble(probe, conjugate)
}

/// Parse the TTAG binary format.
pub fn parse_ttag<R: Read>(mut reader: R) -> Result<ParsedStreams, FormatError> {
    let mut header = [0u8; 16];
    reader.read_exact(&mut header).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            FormatError::BadMagic {
                found: [0, 0, 0, 0],
            }
        } else {
            FormatError::Io(e)
        }
    })?;
    if header[0..4] != TTAG_MAGIC {
        return Err(FormatError::BadMagic {
            found: [header[0], header[1], header[2], header[3]],
        });
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != TTAG_VERSION {
        return Err(FormatError::UnsupportedVersion { found: version });
    }
    let record_count = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let mut probe = Vec::new();
    let mut conjugate = Vec::new();
    let mut record = [0u8; 12];
    for i in 0..record_count {
        if let Err(e) = reader.read_exact(&mut record) {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                return Err(FormatError::Truncated {
                    expected_records: record_count,
                    got: i,
                });
            }
            return Err(FormatError::Io(e));
        }
        let ts = u64::from_le_bytes(record[0..8].try_into().unwrap());
        if ts > MAX_TIMESTAMP_PS {
            return Err(FormatError::TimestampOverflow {
                line: i as usize + 1,
            });
        }
        match record[8] {
            0 => probe.push(ts),
            1 => conjugate.push(ts),
            other => {
                return Err(FormatError::InvalidChannelByte {
                    record: i,
                    value: other,
                })
            }
        }
    }
    assemble(probe, conjugate)
}

/// Write both channels as CSV, merged in time order, with the header line.
pub fn write_csv<W: Write>(
    mut w: W,
    probe: &TimeTagStream,
    conjugate: &TimeTagStream,
) -> std::io::Result<()> {
    writeln!(w, "timestamp_ps,channel")?;
    for (ts, ch) in merge_tagged(probe, conjugate) {
        writeln!(w, "{ts},{ch}")?;
    }
    Ok(())
}

/// Write both channels in the TTAG binary format, merged in time order.
pub fn write_ttag<W: Write>(
    mut w: W,
    probe: &TimeTagStream,
    conjugate: &TimeTagStream,
) -> std::io::Result<()> {
    let n = (probe.len() + conjugate.len()) as u64;
    w.write_all(&TTAG_MAGIC)?;
    w.write_all(&TTAG_VERSION.to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    let mut record = [0u8; 12];
    for (ts, ch) in merge_tagged(probe, conjugate) {
        record[0..8].copy_from_slice(&ts.to_le_bytes());
        record[8] = ch;
        w.write_all(&record)?;
    }
    Ok(())
}

/// Histogram CSV: `tau_ps,counts`.
pub fn write_histogram_csv<W: Write>(
    mut w: W,
    hist: &super::CoincidenceHistogram,
) -> std::io::Result<()> {
    writeln!(w, "tau_ps,counts")?;
    for (i, c) in hist.counts.iter().enumerate() {
        writeln!(w, "{},{}", hist.bin_center_ps(i), c)?;
    }
    Ok(())
}

fn merge_tagged<'a>(
    probe: &'a TimeTagStream,
    conjugate: &'a TimeTagStream,
) -> impl Iterator<Item = (u64, u8)> + 'a {
    let mut pi = 0;
    let mut ci = 0;
    let p = probe.timestamps();
    let c = conjugate.timestamps();
    std::iter::from_fn(move || {
        if pi < p.len() && (ci >= c.len() || p[pi] <= c[ci]) {
            pi += 1;
            Some((p[pi - 1], 0))
        } else if ci < c.len() {
            ci += 1;
            Some((c[ci - 1], 1))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn csv_basic_parse() {
        let parsed = parse_csv(Cursor::new("100,0\n250,1\n")).unwrap();
        assert_eq!(parsed.probe.timestamps(), &[100]);
        assert_eq!(parsed.conjugate.timestamps(), &[250]);
        assert_eq!(parsed.out_of_order, 0);
        assert_eq!(parsed.probe.acquisition_duration_ps(), 251);
    }

    #[test]
    fn csv_empty_and_header_only() {
        let parsed = parse_csv(Cursor::new("")).unwrap();
        assert!(parsed.probe.is_empty() && parsed.conjugate.is_empty());
        assert_eq!(parsed.probe.acquisition_duration_ps(), 0);
        let parsed = parse_csv(Cursor::new("timestamp_ps,channel\n")).unwrap();
        assert!(parsed.probe.is_empty());
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = parse_csv(Cursor::new("abc,0\n")).unwrap_err();
        assert!(matches!(err, FormatError::NonNumeric { line: 1, .. }), "{err}");
        let err = parse_csv(Cursor::new("10,0\n20,7\n")).unwrap_err();
        assert!(matches!(err, FormatError::BadChannel { line: 2, .. }));
        let err = parse_csv(Cursor::new("10\n")).unwrap_err();
        assert!(matches!(err, FormatError::MissingField { line: 1 }));
        let big = format!("{},0\n", u64::MAX);
        let err = parse_csv(Cursor::new(big)).unwrap_err();
        assert!(matches!(err, FormatError::TimestampOverflow { line: 1 }));
    }

    #[test]
    fn csv_out_of_order_sorted_with_warning() {
        let parsed = parse_csv(Cursor::new("300,0\n100,0\n200,1\n")).unwrap();
        assert_eq!(parsed.out_of_order, 1);
        assert_eq!(parsed.probe.timestamps(), &[100, 300]);
    }

    #[test]
    fn ttag_roundtrip_matches_csv() {
        let csv = "100,0\n250,1\n300,0\n301,1\n";
        let from_csv = parse_csv(Cursor::new(csv)).unwrap();
        let mut buf = Vec::new();
        write_ttag(&mut buf, &from_csv.probe, &from_csv.conjugate).unwrap();
        let from_bin = parse_ttag(Cursor::new(&buf)).unwrap();
        assert_eq!(from_bin.probe, from_csv.probe);
        assert_eq!(from_bin.conjugate, from_csv.conjugate);
    }

    #[test]
    fn ttag_header_only() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"TTAG");
        buf.extend_from_slice(&1u16.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&0u64.to_le_bytes());
        let parsed = parse_ttag(Cursor::new(&buf)).unwrap();
        assert!(parsed.probe.is_empty() && parsed.conjugate.is_empty());
    }

    #[test]
    fn ttag_distinct_errors() {
        let err = parse_ttag(Cursor::new(b"XXXXaaaaaaaaaaaa".to_vec())).unwrap_err();
        assert!(matches!(err, FormatError::BadMagic { found } if &found == b"XXXX"));

        let mut buf = Vec::new();
        buf.extend_from_slice(b"TTAG");
        buf.extend_from_slice(&9u16.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&0u64.to_le_bytes());
        let err = parse_ttag(Cursor::new(&buf)).unwrap_err();
        assert!(matches!(err, FormatError::UnsupportedVersion { found: 9 }));

        let mut buf = Vec::new();
        buf.extend_from_slice(b"TTAG");
        buf.extend_from_slice(&1u16.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&2u64.to_le_bytes());
        buf.extend_from_slice(&[0u8; 12]); // only one of two records
        let err = parse_ttag(Cursor::new(&buf)).unwrap_err();
        assert!(matches!(
            err,
            FormatError::Truncated {
                expected_records: 2,
                got: 1
            }
        ));
    }
}
