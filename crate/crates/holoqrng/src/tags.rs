//! Time-tag event records and their on-disk binary format.
//!
//! A run of the instrument (real or simulated) is a stream of detection
//! events, each carrying a channel and a picosecond timestamp. Streams are
//! kept sorted by timestamp, ties broken by channel order A < B0 < B1.
//!
//! The file format is deliberately minimal:
//!
//! ```text
//! header, 16 bytes:  "QTAG" | version u16 LE | reserved u16 | record count u64 LE
//! record,  9 bytes:  channel u8 (0=A, 1=B0, 2=B1) | timestamp u64 LE (ps)
//! ```
//!
//! Parse failures report the byte offset of the offending record so a
//! damaged capture can be triaged with a hex dump.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// File magic, first four bytes of every tag file.
pub const MAGIC: [u8; 4] = *b"QTAG";
/// Current (and only) format version.
pub const FORMAT_VERSION: u16 = 1;

const HEADER_LEN: u64 = 16;
const RECORD_LEN: u64 = 9;

/// Detector channel: the herald arm A and the two splitter outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// Herald detector.
    A,
    /// Splitter output producing a 0 bit.
    B0,
    /// Splitter output producing a 1 bit.
    B1,
}

impl Channel {
    /// Wire encoding of the channel.
    pub fn code(self) -> u8 {
        match self {
            Channel::A => 0,
            Channel::B0 => 1,
            Channel::B1 => 2,
        }
    }

    /// Decodes a wire byte; `None` for unknown codes.
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Channel::A),
            1 => Some(Channel::B0),
            2 => Some(Channel::B1),
            _ => None,
        }
    }

    /// Human-readable channel name.
    pub fn label(self) -> &'static str {
        match self {
            Channel::A => "A",
            Channel::B0 => "B0",
            Channel::B1 => "B1",
        }
    }
}

/// One detection: a channel and a timestamp in picoseconds from run start.
///
/// Ordering is by timestamp, then channel (A < B0 < B1), matching the sort
/// order of emitted streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeTagEvent {
    /// Picoseconds from run start. Listed first so derived ordering sorts by
    /// time before channel.
    pub timestamp_ps: u64,
    /// Detector that fired.
    pub channel: Channel,
}

impl TimeTagEvent {
    /// Convenience constructor.
    pub fn new(channel: Channel, timestamp_ps: u64) -> Self {
        TimeTagEvent { timestamp_ps, channel }
    }
}

/// Failures reading or writing tag files.
#[derive(Debug, Error)]
pub enum TagIoError {
    /// Underlying filesystem failure.
    #[error("tag file I/O: {0}")]
    Io(#[from] std::io::Error),
    /// The file does not start with the QTAG magic.
    #[error("not a tag file: bad magic {found:02x?}")]
    BadMagic { found: [u8; 4] },
    /// The file is from a newer/unknown format revision.
    #[error("unsupported tag format version {0}")]
    UnsupportedVersion(u16),
    /// The file is shorter than a full header.
    #[error("tag file shorter than the {HEADER_LEN}-byte header")]
    ShortHeader,
    /// The file ends inside a record.
    #[error("tag file truncated mid-record at byte offset {offset}")]
    Truncated { offset: u64 },
    /// Bytes remain after the declared record count.
    #[error("{extra} trailing bytes after the declared {count} records (offset {offset})")]
    TrailingBytes { count: u64, extra: u64, offset: u64 },
    /// A record used a channel code outside {0, 1, 2}.
    #[error("unknown channel code {code} at byte offset {offset}")]
    UnknownChannel { code: u8, offset: u64 },
    /// Timestamps must be non-decreasing through the file.
    #[error("non-monotone timestamp at byte offset {offset}: {next} ps after {prev} ps")]
    NonMonotone { offset: u64, prev: u64, next: u64 },
    /// An in-memory stream handed to the writer was not sorted.
    #[error("event stream unsorted at index {index}: timestamps must be non-decreasing")]
    UnsortedStream { index: usize },
}

/// Serializes a sorted event stream to a writer in QTAG format.
pub fn write_tags<W: Write>(events: &[TimeTagEvent], writer: W) -> Result<(), TagIoError> {
    for (i, pair) in events.windows(2).enumerate() {
        if pair[1].timestamp_ps < pair[0].timestamp_ps {
            return Err(TagIoError::UnsortedStream { index: i + 1 });
        }
    }
    let mut w = BufWriter::new(writer);
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[0u8; 2])?;
    w.write_all(&(events.len() as u64).to_le_bytes())?;
    for event in events {
        w.write_all(&[event.channel.code()])?;
        w.write_all(&event.timestamp_ps.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Deserializes a QTAG stream, validating structure, channel codes and
/// timestamp monotonicity.
pub fn read_tags<R: Read>(reader: R) -> Result<Vec<TimeTagEvent>, TagIoError> {
    let mut bytes = Vec::new();
    BufReader::new(reader).read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN as usize {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(TagIoError::BadMagic { found: [bytes[0], bytes[1], bytes[2], bytes[3]] });
        }
        return Err(TagIoError::ShortHeader);
    }
    if bytes[..4] != MAGIC {
        return Err(TagIoError::BadMagic { found: [bytes[0], bytes[1], bytes[2], bytes[3]] });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(TagIoError::UnsupportedVersion(version));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));

    let body = (bytes.len() as u64) - HEADER_LEN;
    if body < count * RECORD_LEN {
        // Offset of the first record the file cannot fully hold.
        let complete = body / RECORD_LEN;
        return Err(TagIoError::Truncated { offset: HEADER_LEN + complete * RECORD_LEN });
    }
    if body > count * RECORD_LEN {
        return Err(TagIoError::TrailingBytes {
            count,
            extra: body - count * RECORD_LEN,
            offset: HEADER_LEN + count * RECORD_LEN,
        });
    }

    let mut events = Vec::with_capacity(count as usize);
    let mut prev_ts = 0u64;
    for i in 0..count {
        let offset = HEADER_LEN + i * RECORD_LEN;
        let record = &bytes[offset as usize..(offset + RECORD_LEN) as usize];
        let channel = Channel::from_code(record[0])
            .ok_or(TagIoError::UnknownChannel { code: record[0], offset })?;
        let timestamp_ps = u64::from_le_bytes(record[1..9].try_into().expect("8-byte slice"));
        if i > 0 && timestamp_ps < prev_ts {
            return Err(TagIoError::NonMonotone { offset, prev: prev_ts, next: timestamp_ps });
        }
        prev_ts = timestamp_ps;
        events.push(TimeTagEvent { timestamp_ps, channel });
    }
    Ok(events)
}

/// Writes a tag file at `path` (see [`write_tags`]).
pub fn write_tags_file<P: AsRef<Path>>(events: &[TimeTagEvent], path: P) -> Result<(), TagIoError> {
    write_tags(events, File::create(path)?)
}

/// Reads a tag file at `path` (see [`read_tags`]).
pub fn read_tags_file<P: AsRef<Path>>(path: P) -> Result<Vec<TimeTagEvent>, TagIoError> {
    read_tags(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_stream() -> Vec<TimeTagEvent> {
        vec![
            TimeTagEvent::new(Channel::A, 100),
            TimeTagEvent::new(Channel::B0, 100),
            TimeTagEvent::new(Channel::A, 2_500),
            TimeTagEvent::new(Channel::B1, 2_750),
            TimeTagEvent::new(Channel::B1, 9_000_000),
        ]
    }

    fn to_bytes(events: &[TimeTagEvent]) -> Vec<u8> {
        let mut buf = Vec::new();
        write_tags(events, &mut buf).unwrap();
        buf
    }

    #[test]
    fn channel_codes_round_trip() {
        for channel in [Channel::A, Channel::B0, Channel::B1] {
            assert_eq!(Channel::from_code(channel.code()), Some(channel));
        }
        assert_eq!(Channel::from_code(3), None);
    }

    #[test]
    fn events_order_by_time_then_channel() {
        let mut events = vec![
            TimeTagEvent::new(Channel::B1, 50),
            TimeTagEvent::new(Channel::A, 50),
            TimeTagEvent::new(Channel::B0, 10),
        ];
        events.sort();
        assert_eq!(
            events,
            vec![
                TimeTagEvent::new(Channel::B0, 10),
                TimeTagEvent::new(Channel::A, 50),
                TimeTagEvent::new(Channel::B1, 50),
            ]
        );
    }

    #[test]
    fn empty_stream_is_a_bare_header() {
        let bytes = to_bytes(&[]);
        assert_eq!(bytes.len(), 16);
        assert_eq!(&bytes[..4], b"QTAG");
        assert_eq!(read_tags(&bytes[..]).unwrap(), vec![]);
    }

    #[test]
    fn round_trip_preserves_every_record() {
        let events = sample_stream();
        let bytes = to_bytes(&events);
        assert_eq!(bytes.len() as u64, HEADER_LEN + 5 * RECORD_LEN);
        assert_eq!(read_tags(&bytes[..]).unwrap(), events);
    }

    #[test]
    fn writer_rejects_unsorted_streams() {
        let events =
            vec![TimeTagEvent::new(Channel::A, 100), TimeTagEvent::new(Channel::A, 50)];
        let mut buf = Vec::new();
        assert!(matches!(
            write_tags(&events, &mut buf),
            Err(TagIoError::UnsortedStream { index: 1 })
        ));
    }

    #[test]
    fn truncated_file_reports_first_incomplete_record_offset() {
        let bytes = to_bytes(&sample_stream());
        let err = read_tags(&bytes[..16 + 5]).unwrap_err();
        assert!(matches!(err, TagIoError::Truncated { offset: 16 }));
        // Cut inside the third record: two records parse, offset = 16 + 18.
        let err = read_tags(&bytes[..16 + 2 * 9 + 4]).unwrap_err();
        assert!(matches!(err, TagIoError::Truncated { offset: 34 }));
    }

    #[test]
    fn bad_magic_version_and_trailing_bytes_are_rejected() {
        let mut bytes = to_bytes(&sample_stream());
        bytes[0] = b'X';
        assert!(matches!(read_tags(&bytes[..]), Err(TagIoError::BadMagic { .. })));

        let mut bytes = to_bytes(&sample_stream());
        bytes[4] = 9;
        assert!(matches!(read_tags(&bytes[..]), Err(TagIoError::UnsupportedVersion(9))));

        let mut bytes = to_bytes(&sample_stream());
        bytes.push(0);
        assert!(matches!(
            read_tags(&bytes[..]),
            Err(TagIoError::TrailingBytes { count: 5, extra: 1, .. })
        ));

        assert!(matches!(read_tags(&b"QT"[..]), Err(TagIoError::ShortHeader)));
    }

    #[test]
    fn unknown_channel_and_non_monotone_timestamps_carry_offsets() {
        let mut bytes = to_bytes(&sample_stream());
        bytes[16 + 9] = 7; // corrupt the second record's channel byte
        assert!(matches!(
            read_tags(&bytes[..]),
            Err(TagIoError::UnknownChannel { code: 7, offset: 25 })
        ));

        let mut bytes = to_bytes(&sample_stream());
        // Zero out the last record's timestamp, breaking monotonicity.
        let last_ts = 16 + 4 * 9 + 1;
        bytes[last_ts..last_ts + 8].fill(0);
        assert!(matches!(
            read_tags(&bytes[..]),
            Err(TagIoError::NonMonotone { offset: 52, prev: 2_750, next: 0 })
        ));
    }

    #[test]
    fn file_helpers_round_trip() {
        let dir = std::env::temp_dir().join(format!("qtag-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("events.qtag");
        let events = sample_stream();
        write_tags_file(&events, &path).unwrap();
        assert_eq!(read_tags_file(&path).unwrap(), events);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
