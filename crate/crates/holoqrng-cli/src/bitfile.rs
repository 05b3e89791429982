//! Bit-string files in the two supported encodings: ASCII ('0'/'1' bytes,
//! newline-free) and packed binary (MSB-first within each byte, final
//! partial byte zero-padded, valid-bit count in a one-line sidecar).

use std::path::{Path, PathBuf};

use crate::CliError;

/// Output encoding of an extracted bit string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BitFormat {
    Ascii,
    Packed,
}

/// Sidecar path of a packed file: the data path with `.nbits` appended.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".nbits");
    PathBuf::from(name)
}

/// Renders bit values as ASCII bytes.
pub fn encode_ascii(bits: &[u8]) -> Vec<u8> {
    bits.iter().map(|&b| b + b'0').collect()
}

/// Packs bit values MSB-first; returns the payload and the sidecar line.
pub fn encode_packed(bits: &[u8]) -> (Vec<u8>, String) {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &bit) in bits.iter().enumerate() {
        bytes[i / 8] |= bit << (7 - (i % 8));
    }
    (bytes, format!("{}\n", bits.len()))
}

/// Parses an ASCII bit file.
pub fn decode_ascii(bytes: &[u8]) -> Result<Vec<u8>, CliError> {
    bytes
        .iter()
        .enumerate()
        .map(|(i, &b)| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            other => Err(CliError::Validation(format!(
                "bit file: byte {i} is 0x{other:02x}, expected '0' or '1'"
            ))),
        })
        .collect()
}

/// Unpacks an MSB-first payload against its sidecar count, checking length
/// and zeroed padding.
pub fn decode_packed(bytes: &[u8], sidecar: &str) -> Result<Vec<u8>, CliError> {
    let count: usize = sidecar
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("sidecar: expected a bit count, got {sidecar:?}")))?;
    if bytes.len() != count.div_ceil(8) {
        return Err(CliError::Validation(format!(
            "packed file holds {} bytes but the sidecar declares {count} bits",
            bytes.len()
        )));
    }
    let bits: Vec<u8> =
        (0..count).map(|i| (bytes[i / 8] >> (7 - (i % 8))) & 1).collect();
    for i in count..bytes.len() * 8 {
        if (bytes[i / 8] >> (7 - (i % 8))) & 1 != 0 {
            return Err(CliError::Validation("packed file: nonzero padding bits".into()));
        }
    }
    Ok(bits)
}

/// Reads a bit file in the given format (packed requires its sidecar).
pub fn read_bits(path: &Path, format: BitFormat) -> Result<Vec<u8>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    match format {
        BitFormat::Ascii => decode_ascii(&bytes),
        BitFormat::Packed => {
            let sidecar = sidecar_path(path);
            let line = std::fs::read_to_string(&sidecar)
                .map_err(|e| CliError::Io(format!("{}: {e}", sidecar.display())))?;
            decode_packed(&bytes, &line)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_round_trips_and_rejects_foreign_bytes() {
        let bits = [1, 0, 1, 1, 0];
        let encoded = encode_ascii(&bits);
        assert_eq!(encoded, b"10110");
        assert_eq!(decode_ascii(&encoded).unwrap(), bits);
        assert!(decode_ascii(b"01\n").is_err());
    }

    #[test]
    fn packed_is_msb_first_with_zero_padding() {
        let bits = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let (bytes, sidecar) = encode_packed(&bits);
        assert_eq!(bytes, [0b1011_0010, 0b1100_0000]);
        assert_eq!(sidecar, "10\n");
        assert_eq!(decode_packed(&bytes, &sidecar).unwrap(), bits);
    }

    #[test]
    fn packed_decode_rejects_bad_lengths_and_dirty_padding() {
        assert!(decode_packed(&[0xff, 0x00], "3").is_err());
        assert!(decode_packed(&[0b1010_0100], "5").is_err());
        assert!(decode_packed(&[0b1010_0000], "bits").is_err());
        assert_eq!(decode_packed(&[0b1010_0000], "5").unwrap(), [1, 0, 1, 0, 0]);
        assert_eq!(decode_packed(&[], "0").unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn sidecar_path_appends_nbits() {
        assert_eq!(sidecar_path(Path::new("out/run.bits")), Path::new("out/run.bits.nbits"));
    }
}
