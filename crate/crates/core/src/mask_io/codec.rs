//! Binary observation container.
//!
//! All integers are little-endian. Layout:
//!
//! | field            | type          | notes                                      |
//! |------------------|---------------|--------------------------------------------|
//! | magic            | `[u8; 4]`     | `b"EIFO"`                                  |
//! | version          | `u8`          | `1`                                        |
//! | flags            | `u8`          | bit 0: reflection present; others zero     |
//! | width, height    | `u32`, `u32`  | image size in pixels                       |
//! | z_mm             | `f64`         | IEEE-754 bits                              |
//! | reflection x, y  | `f64`, `f64`  | only when flag bit 0 is set                |
//! | metadata_len     | `u32`         | byte length of the metadata document       |
//! | metadata         | UTF-8         | JSON object of string → string             |
//! | mask_count       | `u32`         |                                            |
//! | per mask         |               | repeated `mask_count` times                |
//! | ├ label          | `u32`         |                                            |
//! | ├ x0, y0, w, h   | `4 × u32`     | crop box                                   |
//! | ├ run_count      | `u32`         |                                            |
//! | └ runs           | `run_count × u32` | alternating clear/set lengths, row-major, first run is clear (may be 0); lengths sum to `w·h` |
//!
//! No trailing bytes are allowed.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{KnobMask, MaskError, Observation};
use crate::geometry::Pixel;

pub const MAGIC: [u8; 4] = *b"EIFO";
const VERSION: u8 = 1;
const FLAG_REFLECTION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("unexpected end of input")]
    Truncated,
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown flag bits {0:#04x}")]
    UnknownFlags(u8),
    #[error("invalid metadata document: {0}")]
    Metadata(String),
    #[error("run lengths sum to {actual}, expected {expected}")]
    RunLength { expected: u64, actual: u64 },
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("invalid observation: {0}")]
    Invalid(#[from] MaskError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("observation parse error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

/// Serializes an observation into the container format.
pub fn encode_observation(obs: &Observation) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    let flags = if obs.reflection().is_some() {
        FLAG_REFLECTION
    } else {
        0
    };
    out.push(flags);
    out.extend_from_slice(&obs.width().to_le_bytes());
    out.extend_from_slice(&obs.height().to_le_bytes());
    out.extend_from_slice(&obs.z_mm().to_bits().to_le_bytes());
    if let Some(r) = obs.reflection() {
        out.extend_from_slice(&r.x.to_bits().to_le_bytes());
        out.extend_from_slice(&r.y.to_bits().to_le_bytes());
    }
    let meta = serde_json::to_vec(obs.metadata()).expect("string map serializes");
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&(obs.masks().len() as u32).to_le_bytes());
    for m in obs.masks() {
        let (x0, y0, w, h) = m.bounds();
        for v in [m.label(), x0, y0, w, h] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let runs = run_lengths(m.bits());
        out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
        for r in runs {
            out.extend_from_slice(&r.to_le_bytes());
        }
    }
    out
}

fn run_lengths(bits: &[bool]) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for &b in bits {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    runs.push(len);
    runs
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.pos,
            kind,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ParseError> {
        if self.bytes.len() - self.pos < n {
            return Err(ParseError {
                offset: self.bytes.len(),
                kind: ParseErrorKind::Truncated,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ParseError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ParseError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64, ParseError> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(f64::from_bits(u64::from_le_bytes(a)))
    }
}

/// Parses a container produced by [`encode_observation`].
pub fn decode_observation(bytes: &[u8]) -> Result<Observation, ParseError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(ParseError {
            offset: 0,
            kind: ParseErrorKind::BadMagic,
        });
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(ParseError {
            offset: 4,
            kind: ParseErrorKind::UnsupportedVersion(version),
        });
    }
    let flags = r.u8()?;
    if flags & !FLAG_REFLECTION != 0 {
        return Err(ParseError {
            offset: 5,
            kind: ParseErrorKind::UnknownFlags(flags),
        });
    }
    let width = r.u32()?;
    let height = r.u32()?;
    let z_mm = r.f64()?;
    let reflection = if flags & FLAG_REFLECTION != 0 {
        let x = r.f64()?;
        let y = r.f64()?;
        Some(Pixel::new(x, y))
    } else {
        None
    };
    let meta_len = r.u32()? as usize;
    let meta_start = r.pos;
    let meta_bytes = r.take(meta_len)?;
    let metadata: BTreeMap<String, String> =
        serde_json::from_slice(meta_bytes).map_err(|e| ParseError {
            offset: meta_start,
            kind: ParseErrorKind::Metadata(e.to_string()),
        })?;
    let mask_count = r.u32()?;
    let mut masks = Vec::new();
    for _ in 0..mask_count {
        let mask_start = r.pos;
        let label = r.u32()?;
        let x0 = r.u32()?;
        let y0 = r.u32()?;
        let w = r.u32()?;
        let h = r.u32()?;
        let run_count = r.u32()?;
        let expected = w as u64 * h as u64;
        let mut bits = Vec::new();
        let mut total = 0u64;
        let mut value = false;
        for _ in 0..run_count {
            let len = r.u32()? as u64;
            total += len;
            if total > expected {
                return Err(r.err(ParseErrorKind::RunLength {
                    expected,
                    actual: total,
                }));
            }
            bits.extend(std::iter::repeat_n(value, len as usize));
            value = !value;
        }
        if total != expected {
            return Err(r.err(ParseErrorKind::RunLength {
                expected,
                actual: total,
            }));
        }
        let mask = KnobMask::from_bitmap(label, x0, y0, w, h, bits).map_err(|e| ParseError {
            offset: mask_start,
            kind: e.into(),
        })?;
        masks.push(mask);
    }
    if r.pos != bytes.len() {
        return Err(r.err(ParseErrorKind::Trailing(bytes.len() - r.pos)));
    }
    let mut obs =
        Observation::new(width, height, z_mm, reflection, masks).map_err(|e| ParseError {
            offset: 0,
            kind: e.into(),
        })?;
    obs.set_metadata(metadata);
    Ok(obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Observation {
        let m1 = KnobMask::from_pixels(1, [(10, 10), (11, 10), (10, 11)]).unwrap();
        let m2 = KnobMask::from_pixels(2, [(100, 50)]).unwrap();
        Observation::new(
            640,
            480,
            30.0,
            Some(Pixel::new(321.5, 239.25)),
            vec![m1, m2],
        )
        .unwrap()
        .with_metadata("source", "test")
    }

    #[test]
    fn round_trips() {
        let obs = sample();
        assert_eq!(decode_observation(&encode_observation(&obs)).unwrap(), obs);
    }

    #[test]
    fn reflection_only_round_trips() {
        let obs = Observation::new(640, 480, 42.5, Some(Pixel::new(1.0, 2.0)), vec![]).unwrap();
        assert_eq!(decode_observation(&encode_observation(&obs)).unwrap(), obs);
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let bytes = encode_observation(&sample());
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            let err = decode_observation(&bytes[..cut]).unwrap_err();
            assert_eq!(err.kind, ParseErrorKind::Truncated, "cut at {cut}");
            assert_eq!(err.offset, cut);
        }
    }

    #[test]
    fn rejects_bad_magic_and_trailing() {
        let mut bytes = encode_observation(&sample());
        bytes.push(0);
        assert_eq!(
            decode_observation(&bytes).unwrap_err().kind,
            ParseErrorKind::Trailing(1)
        );
        bytes[0] = b'X';
        assert_eq!(
            decode_observation(&bytes).unwrap_err().kind,
            ParseErrorKind::BadMagic
        );
    }

    #[test]
    fn rejects_inconsistent_runs() {
        let obs = Observation::new(
            64,
            64,
            30.0,
            None,
            vec![KnobMask::from_pixels(0, [(1, 1), (2, 1)]).unwrap()],
        )
        .unwrap();
        let mut bytes = encode_observation(&obs);
        // Last u32 is the final run length; inflate it.
        let n = bytes.len();
        bytes[n - 4] = 9;
        let err = decode_observation(&bytes).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::RunLength { .. }));
    }

    fn arb_mask() -> impl Strategy<Value = KnobMask> {
        (0u32..600, 0u32..440, 1u32..40, 1u32..40, any::<u32>())
            .prop_flat_map(|(x0, y0, w, h, label)| {
                (
                    Just((x0, y0, w, h, label)),
                    proptest::collection::vec(any::<bool>(), (w * h) as usize),
                    0usize..(w * h) as usize,
                )
            })
            .prop_map(|((x0, y0, w, h, label), mut bits, forced)| {
                bits[forced] = true;
                KnobMask::from_bitmap(label, x0, y0, w, h, bits).unwrap()
            })
    }

    fn arb_observation() -> impl Strategy<Value = Observation> {
        (
            0.1f64..500.0,
            proptest::option::of((0.0f64..639.0, 0.0f64..479.0)),
            proptest::collection::vec(arb_mask(), 0..5),
            proptest::collection::btree_map("[a-z]{1,6}", "[ -~]{0,12}", 0..3),
        )
            .prop_map(|(z, refl, masks, meta)| {
                let mut obs =
                    Observation::new(640, 480, z, refl.map(|(x, y)| Pixel::new(x, y)), masks)
                        .unwrap();
                obs.set_metadata(meta);
                obs
            })
    }

    proptest! {
        #[test]
        fn codec_round_trip(obs in arb_observation()) {
            let bytes = encode_observation(&obs);
            let back = decode_observation(&bytes).unwrap();
            prop_assert_eq!(&back, &obs);
            prop_assert_eq!(encode_observation(&back), bytes);
        }
    }
}
