//! Field-level encoders shared by every model payload. A payload is an
//! ordered list of named fields; the binary and text formats differ only in
//! how each field is spelled.

use crate::csv::format_f64;
use crate::error::{Error, Result};

pub(crate) trait Encoder {
    fn count(&mut self, key: &str, v: usize);
    fn byte(&mut self, key: &str, v: u8);
    fn float(&mut self, key: &str, v: f64);
    fn floats(&mut self, key: &str, v: &[f64]);
}

pub(crate) trait Decoder {
    fn count(&mut self, key: &str) -> Result<usize>;
    fn byte(&mut self, key: &str) -> Result<u8>;
    fn float(&mut self, key: &str) -> Result<f64>;
    fn floats(&mut self, key: &str, len: usize) -> Result<Vec<f64>>;
    /// Absolute byte offset of the next unread field.
    fn offset(&self) -> usize;
    /// Fails if anything follows the last field.
    fn finish(&self) -> Result<()>;

    fn corrupt(&self, reason: impl Into<String>) -> Error {
        Error::CorruptModel { offset: self.offset(), reason: reason.into() }
    }
}

/// Little-endian: `u64` counts, `u8` bytes, `f64` by bit pattern. Keys are
/// not written.
pub(crate) struct BinaryEncoder<'a> {
    pub out: &'a mut Vec<u8>,
}

impl Encoder for BinaryEncoder<'_> {
    fn count(&mut self, _: &str, v: usize) {
        self.out.extend_from_slice(&(v as u64).to_le_bytes());
    }

    fn byte(&mut self, _: &str, v: u8) {
        self.out.push(v);
    }

    fn float(&mut self, _: &str, v: f64) {
        self.out.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    fn floats(&mut self, key: &str, v: &[f64]) {
        for &x in v {
            self.float(key, x);
        }
    }
}

pub(crate) struct BinaryDecoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> BinaryDecoder<'a> {
    /// `base` is the file offset of `bytes[0]`.
    pub fn new(bytes: &'a [u8], base: usize) -> Self {
        Self { bytes, pos: 0, base }
    }

    fn take(&mut self, n: usize, key: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.corrupt(format!("truncated while reading {key}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self, key: &str) -> Result<u64> {
        let b = self.take(8, key)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

impl Decoder for BinaryDecoder<'_> {
    fn count(&mut self, key: &str) -> Result<usize> {
        let at = self.offset();
        let v = self.u64(key)?;
        usize::try_from(v).map_err(|_| Error::CorruptModel { offset: at, reason: format!("{key} {v} is too large") })
    }

    fn byte(&mut self, key: &str) -> Result<u8> {
        Ok(self.take(1, key)?[0])
    }

    fn float(&mut self, key: &str) -> Result<f64> {
        Ok(f64::from_bits(self.u64(key)?))
    }

    fn floats(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let bytes = len
            .checked_mul(8)
            .filter(|&b| b <= self.bytes.len() - self.pos)
            .ok_or_else(|| self.corrupt(format!("truncated while reading {len} values of {key}")))?;
        let raw = self.take(bytes, key)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes")))).collect())
    }

    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn finish(&self) -> Result<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(self.corrupt(format!("{} trailing bytes", self.bytes.len() - self.pos)))
        }
    }
}

/// One `key = value [value...]` line per field, each terminated by `\n`.
/// Floats use the shortest decimal that parses back to the same bits.
pub(crate) struct TextEncoder<'a> {
    pub out: &'a mut Vec<u8>,
}

impl TextEncoder<'_> {
    fn line(&mut self, key: &str, values: impl Iterator<Item = String>) {
        self.out.extend_from_slice(key.as_bytes());
        self.out.extend_from_slice(b" =");
        for v in values {
            self.out.push(b' ');
            self.out.extend_from_slice(v.as_bytes());
        }
        self.out.push(b'\n');
    }
}

impl Encoder for TextEncoder<'_> {
    fn count(&mut self, key: &str, v: usize) {
        self.line(key, std::iter::once(v.to_string()));
    }

    fn byte(&mut self, key: &str, v: u8) {
        self.line(key, std::iter::once(v.to_string()));
    }

    fn float(&mut self, key: &str, v: f64) {
        self.line(key, std::iter::once(format_f64(v)));
    }

    fn floats(&mut self, key: &str, v: &[f64]) {
        self.line(key, v.iter().map(|&x| format_f64(x)));
    }
}

pub(crate) struct TextDecoder<'a> {
    text: &'a str,
    pos: usize,
    base: usize,
}

impl<'a> TextDecoder<'a> {
    pub fn new(bytes: &'a [u8], base: usize) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::CorruptModel {
            offset: base + e.valid_up_to(),
            reason: "text payload is not UTF-8".into(),
        })?;
        Ok(Self { text, pos: 0, base })
    }

    /// Values of the next line, which must be `key`.
    fn values(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let rest = &self.text[self.pos..];
        let Some(end) = rest.find('\n') else {
            return Err(self.corrupt(format!("truncated while reading {key}")));
        };
        let line = &rest[..end];
        let values = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(" ="))
            .filter(|r| r.is_empty() || r.starts_with(' '))
            .ok_or_else(|| self.corrupt(format!("expected field {key}")))?;
        let out = values.split(' ').filter(|s| !s.is_empty()).collect();
        self.pos += end + 1;
        Ok(out)
    }

    fn single(&mut self, key: &str) -> Result<&'a str> {
        let at = self.offset();
        let v = self.values(key)?;
        match v.as_slice() {
            [one] => Ok(one),
            _ => Err(Error::CorruptModel { offset: at, reason: format!("{key} needs exactly one value") }),
        }
    }
}

impl Decoder for TextDecoder<'_> {
    fn count(&mut self, key: &str) -> Result<usize> {
        let at = self.offset();
        let s = self.single(key)?;
        s.parse().map_err(|_| Error::CorruptModel { offset: at, reason: format!("bad {key} {s:?}") })
    }

    fn byte(&mut self, key: &str) -> Result<u8> {
        let at = self.offset();
        let s = self.single(key)?;
        s.parse().map_err(|_| Error::CorruptModel { offset: at, reason: format!("bad {key} {s:?}") })
    }

    fn float(&mut self, key: &str) -> Result<f64> {
        let at = self.offset();
        let s = self.single(key)?;
        s.parse().map_err(|_| Error::CorruptModel { offset: at, reason: format!("bad {key} {s:?}") })
    }

    fn floats(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let at = self.offset();
        let values = self.values(key)?;
        let bad = |reason: String| Error::CorruptModel { offset: at, reason };
        if values.len() != len {
            return Err(bad(format!("{key} has {} values, expected {len}", values.len())));
        }
        values.iter().map(|s| s.parse().map_err(|_| bad(format!("bad value {s:?} in {key}")))).collect()
    }

    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn finish(&self) -> Result<()> {
        if self.pos == self.text.len() {
            Ok(())
        } else {
            Err(self.corrupt("trailing data after last field"))
        }
    }
}
