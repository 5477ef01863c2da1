//! Little-endian primitives shared by the MLCW and BGKD formats.

use crate::error::FormatError;

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u32) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u32(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.f64(*x);
        }
    }

    pub fn len_u32(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("length exceeds u32"));
    }

    /// Appends the CRC32 of everything written so far.
    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks magic and version, and sets up reading of the body (the bytes
    /// between the version and the trailing CRC). The CRC itself is verified
    /// by [`Reader::finish`].
    pub fn open(
        bytes: &'a [u8],
        magic: &[u8; 4],
        version: u32,
    ) -> Result<(Self, &'a [u8]), FormatError> {
        if bytes.len() < 4 {
            return Err(FormatError::Truncated("magic"));
        }
        let found: [u8; 4] = bytes[..4].try_into().unwrap();
        if &found != magic {
            return Err(FormatError::BadMagic { expected: *magic, found });
        }
        if bytes.len() < 12 {
            return Err(FormatError::Truncated("header"));
        }
        let v = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if v != version {
            return Err(FormatError::Version { expected: version, found: v });
        }
        let split = bytes.len() - 4;
        Ok((Self { body: &bytes[..split], pos: 8 }, &bytes[split..]))
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).ok_or(FormatError::Truncated(what))?;
        if end > self.body.len() {
            return Err(FormatError::Truncated(what));
        }
        let s = &self.body[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self, what: &'static str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn u64(&mut self, what: &'static str) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub fn f64(&mut self, what: &'static str) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub fn finite(&mut self, what: &'static str) -> Result<f64, FormatError> {
        let v = self.f64(what)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FormatError::NonFinite(what))
        }
    }

    /// `n` finite values; the length is checked against the remaining bytes
    /// before allocating.
    pub fn finite_vec(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, FormatError> {
        if n.saturating_mul(8) > self.body.len() - self.pos {
            return Err(FormatError::Truncated(what));
        }
        (0..n).map(|_| self.finite(what)).collect()
    }

    /// Requires the body to be fully consumed and the CRC to match.
    pub fn finish(self, crc: &[u8]) -> Result<(), FormatError> {
        if self.pos != self.body.len() {
            return Err(FormatError::Invalid(format!(
                "{} unexpected trailing bytes",
                self.body.len() - self.pos
            )));
        }
        let stored = u32::from_le_bytes(crc.try_into().unwrap());
        let computed = crc32fast::hash(self.body);
        if stored != computed {
            return Err(FormatError::Checksum { stored, computed });
        }
        Ok(())
    }
}
