//! Little-endian wire format.
//!
//! Header: tag (1 byte), `n` (u32), `N` (u64). The low 7 bits of the tag hold
//! the backend (1 = LWE, 2 = leveled); bit 7 is the freshness flag.
//!
//! * LWE ciphertext: `a[0..n]`, `b` as u64 words.
//! * Leveled ciphertext: `n = 0`, then value (i64), depth, op count.
//! * Key file: header (fresh bit clear) followed by the `n` key words.

use super::{BackendKind, BackendParams, Body, Ciphertext, SecretKey};
use crate::error::{Error, Result};

const FRESH_BIT: u8 = 0x80;
const HEADER_LEN: usize = 13;

fn header(out: &mut Vec<u8>, tag: u8, n: usize, modulus: u64) {
    out.push(tag);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&modulus.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Wire(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(Error::Wire(format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }
}

pub fn serialize_ciphertext(c: &Ciphertext) -> Vec<u8> {
    let fresh = if c.fresh { FRESH_BIT } else { 0 };
    match &c.body {
        Body::Lwe { modulus, a, b } => {
            let mut out = Vec::with_capacity(HEADER_LEN + 8 * (a.len() + 1));
            header(&mut out, BackendKind::Lwe.tag() | fresh, a.len(), *modulus);
            for w in a.iter().chain(std::iter::once(b)) {
                out.extend_from_slice(&w.to_le_bytes());
            }
            out
        }
        Body::Leveled { modulus, value, depth, ops } => {
            let mut out = Vec::with_capacity(HEADER_LEN + 24);
            header(&mut out, BackendKind::Leveled.tag() | fresh, 0, *modulus);
            for w in [*value as u64, *depth as u64, *ops] {
                out.extend_from_slice(&w.to_le_bytes());
            }
            out
        }
    }
}

pub fn deserialize_ciphertext(bytes: &[u8]) -> Result<Ciphertext> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let tag = r.u8()?;
    let fresh = tag & FRESH_BIT != 0;
    let kind = BackendKind::from_tag(tag & !FRESH_BIT).ok_or_else(|| Error::Wire(format!("unknown tag {tag}")))?;
    let n = r.u32()? as usize;
    let modulus = r.u64()?;
    let body = match kind {
        BackendKind::Lwe => {
            let a = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            let b = r.u64()?;
            Body::Lwe { modulus, a, b }
        }
        BackendKind::Leveled => {
            if n != 0 {
                return Err(Error::Wire("leveled ciphertext with nonzero dimension".into()));
            }
            let value = r.u64()? as i64;
            let depth = u32::try_from(r.u64()?).map_err(|_| Error::Wire("depth overflow".into()))?;
            let ops = r.u64()?;
            Body::Leveled { modulus, value, depth, ops }
        }
    };
    r.finish()?;
    Ok(Ciphertext { body, fresh })
}

pub fn serialize_key(sk: &SecretKey) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * sk.len());
    header(&mut out, sk.params.kind().tag(), sk.len(), sk.params.plaintext_modulus());
    for w in sk.words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

/// Read a key file; the header must agree with `params`.
pub fn deserialize_key(bytes: &[u8], params: &BackendParams) -> Result<SecretKey> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let kind = BackendKind::from_tag(r.u8()?).ok_or_else(|| Error::Wire("unknown key tag".into()))?;
    let n = r.u32()? as usize;
    let modulus = r.u64()?;
    let expected_n = match params {
        BackendParams::Lwe(p) => p.n,
        BackendParams::Leveled(_) => 0,
    };
    if kind != params.kind() || n != expected_n || modulus != params.plaintext_modulus() {
        return Err(Error::Wire("key header does not match backend parameters".into()));
    }
    let s = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(SecretKey { params: params.clone(), s })
}
