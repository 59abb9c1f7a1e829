//! Binary vector persistence.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic   4 bytes  "MCVC"
//! version u32      1
//! dim     u32
//! count   u64
//! records count times:
//!   id_len u32, id bytes (UTF-8), dim * f32
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use super::DenseVectors;

const MAGIC: &[u8; 4] = b"MCVC";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic: not a vector file")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt file: {0}")]
    Corrupt(&'static str),
}

pub fn write_vectors<W: Write>(mut w: W, vectors: &DenseVectors) -> Result<(), PersistError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(vectors.dim() as u32).to_le_bytes())?;
    w.write_all(&(vectors.len() as u64).to_le_bytes())?;
    for id in vectors.ids() {
        let bytes = id.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        for &x in vectors.get(id).unwrap() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_vectors<R: Read>(mut r: R) -> Result<DenseVectors, PersistError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(PersistError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(PersistError::UnsupportedVersion(version));
    }
    let dim = read_u32(&mut r)? as usize;
    let count = read_u64(&mut r)?;
    let mut out = DenseVectors::new(dim);
    let mut buf = vec![0u8; dim * 4];
    for _ in 0..count {
        let id_len = read_u32(&mut r)? as usize;
        if id_len > 1 << 20 {
            return Err(PersistError::Corrupt("unreasonable id length"));
        }
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id)?;
        let id = String::from_utf8(id).map_err(|_| PersistError::Corrupt("id not UTF-8"))?;
        r.read_exact(&mut buf)?;
        let values: Vec<f32> = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(&id, &values);
    }
    Ok(out)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, PersistError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, PersistError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut v = DenseVectors::new(3);
        v.push("m1", &[1.0, -2.0, 0.5]);
        v.push("m2", &[0.0, 0.25, 4.0]);
        let mut buf = Vec::new();
        write_vectors(&mut buf, &v).unwrap();
        let back = read_vectors(buf.as_slice()).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn rejects_bad_magic() {
        let err = read_vectors(&b"NOPE\x01\x00\x00\x00"[..]).unwrap_err();
        assert!(matches!(err, PersistError::BadMagic));
    }

    #[test]
    fn rejects_future_version() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"MCVC");
        buf.extend_from_slice(&9u32.to_le_bytes());
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&0u64.to_le_bytes());
        let err = read_vectors(buf.as_slice()).unwrap_err();
        assert!(matches!(err, PersistError::UnsupportedVersion(9)));
    }

    #[test]
    fn truncated_file_is_io_error() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"MCVC");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&4u32.to_le_bytes());
        buf.extend_from_slice(&2u64.to_le_bytes());
        let err = read_vectors(buf.as_slice()).unwrap_err();
        assert!(matches!(err, PersistError::Io(_)));
    }
}
