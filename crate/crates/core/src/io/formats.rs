//! Little-endian binary rasters: `MFLO` flow, `MDEP` depth, `MSEG` labels.
//!
//! Every file is a 4-byte magic, `u32` width, `u32` height, then one
//! row-major payload element per pixel (an interleaved `f32` pair for flow).

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::types::{DepthField, FlowField, LabelMap};

pub const FLOW_MAGIC: &[u8; 4] = b"MFLO";
pub const DEPTH_MAGIC: &[u8; 4] = b"MDEP";
pub const SEG_MAGIC: &[u8; 4] = b"MSEG";
const HEADER_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected magic {expected:?}")]
    BadMagic { path: PathBuf, expected: &'static str },
    #[error("{path}: expected {expected} bytes for the declared dimensions, found {got}")]
    SizeMismatch { path: PathBuf, expected: usize, got: usize },
}

fn encode(magic: &[u8; 4], width: usize, height: usize, elem: usize, payload: impl Fn(&mut Vec<u8>)) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + width * height * elem);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    payload(&mut out);
    out
}

/// Checks magic and total size; returns dimensions and the payload.
fn decode<'a>(
    bytes: &'a [u8],
    magic: &'static [u8; 4],
    elem: usize,
    path: &Path,
) -> Result<(usize, usize, &'a [u8]), FormatError> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        return Err(FormatError::BadMagic {
            path: path.to_path_buf(),
            expected: std::str::from_utf8(magic).unwrap_or("?"),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::SizeMismatch { path: path.to_path_buf(), expected: HEADER_LEN, got: bytes.len() });
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + width * height * elem;
    if bytes.len() != expected {
        return Err(FormatError::SizeMismatch { path: path.to_path_buf(), expected, got: bytes.len() });
    }
    Ok((width, height, &bytes[HEADER_LEN..]))
}

fn f32s(payload: &[u8]) -> impl Iterator<Item = f32> + '_ {
    payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()))
}

pub fn encode_flow(f: &FlowField) -> Vec<u8> {
    encode(FLOW_MAGIC, f.width, f.height, 8, |out| {
        for (u, v) in f.u.iter().zip(&f.v) {
            out.extend_from_slice(&u.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    })
}

pub fn decode_flow(bytes: &[u8], path: &Path) -> Result<FlowField, FormatError> {
    let (width, height, payload) = decode(bytes, FLOW_MAGIC, 8, path)?;
    let values: Vec<f32> = f32s(payload).collect();
    let u = values.iter().step_by(2).copied().collect();
    let v = values.iter().skip(1).step_by(2).copied().collect();
    Ok(FlowField { width, height, u, v })
}

pub fn encode_depth(d: &DepthField) -> Vec<u8> {
    encode(DEPTH_MAGIC, d.width, d.height, 4, |out| d.z.iter().for_each(|z| out.extend_from_slice(&z.to_le_bytes())))
}

pub fn decode_depth(bytes: &[u8], path: &Path) -> Result<DepthField, FormatError> {
    let (width, height, payload) = decode(bytes, DEPTH_MAGIC, 4, path)?;
    Ok(DepthField { width, height, z: f32s(payload).collect() })
}

pub fn encode_seg(m: &LabelMap) -> Vec<u8> {
    encode(SEG_MAGIC, m.width, m.height, 2, |out| m.labels.iter().for_each(|l| out.extend_from_slice(&l.to_le_bytes())))
}

pub fn decode_seg(bytes: &[u8], path: &Path) -> Result<LabelMap, FormatError> {
    let (width, height, payload) = decode(bytes, SEG_MAGIC, 2, path)?;
    let labels = payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    Ok(LabelMap { width, height, labels })
}

fn read(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    fs::write(path, bytes).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

pub fn read_flow(path: &Path) -> Result<FlowField, FormatError> {
    decode_flow(&read(path)?, path)
}

pub fn write_flow(path: &Path, f: &FlowField) -> Result<(), FormatError> {
    write(path, &encode_flow(f))
}

pub fn read_depth(path: &Path) -> Result<DepthField, FormatError> {
    decode_depth(&read(path)?, path)
}

pub fn write_depth(path: &Path, d: &DepthField) -> Result<(), FormatError> {
    write(path, &encode_depth(d))
}

pub fn read_seg(path: &Path) -> Result<LabelMap, FormatError> {
    decode_seg(&read(path)?, path)
}

pub fn write_seg(path: &Path, m: &LabelMap) -> Result<(), FormatError> {
    write(path, &encode_seg(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_layout_is_interleaved() {
        let f = FlowField { width: 2, height: 1, u: vec![1.0, 3.0], v: vec![2.0, 4.0] };
        let bytes = encode_flow(&f);
        assert_eq!(&bytes[..4], b"MFLO");
        assert_eq!(&bytes[4..12], &[2, 0, 0, 0, 1, 0, 0, 0]);
        let floats: Vec<f32> = f32s(&bytes[12..]).collect();
        assert_eq!(floats, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(decode_flow(&bytes, Path::new("x")).unwrap(), f);
    }

    #[test]
    fn truncated_flow_names_file_and_size() {
        let f = FlowField::zeros(3, 2);
        let mut bytes = encode_flow(&f);
        bytes.pop();
        let err = decode_flow(&bytes, Path::new("flow_0000.mflo")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("flow_0000.mflo") && msg.contains("60"), "{msg}");
    }

    #[test]
    fn wrong_magic_rejected() {
        let bytes = encode_depth(&DepthField { width: 1, height: 1, z: vec![1.0] });
        assert!(matches!(decode_seg(&bytes, Path::new("d")), Err(FormatError::BadMagic { .. })));
        assert!(matches!(decode_seg(b"MS", Path::new("d")), Err(FormatError::BadMagic { .. })));
    }

    #[test]
    fn seg_and_depth_round_trip() {
        let m = LabelMap { width: 3, height: 1, labels: vec![0, 7, 65535] };
        assert_eq!(decode_seg(&encode_seg(&m), Path::new("s")).unwrap(), m);
        let d = DepthField { width: 1, height: 2, z: vec![0.5, f32::MIN_POSITIVE] };
        let bytes = encode_depth(&d);
        assert_eq!(encode_depth(&decode_depth(&bytes, Path::new("d")).unwrap()), bytes);
    }
}
