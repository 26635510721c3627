//! Tensor container format.
//!
//! ```text
//! "MCTGRID1"            8 bytes
//! header length         u32 little-endian
//! header                UTF-8 JSON {"dtype","shape","kind","meta"}
//! payload               row-major, dtype "f32le" or "u8"
//! ```
//!
//! Reference arithmetic is `f64`; payloads are stored as `f32`, so a
//! decode/encode cycle of a decoded file is byte-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dwf::{DigitalWavefrontSet, DwfMode};
use crate::error::{CoreError, Result};
use crate::field::Field;
use crate::grid::GridImage;
use crate::sinogram::Sinogram;

pub const MAGIC: &[u8; 8] = b"MCTGRID1";

/// Headers beyond this size are rejected before parsing.
pub const MAX_HEADER_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "f32le")]
    F32Le,
    #[serde(rename = "u8")]
    U8,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32Le => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Image,
    Sinogram,
    Dwf,
    Weights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub kind: Kind,
    #[serde(default)]
    pub meta: Value,
}

impl Header {
    fn element_count(&self) -> Result<usize> {
        self.shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| CoreError::Header("shape overflows".into()))
    }
}

/// Serialize header and payload into one buffer.
pub fn encode_container(header: &Header, payload: &[u8]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(header).map_err(|e| CoreError::Header(e.to_string()))?;
    let len = u32::try_from(json.len()).map_err(|_| CoreError::Header("header too large".into()))?;
    let mut out = Vec::with_capacity(12 + json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(payload);
    Ok(out)
}

/// Split a buffer into header and payload, checking the payload size.
pub fn decode_container(bytes: &[u8]) -> Result<(Header, &[u8])> {
    if bytes.len() < 12 {
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(CoreError::BadMagic);
        }
        return Err(CoreError::Header("truncated header length".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(CoreError::BadMagic);
    }
    let len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
    if len > MAX_HEADER_BYTES || 12 + len > bytes.len() {
        return Err(CoreError::Header(format!("header length {len} exceeds file")));
    }
    let header: Header =
        serde_json::from_slice(&bytes[12..12 + len]).map_err(|e| CoreError::Header(e.to_string()))?;
    let payload = &bytes[12 + len..];
    let expected = header
        .element_count()?
        .checked_mul(header.dtype.size())
        .ok_or_else(|| CoreError::Header("payload size overflows".into()))?;
    if payload.len() != expected {
        return Err(CoreError::Shape(format!("payload {} bytes, header implies {}", payload.len(), expected)));
    }
    Ok((header, payload))
}

fn f32_payload(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn read_f32_payload(payload: &[u8]) -> Result<Vec<f64>> {
    payload
        .chunks_exact(4)
        .enumerate()
        .map(|(i, c)| {
            let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CoreError::NonFinite(i))
            }
        })
        .collect()
}

fn expect_kind(header: &Header, kind: Kind, rank: usize) -> Result<()> {
    if header.kind != kind {
        return Err(CoreError::Header(format!("expected kind {kind:?}, found {:?}", header.kind)));
    }
    if header.shape.len() != rank {
        return Err(CoreError::Header(format!("{kind:?} needs rank {rank}, got {:?}", header.shape)));
    }
    Ok(())
}

fn meta_f64_list(meta: &Value, key: &str) -> Result<Vec<f64>> {
    meta.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| CoreError::Header(format!("meta.{key} missing")))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| CoreError::Header(format!("meta.{key} holds a non-number"))))
        .collect()
}

pub fn encode_image(image: &GridImage) -> Result<Vec<u8>> {
    let header = Header {
        dtype: Dtype::F32Le,
        shape: vec![image.n2(), image.n1()],
        kind: Kind::Image,
        meta: json!({ "domain": [-1.0, 1.0] }),
    };
    encode_container(&header, &f32_payload(image.values()))
}

pub fn decode_image(bytes: &[u8]) -> Result<GridImage> {
    let (header, payload) = decode_container(bytes)?;
    expect_kind(&header, Kind::Image, 2)?;
    if header.dtype != Dtype::F32Le {
        return Err(CoreError::Header("image payload must be f32le".into()));
    }
    let (n2, n1) = (header.shape[0], header.shape[1]);
    GridImage::new(n1, n2, read_f32_payload(payload)?)
}

pub fn encode_sinogram(sino: &Sinogram) -> Result<Vec<u8>> {
    let header = Header {
        dtype: Dtype::F32Le,
        shape: vec![sino.m2(), sino.m1()],
        kind: Kind::Sinogram,
        meta: json!({
            "detectors": sino.detectors(),
            "angles": sino.angles(),
            "mask": sino.mask(),
        }),
    };
    encode_container(&header, &f32_payload(sino.values()))
}

pub fn decode_sinogram(bytes: &[u8]) -> Result<Sinogram> {
    let (header, payload) = decode_container(bytes)?;
    expect_kind(&header, Kind::Sinogram, 2)?;
    if header.dtype != Dtype::F32Le {
        return Err(CoreError::Header("sinogram payload must be f32le".into()));
    }
    let (m2, m1) = (header.shape[0], header.shape[1]);
    let detectors = meta_f64_list(&header.meta, "detectors")?;
    let angles = meta_f64_list(&header.meta, "angles")?;
    let mask: Vec<bool> = header
        .meta
        .get("mask")
        .and_then(Value::as_array)
        .ok_or_else(|| CoreError::Header("meta.mask missing".into()))?
        .iter()
        .map(|v| v.as_bool().ok_or_else(|| CoreError::Header("meta.mask holds a non-boolean".into())))
        .collect::<Result<_>>()?;
    if detectors.len() != m1 || angles.len() != m2 {
        return Err(CoreError::Header("geometry does not match shape".into()));
    }
    let field = Field::from_vec(m1, m2, read_f32_payload(payload)?)?;
    Sinogram::new(field, detectors, angles, mask)
}

/// Which grid a wavefront set lives on; informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DwfDomain {
    Image,
    Sinogram,
}

impl DwfDomain {
    fn as_str(self) -> &'static str {
        match self {
            DwfDomain::Image => "image",
            DwfDomain::Sinogram => "sinogram",
        }
    }
}

pub fn encode_dwf(dwf: &DigitalWavefrontSet, domain: DwfDomain) -> Result<Vec<u8>> {
    let (dtype, payload, mode) = match dwf.mode() {
        DwfMode::Hard => (Dtype::U8, dwf.data().iter().map(|&v| (v > 0.5) as u8).collect(), "hard"),
        DwfMode::Soft => (Dtype::F32Le, f32_payload(dwf.data()), "soft"),
    };
    let header = Header {
        dtype,
        shape: vec![dwf.height(), dwf.width(), dwf.bins()],
        kind: Kind::Dwf,
        meta: json!({ "mode": mode, "domain": domain.as_str() }),
    };
    encode_container(&header, &payload)
}

pub fn decode_dwf(bytes: &[u8]) -> Result<(DigitalWavefrontSet, DwfDomain)> {
    let (header, payload) = decode_container(bytes)?;
    expect_kind(&header, Kind::Dwf, 3)?;
    let (height, width, bins) = (header.shape[0], header.shape[1], header.shape[2]);
    let mode = match header.meta.get("mode").and_then(Value::as_str) {
        Some("hard") => DwfMode::Hard,
        Some("soft") => DwfMode::Soft,
        other => return Err(CoreError::Header(format!("unknown dwf mode {other:?}"))),
    };
    let domain = match header.meta.get("domain").and_then(Value::as_str) {
        None | Some("image") => DwfDomain::Image,
        Some("sinogram") => DwfDomain::Sinogram,
        Some(other) => return Err(CoreError::Header(format!("unknown dwf domain {other}"))),
    };
    let data = match (mode, header.dtype) {
        (DwfMode::Hard, Dtype::U8) => payload
            .iter()
            .enumerate()
            .map(|(i, &b)| match b {
                0 => Ok(0.0),
                1 => Ok(1.0),
                _ => Err(CoreError::Invalid(format!("hard entry {i} = {b}"))),
            })
            .collect::<Result<Vec<_>>>()?,
        (DwfMode::Soft, Dtype::F32Le) => read_f32_payload(payload)?,
        _ => return Err(CoreError::Header("dtype does not match dwf mode".into())),
    };
    Ok((DigitalWavefrontSet::from_vec(width, height, bins, mode, data)?, domain))
}

/// Flat parameter vector with a free-form JSON description.
pub fn encode_weights(meta: Value, values: &[f64]) -> Result<Vec<u8>> {
    let header = Header { dtype: Dtype::F32Le, shape: vec![values.len()], kind: Kind::Weights, meta };
    encode_container(&header, &f32_payload(values))
}

pub fn decode_weights(bytes: &[u8]) -> Result<(Value, Vec<f64>)> {
    let (header, payload) = decode_container(bytes)?;
    expect_kind(&header, Kind::Weights, 1)?;
    if header.dtype != Dtype::F32Le {
        return Err(CoreError::Header("weights payload must be f32le".into()));
    }
    Ok((header.meta, read_f32_payload(payload)?))
}

pub fn write_image(image: &GridImage, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_image(image)?)?)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<GridImage> {
    decode_image(&fs::read(path)?)
}

pub fn write_sinogram(sino: &Sinogram, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_sinogram(sino)?)?)
}

pub fn read_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    decode_sinogram(&fs::read(path)?)
}

pub fn write_dwf(dwf: &DigitalWavefrontSet, domain: DwfDomain, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_dwf(dwf, domain)?)?)
}

pub fn read_dwf(path: impl AsRef<Path>) -> Result<(DigitalWavefrontSet, DwfDomain)> {
    decode_dwf(&fs::read(path)?)
}

/// Read just the header of a container file.
pub fn peek_header(bytes: &[u8]) -> Result<Header> {
    decode_container(bytes).map(|(h, _)| h)
}

/// Round a value through the on-disk precision.
pub fn quantize(v: f64) -> f64 {
    v as f32 as f64
}
