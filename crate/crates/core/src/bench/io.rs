//! Dataset files: `fvecs`/`bvecs`/raw f32 vectors, the binary attribute
//! file, and `ivecs` id lists.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::codec::{append_crc, verify_crc, Reader};
use crate::error::{Error, Result};
use crate::vector::{AttributeSchema, AttributeTable, VectorDataset};

const ATTR_MAGIC: &[u8; 4] = b"FVRA";
pub const ATTR_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    /// Records of `[dim: i32][dim x f32]`.
    Fvecs,
    /// Records of `[dim: i32][dim x u8]`.
    Bvecs,
    /// `[dim: u32]` followed by packed f32 vectors.
    RawF32,
}

impl FromStr for VectorFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fvecs" => Ok(Self::Fvecs),
            "bvecs" => Ok(Self::Bvecs),
            "raw_f32" | "raw" => Ok(Self::RawF32),
            other => Err(Error::Usage(format!(
                "unknown vector format `{other}` (expected fvecs, bvecs or raw_f32)"
            ))),
        }
    }
}

/// Decode vectors from bytes. Every record must agree on dimension.
pub fn parse_vectors(bytes: &[u8], format: VectorFormat) -> Result<VectorDataset> {
    match format {
        VectorFormat::RawF32 => {
            let mut r = Reader::new(bytes, 0);
            let dim = r.u32()? as usize;
            if dim == 0 {
                return Err(Error::Format("raw_f32 header declares dimension 0".into()));
            }
            if !r.remaining().is_multiple_of(4 * dim) {
                return Err(Error::Format(format!(
                    "raw_f32 payload of {} bytes is not a whole number of {dim}-d vectors",
                    r.remaining()
                )));
            }
            let mut data = Vec::with_capacity(r.remaining() / 4);
            while r.remaining() > 0 {
                data.push(r.f32()?);
            }
            VectorDataset::from_vectors(dim, data)
        }
        VectorFormat::Fvecs | VectorFormat::Bvecs => {
            let width = if format == VectorFormat::Fvecs { 4 } else { 1 };
            let mut r = Reader::new(bytes, 0);
            let mut dim = None;
            let mut data = Vec::new();
            let mut record = 0usize;
            while r.remaining() > 0 {
                let header = r.i32().map_err(|_| {
                    Error::Format(format!("record {record}: truncated dimension header"))
                })?;
                if header <= 0 {
                    return Err(Error::Format(format!(
                        "record {record}: invalid dimension {header}"
                    )));
                }
                let d = header as usize;
                match dim {
                    None => dim = Some(d),
                    Some(expected) if expected != d => {
                        return Err(Error::Format(format!(
                            "record {record}: dimension {d} differs from {expected}"
                        )))
                    }
                    _ => {}
                }
                if r.remaining() < d * width {
                    return Err(Error::Format(format!("record {record}: truncated payload")));
                }
                for _ in 0..d {
                    data.push(if width == 4 { r.f32()? } else { r.u8()? as f32 });
                }
                record += 1;
            }
            match dim {
                Some(d) => VectorDataset::from_vectors(d, data),
                None => Err(Error::Format("vector file holds no records".into())),
            }
        }
    }
}

pub fn read_vectors(path: impl AsRef<Path>, format: VectorFormat) -> Result<VectorDataset> {
    parse_vectors(&fs::read(path)?, format)
}

pub fn encode_vectors(ds: &VectorDataset, format: VectorFormat) -> Result<Vec<u8>> {
    let dim = ds.dim();
    let mut out = Vec::with_capacity(ds.raw().len() * 4 + ds.len() * 4 + 4);
    match format {
        VectorFormat::RawF32 => {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
            for v in ds.raw() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        VectorFormat::Fvecs => {
            for v in ds.vectors() {
                out.extend_from_slice(&(dim as i32).to_le_bytes());
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        VectorFormat::Bvecs => {
            for v in ds.vectors() {
                out.extend_from_slice(&(dim as i32).to_le_bytes());
                for &x in v {
                    if !(0.0..=255.0).contains(&x) || x.fract() != 0.0 {
                        return Err(Error::Format(format!(
                            "component {x} is not representable as an unsigned byte"
                        )));
                    }
                    out.push(x as u8);
                }
            }
        }
    }
    Ok(out)
}

pub fn write_vectors(path: impl AsRef<Path>, ds: &VectorDataset, format: VectorFormat) -> Result<()> {
    fs::write(path, encode_vectors(ds, format)?)?;
    Ok(())
}

pub fn encode_attributes(table: &AttributeTable) -> Vec<u8> {
    let s = table.schema();
    let (bools, ints, floats) = table.columns();
    let mut out = Vec::with_capacity(32 + table.len() * (s.n_bool + 4 * s.n_int + 4 * s.n_float));
    out.extend_from_slice(ATTR_MAGIC);
    out.extend_from_slice(&ATTR_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    out.extend_from_slice(&(s.n_bool as u32).to_le_bytes());
    out.extend_from_slice(&(s.n_int as u32).to_le_bytes());
    out.extend_from_slice(&(s.n_float as u32).to_le_bytes());
    for i in 0..table.len() {
        out.extend(bools[i * s.n_bool..(i + 1) * s.n_bool].iter().map(|&b| b as u8));
        for v in &ints[i * s.n_int..(i + 1) * s.n_int] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &floats[i * s.n_float..(i + 1) * s.n_float] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    append_crc(&mut out);
    out
}

pub fn decode_attributes(bytes: &[u8]) -> Result<AttributeTable> {
    if bytes.len() < 4 || &bytes[..4] != ATTR_MAGIC {
        return Err(Error::Format("not an attribute file (bad magic)".into()));
    }
    let body = verify_crc(bytes)?;
    let mut r = Reader::new(body, 4);
    let version = r.u32()?;
    if version != ATTR_FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: ATTR_FORMAT_VERSION,
        });
    }
    let count = r.u64()? as usize;
    let schema = AttributeSchema::new(r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let per_record = schema.n_bool + 4 * schema.n_int + 4 * schema.n_float;
    if r.remaining() != count * per_record {
        return Err(Error::Format(format!(
            "attribute payload is {} bytes, expected {} for {count} records",
            r.remaining(),
            count * per_record
        )));
    }
    let mut bools = Vec::with_capacity(count * schema.n_bool);
    let mut ints = Vec::with_capacity(count * schema.n_int);
    let mut floats = Vec::with_capacity(count * schema.n_float);
    for _ in 0..count {
        for _ in 0..schema.n_bool {
            bools.push(match r.u8()? {
                0 => false,
                1 => true,
                b => {
                    return Err(Error::Format(format!(
                        "invalid bool byte {b} at offset {}",
                        r.position() - 1
                    )))
                }
            });
        }
        for _ in 0..schema.n_int {
            ints.push(r.i32()?);
        }
        for _ in 0..schema.n_float {
            floats.push(r.f32()?);
        }
    }
    AttributeTable::from_parts(schema, count, bools, ints, floats)
}

pub fn write_attributes(path: impl AsRef<Path>, table: &AttributeTable) -> Result<()> {
    fs::write(path, encode_attributes(table))?;
    Ok(())
}

pub fn read_attributes(path: impl AsRef<Path>) -> Result<AttributeTable> {
    decode_attributes(&fs::read(path)?)
}

/// `ivecs` records: `[len: i32][len x i32]`. Lengths may differ (including 0).
pub fn encode_ivecs(rows: &[Vec<u32>]) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        out.extend_from_slice(&(row.len() as i32).to_le_bytes());
        for &id in row {
            out.extend_from_slice(&(id as i32).to_le_bytes());
        }
    }
    out
}

pub fn decode_ivecs(bytes: &[u8]) -> Result<Vec<Vec<u32>>> {
    let mut r = Reader::new(bytes, 0);
    let mut rows = Vec::new();
    while r.remaining() > 0 {
        let len = r.i32()?;
        if len < 0 || r.remaining() < 4 * len as usize {
            return Err(Error::Format(format!("ivecs record {}: bad length {len}", rows.len())));
        }
        let row = (0..len)
            .map(|_| {
                r.i32().and_then(|v| {
                    u32::try_from(v).map_err(|_| Error::Format(format!("negative id {v}")))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Load a dataset from a vector file and an attribute file.
pub fn load_dataset(
    vectors: impl AsRef<Path>,
    format: VectorFormat,
    attrs: impl AsRef<Path>,
) -> Result<VectorDataset> {
    read_vectors(vectors, format)?.with_attributes(read_attributes(attrs)?)
}
