//! Binary index file.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "FVRX" | version u32 | dim u32 | count u64 | M u32 | efc u32
//! | top_layer u32 | entry_point u64 | delta_d f64 | alpha u32 | beta u32 | seed u64
//! | per node: level u32
//! | per layer 0..=top_layer, per member node (ascending id): degree u32, ids u64 * degree
//! | crc32 of everything above
//! ```
//!
//! Vectors and attributes live in their own files; loading pairs the graph
//! with a dataset supplied by the caller.

use std::fs;
use std::path::Path;

use super::{BuildParams, HnswIndex, Links};
use crate::codec::{append_crc, verify_crc, Reader};
use crate::error::{Error, Result};
use crate::vector::{NodeId, VectorDataset};

const MAGIC: &[u8; 4] = b"FVRX";
pub const FORMAT_VERSION: u32 = 1;

impl HnswIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(64 + self.len() * (4 + 8 * 2 * p.m));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(p.m as u32).to_le_bytes());
        out.extend_from_slice(&(p.efc as u32).to_le_bytes());
        out.extend_from_slice(&(self.top_layer as u32).to_le_bytes());
        out.extend_from_slice(&(self.entry_point as u64).to_le_bytes());
        out.extend_from_slice(&self.delta_d.to_le_bytes());
        out.extend_from_slice(&(p.alpha_rank as u32).to_le_bytes());
        out.extend_from_slice(&(p.beta_rank as u32).to_le_bytes());
        out.extend_from_slice(&p.seed.to_le_bytes());
        for node in &self.links {
            out.extend_from_slice(&((node.len() - 1) as u32).to_le_bytes());
        }
        for layer in 0..=self.top_layer {
            for node in self.links.iter().filter(|n| n.len() > layer) {
                let adj = &node[layer];
                out.extend_from_slice(&(adj.len() as u32).to_le_bytes());
                for &nb in adj {
                    out.extend_from_slice(&(nb as u64).to_le_bytes());
                }
            }
        }
        append_crc(&mut out);
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Decode an index and attach it to `data`, which must match the stored
    /// dimension and count.
    pub fn from_bytes(bytes: &[u8], data: VectorDataset) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(Error::Format("not an index file (bad magic)".into()));
        }
        let body = verify_crc(bytes)?;
        let mut r = Reader::new(body, 4);
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let dim = r.u32()? as usize;
        let count = r.u64()? as usize;
        let m = r.u32()? as usize;
        let efc = r.u32()? as usize;
        let top_layer = r.u32()? as usize;
        let entry_point = r.u64()?;
        let delta_d = r.f64()?;
        let alpha_rank = r.u32()? as usize;
        let beta_rank = r.u32()? as usize;
        let seed = r.u64()?;

        if dim != data.dim() || count != data.len() {
            return Err(Error::Format(format!(
                "index covers {count} vectors of dimension {dim}, dataset has {} of dimension {}",
                data.len(),
                data.dim()
            )));
        }
        if entry_point >= count as u64 {
            return Err(Error::Format("entry point out of range".into()));
        }

        let mut links: Links = Vec::with_capacity(count);
        for _ in 0..count {
            let level = r.u32()? as usize;
            if level > top_layer {
                return Err(Error::Format(format!(
                    "node level {level} exceeds top layer {top_layer}"
                )));
            }
            links.push(vec![Vec::new(); level + 1]);
        }
        for layer in 0..=top_layer {
            for node in links.iter_mut().filter(|n| n.len() > layer) {
                let degree = r.u32()? as usize;
                if degree > r.remaining() / 8 {
                    return Err(Error::Format("truncated adjacency list".into()));
                }
                let mut adj = Vec::with_capacity(degree);
                for _ in 0..degree {
                    let id = r.u64()?;
                    if id >= count as u64 {
                        return Err(Error::Format(format!("neighbor id {id} out of range")));
                    }
                    adj.push(id as NodeId);
                }
                node[layer] = adj;
            }
        }
        if r.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes", r.remaining())));
        }

        // level_norm is not stored; loaded indexes report the 1/ln(M) default.
        let params = BuildParams::new(m, efc).with_ranks(alpha_rank, beta_rank).with_seed(seed);
        params.validate().map_err(|e| Error::Format(format!("stored parameters: {e}")))?;
        HnswIndex::from_parts(params, data, links, entry_point as NodeId, top_layer, delta_d)
            .map_err(|e| Error::Format(format!("stored graph is inconsistent: {e}")))
    }

    pub fn load(path: impl AsRef<Path>, data: VectorDataset) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::uniform_vectors;

    fn index() -> HnswIndex {
        HnswIndex::build(uniform_vectors(1000, 16, 9), BuildParams::new(8, 40)).unwrap()
    }

    #[test]
    fn round_trip_is_identical() {
        let idx = index();
        let bytes = idx.to_bytes();
        let back = HnswIndex::from_bytes(&bytes, idx.dataset().clone()).unwrap();
        assert_eq!(back.links(), idx.links());
        assert_eq!(back.params(), idx.params());
        assert_eq!(back.entry_point(), idx.entry_point());
        assert_eq!(back.top_layer(), idx.top_layer());
        assert_eq!(back.delta_d().to_bits(), idx.delta_d().to_bits());
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn header_layout() {
        let idx = index();
        let bytes = idx.to_bytes();
        assert_eq!(&bytes[..4], b"FVRX");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), FORMAT_VERSION);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 1000);
        assert_eq!(
            f64::from_le_bytes(bytes[40..48].try_into().unwrap()).to_bits(),
            idx.delta_d().to_bits()
        );
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let idx = index();
        let bytes = idx.to_bytes();
        let cut = &bytes[..bytes.len() - 100];
        assert!(matches!(
            HnswIndex::from_bytes(cut, idx.dataset().clone()),
            Err(Error::Checksum { .. })
        ));
    }

    #[test]
    fn flipped_byte_fails_checksum() {
        let idx = index();
        let mut bytes = idx.to_bytes();
        bytes[100] ^= 0x40;
        assert!(matches!(
            HnswIndex::from_bytes(&bytes, idx.dataset().clone()),
            Err(Error::Checksum { .. })
        ));
    }

    #[test]
    fn version_mismatch() {
        let idx = index();
        let mut bytes = idx.to_bytes();
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        let n = bytes.len();
        let crc = crc32fast::hash(&bytes[..n - 4]);
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(
            HnswIndex::from_bytes(&bytes, idx.dataset().clone()),
            Err(Error::Version { found: 7, .. })
        ));
    }

    #[test]
    fn dataset_mismatch_and_bad_magic() {
        let idx = index();
        let bytes = idx.to_bytes();
        let other = uniform_vectors(999, 16, 1);
        assert!(matches!(
            HnswIndex::from_bytes(&bytes, other),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            HnswIndex::from_bytes(b"NOPE\0\0\0\0", idx.dataset().clone()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn save_and_load_via_file() {
        let idx = index();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.fvrx");
        idx.save(&path).unwrap();
        let back = HnswIndex::load(&path, idx.dataset().clone()).unwrap();
        assert_eq!(back.links(), idx.links());
    }
}
