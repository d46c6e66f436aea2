//! Versioned, checksummed binary serialization of [`ModelParams`].
//!
//! All integers are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       5     magic "KEENB"
//! 5       1     format version (1)
//! 6       8     total file length in bytes, trailer included (u64)
//! 14      1     scalar width in bytes (4 = f32, 8 = f64)
//! 15      1     model tag (index into ModelName::ALL)
//! 16      1     norm (1 = L1, 2 = L2)
//! 17      8×5   entity_dim, relation_dim, hidden_dim,
//!               num_entities, num_relations (u64 each)
//! 57      1     tensor count n
//!         per tensor, in family order:
//!           1     family tag (index into Family::ALL)
//!           8     rows (u64)
//!           8     cols (u64)
//!           w·r·c values, row-major, IEEE-754 little-endian
//! end−8   8     checksum: first 8 bytes of SHA-256 over all preceding bytes
//! ```
//!
//! A reader checks, in order: magic, version, length (a short file is
//! reported as truncated), checksum, then structure.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{Family, Matrix, ModelName, ModelParams, ModelSpec, Norm};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 5] = b"KEENB";
pub const FORMAT_VERSION: u8 = 1;
const LEN_OFFSET: usize = 6;
const TRAILER: usize = 8;

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn encode<S: Scalar>(params: &ModelParams<S>) -> Vec<u8> {
    let width = std::mem::size_of::<S>();
    let spec = params.spec();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&0u64.to_le_bytes()); // patched below
    out.push(width as u8);
    out.push(ModelName::ALL.iter().position(|&m| m == spec.name).expect("known model") as u8);
    out.push(match spec.norm {
        Norm::L1 => 1,
        Norm::L2 => 2,
    });
    for v in [
        spec.entity_dim,
        spec.relation_dim,
        spec.hidden_dim,
        params.num_entities(),
        params.num_relations(),
    ] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    let tensors: Vec<_> = params.tensors().collect();
    out.push(tensors.len() as u8);
    for (family, m) in tensors {
        out.push(family.tag());
        out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        for &x in m.as_slice() {
            if width == 4 {
                out.extend_from_slice(&(x.widen() as f32).to_le_bytes());
            } else {
                out.extend_from_slice(&x.widen().to_le_bytes());
            }
        }
    }
    let total = (out.len() + TRAILER) as u64;
    out[LEN_OFFSET..LEN_OFFSET + 8].copy_from_slice(&total.to_le_bytes());
    let sum = checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Truncated(format!("payload ends inside {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| Error::Format(format!("{what} {v} too large")))
    }
}

pub fn decode<S: Scalar>(bytes: &[u8]) -> Result<ModelParams<S>> {
    if bytes.len() < MAGIC.len() {
        return if MAGIC.starts_with(bytes) && !bytes.is_empty() {
            Err(Error::Truncated(format!("{} bytes", bytes.len())))
        } else {
            Err(Error::BadMagic)
        };
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    let Some(&version) = bytes.get(MAGIC.len()) else {
        return Err(Error::Truncated("file ends before the version byte".into()));
    };
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let header_end = LEN_OFFSET + 8;
    if bytes.len() < header_end + TRAILER {
        return Err(Error::Truncated(format!("{} bytes", bytes.len())));
    }
    let declared = u64::from_le_bytes(bytes[LEN_OFFSET..header_end].try_into().expect("8 bytes"));
    if (bytes.len() as u64) < declared {
        return Err(Error::Truncated(format!(
            "expected {declared} bytes, found {}",
            bytes.len()
        )));
    }
    let (payload, trailer) = bytes.split_at(bytes.len() - TRAILER);
    let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
    let computed = checksum(payload);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    if declared != bytes.len() as u64 {
        return Err(Error::Format(format!(
            "declared length {declared} differs from file length {}",
            bytes.len()
        )));
    }

    let mut r = Reader {
        buf: payload,
        pos: header_end,
    };
    let width = r.u8("scalar width")? as usize;
    if width != std::mem::size_of::<S>() {
        return Err(Error::Format(format!(
            "file stores {width}-byte scalars, reader expects {}",
            std::mem::size_of::<S>()
        )));
    }
    let tag = r.u8("model tag")?;
    let name = *ModelName::ALL
        .get(tag as usize)
        .ok_or_else(|| Error::Format(format!("unknown model tag {tag}")))?;
    let norm = match r.u8("norm")? {
        1 => Norm::L1,
        2 => Norm::L2,
        other => return Err(Error::Format(format!("unknown norm {other}"))),
    };
    let entity_dim = r.usize("entity_dim")?;
    let relation_dim = r.usize("relation_dim")?;
    let hidden_dim = r.usize("hidden_dim")?;
    let num_entities = r.usize("num_entities")?;
    let num_relations = r.usize("num_relations")?;
    let spec = ModelSpec::new(name, entity_dim, relation_dim, hidden_dim, norm);
    if spec.relation_dim != relation_dim {
        return Err(Error::Format(format!(
            "relation_dim {relation_dim} inconsistent with {name}"
        )));
    }
    let count = r.u8("tensor count")?;
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let tag = r.u8("family tag")?;
        let family =
            Family::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown family tag {tag}")))?;
        let rows = r.usize("rows")?;
        let cols = r.usize("cols")?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Format("tensor size overflows".into()))?;
        let raw = r.take(
            n.checked_mul(width).ok_or_else(|| Error::Format("tensor size overflows".into()))?,
            family.as_str(),
        )?;
        let data = raw
            .chunks_exact(width)
            .map(|c| {
                if width == 4 {
                    S::lit(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                } else {
                    S::lit(f64::from_le_bytes(c.try_into().expect("8 bytes")))
                }
            })
            .collect();
        if tensors.insert(family, Matrix::from_vec(rows, cols, data)?).is_some() {
            return Err(Error::Format(format!("duplicate tensor {}", family.as_str())));
        }
    }
    if r.pos != payload.len() {
        return Err(Error::Format(format!(
            "{} unexpected trailing bytes",
            payload.len() - r.pos
        )));
    }
    ModelParams::from_tensors(spec, num_entities, num_relations, tensors)
}
