//! Binary descriptor container (`.vcbd`).
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "VCBD" | version u32 | dim u32 | video count u32
//! per video: id len u16 | id utf-8 | rows u32 | timestamps f32[rows] | vectors f32[rows*dim]
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DescriptorSet, VideoId};

pub const MAGIC: &[u8; 4] = b"VCBD";
pub const FORMAT_VERSION: u32 = 1;

/// Serializes descriptor sets into the container layout.
pub fn encode_descriptors(sets: &[DescriptorSet]) -> Result<Vec<u8>> {
    let dim = sets.first().map_or(0, DescriptorSet::dim);
    if let Some(bad) = sets.iter().find(|s| s.dim() != dim) {
        return Err(Error::format(format!(
            "mixed descriptor dims: {} has dim {}, expected {dim}",
            bad.video(),
            bad.dim()
        )));
    }
    let payload: usize = sets
        .iter()
        .map(|s| 2 + s.video().as_str().len() + 4 + 4 * s.len() * (dim + 1))
        .sum();
    let mut buf = Vec::with_capacity(16 + payload);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&to_u32(dim, "dim")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(sets.len(), "video count")?.to_le_bytes());
    for set in sets {
        let id = set.video().as_str().as_bytes();
        let id_len = u16::try_from(id.len())
            .map_err(|_| Error::format(format!("video id too long: {}", set.video())))?;
        buf.extend_from_slice(&id_len.to_le_bytes());
        buf.extend_from_slice(id);
        buf.extend_from_slice(&to_u32(set.len(), "row count")?.to_le_bytes());
        for t in set.timestamps() {
            buf.extend_from_slice(&(*t as f32).to_le_bytes());
        }
        for v in set.vectors() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

fn to_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::format(format!("{what} {n} exceeds u32")))
}

pub fn write_descriptors(path: impl AsRef<Path>, sets: &[DescriptorSet]) -> Result<()> {
    let buf = encode_descriptors(sets)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    file.sync_all()?;
    Ok(())
}

pub fn read_descriptors(path: impl AsRef<Path>) -> Result<Vec<DescriptorSet>> {
    let bytes = fs::read(path)?;
    decode_descriptors(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::format(format!(
                "truncated file: need {n} bytes for {what} at offset {}, {} left",
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let bytes_needed = n
            .checked_mul(4)
            .ok_or_else(|| Error::format(format!("{what}: count overflow")))?;
        let raw = self.take(bytes_needed, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses the container layout. Every count is checked against the bytes
/// actually present before anything is allocated for it.
pub fn decode_descriptors(bytes: &[u8]) -> Result<Vec<DescriptorSet>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::format("bad magic, not a VCBD descriptor file"));
    }
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported format version {version}")));
    }
    let dim = cur.u32("dim")? as usize;
    let count = cur.u32("video count")? as usize;
    // each video needs at least 2 + 1 + 4 bytes
    if count.saturating_mul(7) > cur.remaining() {
        return Err(Error::format(format!("truncated file: {count} videos declared")));
    }
    if count > 0 && dim == 0 {
        return Err(Error::format("zero descriptor dim"));
    }
    let mut sets = Vec::with_capacity(count);
    for _ in 0..count {
        let id_len = cur.u16("id length")? as usize;
        let id = std::str::from_utf8(cur.take(id_len, "video id")?)
            .map_err(|_| Error::format("video id is not valid UTF-8"))?;
        let video = VideoId::parse(id).map_err(|e| Error::format(e.to_string()))?;
        let rows = cur.u32("row count")? as usize;
        let row_bytes = (dim as u64 + 1) * 4 * rows as u64;
        if row_bytes > cur.remaining() as u64 {
            return Err(Error::format(format!(
                "truncated file: {video} declares {rows} rows of dim {dim}"
            )));
        }
        let timestamps = cur
            .f32s(rows, "timestamps")?
            .into_iter()
            .map(f64::from)
            .collect();
        let vectors = cur.f32s(rows * dim, "vectors")?;
        let set = DescriptorSet::new(video, dim, timestamps, vectors)
            .map_err(|e| Error::format(e.to_string()))?;
        sets.push(set);
    }
    if cur.remaining() != 0 {
        return Err(Error::format(format!("{} trailing bytes", cur.remaining())));
    }
    Ok(sets)
}
