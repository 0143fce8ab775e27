//! Binary section for a hierarchical index: chunk table plus centroid table,
//! little-endian f32 vectors. The section stores representatives only; token
//! keys are rebound from the trace or store after reading.

use std::io::{Read, Write};

use super::{Centroid, Chunk, HierIndex};
use crate::error::{Error, Result};
use crate::wire;

const SECTION_MAGIC: &[u8; 4] = b"KVIX";
const SECTION_VERSION: u32 = 1;

pub fn write_index_section<W: Write>(w: &mut W, index: &HierIndex) -> Result<()> {
    w.write_all(SECTION_MAGIC)?;
    wire::write_u32(w, SECTION_VERSION)?;
    wire::write_u32(w, index.dim as u32)?;
    wire::write_u32(w, index.chunk_size as u32)?;
    wire::write_u32(w, index.chunks.len() as u32)?;
    wire::write_u32(w, index.centroids.len() as u32)?;
    for chunk in &index.chunks {
        wire::write_u64(w, chunk.token_range.start as u64)?;
        wire::write_u64(w, chunk.token_range.end as u64)?;
        wire::write_f32s(w, &chunk.representative)?;
    }
    for centroid in &index.centroids {
        wire::write_f32s(w, &centroid.vector)?;
        wire::write_u32(w, centroid.members.len() as u32)?;
        for &m in &centroid.members {
            wire::write_u32(w, m as u32)?;
        }
    }
    Ok(())
}

/// Read a section written by [`write_index_section`]. The returned index has
/// no token keys attached; call [`HierIndex::attach_keys`] before selecting.
pub fn read_index_section<R: Read>(r: &mut R) -> Result<HierIndex> {
    wire::read_magic(r, SECTION_MAGIC, "index section")?;
    let version = wire::read_u32(r, "index section version")?;
    if version != SECTION_VERSION {
        return Err(Error::Format(format!(
            "unsupported index section version {version}"
        )));
    }
    let dim = wire::read_u32(r, "index dim")? as usize;
    let chunk_size = wire::read_u32(r, "index chunk size")? as usize;
    let n_chunks = wire::read_u32(r, "chunk count")? as usize;
    let n_centroids = wire::read_u32(r, "centroid count")? as usize;
    let mut chunks = Vec::with_capacity(n_chunks);
    for chunk_id in 0..n_chunks {
        let start = wire::read_u64(r, "chunk start")? as usize;
        let end = wire::read_u64(r, "chunk end")? as usize;
        if end <= start {
            return Err(Error::Format(format!(
                "chunk {chunk_id} has empty range {start}..{end}"
            )));
        }
        let representative = wire::read_f32s(r, dim, "chunk representative")?;
        chunks.push(Chunk {
            chunk_id,
            token_range: start..end,
            representative,
        });
    }
    let mut centroids = Vec::with_capacity(n_centroids);
    for centroid_id in 0..n_centroids {
        let vector = wire::read_f32s(r, dim, "centroid vector")?;
        let member_count = wire::read_u32(r, "centroid member count")? as usize;
        let mut members = Vec::with_capacity(member_count);
        for _ in 0..member_count {
            members.push(wire::read_u32(r, "centroid member")? as usize);
        }
        centroids.push(Centroid {
            centroid_id,
            vector,
            members,
        });
    }
    Ok(HierIndex {
        chunks,
        centroids,
        chunk_size,
        n_centroids,
        dim,
        keys: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{build_index, CriticalSelector};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    #[test]
    fn section_round_trips_and_selects_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let keys: Vec<Vec<f32>> = (0..64)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect();
        let index = build_index(&keys, 4, 8, 3).unwrap();

        let mut buf = Vec::new();
        write_index_section(&mut buf, &index).unwrap();
        let mut back = read_index_section(&mut buf.as_slice()).unwrap();
        back.attach_keys(keys.clone()).unwrap();

        assert_eq!(back.chunks, index.chunks);
        assert_eq!(back.centroids, index.centroids);
        let query: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let a = index
            .select_detailed(&query, 8, &BTreeSet::new(), 8)
            .unwrap();
        let b = back.select_detailed(&query, 8, &BTreeSet::new(), 8).unwrap();
        assert_eq!(a.chosen, b.chosen);
    }

    #[test]
    fn corrupt_section_is_rejected() {
        let mut buf = b"XXXX".to_vec();
        buf.extend_from_slice(&[0u8; 32]);
        assert!(read_index_section(&mut buf.as_slice()).is_err());
    }
}
