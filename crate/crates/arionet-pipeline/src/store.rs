//! Feature store serialization.
//!
//! Little-endian layout: magic "ARIO", version u32 = 1, species_count u32,
//! then per species a name_len u16 + UTF-8 name; record_count u64; per
//! record: species_id u32, segment_id u32, summary_len u32 (= 44) +
//! f32 x 44, chroma_rows u32 (= 12), chroma_cols u32 + f32 row-major.

use crate::extract::{SegmentFeatures, SUMMARY_DIM};
use crate::PipelineError;
use arionet_dsp::Chromagram;
use std::io::{Read, Write};
use std::path::Path;

pub const STORE_MAGIC: &[u8; 4] = b"ARIO";
pub const STORE_VERSION: u32 = 1;

/// Minimum chromagram columns a stored record may carry.
pub const MIN_CHROMA_FRAMES: usize = 13;

/// Label table plus per-segment records.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    /// Dense species ids index into this table.
    pub species_names: Vec<String>,
    pub records: Vec<SegmentFeatures>,
}

impl FeatureStore {
    pub fn species_name(&self, id: u32) -> &str {
        &self.species_names[id as usize]
    }

    /// Chromagrams of every record, in store order.
    pub fn chromas(&self) -> Vec<Chromagram> {
        self.records.iter().map(|r| r.chroma.clone()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.species_id as usize).collect()
    }
}

/// Serialize a store into the binary layout.
pub fn store_bytes(store: &FeatureStore) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(STORE_MAGIC);
    out.extend_from_slice(&STORE_VERSION.to_le_bytes());
    out.extend_from_slice(&(store.species_names.len() as u32).to_le_bytes());
    for name in &store.species_names {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    out.extend_from_slice(&(store.records.len() as u64).to_le_bytes());
    for record in &store.records {
        out.extend_from_slice(&record.species_id.to_le_bytes());
        out.extend_from_slice(&record.segment_id.to_le_bytes());
        out.extend_from_slice(&(record.summary.len() as u32).to_le_bytes());
        for &v in &record.summary {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.extend_from_slice(&12u32.to_le_bytes());
        let cols = record.chroma.num_frames() as u32;
        out.extend_from_slice(&cols.to_le_bytes());
        for row in &record.chroma.energies {
            for &v in row {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn write_store(store: &FeatureStore, path: &Path) -> Result<(), PipelineError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&store_bytes(store))?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], PipelineError> {
        if self.pos + n > self.buf.len() {
            return Err(PipelineError::Truncated(what));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, PipelineError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, PipelineError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, PipelineError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, PipelineError> {
        Ok(self
            .take(n * 4, what)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

/// Parse store bytes, validating every record invariant.
pub fn parse_store(bytes: &[u8]) -> Result<FeatureStore, PipelineError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != STORE_MAGIC {
        return Err(PipelineError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != STORE_VERSION {
        return Err(PipelineError::UnsupportedVersion(version));
    }
    let species_count = r.u32("species count")? as usize;
    let mut species_names = Vec::with_capacity(species_count);
    for _ in 0..species_count {
        let len = r.u16("species name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "species name")?)
            .map_err(|_| PipelineError::InvalidRecord("species name not UTF-8".into()))?;
        species_names.push(name.to_string());
    }

    let record_count = r.u64("record count")? as usize;
    let mut records = Vec::with_capacity(record_count);
    for i in 0..record_count {
        let species_id = r.u32("species id")?;
        let segment_id = r.u32("segment id")?;
        if species_id as usize >= species_count {
            return Err(PipelineError::InvalidRecord(format!(
                "record {i}: species id {species_id} outside label table"
            )));
        }
        let summary_len = r.u32("summary length")? as usize;
        if summary_len != SUMMARY_DIM {
            return Err(PipelineError::InvalidRecord(format!(
                "record {i}: summary length {summary_len}, expected {SUMMARY_DIM}"
            )));
        }
        let summary = r.f32s(summary_len, "summary values")?;
        if summary.iter().any(|v| !v.is_finite()) {
            return Err(PipelineError::InvalidRecord(format!(
                "record {i}: non-finite summary value"
            )));
        }
        let rows = r.u32("chroma rows")? as usize;
        if rows != 12 {
            return Err(PipelineError::InvalidRecord(format!(
                "record {i}: {rows} chroma rows, expected 12"
            )));
        }
        let cols = r.u32("chroma cols")? as usize;
        if cols < MIN_CHROMA_FRAMES {
            return Err(PipelineError::InvalidRecord(format!(
                "record {i}: {cols} chroma frames, need at least {MIN_CHROMA_FRAMES}"
            )));
        }
        let flat = r.f32s(rows * cols, "chroma values")?;
        if flat.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PipelineError::InvalidRecord(format!(
                "record {i}: chroma value out of range"
            )));
        }
        let energies = flat.chunks(cols).map(|c| c.to_vec()).collect();
        records.push(SegmentFeatures {
            species_id,
            segment_id,
            summary,
            chroma: Chromagram::from_rows(energies, true),
        });
    }
    Ok(FeatureStore {
        species_names,
        records,
    })
}

pub fn read_store(path: &Path) -> Result<FeatureStore, PipelineError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_store(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_store() -> FeatureStore {
        let chroma = |offset: f64| {
            Chromagram::from_rows(
                (0..12)
                    .map(|k| (0..14).map(|t| ((k + t) as f64 * 0.07 + offset) % 1.0).collect())
                    .collect(),
                true,
            )
        };
        FeatureStore {
            species_names: vec!["lark".into(), "wren".into()],
            records: vec![
                SegmentFeatures {
                    species_id: 0,
                    segment_id: 0,
                    summary: (0..44).map(|i| i as f64 * 0.5).collect(),
                    chroma: chroma(0.0),
                },
                SegmentFeatures {
                    species_id: 1,
                    segment_id: 3,
                    summary: (0..44).map(|i| -(i as f64) * 0.25).collect(),
                    chroma: chroma(0.3),
                },
            ],
        }
    }

    #[test]
    fn round_trip_preserves_records_and_bytes() {
        let store = sample_store();
        let bytes = store_bytes(&store);
        let parsed = parse_store(&bytes).unwrap();
        assert_eq!(parsed.species_names, store.species_names);
        assert_eq!(parsed.records.len(), 2);
        for (a, b) in parsed.records.iter().zip(&store.records) {
            assert_eq!(a.species_id, b.species_id);
            assert_eq!(a.segment_id, b.segment_id);
            // f32 quantization applies once; a second trip is exact.
        }
        assert_eq!(store_bytes(&parsed), bytes, "second trip is bit-exact");
    }

    #[test]
    fn corrupted_magic_is_reported() {
        let mut bytes = store_bytes(&sample_store());
        bytes[1] = b'X';
        assert!(matches!(parse_store(&bytes), Err(PipelineError::BadMagic)));
    }

    #[test]
    fn future_version_is_rejected() {
        let mut bytes = store_bytes(&sample_store());
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            parse_store(&bytes),
            Err(PipelineError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn truncation_is_reported() {
        let bytes = store_bytes(&sample_store());
        for cut in [3, 9, 20, bytes.len() - 5] {
            assert!(
                matches!(parse_store(&bytes[..cut]), Err(PipelineError::Truncated(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn bad_species_id_is_invalid() {
        let mut store = sample_store();
        store.records[0].species_id = 9;
        let bytes = store_bytes(&store);
        assert!(matches!(
            parse_store(&bytes),
            Err(PipelineError::InvalidRecord(_))
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("arionet_store_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.store");
        let store = sample_store();
        write_store(&store, &path).unwrap();
        let back = read_store(&path).unwrap();
        assert_eq!(store_bytes(&back), store_bytes(&store));
        std::fs::remove_file(&path).unwrap();
    }
}
