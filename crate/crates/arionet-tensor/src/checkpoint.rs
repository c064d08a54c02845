//! Checkpoint serialization.
//!
//! Little-endian layout: magic "ARCK", version u32 = 1, tensor_count u32;
//! per tensor: name_len u16 + UTF-8 name, rank u8, dims u32 x rank,
//! f32 data in row-major order.

use crate::params::ParamSet;
use crate::{Tensor, TensorError};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ARCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialize parameters into the checkpoint byte layout.
pub fn checkpoint_bytes(params: &ParamSet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, tensor) in params.iter() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let shape = tensor.shape();
        out.push(shape.len() as u8);
        for &d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in tensor.data().iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

/// Write a checkpoint file.
pub fn save_checkpoint(params: &ParamSet, path: &Path) -> Result<(), TensorError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&checkpoint_bytes(params))?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], TensorError> {
        if self.pos + n > self.buf.len() {
            return Err(TensorError::Truncated(what));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, TensorError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, TensorError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, TensorError> {
        Ok(self.take(1, what)?[0])
    }
}

/// Parse checkpoint bytes into named tensors.
pub fn parse_checkpoint(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, TensorError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(TensorError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(TensorError::UnsupportedVersion(version));
    }
    let count = r.u32("tensor count")?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = r.u16("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| TensorError::BadName)?
            .to_string();
        let rank = r.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dims")? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = r.take(numel * 4, "tensor data")?;
        let data: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        out.push((name, Tensor::param(&shape, data)));
    }
    Ok(out)
}

/// Read a checkpoint file into a fresh parameter set.
pub fn load_checkpoint(path: &Path) -> Result<ParamSet, TensorError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut params = ParamSet::new();
    for (name, tensor) in parse_checkpoint(&bytes)? {
        params.insert(name, tensor);
    }
    Ok(params)
}

/// Read a checkpoint file (see [`load_checkpoint`]) returning raw pairs.
pub fn read_checkpoint(path: &Path) -> Result<Vec<(String, Tensor)>, TensorError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_checkpoint(&bytes)
}

/// Strict load into an existing model: every checkpoint tensor must match
/// a parameter by name and shape, and every parameter must be present.
pub fn load_checkpoint_into(path: &Path, params: &ParamSet) -> Result<(), TensorError> {
    let loaded = read_checkpoint(path)?;
    for (name, tensor) in &loaded {
        let target = params
            .get(name)
            .ok_or_else(|| TensorError::UnknownTensor(name.clone()))?;
        if target.shape() != tensor.shape() {
            return Err(TensorError::CheckpointShape {
                name: name.clone(),
                found: tensor.shape().to_vec(),
                expected: target.shape().to_vec(),
            });
        }
        target.set_data(&tensor.to_vec());
    }
    for (name, _) in params.iter() {
        if !loaded.iter().any(|(n, _)| n == name) {
            return Err(TensorError::MissingTensor(name.to_string()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_params() -> ParamSet {
        let mut ps = ParamSet::new();
        ps.insert("enc.w", Tensor::param(&[2, 3], vec![0.5, -1.0, 2.0, 0.25, 0.0, 9.0]));
        ps.insert("enc.b", Tensor::param(&[3], vec![1.0, 2.0, 3.0]));
        ps
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = std::env::temp_dir().join("arionet_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.ckpt");
        let ps = sample_params();
        save_checkpoint(&ps, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        for (name, t) in ps.iter() {
            let l = loaded.get(name).unwrap();
            assert_eq!(l.shape(), t.shape());
            assert_eq!(l.to_vec(), t.to_vec());
        }
        // Byte-identical on re-save.
        let again = checkpoint_bytes(&loaded);
        assert_eq!(again, checkpoint_bytes(&ps));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn bad_magic_detected() {
        let mut bytes = checkpoint_bytes(&sample_params());
        bytes[0] = b'X';
        assert!(matches!(
            parse_checkpoint(&bytes),
            Err(TensorError::BadMagic)
        ));
    }

    #[test]
    fn wrong_version_detected() {
        let mut bytes = checkpoint_bytes(&sample_params());
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            parse_checkpoint(&bytes),
            Err(TensorError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn truncation_detected() {
        let bytes = checkpoint_bytes(&sample_params());
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(
            parse_checkpoint(cut),
            Err(TensorError::Truncated(_))
        ));
    }

    #[test]
    fn strict_load_reports_unknown_and_missing_names() {
        let dir = std::env::temp_dir().join("arionet_ckpt_strict");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("strict.ckpt");
        save_checkpoint(&sample_params(), &path).unwrap();

        let mut renamed = ParamSet::new();
        renamed.insert("enc.w", Tensor::param(&[2, 3], vec![0.0; 6]));
        renamed.insert("other", Tensor::param(&[3], vec![0.0; 3]));
        match load_checkpoint_into(&path, &renamed) {
            Err(TensorError::UnknownTensor(name)) => assert_eq!(name, "enc.b"),
            other => panic!("expected UnknownTensor, got {other:?}"),
        }

        let mut shorter = ParamSet::new();
        shorter.insert("enc.w", Tensor::param(&[2, 3], vec![0.0; 6]));
        shorter.insert("enc.b", Tensor::param(&[3], vec![0.0; 3]));
        shorter.insert("extra", Tensor::param(&[1], vec![0.0]));
        match load_checkpoint_into(&path, &shorter) {
            Err(TensorError::MissingTensor(name)) => assert_eq!(name, "extra"),
            other => panic!("expected MissingTensor, got {other:?}"),
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn strict_load_reports_shape_mismatch() {
        let dir = std::env::temp_dir().join("arionet_ckpt_shape");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("shape.ckpt");
        save_checkpoint(&sample_params(), &path).unwrap();
        let mut wrong = ParamSet::new();
        wrong.insert("enc.w", Tensor::param(&[3, 2], vec![0.0; 6]));
        wrong.insert("enc.b", Tensor::param(&[3], vec![0.0; 3]));
        assert!(matches!(
            load_checkpoint_into(&path, &wrong),
            Err(TensorError::CheckpointShape { .. })
        ));
        std::fs::remove_file(&path).unwrap();
    }
}
