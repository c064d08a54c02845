//! Frozen-encoder embedding of every stored segment.

use crate::EvalError;
use arionet_model::Encoder;
use arionet_pipeline::FeatureStore;

/// Eval-mode unit embeddings for every record, with species labels,
/// in store order.
pub fn embed_all(
    store: &FeatureStore,
    encoder: &Encoder,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), EvalError> {
    if store.records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut rows = Vec::with_capacity(store.records.len());
    let mut labels = Vec::with_capacity(store.records.len());
    for record in &store.records {
        rows.push(encoder.embedding(&record.chroma)?);
        labels.push(record.species_id as usize);
    }
    Ok((rows, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use arionet_dsp::Chromagram;
    use arionet_model::EncoderConfig;
    use arionet_pipeline::SegmentFeatures;
    use arionet_rng::Rng;

    fn tiny_store(rng: &mut Rng, n: usize) -> FeatureStore {
        let records = (0..n)
            .map(|i| SegmentFeatures {
                species_id: (i % 2) as u32,
                segment_id: i as u32,
                summary: vec![0.0; arionet_pipeline::SUMMARY_DIM],
                chroma: Chromagram::from_rows(
                    (0..12)
                        .map(|_| (0..14).map(|_| rng.next_f64()).collect())
                        .collect(),
                    true,
                ),
            })
            .collect();
        FeatureStore {
            species_names: vec!["a".into(), "b".into()],
            records,
        }
    }

    #[test]
    fn embeddings_are_deterministic_unit_rows() {
        let mut rng = Rng::seed_from_u64(3);
        let store = tiny_store(&mut rng, 4);
        let cfg = EncoderConfig {
            blocks: 1,
            heads: 2,
            d_model: 8,
            ffn_dim: 16,
            proj_dim: 6,
            dropout: 0.2,
            input_dim: 12,
            positional: true,
        };
        let encoder = Encoder::new(cfg, &mut rng).unwrap();
        let (rows, labels) = embed_all(&store, &encoder).unwrap();
        let (rows2, _) = embed_all(&store, &encoder).unwrap();
        assert_eq!(rows, rows2);
        assert_eq!(rows.len(), 4);
        assert_eq!(labels, vec![0, 1, 0, 1]);
        for row in &rows {
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }
}
