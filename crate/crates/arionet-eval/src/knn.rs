//! Euclidean k-nearest-neighbor vote.

use crate::EvalError;

/// Majority label among the k nearest training points. Distance ties are
/// broken by training index, vote ties by the smallest class id. `k`
/// larger than the training set is clamped.
pub fn knn_predict(
    train_x: &[Vec<f64>],
    train_y: &[usize],
    query: &[f64],
    k: usize,
) -> Result<usize, EvalError> {
    if train_x.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if train_x.len() != train_y.len() {
        return Err(EvalError::LengthMismatch {
            labels: train_y.len(),
            rows: train_x.len(),
        });
    }
    if k == 0 {
        return Err(EvalError::BadK);
    }
    if train_x[0].len() != query.len() {
        return Err(EvalError::QueryDim {
            query: query.len(),
            expected: train_x[0].len(),
        });
    }

    let mut dist: Vec<(f64, usize)> = train_x
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let d: f64 = row
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, i)
        })
        .collect();
    dist.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let k = k.min(dist.len());
    let classes = train_y.iter().max().unwrap() + 1;
    let mut votes = vec![0usize; classes];
    for &(_, i) in &dist[..k] {
        votes[train_y[i]] += 1;
    }
    let mut best = 0usize;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    Ok(best)
}
