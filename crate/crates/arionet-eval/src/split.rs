//! Seeded stratified train/test split.

use arionet_rng::Rng;

/// Split sample indices so that roughly `test_fraction` of every class
/// lands in the test set (at least one test item per class whenever the
/// class has two or more samples). Deterministic in the seed.
pub fn stratified_split(
    labels: &[usize],
    test_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..classes {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect();
        if members.is_empty() {
            continue;
        }
        rng.shuffle(&mut members);
        let mut take = (members.len() as f64 * test_fraction).round() as usize;
        if members.len() > 1 {
            take = take.clamp(1, members.len() - 1);
        } else {
            take = 0;
        }
        let split_at = members.len() - take;
        train.extend_from_slice(&members[..split_at]);
        test.extend_from_slice(&members[split_at..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}
