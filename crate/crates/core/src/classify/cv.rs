use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::vote::TiePriority;

/// Predicts the modal training class for every test row.
pub fn majority_baseline<L: Clone + Ord>(train_y: &[L], test_size: usize) -> Result<Vec<L>> {
    if train_y.is_empty() {
        return Err(Error::Argument("majority baseline needs training labels".into()));
    }
    let modal = TiePriority::new(train_y).modal();
    Ok(vec![modal; test_size])
}

/// Fold index per sample. Each class is shuffled then dealt round-robin,
/// continuing from where the previous class stopped, so per-class counts
/// differ by at most one between folds.
pub fn stratified_folds<L: Clone + Ord>(labels: &[L], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::Argument("need at least 2 folds".into()));
    }
    let mut by_class: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; labels.len()];
    let mut next = 0usize;
    for members in by_class.values_mut() {
        for i in (1..members.len()).rev() {
            let j = rng.random_range(0..=i);
            members.swap(i, j);
        }
        for &m in members.iter() {
            folds[m] = next % n_folds;
            next += 1;
        }
    }
    Ok(folds)
}

pub fn accuracy_pct<L: PartialEq>(pred: &[L], truth: &[L]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority() {
        assert_eq!(majority_baseline(&["A", "A", "B"], 2).unwrap(), vec!["A", "A"]);
        assert_eq!(majority_baseline(&["B", "A"], 1).unwrap(), vec!["A"]);
        assert!(majority_baseline::<u8>(&[], 1).is_err());
    }

    #[test]
    fn folds_are_balanced() {
        let labels: Vec<u8> = (0..23).map(|i| (i % 3) as u8).collect();
        let folds = stratified_folds(&labels, 2, 1).unwrap();
        for class in 0..3u8 {
            let counts: Vec<usize> = (0..2)
                .map(|f| (0..23).filter(|&i| labels[i] == class && folds[i] == f).count())
                .collect();
            assert!(counts[0].abs_diff(counts[1]) <= 1, "{counts:?}");
        }
    }
}
