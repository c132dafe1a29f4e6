use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::knn::check_classifier_shapes;
use super::vote::TiePriority;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 25,
            max_depth: 6,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn predict(&self, row: &[f64]) -> usize {
        match self {
            Node::Leaf(c) => *c,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    max_depth: usize,
    /// Class id order used to break leaf ties.
    rank: &'a [usize],
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

impl TreeBuilder<'_> {
    fn leaf(&self, idx: &[usize]) -> Node {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        let best = (0..self.n_classes)
            .max_by_key(|&c| (counts[c], std::cmp::Reverse(self.rank[c])))
            .unwrap_or(0);
        Node::Leaf(best)
    }

    fn build(&self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> Node {
        let first = self.y[idx[0]];
        if depth >= self.max_depth || idx.len() < 2 || idx.iter().all(|&i| self.y[i] == first) {
            return self.leaf(idx);
        }
        let d = self.x[0].len();
        let mut features: Vec<usize> = (0..d).collect();
        for i in 0..self.max_features.min(d) {
            let j = rng.random_range(i..d);
            features.swap(i, j);
        }
        features.truncate(self.max_features.min(d));

        let mut parent = vec![0usize; self.n_classes];
        for &i in idx.iter() {
            parent[self.y[i]] += 1;
        }
        let n = idx.len();
        let parent_gini = gini(&parent, n);

        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for &f in &features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_classes];
            for k in 0..n - 1 {
                left[self.y[order[k]]] += 1;
                let (lo, hi) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if lo == hi {
                    continue;
                }
                let right: Vec<usize> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                let nl = k + 1;
                let score = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                if best.is_none_or(|(s, _, _)| score < s) {
                    best = Some((score, f, 0.5 * (lo + hi)));
                }
            }
        }
        match best {
            Some((score, feature, threshold)) if score < parent_gini => {
                let split = partition(idx, |i| self.x[i][feature] <= threshold);
                let (l, r) = idx.split_at_mut(split);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.build(l, depth + 1, rng)),
                    right: Box::new(self.build(r, depth + 1, rng)),
                }
            }
            _ => self.leaf(idx),
        }
    }
}

/// Stable in-place partition; returns the count satisfying `pred`.
fn partition(v: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (mut yes, no): (Vec<usize>, Vec<usize>) = v.iter().partition(|&&i| pred(i));
    let split = yes.len();
    yes.extend(no);
    v.copy_from_slice(&yes);
    split
}

fn tree_seed(seed: u64, tree: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (tree as u64).wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Bagged Gini trees with `sqrt(d)` candidate features per node.
pub fn rf_classify<L: Clone + Ord + Send + Sync>(
    train_x: &[Vec<f64>],
    train_y: &[L],
    test_x: &[Vec<f64>],
    cfg: &ForestConfig,
) -> Result<Vec<L>> {
    check_classifier_shapes(train_x, train_y.len(), test_x)?;
    if cfg.n_trees == 0 {
        return Err(Error::Argument("n_trees must be at least 1".into()));
    }
    let classes: Vec<L> = {
        let mut c: Vec<L> = train_y.to_vec();
        c.sort();
        c.dedup();
        c
    };
    let y: Vec<usize> = train_y
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    let priority = TiePriority::new(train_y);
    let mut freq = vec![0usize; classes.len()];
    for &c in &y {
        freq[c] += 1;
    }
    // rank 0 = preferred on ties: most frequent, then smallest label.
    let mut by_pref: Vec<usize> = (0..classes.len()).collect();
    by_pref.sort_by_key(|&c| (std::cmp::Reverse(freq[c]), c));
    let mut rank = vec![0usize; classes.len()];
    for (r, &c) in by_pref.iter().enumerate() {
        rank[c] = r;
    }

    let d = train_x[0].len();
    let builder = TreeBuilder {
        x: train_x,
        y: &y,
        n_classes: classes.len(),
        max_features: ((d as f64).sqrt().floor() as usize).max(1),
        max_depth: cfg.max_depth,
        rank: &rank,
    };
    let n = train_x.len();
    let trees: Vec<Node> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(cfg.seed, t));
            let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            builder.build(&mut idx, 0, &mut rng)
        })
        .collect();

    Ok(test_x
        .iter()
        .map(|row| {
            let mut tally = BTreeMap::new();
            for t in &trees {
                *tally.entry(classes[t.predict(row)].clone()).or_insert(0) += 1;
            }
            priority.best(tally)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = vec!["only"; 3];
        let got = rf_classify(&x, &y, &[vec![0.0], vec![10.0]], &ForestConfig::default()).unwrap();
        assert_eq!(got, vec!["only", "only"]);
    }

    #[test]
    fn deterministic_given_seed() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let y: Vec<u8> = (0..40).map(|i| (i % 3) as u8).collect();
        let cfg = ForestConfig::default();
        let a = rf_classify(&x, &y, &x, &cfg).unwrap();
        let b = rf_classify(&x, &y, &x, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_trees_rejected() {
        let cfg = ForestConfig {
            n_trees: 0,
            ..ForestConfig::default()
        };
        assert!(rf_classify(&[vec![1.0]], &[1], &[vec![1.0]], &cfg).is_err());
    }
}
