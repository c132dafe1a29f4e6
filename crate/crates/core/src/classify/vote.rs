use std::collections::BTreeMap;

/// Vote resolution shared by every classifier: most votes, then the class
/// more frequent in training, then the smaller label.
#[derive(Clone, Debug)]
pub(crate) struct TiePriority<L> {
    train_counts: BTreeMap<L, usize>,
}

impl<L: Clone + Ord> TiePriority<L> {
    pub fn new(train_y: &[L]) -> Self {
        let mut train_counts = BTreeMap::new();
        for y in train_y {
            *train_counts.entry(y.clone()).or_insert(0) += 1;
        }
        Self { train_counts }
    }

    pub fn winner(&self, votes: impl IntoIterator<Item = L>) -> L {
        let mut tally: BTreeMap<L, usize> = BTreeMap::new();
        for v in votes {
            *tally.entry(v).or_insert(0) += 1;
        }
        self.best(tally)
    }

    pub fn best(&self, tally: BTreeMap<L, usize>) -> L {
        // BTreeMap iterates in ascending label order, so `>` keeps the
        // smallest label among exact ties.
        let mut best: Option<(L, usize, usize)> = None;
        for (label, count) in tally {
            let freq = self.train_counts.get(&label).copied().unwrap_or(0);
            let better = match &best {
                None => true,
                Some((_, c, f)) => (count, freq) > (*c, *f),
            };
            if better {
                best = Some((label, count, freq));
            }
        }
        best.expect("at least one vote").0
    }

    /// Modal training class.
    pub fn modal(&self) -> L {
        self.best(self.train_counts.clone())
    }
}
