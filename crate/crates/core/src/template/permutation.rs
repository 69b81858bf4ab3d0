/// Stable descending ranking of a vector.
///
/// `rank_to_index[i]` is the original index of the `i`-th largest element;
/// `index_to_rank` is its inverse. Equal elements keep their original order,
/// so the permutation is unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankingPermutation {
    rank_to_index: Vec<usize>,
    index_to_rank: Vec<usize>,
}

impl RankingPermutation {
    pub fn identity(len: usize) -> Self {
        Self {
            rank_to_index: (0..len).collect(),
            index_to_rank: (0..len).collect(),
        }
    }

    /// Ranking of `values` from largest to smallest. `T: Ord` keeps this exact
    /// for integer counts.
    pub fn descending<T: Ord>(values: &[T]) -> Self {
        let mut rank_to_index: Vec<usize> = (0..values.len()).collect();
        // `sort_by` is stable: equal values stay in index order.
        rank_to_index.sort_by(|&i, &j| values[j].cmp(&values[i]));
        Self::from_rank_to_index(rank_to_index).expect("sorted indices form a permutation")
    }

    /// Builds from an explicit rank-to-index map; `None` if it is not a bijection.
    pub fn from_rank_to_index(rank_to_index: Vec<usize>) -> Option<Self> {
        let n = rank_to_index.len();
        let mut index_to_rank = vec![usize::MAX; n];
        for (rank, &index) in rank_to_index.iter().enumerate() {
            if index >= n || index_to_rank[index] != usize::MAX {
                return None;
            }
            index_to_rank[index] = rank;
        }
        Some(Self {
            rank_to_index,
            index_to_rank,
        })
    }

    pub fn len(&self) -> usize {
        self.rank_to_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank_to_index.is_empty()
    }

    pub fn rank_to_index(&self) -> &[usize] {
        &self.rank_to_index
    }

    pub fn index_to_rank(&self) -> &[usize] {
        &self.index_to_rank
    }

    /// Reorders a state-indexed vector into rank order: `out[i] = v[sigma(i)]`.
    pub fn apply<T: Copy>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.len(), "vector length must match permutation");
        self.rank_to_index.iter().map(|&i| v[i]).collect()
    }

    /// Maps a rank-ordered vector back to state order: `out[j] = v[sigma^-1(j)]`.
    ///
    /// `v` may be shorter than the permutation (missing ranks read as zero) or
    /// longer, provided the surplus entries are all zero.
    pub fn apply_inverse<T: Copy + Default + PartialEq>(&self, v: &[T]) -> Option<Vec<T>> {
        if v.len() > self.len() && v[self.len()..].iter().any(|x| *x != T::default()) {
            return None;
        }
        Some(
            self.index_to_rank
                .iter()
                .map(|&rank| v.get(rank).copied().unwrap_or_default())
                .collect(),
        )
    }

    /// Equality up to reordering within near-tied ranks of `reference`.
    ///
    /// Ranks whose consecutive `reference` values differ by less than
    /// `tie_tolerance` form one block; the permutations are almost the same
    /// when every block maps to the same set of indices under both.
    pub fn almost_same(&self, other: &Self, reference: &[f64], tie_tolerance: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let value = |rank: usize| reference.get(rank).copied().unwrap_or(0.0);
        let mut start = 0;
        while start < self.len() {
            let mut end = start + 1;
            while end < self.len() && (value(end - 1) - value(end)).abs() < tie_tolerance {
                end += 1;
            }
            let mut a = self.rank_to_index[start..end].to_vec();
            let mut b = other.rank_to_index[start..end].to_vec();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return false;
            }
            start = end;
        }
        true
    }
}
