//! Balanced cluster trees over a contiguous index set.

use crate::{CoreError, Result};
use std::ops::Range;

/// A balanced cluster tree of a given depth over the indices `[0, d)`.
///
/// The tree is a perfect binary tree: the root owns the whole index range and
/// every non-leaf splits its range exactly at the midpoint, so all `2^level`
/// nodes of a level own ranges of equal size. Because the split points are
/// fully determined by `(d, depth)` the nodes are not stored; they are
/// recomputed on demand by [`ClusterTree::interval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterTree {
    d: usize,
    depth: usize,
}

impl ClusterTree {
    /// Builds the balanced tree of depth `depth` over `[0, d)`.
    ///
    /// Fails unless `d >= 1` and `2^depth` divides `d`.
    pub fn balanced(d: usize, depth: usize) -> Result<Self> {
        if d == 0 {
            return Err(CoreError::EmptyIndexSet { d });
        }
        let parts = 1usize
            .checked_shl(depth as u32)
            .filter(|p| *p <= d)
            .ok_or(CoreError::Indivisible { d, depth })?;
        if d % parts != 0 {
            return Err(CoreError::Indivisible { d, depth });
        }
        Ok(Self { d, depth })
    }

    /// Number of indices owned by the root.
    pub fn len(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Size of each leaf interval, `d / 2^depth`.
    pub fn leaf_size(&self) -> usize {
        self.d >> self.depth
    }

    /// Number of nodes at `level` (root is level 0).
    pub fn nodes_at(&self, level: usize) -> usize {
        assert!(level <= self.depth, "level {level} beyond depth {}", self.depth);
        1 << level
    }

    /// Index interval owned by node `idx` at `level`.
    pub fn interval(&self, level: usize, idx: usize) -> Range<usize> {
        let n = self.nodes_at(level);
        assert!(idx < n, "node {idx} out of range at level {level}");
        let size = self.d / n;
        idx * size..(idx + 1) * size
    }

    /// Leaf intervals in index order.
    pub fn leaves(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let level = self.depth;
        (0..self.nodes_at(level)).map(move |i| self.interval(level, i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_zero_is_single_root() {
        let t = ClusterTree::balanced(8, 0).unwrap();
        assert_eq!(t.leaf_size(), 8);
        assert_eq!(t.leaves().collect::<Vec<_>>(), vec![0..8]);
    }

    #[test]
    fn midpoint_splits() {
        let t = ClusterTree::balanced(8, 2).unwrap();
        assert_eq!(
            t.leaves().collect::<Vec<_>>(),
            vec![0..2, 2..4, 4..6, 6..8]
        );
        assert_eq!(t.interval(1, 0), 0..4);
        assert_eq!(t.interval(1, 1), 4..8);
    }

    #[test]
    fn rejects_indivisible() {
        let err = ClusterTree::balanced(6, 2).unwrap_err();
        assert_eq!(err, CoreError::Indivisible { d: 6, depth: 2 });
        assert!(err.to_string().contains('6') && err.to_string().contains('2'));
    }

    #[test]
    fn rejects_empty_and_overdeep() {
        assert!(ClusterTree::balanced(0, 0).is_err());
        assert!(ClusterTree::balanced(4, 3).is_err());
        // Depth so large that 2^depth overflows usize.
        assert!(ClusterTree::balanced(4, 200).is_err());
    }

    #[test]
    fn children_partition_parent() {
        let t = ClusterTree::balanced(64, 3).unwrap();
        for level in 0..t.depth() {
            for i in 0..t.nodes_at(level) {
                let parent = t.interval(level, i);
                let left = t.interval(level + 1, 2 * i);
                let right = t.interval(level + 1, 2 * i + 1);
                assert_eq!(parent.start, left.start);
                assert_eq!(left.end, right.start);
                assert_eq!(right.end, parent.end);
            }
        }
    }
}
