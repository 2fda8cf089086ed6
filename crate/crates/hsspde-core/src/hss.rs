//! Telescopic HSS matrices: storage, matvec, dense round-trips, compression.

use crate::dense::DenseMatrix;
use crate::scalar::{from_f64, Scalar};
use crate::svd::left_singular_basis;
use crate::tree::ClusterTree;
use crate::{CoreError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator blocks of one tree level: node `i` owns `d[i]`, `u[i]`, `v[i]`.
#[derive(Debug, Clone, PartialEq)]
struct LevelBlocks<T> {
    d: Vec<DenseMatrix<T>>,
    u: Vec<DenseMatrix<T>>,
    v: Vec<DenseMatrix<T>>,
}

/// A `d x d` matrix in telescopic HSS form over a balanced cluster tree.
///
/// With tree depth `L >= 1` the stored blocks are
///
/// * leaves (tree level `L`, node size `k = d / 2^L`): diagonal block `D_tau`
///   of shape `k x k` and generators `U_tau`, `V_tau` of shape `k x r`;
/// * interior levels `L-1 ..= 1` (node size `2r`): `D_tau` of `2r x 2r`,
///   `U_tau`, `V_tau` of `2r x r`;
/// * the root remainder, a dense `2r x 2r` block.
///
/// The represented matrix unrolls level by level as
/// `A = blkdiag(D) + blkdiag(U) * A' * blkdiag(V)^T`, where `A'` carries the
/// same structure one level down. A depth-0 tree stores a single dense
/// `d x d` root block.
///
/// Values are immutable after construction in normal use; every operation
/// below is a pure function of its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HssMatrix<T> {
    tree: ClusterTree,
    rank: usize,
    /// `levels[0]` holds the leaves (tree level `L`); `levels[k]` holds tree
    /// level `L - k`; the vector covers levels `L ..= 1` and is empty for
    /// depth-0 trees.
    levels: Vec<LevelBlocks<T>>,
    root: DenseMatrix<T>,
}

/// Per-level intermediates of one recorded matvec, consumed by the reverse
/// pass. `level_inputs[k]` is the input vector of tree level `L - k`
/// (`level_inputs[L]` is the root input) and `inner_outputs[k]` the output of
/// the sub-problem that level `L - k` expanded (`inner_outputs[L]` is the
/// root output).
#[derive(Debug, Clone)]
pub struct MatvecTrace<T> {
    pub level_inputs: Vec<Vec<T>>,
    pub inner_outputs: Vec<Vec<T>>,
}

impl<T: Scalar> HssMatrix<T> {
    fn check_shape(tree: &ClusterTree, rank: usize) -> Result<()> {
        if rank == 0 {
            return Err(CoreError::ZeroRank);
        }
        if tree.depth() >= 1 && tree.leaf_size() < rank {
            return Err(CoreError::RankExceedsLeaf {
                d: tree.len(),
                depth: tree.depth(),
                rank,
                leaf: tree.leaf_size(),
            });
        }
        Ok(())
    }

    /// Node size at tree level `level` (`1 <= level <= L`).
    fn node_size(&self, level: usize) -> usize {
        if level == self.tree.depth() {
            self.tree.leaf_size()
        } else {
            2 * self.rank
        }
    }

    fn level_index(&self, level: usize) -> usize {
        debug_assert!(level >= 1 && level <= self.tree.depth());
        self.tree.depth() - level
    }

    /// All-zero structure for the given tree and rank.
    pub fn zeros(tree: ClusterTree, rank: usize) -> Result<Self> {
        Self::check_shape(&tree, rank)?;
        let depth = tree.depth();
        let mut levels = Vec::with_capacity(depth);
        for level in (1..=depth).rev() {
            let nodes = tree.nodes_at(level);
            let size = if level == depth { tree.leaf_size() } else { 2 * rank };
            levels.push(LevelBlocks {
                d: (0..nodes).map(|_| DenseMatrix::zeros(size, size)).collect(),
                u: (0..nodes).map(|_| DenseMatrix::zeros(size, rank)).collect(),
                v: (0..nodes).map(|_| DenseMatrix::zeros(size, rank)).collect(),
            });
        }
        let root_size = if depth == 0 { tree.len() } else { 2 * rank };
        Ok(Self {
            tree,
            rank,
            levels,
            root: DenseMatrix::zeros(root_size, root_size),
        })
    }

    /// Random structure with every generator entry drawn i.i.d. uniform on
    /// `[-s, s]`, `s = scale / sqrt(fan)` where `fan` is the column count of
    /// the block. Blocks are filled in declaration order (leaf level first,
    /// node by node, `D` then `U` then `V`; root last) from a `ChaCha8`
    /// stream seeded with `seed`, so the result is bitwise reproducible.
    pub fn random(tree: ClusterTree, rank: usize, seed: u64, scale: T) -> Result<Self> {
        let mut out = Self::zeros(tree, rank)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |m: &mut DenseMatrix<T>| {
            let bound = scale / from_f64::<T>(m.cols() as f64).sqrt();
            for e in m.data_mut() {
                let unit: f64 = rng.random::<f64>() * 2.0 - 1.0;
                *e = bound * from_f64::<T>(unit);
            }
        };
        for level in &mut out.levels {
            for i in 0..level.d.len() {
                fill(&mut level.d[i]);
                fill(&mut level.u[i]);
                fill(&mut level.v[i]);
            }
        }
        fill(&mut out.root);
        Ok(out)
    }

    /// Embedding of the identity: leaf diagonal blocks are identities and all
    /// other blocks are zero, so `A x = x` regardless of depth.
    pub fn identity(tree: ClusterTree, rank: usize) -> Result<Self> {
        let mut out = Self::zeros(tree, rank)?;
        if out.tree.depth() == 0 {
            out.root = DenseMatrix::identity(out.tree.len());
        } else {
            let k = out.tree.leaf_size();
            for d in &mut out.levels[0].d {
                *d = DenseMatrix::identity(k);
            }
        }
        Ok(out)
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.tree.len()
    }

    /// Exact count of stored scalar entries across all `D`, `U`, `V` blocks.
    pub fn param_count(&self) -> usize {
        let blocks = |l: &LevelBlocks<T>| -> usize {
            l.d.iter()
                .chain(&l.u)
                .chain(&l.v)
                .map(|m| m.rows() * m.cols())
                .sum()
        };
        self.levels.iter().map(blocks).sum::<usize>() + self.root.rows() * self.root.cols()
    }

    /// `y = A x` through the telescopic recursion, never materializing `A`.
    ///
    /// Down sweep: each level compresses its node chunks with `V_tau^T`.
    /// The root block multiplies the fully compressed vector, and the up
    /// sweep expands with `U_tau` and adds the diagonal contribution
    /// `D_tau x_tau`. Cost is `O(d * rank)` for leaf size proportional to
    /// the rank.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.matvec_recording(x)?.0)
    }

    /// Same as [`HssMatrix::matvec`] but also returns the per-level
    /// intermediates needed by a reverse pass.
    pub fn matvec_recording(&self, x: &[T]) -> Result<(Vec<T>, MatvecTrace<T>)> {
        let d = self.dim();
        if x.len() != d {
            return Err(CoreError::LengthMismatch {
                context: "hss matvec input",
                expected: d,
                actual: x.len(),
            });
        }
        let depth = self.tree.depth();
        let rank = self.rank;

        // level_inputs[k] is the input of tree level depth - k.
        let mut level_inputs: Vec<Vec<T>> = Vec::with_capacity(depth + 1);
        level_inputs.push(x.to_vec());
        for level in (1..=depth).rev() {
            let blocks = self.tree.nodes_at(level);
            let size = self.node_size(level);
            let cur = level_inputs.last().unwrap();
            let lv = &self.levels[self.level_index(level)];
            let mut z = vec![T::zero(); blocks * rank];
            for i in 0..blocks {
                let chunk = &cur[i * size..(i + 1) * size];
                let zi = lv.v[i].matvec_transpose(chunk)?;
                z[i * rank..(i + 1) * rank].copy_from_slice(&zi);
            }
            level_inputs.push(z);
        }

        let mut inner_outputs: Vec<Vec<T>> = Vec::with_capacity(depth + 1);
        inner_outputs.push(self.root.matvec(level_inputs.last().unwrap())?);
        for level in 1..=depth {
            let blocks = self.tree.nodes_at(level);
            let size = self.node_size(level);
            let lv = &self.levels[self.level_index(level)];
            let inner = inner_outputs.last().unwrap();
            let xs = &level_inputs[depth - level];
            let mut y = vec![T::zero(); blocks * size];
            for i in 0..blocks {
                let w = &inner[i * rank..(i + 1) * rank];
                let expanded = lv.u[i].matvec(w)?;
                let diag = lv.d[i].matvec(&xs[i * size..(i + 1) * size])?;
                for (dst, (a, b)) in y[i * size..(i + 1) * size]
                    .iter_mut()
                    .zip(expanded.iter().zip(&diag))
                {
                    *dst = *a + *b;
                }
            }
            inner_outputs.push(y);
        }

        let y = inner_outputs.last().unwrap().clone();
        // Reorder so index k refers to tree level depth - k, matching
        // level_inputs ordering documented on MatvecTrace.
        inner_outputs.reverse();
        Ok((
            y,
            MatvecTrace {
                level_inputs,
                inner_outputs,
            },
        ))
    }

    /// Exact adjoints of the recorded matvec.
    ///
    /// Returns `dx = A^T dy` and accumulates the generator gradients of the
    /// scalar function whose output adjoint is `dy` into `grad` (which must
    /// share this matrix's structure): per node, `dD += dy_tau x_tau^T`,
    /// `dU += dy_tau w_tau^T` (inner output), `dV += x_tau h_tau^T` (inner
    /// adjoint).
    pub fn matvec_vjp(
        &self,
        trace: &MatvecTrace<T>,
        dy: &[T],
        grad: &mut HssMatrix<T>,
    ) -> Result<Vec<T>> {
        let d = self.dim();
        if dy.len() != d {
            return Err(CoreError::LengthMismatch {
                context: "hss matvec adjoint input",
                expected: d,
                actual: dy.len(),
            });
        }
        if trace.level_inputs.len() != self.tree.depth() + 1
            || trace.level_inputs[0].len() != d
        {
            return Err(CoreError::LengthMismatch {
                context: "stale matvec trace",
                expected: self.tree.depth() + 1,
                actual: trace.level_inputs.len(),
            });
        }
        let depth = self.tree.depth();
        let rank = self.rank;

        // Phase 1 (adjoint of the up sweep): walk levels L..1 pushing the
        // output adjoint down to the root while collecting dD, dU.
        let mut out_adjoints: Vec<Vec<T>> = Vec::with_capacity(depth + 1);
        out_adjoints.push(dy.to_vec());
        for level in (1..=depth).rev() {
            let blocks = self.tree.nodes_at(level);
            let size = self.node_size(level);
            let li = self.level_index(level);
            let lv = &self.levels[li];
            let g = out_adjoints.last().unwrap();
            let xs = &trace.level_inputs[depth - level];
            let inner = &trace.inner_outputs[li + 1];
            let glv = &mut grad.levels[li];
            let mut down = vec![T::zero(); blocks * rank];
            for i in 0..blocks {
                let gi = &g[i * size..(i + 1) * size];
                let xi = &xs[i * size..(i + 1) * size];
                let wi = &inner[i * rank..(i + 1) * rank];
                outer_add(&mut glv.d[i], gi, xi);
                outer_add(&mut glv.u[i], gi, wi);
                let ui_t_g = lv.u[i].matvec_transpose(gi)?;
                down[i * rank..(i + 1) * rank].copy_from_slice(&ui_t_g);
            }
            out_adjoints.push(down);
        }

        // Root.
        let root_in = trace.level_inputs.last().unwrap();
        let g_root = out_adjoints.last().unwrap().clone();
        outer_add(&mut grad.root, &g_root, root_in);
        let mut h = self.root.matvec_transpose(&g_root)?;

        // Phase 2 (adjoint of the down sweep): walk levels 1..L combining the
        // compressed adjoint with the stored diagonal adjoint, collecting dV.
        for level in 1..=depth {
            let blocks = self.tree.nodes_at(level);
            let size = self.node_size(level);
            let li = self.level_index(level);
            let lv = &self.levels[li];
            let xs = &trace.level_inputs[depth - level];
            let g = &out_adjoints[li];
            let glv = &mut grad.levels[li];
            let mut dx = vec![T::zero(); blocks * size];
            for i in 0..blocks {
                let hi = &h[i * rank..(i + 1) * rank];
                let xi = &xs[i * size..(i + 1) * size];
                let gi = &g[i * size..(i + 1) * size];
                outer_add(&mut glv.v[i], xi, hi);
                let expand = lv.v[i].matvec(hi)?;
                let diag = lv.d[i].matvec_transpose(gi)?;
                for (dst, (a, b)) in dx[i * size..(i + 1) * size]
                    .iter_mut()
                    .zip(expand.iter().zip(&diag))
                {
                    *dst = *a + *b;
                }
            }
            h = dx;
        }
        Ok(h)
    }

    /// Column-wise matvec: `Y[:, b] = A X[:, b]`, bitwise equal to looping
    /// [`HssMatrix::matvec`] over the columns.
    pub fn matvec_batch(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if x.rows() != self.dim() {
            return Err(CoreError::ShapeMismatch {
                context: "hss batch matvec",
                expected_rows: self.dim(),
                expected_cols: x.cols(),
                rows: x.rows(),
                cols: x.cols(),
            });
        }
        let mut out = DenseMatrix::zeros(x.rows(), x.cols());
        let mut col = vec![T::zero(); x.rows()];
        for b in 0..x.cols() {
            for i in 0..x.rows() {
                col[i] = x[(i, b)];
            }
            let y = self.matvec(&col)?;
            for i in 0..x.rows() {
                out[(i, b)] = y[i];
            }
        }
        Ok(out)
    }

    /// Exact unrolling of the telescopic recursion into a dense matrix.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut acc = self.root.clone();
        for level in 1..=self.tree.depth() {
            let blocks = self.tree.nodes_at(level);
            let size = self.node_size(level);
            let lv = &self.levels[self.level_index(level)];
            let n = blocks * size;
            let mut next = DenseMatrix::zeros(n, n);
            // blkdiag(U) * acc * blkdiag(V)^T + blkdiag(D), assembled blockwise.
            for i in 0..blocks {
                for j in 0..blocks {
                    let core = acc.block(i * self.rank..(i + 1) * self.rank, j * self.rank..(j + 1) * self.rank);
                    let block = lv.u[i].matmul(&core).unwrap().matmul(&lv.v[j].transpose()).unwrap();
                    next.set_block(i * size, j * size, &block);
                }
                let mut diag = next.block(i * size..(i + 1) * size, i * size..(i + 1) * size);
                diag.add_assign(&lv.d[i]);
                next.set_block(i * size, i * size, &diag);
            }
            acc = next;
        }
        acc
    }

    /// Compression of a dense matrix into HSS form over `tree` with rank `r`.
    ///
    /// Leaf diagonal blocks are copied verbatim; `U_tau` (resp. `V_tau`) is an
    /// orthonormal basis of the top-`r` left singular subspace of the
    /// off-diagonal block row `A[tau, tau^c]` (resp. of `A[tau^c, tau]^T`).
    /// The remainder `U^T (A - D) V` recurses one level down; singular values
    /// are absorbed into that core. If `A` is exactly HSS of rank `r` over
    /// `tree`, the round trip through [`HssMatrix::to_dense`] reproduces it to
    /// round-off; otherwise the result is the lossy structured approximation.
    pub fn from_dense(a: &DenseMatrix<T>, tree: ClusterTree, rank: usize) -> Result<Self> {
        if !a.is_square() {
            return Err(CoreError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if a.rows() != tree.len() {
            return Err(CoreError::ShapeMismatch {
                context: "dense to hss",
                expected_rows: tree.len(),
                expected_cols: tree.len(),
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let mut out = Self::zeros(tree, rank)?;
        let depth = tree.depth();
        let mut cur = a.clone();
        for level in (1..=depth).rev() {
            let blocks = tree.nodes_at(level);
            let size = cur.rows() / blocks;
            let li = out.level_index(level);
            let cur_t = cur.transpose();
            for i in 0..blocks {
                let rows = i * size..(i + 1) * size;
                out.levels[li].d[i] = cur.block(rows.clone(), rows.clone());
                let row_block = cur.block_excluding_cols(rows.clone(), rows.clone());
                let col_block = cur_t.block_excluding_cols(rows.clone(), rows.clone());
                out.levels[li].u[i] = left_singular_basis(&row_block, rank).0;
                out.levels[li].v[i] = left_singular_basis(&col_block, rank).0;
            }
            // Core for the next level: U^T (A - D) V, assembled blockwise;
            // diagonal blocks of (A - D) vanish by construction.
            let mut next = DenseMatrix::zeros(blocks * rank, blocks * rank);
            for i in 0..blocks {
                for j in 0..blocks {
                    if i == j {
                        continue;
                    }
                    let aij = cur.block(i * size..(i + 1) * size, j * size..(j + 1) * size);
                    let core = out.levels[li].u[i]
                        .matmul_tn(&aij.matmul(&out.levels[li].v[j]).unwrap())
                        .unwrap();
                    next.set_block(i * rank, j * rank, &core);
                }
            }
            cur = next;
        }
        out.root = cur;
        Ok(out)
    }

    /// Writes every stored entry in declaration order (leaf level first, node
    /// by node `D`, `U`, `V`; interior levels towards the root; root last).
    pub fn write_flat(&self, out: &mut Vec<T>) {
        for level in &self.levels {
            for i in 0..level.d.len() {
                out.extend_from_slice(level.d[i].data());
                out.extend_from_slice(level.u[i].data());
                out.extend_from_slice(level.v[i].data());
            }
        }
        out.extend_from_slice(self.root.data());
    }

    /// Reads entries written by [`HssMatrix::write_flat`]; returns how many
    /// scalars were consumed.
    pub fn read_flat(&mut self, src: &[T]) -> Result<usize> {
        let need = self.param_count();
        if src.len() < need {
            return Err(CoreError::LengthMismatch {
                context: "hss parameter block",
                expected: need,
                actual: src.len(),
            });
        }
        let mut pos = 0usize;
        let take = |m: &mut DenseMatrix<T>, src: &[T], pos: &mut usize| {
            let n = m.rows() * m.cols();
            m.data_mut().copy_from_slice(&src[*pos..*pos + n]);
            *pos += n;
        };
        for level in &mut self.levels {
            for i in 0..level.d.len() {
                take(&mut level.d[i], src, &mut pos);
                take(&mut level.u[i], src, &mut pos);
                take(&mut level.v[i], src, &mut pos);
            }
        }
        take(&mut self.root, src, &mut pos);
        Ok(pos)
    }

    /// Names and entry counts of every parameter block in declaration order.
    pub fn block_dims(&self) -> Vec<(String, usize)> {
        let depth = self.tree.depth();
        let mut out = Vec::new();
        for (k, level) in self.levels.iter().enumerate() {
            let tree_level = depth - k;
            for i in 0..level.d.len() {
                for (tag, m) in [("d", &level.d[i]), ("u", &level.u[i]), ("v", &level.v[i])] {
                    out.push((
                        format!("level{tree_level}.node{i}.{tag}"),
                        m.rows() * m.cols(),
                    ));
                }
            }
        }
        out.push(("root".to_string(), self.root.rows() * self.root.cols()));
        out
    }

    /// Visits every parameter block mutably in declaration order; used by
    /// tests that poke individual blocks.
    pub fn for_each_block_mut(&mut self, mut f: impl FnMut(&str, &mut DenseMatrix<T>)) {
        let depth = self.tree.depth();
        for (k, level) in self.levels.iter_mut().enumerate() {
            let tree_level = depth - k;
            for i in 0..level.d.len() {
                f(&format!("level{tree_level}.node{i}.d"), &mut level.d[i]);
                f(&format!("level{tree_level}.node{i}.u"), &mut level.u[i]);
                f(&format!("level{tree_level}.node{i}.v"), &mut level.v[i]);
            }
        }
        f("root", &mut self.root);
    }
}

/// `m += a b^T` for vectors `a`, `b`.
fn outer_add<T: Scalar>(m: &mut DenseMatrix<T>, a: &[T], b: &[T]) {
    debug_assert_eq!(m.rows(), a.len());
    debug_assert_eq!(m.cols(), b.len());
    for i in 0..a.len() {
        let ai = a[i];
        if ai == T::zero() {
            continue;
        }
        let row = i * b.len();
        let data = m.data_mut();
        for (j, bj) in b.iter().enumerate() {
            data[row + j] += ai * *bj;
        }
    }
}
