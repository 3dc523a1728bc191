//! Block-sparse Cholesky factorization of symmetric positive definite
//! matrices with dense blocks.
//!
//! The symbolic phase orders the blocks by a greedy minimum-degree rule
//! weighted by block size and computes the fill pattern; the numeric phase
//! is a right-looking block factorization.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

/// Sparsity pattern over blocks, with elimination order and fill.
#[derive(Debug, Clone)]
pub struct BlockPattern {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    /// `order[k]` is the block eliminated at step `k`.
    order: Vec<usize>,
    /// `pos[b]` is the elimination step of block `b`.
    pos: Vec<usize>,
    /// Per step `k`, sorted later steps coupled to `k` in the factor.
    lower: Vec<Vec<usize>>,
}

impl BlockPattern {
    /// Builds the pattern from block sizes and the coupled block pairs.
    pub fn new(sizes: Vec<usize>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let nb = sizes.len();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nb];
        for (a, b) in edges {
            if a != b {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        let mut eliminated = vec![false; nb];
        let mut order = Vec::with_capacity(nb);
        let mut fill_nbrs: Vec<Vec<usize>> = vec![Vec::new(); nb];
        for _ in 0..nb {
            let mut best = usize::MAX;
            let mut best_cost = usize::MAX;
            for b in 0..nb {
                if eliminated[b] {
                    continue;
                }
                let cost: usize = adj[b].iter().map(|&n| sizes[n]).sum();
                if cost < best_cost {
                    best_cost = cost;
                    best = b;
                }
            }
            eliminated[best] = true;
            order.push(best);
            let nbrs: Vec<usize> = adj[best].iter().copied().collect();
            for &u in &nbrs {
                adj[u].remove(&best);
                for &v in &nbrs {
                    if u != v {
                        adj[u].insert(v);
                    }
                }
            }
            fill_nbrs[best] = nbrs;
            adj[best].clear();
        }
        let mut pos = vec![0; nb];
        for (k, &b) in order.iter().enumerate() {
            pos[b] = k;
        }
        let lower = order
            .iter()
            .map(|&b| {
                let mut l: Vec<usize> = fill_nbrs[b].iter().map(|&n| pos[n]).collect();
                l.sort_unstable();
                l
            })
            .collect();
        let mut offsets = Vec::with_capacity(nb);
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        Self {
            sizes,
            offsets,
            order,
            pos,
            lower,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn size(&self, b: usize) -> usize {
        self.sizes[b]
    }

    pub fn offset(&self, b: usize) -> usize {
        self.offsets[b]
    }

    /// Whether blocks `a` and `b` share a stored block in the factor.
    pub fn coupled(&self, a: usize, b: usize) -> bool {
        if a == b {
            return true;
        }
        let (pa, pb) = (self.pos[a], self.pos[b]);
        let (lo, hi) = if pa < pb { (pa, pb) } else { (pb, pa) };
        self.lower[lo].binary_search(&hi).is_ok()
    }
}

/// Numeric storage for a symmetric matrix on a [`BlockPattern`], factored in place.
#[derive(Debug, Clone)]
pub struct BlockCholesky {
    pattern: BlockPattern,
    /// Diagonal blocks by step.
    diag: Vec<DMatrix<f64>>,
    /// Per step `k`, blocks at rows `lower[k]`; before factoring these hold
    /// `A[row, k]`, afterwards `L[row, k]^T` premultiplied form (see `factor`).
    offd: Vec<Vec<DMatrix<f64>>>,
    factored: bool,
    /// Total diagonal shift added during factorization.
    pub regularized: f64,
}

impl BlockCholesky {
    pub fn new(pattern: BlockPattern) -> Self {
        let diag = pattern
            .order
            .iter()
            .map(|&b| DMatrix::zeros(pattern.sizes[b], pattern.sizes[b]))
            .collect();
        let offd = (0..pattern.num_blocks())
            .map(|k| {
                let nk = pattern.sizes[pattern.order[k]];
                pattern.lower[k]
                    .iter()
                    .map(|&i| DMatrix::zeros(nk, pattern.sizes[pattern.order[i]]))
                    .collect()
            })
            .collect();
        Self {
            pattern,
            diag,
            offd,
            factored: false,
            regularized: 0.0,
        }
    }

    pub fn pattern(&self) -> &BlockPattern {
        &self.pattern
    }

    /// Resets all values to zero.
    pub fn clear(&mut self) {
        for d in &mut self.diag {
            d.fill(0.0);
        }
        for col in &mut self.offd {
            for m in col {
                m.fill(0.0);
            }
        }
        self.factored = false;
        self.regularized = 0.0;
    }

    /// Adds `value` to entry `(ia, ib)` of block pair `(a, b)` and its
    /// symmetric counterpart. For `a == b` only the given entry is touched,
    /// so callers adding a full symmetric diagonal block add every entry.
    #[inline]
    pub fn add(&mut self, a: usize, ia: usize, b: usize, ib: usize, value: f64) {
        let view = self.view(a, b);
        view.add(self, ia, ib, value);
    }

    /// Locates the stored block for the pair `(a, b)`.
    pub fn view(&self, a: usize, b: usize) -> BlockView {
        let (pa, pb) = (self.pattern.pos[a], self.pattern.pos[b]);
        if pa == pb {
            return BlockView::Diag(pa);
        }
        // storage for column `lo` holds an `n_lo x n_hi` block, i.e. the
        // transpose of A[hi, lo] = A[lo, hi]
        let (lo, hi, transposed) = if pa < pb { (pa, pb, false) } else { (pb, pa, true) };
        let j = self.pattern.lower[lo]
            .binary_search(&hi)
            .expect("block pair is not in the pattern");
        BlockView::Off { col: lo, slot: j, transposed }
    }

    /// Adds `v * I` to every diagonal block.
    pub fn add_diagonal(&mut self, v: f64) {
        for d in &mut self.diag {
            for i in 0..d.nrows() {
                d[(i, i)] += v;
            }
        }
    }

    /// Largest absolute diagonal entry.
    pub fn max_diagonal(&self) -> f64 {
        self.diag
            .iter()
            .flat_map(|d| (0..d.nrows()).map(move |i| d[(i, i)].abs()))
            .fold(0.0, f64::max)
    }

    /// Factors in place. Diagonal blocks that are not numerically positive
    /// definite receive a diagonal shift proportional to `reg_scale`.
    /// Returns false if a block contains non-finite values.
    pub fn factor(&mut self, reg_scale: f64) -> bool {
        assert!(!self.factored, "matrix already factored");
        let nb = self.pattern.num_blocks();
        for k in 0..nb {
            let mut akk = std::mem::replace(&mut self.diag[k], DMatrix::zeros(0, 0));
            let Some(lkk) = dense_cholesky(&mut akk, reg_scale, &mut self.regularized) else {
                return false;
            };
            // offd[k][j] holds A[k, row_j] (n_k x n_row); replace with
            // M_j = L_kk^{-1} A[k, row_j] so that L[row_j, k] = M_j^T.
            for m in &mut self.offd[k] {
                let _ = lkk.solve_lower_triangular_mut(m);
            }
            let rows = self.pattern.lower[k].clone();
            for (a, &ra) in rows.iter().enumerate() {
                for (b, &rb) in rows.iter().enumerate().skip(a) {
                    // A[rb, ra] -= L[rb,k] L[ra,k]^T = M_b^T M_a
                    let upd = self.offd[k][b].tr_mul(&self.offd[k][a]);
                    if ra == rb {
                        self.diag[ra] -= upd;
                    } else {
                        // stored at column ra as A[ra, rb] = upd^T
                        let slot = self.pattern.lower[ra]
                            .binary_search(&rb)
                            .expect("fill pattern incomplete");
                        let target = &mut self.offd[ra][slot];
                        for i in 0..target.nrows() {
                            for j in 0..target.ncols() {
                                target[(i, j)] -= upd[(j, i)];
                            }
                        }
                    }
                }
            }
            self.diag[k] = lkk;
        }
        self.factored = true;
        true
    }

    /// Solves `A x = rhs` with the factored matrix.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        assert!(self.factored, "factor before solving");
        let p = &self.pattern;
        let nb = p.num_blocks();
        let mut y: Vec<DVector<f64>> = p
            .order
            .iter()
            .map(|&b| rhs.rows(p.offsets[b], p.sizes[b]).into_owned())
            .collect();
        for k in 0..nb {
            let _ = self.diag[k].solve_lower_triangular_mut(&mut y[k]);
            let yk = y[k].clone();
            for (j, &r) in p.lower[k].iter().enumerate() {
                y[r] -= self.offd[k][j].tr_mul(&yk);
            }
        }
        for k in (0..nb).rev() {
            let mut acc = y[k].clone();
            for (j, &r) in p.lower[k].iter().enumerate() {
                acc -= &self.offd[k][j] * &y[r];
            }
            let _ = self.diag[k].tr_solve_lower_triangular_mut(&mut acc);
            y[k] = acc;
        }
        let mut out = DVector::zeros(p.dim());
        for (k, &b) in p.order.iter().enumerate() {
            out.rows_mut(p.offsets[b], p.sizes[b]).copy_from(&y[k]);
        }
        out
    }
}

/// Location of a stored block.
#[derive(Debug, Clone, Copy)]
pub enum BlockView {
    Diag(usize),
    Off { col: usize, slot: usize, transposed: bool },
}

impl BlockView {
    #[inline]
    pub fn add(&self, m: &mut BlockCholesky, ia: usize, ib: usize, value: f64) {
        match *self {
            BlockView::Diag(k) => m.diag[k][(ia, ib)] += value,
            BlockView::Off { col, slot, transposed } => {
                let t = &mut m.offd[col][slot];
                if transposed {
                    t[(ib, ia)] += value;
                } else {
                    t[(ia, ib)] += value;
                }
            }
        }
    }
}

/// Cholesky factor of a dense symmetric block, shifting the diagonal until
/// it is numerically positive definite.
pub(crate) fn dense_cholesky(
    a: &mut DMatrix<f64>,
    reg_scale: f64,
    total: &mut f64,
) -> Option<DMatrix<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..200 {
        if let Some(ch) = nalgebra::Cholesky::new(a.clone()) {
            *total += shift;
            return Some(ch.unpack());
        }
        let step = if shift == 0.0 {
            reg_scale.max(1e-300) * scale
        } else {
            shift * 9.0
        };
        for i in 0..n {
            a[(i, i)] += step;
        }
        shift += step;
    }
    None
}
