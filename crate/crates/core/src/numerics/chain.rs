//! QR factorization of block-bidiagonal ("chain") matrices with a small
//! Tikhonov shift, and inverse subspace iteration on the resulting factor.
//!
//! A chain has unknown blocks `x_0, ..., x_P`. Every row group touches one
//! block `x_k` and optionally the next one `x_{k+1}`. Stacking `√δ·I` under
//! the matrix makes the factor square and nonsingular, so the smallest
//! singular values of `[M; √δ I]`, which are `sqrt(s_i² + δ)`, come from
//! triangular solves alone.

use super::householder::qr_in_place;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rows touching block `k` (left part) and possibly block `k + 1`.
pub struct RowGroup {
    pub left: DMatrix<f64>,
    pub right: Option<DMatrix<f64>>,
    pub rhs: Option<DMatrix<f64>>,
}

/// Lazily supplies the blocks of a chain matrix.
pub trait ChainSource {
    fn num_blocks(&self) -> usize;
    fn width(&self, k: usize) -> usize;
    /// Rows acting on block 0 only that precede everything else.
    fn initial_rows(&self) -> Option<RowGroup> {
        None
    }
    fn groups(&self, k: usize) -> Vec<RowGroup>;
}

/// Anything that behaves like a square upper triangular factor.
pub trait TriangularFactor {
    fn dim(&self) -> usize;
    /// Solve `R x = y` in place.
    fn solve(&self, y: &mut DMatrix<f64>);
    /// Solve `Rᵀ x = y` in place.
    fn solve_transpose(&self, y: &mut DMatrix<f64>);
    /// Return `R x`.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

pub struct ChainFactor {
    offsets: Vec<usize>,
    diag: Vec<DMatrix<f64>>,
    off: Vec<Option<DMatrix<f64>>>,
    /// Transformed right-hand sides, one slice per block (empty if none).
    qtb: Vec<DMatrix<f64>>,
    /// Extra rows (acting on block 0) folded in from outside the chain.
    pub carry_in_rows: usize,
}

impl ChainFactor {
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn block(&self, k: usize) -> (&DMatrix<f64>, Option<&DMatrix<f64>>) {
        (&self.diag[k], self.off[k].as_ref())
    }

    /// Regularized least-squares solution from the tracked right-hand sides.
    pub fn least_squares(&self) -> DMatrix<f64> {
        let k = self.qtb.first().map(|q| q.ncols()).unwrap_or(0);
        let mut y = DMatrix::zeros(self.dim(), k);
        for (b, q) in self.qtb.iter().enumerate() {
            let o = self.offsets[b];
            y.view_mut((o, 0), (q.nrows(), k)).copy_from(q);
        }
        self.solve(&mut y);
        y
    }
}

/// Factor `[M; sqrt_delta·I]` for the chain `src` with `rhs_cols` tracked
/// right-hand side columns.
pub fn factor_chain(src: &dyn ChainSource, sqrt_delta: f64, rhs_cols: usize) -> ChainFactor {
    let nb = src.num_blocks();
    let mut offsets = Vec::with_capacity(nb + 1);
    let mut acc = 0;
    for k in 0..nb {
        offsets.push(acc);
        acc += src.width(k);
    }
    offsets.push(acc);

    let mut diag = Vec::with_capacity(nb);
    let mut off = Vec::with_capacity(nb);
    let mut qtb = Vec::with_capacity(nb);
    // carry: rows acting on the current block only, with their rhs
    let w0 = if nb > 0 { src.width(0) } else { 0 };
    let mut carry = DMatrix::<f64>::zeros(0, w0);
    let mut carry_rhs = DMatrix::<f64>::zeros(0, rhs_cols);
    let mut carry_in_rows = 0;
    if let Some(g) = src.initial_rows() {
        carry_in_rows = g.left.nrows();
        carry_rhs = g.rhs.unwrap_or_else(|| DMatrix::zeros(g.left.nrows(), rhs_cols));
        carry = g.left;
    }

    for k in 0..nb {
        let w = src.width(k);
        let wn = if k + 1 < nb { src.width(k + 1) } else { 0 };
        let groups = src.groups(k);
        let mut rows = carry.nrows() + w;
        for g in &groups {
            rows += g.left.nrows();
        }
        let mut a = DMatrix::zeros(rows, w);
        let mut extra = DMatrix::zeros(rows, wn + rhs_cols);
        let mut r = 0;
        a.view_mut((0, 0), (carry.nrows(), w)).copy_from(&carry);
        extra.view_mut((0, wn), (carry.nrows(), rhs_cols)).copy_from(&carry_rhs);
        r += carry.nrows();
        for i in 0..w {
            a[(r + i, i)] = sqrt_delta;
        }
        r += w;
        for g in &groups {
            let gr = g.left.nrows();
            a.view_mut((r, 0), (gr, w)).copy_from(&g.left);
            if let Some(right) = &g.right {
                assert!(k + 1 < nb, "row group reaches past the last block");
                extra.view_mut((r, 0), (gr, wn)).copy_from(right);
            }
            if let Some(rhs) = &g.rhs {
                extra.view_mut((r, wn), (gr, rhs_cols)).copy_from(rhs);
            }
            r += gr;
        }
        qr_in_place(&mut a, &mut extra);
        diag.push(a.view((0, 0), (w, w)).into_owned());
        if wn > 0 {
            off.push(Some(extra.view((0, 0), (w, wn)).into_owned()));
        } else {
            off.push(None);
        }
        qtb.push(extra.view((0, wn), (w, rhs_cols)).into_owned());
        // leftover rows act on block k+1 only
        let left_rows = rows - w;
        if k + 1 < nb {
            let mut next = extra.view((w, 0), (left_rows, wn)).into_owned();
            let mut next_rhs = extra.view((w, wn), (left_rows, rhs_cols)).into_owned();
            if left_rows > wn {
                qr_in_place(&mut next, &mut next_rhs);
                next = next.rows(0, wn).into_owned();
                next_rhs = next_rhs.rows(0, wn).into_owned();
            }
            carry = next;
            carry_rhs = next_rhs;
        }
    }
    ChainFactor { offsets, diag, off, qtb, carry_in_rows }
}

impl TriangularFactor for ChainFactor {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn solve(&self, y: &mut DMatrix<f64>) {
        let p = y.ncols();
        for k in (0..self.diag.len()).rev() {
            let o = self.offsets[k];
            let w = self.offsets[k + 1] - o;
            let mut rhs = y.view((o, 0), (w, p)).into_owned();
            if let Some(rk) = &self.off[k] {
                let wn = rk.ncols();
                let xn = y.view((o + w, 0), (wn, p)).into_owned();
                rhs.gemm(-1.0, rk, &xn, 1.0);
            }
            self.diag[k].solve_upper_triangular_mut(&mut rhs);
            y.view_mut((o, 0), (w, p)).copy_from(&rhs);
        }
    }

    fn solve_transpose(&self, y: &mut DMatrix<f64>) {
        let p = y.ncols();
        for k in 0..self.diag.len() {
            let o = self.offsets[k];
            let w = self.offsets[k + 1] - o;
            let mut rhs = y.view((o, 0), (w, p)).into_owned();
            self.diag[k].tr_solve_upper_triangular_mut(&mut rhs);
            y.view_mut((o, 0), (w, p)).copy_from(&rhs);
            if let Some(rk) = &self.off[k] {
                let wn = rk.ncols();
                let mut next = y.view_mut((o + w, 0), (wn, p));
                next.gemm(-1.0, &rk.transpose(), &rhs, 1.0);
            }
        }
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let p = x.ncols();
        let mut out = DMatrix::zeros(self.dim(), p);
        for k in 0..self.diag.len() {
            let o = self.offsets[k];
            let w = self.offsets[k + 1] - o;
            let mut blk = out.view_mut((o, 0), (w, p));
            blk.gemm(1.0, &self.diag[k], &x.view((o, 0), (w, p)), 0.0);
            if let Some(rk) = &self.off[k] {
                let wn = rk.ncols();
                blk.gemm(1.0, rk, &x.view((o + w, 0), (wn, p)), 1.0);
            }
        }
        out
    }
}

/// Smallest singular triplets of a triangular factor.
pub struct SmallSingular {
    /// Ascending.
    pub values: Vec<f64>,
    /// Right singular vectors as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

/// Inverse subspace iteration with Rayleigh–Ritz extraction.
///
/// Iterates `X <- orth(R⁻¹ R⁻ᵀ X)` from a seeded random start until the
/// Ritz values settle to `rel_tol` (all but the last two, which only bound
/// the convergence) or `max_iter` is reached.
pub fn smallest_singular(f: &dyn TriangularFactor, p: usize, seed: u64, rel_tol: f64, max_iter: usize) -> SmallSingular {
    let p = p.min(f.dim());
    let watch = if p > 2 { p - 2 } else { p };
    subspace_iteration(f, p, seed, max_iter, &|vals, prev| {
        (0..watch).all(|i| (vals[i] - prev[i]).abs() <= rel_tol * prev[i].abs().max(1e-300))
    })
}

/// Like [`smallest_singular`], but only the values below `threshold` must
/// settle to `rel_tol`; the first value above it (which fixes the gap)
/// must settle too, since it fixes the gap. The cluster above it is left
/// unconverged: Ritz values bound the singular values from above.
pub fn smallest_singular_below(f: &dyn TriangularFactor, p: usize, seed: u64, rel_tol: f64, max_iter: usize, threshold: f64) -> SmallSingular {
    let p = p.min(f.dim());
    let watch = if p > 2 { p - 2 } else { p };
    subspace_iteration(f, p, seed, max_iter, &|vals, prev| {
        let below = vals.iter().take_while(|&&v| v < threshold).count();
        if below + 1 > watch {
            return (0..watch).all(|i| (vals[i] - prev[i]).abs() <= rel_tol * prev[i].abs().max(1e-300));
        }
        (0..=below).all(|i| (vals[i] - prev[i]).abs() <= rel_tol * prev[i].abs().max(1e-300))
    })
}

fn subspace_iteration(f: &dyn TriangularFactor, p: usize, seed: u64, max_iter: usize, settled: &dyn Fn(&[f64], &[f64]) -> bool) -> SmallSingular {
    let n = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    x = orthonormalize(&x);
    let mut prev: Option<Vec<f64>> = None;
    let mut result = None;
    for _ in 0..max_iter {
        f.solve_transpose(&mut x);
        f.solve(&mut x);
        x = orthonormalize(&x);
        let (vals, vecs) = ritz(f, &x);
        let done = match &prev {
            Some(pv) => settled(&vals, pv),
            None => false,
        };
        prev = Some(vals.clone());
        result = Some((vals, vecs));
        if done {
            break;
        }
        // restart from the Ritz vectors keeps the basis well ordered
        x = result.as_ref().unwrap().1.clone();
    }
    let (values, vectors) = result.unwrap_or_else(|| ritz(f, &x));
    SmallSingular { values, vectors }
}

fn ritz(f: &dyn TriangularFactor, x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let b = f.apply(x);
    // thin QR then SVD of the small factor
    let qr = b.clone().qr();
    let r = qr.r();
    let svd = r.svd(false, true);
    let vt = svd.v_t.expect("requested right vectors");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let mut w = DMatrix::zeros(x.ncols(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        for r in 0..x.ncols() {
            w[(r, c)] = vt[(i, r)];
        }
    }
    (vals, x * w)
}

/// Orthonormal basis of the column span (modified Gram–Schmidt, twice).
pub fn orthonormalize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = x.clone();
    let p = q.ncols();
    for _ in 0..2 {
        for j in 0..p {
            for i in 0..j {
                let d = q.column(i).dot(&q.column(j));
                let ci: DVector<f64> = q.column(i).into_owned();
                q.column_mut(j).axpy(-d, &ci, 1.0);
            }
            let nrm = q.column(j).norm();
            if nrm > 0.0 {
                q.column_mut(j).scale_mut(1.0 / nrm);
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense {
        blocks: Vec<(DMatrix<f64>, Option<DMatrix<f64>>)>,
        widths: Vec<usize>,
    }

    impl ChainSource for Dense {
        fn num_blocks(&self) -> usize {
            self.widths.len()
        }
        fn width(&self, k: usize) -> usize {
            self.widths[k]
        }
        fn groups(&self, k: usize) -> Vec<RowGroup> {
            if k < self.blocks.len() {
                let (l, r) = &self.blocks[k];
                vec![RowGroup { left: l.clone(), right: r.clone(), rhs: None }]
            } else {
                vec![]
            }
        }
    }

    fn assemble(d: &Dense) -> DMatrix<f64> {
        let cols: usize = d.widths.iter().sum();
        let rows: usize = d.blocks.iter().map(|b| b.0.nrows()).sum();
        let mut m = DMatrix::zeros(rows, cols);
        let mut r = 0;
        let mut c = 0;
        for (k, (l, rt)) in d.blocks.iter().enumerate() {
            m.view_mut((r, c), l.shape()).copy_from(l);
            if let Some(rt) = rt {
                m.view_mut((r, c + d.widths[k]), rt.shape()).copy_from(rt);
            }
            r += l.nrows();
            c += d.widths[k];
        }
        m
    }

    #[test]
    fn chain_singular_values_match_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let widths = vec![6, 6, 6, 6];
        let mut blocks = Vec::new();
        for k in 0..4 {
            let rows = if k == 3 { 3 } else { 6 };
            let l = DMatrix::from_fn(rows, 6, |_, _| rng.random_range(-1.0..1.0));
            let r = if k < 3 { Some(DMatrix::from_fn(rows, 6, |_, _| rng.random_range(-1.0..1.0))) } else { None };
            blocks.push((l, r));
        }
        // plant a near null vector by making block 1 rank deficient
        blocks[1].0.column_mut(2).fill(0.0);
        let d = Dense { blocks, widths };
        let m = assemble(&d);
        let delta: f64 = 1e-9;
        let f = factor_chain(&d, delta, 0);
        let ss = smallest_singular(&f, 6, 1, 1e-12, 200);
        let mut dense: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
        dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // 24 columns, 21 rows: three structural zeros
        let mut expected = vec![0.0; 3];
        expected.extend(dense.iter().cloned());
        for i in 0..4 {
            let e = (expected[i] * expected[i] + delta * delta).sqrt();
            assert!((ss.values[i] - e).abs() < 1e-8 * (1.0 + e), "{i}: {} vs {}", ss.values[i], e);
        }
    }
}
