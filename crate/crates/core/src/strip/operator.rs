//! The discretized operator `∂s − A(s)` on a truncated s-interval with
//! spectral (APS) end conditions, and its rank analysis.
//!
//! Unknowns are node values `u_0..u_N` (each in the t-layout). Rows:
//!
//! * left end: `P₋ᵀ u_0 = 0`, P₋ = eigenvectors of A₋ with λ < 0;
//! * cell j: `(u_{j+1} − u_j)/h − A_{j+½}(u_{j+1} + u_j)/2` (box scheme);
//! * right end: `P₊ᵀ u_N = 0`, P₊ = eigenvectors of A₊ with λ > 0.
//!
//! Cells where the coefficient equals an end coefficient exactly ("settled
//! segments") are never assembled: in the eigenbasis of the end operator
//! they decouple into scalar recurrences that are eliminated exactly by
//! 3×3 orthogonal steps, leaving only a weighted projection onto the first
//! (or last) core node. Cost is therefore independent of the truncation
//! length.

use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::chain::{factor_chain, smallest_singular_below, ChainFactor, ChainSource, RowGroup, TriangularFactor};
use crate::numerics::{decide, EigenDecomposition, RankDecision, RankPolicy, TLayout};

/// Spectral data of one end and the number of settled cells next to it.
#[derive(Debug, Clone)]
pub struct EndData {
    pub eig: EigenDecomposition,
    pub segment_cells: usize,
}

#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub layout: TLayout,
    /// Matrix of `−i∂t` on the layout.
    pub t_matrix: Arc<DMatrix<f64>>,
    pub h: f64,
    pub s_start: f64,
    pub cells: usize,
    /// Pointwise coefficient blocks at the midpoints of the core cells
    /// (cells `left.segment_cells .. cells − right.segment_cells`).
    pub core: Vec<Vec<DMatrix<f64>>>,
    /// Coefficient blocks of the settled ends (used only when assembling).
    pub minus_blocks: Vec<DMatrix<f64>>,
    pub plus_blocks: Vec<DMatrix<f64>>,
    pub left: EndData,
    pub right: EndData,
    pub transposed: bool,
    pub provenance: String,
}

/// Kernel and cokernel decisions with optional basis vectors.
#[derive(Debug, Clone)]
pub struct RankAnalysis {
    pub kernel: RankDecision,
    pub cokernel: RankDecision,
    pub sigma_max: f64,
}

impl DiscretizedOperator {
    pub fn m(&self) -> usize {
        self.layout.dim()
    }

    fn core_range(&self) -> (usize, usize) {
        (self.left.segment_cells, self.cells - self.right.segment_cells)
    }

    pub fn aps_minus_rows(&self) -> usize {
        self.left.eig.count_negative()
    }

    pub fn aps_plus_rows(&self) -> usize {
        self.right.eig.count_positive()
    }

    /// Row and column counts of the untransposed matrix.
    fn base_shape(&self) -> (usize, usize) {
        let m = self.m();
        (self.aps_minus_rows() + self.cells * m + self.aps_plus_rows(), (self.cells + 1) * m)
    }

    pub fn shape(&self) -> (usize, usize) {
        let (r, c) = self.base_shape();
        if self.transposed {
            (c, r)
        } else {
            (r, c)
        }
    }

    /// Columns minus rows: the index of the finite matrix.
    pub fn index(&self) -> i64 {
        let (r, c) = self.shape();
        c as i64 - r as i64
    }

    /// Transpose with respect to the ℓ² inner products.
    pub fn adjoint(&self) -> DiscretizedOperator {
        let mut out = self.clone();
        out.transposed = !self.transposed;
        out
    }

    /// Coefficient blocks used on cell `j`.
    fn cell_blocks(&self, j: usize) -> &[DMatrix<f64>] {
        let (a, b) = self.core_range();
        if j < a {
            &self.minus_blocks
        } else if j >= b {
            &self.plus_blocks
        } else {
            &self.core[j - a]
        }
    }

    /// `A = T − S` on cell `j`.
    pub fn cell_a(&self, j: usize) -> DMatrix<f64> {
        let mut a = (*self.t_matrix).clone();
        for (p, blk) in self.cell_blocks(j).iter().enumerate() {
            let o = self.layout.offset(p);
            let d = blk.nrows();
            let mut v = a.view_mut((o, o), (d, d));
            v -= blk;
        }
        a
    }

    /// (C, B): the cell row is `C u_j + B u_{j+1}`.
    pub fn cell_blocks_cb(&self, j: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let a = self.cell_a(j) * 0.5;
        let m = self.m();
        let id = DMatrix::<f64>::identity(m, m) / self.h;
        (-&id - &a, id - a)
    }

    fn aps_minus(&self) -> DMatrix<f64> {
        self.left.eig.select(|l| l < 0.0)
    }

    fn aps_plus(&self) -> DMatrix<f64> {
        self.right.eig.select(|l| l > 0.0)
    }

    /// Dense matrix (small problems and tests only).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (r, c) = self.base_shape();
        let m = self.m();
        let mut out = DMatrix::zeros(r, c);
        let pm = self.aps_minus();
        let bm = pm.ncols();
        out.view_mut((0, 0), (bm, m)).copy_from(&pm.transpose());
        for j in 0..self.cells {
            let (cm, bmat) = self.cell_blocks_cb(j);
            let row = bm + j * m;
            out.view_mut((row, j * m), (m, m)).copy_from(&cm);
            out.view_mut((row, (j + 1) * m), (m, m)).copy_from(&bmat);
        }
        let pp = self.aps_plus();
        out.view_mut((bm + self.cells * m, self.cells * m), (pp.ncols(), m)).copy_from(&pp.transpose());
        if self.transposed {
            out.transpose()
        } else {
            out
        }
    }

    /// `M x` for the untransposed matrix.
    fn apply_base(&self, x: &DVector<f64>) -> DVector<f64> {
        let (r, _) = self.base_shape();
        let m = self.m();
        let mut y = DVector::zeros(r);
        let pm = self.aps_minus();
        let bm = pm.ncols();
        y.rows_mut(0, bm).copy_from(&(pm.transpose() * x.rows(0, m)));
        for j in 0..self.cells {
            let (cm, bmat) = self.cell_blocks_cb(j);
            let v = cm * x.rows(j * m, m) + bmat * x.rows((j + 1) * m, m);
            y.rows_mut(bm + j * m, m).copy_from(&v);
        }
        let pp = self.aps_plus();
        let bp = pp.ncols();
        y.rows_mut(bm + self.cells * m, bp).copy_from(&(pp.transpose() * x.rows(self.cells * m, m)));
        y
    }

    /// `Mᵀ y` for the untransposed matrix.
    fn apply_base_t(&self, y: &DVector<f64>) -> DVector<f64> {
        let (_, c) = self.base_shape();
        let m = self.m();
        let mut x = DVector::zeros(c);
        let pm = self.aps_minus();
        let bm = pm.ncols();
        {
            let mut xs = x.rows_mut(0, m);
            xs += &pm * y.rows(0, bm);
        }
        for j in 0..self.cells {
            let (cm, bmat) = self.cell_blocks_cb(j);
            let yj = y.rows(bm + j * m, m);
            let a = cm.tr_mul(&yj);
            let b = bmat.tr_mul(&yj);
            let mut x0 = x.rows_mut(j * m, m);
            x0 += a;
            let mut x1 = x.rows_mut((j + 1) * m, m);
            x1 += b;
        }
        let pp = self.aps_plus();
        let bp = pp.ncols();
        let mut xs = x.rows_mut(self.cells * m, m);
        xs += &pp * y.rows(bm + self.cells * m, bp);
        x
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.transposed {
            self.apply_base_t(x)
        } else {
            self.apply_base(x)
        }
    }

    pub fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        if self.transposed {
            self.apply_base(y)
        } else {
            self.apply_base_t(y)
        }
    }

    /// Largest singular value, up to a factor √2: the maximum of the
    /// settled end blocks (closed form per eigenmode) and of the assembled
    /// core (deterministic power iteration on MᵀM restricted to it).
    pub fn sigma_max(&self) -> f64 {
        let h = self.h;
        let mut best: f64 = 0.0;
        for e in [&self.left.eig, &self.right.eig] {
            for &l in &e.values {
                best = best.max((2.0 / (h * h) + 0.5 * l * l).sqrt());
            }
            best = best.max(1.0);
        }
        let (a, b) = self.core_range();
        if b > a {
            let m = self.m();
            let nodes = b - a + 1;
            let blocks: Vec<(DMatrix<f64>, DMatrix<f64>)> = (a..b).map(|j| self.cell_blocks_cb(j)).collect();
            let mut x = DVector::from_fn(nodes * m, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0);
            x /= x.norm();
            for _ in 0..10 {
                let mut z = DVector::zeros(nodes * m);
                for (k, (c, bm)) in blocks.iter().enumerate() {
                    let y = c * x.rows(k * m, m) + bm * x.rows((k + 1) * m, m);
                    let mut z0 = z.rows_mut(k * m, m);
                    z0.gemv_tr(1.0, c, &y, 1.0);
                    let mut z1 = z.rows_mut((k + 1) * m, m);
                    z1.gemv_tr(1.0, bm, &y, 1.0);
                }
                let nz = z.norm();
                if nz == 0.0 {
                    break;
                }
                best = best.max(nz.sqrt());
                x = z / nz;
            }
        }
        best
    }

    /// Factor `[M; √δ I]` (or its transpose) for rank analysis.
    pub fn factor(&self, sqrt_delta: f64) -> OperatorFactor {
        if self.transposed {
            OperatorFactor::Transposed(factor_chain(&TransposedChain { op: self }, sqrt_delta, 0))
        } else {
            OperatorFactor::Segmented(SegmentedFactor::new(self, sqrt_delta))
        }
    }

    /// Kernel/cokernel decisions from the smallest singular values.
    pub fn rank_analysis(&self, policy: &RankPolicy) -> Result<RankAnalysis> {
        let (ra, _) = self.rank_analysis_with_vectors(policy, 0)?;
        Ok(ra)
    }

    /// Rank analysis plus up to `want` kernel vectors (node-major layout).
    pub fn rank_analysis_with_vectors(&self, policy: &RankPolicy, want: usize) -> Result<(RankAnalysis, Vec<DVector<f64>>)> {
        let sigma_max = self.sigma_max();
        let thr = policy.threshold(sigma_max);
        let sqrt_delta = 1e-3 * thr;
        let (rows, cols) = self.shape();
        let structural = cols.saturating_sub(rows);
        let f = self.factor(sqrt_delta);
        let mut p = structural + 4;
        loop {
            let ss = smallest_singular_below(&f, p, 17, policy.value_tol, policy.max_iter(), thr);
            let count = ss.values.iter().filter(|&&v| v < thr).count();
            if count + 1 >= ss.values.len() && p < cols {
                p = (2 * p).min(cols);
                continue;
            }
            let kernel = decide(&ss.values, 0, thr, policy)?;
            let ker = kernel.zero_count;
            let coker_count = (ker as i64 - (cols as i64 - rows as i64)) as usize;
            let cokernel = RankDecision { zero_count: coker_count, ..kernel.clone() };
            let k = want.min(ker);
            let mut vecs = Vec::with_capacity(k);
            for i in 0..k {
                let z = ss.vectors.column(i).into_owned();
                vecs.push(f.to_unknowns(self, &z));
            }
            return Ok((RankAnalysis { kernel, cokernel, sigma_max }, vecs));
        }
    }
}

/// Chain of the untransposed matrix restricted to the core nodes.
struct CoreChain<'a> {
    op: &'a DiscretizedOperator,
    initial: DMatrix<f64>,
    last: DMatrix<f64>,
}

impl ChainSource for CoreChain<'_> {
    fn num_blocks(&self) -> usize {
        let (a, b) = self.op.core_range();
        b - a + 1
    }
    fn width(&self, _k: usize) -> usize {
        self.op.m()
    }
    fn initial_rows(&self) -> Option<RowGroup> {
        Some(RowGroup { left: self.initial.clone(), right: None, rhs: None })
    }
    fn groups(&self, k: usize) -> Vec<RowGroup> {
        let (a, _) = self.op.core_range();
        if k + 1 < self.num_blocks() {
            let (c, b) = self.op.cell_blocks_cb(a + k);
            vec![RowGroup { left: c, right: Some(b), rhs: None }]
        } else if self.last.nrows() > 0 {
            vec![RowGroup { left: self.last.clone(), right: None, rhs: None }]
        } else {
            vec![]
        }
    }
}

/// Chain of Mᵀ with all cells explicit. Unknown blocks: the left end
/// multipliers, the cell multipliers, the right end multipliers.
pub(crate) struct TransposedChain<'a> {
    pub op: &'a DiscretizedOperator,
}

impl TransposedChain<'_> {
    fn bm(&self) -> usize {
        self.op.aps_minus_rows()
    }
    fn bp(&self) -> usize {
        self.op.aps_plus_rows()
    }
    fn has_left(&self) -> bool {
        self.bm() > 0
    }
    fn has_right(&self) -> bool {
        self.bp() > 0
    }
    /// Which kind of block index `k` is: Left, Cell(j), Right.
    fn kind(&self, k: usize) -> BlockKind {
        let k0 = if self.has_left() { 1 } else { 0 };
        if self.has_left() && k == 0 {
            BlockKind::Left
        } else if k - k0 < self.op.cells {
            BlockKind::Cell(k - k0)
        } else {
            BlockKind::Right
        }
    }
}

enum BlockKind {
    Left,
    Cell(usize),
    Right,
}

impl ChainSource for TransposedChain<'_> {
    fn num_blocks(&self) -> usize {
        self.op.cells + self.has_left() as usize + self.has_right() as usize
    }
    fn width(&self, k: usize) -> usize {
        match self.kind(k) {
            BlockKind::Left => self.bm(),
            BlockKind::Cell(_) => self.op.m(),
            BlockKind::Right => self.bp(),
        }
    }
    fn groups(&self, k: usize) -> Vec<RowGroup> {
        let op = self.op;
        let n_cells = op.cells;
        // rows of node `node` as (block of first unknown, left, right)
        match self.kind(k) {
            BlockKind::Left => {
                let (c0, _) = op.cell_blocks_cb(0);
                vec![RowGroup { left: op.aps_minus(), right: Some(c0.transpose()), rhs: None }]
            }
            BlockKind::Cell(j) => {
                let mut g = Vec::new();
                if j == 0 && !self.has_left() {
                    let (c0, _) = op.cell_blocks_cb(0);
                    g.push(RowGroup { left: c0.transpose(), right: None, rhs: None });
                }
                let (_, bj) = op.cell_blocks_cb(j);
                let right = if j + 1 < n_cells {
                    let (cn, _) = op.cell_blocks_cb(j + 1);
                    Some(cn.transpose())
                } else if self.has_right() {
                    Some(op.aps_plus())
                } else {
                    None
                };
                g.push(RowGroup { left: bj.transpose(), right, rhs: None });
                g
            }
            BlockKind::Right => vec![],
        }
    }
}

/// Scalar recurrences of one settled segment in the end eigenbasis.
#[derive(Debug, Clone)]
struct SegmentR {
    /// diag[c*m + mode], off[c*m + mode] for elimination step c.
    diag: Vec<f64>,
    off: Vec<f64>,
    steps: usize,
    /// Leftover weights on the shared node (per mode).
    carry: Vec<f64>,
}

fn eliminate_segment(eig: &EigenDecomposition, steps: usize, h: f64, sqrt_delta: f64, left: bool) -> SegmentR {
    let m = eig.values.len();
    let delta = sqrt_delta * sqrt_delta;
    let mut diag = vec![0.0; steps * m];
    let mut off = vec![0.0; steps * m];
    let mut carry = vec![0.0; m];
    for (mode, &lam) in eig.values.iter().enumerate() {
        let b = 1.0 / h - 0.5 * lam; // coefficient of u_{j+1}
        let c = -1.0 / h - 0.5 * lam; // coefficient of u_j
        let (piv, nxt) = if left { (c, b) } else { (b, c) };
        let constrained = if left { lam < 0.0 } else { lam > 0.0 };
        let mut rho: f64 = if constrained { 1.0 } else { 0.0 };
        for s in 0..steps {
            let d = (rho * rho + delta + piv * piv).sqrt();
            diag[s * m + mode] = d;
            off[s * m + mode] = piv * nxt / d;
            rho = nxt.abs() * (rho * rho + delta).sqrt() / d;
        }
        carry[mode] = rho;
    }
    SegmentR { diag, off, steps, carry }
}

impl SegmentR {
    /// Rows `carry_λ v_λᵀ` for the nonzero carries.
    fn carry_rows(&self, eig: &EigenDecomposition) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.carry.len()).filter(|&i| self.carry[i] != 0.0).collect();
        let m = eig.vectors.nrows();
        DMatrix::from_fn(idx.len(), m, |r, c| self.carry[idx[r]] * eig.vectors[(c, idx[r])])
    }

    fn len(&self) -> usize {
        self.steps * self.carry.len()
    }

    /// Back substitution; `shared` is the projection of the shared node on
    /// the eigenbasis.
    fn solve(&self, y: &mut [f64], shared: &[f64], p: usize) {
        let m = self.carry.len();
        for s in (0..self.steps).rev() {
            for mode in 0..m {
                for col in 0..p {
                    let next = if s + 1 == self.steps { shared[mode * p + col] } else { y[((s + 1) * m + mode) * p + col] };
                    let i = (s * m + mode) * p + col;
                    y[i] = (y[i] - self.off[s * m + mode] * next) / self.diag[s * m + mode];
                }
            }
        }
    }

    /// Forward substitution for Rᵀ; returns the coupling into the shared
    /// node in eigen coordinates.
    fn solve_transpose(&self, y: &mut [f64], p: usize) -> Vec<f64> {
        let m = self.carry.len();
        let mut out = vec![0.0; m * p];
        for s in 0..self.steps {
            for mode in 0..m {
                for col in 0..p {
                    let i = (s * m + mode) * p + col;
                    if s > 0 {
                        let prev = y[((s - 1) * m + mode) * p + col];
                        y[i] -= self.off[(s - 1) * m + mode] * prev;
                    }
                    y[i] /= self.diag[s * m + mode];
                }
            }
        }
        if self.steps > 0 {
            let s = self.steps - 1;
            for mode in 0..m {
                for col in 0..p {
                    out[mode * p + col] = self.off[s * m + mode] * y[(s * m + mode) * p + col];
                }
            }
        }
        out
    }

    fn apply(&self, x: &[f64], shared: &[f64], p: usize) -> Vec<f64> {
        let m = self.carry.len();
        let mut out = vec![0.0; self.len() * p];
        for s in 0..self.steps {
            for mode in 0..m {
                for col in 0..p {
                    let next = if s + 1 == self.steps { shared[mode * p + col] } else { x[((s + 1) * m + mode) * p + col] };
                    let i = (s * m + mode) * p + col;
                    out[i] = self.diag[s * m + mode] * x[i] + self.off[s * m + mode] * next;
                }
            }
        }
        out
    }
}

/// Factor of the untransposed operator: two scalar segments plus the core
/// chain. Unknown order: left segment, right segment (far end first), core.
pub struct SegmentedFactor {
    left: SegmentR,
    right: SegmentR,
    left_vecs: DMatrix<f64>,
    right_vecs: DMatrix<f64>,
    chain: ChainFactor,
    m: usize,
}

impl SegmentedFactor {
    fn new(op: &DiscretizedOperator, sqrt_delta: f64) -> SegmentedFactor {
        let left = eliminate_segment(&op.left.eig, op.left.segment_cells, op.h, sqrt_delta, true);
        let right = eliminate_segment(&op.right.eig, op.right.segment_cells, op.h, sqrt_delta, false);
        let chain = {
            let src = CoreChain { op, initial: left.carry_rows(&op.left.eig), last: right.carry_rows(&op.right.eig) };
            factor_chain(&src, sqrt_delta, 0)
        };
        SegmentedFactor {
            left,
            right,
            left_vecs: op.left.eig.vectors.clone(),
            right_vecs: op.right.eig.vectors.clone(),
            chain,
            m: op.m(),
        }
    }

    fn split(&self) -> (usize, usize, usize) {
        (self.left.len(), self.right.len(), self.chain.dim())
    }

    /// Row-major copy of a block of rows of `y` (p columns).
    fn rows_to_vec(y: &DMatrix<f64>, start: usize, len: usize) -> Vec<f64> {
        let p = y.ncols();
        let mut v = vec![0.0; len * p];
        for r in 0..len {
            for c in 0..p {
                v[r * p + c] = y[(start + r, c)];
            }
        }
        v
    }

    fn vec_to_rows(y: &mut DMatrix<f64>, start: usize, v: &[f64]) {
        let p = y.ncols();
        for r in 0..v.len() / p {
            for c in 0..p {
                y[(start + r, c)] = v[r * p + c];
            }
        }
    }

    /// Eigen-coordinates (row-major, m×p) of a core node block.
    fn project(vecs: &DMatrix<f64>, y: &DMatrix<f64>, start: usize, m: usize) -> Vec<f64> {
        let p = y.ncols();
        let blk = vecs.tr_mul(&y.view((start, 0), (m, p)));
        let mut v = vec![0.0; m * p];
        for r in 0..m {
            for c in 0..p {
                v[r * p + c] = blk[(r, c)];
            }
        }
        v
    }
}

impl TriangularFactor for SegmentedFactor {
    fn dim(&self) -> usize {
        let (a, b, c) = self.split();
        a + b + c
    }

    fn solve(&self, y: &mut DMatrix<f64>) {
        let (nl, nr, nc) = self.split();
        let p = y.ncols();
        let m = self.m;
        let mut core = y.view((nl + nr, 0), (nc, p)).into_owned();
        self.chain.solve(&mut core);
        y.view_mut((nl + nr, 0), (nc, p)).copy_from(&core);
        let first = Self::project(&self.left_vecs, &core, 0, m);
        let last = Self::project(&self.right_vecs, &core, nc - m, m);
        let mut l = Self::rows_to_vec(y, 0, nl);
        self.left.solve(&mut l, &first, p);
        Self::vec_to_rows(y, 0, &l);
        let mut r = Self::rows_to_vec(y, nl, nr);
        self.right.solve(&mut r, &last, p);
        Self::vec_to_rows(y, nl, &r);
    }

    fn solve_transpose(&self, y: &mut DMatrix<f64>) {
        let (nl, nr, nc) = self.split();
        let p = y.ncols();
        let m = self.m;
        let mut l = Self::rows_to_vec(y, 0, nl);
        let cl = self.left.solve_transpose(&mut l, p);
        Self::vec_to_rows(y, 0, &l);
        let mut r = Self::rows_to_vec(y, nl, nr);
        let cr = self.right.solve_transpose(&mut r, p);
        Self::vec_to_rows(y, nl, &r);
        let mut core = y.view((nl + nr, 0), (nc, p)).into_owned();
        if self.left.steps > 0 {
            let c = DMatrix::from_row_slice(m, p, &cl);
            let mut blk = core.view_mut((0, 0), (m, p));
            blk.gemm(-1.0, &self.left_vecs, &c, 1.0);
        }
        if self.right.steps > 0 {
            let c = DMatrix::from_row_slice(m, p, &cr);
            let mut blk = core.view_mut((nc - m, 0), (m, p));
            blk.gemm(-1.0, &self.right_vecs, &c, 1.0);
        }
        self.chain.solve_transpose(&mut core);
        y.view_mut((nl + nr, 0), (nc, p)).copy_from(&core);
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (nl, nr, nc) = self.split();
        let p = x.ncols();
        let m = self.m;
        let core = x.view((nl + nr, 0), (nc, p)).into_owned();
        let first = Self::project(&self.left_vecs, &core, 0, m);
        let last = Self::project(&self.right_vecs, &core, nc - m, m);
        let mut out = DMatrix::zeros(self.dim(), p);
        let l = self.left.apply(&Self::rows_to_vec(x, 0, nl), &first, p);
        Self::vec_to_rows(&mut out, 0, &l);
        let r = self.right.apply(&Self::rows_to_vec(x, nl, nr), &last, p);
        Self::vec_to_rows(&mut out, nl, &r);
        out.view_mut((nl + nr, 0), (nc, p)).copy_from(&self.chain.apply(&core));
        out
    }
}

pub enum OperatorFactor {
    Segmented(SegmentedFactor),
    Transposed(ChainFactor),
}

impl OperatorFactor {
    /// Map a vector in factor ordering to the operator's unknown ordering
    /// (node-major for the operator, multiplier order for its transpose).
    pub fn to_unknowns(&self, op: &DiscretizedOperator, z: &DVector<f64>) -> DVector<f64> {
        match self {
            OperatorFactor::Transposed(_) => z.clone(),
            OperatorFactor::Segmented(f) => {
                let m = f.m;
                let (nl, nr, nc) = f.split();
                let mut u = DVector::zeros((op.cells + 1) * m);
                let kl = op.left.segment_cells;
                for s in 0..kl {
                    let w = z.rows(s * m, m);
                    u.rows_mut(s * m, m).copy_from(&(&f.left_vecs * w));
                }
                for r in 0..op.right.segment_cells {
                    let w = z.rows(nl + r * m, m);
                    let node = op.cells - r;
                    u.rows_mut(node * m, m).copy_from(&(&f.right_vecs * w));
                }
                u.rows_mut(kl * m, nc).copy_from(&z.rows(nl + nr, nc));
                u
            }
        }
    }
}

impl TriangularFactor for OperatorFactor {
    fn dim(&self) -> usize {
        match self {
            OperatorFactor::Segmented(f) => f.dim(),
            OperatorFactor::Transposed(f) => f.dim(),
        }
    }
    fn solve(&self, y: &mut DMatrix<f64>) {
        match self {
            OperatorFactor::Segmented(f) => f.solve(y),
            OperatorFactor::Transposed(f) => f.solve(y),
        }
    }
    fn solve_transpose(&self, y: &mut DMatrix<f64>) {
        match self {
            OperatorFactor::Segmented(f) => f.solve_transpose(y),
            OperatorFactor::Transposed(f) => f.solve_transpose(y),
        }
    }
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            OperatorFactor::Segmented(f) => f.apply(x),
            OperatorFactor::Transposed(f) => f.apply(x),
        }
    }
}

/// Least-squares solve of `M u = η` for an operator without settled
/// segments (all cells explicit). `eta` holds one vector per cell row block
/// (APS rows get zero right-hand side).
pub fn least_squares_cells(op: &DiscretizedOperator, eta: &[DVector<f64>], sqrt_delta: f64) -> Result<DVector<f64>> {
    if op.left.segment_cells + op.right.segment_cells > 0 || op.transposed {
        return Err(Error::InvalidInput("least squares needs an explicit, untransposed discretization".into()));
    }
    if eta.len() != op.cells {
        return Err(Error::BadDimensions("one right-hand side block per cell expected".into()));
    }
    struct Src<'a> {
        op: &'a DiscretizedOperator,
        eta: &'a [DVector<f64>],
    }
    impl ChainSource for Src<'_> {
        fn num_blocks(&self) -> usize {
            self.op.cells + 1
        }
        fn width(&self, _k: usize) -> usize {
            self.op.m()
        }
        fn initial_rows(&self) -> Option<RowGroup> {
            let p = self.op.aps_minus();
            let r = p.ncols();
            Some(RowGroup { left: p.transpose(), right: None, rhs: Some(DMatrix::zeros(r, 1)) })
        }
        fn groups(&self, k: usize) -> Vec<RowGroup> {
            if k < self.op.cells {
                let (c, b) = self.op.cell_blocks_cb(k);
                let rhs = DMatrix::from_column_slice(self.op.m(), 1, self.eta[k].as_slice());
                vec![RowGroup { left: c, right: Some(b), rhs: Some(rhs) }]
            } else {
                let p = self.op.aps_plus();
                let r = p.ncols();
                vec![RowGroup { left: p.transpose(), right: None, rhs: Some(DMatrix::zeros(r, 1)) }]
            }
        }
    }
    let f = factor_chain(&Src { op, eta }, sqrt_delta, 1);
    let x = f.least_squares();
    Ok(x.column(0).into_owned())
}
