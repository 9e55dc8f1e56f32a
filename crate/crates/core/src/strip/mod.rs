//! Cauchy–Riemann type operators `∂s + J0∂t + S(s,t)` on truncated strips
//! and cylinders: problems, discretization, numerical Fredholm index,
//! translation-invariant solves and gluing.

pub mod operator;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use rand::Rng;

use crate::asymptotic::{discretize_asymptotic, eig_on, spectrum, AsymptoticOperator};
use crate::error::{Error, Result};
use crate::numerics::{anti_linear, CMatrix, DomainKind, Grid1D, RankDecision, RankPolicy, TLayout, C64};
pub use operator::{least_squares_cells, DiscretizedOperator, EndData, RankAnalysis};

/// Admissible interpolation profiles: 0 for s ≤ 0, 1 for s ≥ 1, monotone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `3s² − 2s³`
    #[default]
    Smoothstep,
    /// `6s⁵ − 15s⁴ + 10s³`
    Quintic,
}

impl Profile {
    pub fn eval(&self, s: f64) -> f64 {
        let x = s.clamp(0.0, 1.0);
        match self {
            Profile::Smoothstep => x * x * (3.0 - 2.0 * x),
            Profile::Quintic => x * x * x * (x * (6.0 * x - 15.0) + 10.0),
        }
    }
}

/// Interpolation from the current operator to `to` over `[start, start+width]`.
#[derive(Debug, Clone)]
pub struct Transition {
    pub to: AsymptoticOperator,
    pub start: f64,
    pub width: f64,
    pub profile: Profile,
}

pub type FieldFn = Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>;

/// The coefficient field S(s,t).
#[derive(Clone)]
pub enum Field {
    /// Piecewise interpolation between asymptotic operators, starting from
    /// `start` at s = −∞.
    Transitions { start: AsymptoticOperator, steps: Vec<Transition> },
    /// Arbitrary field. If `settled`, it equals the end coefficients exactly
    /// outside `core`.
    Procedural { f: FieldFn, core: (f64, f64), settled: bool },
}

/// Zeroth-order term `u ↦ α(s,t)·ū`.
#[derive(Clone)]
pub enum AntilinearTerm {
    Constant(C64),
    /// Nonzero only on `support` in s.
    Field { alpha: Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>, support: (f64, f64) },
}

#[derive(Clone)]
pub struct CRProblem {
    pub n: usize,
    pub domain: DomainKind,
    pub minus: AsymptoticOperator,
    pub plus: AsymptoticOperator,
    pub field: Field,
    pub antilinear: Option<AntilinearTerm>,
    /// Truncation: the grid covers `[core.0 − l, core.1 + l]`.
    pub l: f64,
}

impl std::fmt::Debug for CRProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CRProblem")
            .field("n", &self.n)
            .field("domain", &self.domain)
            .field("core", &self.core())
            .field("l", &self.l)
            .finish()
    }
}

fn check_pair(a: &AsymptoticOperator, b: &AsymptoticOperator) -> Result<()> {
    if a.n != b.n {
        return Err(Error::BadDimensions(format!("operators of rank {} and {}", a.n, b.n)));
    }
    if a.domain != b.domain {
        return Err(Error::EndKindMismatch("strip and circle operators mixed".into()));
    }
    Ok(())
}

impl CRProblem {
    /// `∂s − A` with `A` at every s.
    pub fn translation_invariant(a: &AsymptoticOperator, l: f64) -> CRProblem {
        CRProblem {
            n: a.n,
            domain: a.domain,
            minus: a.clone(),
            plus: a.clone(),
            field: Field::Transitions { start: a.clone(), steps: vec![] },
            antilinear: None,
            l,
        }
    }

    /// `∂s − A(s)` with `A(s) = (1 − β(s))·from + β(s)·to`.
    pub fn interpolation(from: &AsymptoticOperator, to: &AsymptoticOperator, profile: Profile, l: f64) -> Result<CRProblem> {
        check_pair(from, to)?;
        Ok(CRProblem {
            n: from.n,
            domain: from.domain,
            minus: from.clone(),
            plus: to.clone(),
            field: Field::Transitions {
                start: from.clone(),
                steps: vec![Transition { to: to.clone(), start: 0.0, width: 1.0, profile }],
            },
            antilinear: None,
            l,
        })
    }

    /// Interpolation through a list of operators, one unit of s each.
    pub fn chain_of(ops: &[AsymptoticOperator], profile: Profile, l: f64) -> Result<CRProblem> {
        if ops.len() < 2 {
            return Err(Error::InvalidInput("need at least two operators".into()));
        }
        for w in ops.windows(2) {
            check_pair(&w[0], &w[1])?;
        }
        let steps = ops[1..]
            .iter()
            .enumerate()
            .map(|(i, o)| Transition { to: o.clone(), start: i as f64, width: 1.0, profile })
            .collect();
        Ok(CRProblem {
            n: ops[0].n,
            domain: ops[0].domain,
            minus: ops[0].clone(),
            plus: ops[ops.len() - 1].clone(),
            field: Field::Transitions { start: ops[0].clone(), steps },
            antilinear: None,
            l,
        })
    }

    /// Add an anti-linear zeroth-order term. The end operators are kept;
    /// they must already contain the limit of the term.
    pub fn with_antilinear(mut self, term: AntilinearTerm, minus: AsymptoticOperator, plus: AsymptoticOperator) -> Result<CRProblem> {
        check_pair(&minus, &self.minus)?;
        check_pair(&plus, &self.plus)?;
        self.antilinear = Some(term);
        self.minus = minus;
        self.plus = plus;
        Ok(self)
    }

    /// Base field (without the anti-linear term).
    fn base_field(&self, s: f64, t: f64) -> DMatrix<f64> {
        match &self.field {
            Field::Transitions { start, steps } => {
                let mut cur = start;
                for st in steps {
                    if s < st.start {
                        return cur.coefficient_at(t);
                    }
                    if s < st.start + st.width {
                        let b = st.profile.eval((s - st.start) / st.width);
                        if b == 0.0 {
                            return cur.coefficient_at(t);
                        }
                        return cur.coefficient_at(t) * (1.0 - b) + st.to.coefficient_at(t) * b;
                    }
                    cur = &st.to;
                }
                cur.coefficient_at(t)
            }
            Field::Procedural { f, .. } => f(s, t),
        }
    }

    /// Full zeroth-order coefficient S(s,t) including the anti-linear term.
    pub fn field_at(&self, s: f64, t: f64) -> DMatrix<f64> {
        let mut m = self.base_field(s, t);
        if let Some(term) = &self.antilinear {
            let alpha = match term {
                AntilinearTerm::Constant(a) => *a,
                AntilinearTerm::Field { alpha, .. } => alpha(s, t),
            };
            if alpha != C64::new(0.0, 0.0) {
                m += anti_linear(&CMatrix::from_diagonal_element(self.n, self.n, alpha));
            }
        }
        m
    }

    /// Interval outside of which the field is s-independent.
    pub fn core(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        match &self.field {
            Field::Transitions { steps, .. } => {
                for st in steps {
                    lo = lo.min(st.start);
                    hi = hi.max(st.start + st.width);
                }
            }
            Field::Procedural { core, .. } => {
                lo = core.0;
                hi = core.1;
            }
        }
        if let Some(AntilinearTerm::Field { support, .. }) = &self.antilinear {
            lo = lo.min(support.0);
            hi = hi.max(support.1);
        }
        if lo > hi {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Whether the settled ends may be eliminated analytically.
    fn exact_ends(&self) -> bool {
        let field_ok = match &self.field {
            Field::Transitions { .. } => true,
            Field::Procedural { settled, .. } => *settled,
        };
        let term_ok = !matches!(self.antilinear, Some(AntilinearTerm::Field { .. }));
        field_ok && term_ok
    }

    pub fn with_l(&self, l: f64) -> CRProblem {
        let mut p = self.clone();
        p.l = l;
        p
    }

    /// Block-diagonal sum of two problems on the same domain.
    pub fn direct_sum(a: &CRProblem, b: &CRProblem) -> Result<CRProblem> {
        if a.domain != b.domain {
            return Err(Error::EndKindMismatch("direct sum of strip and circle problems".into()));
        }
        let (pa, pb) = (a.clone(), b.clone());
        let f: FieldFn = Arc::new(move |s, t| crate::numerics::direct_sum(&pa.field_at(s, t), &pb.field_at(s, t)));
        let (ca, cb) = (a.core(), b.core());
        Ok(CRProblem {
            n: a.n + b.n,
            domain: a.domain,
            minus: AsymptoticOperator::direct_sum(&a.minus, &b.minus)?,
            plus: AsymptoticOperator::direct_sum(&a.plus, &b.plus)?,
            field: Field::Procedural { f, core: (ca.0.min(cb.0), ca.1.max(cb.1)), settled: a.exact_ends() && b.exact_ends() },
            antilinear: None,
            l: a.l.max(b.l),
        })
    }
}

/// Tolerance for "settled" coefficients at the truncation.
const SETTLE_TOL: f64 = 1e-8;
/// End operators with a smaller spectral margin are rejected.
const END_MARGIN: f64 = 1e-6;

/// Discretize on `[core.0 − l, core.1 + l]` with `ns` cells per unit s and
/// `nt` t-points.
pub fn discretize_cr(p: &CRProblem, ns: usize, nt: usize) -> Result<DiscretizedOperator> {
    if ns == 0 || p.l <= 0.0 {
        return Err(Error::InvalidInput("need ns ≥ 1 and a positive truncation".into()));
    }
    if p.minus.n != p.n || p.plus.n != p.n || p.minus.domain != p.domain || p.plus.domain != p.domain {
        return Err(Error::EndKindMismatch("end operators do not match the problem".into()));
    }
    let lay = TLayout::new(Grid1D::new(p.domain, nt)?, p.n);
    let (ca, cb) = p.core();
    let s0 = ca - p.l;
    let s1 = cb + p.l;
    let cells = ((s1 - s0) * ns as f64).round().max(1.0) as usize;
    let h = (s1 - s0) / cells as f64;

    for (s, end) in [(s0, &p.minus), (s1, &p.plus)] {
        let dev = lay
            .grid
            .points()
            .iter()
            .map(|&t| (p.field_at(s, t) - end.coefficient_at(t)).abs().max())
            .fold(0.0, f64::max);
        if dev > SETTLE_TOL {
            return Err(Error::CoefficientNotSettled { deviation: dev });
        }
    }

    let left_eig = eig_on(&p.minus, &lay);
    let right_eig = eig_on(&p.plus, &lay);
    for e in [&left_eig, &right_eig] {
        if e.margin() < END_MARGIN {
            return Err(Error::EndDegenerate { margin: e.margin() });
        }
    }

    let node = |j: usize| s0 + j as f64 * h;
    let (kl, kr) = if p.exact_ends() {
        let kl = (0..cells).take_while(|&j| node(j + 1) <= ca + 1e-12).count();
        let kr = (0..cells).rev().take_while(|&j| node(j) >= cb - 1e-12).count();
        if kl + kr >= cells {
            // translation invariant: keep one explicit cell
            let kl = kl.min(cells.saturating_sub(1));
            (kl, cells - 1 - kl)
        } else {
            (kl, kr)
        }
    } else {
        (0, 0)
    };

    let points = lay.grid.points();
    let core: Vec<Vec<DMatrix<f64>>> = (kl..cells - kr)
        .map(|j| {
            let sm = s0 + (j as f64 + 0.5) * h;
            lay.point_blocks(|i| p.field_at(sm, points[i]))
        })
        .collect();
    let minus_blocks = p.minus.coefficient_blocks(&lay);
    let plus_blocks = p.plus.coefficient_blocks(&lay);
    let t_matrix = Arc::new(lay.minus_i_dt());
    Ok(DiscretizedOperator {
        layout: lay,
        t_matrix,
        h,
        s_start: s0,
        cells,
        core,
        minus_blocks,
        plus_blocks,
        left: EndData { eig: left_eig, segment_cells: kl },
        right: EndData { eig: right_eig, segment_cells: kr },
        transposed: false,
        provenance: format!("CR problem n={} on {:?}, s∈[{s0},{s1}], ns={ns}, nt={nt}", p.n, p.domain),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexParams {
    /// Cells per unit s.
    pub ns: usize,
    pub nt: usize,
    pub policy: RankPolicy,
    /// Re-run with (2ns, 2nt, l+2) and require the same integers.
    pub refine: bool,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams { ns: 16, nt: 64, policy: RankPolicy::default(), refine: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub ns: usize,
    pub nt: usize,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexComputation {
    pub kernel: usize,
    pub cokernel: usize,
    pub index: i64,
    /// Gap ratio of the rank decision on each grid.
    pub gap_ratios: Vec<f64>,
    pub grids: Vec<GridParams>,
    /// Smallest singular value of each discretization.
    pub smallest_singular: Vec<f64>,
}

impl DiscretizedOperator {
    /// Kernel/cokernel of this single discretization.
    pub fn index_computation(&self, policy: &RankPolicy) -> Result<(IndexComputation, RankDecision)> {
        let ra = self.rank_analysis(policy)?;
        let ker = ra.kernel.zero_count;
        let coker = ra.cokernel.zero_count;
        let smin = ra.kernel.singular_values.first().cloned().unwrap_or(0.0);
        let comp = IndexComputation {
            kernel: ker,
            cokernel: coker,
            index: ker as i64 - coker as i64,
            gap_ratios: vec![ra.kernel.gap_ratio],
            grids: vec![],
            smallest_singular: vec![smin],
        };
        Ok((comp, ra.kernel))
    }
}

fn index_once(p: &CRProblem, ns: usize, nt: usize, policy: &RankPolicy) -> Result<IndexComputation> {
    let op = discretize_cr(p, ns, nt)?;
    let (mut c, _) = op.index_computation(policy)?;
    c.grids = vec![GridParams { ns, nt, l: p.l }];
    Ok(c)
}

/// Numerical Fredholm index with the refinement check.
pub fn fredholm_index(p: &CRProblem, params: &IndexParams) -> Result<IndexComputation> {
    let coarse = index_once(p, params.ns, params.nt, &params.policy)?;
    if !params.refine {
        return Ok(coarse);
    }
    let fine = index_once(&p.with_l(p.l + 2.0), 2 * params.ns, 2 * params.nt, &params.policy)?;
    if coarse.index != fine.index {
        return Err(Error::UnstableIndex { what: "Fredholm index".into(), coarse: coarse.index, fine: fine.index });
    }
    if coarse.kernel != fine.kernel {
        return Err(Error::UnstableIndex { what: "kernel dimension".into(), coarse: coarse.kernel as i64, fine: fine.kernel as i64 });
    }
    Ok(IndexComputation {
        kernel: fine.kernel,
        cokernel: fine.cokernel,
        index: fine.index,
        gap_ratios: [coarse.gap_ratios, fine.gap_ratios].concat(),
        grids: [coarse.grids, fine.grids].concat(),
        smallest_singular: [coarse.smallest_singular, fine.smallest_singular].concat(),
    })
}

/// Join two problems along a neck of length `3ρ` carrying their common
/// asymptotic operator.
pub fn glue(minus: &CRProblem, plus: &CRProblem, rho: f64) -> Result<CRProblem> {
    check_pair(&minus.plus, &plus.minus)?;
    if minus.domain != plus.domain {
        return Err(Error::EndKindMismatch("cannot glue strip and cylinder problems".into()));
    }
    if rho <= 0.0 {
        return Err(Error::InvalidInput("neck parameter must be positive".into()));
    }
    let dev = minus.plus.coefficient_distance(&plus.minus, 64);
    if dev > SETTLE_TOL {
        return Err(Error::EndMismatch { deviation: dev });
    }
    let (am, bm) = minus.core();
    let (ap, bp) = plus.core();
    let neck = 3.0 * rho;
    let shift_m = -bm;
    let shift_p = neck - ap;
    let (pm, pp) = (minus.clone(), plus.clone());
    let f: FieldFn = Arc::new(move |s, t| {
        if s <= 0.5 * neck {
            pm.field_at(s - shift_m, t)
        } else {
            pp.field_at(s - shift_p, t)
        }
    });
    Ok(CRProblem {
        n: minus.n,
        domain: minus.domain,
        minus: minus.minus.clone(),
        plus: plus.plus.clone(),
        field: Field::Procedural { f, core: (am + shift_m, bp + shift_p), settled: minus.exact_ends() && plus.exact_ends() },
        antilinear: None,
        l: minus.l.max(plus.l),
    })
}

/// Uniform s-grid of nodes `s0 + j·h`, `j = 0..=cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SGrid {
    pub s0: f64,
    pub h: f64,
    pub cells: usize,
}

impl SGrid {
    pub fn symmetric(l: f64, ns: usize) -> SGrid {
        let cells = (2.0 * l * ns as f64).round() as usize;
        SGrid { s0: -l, h: 2.0 * l / cells as f64, cells }
    }
    pub fn s(&self, j: usize) -> f64 {
        self.s0 + j as f64 * self.h
    }
    pub fn nodes(&self) -> usize {
        self.cells + 1
    }
}

/// `(e^z − 1)/z` and `∫₀¹ e^{zx} x dx` (stable near 0).
fn phi_pair(z: f64) -> (f64, f64) {
    if z.abs() < 0.25 {
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        let mut term = 1.0; // z^k / k!
        for k in 0..20 {
            p1 += term / (k + 1) as f64;
            p2 += term / (k + 2) as f64;
            term *= z / (k + 1) as f64;
        }
        (p1, p2)
    } else {
        let ez = z.exp();
        ((ez - 1.0) / z, ((z - 1.0) * ez + 1.0) / (z * z))
    }
}

/// Decaying solution of `∂s u − A u = η` for η given at the nodes of `grid`
/// (coordinates of the t-layout), interpolated linearly in s. Each
/// eigenmode is integrated in closed form: forward from the left for
/// negative eigenvalues, backward from the right for positive ones.
pub fn solve_translation_invariant(a: &AsymptoticOperator, nt: usize, grid: &SGrid, eta: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let lay = a.layout(nt)?;
    let m = lay.dim();
    if eta.len() != grid.nodes() || eta.iter().any(|v| v.len() != m) {
        return Err(Error::BadDimensions(format!("η needs {} node values of length {m}", grid.nodes())));
    }
    let l = (grid.s(0).abs()).min(grid.s(grid.cells).abs());
    for (j, v) in eta.iter().enumerate() {
        if grid.s(j).abs() > l - 2.0 && v.amax() > 0.0 {
            return Err(Error::SupportTooWide(format!("η is nonzero at s = {:.3}, outside [−(L−2), L−2]", grid.s(j))));
        }
    }
    let eig = eig_on(a, &lay);
    if eig.margin() < END_MARGIN {
        return Err(Error::Degenerate(format!("spectral margin {:.3e}", eig.margin())));
    }
    let n_nodes = grid.nodes();
    let mut e = DMatrix::zeros(m, n_nodes);
    for (j, v) in eta.iter().enumerate() {
        e.set_column(j, v);
    }
    let proj = eig.vectors.tr_mul(&e); // modes × nodes
    let h = grid.h;
    let mut w = DMatrix::zeros(m, n_nodes);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam < 0.0 {
            let z = lam * h;
            let (q1, q2) = phi_pair(z);
            let ez = z.exp();
            for j in 0..grid.cells {
                w[(k, j + 1)] = ez * w[(k, j)] + h * (q2 * proj[(k, j)] + (q1 - q2) * proj[(k, j + 1)]);
            }
        } else {
            let z = -lam * h;
            let (q1, q2) = phi_pair(z);
            let ez = z.exp();
            for j in (0..grid.cells).rev() {
                w[(k, j)] = ez * w[(k, j + 1)] - h * ((q1 - q2) * proj[(k, j)] + q2 * proj[(k, j + 1)]);
            }
        }
    }
    let u = &eig.vectors * w;
    Ok((0..n_nodes).map(|j| u.column(j).into_owned()).collect())
}

/// Least-squares slopes of `log‖u(s)‖` over `window_plus` (expected
/// negative, decay towards +∞) and `window_minus` (expected positive).
pub fn decay_rates(u: &[DVector<f64>], grid: &SGrid, window_plus: (f64, f64), window_minus: (f64, f64)) -> Result<(f64, f64)> {
    let fit = |w: (f64, f64)| -> Result<f64> {
        let idx: Vec<usize> = (0..grid.nodes()).filter(|&j| grid.s(j) >= w.0 && grid.s(j) <= w.1).collect();
        if idx.len() < 4 || w.1 - w.0 <= 0.0 {
            return Err(Error::WindowTooShort(format!("window [{}, {}] holds {} grid points", w.0, w.1, idx.len())));
        }
        let pts: Vec<(f64, f64)> = idx
            .iter()
            .filter_map(|&j| {
                let nrm = u[j].norm();
                (nrm >= 1e-13).then(|| (grid.s(j), nrm.ln()))
            })
            .collect();
        if pts.len() < 2 {
            return Err(Error::Underflow);
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ok(sxy / sxx)
    };
    Ok((fit(window_plus)?, fit(window_minus)?))
}

/// Right-hand side built from a few eigenmodes near the middle of the
/// spectrum of `a`, each times a bump of half-width 1.5 centred in [−1, 1].
pub fn smooth_strip_rhs(a: &AsymptoticOperator, nt: usize, grid: &SGrid, seed: u64) -> Result<Vec<DVector<f64>>> {
    let spec = spectrum(a, nt)?;
    let mut r = crate::random::rng(seed);
    let mid = spec.eigenvalues.len() / 2;
    let lo = mid.saturating_sub(3);
    let terms: Vec<(usize, f64, f64)> = (0..5)
        .map(|_| ((lo + r.random_range(0..6)).min(spec.eigenvalues.len() - 1), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    Ok((0..grid.nodes())
        .map(|j| {
            let s = grid.s(j);
            let mut acc = DVector::zeros(spec.eigenvalues.len());
            for &(k, c, shift) in &terms {
                let x = (s - shift) / 1.5;
                let bump = if x.abs() < 1.0 { (1.0 - x * x).powi(4) } else { 0.0 };
                acc += spec.eigenvectors.column(k) * (c * bump);
            }
            acc
        })
        .collect())
}

/// Relative residual of `∂s u − A u = η` in integrated form over pairs of
/// cells: Simpson for `A u`, trapezoid for the piecewise linear η.
pub fn integrated_residual(a: &AsymptoticOperator, nt: usize, grid: &SGrid, u: &[DVector<f64>], eta: &[DVector<f64>]) -> Result<f64> {
    if u.len() != grid.nodes() || eta.len() != grid.nodes() || grid.cells < 2 {
        return Err(Error::BadDimensions("u and η need one value per grid node".into()));
    }
    let am = discretize_asymptotic(a, nt)?;
    let h = grid.h;
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for j in 0..grid.cells - 1 {
        let int_u = (&u[j] + &u[j + 1] * 4.0 + &u[j + 2]) * (h / 3.0);
        let int_eta = (&eta[j] + &eta[j + 1] * 2.0 + &eta[j + 2]) * (h / 2.0);
        let r = &u[j + 2] - &u[j] - &am * int_u - &int_eta;
        res = res.max(r.norm());
        scale = scale.max(int_eta.norm());
    }
    if scale == 0.0 {
        return Ok(res);
    }
    Ok(res / scale)
}

#[cfg(test)]
mod tests;
