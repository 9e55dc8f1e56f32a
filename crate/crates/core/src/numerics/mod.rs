//! Real representation, eigen/rank plumbing and the t-grids shared by every
//! other module.
//!
//! A complex vector `u = x + iy` in ℂⁿ is stored as `(x₁..xₙ, y₁..yₙ)`.

pub mod chain;
pub mod grid;
pub mod householder;

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

pub use grid::{DomainKind, Grid1D, TLayout};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Multiplication by `i` and complex conjugation on ℝ²ⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct RealStructure {
    pub n: usize,
    pub j0: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

pub fn realify(n: usize) -> Result<RealStructure> {
    if n == 0 {
        return Err(Error::BadDimensions("complex rank must be at least 1".into()));
    }
    let mut j0 = DMatrix::zeros(2 * n, 2 * n);
    let mut c = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        j0[(a, n + a)] = -1.0;
        j0[(n + a, a)] = 1.0;
        c[(a, a)] = 1.0;
        c[(n + a, n + a)] = -1.0;
    }
    Ok(RealStructure { n, j0, c })
}

/// Real 2n×2n matrix of the complex-linear map `u ↦ m u`.
pub fn complex_linear(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            r[(i, j)] = z.re;
            r[(i, n + j)] = -z.im;
            r[(n + i, j)] = z.im;
            r[(n + i, n + j)] = z.re;
        }
    }
    r
}

/// Real 2n×2n matrix of the anti-linear map `u ↦ m ū`.
pub fn anti_linear(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let mut r = complex_linear(m);
    for i in 0..2 * n {
        for j in n..2 * n {
            r[(i, j)] = -r[(i, j)];
        }
    }
    r
}

/// Split a real 2n×2n matrix into complex-linear and anti-linear parts:
/// `M u = P u + Q ū`.
pub fn complex_parts(m: &DMatrix<f64>) -> (CMatrix, CMatrix) {
    let n = m.nrows() / 2;
    let a = m.view((0, 0), (n, n));
    let b = m.view((0, n), (n, n));
    let c = m.view((n, 0), (n, n));
    let d = m.view((n, n), (n, n));
    let p = CMatrix::from_fn(n, n, |i, j| C64::new(0.5 * (a[(i, j)] + d[(i, j)]), 0.5 * (c[(i, j)] - b[(i, j)])));
    let q = CMatrix::from_fn(n, n, |i, j| C64::new(0.5 * (a[(i, j)] - d[(i, j)]), 0.5 * (c[(i, j)] + b[(i, j)])));
    (p, q)
}

/// Block direct sum of two real structures' matrices in the global layout:
/// `m1` acts on the first n₁ complex components, `m2` on the rest.
pub fn direct_sum(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> DMatrix<f64> {
    let n1 = m1.nrows() / 2;
    let n2 = m2.nrows() / 2;
    let n = n1 + n2;
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    let place = |r: &mut DMatrix<f64>, m: &DMatrix<f64>, k: usize, off: usize| {
        for bi in 0..2 {
            for bj in 0..2 {
                for i in 0..k {
                    for j in 0..k {
                        r[(bi * n + off + i, bj * n + off + j)] = m[(bi * k + i, bj * k + j)];
                    }
                }
            }
        }
    };
    place(&mut r, m1, n1, 0);
    place(&mut r, m2, n2, n1);
    r
}

/// Relative Frobenius symmetry defect ‖M − Mᵀ‖ / max(‖M‖, tiny).
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let d = (m - m.transpose()).norm();
    let s = m.norm();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

/// (M + Mᵀ)/2, exactly symmetric.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut s = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn count_negative(&self) -> usize {
        self.values.iter().filter(|&&v| v < 0.0).count()
    }
    pub fn count_positive(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }
    pub fn margin(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()))
    }
    /// Columns whose eigenvalues satisfy `keep`.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.values.len()).filter(|&i| keep(self.values[i])).collect();
        DMatrix::from_fn(self.vectors.nrows(), idx.len(), |r, c| self.vectors[(r, idx[c])])
    }
}

pub fn symmetric_eig(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    if m.nrows() != m.ncols() {
        return Err(Error::BadDimensions(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let defect = symmetry_defect(m);
    if defect > 1e-12 {
        return Err(Error::NonSymmetric { defect });
    }
    Ok(symmetric_eig_unchecked(&symmetrize(m)))
}

/// Eigen-decomposition without the symmetry check (input is symmetrized).
pub fn symmetric_eig_unchecked(m: &DMatrix<f64>) -> EigenDecomposition {
    let n = m.nrows();
    if n == 0 {
        return EigenDecomposition { values: vec![], vectors: DMatrix::zeros(0, 0) };
    }
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap().then(i.cmp(&j)));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    // deterministic sign: largest-magnitude entry positive
    for c in 0..n {
        let mut best = 0;
        for r in 0..n {
            if vectors[(r, c)].abs() > vectors[(best, c)].abs() + 1e-12 {
                best = r;
            }
        }
        if vectors[(best, c)] < 0.0 {
            vectors.column_mut(c).neg_mut();
        }
    }
    EigenDecomposition { values, vectors }
}

/// Threshold policy for numerical rank decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_gap: f64,
    /// Relative change between sweeps at which the iterative smallest
    /// singular values count as settled. Only the values up to the first
    /// retained one are watched.
    #[serde(default = "default_value_tol")]
    pub value_tol: f64,
}

fn default_value_tol() -> f64 {
    1e-4
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy { rel_tol: 1e-8, abs_tol: 1e-12, min_gap: 100.0, value_tol: default_value_tol() }
    }
}

impl RankPolicy {
    pub fn threshold(&self, sigma_max: f64) -> f64 {
        (self.rel_tol * sigma_max).max(self.abs_tol)
    }

    /// Sweep budget for the iterative solver; tighter tolerances get more.
    pub fn max_iter(&self) -> usize {
        if self.value_tol >= 1e-4 {
            80
        } else {
            (80.0 * (1e-4 / self.value_tol).log10().max(1.0) * 2.0) as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDecision {
    /// Ascending. May be only the smallest part of the spectrum when the
    /// decision came from a structured factorization.
    pub singular_values: Vec<f64>,
    pub zero_count: usize,
    /// Smallest retained over largest discarded; infinite when nothing was
    /// discarded or the discarded values are exact zeros.
    pub gap_ratio: f64,
    pub threshold: f64,
}

/// Zero count and gap for ascending values padded with `structural` exact
/// zeros.
pub fn decide(values: &[f64], structural: usize, threshold: f64, policy: &RankPolicy) -> Result<RankDecision> {
    let mut sv = vec![0.0; structural];
    sv.extend_from_slice(values);
    let zero_count = sv.iter().filter(|&&s| s < threshold).count();
    let largest_discarded = if zero_count > 0 { sv[zero_count - 1] } else { 0.0 };
    let smallest_retained = sv.get(zero_count).cloned();
    let gap_ratio = match smallest_retained {
        None => f64::INFINITY,
        Some(_) if zero_count > 0 && largest_discarded == 0.0 => f64::INFINITY,
        Some(r) if zero_count > 0 => r / largest_discarded,
        // nothing discarded: measure against the threshold
        Some(r) => (r / threshold).max(1.0),
    };
    if gap_ratio < policy.min_gap {
        return Err(Error::AmbiguousRank { gap: gap_ratio, required: policy.min_gap });
    }
    Ok(RankDecision { singular_values: sv, zero_count, gap_ratio, threshold })
}

/// Kernel and cokernel decisions for a dense matrix via its SVD.
pub fn kernel_dims(m: &DMatrix<f64>, policy: &RankPolicy) -> Result<(RankDecision, RankDecision)> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let (r, c) = m.shape();
    let mut sv: Vec<f64> = if r.min(c) == 0 {
        vec![]
    } else {
        m.clone().svd(false, false).singular_values.iter().cloned().collect()
    };
    sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let smax = sv.last().cloned().unwrap_or(0.0);
    let thr = policy.threshold(smax);
    let ker = decide(&sv, c.saturating_sub(r), thr, policy)?;
    let coker = decide(&sv, r.saturating_sub(c), thr, policy)?;
    Ok((ker, coker))
}

/// Unitary check ‖U*U − I‖_F.
pub fn unitary_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

/// Hermitian eigen-decomposition with ascending real eigenvalues.
pub fn hermitian_eig(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let hs = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(hs);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// exp(i·x·H) from a precomputed Hermitian eigen-decomposition.
pub fn exp_i_hermitian(vals: &[f64], vecs: &CMatrix, x: f64) -> CMatrix {
    let n = vals.len();
    let d = CMatrix::from_fn(n, n, |i, j| if i == j { C64::from_polar(1.0, x * vals[i]) } else { C64::new(0.0, 0.0) });
    vecs * d * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn realify_identities_hold_exactly() {
        for n in 1..=8 {
            let rs = realify(n).unwrap();
            let id = DMatrix::<f64>::identity(2 * n, 2 * n);
            assert_eq!(&rs.j0 * &rs.j0, -&id);
            assert_eq!(&rs.c * &rs.c, id);
            assert_eq!(&rs.j0 * &rs.c, -(&rs.c * &rs.j0));
        }
        let rs = realify(1).unwrap();
        assert_eq!(rs.j0, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        assert_eq!(rs.c, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert!(realify(0).is_err());
    }

    #[test]
    fn complex_parts_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = CMatrix::from_fn(3, 3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let q = CMatrix::from_fn(3, 3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = complex_linear(&p) + anti_linear(&q);
        let (p2, q2) = complex_parts(&m);
        assert!((p2 - p).norm() < 1e-14 && (q2 - q).norm() < 1e-14);
        let rs = realify(3).unwrap();
        // conjugation is the anti-linear map with identity coefficient
        assert_eq!(anti_linear(&CMatrix::identity(3, 3)), rs.c);
        assert_eq!(complex_linear(&CMatrix::from_diagonal_element(3, 3, C64::new(0.0, 1.0))), rs.j0);
    }

    #[test]
    fn eig_small_cases() {
        let e = symmetric_eig(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0]))).unwrap();
        assert_eq!(e.values, vec![-1.0, 3.0]);
        let z = symmetric_eig(&DMatrix::zeros(4, 4)).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        assert!((z.vectors.abs() - DMatrix::<f64>::identity(4, 4)).norm() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eig(&bad), Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn eig_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &n in &[1usize, 7, 64, 200, 512] {
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let m = symmetrize(&(&a + a.transpose()));
            let e = symmetric_eig(&m).unwrap();
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
            let rec = &e.vectors * d * e.vectors.transpose();
            assert!((rec - &m).norm() <= 1e-8 * m.norm());
            let orth = e.vectors.tr_mul(&e.vectors) - DMatrix::<f64>::identity(n, n);
            assert!(orth.amax() < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn kernel_dims_basic_cases() {
        let p = RankPolicy::default();
        let (k, c) = kernel_dims(&DMatrix::identity(10, 10), &p).unwrap();
        assert_eq!((k.zero_count, c.zero_count), (0, 0));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let (k, c) = kernel_dims(&d, &p).unwrap();
        assert_eq!((k.zero_count, c.zero_count), (1, 1));
        assert!(k.gap_ratio.is_infinite());
        let wide = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let (k, c) = kernel_dims(&wide, &p).unwrap();
        assert_eq!((k.zero_count, c.zero_count), (2, 0));
    }

    #[test]
    fn kernel_dims_planted_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for k in 0..5 {
            let n = 60;
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
            let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
            let mut d = DMatrix::<f64>::from_fn(n, n, |i, j| if i == j { rng.random_range(0.5..2.0) } else { 0.0 });
            for i in 0..k {
                d[(i, i)] = 0.0;
            }
            let m = &a * d * &b;
            let (ker, coker) = kernel_dims(&m, &RankPolicy::default()).unwrap();
            assert_eq!(ker.zero_count, k);
            assert_eq!(coker.zero_count, k);
            assert!(ker.gap_ratio >= 1e6, "gap {}", ker.gap_ratio);
        }
    }

    #[test]
    fn ambiguous_rank_is_an_error() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-7, 5e-9]));
        assert!(matches!(kernel_dims(&d, &RankPolicy::default()), Err(Error::AmbiguousRank { .. })));
    }
}
