//! Asymptotic operators `A = −i∂t − S(t)` on [0,1] (real boundary values)
//! and on ℝ/ℤ, their discretization, spectra, solves and conjugation by
//! unitary paths.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{
    anti_linear, complex_linear, direct_sum, exp_i_hermitian, hermitian_eig, realify, symmetric_eig_unchecked, symmetrize,
    symmetry_defect, unitary_defect, CMatrix, DomainKind, EigenDecomposition, Grid1D, TLayout, C64,
};

/// The coefficient `S(t)` of an asymptotic operator.
#[derive(Debug, Clone)]
pub enum Coefficient {
    Constant(DMatrix<f64>),
    /// `a0 + Σ_k cos_k·cos(ωkt) + sin_k·sin(ωkt)` with ω = π on the strip
    /// and 2π on the circle (k starting at 1).
    Fourier { a0: DMatrix<f64>, cos: Vec<DMatrix<f64>>, sin: Vec<DMatrix<f64>> },
    /// Samples on a uniform grid: including both ends on the strip, without
    /// the repeated end point on the circle. Linear interpolation in between.
    Samples(Vec<DMatrix<f64>>),
    /// `iΩ⁻¹Ω′ + Ω⁻¹ S Ω` for a base coefficient and a unitary path.
    Conjugated { base: Box<Coefficient>, path: UnitaryPath },
    /// Block sum: the first coefficient acts on the first components.
    DirectSum(Box<Coefficient>, Box<Coefficient>),
}

impl Coefficient {
    fn dim(&self) -> usize {
        match self {
            Coefficient::Constant(m) => m.nrows(),
            Coefficient::Fourier { a0, .. } => a0.nrows(),
            Coefficient::Samples(v) => v.first().map(|m| m.nrows()).unwrap_or(0),
            Coefficient::Conjugated { base, .. } => base.dim(),
            Coefficient::DirectSum(a, b) => a.dim() + b.dim(),
        }
    }

    fn eval(&self, domain: DomainKind, t: f64) -> DMatrix<f64> {
        match self {
            Coefficient::Constant(m) => m.clone(),
            Coefficient::Fourier { a0, cos, sin } => {
                let w = match domain {
                    DomainKind::Strip => PI,
                    DomainKind::Circle => 2.0 * PI,
                };
                let mut s = a0.clone();
                for (k, c) in cos.iter().enumerate() {
                    s += c * (w * (k + 1) as f64 * t).cos();
                }
                for (k, c) in sin.iter().enumerate() {
                    s += c * (w * (k + 1) as f64 * t).sin();
                }
                s
            }
            Coefficient::Samples(v) => {
                let k = v.len();
                match domain {
                    DomainKind::Strip => {
                        let x = (t.clamp(0.0, 1.0)) * (k - 1) as f64;
                        let i = (x.floor() as usize).min(k - 2);
                        let f = x - i as f64;
                        &v[i] * (1.0 - f) + &v[i + 1] * f
                    }
                    DomainKind::Circle => {
                        let x = t.rem_euclid(1.0) * k as f64;
                        let i = (x.floor() as usize) % k;
                        let f = x - x.floor();
                        &v[i] * (1.0 - f) + &v[(i + 1) % k] * f
                    }
                }
            }
            Coefficient::Conjugated { base, path } => {
                let s = base.eval(domain, t);
                let om = complex_linear(&path.omega(t));
                let g = path.inv_derivative(t) * C64::new(0.0, 1.0);
                complex_linear(&g) + om.transpose() * s * om
            }
            Coefficient::DirectSum(a, b) => direct_sum(&a.eval(domain, t), &b.eval(domain, t)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AsymptoticOperator {
    pub n: usize,
    pub domain: DomainKind,
    pub coeff: Coefficient,
}

/// Spectrum of a discretized asymptotic operator.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Columns in the layout coordinates of [`TLayout`].
    pub eigenvectors: DMatrix<f64>,
    pub grid: Grid1D,
}

impl SpectralData {
    pub fn margin(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()))
    }
    /// Largest negative and smallest positive eigenvalue.
    pub fn gap_edges(&self) -> (f64, f64) {
        let neg = self.eigenvalues.iter().cloned().filter(|&v| v < 0.0).fold(f64::NEG_INFINITY, f64::max);
        let pos = self.eigenvalues.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        (neg, pos)
    }
}

/// Default symmetry tolerance for coefficients.
const SYM_TOL: f64 = 1e-10;

pub fn make_operator(n: usize, domain: DomainKind, coeff: Coefficient) -> Result<AsymptoticOperator> {
    if n == 0 {
        return Err(Error::BadDimensions("complex rank must be at least 1".into()));
    }
    let coeff = canonical(coeff, 2 * n, domain)?;
    Ok(AsymptoticOperator { n, domain, coeff })
}

fn check_sym(m: &DMatrix<f64>, dim: usize) -> Result<DMatrix<f64>> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::BadDimensions(format!("expected {dim}x{dim}, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("coefficient has non-finite entries".into()));
    }
    let d = symmetry_defect(m);
    if d > SYM_TOL {
        return Err(Error::NonSymmetric { defect: d });
    }
    Ok(symmetrize(m))
}

fn canonical(c: Coefficient, dim: usize, domain: DomainKind) -> Result<Coefficient> {
    Ok(match c {
        Coefficient::Constant(m) => Coefficient::Constant(check_sym(&m, dim)?),
        Coefficient::Fourier { a0, cos, sin } => Coefficient::Fourier {
            a0: check_sym(&a0, dim)?,
            cos: cos.iter().map(|m| check_sym(m, dim)).collect::<Result<_>>()?,
            sin: sin.iter().map(|m| check_sym(m, dim)).collect::<Result<_>>()?,
        },
        Coefficient::Samples(v) => {
            if v.len() < 2 {
                return Err(Error::BadDimensions("need at least two coefficient samples".into()));
            }
            Coefficient::Samples(v.iter().map(|m| check_sym(m, dim)).collect::<Result<_>>()?)
        }
        Coefficient::Conjugated { base, path } => {
            path.validate(domain)?;
            if path.n() * 2 != dim {
                return Err(Error::BadDimensions("unitary path rank does not match".into()));
            }
            Coefficient::Conjugated { base: Box::new(canonical(*base, dim, domain)?), path }
        }
        Coefficient::DirectSum(a, b) => {
            let (da, db) = (a.dim(), b.dim());
            if da + db != dim || da % 2 != 0 || da == 0 || db == 0 {
                return Err(Error::BadDimensions("direct sum blocks do not add up".into()));
            }
            Coefficient::DirectSum(Box::new(canonical(*a, da, domain)?), Box::new(canonical(*b, db, domain)?))
        }
    })
}

impl AsymptoticOperator {
    /// The reference operator with `S = σ·C`.
    pub fn reference(n: usize, domain: DomainKind, sigma: f64) -> AsymptoticOperator {
        let c = realify(n).expect("n >= 1").c * sigma;
        AsymptoticOperator { n, domain, coeff: Coefficient::Constant(c) }
    }

    /// `A₁ ⊕ A₂` on ℂ^{n₁+n₂}.
    pub fn direct_sum(a: &AsymptoticOperator, b: &AsymptoticOperator) -> Result<AsymptoticOperator> {
        if a.domain != b.domain {
            return Err(Error::EndKindMismatch("direct sum of strip and circle operators".into()));
        }
        Ok(AsymptoticOperator {
            n: a.n + b.n,
            domain: a.domain,
            coeff: Coefficient::DirectSum(Box::new(a.coeff.clone()), Box::new(b.coeff.clone())),
        })
    }

    pub fn coefficient_at(&self, t: f64) -> DMatrix<f64> {
        symmetrize(&self.coeff.eval(self.domain, t))
    }

    pub fn layout(&self, nt: usize) -> Result<TLayout> {
        Ok(TLayout::new(Grid1D::new(self.domain, nt)?, self.n))
    }

    /// Pointwise coefficient blocks on the layout.
    pub fn coefficient_blocks(&self, lay: &TLayout) -> Vec<DMatrix<f64>> {
        lay.point_blocks(|j| self.coefficient_at(lay.grid.t(j)))
    }

    /// Maximum of ‖S(t) − other S(t)‖_F over grid points.
    pub fn coefficient_distance(&self, other: &AsymptoticOperator, nt: usize) -> f64 {
        let g = Grid1D::new(self.domain, nt.max(8)).unwrap();
        g.points()
            .iter()
            .map(|&t| (self.coefficient_at(t) - other.coefficient_at(t)).norm())
            .fold(0.0, f64::max)
    }
}

/// Symmetric matrix of `A` on an `nt`-point grid.
pub fn discretize_asymptotic(a: &AsymptoticOperator, nt: usize) -> Result<DMatrix<f64>> {
    let lay = a.layout(nt)?;
    Ok(discretize_on(a, &lay))
}

pub(crate) fn discretize_on(a: &AsymptoticOperator, lay: &TLayout) -> DMatrix<f64> {
    let t = lay.minus_i_dt();
    let s = lay.pointwise(|j| a.coefficient_at(lay.grid.t(j)));
    symmetrize(&(t - s))
}

pub fn spectrum(a: &AsymptoticOperator, nt: usize) -> Result<SpectralData> {
    let lay = a.layout(nt)?;
    let e = symmetric_eig_unchecked(&discretize_on(a, &lay));
    Ok(SpectralData { eigenvalues: e.values, eigenvectors: e.vectors, grid: lay.grid })
}

pub(crate) fn eig_on(a: &AsymptoticOperator, lay: &TLayout) -> EigenDecomposition {
    symmetric_eig_unchecked(&discretize_on(a, lay))
}

/// Smallest |eigenvalue| with a grid-doubling confirmation.
///
/// When the margin is below `tol` on both grids the operator is reported
/// degenerate; otherwise a change of more than 50% between `nt` and `2nt`
/// is an error.
pub fn is_nondegenerate(a: &AsymptoticOperator, nt: usize, tol: f64) -> Result<(bool, f64)> {
    let coarse = spectrum(a, nt)?.margin();
    let fine = spectrum(a, 2 * nt)?.margin();
    if coarse < tol && fine < tol {
        return Ok((false, fine));
    }
    if (coarse - fine).abs() > 0.5 * coarse.max(fine) {
        return Err(Error::Unstable { coarse, fine });
    }
    Ok((fine > tol, fine))
}

/// Apply `A` to pointwise values with fourth-order finite differences
/// (periodic on the circle, one-sided near the interval ends).
pub fn apply_asymptotic(a: &AsymptoticOperator, xi: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let nt = xi.len();
    let rs = realify(a.n).unwrap();
    let grid = Grid1D { kind: a.domain, nt, h: if a.domain == DomainKind::Strip { 1.0 / (nt - 1) as f64 } else { 1.0 / nt as f64 } };
    let d = derivative4(xi, a.domain == DomainKind::Circle, grid.h);
    (0..nt)
        .map(|j| {
            let s = a.coefficient_at(grid.t(j));
            -(&rs.j0 * &d[j]) - s * &xi[j]
        })
        .collect()
}

fn derivative4(f: &[DVector<f64>], periodic: bool, h: f64) -> Vec<DVector<f64>> {
    let n = f.len();
    let central = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
    // one-sided fourth order stencils for the first two and last two points
    let s0 = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25];
    let s1 = [-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0];
    (0..n)
        .map(|j| {
            let mut acc = DVector::zeros(f[0].len());
            if periodic {
                for (k, c) in central.iter().enumerate() {
                    let idx = (j + n + k - 2) % n;
                    acc.axpy(*c, &f[idx], 1.0);
                }
            } else if j >= 2 && j + 2 < n {
                for (k, c) in central.iter().enumerate() {
                    acc.axpy(*c, &f[j + k - 2], 1.0);
                }
            } else if j < 2 {
                let st = if j == 0 { &s0 } else { &s1 };
                for (k, c) in st.iter().enumerate() {
                    acc.axpy(*c, &f[k], 1.0);
                }
            } else {
                let st = if j + 1 == n { &s0 } else { &s1 };
                for (k, c) in st.iter().enumerate() {
                    acc.axpy(-*c, &f[n - 1 - k], 1.0);
                }
            }
            acc / h
        })
        .collect()
}

/// Solve `A ξ = η` for pointwise values `η` on the `η.len()`-point grid.
///
/// Interval: the fundamental matrix of `ξ′ = J₀(Sξ + η)` and a particular
/// solution are integrated with classical Runge–Kutta; the real boundary
/// value at t=0 is then fixed by the n×n condition `Im ξ(1) = 0`.
/// Circle: direct solve of the discretized operator.
pub fn solve_asymptotic(a: &AsymptoticOperator, eta: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let nt = eta.len();
    let lay = a.layout(nt)?;
    let n = a.n;
    if eta.iter().any(|v| v.len() != 2 * n) {
        return Err(Error::BadDimensions("right-hand side values must have length 2n".into()));
    }
    match a.domain {
        DomainKind::Circle => {
            let m = discretize_on(a, &lay);
            let rhs = lay.from_values(eta);
            let lu = m.lu();
            let x = lu.solve(&rhs).ok_or_else(|| Error::Degenerate("asymptotic operator is singular".into()))?;
            Ok(lay.to_values(x.as_slice()))
        }
        DomainKind::Strip => {
            let rs = realify(n).unwrap();
            let h = lay.grid.h;
            let dim = 2 * n;
            let interp = |t: f64| -> DVector<f64> { cubic_sample(eta, t / h) };
            // state: [Φ | ξ_p] as a 2n×(2n+1) matrix
            let rhs = |t: f64, y: &DMatrix<f64>| -> DMatrix<f64> {
                let js = &rs.j0 * a.coefficient_at(t);
                let mut d = &js * y;
                let e = &rs.j0 * interp(t);
                for i in 0..dim {
                    d[(i, dim)] += e[i];
                }
                d
            };
            let mut y = DMatrix::zeros(dim, dim + 1);
            for i in 0..dim {
                y[(i, i)] = 1.0;
            }
            let mut states = Vec::with_capacity(nt);
            states.push(y.clone());
            for j in 0..nt - 1 {
                let t = lay.grid.t(j);
                let k1 = rhs(t, &y);
                let k2 = rhs(t + 0.5 * h, &(&y + &k1 * (0.5 * h)));
                let k3 = rhs(t + 0.5 * h, &(&y + &k2 * (0.5 * h)));
                let k4 = rhs(t + h, &(&y + &k3 * h));
                y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                states.push(y.clone());
            }
            // Im ξ(1) = Φ_yx(1) x0 + ξ_p,y(1) = 0
            let last = &states[nt - 1];
            let f = last.view((n, 0), (n, n)).into_owned();
            let b = -last.view((n, dim), (n, 1)).into_owned();
            let svd = f.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smin <= 1e-6 * smax.max(1.0) {
                return Err(Error::Degenerate(format!("end map singular (smallest singular value {smin:.3e})")));
            }
            let x0 = svd.solve(&b, 0.0).map_err(|e| Error::Degenerate(e.to_string()))?;
            let mut c = DVector::zeros(dim);
            for i in 0..n {
                c[i] = x0[(i, 0)];
            }
            Ok(states
                .iter()
                .map(|st| st.view((0, 0), (dim, dim)) * &c + st.column(dim))
                .collect())
        }
    }
}

/// Cubic Lagrange interpolation of samples at fractional index `x`.
fn cubic_sample(f: &[DVector<f64>], x: f64) -> DVector<f64> {
    let n = f.len();
    let i = (x.floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = x - i as f64;
    // nodes i-1, i, i+1, i+2 at offsets -1, 0, 1, 2
    let w = [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ];
    let mut acc = DVector::zeros(f[0].len());
    for (k, wk) in w.iter().enumerate() {
        acc.axpy(*wk, &f[i + k - 1], 1.0);
    }
    acc
}

/// A path of unitary n×n matrices over t ∈ [0,1].
#[derive(Debug, Clone)]
pub enum UnitaryPath {
    /// `U₀·exp(itK)·exp(i·c·sin(2πt)·H)` with Hermitian K, H.
    Exp(ExpPath),
    /// Samples at `j/(len−1)`, linear interpolation.
    Samples(Vec<CMatrix>),
}

#[derive(Debug, Clone)]
pub struct ExpPath {
    pub u0: CMatrix,
    pub k: CMatrix,
    pub h: CMatrix,
    pub amp: f64,
    k_eig: (Vec<f64>, CMatrix),
    h_eig: (Vec<f64>, CMatrix),
}

impl ExpPath {
    pub fn new(u0: CMatrix, k: CMatrix, h: CMatrix, amp: f64) -> Result<ExpPath> {
        let n = u0.nrows();
        if u0.ncols() != n || k.shape() != (n, n) || h.shape() != (n, n) {
            return Err(Error::BadDimensions("unitary path matrices must be n×n".into()));
        }
        let d = unitary_defect(&u0);
        if d > 1e-9 {
            return Err(Error::NotUnitary { defect: d });
        }
        for m in [&k, &h] {
            let d = (m - m.adjoint()).norm();
            if d > 1e-9 * (1.0 + m.norm()) {
                return Err(Error::NotUnitary { defect: d });
            }
        }
        let k_eig = hermitian_eig(&k);
        let h_eig = hermitian_eig(&h);
        Ok(ExpPath { u0, k, h, amp, k_eig, h_eig })
    }
}

impl UnitaryPath {
    pub fn identity(n: usize) -> UnitaryPath {
        let z = CMatrix::zeros(n, n);
        UnitaryPath::Exp(ExpPath::new(CMatrix::identity(n, n), z.clone(), z, 0.0).unwrap())
    }

    fn diag_generator(n: usize, rate: f64) -> UnitaryPath {
        let mut k = CMatrix::zeros(n, n);
        k[(0, 0)] = C64::new(rate, 0.0);
        UnitaryPath::Exp(ExpPath::new(CMatrix::identity(n, n), k, CMatrix::zeros(n, n), 0.0).unwrap())
    }

    /// `diag(e^{iπkt}, 1, …, 1)`.
    pub fn half_rotation(n: usize, k: i64) -> UnitaryPath {
        Self::diag_generator(n, PI * k as f64)
    }

    /// `diag(e^{2πikt}, 1, …, 1)`.
    pub fn full_loop(n: usize, k: i64) -> UnitaryPath {
        Self::diag_generator(n, 2.0 * PI * k as f64)
    }

    pub fn n(&self) -> usize {
        match self {
            UnitaryPath::Exp(p) => p.u0.nrows(),
            UnitaryPath::Samples(v) => v[0].nrows(),
        }
    }

    pub fn omega(&self, t: f64) -> CMatrix {
        match self {
            UnitaryPath::Exp(p) => {
                let e1 = exp_i_hermitian(&p.k_eig.0, &p.k_eig.1, t);
                let e2 = exp_i_hermitian(&p.h_eig.0, &p.h_eig.1, p.amp * (2.0 * PI * t).sin());
                &p.u0 * e1 * e2
            }
            UnitaryPath::Samples(v) => {
                let (i, f) = locate(v.len(), t);
                &v[i] * C64::new(1.0 - f, 0.0) + &v[i + 1] * C64::new(f, 0.0)
            }
        }
    }

    /// `Ω(t)⁻¹ Ω′(t)` (skew-Hermitian).
    pub fn inv_derivative(&self, t: f64) -> CMatrix {
        match self {
            UnitaryPath::Exp(p) => {
                let e2 = exp_i_hermitian(&p.h_eig.0, &p.h_eig.1, p.amp * (2.0 * PI * t).sin());
                let ik = &p.k * C64::new(0.0, 1.0);
                let twist = &p.h * C64::new(0.0, p.amp * 2.0 * PI * (2.0 * PI * t).cos());
                e2.adjoint() * ik * &e2 + twist
            }
            UnitaryPath::Samples(v) => {
                let k = v.len();
                let (i, _) = locate(k, t);
                let dt = 1.0 / (k - 1) as f64;
                let d = (&v[i + 1] - &v[i]) * C64::new(1.0 / dt, 0.0);
                let g = self.omega(t).adjoint() * d;
                // keep the skew-Hermitian part
                (&g - g.adjoint()) * C64::new(0.5, 0.0)
            }
        }
    }

    pub fn det(&self, t: f64) -> C64 {
        self.omega(t).determinant()
    }

    /// Unitarity along the path and the end conditions of the domain.
    pub fn validate(&self, domain: DomainKind) -> Result<()> {
        let probe = 33;
        for j in 0..probe {
            let t = j as f64 / (probe - 1) as f64;
            let d = unitary_defect(&self.omega(t));
            let tol = match self {
                UnitaryPath::Exp(_) => 1e-9,
                UnitaryPath::Samples(_) => 1e-6,
            };
            // interpolated samples are only unitary at the nodes
            let at_node = match self {
                UnitaryPath::Samples(v) => ((t * (v.len() - 1) as f64).fract()).abs() < 1e-12,
                _ => true,
            };
            if at_node && d > tol {
                return Err(Error::NotUnitary { defect: d });
            }
        }
        let w0 = self.omega(0.0);
        let w1 = self.omega(1.0);
        match domain {
            DomainKind::Strip => {
                for (name, w) in [("t=0", &w0), ("t=1", &w1)] {
                    let im = w.map(|z| z.im).norm();
                    if im > 1e-8 {
                        return Err(Error::BoundaryConditionViolated(format!(
                            "Ω({name}) does not preserve ℝⁿ (imaginary part {im:.3e})"
                        )));
                    }
                }
            }
            DomainKind::Circle => {
                let d = (&w0 - &w1).norm();
                if d > 1e-8 {
                    return Err(Error::BoundaryConditionViolated(format!("Ω(0) ≠ Ω(1) (difference {d:.3e})")));
                }
            }
        }
        Ok(())
    }
}

fn locate(k: usize, t: f64) -> (usize, f64) {
    let x = t.clamp(0.0, 1.0) * (k - 1) as f64;
    let i = (x.floor() as usize).min(k - 2);
    (i, x - i as f64)
}

/// The operator `Ω⁻¹ A Ω`, coefficient `iΩ⁻¹Ω′ + Ω⁻¹ S Ω`.
pub fn conjugate_operator(a: &AsymptoticOperator, omega: &UnitaryPath) -> Result<AsymptoticOperator> {
    if omega.n() != a.n {
        return Err(Error::BadDimensions("unitary path rank does not match the operator".into()));
    }
    omega.validate(a.domain)?;
    Ok(AsymptoticOperator {
        n: a.n,
        domain: a.domain,
        coeff: Coefficient::Conjugated { base: Box::new(a.coeff.clone()), path: omega.clone() },
    })
}

/// Real 2n×2n matrix of `u ↦ α ū` for scalar α on every component.
pub fn scalar_conjugation(n: usize, alpha: C64) -> DMatrix<f64> {
    anti_linear(&CMatrix::from_diagonal_element(n, n, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::symmetric_eig;

    fn theta_strip(theta: f64) -> AsymptoticOperator {
        make_operator(1, DomainKind::Strip, Coefficient::Constant(DMatrix::identity(2, 2) * theta)).unwrap()
    }

    #[test]
    fn reference_and_constant_spectra() {
        let a = theta_strip(0.7);
        let sp = spectrum(&a, 128).unwrap();
        for k in -4i64..=4 {
            let target = PI * k as f64 - 0.7;
            assert!(sp.eigenvalues.iter().any(|&v| (v - target).abs() < 1e-2));
        }
        let c = make_operator(1, DomainKind::Circle, Coefficient::Constant(DMatrix::identity(2, 2) * 0.3)).unwrap();
        let sp = spectrum(&c, 64).unwrap();
        for k in -3i64..=3 {
            let target = 2.0 * PI * k as f64 - 0.3;
            assert_eq!(sp.eigenvalues.iter().filter(|&&v| (v - target).abs() < 1e-8).count(), 2);
        }
    }

    #[test]
    fn discretization_is_exactly_symmetric() {
        let a = AsymptoticOperator::reference(2, DomainKind::Strip, 1.0);
        let m = discretize_asymptotic(&a, 20).unwrap();
        assert_eq!(m, m.transpose());
        assert!(symmetric_eig(&m).is_ok());
    }

    #[test]
    fn nondegeneracy_examples() {
        for sigma in [0.25, 1.0, 4.0] {
            for d in [DomainKind::Strip, DomainKind::Circle] {
                let (ok, margin) = is_nondegenerate(&AsymptoticOperator::reference(1, d, sigma), 64, 1e-6).unwrap();
                assert!(ok && margin > 0.1, "{d:?} {sigma}");
            }
        }
        let zero = make_operator(1, DomainKind::Circle, Coefficient::Constant(DMatrix::zeros(2, 2))).unwrap();
        assert!(!is_nondegenerate(&zero, 64, 1e-6).unwrap().0);
        assert!(!is_nondegenerate(&theta_strip(2.0 * PI), 64, 1e-6).unwrap().0);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            make_operator(1, DomainKind::Strip, Coefficient::Constant(bad)),
            Err(Error::NonSymmetric { .. })
        ));
        assert!(matches!(
            make_operator(2, DomainKind::Strip, Coefficient::Constant(DMatrix::zeros(2, 2))),
            Err(Error::BadDimensions(_))
        ));
    }

    #[test]
    fn conjugation_by_half_rotation_is_isospectral() {
        let a = AsymptoticOperator::reference(1, DomainKind::Strip, 1.0);
        let b = conjugate_operator(&a, &UnitaryPath::half_rotation(1, 1)).unwrap();
        let sa = spectrum(&a, 96).unwrap().eigenvalues;
        let sb = spectrum(&b, 96).unwrap().eigenvalues;
        // compare the part of the spectrum well inside the resolved band
        let inner = |v: &Vec<f64>| v.iter().cloned().filter(|x| x.abs() < 40.0).collect::<Vec<_>>();
        let (ia, ib) = (inner(&sa), inner(&sb));
        assert_eq!(ia.len(), ib.len());
        for (x, y) in ia.iter().zip(&ib) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
        let same = conjugate_operator(&a, &UnitaryPath::identity(1)).unwrap();
        assert!(a.coefficient_distance(&same, 16) < 1e-14);
    }

    #[test]
    fn path_validation() {
        let loop_on_strip = UnitaryPath::half_rotation(1, 1);
        assert!(loop_on_strip.validate(DomainKind::Strip).is_ok());
        assert!(matches!(loop_on_strip.validate(DomainKind::Circle), Err(Error::BoundaryConditionViolated(_))));
        let quarter = UnitaryPath::Exp(
            ExpPath::new(CMatrix::identity(1, 1), CMatrix::from_element(1, 1, C64::new(PI / 2.0, 0.0)), CMatrix::zeros(1, 1), 0.0)
                .unwrap(),
        );
        assert!(matches!(quarter.validate(DomainKind::Strip), Err(Error::BoundaryConditionViolated(_))));
        let not_unitary = CMatrix::from_element(1, 1, C64::new(2.0, 0.0));
        assert!(matches!(ExpPath::new(not_unitary, CMatrix::zeros(1, 1), CMatrix::zeros(1, 1), 0.0), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn solve_constant_strip_matches_closed_form() {
        let theta = 0.7;
        let a = theta_strip(theta);
        let nt = 257;
        let eta: Vec<DVector<f64>> = (0..nt).map(|_| DVector::from_vec(vec![1.0, 0.0])).collect();
        let xi = solve_asymptotic(&a, &eta).unwrap();
        for v in &xi {
            assert!((v[0] + 1.0 / theta).abs() < 1e-8 && v[1].abs() < 1e-8);
        }
        let zero: Vec<DVector<f64>> = (0..nt).map(|_| DVector::zeros(2)).collect();
        assert!(solve_asymptotic(&a, &zero).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn degenerate_end_map_is_reported() {
        let a = theta_strip(PI);
        let eta: Vec<DVector<f64>> = (0..65).map(|_| DVector::from_vec(vec![1.0, 0.0])).collect();
        assert!(matches!(solve_asymptotic(&a, &eta), Err(Error::Degenerate(_))));
    }
}
