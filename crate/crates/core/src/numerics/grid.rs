//! t-grids and the spectral discretization of `−i∂t`.
//!
//! Circle: `Nt` equispaced points on ℝ/ℤ, Fourier differentiation.
//! Interval: `Nt` points including both ends. Functions with real boundary
//! values extend to the doubled circle of length 2 by `U(2 − t) = conj U(t)`;
//! `−i∂t` commutes with that reflection, so it restricts to the reflection
//! invariant subspace. We use an orthonormal basis of that subspace: at the
//! end points only the real part survives, at interior points both parts are
//! kept and carry a factor √2 (each interior value appears twice on the
//! doubled circle).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    /// [0,1] with values in ℝⁿ at both ends.
    Strip,
    /// ℝ/ℤ.
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub kind: DomainKind,
    pub nt: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(kind: DomainKind, nt: usize) -> Result<Grid1D> {
        if nt < 8 {
            return Err(Error::BadDimensions(format!("t-grid needs at least 8 points, got {nt}")));
        }
        let h = match kind {
            DomainKind::Strip => 1.0 / (nt - 1) as f64,
            DomainKind::Circle => 1.0 / nt as f64,
        };
        Ok(Grid1D { kind, nt, h })
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.t(j)).collect()
    }

    pub fn is_endpoint(&self, j: usize) -> bool {
        self.kind == DomainKind::Strip && (j == 0 || j + 1 == self.nt)
    }
}

/// Degree-of-freedom layout for ℂⁿ-valued functions on a t-grid.
///
/// Point-major: the coordinates of point `j` are contiguous, `(x₁..xₙ)` at
/// interval end points and `(x₁..xₙ, y₁..yₙ)` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct TLayout {
    pub grid: Grid1D,
    pub n: usize,
    offsets: Vec<usize>,
}

impl TLayout {
    pub fn new(grid: Grid1D, n: usize) -> TLayout {
        let mut offsets = Vec::with_capacity(grid.nt + 1);
        let mut acc = 0;
        for j in 0..grid.nt {
            offsets.push(acc);
            acc += if grid.is_endpoint(j) { n } else { 2 * n };
        }
        offsets.push(acc);
        TLayout { grid, n, offsets }
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.grid.nt]
    }

    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    pub fn point_dim(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    /// Coordinate-to-value factor at point `j`.
    pub fn value_scale(&self, j: usize) -> f64 {
        if self.grid.kind == DomainKind::Strip && !self.grid.is_endpoint(j) {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            1.0
        }
    }

    /// Pointwise values (2n-vectors in the real layout) of a coordinate vector.
    pub fn to_values(&self, v: &[f64]) -> Vec<DVector<f64>> {
        let n = self.n;
        (0..self.grid.nt)
            .map(|j| {
                let o = self.offsets[j];
                let s = self.value_scale(j);
                let mut u = DVector::zeros(2 * n);
                for a in 0..self.point_dim(j) {
                    u[a] = v[o + a] * s;
                }
                u
            })
            .collect()
    }

    /// Coordinates of pointwise values; imaginary parts at interval end
    /// points are dropped.
    pub fn from_values(&self, vals: &[DVector<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (j, u) in vals.iter().enumerate() {
            let o = self.offsets[j];
            let s = self.value_scale(j);
            for a in 0..self.point_dim(j) {
                out[o + a] = u[a] / s;
            }
        }
        out
    }

    /// Complex samples `u_a(t_j)` as `[j][a]`.
    pub fn to_complex(&self, v: &[f64]) -> Vec<Vec<C64>> {
        let n = self.n;
        self.to_values(v).iter().map(|u| (0..n).map(|a| C64::new(u[a], u[n + a])).collect()).collect()
    }

    /// Block-diagonal matrix of a pointwise real 2n×2n field `s(j)`,
    /// restricted to the layout (x-block at interval end points).
    pub fn pointwise(&self, s: impl Fn(usize) -> DMatrix<f64>) -> DMatrix<f64> {
        let m = self.dim();
        let mut out = DMatrix::zeros(m, m);
        for j in 0..self.grid.nt {
            let o = self.offsets[j];
            let d = self.point_dim(j);
            let sj = s(j);
            out.view_mut((o, o), (d, d)).copy_from(&sj.view((0, 0), (d, d)));
        }
        out
    }

    /// Pointwise blocks restricted to the layout, one per grid point.
    pub fn point_blocks(&self, s: impl Fn(usize) -> DMatrix<f64>) -> Vec<DMatrix<f64>> {
        (0..self.grid.nt)
            .map(|j| {
                let d = self.point_dim(j);
                s(j).view((0, 0), (d, d)).into_owned()
            })
            .collect()
    }

    /// Matrix of `−i∂t`, exactly symmetric.
    pub fn minus_i_dt(&self) -> DMatrix<f64> {
        let scalar = scalar_minus_i_dt(self.grid);
        let n = self.n;
        let nt = self.grid.nt;
        let m = self.dim();
        let mut out = DMatrix::zeros(m, m);
        // scalar layout: point j has 1 (end point) or 2 coordinates
        let soff: Vec<usize> = {
            let mut v = Vec::with_capacity(nt + 1);
            let mut acc = 0;
            for j in 0..nt {
                v.push(acc);
                acc += if self.grid.is_endpoint(j) { 1 } else { 2 };
            }
            v.push(acc);
            v
        };
        for j in 0..nt {
            let pj = soff[j + 1] - soff[j];
            for l in 0..nt {
                let pl = soff[l + 1] - soff[l];
                for p in 0..pj {
                    for q in 0..pl {
                        let v = scalar[(soff[j] + p, soff[l] + q)];
                        for a in 0..n {
                            out[(self.offsets[j] + p * n + a, self.offsets[l] + q * n + a)] = v;
                        }
                    }
                }
            }
        }
        out
    }
}

/// Wavenumbers represented on an `mpts`-point periodic grid.
pub fn wavenumbers(mpts: usize) -> Vec<i64> {
    let m = mpts as i64;
    let lo = -((m - 1) / 2);
    (lo..lo + m).collect()
}

/// Kernel h(d) of the spectral `−i d/dτ` on a periodic grid of `mpts`
/// points and length `len`: (H u)_j = Σ_l h(j − l) u_l.
fn periodic_kernel(mpts: usize, len: f64) -> Vec<C64> {
    let omega = 2.0 * PI / len;
    let ks = wavenumbers(mpts);
    (0..mpts)
        .map(|d| {
            let mut acc = C64::new(0.0, 0.0);
            for &k in &ks {
                let ph = 2.0 * PI * (k as f64) * (d as f64) / mpts as f64;
                acc += C64::from_polar(omega * k as f64, ph);
            }
            acc / mpts as f64
        })
        .collect()
}

/// `−i∂t` for a single complex component in the scalar layout.
fn scalar_minus_i_dt(grid: Grid1D) -> DMatrix<f64> {
    let nt = grid.nt;
    // basis vectors as sparse complex combinations of periodic grid points
    let (mpts, len, basis): (usize, f64, Vec<Vec<(usize, C64)>>) = match grid.kind {
        DomainKind::Circle => {
            let mut b = Vec::with_capacity(2 * nt);
            for j in 0..nt {
                b.push(vec![(j, C64::new(1.0, 0.0))]);
                b.push(vec![(j, C64::new(0.0, 1.0))]);
            }
            (nt, 1.0, b)
        }
        DomainKind::Strip => {
            let mpts = 2 * (nt - 1);
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let mut b = Vec::with_capacity(mpts);
            for j in 0..nt {
                if j == 0 || j + 1 == nt {
                    b.push(vec![(j, C64::new(1.0, 0.0))]);
                } else {
                    b.push(vec![(j, C64::new(r, 0.0)), (mpts - j, C64::new(r, 0.0))]);
                    b.push(vec![(j, C64::new(0.0, r)), (mpts - j, C64::new(0.0, -r))]);
                }
            }
            (mpts, 2.0, b)
        }
    };
    let h = periodic_kernel(mpts, len);
    let dim = basis.len();
    let mut out = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let mut acc = C64::new(0.0, 0.0);
            for &(k, alpha) in &basis[a] {
                for &(l, beta) in &basis[b] {
                    let d = (k + mpts - l) % mpts;
                    acc += alpha.conj() * beta * h[d];
                }
            }
            out[(a, b)] = acc.re;
            out[(b, a)] = acc.re;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::symmetric_eig;

    #[test]
    fn circle_spectrum_is_2pi_k_twice() {
        let g = Grid1D::new(DomainKind::Circle, 64).unwrap();
        let lay = TLayout::new(g, 1);
        let t = lay.minus_i_dt();
        assert_eq!(t, t.transpose());
        let e = symmetric_eig(&t).unwrap();
        for k in -5i64..=5 {
            let target = 2.0 * PI * k as f64;
            let hits = e.values.iter().filter(|&&v| (v - target).abs() < 1e-2).count();
            assert_eq!(hits, 2, "k = {k}");
        }
    }

    #[test]
    fn strip_spectrum_is_pi_k_once() {
        for &n in &[1usize, 2] {
            let g = Grid1D::new(DomainKind::Strip, 33).unwrap();
            let lay = TLayout::new(g, n);
            let t = lay.minus_i_dt();
            assert_eq!(t, t.transpose());
            let e = symmetric_eig(&t).unwrap();
            assert_eq!(e.values.len(), n * 64);
            let mut expected: Vec<f64> = wavenumbers(64).iter().flat_map(|&k| vec![PI * k as f64; n]).collect();
            expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (v, x) in e.values.iter().zip(&expected) {
                assert!((v - x).abs() < 1e-9 * (1.0 + x.abs()), "{v} vs {x}");
            }
        }
    }

    #[test]
    fn values_round_trip() {
        let g = Grid1D::new(DomainKind::Strip, 10).unwrap();
        let lay = TLayout::new(g, 2);
        let v: Vec<f64> = (0..lay.dim()).map(|i| i as f64 * 0.1 - 1.0).collect();
        let back = lay.from_values(&lay.to_values(&v));
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(Grid1D::new(DomainKind::Circle, 7).is_err());
    }
}
