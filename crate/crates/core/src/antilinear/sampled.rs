//! Complex functions sampled on tensor grids in the plane, with quadrature
//! weights, bilinear interpolation and fourth order `∂̄`.

use crate::numerics::C64;

/// Values `f(s_i + i t_j)` stored at `i * t.len() + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled2D {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    /// Quadrature weights along each axis.
    pub ws: Vec<f64>,
    pub wt: Vec<f64>,
    pub values: Vec<C64>,
}

/// Trapezoid weights of an equispaced grid.
pub fn trapezoid(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h }).collect()
}

/// `n` equispaced points covering `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + i as f64 * h).collect()
}

impl Sampled2D {
    /// Sample `f` on an `ns × nt` trapezoid grid over the rectangle.
    pub fn from_fn(s: (f64, f64), t: (f64, f64), ns: usize, nt: usize, f: impl Fn(C64) -> C64) -> Sampled2D {
        let sv = linspace(s.0, s.1, ns);
        let tv = linspace(t.0, t.1, nt);
        let ws = trapezoid(ns, (s.1 - s.0) / (ns.max(2) - 1) as f64);
        let wt = trapezoid(nt, (t.1 - t.0) / (nt.max(2) - 1) as f64);
        let mut values = Vec::with_capacity(ns * nt);
        for &a in &sv {
            for &b in &tv {
                values.push(f(C64::new(a, b)));
            }
        }
        Sampled2D { s: sv, t: tv, ws, wt, values }
    }

    /// Same grid, new values.
    pub fn map(&self, f: impl Fn(C64, C64) -> C64) -> Sampled2D {
        let mut out = self.clone();
        for i in 0..self.s.len() {
            for j in 0..self.t.len() {
                let k = i * self.t.len() + j;
                out.values[k] = f(C64::new(self.s[i], self.t[j]), self.values[k]);
            }
        }
        out
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.t.len() + j]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.ws[i] * self.wt[j]
    }

    /// Real L² pairing `Re ∫ conj(f) g`.
    pub fn inner(&self, other: &Sampled2D) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        let nt = self.t.len();
        let mut acc = 0.0;
        for (k, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            acc += self.weight(k / nt, k % nt) * (a.conj() * b).re;
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        let nt = self.t.len();
        self.values.iter().enumerate().map(|(k, v)| self.weight(k / nt, k % nt) * v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Sampled2D {
        let n = self.norm();
        let mut out = self.clone();
        if n > 0.0 {
            for v in &mut out.values {
                *v /= n;
            }
        }
        out
    }

    /// Mass of the part of the function where `inside` holds.
    pub fn mass_where(&self, inside: impl Fn(C64) -> bool) -> f64 {
        let nt = self.t.len();
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let (i, j) = (k / nt, k % nt);
            if inside(C64::new(self.s[i], self.t[j])) {
                acc += self.weight(i, j) * v.norm_sqr();
            }
        }
        acc
    }

    /// Bilinear interpolation, zero outside the grid.
    pub fn eval(&self, z: C64) -> C64 {
        let (Some((i, a)), Some((j, b))) = (locate(&self.s, z.re), locate(&self.t, z.im)) else {
            return C64::new(0.0, 0.0);
        };
        let f00 = self.at(i, j);
        let f10 = self.at(i + 1, j);
        let f01 = self.at(i, j + 1);
        let f11 = self.at(i + 1, j + 1);
        f00 * ((1.0 - a) * (1.0 - b)) + f10 * (a * (1.0 - b)) + f01 * ((1.0 - a) * b) + f11 * (a * b)
    }

    /// `∂̄f = ∂s f + i ∂t f` by fourth order differences (one sided near
    /// the edges of the grid).
    pub fn dbar(&self) -> Sampled2D {
        let (ns, nt) = (self.s.len(), self.t.len());
        let hs = self.s[1] - self.s[0];
        let ht = self.t[1] - self.t[0];
        let mut out = self.clone();
        let mut line = vec![C64::new(0.0, 0.0); ns.max(nt)];
        for v in &mut out.values {
            *v = C64::new(0.0, 0.0);
        }
        for j in 0..nt {
            let f: Vec<C64> = (0..ns).map(|i| self.at(i, j)).collect();
            diff4(&f, hs, &mut line[..ns]);
            for i in 0..ns {
                out.values[i * nt + j] += line[i];
            }
        }
        let iu = C64::new(0.0, 1.0);
        for i in 0..ns {
            let f: Vec<C64> = (0..nt).map(|j| self.at(i, j)).collect();
            diff4(&f, ht, &mut line[..nt]);
            for j in 0..nt {
                out.values[i * nt + j] += iu * line[j];
            }
        }
        out
    }
}

/// Cell index and fractional position of `x` in an ascending equispaced grid.
fn locate(g: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = g.len();
    if n < 2 {
        return None;
    }
    let h = g[1] - g[0];
    let u = (x - g[0]) / h;
    if !(u >= -1e-12 && u <= (n - 1) as f64 + 1e-12) {
        return None;
    }
    let i = (u.floor().max(0.0) as usize).min(n - 2);
    Some((i, (u - i as f64).clamp(0.0, 1.0)))
}

/// Fourth order first derivative on an equispaced line.
fn diff4(f: &[C64], h: f64, out: &mut [C64]) {
    let n = f.len();
    assert!(n >= 5, "fourth order differences need five points");
    for i in 0..n {
        out[i] = if i >= 2 && i + 2 < n {
            (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) / (12.0 * h)
        } else if i < 2 {
            let c: [f64; 5] = if i == 0 { [-25.0, 48.0, -36.0, 16.0, -3.0] } else { [-3.0, -10.0, 18.0, -6.0, 1.0] };
            let k0 = 0;
            (0..5).map(|k| f[k0 + k] * c[k]).sum::<C64>() / (12.0 * h)
        } else {
            let c: [f64; 5] = if i + 1 == n { [3.0, -16.0, 36.0, -48.0, 25.0] } else { [-1.0, 6.0, -18.0, 10.0, 3.0] };
            let k0 = n - 5;
            (0..5).map(|k| f[k0 + k] * c[k]).sum::<C64>() / (12.0 * h)
        };
    }
}
