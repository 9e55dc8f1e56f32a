//! Seeded generators of non-degenerate asymptotic operators and unitary
//! paths for property tests and the acceptance suite.
//!
//! Strip coefficients are built so that their reflection `S(2 − t) = C S(t) C`
//! is smooth: cosine modes commute with C, sine modes anticommute. Strip
//! paths satisfy `exp(2iK) = I`, which makes `conj Ω(2 − t)` a smooth
//! continuation as well. Both keep the doubled-circle discretization
//! spectrally accurate.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::asymptotic::{make_operator, spectrum, AsymptoticOperator, Coefficient, ExpPath, UnitaryPath};
use crate::error::Result;
use crate::numerics::{CMatrix, DomainKind, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sym(n: usize, amp: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-amp..amp));
    (&a + a.transpose()) * 0.5
}

/// `[[X, 0], [0, Y]]` with symmetric X, Y: commutes with C.
fn commuting(n: usize, amp: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&sym(n, amp, rng));
    m.view_mut((n, n), (n, n)).copy_from(&sym(n, amp, rng));
    m
}

/// `[[0, Z], [Zᵀ, 0]]`: anticommutes with C.
fn anticommuting(n: usize, amp: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let z = DMatrix::from_fn(n, n, |_, _| rng.random_range(-amp..amp));
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(&z);
    m.view_mut((n, 0), (n, n)).copy_from(&z.transpose());
    m
}

/// Random Fourier coefficient with `modes` harmonics.
pub fn random_coefficient(n: usize, domain: DomainKind, modes: usize, amp: f64, rng: &mut ChaCha8Rng) -> Coefficient {
    match domain {
        DomainKind::Strip => Coefficient::Fourier {
            a0: commuting(n, amp, rng),
            cos: (0..modes).map(|_| commuting(n, amp * 0.5, rng)).collect(),
            sin: (0..modes).map(|_| anticommuting(n, amp * 0.5, rng)).collect(),
        },
        DomainKind::Circle => Coefficient::Fourier {
            a0: sym(2 * n, amp, rng),
            cos: (0..modes).map(|_| sym(2 * n, amp * 0.5, rng)).collect(),
            sin: (0..modes).map(|_| sym(2 * n, amp * 0.5, rng)).collect(),
        },
    }
}

/// Smallest spectral margin accepted for random operators.
pub const MIN_MARGIN: f64 = 0.05;

/// Random operator whose discretized spectrum stays at least
/// [`MIN_MARGIN`] away from zero on both `nt` and `2nt` points.
pub fn random_operator(n: usize, domain: DomainKind, nt: usize, rng: &mut ChaCha8Rng) -> Result<AsymptoticOperator> {
    random_operator_with_margin(n, domain, nt, MIN_MARGIN, rng)
}

/// Like [`random_operator`] with a caller-chosen margin. Gluing along a
/// neck of length `3ρ` needs `e^{−3ρ·margin}` small.
pub fn random_operator_with_margin(n: usize, domain: DomainKind, nt: usize, margin: f64, rng: &mut ChaCha8Rng) -> Result<AsymptoticOperator> {
    loop {
        let amp = rng.random_range(2.0..7.0);
        let c = random_coefficient(n, domain, 2, amp, rng);
        let a = make_operator(n, domain, c)?;
        let m1 = spectrum(&a, nt)?.margin();
        let m2 = spectrum(&a, 2 * nt)?.margin();
        if m1 >= margin && m2 >= margin {
            return Ok(a);
        }
    }
}

/// Random real orthogonal matrix (either determinant).
fn orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

fn unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    a.qr().q()
}

fn hermitian(n: usize, amp: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp)));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Random unitary path admissible on `domain`, with its expected parity.
///
/// Strip: `U₀` real orthogonal, `K = Q diag(π m) Qᵀ` real, `H` real
/// symmetric; then `Ω(1) = U₀ Q diag((−1)^m) Qᵀ` and the parity is
/// `Σm mod 2`. Circle: `K` has eigenvalues in `2πℤ`, parity 0.
pub fn random_path(n: usize, domain: DomainKind, rng: &mut ChaCha8Rng) -> Result<(UnitaryPath, u8)> {
    let ms: Vec<i64> = (0..n).map(|_| rng.random_range(-2i64..=2)).collect();
    let amp = rng.random_range(0.0..0.6);
    let (u0, q, h, rate) = match domain {
        DomainKind::Strip => (
            real_to_complex(&orthogonal(n, rng)),
            real_to_complex(&orthogonal(n, rng)),
            real_to_complex(&sym(n, 1.0, rng)),
            PI,
        ),
        DomainKind::Circle => (unitary(n, rng), unitary(n, rng), hermitian(n, 1.0, rng), 2.0 * PI),
    };
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, ms.iter().map(|&m| C64::new(rate * m as f64, 0.0))));
    let k = &q * d * q.adjoint();
    let path = UnitaryPath::Exp(ExpPath::new(u0, k, h, amp)?);
    path.validate(domain)?;
    let parity = match domain {
        DomainKind::Strip => (ms.iter().sum::<i64>().rem_euclid(2)) as u8,
        DomainKind::Circle => 0,
    };
    Ok((path, parity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotic::conjugate_operator;

    #[test]
    fn random_operators_are_nondegenerate_and_reproducible() {
        for domain in [DomainKind::Strip, DomainKind::Circle] {
            let a = random_operator(2, domain, 16, &mut rng(5)).unwrap();
            let b = random_operator(2, domain, 16, &mut rng(5)).unwrap();
            assert_eq!(a.coefficient_at(0.3), b.coefficient_at(0.3));
            assert!(spectrum(&a, 32).unwrap().margin() >= MIN_MARGIN);
        }
    }

    #[test]
    fn strip_coefficients_are_reflection_smooth() {
        let c = random_coefficient(2, DomainKind::Strip, 2, 3.0, &mut rng(1));
        let a = make_operator(2, DomainKind::Strip, c).unwrap();
        let cc = crate::numerics::realify(2).unwrap().c;
        for &t in &[0.1, 0.37, 0.8] {
            // S(2 − t) from the Fourier formula equals C S(t) C
            let Coefficient::Fourier { a0, cos, sin } = &a.coeff else { unreachable!() };
            let mut s2 = a0.clone();
            for (k, m) in cos.iter().enumerate() {
                s2 += m * (PI * (k + 1) as f64 * (2.0 - t)).cos();
            }
            for (k, m) in sin.iter().enumerate() {
                s2 += m * (PI * (k + 1) as f64 * (2.0 - t)).sin();
            }
            assert!((s2 - &cc * a.coefficient_at(t) * &cc).norm() < 1e-12);
        }
    }

    #[test]
    fn random_paths_are_admissible_and_isospectral() {
        for (i, domain) in [DomainKind::Strip, DomainKind::Circle, DomainKind::Strip].into_iter().enumerate() {
            let mut r = rng(40 + i as u64);
            let (p, parity) = random_path(2, domain, &mut r).unwrap();
            p.validate(domain).unwrap();
            let a = random_operator(2, domain, 16, &mut r).unwrap();
            let b = conjugate_operator(&a, &p).unwrap();
            let sa = spectrum(&a, 48).unwrap().eigenvalues;
            let sb = spectrum(&b, 48).unwrap().eigenvalues;
            let small = |v: &[f64]| v.iter().cloned().filter(|x| x.abs() < 15.0).collect::<Vec<_>>();
            let (xa, xb) = (small(&sa), small(&sb));
            assert_eq!(xa.len(), xb.len());
            for (x, y) in xa.iter().zip(&xb) {
                assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
            if domain == DomainKind::Strip {
                let d = p.det(0.0) * p.det(1.0);
                assert!((d.re - if parity == 0 { 1.0 } else { -1.0 }).abs() < 1e-9);
            }
        }
    }
}
