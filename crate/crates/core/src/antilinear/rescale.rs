//! Rescaling maps between the unit-scale local model around a zero `ζ`
//! and the σ-scale deformation:
//!
//! `Φ_σ(v)(z) = ρ(z−ζ)·σ^{1/2}·v(σ^{1/2}(z−ζ))`,
//! `Π_σ(u)(w) = σ^{−1/2}·ρ(σ^{−1/2}w)·u(ζ + σ^{−1/2}w)`.
//!
//! `Π_σ` is the L²-adjoint of `Φ_σ`. Values off the source grid are zero.

use super::Sampled2D;
use crate::numerics::C64;

/// Radial bump: 1 on |z| ≤ ½, 0 on |z| ≥ 1, smoothstep in between.
pub fn bump(r: f64) -> f64 {
    let x = ((r - 0.5) / 0.5).clamp(0.0, 1.0);
    1.0 - x * x * (3.0 - 2.0 * x)
}

/// `Φ_σ(v)` sampled on the grid of `like`.
pub fn rescale_in(v: &Sampled2D, sigma: f64, zeta: C64, like: &Sampled2D) -> Sampled2D {
    let r = sigma.sqrt();
    like.map(|z, _| {
        let d = z - zeta;
        let rho = bump(d.norm());
        if rho == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            v.eval(d * r) * (rho * r)
        }
    })
}

/// `Π_σ(u)` sampled on the grid of `like`.
pub fn rescale_out(u: &Sampled2D, sigma: f64, zeta: C64, like: &Sampled2D) -> Sampled2D {
    let r = sigma.sqrt();
    like.map(|w, _| {
        let d = w / r;
        let rho = bump(d.norm());
        if rho == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            u.eval(zeta + d) * (rho / r)
        }
    })
}
