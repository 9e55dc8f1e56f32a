//! Bochner–Weitzenböck type estimates, evaluated by quadrature.
//!
//! Local (σ = 1, exact local forms): `‖∂̄v‖² + ‖zv‖² ≤ ‖∂̄v + αv̄‖² + 2‖v‖²`
//! for `α = ±z`, and the same without the `2‖v‖²` term for `α = ±z̄`.
//!
//! Global: `‖αξ̄‖² ≤ σ⁻²‖∂̄ξ + σαξ̄‖² + Ĉσ⁻¹‖ξ‖²`, with `Ĉ` calibrated once.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AlphaFn, ModelDomain, Sampled2D, ZeroType};
use crate::error::{Error, Result};
use crate::numerics::C64;

/// Both sides of an inequality `lhs ≤ rhs` and `slack = rhs − lhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

fn check_real_boundary(v: &Sampled2D) -> Result<()> {
    if v.t[0] != 0.0 {
        return Err(Error::InvalidInput("half-plane samples must start at t = 0".into()));
    }
    let scale = v.values.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    for i in 0..v.s.len() {
        let im = v.at(i, 0).im.abs();
        if im > 1e-10 * scale {
            return Err(Error::BoundaryConditionViolated(format!(
                "Im v = {im:.3e} at s = {:.4} on the real axis",
                v.s[i]
            )));
        }
    }
    Ok(())
}

/// Local inequality for the model of `kind` on the test function `v`.
pub fn bochner_residual(kind: ZeroType, v: &Sampled2D) -> Result<Slack> {
    if kind.domain() == ModelDomain::HalfPlane {
        check_real_boundary(v)?;
    }
    let dv = v.dbar();
    let zv = v.map(|z, x| z * x);
    let dw = v.map(|z, x| kind.local_alpha(z) * x.conj());
    let mut sum = dv.clone();
    for (a, b) in sum.values.iter_mut().zip(&dw.values) {
        *a += b;
    }
    let lhs = dv.norm_sq() + zv.norm_sq();
    let mut rhs = sum.norm_sq();
    if kind.holomorphic() {
        rhs += 2.0 * v.norm_sq();
    }
    Ok(Slack { lhs, rhs, slack: rhs - lhs })
}

/// Norms entering the global inequality for one section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalTerms {
    pub sigma: f64,
    /// `‖αξ̄‖²`
    pub b_norm2: f64,
    /// `‖∂̄ξ + σαξ̄‖²`
    pub d_norm2: f64,
    pub xi_norm2: f64,
}

impl GlobalTerms {
    /// Smallest constant for which this section satisfies the inequality.
    pub fn required_constant(&self) -> f64 {
        self.sigma * (self.b_norm2 - self.d_norm2 / (self.sigma * self.sigma)) / self.xi_norm2
    }

    pub fn slack(&self, c_hat: f64) -> Slack {
        let lhs = self.b_norm2;
        let rhs = self.d_norm2 / (self.sigma * self.sigma) + c_hat * self.xi_norm2 / self.sigma;
        Slack { lhs, rhs, slack: rhs - lhs }
    }
}

pub fn global_bochner_terms(alpha: &AlphaFn, domain: ModelDomain, sigma: f64, xi: &Sampled2D) -> Result<GlobalTerms> {
    if domain == ModelDomain::HalfPlane {
        check_real_boundary(xi)?;
    }
    let b = xi.map(|z, x| alpha(z) * x.conj());
    let mut d = xi.dbar();
    for (a, bb) in d.values.iter_mut().zip(&b.values) {
        *a += bb * sigma;
    }
    Ok(GlobalTerms { sigma, b_norm2: b.norm_sq(), d_norm2: d.norm_sq(), xi_norm2: xi.norm_sq() })
}

/// `Ĉ`: the largest constant required on a calibration set of sections,
/// over all listed σ (never below 0).
pub fn calibrate_global_constant(alpha: &AlphaFn, domain: ModelDomain, sigmas: &[f64], sections: &[Sampled2D]) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &sigma in sigmas {
        for xi in sections {
            c = c.max(global_bochner_terms(alpha, domain, sigma, xi)?.required_constant());
        }
    }
    Ok(c)
}

/// A random combination of one to three Gaussian bumps, sampled on an
/// `n × n` grid over the box and decaying at its free edges. Half-plane
/// sections pair every bump with its mirror image so they are real on ℝ.
pub fn random_test_section(rng: &mut ChaCha8Rng, domain: ModelDomain, s: (f64, f64), t: (f64, f64), n: usize) -> Sampled2D {
    let k = rng.random_range(1..=3);
    let mut bumps = Vec::with_capacity(k);
    for _ in 0..k {
        let w: f64 = rng.random_range(0.3..1.0);
        let pad = 5.0 * w;
        let cs = rng.random_range(s.0 + pad..s.1 - pad);
        let ct = match domain {
            ModelDomain::Plane => rng.random_range(t.0 + pad..t.1 - pad),
            ModelDomain::HalfPlane => rng.random_range(0.0..t.1 - pad),
        };
        let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        bumps.push((C64::new(cs, ct), w, c));
    }
    Sampled2D::from_fn(s, t, n, n, |z| {
        let mut acc = C64::new(0.0, 0.0);
        for &(p, w, c) in &bumps {
            let g = |q: C64| (-(z - q).norm_sqr() / (2.0 * w * w)).exp();
            acc += c * g(p);
            if domain == ModelDomain::HalfPlane {
                acc += c.conj() * g(p.conj());
            }
        }
        acc
    })
}
