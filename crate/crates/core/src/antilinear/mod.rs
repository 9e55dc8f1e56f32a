//! Anti-linear model operators `D = ∂̄ + σα(z)C` (`C` = complex
//! conjugation, `∂̄ = ∂s + i∂t`) on planar boxes: the six local models at
//! zeros of `α`, large-σ deformations with prescribed zeros, Bochner type
//! inequalities and the rescaling maps between the two scales.
//!
//! A box `[s₀,s₁]×[t₀,t₁]` is treated as a strip problem in `s`: the
//! vertical edges carry spectral (APS) conditions and the horizontal edges
//! carry totally real conditions. On an edge with outward normal `ν` the
//! condition is `u ∈ e^{iφ}ℝ` with `e^{2iφ} = ν̄α/|α|`, the line along which
//! solutions of the model equation decay towards the edge. On the real axis
//! of a half-plane model the condition is `u ∈ ℝ`. Writing `u = e^{iφ}w`
//! with `φ` interpolated linearly in `t` between the two edge phases turns
//! both edge conditions into real ones, and
//!
//! `e^{−iφ} D e^{iφ} = ∂̄ + φ_s J₀ − φ_t + σ[α e^{−2iφ}]C`,
//!
//! which is an ordinary strip operator with a non-symmetric coefficient.

mod bochner;
mod rescale;
mod sampled;
#[cfg(test)]
mod tests;

pub use bochner::{bochner_residual, calibrate_global_constant, global_bochner_terms, random_test_section, GlobalTerms, Slack};
pub use rescale::{bump, rescale_in, rescale_out};
pub use sampled::{linspace, trapezoid, Sampled2D};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{symmetric_eig_unchecked, symmetrize, DomainKind, Grid1D, RankDecision, RankPolicy, TLayout, C64};
use crate::strip::{DiscretizedOperator, EndData};

/// The six kinds of nondegenerate zeros of the anti-linear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZeroType {
    #[serde(rename = "interior+")]
    InteriorPlus,
    #[serde(rename = "interior-")]
    InteriorMinus,
    #[serde(rename = "(+,+)", alias = "++")]
    PlusPlus,
    #[serde(rename = "(+,-)", alias = "+-")]
    PlusMinus,
    #[serde(rename = "(-,+)", alias = "-+")]
    MinusPlus,
    #[serde(rename = "(-,-)", alias = "--")]
    MinusMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelDomain {
    Plane,
    /// Closed upper half-plane, real boundary values on ℝ.
    HalfPlane,
}

impl ZeroType {
    pub const ALL: [ZeroType; 6] = [
        ZeroType::InteriorPlus,
        ZeroType::InteriorMinus,
        ZeroType::PlusPlus,
        ZeroType::PlusMinus,
        ZeroType::MinusPlus,
        ZeroType::MinusMinus,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ZeroType::InteriorPlus => "interior+",
            ZeroType::InteriorMinus => "interior-",
            ZeroType::PlusPlus => "(+,+)",
            ZeroType::PlusMinus => "(+,-)",
            ZeroType::MinusPlus => "(-,+)",
            ZeroType::MinusMinus => "(-,-)",
        }
    }

    pub fn parse(s: &str) -> Result<ZeroType> {
        let k = s.replace([' ', '(', ')', ','], "");
        Ok(match k.as_str() {
            "interior+" | "int+" => ZeroType::InteriorPlus,
            "interior-" | "int-" => ZeroType::InteriorMinus,
            "++" => ZeroType::PlusPlus,
            "+-" => ZeroType::PlusMinus,
            "-+" => ZeroType::MinusPlus,
            "--" => ZeroType::MinusMinus,
            _ => return Err(Error::InvalidInput(format!("unknown zero type {s:?}"))),
        })
    }

    /// Contribution to the index.
    pub fn count(self) -> i64 {
        match self {
            ZeroType::InteriorPlus | ZeroType::PlusPlus => 1,
            ZeroType::InteriorMinus | ZeroType::MinusMinus => -1,
            ZeroType::PlusMinus | ZeroType::MinusPlus => 0,
        }
    }

    pub fn is_boundary(self) -> bool {
        !matches!(self, ZeroType::InteriorPlus | ZeroType::InteriorMinus)
    }

    pub fn domain(self) -> ModelDomain {
        if self.is_boundary() {
            ModelDomain::HalfPlane
        } else {
            ModelDomain::Plane
        }
    }

    /// Whether the local form is `±z` (otherwise `±z̄`).
    pub fn holomorphic(self) -> bool {
        matches!(self, ZeroType::InteriorPlus | ZeroType::PlusPlus | ZeroType::PlusMinus)
    }

    pub fn sign(self) -> f64 {
        match self {
            ZeroType::InteriorPlus | ZeroType::PlusMinus | ZeroType::MinusMinus => -1.0,
            _ => 1.0,
        }
    }

    /// The local form of `α`.
    pub fn local_alpha(self, z: C64) -> C64 {
        let w = if self.holomorphic() { z } else { z.conj() };
        w * self.sign()
    }

    /// Formal adjoint up to conjugation by `C`: `∂̄ ± σzC ↦ ∂̄ ∓ σz̄C`.
    pub fn dual(self) -> ZeroType {
        match self {
            ZeroType::InteriorPlus => ZeroType::InteriorMinus,
            ZeroType::InteriorMinus => ZeroType::InteriorPlus,
            ZeroType::PlusPlus => ZeroType::MinusMinus,
            ZeroType::MinusMinus => ZeroType::PlusPlus,
            ZeroType::PlusMinus => ZeroType::MinusPlus,
            ZeroType::MinusPlus => ZeroType::PlusMinus,
        }
    }
}

/// Which side carries the distinguished Gaussian of a zero type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Kernel,
    Cokernel,
}

pub type AlphaFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// Axis-parallel box; for half-plane domains `t.0` must be 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub domain: ModelDomain,
    pub s: (f64, f64),
    pub t: (f64, f64),
}

impl DomainBox {
    /// Bounding box of the zeros enlarged by `margin` (the real axis stays
    /// the lower edge of half-plane boxes).
    pub fn around(zeros: &[Zero], domain: ModelDomain, margin: f64) -> DomainBox {
        let (mut s0, mut s1, mut t0, mut t1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (k, z) in zeros.iter().enumerate() {
            let p = z.position;
            if k == 0 {
                (s0, s1, t0, t1) = (p.re, p.re, p.im, p.im);
            }
            s0 = s0.min(p.re);
            s1 = s1.max(p.re);
            t0 = t0.min(p.im);
            t1 = t1.max(p.im);
        }
        let t0 = match domain {
            ModelDomain::Plane => t0 - margin,
            ModelDomain::HalfPlane => 0.0,
        };
        DomainBox { domain, s: (s0 - margin, s1 + margin), t: (t0, t1 + margin) }
    }

    fn validate(&self) -> Result<()> {
        if !(self.s.1 > self.s.0 && self.t.1 > self.t.0) {
            return Err(Error::InvalidInput(format!("empty box {:?}", self)));
        }
        if self.domain == ModelDomain::HalfPlane && self.t.0 != 0.0 {
            return Err(Error::InvalidInput("half-plane boxes must start at t = 0".into()));
        }
        Ok(())
    }
}

/// Minimum number of grid points per Gaussian width `σ^{−1/2}`.
pub const MIN_POINTS_PER_WIDTH: f64 = 6.0;
/// End operators with a smaller spectral margin are rejected.
const END_MARGIN: f64 = 1e-6;

/// A discretized box operator together with the gauge needed to turn
/// discrete vectors back into functions.
#[derive(Clone)]
pub struct PlanarOperator {
    pub op: DiscretizedOperator,
    pub sigma: f64,
    pub bx: DomainBox,
    /// s-nodes and t-points of the grid.
    pub s_nodes: Vec<f64>,
    pub t_points: Vec<f64>,
    /// Edge phases `(φ_bottom, φ_top)` at nodes and at cell midpoints.
    phase_nodes: Vec<(f64, f64)>,
    phase_mid: Vec<(f64, f64)>,
}

impl std::fmt::Debug for PlanarOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlanarOperator")
            .field("sigma", &self.sigma)
            .field("box", &self.bx)
            .field("nodes", &self.s_nodes.len())
            .field("nt", &self.t_points.len())
            .finish()
    }
}

/// Kernel and cokernel decisions of a planar operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarDims {
    pub kernel: usize,
    pub cokernel: usize,
    pub index: i64,
    pub gap_ratio: f64,
    pub smallest_singular: Vec<f64>,
}

fn unit_phase_half(w: C64) -> f64 {
    0.5 * w.arg()
}

/// Phases `½ arg(f(s))` at equispaced `s`, continuous in `s`.
fn lifted_half_phase(f: &dyn Fn(f64) -> C64, s0: f64, step: f64, count: usize) -> Result<Vec<f64>> {
    const SUB: usize = 16;
    let mut out = Vec::with_capacity(count);
    let mut prev: Option<f64> = None;
    for k in 0..count {
        for q in 0..SUB {
            if k == 0 && q > 0 {
                break;
            }
            let s = if k == 0 { s0 } else { s0 + ((k - 1) as f64 + (q + 1) as f64 / SUB as f64) * step };
            let w = f(s);
            if w.norm() < 1e-12 {
                return Err(Error::InvalidInput(format!("α vanishes on a box edge near s = {s:.4}")));
            }
            let p = unit_phase_half(w);
            prev = Some(match prev {
                None => p,
                Some(pr) => p + (((pr - p) / PI).round()) * PI,
            });
        }
        out.push(prev.unwrap());
    }
    Ok(out)
}

/// `∂s` of `½ arg α` along a horizontal line.
fn half_phase_derivative(alpha: &AlphaFn, z: C64) -> f64 {
    let e = 1e-6 * (1.0 + z.re.abs());
    let d = (alpha(z + e) - alpha(z - e)) / (2.0 * e);
    0.5 * (d / alpha(z)).im
}

/// Real 2×2 matrix of `u ↦ a ū`.
fn conj_block(a: C64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a.re, a.im, a.im, -a.re])
}

/// Discretize `∂̄ + σαC` on a box with `nodes` s-nodes and `nt` t-points.
pub fn discretize_planar(alpha: AlphaFn, sigma: f64, bx: &DomainBox, nodes: usize, nt: usize) -> Result<PlanarOperator> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("σ must be positive, got {sigma}")));
    }
    bx.validate()?;
    if nodes < 3 {
        return Err(Error::BadDimensions("need at least three s-nodes".into()));
    }
    let ell = bx.t.1 - bx.t.0;
    let cells = nodes - 1;
    let h = (bx.s.1 - bx.s.0) / cells as f64;
    let grid = Grid1D::new(DomainKind::Strip, nt)?;
    let ht = ell * grid.h;
    let ppw = sigma.powf(-0.5) / h.max(ht);
    if ppw < MIN_POINTS_PER_WIDTH * (1.0 - 1e-9) {
        return Err(Error::GridTooCoarse { points_per_width: ppw });
    }
    let lay = TLayout::new(grid, 1);
    let (t0, t1) = bx.t;

    // edge phases at half steps s0 + k h/2
    let half = 2 * cells + 1;
    let a_top = alpha.clone();
    let top = lifted_half_phase(&move |s| C64::new(0.0, -1.0) * a_top(C64::new(s, t1)), bx.s.0, 0.5 * h, half)?;
    let bottom = match bx.domain {
        ModelDomain::HalfPlane => vec![0.0; half],
        ModelDomain::Plane => {
            let a_bot = alpha.clone();
            lifted_half_phase(&move |s| C64::new(0.0, 1.0) * a_bot(C64::new(s, t0)), bx.s.0, 0.5 * h, half)?
        }
    };
    let s_at = |k: usize| bx.s.0 + 0.5 * h * k as f64;
    let deriv = |k: usize| -> (f64, f64) {
        let s = s_at(k);
        let dt = half_phase_derivative(&alpha, C64::new(s, t1));
        let db = match bx.domain {
            ModelDomain::HalfPlane => 0.0,
            ModelDomain::Plane => half_phase_derivative(&alpha, C64::new(s, t0)),
        };
        (db, dt)
    };
    let tau = lay.grid.points();
    // gauged coefficient at half step k and t-point j
    let coeff = |k: usize, j: usize| -> DMatrix<f64> {
        let (pb, pt) = (bottom[k], top[k]);
        let (db, dt) = deriv(k);
        let x = tau[j];
        let phi = pb + x * (pt - pb);
        let phi_s = db + x * (dt - db);
        let phi_t = (pt - pb) / ell;
        let z = C64::new(s_at(k), t0 + ell * x);
        let a = alpha(z) * C64::from_polar(1.0, -2.0 * phi) * sigma;
        let mut m = conj_block(a);
        m[(0, 1)] -= phi_s;
        m[(1, 0)] += phi_s;
        m[(0, 0)] -= phi_t;
        m[(1, 1)] -= phi_t;
        m
    };
    let core: Vec<Vec<DMatrix<f64>>> = (0..cells).map(|c| lay.point_blocks(|j| coeff(2 * c + 1, j))).collect();
    let t_matrix = lay.minus_i_dt() / ell;
    let end = |k: usize| -> Result<EndData> {
        let mut a = t_matrix.clone();
        let s = lay.pointwise(|j| symmetrize(&coeff(k, j)));
        a -= s;
        let eig = symmetric_eig_unchecked(&a);
        if eig.margin() < END_MARGIN {
            return Err(Error::EndDegenerate { margin: eig.margin() });
        }
        Ok(EndData { eig, segment_cells: 0 })
    };
    let left = end(0)?;
    let right = end(2 * cells)?;
    let op = DiscretizedOperator {
        layout: lay,
        t_matrix: Arc::new(t_matrix),
        h,
        s_start: bx.s.0,
        cells,
        core,
        minus_blocks: vec![],
        plus_blocks: vec![],
        left,
        right,
        transposed: false,
        provenance: format!("∂̄ + σαC, σ={sigma}, box {:?}, {nodes}×{nt}", bx),
    };
    let s_nodes = (0..nodes).map(|i| bx.s.0 + i as f64 * h).collect();
    let t_points = tau.iter().map(|x| t0 + ell * x).collect();
    let phase_nodes = (0..nodes).map(|i| (bottom[2 * i], top[2 * i])).collect();
    let phase_mid = (0..cells).map(|c| (bottom[2 * c + 1], top[2 * c + 1])).collect();
    Ok(PlanarOperator { op, sigma, bx: *bx, s_nodes, t_points, phase_nodes, phase_mid })
}

impl PlanarOperator {
    /// Structural index: columns minus rows. Needs only the end spectra.
    pub fn index(&self) -> i64 {
        self.op.index()
    }

    pub fn dims(&self, policy: &RankPolicy) -> Result<PlanarDims> {
        let ra = self.op.rank_analysis(policy)?;
        Ok(dims_of(&ra.kernel, ra.cokernel.zero_count, self.index()))
    }

    /// Orthonormal kernel basis as functions on the node grid.
    pub fn kernel_functions(&self, policy: &RankPolicy) -> Result<(PlanarDims, Vec<Sampled2D>)> {
        let (ra, vecs) = self.op.rank_analysis_with_vectors(policy, usize::MAX)?;
        let m = self.op.m();
        let funcs = vecs
            .iter()
            .map(|v| {
                let blocks: Vec<&[f64]> = (0..self.s_nodes.len()).map(|i| &v.as_slice()[i * m..(i + 1) * m]).collect();
                self.ungauge(&self.s_nodes, &self.phase_nodes, &blocks, true)
            })
            .collect();
        Ok((dims_of(&ra.kernel, ra.cokernel.zero_count, self.index()), funcs))
    }

    /// Orthonormal cokernel basis as functions on the cell-midpoint grid.
    pub fn cokernel_functions(&self, policy: &RankPolicy) -> Result<(PlanarDims, Vec<Sampled2D>)> {
        let adj = self.op.adjoint();
        let (ra, vecs) = adj.rank_analysis_with_vectors(policy, usize::MAX)?;
        let m = self.op.m();
        let bm = self.op.aps_minus_rows();
        let mids: Vec<f64> = (0..self.op.cells).map(|c| self.op.s_start + (c as f64 + 0.5) * self.op.h).collect();
        let funcs = vecs
            .iter()
            .map(|v: &DVector<f64>| {
                let blocks: Vec<&[f64]> = (0..self.op.cells).map(|c| &v.as_slice()[bm + c * m..bm + (c + 1) * m]).collect();
                self.ungauge(&mids, &self.phase_mid, &blocks, false)
            })
            .collect();
        // the adjoint's kernel is our cokernel
        let dims = PlanarDims {
            kernel: ra.cokernel.zero_count,
            cokernel: ra.kernel.zero_count,
            index: self.index(),
            gap_ratio: ra.kernel.gap_ratio,
            smallest_singular: ra.kernel.singular_values.iter().take(6).cloned().collect(),
        };
        Ok((dims, funcs))
    }

    fn ungauge(&self, s: &[f64], phases: &[(f64, f64)], blocks: &[&[f64]], nodes: bool) -> Sampled2D {
        let lay = &self.op.layout;
        let nt = self.t_points.len();
        let tau = lay.grid.points();
        let mut values = Vec::with_capacity(s.len() * nt);
        for (b, &(pb, pt)) in blocks.iter().zip(phases) {
            let w = lay.to_complex(b);
            for j in 0..nt {
                let phi = pb + tau[j] * (pt - pb);
                values.push(C64::from_polar(1.0, phi) * w[j][0]);
            }
        }
        let h = self.op.h;
        let ws = if nodes { trapezoid(s.len(), h) } else { vec![h; s.len()] };
        let wt = trapezoid(nt, self.t_points[1] - self.t_points[0]);
        Sampled2D { s: s.to_vec(), t: self.t_points.clone(), ws, wt, values }
    }
}

fn dims_of(kernel: &RankDecision, cokernel: usize, index: i64) -> PlanarDims {
    PlanarDims {
        kernel: kernel.zero_count,
        cokernel,
        index,
        gap_ratio: kernel.gap_ratio,
        smallest_singular: kernel.singular_values.iter().take(6).cloned().collect(),
    }
}

/// One of the six local models on a truncated box of half-width `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOperator {
    pub zero_type: ZeroType,
    pub sigma: f64,
    pub radius: f64,
    /// Grid points per axis.
    pub grid: usize,
}

impl ModelOperator {
    pub fn new(zero_type: ZeroType, sigma: f64, radius: f64, grid: usize) -> Result<ModelOperator> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput(format!("σ must be positive, got {sigma}")));
        }
        // the truncation must hold the Gaussian exp(−σ|z|²/2) up to ~1e−6 mass
        if radius < 4.0 / sigma.sqrt() {
            return Err(Error::InvalidInput(format!("radius {radius} below 4σ^(-1/2)")));
        }
        Ok(ModelOperator { zero_type, sigma, radius, grid })
    }

    pub fn domain(&self) -> ModelDomain {
        self.zero_type.domain()
    }

    pub fn domain_box(&self) -> DomainBox {
        let r = self.radius;
        match self.domain() {
            ModelDomain::Plane => DomainBox { domain: ModelDomain::Plane, s: (-r, r), t: (-r, r) },
            ModelDomain::HalfPlane => DomainBox { domain: ModelDomain::HalfPlane, s: (-r, r), t: (0.0, r) },
        }
    }

    pub fn discretize(&self) -> Result<PlanarOperator> {
        let zt = self.zero_type;
        let alpha: AlphaFn = Arc::new(move |z| zt.local_alpha(z));
        discretize_planar(alpha, self.sigma, &self.domain_box(), self.grid, self.grid)
    }
}

/// Discretized local model `∂̄ + σα(z)C` of a zero type.
pub fn local_model(zero_type: ZeroType, sigma: f64, radius: f64, grid: usize) -> Result<PlanarOperator> {
    ModelOperator::new(zero_type, sigma, radius, grid)?.discretize()
}

/// The duality involution on models.
pub fn dual_model(m: &ModelOperator) -> ModelOperator {
    ModelOperator { zero_type: m.zero_type.dual(), ..*m }
}

/// Side and phase of the distinguished Gaussian: `(side, imaginary)`.
pub fn gaussian_side(zero_type: ZeroType) -> Result<(Side, bool)> {
    match zero_type {
        ZeroType::InteriorPlus => Ok((Side::Kernel, true)),
        ZeroType::PlusPlus => Ok((Side::Kernel, false)),
        ZeroType::InteriorMinus => Ok((Side::Cokernel, true)),
        ZeroType::MinusMinus => Ok((Side::Cokernel, false)),
        _ => Err(Error::NoElement),
    }
}

/// `exp(−σ|z|²/2)` or `i·exp(−σ|z|²/2)` sampled like `like` and normalized.
pub fn gaussian_element(zero_type: ZeroType, sigma: f64, like: &Sampled2D) -> Result<Sampled2D> {
    let (_, imaginary) = gaussian_side(zero_type)?;
    let c = if imaginary { C64::new(0.0, 1.0) } else { C64::new(1.0, 0.0) };
    Ok(like.map(|z, _| c * (-0.5 * sigma * z.norm_sqr()).exp()).normalized())
}

/// |⟨numerical (co)kernel vector, Gaussian element⟩| for a count ±1 model.
pub fn kernel_overlap(m: &ModelOperator, policy: &RankPolicy) -> Result<f64> {
    let (side, _) = gaussian_side(m.zero_type)?;
    let op = m.discretize()?;
    let (dims, funcs) = match side {
        Side::Kernel => op.kernel_functions(policy)?,
        Side::Cokernel => op.cokernel_functions(policy)?,
    };
    let dim = if side == Side::Kernel { dims.kernel } else { dims.cokernel };
    if dim != 1 || funcs.is_empty() {
        return Err(Error::InvalidInput(format!("expected a one-dimensional {:?}, found dimension {dim}", side)));
    }
    let u = funcs[0].normalized();
    let g = gaussian_element(m.zero_type, m.sigma, &u)?;
    Ok(u.inner(&g).abs())
}

/// A zero of the deformation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub position: C64,
    pub kind: ZeroType,
}

impl Zero {
    pub fn new(re: f64, im: f64, kind: ZeroType) -> Zero {
        Zero { position: C64::new(re, im), kind }
    }
}

/// Modulus profile: identity below ½, one above 1, smoothstep in between.
fn modulus_profile(r: f64) -> f64 {
    let x = ((r - 0.5) / 0.5).clamp(0.0, 1.0);
    let w = x * x * (3.0 - 2.0 * x);
    r * (1.0 - w) + w
}

/// `g` rescaled to the modulus profile: exact within |g| ≤ ½, unit beyond 1.
fn normalized_factor(g: C64) -> C64 {
    let r = g.norm();
    if r == 0.0 {
        g
    } else {
        g * (modulus_profile(r) / r)
    }
}

#[derive(Debug, Clone, Copy)]
struct Factor {
    center: C64,
    holomorphic: bool,
}

impl Factor {
    fn eval(&self, z: C64) -> C64 {
        let g = z - self.center;
        normalized_factor(if self.holomorphic { g } else { g.conj() })
    }
}

/// Minimum separation between zeros (and between a half-plane interior
/// zero and its mirror image).
pub const MIN_SEPARATION: f64 = 4.0;

/// Check a zero list for a domain.
pub fn validate_zeros(zeros: &[Zero], domain: ModelDomain) -> Result<()> {
    for z in zeros {
        match (domain, z.kind.is_boundary()) {
            (ModelDomain::Plane, true) => {
                return Err(Error::InvalidInput(format!("boundary zero {} in a plane domain", z.kind.tag())));
            }
            (ModelDomain::HalfPlane, true) if z.position.im != 0.0 => {
                return Err(Error::InvalidInput(format!("boundary zero {} off the real axis", z.kind.tag())));
            }
            (ModelDomain::HalfPlane, false) if z.position.im < MIN_SEPARATION / 2.0 => {
                return Err(Error::ZerosTooClose { separation: 2.0 * z.position.im });
            }
            _ => {}
        }
    }
    for (i, a) in zeros.iter().enumerate() {
        for b in &zeros[i + 1..] {
            let d = (a.position - b.position).norm();
            if d < MIN_SEPARATION {
                return Err(Error::ZerosTooClose { separation: d });
            }
        }
    }
    Ok(())
}

/// The interpolated term `α`: a product of normalized local factors (with
/// mirror factors for half-plane interior zeros) times a constant chosen so
/// that every boundary zero has its exact local form and `α` is real on ℝ.
pub fn deformation_alpha(zeros: &[Zero], domain: ModelDomain) -> Result<AlphaFn> {
    validate_zeros(zeros, domain)?;
    let mut factors = Vec::new();
    for z in zeros {
        let f = Factor { center: z.position, holomorphic: z.kind.holomorphic() };
        factors.push(f);
        if domain == ModelDomain::HalfPlane && !z.kind.is_boundary() {
            factors.push(Factor { center: z.position.conj(), ..f });
        }
    }
    let others = |at: C64| -> C64 {
        factors.iter().filter(|f| f.center != at).fold(C64::new(1.0, 0.0), |acc, f| acc * f.eval(at))
    };
    let mut eps = C64::new(1.0, 0.0);
    let boundary: Vec<&Zero> = zeros.iter().filter(|z| z.kind.is_boundary()).collect();
    if !boundary.is_empty() {
        let signs: Vec<f64> = boundary.iter().map(|z| z.kind.sign() * others(z.position).re.signum()).collect();
        if signs.iter().any(|&s| s != signs[0]) {
            return Err(Error::IncompatibleBoundaryZeros(
                "the signs of consecutive boundary zeros must alternate along the real axis".into(),
            ));
        }
        eps = C64::new(signs[0], 0.0);
    } else if domain == ModelDomain::Plane {
        if let Some(z) = zeros.first() {
            let o = others(z.position);
            eps = o.conj() / o.norm() * z.kind.sign();
        }
    }
    Ok(Arc::new(move |z| factors.iter().fold(eps, |acc, f| acc * f.eval(z))))
}

/// Grid density (points per unit length) used by default: at least 8 and
/// at least [`MIN_POINTS_PER_WIDTH`] points per Gaussian width.
pub fn default_density(sigma: f64) -> f64 {
    (MIN_POINTS_PER_WIDTH * sigma.sqrt()).max(8.0)
}

/// Deformation operator `∂̄ + σαC` with `α` vanishing exactly at `zeros`.
pub fn build_deformation(zeros: &[Zero], sigma: f64, bx: &DomainBox, density: Option<f64>) -> Result<PlanarOperator> {
    bx.validate()?;
    let alpha = deformation_alpha(zeros, bx.domain)?;
    for z in zeros {
        let p = z.position;
        let mut dist = (p.re - bx.s.0).min(bx.s.1 - p.re).min(bx.t.1 - p.im);
        if bx.domain == ModelDomain::Plane {
            dist = dist.min(p.im - bx.t.0);
        }
        if dist < 1.0 {
            return Err(Error::InvalidInput(format!("zero at {p} is closer than 1 to the box edge")));
        }
    }
    let d = density.unwrap_or_else(|| default_density(sigma));
    let nodes = ((bx.s.1 - bx.s.0) * d).ceil() as usize + 1;
    let nt = ((bx.t.1 - bx.t.0) * d).ceil() as usize + 1;
    discretize_planar(alpha, sigma, bx, nodes, nt.max(8))
}

/// Sum of the counts of a zero list.
pub fn total_count(zeros: &[Zero]) -> i64 {
    zeros.iter().map(|z| z.kind.count()).sum()
}

/// One row of a concentration profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub sigma: f64,
    pub kernel_dim: usize,
    /// Fraction of kernel mass within `4σ^{−1/2}` of the zeros, averaged
    /// over an orthonormal kernel basis.
    pub fraction: f64,
}

/// Box margin used for concentration runs: wide enough that the box edges
/// hold negligible kernel mass at every σ.
pub fn concentration_margin(sigma: f64) -> f64 {
    (6.0 / sigma.sqrt()).max(1.0)
}

/// Dimensions of the deformation at one σ and, when the kernel is
/// nonempty, its mass fraction within `4σ^{−1/2}` of the zeros. The box
/// margin is [`concentration_margin`].
pub fn concentration_point(zeros: &[Zero], domain: ModelDomain, sigma: f64, policy: &RankPolicy) -> Result<(PlanarDims, Option<f64>)> {
    concentration_point_at(zeros, domain, sigma, None, policy)
}

/// [`concentration_point`] with an explicit grid density (points per unit
/// length); `None` uses [`default_density`].
pub fn concentration_point_at(
    zeros: &[Zero],
    domain: ModelDomain,
    sigma: f64,
    density: Option<f64>,
    policy: &RankPolicy,
) -> Result<(PlanarDims, Option<f64>)> {
    let bx = DomainBox::around(zeros, domain, concentration_margin(sigma));
    let op = build_deformation(zeros, sigma, &bx, density)?;
    let (dims, funcs) = op.kernel_functions(policy)?;
    if funcs.is_empty() {
        return Ok((dims, None));
    }
    let r = 4.0 / sigma.sqrt();
    let mut acc = 0.0;
    for f in &funcs {
        let inside = f.mass_where(|z| zeros.iter().any(|q| (z - q.position).norm() <= r));
        acc += inside / f.norm_sq();
    }
    Ok((dims, Some(acc / funcs.len() as f64)))
}

/// Kernel mass fractions near the zeros for each σ.
pub fn concentration_profile(zeros: &[Zero], domain: ModelDomain, sigmas: &[f64], policy: &RankPolicy) -> Result<Vec<ConcentrationPoint>> {
    let mut out = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let (dims, fraction) = concentration_point(zeros, domain, sigma, policy)?;
        let fraction = fraction.ok_or(Error::EmptyKernel)?;
        out.push(ConcentrationPoint { sigma, kernel_dim: dims.kernel, fraction });
    }
    Ok(out)
}
