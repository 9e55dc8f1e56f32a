//! Conley–Zehnder indices: spectral flow along the straight path from the
//! reference operator, and the Fredholm index of the interpolating
//! Cauchy–Riemann operator on the truncated strip or cylinder.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::asymptotic::AsymptoticOperator;
use crate::error::{Error, Result};
use crate::numerics::{symmetric_eig_unchecked, DomainKind, EigenDecomposition, Grid1D, RankPolicy, TLayout};
use crate::strip::{fredholm_index, CRProblem, IndexComputation, IndexParams};
pub use crate::strip::Profile;
use crate::asymptotic::UnitaryPath;

/// Sign relating spectral flow (upward crossings count +1) to the index:
/// `μCZ = FLOW_SIGN · flow(A^al → A)`. Fixed by comparison with the
/// Fredholm index of the interpolating operator (see tests).
pub const FLOW_SIGN: i64 = -1;

/// Straight-line path `(1 − β(s))·from + β(s)·to`, sampled at `ns` points
/// of `[−0.5, 1.5]`.
#[derive(Debug, Clone)]
pub struct OperatorPath {
    pub from: AsymptoticOperator,
    pub to: AsymptoticOperator,
    pub profile: Profile,
    pub ns: usize,
}

impl OperatorPath {
    pub fn new(from: &AsymptoticOperator, to: &AsymptoticOperator, profile: Profile, ns: usize) -> Result<OperatorPath> {
        if from.n != to.n || from.domain != to.domain {
            return Err(Error::BadDimensions("path endpoints must share rank and domain".into()));
        }
        if ns < 4 {
            return Err(Error::InvalidInput("need at least 4 samples".into()));
        }
        Ok(OperatorPath { from: from.clone(), to: to.clone(), profile, ns })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub s: f64,
    /// +1 for an eigenvalue moving from negative to positive.
    pub direction: i64,
    /// Index of the branch (eigenvalue rank) at the start of the interval.
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub crossings: Vec<Crossing>,
    pub net_flow: i64,
    /// Smallest |eigenvalue| over all evaluated samples.
    pub min_abs_eigenvalue: f64,
    /// Samples moved because an eigenvalue was below the tolerance:
    /// (planned s, evaluated s).
    pub shifted_samples: Vec<(f64, f64)>,
}

/// Discretized family `A(β) = T − (1 − β)S_from − βS_to`.
struct Family {
    t: DMatrix<f64>,
    from: Vec<DMatrix<f64>>,
    to: Vec<DMatrix<f64>>,
    lay: TLayout,
    /// max_t ‖S_to(t) − S_from(t)‖₂
    spread: f64,
}

impl Family {
    fn new(path: &OperatorPath, nt: usize) -> Result<Family> {
        let lay = TLayout::new(Grid1D::new(path.from.domain, nt)?, path.from.n);
        let from = path.from.coefficient_blocks(&lay);
        let to = path.to.coefficient_blocks(&lay);
        let spread = from
            .iter()
            .zip(&to)
            .map(|(a, b)| {
                let d = b - a;
                d.singular_values().iter().cloned().fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        Ok(Family { t: lay.minus_i_dt(), from, to, lay, spread })
    }

    fn eig(&self, beta: f64) -> EigenDecomposition {
        let mut a = self.t.clone();
        for (j, (f, g)) in self.from.iter().zip(&self.to).enumerate() {
            let o = self.lay.offset(j);
            let d = f.nrows();
            let blk = f * (1.0 - beta) + g * beta;
            let mut v = a.view_mut((o, o), (d, d));
            v -= blk;
        }
        symmetric_eig_unchecked(&a)
    }
}

struct Sample {
    s: f64,
    beta: f64,
    eig: EigenDecomposition,
}

fn neg_count(e: &EigenDecomposition) -> i64 {
    e.count_negative() as i64
}

/// Crossings between two samples by eigenvector-overlap matching of the
/// eigenvalues that can reach zero (Weyl: |λ| ≤ |Δβ|·spread).
fn match_crossings(fam: &Family, a: &Sample, b: &Sample) -> Vec<Crossing> {
    let reach = (b.beta - a.beta).abs() * fam.spread * 1.5 + 1e-12;
    let near = |e: &EigenDecomposition| -> Vec<usize> { (0..e.values.len()).filter(|&k| e.values[k].abs() <= reach).collect() };
    let na = near(&a.eig);
    let nb = near(&b.eig);
    if na.is_empty() && nb.is_empty() {
        return vec![];
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for &i in &na {
        for &j in &nb {
            let o = a.eig.vectors.column(i).dot(&b.eig.vectors.column(j)).abs();
            pairs.push((o, i, j));
        }
    }
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let mut used_a = vec![false; a.eig.values.len()];
    let mut used_b = vec![false; b.eig.values.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        let (la, lb) = (a.eig.values[i], b.eig.values[j]);
        if (la < 0.0) != (lb < 0.0) {
            let dir = if lb > 0.0 { 1 } else { -1 };
            // linear estimate of the crossing location
            let s = a.s + (b.s - a.s) * la.abs() / (la.abs() + lb.abs());
            out.push(Crossing { s, direction: dir, branch: i });
        }
    }
    out
}

fn evaluate(fam: &Family, path: &OperatorPath, s: f64, shift: f64, tol: f64, shifted: &mut Vec<(f64, f64)>) -> Result<Sample> {
    let beta = path.profile.eval(s);
    let eig = fam.eig(beta);
    if eig.margin() >= tol {
        return Ok(Sample { s, beta, eig });
    }
    for s2 in [s + shift, s - shift] {
        let beta2 = path.profile.eval(s2);
        let eig2 = fam.eig(beta2);
        if eig2.margin() >= tol {
            shifted.push((s, s2));
            return Ok(Sample { s: s2, beta: beta2, eig: eig2 });
        }
    }
    Err(Error::UnresolvedCrossing { s })
}

fn interval(
    fam: &Family,
    path: &OperatorPath,
    a: &Sample,
    b: &Sample,
    depth: usize,
    tol: f64,
    shifted: &mut Vec<(f64, f64)>,
    min_abs: &mut f64,
) -> Result<Vec<Crossing>> {
    let expected = neg_count(&a.eig) - neg_count(&b.eig);
    let found = match_crossings(fam, a, b);
    let sum: i64 = found.iter().map(|c| c.direction).sum();
    if found.len() <= 1 && sum == expected {
        return Ok(found);
    }
    if depth >= 2 {
        return Err(Error::UnresolvedCrossing { s: 0.5 * (a.s + b.s) });
    }
    let sm = 0.5 * (a.s + b.s);
    let mid = evaluate(fam, path, sm, 0.25 * (b.s - a.s), tol, shifted)?;
    *min_abs = min_abs.min(mid.eig.margin());
    let mut left = interval(fam, path, a, &mid, depth + 1, tol, shifted, min_abs)?;
    left.extend(interval(fam, path, &mid, b, depth + 1, tol, shifted, min_abs)?);
    Ok(left)
}

/// Margin below which path endpoints count as degenerate.
const ENDPOINT_MARGIN: f64 = 1e-6;

/// Signed count of eigenvalue crossings along the path on an `nt`-point
/// t-grid. Samples with an eigenvalue below `tol` are moved by a quarter
/// of the sample spacing.
pub fn spectral_flow(path: &OperatorPath, nt: usize, tol: f64) -> Result<FlowRecord> {
    let fam = Family::new(path, nt)?;
    for beta in [0.0, 1.0] {
        let m = fam.eig(beta).margin();
        if m < ENDPOINT_MARGIN {
            return Err(Error::EndpointDegenerate { margin: m });
        }
    }
    let ns = path.ns;
    let ds = 2.0 / (ns - 1) as f64;
    let mut shifted = Vec::new();
    let mut samples = Vec::with_capacity(ns);
    for i in 0..ns {
        let s = -0.5 + i as f64 * ds;
        let shift = if i + 1 == ns { -0.25 * ds } else { 0.25 * ds };
        samples.push(evaluate(&fam, path, s, shift, tol, &mut shifted)?);
    }
    let mut min_abs = samples.iter().map(|x| x.eig.margin()).fold(f64::INFINITY, f64::min);
    let mut crossings = Vec::new();
    for w in samples.windows(2) {
        crossings.extend(interval(&fam, path, &w[0], &w[1], 0, tol, &mut shifted, &mut min_abs)?);
    }
    let net_flow = crossings.iter().map(|c| c.direction).sum();
    debug_assert_eq!(net_flow, neg_count(&samples[0].eig) - neg_count(&samples[ns - 1].eig));
    Ok(FlowRecord { crossings, net_flow, min_abs_eigenvalue: min_abs, shifted_samples: shifted })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CzParams {
    /// Spectral-flow samples over [−0.5, 1.5].
    pub ns_flow: usize,
    /// Strip cells per unit s for the direct computation.
    pub ns_strip: usize,
    pub nt: usize,
    pub l: f64,
    pub profile: Profile,
    pub tol: f64,
    /// Reference operator parameter σ.
    pub sigma_ref: f64,
    /// Repeat on doubled grids and require the same integer.
    pub refine: bool,
    pub policy: RankPolicy,
}

impl Default for CzParams {
    fn default() -> Self {
        CzParams {
            ns_flow: 64,
            ns_strip: 16,
            nt: 64,
            l: 8.0,
            profile: Profile::Smoothstep,
            tol: 1e-9,
            sigma_ref: 1.0,
            refine: true,
            policy: RankPolicy::default(),
        }
    }
}

pub fn reference_for(a: &AsymptoticOperator, sigma: f64) -> AsymptoticOperator {
    AsymptoticOperator::reference(a.n, a.domain, sigma)
}

/// Spectral flow from `from` to `to` converted to an index difference,
/// `μCZ(to) − μCZ(from)`, with the grid-doubling check.
pub fn flow_index(from: &AsymptoticOperator, to: &AsymptoticOperator, p: &CzParams) -> Result<i64> {
    let coarse = spectral_flow(&OperatorPath::new(from, to, p.profile, p.ns_flow)?, p.nt, p.tol)?.net_flow;
    if p.refine {
        let fine = spectral_flow(&OperatorPath::new(from, to, p.profile, 2 * p.ns_flow)?, 2 * p.nt, p.tol)?.net_flow;
        if fine != coarse {
            return Err(Error::UnstableIndex { what: "spectral flow".into(), coarse: FLOW_SIGN * coarse, fine: FLOW_SIGN * fine });
        }
    }
    Ok(FLOW_SIGN * coarse)
}

/// `μCZ(A)` by spectral flow from the reference operator.
pub fn cz_index(a: &AsymptoticOperator, p: &CzParams) -> Result<i64> {
    flow_index(&reference_for(a, p.sigma_ref), a, p)
}

/// `μCZ(A)` as the Fredholm index of `∂s − A(s)` interpolating from the
/// reference operator on `[−L, L + 1]`.
pub fn cz_index_direct(a: &AsymptoticOperator, p: &CzParams) -> Result<IndexComputation> {
    if p.l < 4.0 {
        return Err(Error::InvalidInput(format!("truncation L = {} is below 4", p.l)));
    }
    let prob = CRProblem::interpolation(&reference_for(a, p.sigma_ref), a, p.profile, p.l)?;
    fredholm_index(&prob, &IndexParams { ns: p.ns_strip, nt: p.nt, policy: p.policy, refine: p.refine })
}

/// 0 if conjugation by Ω preserves the parity of μCZ, 1 otherwise.
pub fn parity_shift(omega: &UnitaryPath, domain: DomainKind) -> Result<u8> {
    omega.validate(domain)?;
    match domain {
        DomainKind::Circle => Ok(0),
        DomainKind::Strip => {
            let d = omega.det(0.0) * omega.det(1.0);
            Ok(if d.re > 0.0 { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotic::{make_operator, Coefficient};
    use std::f64::consts::PI;

    fn theta(t: f64) -> AsymptoticOperator {
        make_operator(1, DomainKind::Strip, Coefficient::Constant(DMatrix::identity(2, 2) * t)).unwrap()
    }

    fn quick() -> CzParams {
        CzParams { nt: 16, ns_strip: 8, l: 4.0, ..Default::default() }
    }

    #[test]
    fn flow_sign_matches_fredholm_index() {
        // one eigenvalue πk − θ crosses zero between θ = 2 and θ = 4
        let p = quick();
        let flow = spectral_flow(&OperatorPath::new(&theta(2.0), &theta(4.0), p.profile, 32).unwrap(), 16, 1e-9).unwrap();
        assert_eq!(flow.crossings.len(), 1);
        assert_eq!(flow.net_flow, -1);
        let prob = CRProblem::interpolation(&theta(2.0), &theta(4.0), p.profile, 4.0).unwrap();
        let ind = fredholm_index(&prob, &IndexParams { ns: 8, nt: 16, ..Default::default() }).unwrap();
        assert_eq!(ind.index, FLOW_SIGN * flow.net_flow);
    }

    #[test]
    fn reference_has_zero_index() {
        for domain in [DomainKind::Strip, DomainKind::Circle] {
            let a = AsymptoticOperator::reference(2, domain, 1.0);
            assert_eq!(cz_index(&a, &quick()).unwrap(), 0);
            assert_eq!(cz_index_direct(&a, &quick()).unwrap().index, 0);
        }
    }

    #[test]
    fn theta_sweep_steps_by_one() {
        let p = quick();
        let below = cz_index(&theta(PI - 0.3), &p).unwrap();
        let above = cz_index(&theta(PI + 0.3), &p).unwrap();
        assert_eq!((above - below).abs(), 1);
    }

    #[test]
    fn constant_path_has_no_flow() {
        let a = AsymptoticOperator::reference(1, DomainKind::Strip, 1.0);
        let f = spectral_flow(&OperatorPath::new(&a, &a, Profile::Smoothstep, 16).unwrap(), 16, 1e-9).unwrap();
        assert_eq!(f.net_flow, 0);
        assert!(f.crossings.is_empty());
    }

    #[test]
    fn degenerate_endpoint_is_rejected() {
        let r = spectral_flow(&OperatorPath::new(&theta(1.0), &theta(PI), Profile::Smoothstep, 16).unwrap(), 16, 1e-9);
        assert!(matches!(r, Err(Error::EndpointDegenerate { .. })));
    }

    #[test]
    fn parity_shift_examples() {
        assert_eq!(parity_shift(&UnitaryPath::identity(2), DomainKind::Strip).unwrap(), 0);
        assert_eq!(parity_shift(&UnitaryPath::half_rotation(2, 1), DomainKind::Strip).unwrap(), 1);
        assert_eq!(parity_shift(&UnitaryPath::full_loop(1, 1), DomainKind::Circle).unwrap(), 0);
        assert!(parity_shift(&UnitaryPath::half_rotation(1, 1), DomainKind::Circle).is_err());
    }

    fn random(n: usize, domain: DomainKind, seed: u64) -> AsymptoticOperator {
        crate::random::random_operator(n, domain, 32, &mut crate::random::rng(seed)).unwrap()
    }

    fn quick32() -> CzParams {
        CzParams { nt: 32, ns_strip: 8, l: 4.0, ..Default::default() }
    }

    #[test]
    fn profile_does_not_change_the_index() {
        for (k, domain) in [DomainKind::Strip, DomainKind::Circle, DomainKind::Strip].into_iter().enumerate() {
            let a = random(1 + k / 2, domain, 500 + k as u64);
            let smooth = cz_index(&a, &quick32()).unwrap();
            let quintic = cz_index(&a, &CzParams { profile: Profile::Quintic, ..quick32() }).unwrap();
            assert_eq!(smooth, quintic, "{domain:?}");
        }
    }

    #[test]
    fn flow_is_additive_under_concatenation() {
        let p = CzParams { refine: false, ..quick32() };
        for (k, domain) in [DomainKind::Strip, DomainKind::Circle].into_iter().enumerate() {
            let ops: Vec<AsymptoticOperator> = (0..3).map(|i| random(1, domain, 600 + 10 * k as u64 + i)).collect();
            let ab = flow_index(&ops[0], &ops[1], &p).unwrap();
            let bc = flow_index(&ops[1], &ops[2], &p).unwrap();
            let ac = flow_index(&ops[0], &ops[2], &p).unwrap();
            assert_eq!(ab + bc, ac, "{domain:?}");
        }
    }

    #[test]
    fn reference_family_has_zero_index() {
        for domain in [DomainKind::Strip, DomainKind::Circle] {
            for sigma in [0.25, 1.0, 4.0] {
                let a = AsymptoticOperator::reference(1, domain, sigma);
                assert!(crate::asymptotic::is_nondegenerate(&a, 32, 1e-6).unwrap().0);
                assert_eq!(cz_index(&a, &quick()).unwrap(), 0, "{domain:?} σ={sigma}");
                assert_eq!(cz_index_direct(&a, &quick()).unwrap().index, 0, "{domain:?} σ={sigma}");
            }
        }
    }

    #[test]
    fn flow_to_steeper_reference_is_refinement_stable() {
        let al = AsymptoticOperator::reference(1, DomainKind::Strip, 1.0);
        let steep = AsymptoticOperator::reference(1, DomainKind::Strip, 4.0);
        let f = spectral_flow(&OperatorPath::new(&al, &steep, Profile::Smoothstep, 32).unwrap(), 32, 1e-9).unwrap();
        let g = spectral_flow(&OperatorPath::new(&al, &steep, Profile::Smoothstep, 64).unwrap(), 64, 1e-9).unwrap();
        assert_eq!(f.net_flow, g.net_flow);
        assert_eq!(FLOW_SIGN * f.net_flow, cz_index_direct(&steep, &quick()).unwrap().index);
    }

    #[test]
    fn half_rotation_changes_parity() {
        let al = AsymptoticOperator::reference(1, DomainKind::Strip, 1.0);
        let b = crate::asymptotic::conjugate_operator(&al, &UnitaryPath::half_rotation(1, 1)).unwrap();
        let f = flow_index(&al, &b, &quick()).unwrap();
        assert_eq!(f.rem_euclid(2), 1);
        assert_eq!(f.abs(), 1);
    }

    #[test]
    fn backwards_interpolation_has_opposite_index() {
        for (k, domain) in [DomainKind::Strip, DomainKind::Circle].into_iter().enumerate() {
            let a = crate::random::random_operator_with_margin(1, domain, 32, 0.5, &mut crate::random::rng(700 + k as u64)).unwrap();
            let al = AsymptoticOperator::reference(1, domain, 2.0);
            let back = CRProblem::interpolation(&a, &al, Profile::Smoothstep, 4.0).unwrap();
            let ind = fredholm_index(&back, &IndexParams { ns: 8, nt: 32, ..Default::default() }).unwrap().index;
            assert_eq!(ind, -cz_index(&a, &quick32()).unwrap(), "{domain:?}");
        }
    }

    #[test]
    fn parity_law_on_random_conjugations() {
        let mut r = crate::random::rng(800);
        for k in 0..4 {
            let domain = if k % 2 == 0 { DomainKind::Strip } else { DomainKind::Circle };
            let a = crate::random::random_operator(1, domain, 32, &mut r).unwrap();
            let (omega, _) = crate::random::random_path(1, domain, &mut r).unwrap();
            let b = crate::asymptotic::conjugate_operator(&a, &omega).unwrap();
            let p = quick32();
            let diff = cz_index(&b, &p).unwrap() - cz_index(&a, &p).unwrap();
            assert_eq!(diff.rem_euclid(2) as u8, parity_shift(&omega, domain).unwrap(), "case {k}");
        }
    }
}
