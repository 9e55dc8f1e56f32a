//! Combinatorics of punctured surfaces with boundary and assembly of the
//! index formula `ind = n·X + μ_Mas + Σ₊ μCZ − Σ₋ μCZ`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::antilinear::ZeroType;
use crate::asymptotic::{is_nondegenerate, AsymptoticOperator, UnitaryPath};
use crate::cz_flow::{cz_index, parity_shift, CzParams};
use crate::error::{Error, Result};
use crate::numerics::DomainKind;
use crate::strip::{fredholm_index, CRProblem, IndexComputation, IndexParams};

/// Sign of a puncture or of a linearization entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-", alias = "−")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteriorPunctures {
    pub plus: usize,
    pub minus: usize,
}

/// Compact surface of genus `genus` with boundary circles, each carrying a
/// cyclic sequence of boundary puncture signs, plus interior punctures.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub genus: usize,
    #[serde(default)]
    pub boundary: Vec<Vec<Sign>>,
    #[serde(default)]
    pub interior: InteriorPunctures,
}

/// Where a puncture sits and which asymptotic operators it takes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct End {
    pub label: String,
    pub sign: Sign,
    pub domain: DomainKind,
}

impl SurfaceSpec {
    pub fn disk(signs: &[Sign]) -> SurfaceSpec {
        SurfaceSpec { genus: 0, boundary: vec![signs.to_vec()], interior: InteriorPunctures::default() }
    }

    pub fn closed(genus: usize, plus: usize, minus: usize) -> SurfaceSpec {
        SurfaceSpec { genus, boundary: vec![], interior: InteriorPunctures { plus, minus } }
    }

    /// `χ(Σ) = 2 − 2g − #boundary circles` of the compact surface.
    pub fn chi(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.boundary.len() as i64
    }

    pub fn interior_count(&self) -> usize {
        self.interior.plus + self.interior.minus
    }

    pub fn boundary_count(&self, sign: Sign) -> usize {
        self.boundary.iter().flatten().filter(|&&s| s == sign).count()
    }

    /// All punctures, interior ones first. Labels: `int+K`, `int-K`, `bdC.K`.
    pub fn ends(&self) -> Vec<End> {
        let mut out = Vec::new();
        for k in 0..self.interior.plus {
            out.push(End { label: format!("int+{k}"), sign: Sign::Plus, domain: DomainKind::Circle });
        }
        for k in 0..self.interior.minus {
            out.push(End { label: format!("int-{k}"), sign: Sign::Minus, domain: DomainKind::Circle });
        }
        for (c, circle) in self.boundary.iter().enumerate() {
            for (k, &sign) in circle.iter().enumerate() {
                out.push(End { label: format!("bd{c}.{k}"), sign, domain: DomainKind::Strip });
            }
        }
        out
    }

    /// Two punctures of opposite sign on a disk or a sphere: the surfaces on
    /// which the operator is a strip or cylinder problem.
    fn two_ended(&self) -> Option<DomainKind> {
        if self.genus != 0 {
            return None;
        }
        match (self.boundary.as_slice(), self.interior) {
            ([c], InteriorPunctures { plus: 0, minus: 0 }) if c.len() == 2 && c[0] != c[1] => Some(DomainKind::Strip),
            ([], InteriorPunctures { plus: 1, minus: 1 }) => Some(DomainKind::Circle),
            _ => None,
        }
    }
}

/// A zero of a generic section, with its location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroDatum {
    pub boundary: bool,
    pub kind: ZeroType,
}

impl ZeroDatum {
    pub fn interior(sign: Sign) -> ZeroDatum {
        let kind = match sign {
            Sign::Plus => ZeroType::InteriorPlus,
            Sign::Minus => ZeroType::InteriorMinus,
        };
        ZeroDatum { boundary: false, kind }
    }

    pub fn count(&self) -> i64 {
        self.kind.count()
    }
}

/// Boundary zero from the sign of the linearization and the sign of its
/// restriction to the boundary.
pub fn classify_boundary_zero(a_sign: Sign, restricted_sign: Sign) -> ZeroDatum {
    use Sign::*;
    let kind = match (a_sign, restricted_sign) {
        (Plus, Plus) => ZeroType::PlusPlus,
        (Plus, Minus) => ZeroType::PlusMinus,
        (Minus, Plus) => ZeroType::MinusPlus,
        (Minus, Minus) => ZeroType::MinusMinus,
    };
    ZeroDatum { boundary: true, kind }
}

pub fn count_zero_set(zeros: &[ZeroDatum]) -> i64 {
    zeros.iter().map(ZeroDatum::count).sum()
}

/// `X = χ(Σ) − #Γ_int − #Γ_∂⁻`.
pub fn euler_characteristic(surface: &SurfaceSpec) -> i64 {
    surface.chi() - surface.interior_count() as i64 - surface.boundary_count(Sign::Minus) as i64
}

/// Arcs of a boundary circle between cyclically consecutive punctures.
pub fn arcs(circle: &[Sign]) -> Vec<(Sign, Sign)> {
    let k = circle.len();
    (0..k).map(|i| (circle[i], circle[(i + 1) % k])).collect()
}

/// Two zero multisets built from the puncture pattern alone.
///
/// Both put one boundary zero on each arc: `(+,+)` between positive
/// punctures and `(−,−)` between negative ones. On mixed arcs A uses
/// `(+,−)` and B uses `(−,+)`. The interior zeros are of one sign, and
/// their number is `χ(Σ) − #Γ_int − #Γ_∂⁺`: the arcs already contribute
/// `#Γ_∂⁺ − #Γ_∂⁻`. B also gets an extra cancelling interior pair.
pub fn canonical_zero_sets(surface: &SurfaceSpec) -> (Vec<ZeroDatum>, Vec<ZeroDatum>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for circle in &surface.boundary {
        for (x, y) in arcs(circle) {
            match (x, y) {
                (Sign::Plus, Sign::Plus) | (Sign::Minus, Sign::Minus) => {
                    let z = classify_boundary_zero(x, x);
                    a.push(z);
                    b.push(z);
                }
                _ => {
                    a.push(classify_boundary_zero(Sign::Plus, Sign::Minus));
                    b.push(classify_boundary_zero(Sign::Minus, Sign::Plus));
                }
            }
        }
    }
    let inner = surface.chi() - surface.interior_count() as i64 - surface.boundary_count(Sign::Plus) as i64;
    let sign = if inner >= 0 { Sign::Plus } else { Sign::Minus };
    for _ in 0..inner.unsigned_abs() {
        a.push(ZeroDatum::interior(sign));
        b.push(ZeroDatum::interior(sign));
    }
    b.push(ZeroDatum::interior(Sign::Plus));
    b.push(ZeroDatum::interior(Sign::Minus));
    (a, b)
}

/// Orientation of the Maslov term relative to the winding of `det(Ω)²`,
/// fixed by matching the conjugated-end cylinder against its numerical index.
pub const MASLOV_SIGN: i64 = -1;

/// Change of trivialization at one end.
#[derive(Debug, Clone)]
pub struct Transition {
    pub end: String,
    pub domain: DomainKind,
    pub path: UnitaryPath,
}

#[derive(Debug, Clone)]
pub struct TransitionData {
    pub n: usize,
    pub transitions: Vec<Transition>,
}

impl TransitionData {
    pub fn trivial(n: usize) -> TransitionData {
        TransitionData { n, transitions: vec![] }
    }

    fn is_trivial(&self) -> bool {
        self.transitions.iter().all(|tr| {
            (0..=16).all(|j| {
                let w = tr.path.omega(j as f64 / 16.0);
                (w - crate::numerics::CMatrix::identity(self.n, self.n)).norm() < 1e-12
            })
        })
    }
}

/// Winding number of `t ↦ det(Ω(t))²` over `[0, 1]`.
pub fn det_squared_winding(path: &UnitaryPath) -> Result<i64> {
    let phase = |t: f64| -> Result<f64> {
        let d = path.det(t);
        if d.norm() < 1e-12 {
            return Err(Error::NotUnitary { defect: 1.0 });
        }
        Ok((d * d).arg())
    };
    let mut steps = 256;
    loop {
        let mut total = 0.0;
        let mut prev = phase(0.0)?;
        let mut coarse = false;
        for j in 1..=steps {
            let p = phase(j as f64 / steps as f64)?;
            let mut d = p - prev;
            d -= 2.0 * PI * (d / (2.0 * PI)).round();
            if d.abs() > 0.25 * PI {
                coarse = true;
                break;
            }
            total += d;
            prev = p;
        }
        if !coarse {
            let w = total / (2.0 * PI);
            if (w - w.round()).abs() > 1e-6 {
                return Err(Error::BoundaryConditionViolated(format!("det(Ω)² does not close up (winding {w:.6})")));
            }
            return Ok(w.round() as i64);
        }
        if steps >= 1 << 16 {
            return Err(Error::InvalidInput("unitary path varies too fast to resolve".into()));
        }
        steps *= 4;
    }
}

/// `μ_Mas` of the bundle pair described by the end transitions.
pub fn maslov_from_transitions(data: &TransitionData) -> Result<i64> {
    let mut total = 0;
    for tr in &data.transitions {
        if tr.path.n() != data.n {
            return Err(Error::BadDimensions(format!("transition at {} has rank {}, expected {}", tr.end, tr.path.n(), data.n)));
        }
        tr.path.validate(tr.domain)?;
        let w = det_squared_winding(&tr.path)?;
        // half-winding parity is the parity shift of the end
        debug_assert_eq!(w.rem_euclid(2) as u8, parity_shift(&tr.path, tr.domain)?);
        total += w;
    }
    Ok(MASLOV_SIGN * total)
}

/// Assembled index with every term, and the numerical index where the
/// surface is a strip or a cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub n: usize,
    pub x_term: i64,
    pub maslov: i64,
    /// `μCZ` per end label.
    pub cz: BTreeMap<String, i64>,
    pub cz_plus: i64,
    pub cz_minus: i64,
    pub assembled: i64,
    pub numerical: Option<IndexComputation>,
    pub agreement: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssembleParams {
    pub cz: CzParams,
    pub index: IndexParams,
    /// Truncation half-length of the strip/cylinder check.
    pub l: f64,
    pub degenerate_tol: f64,
    /// Run the numerical check when the surface allows it.
    pub numerical: bool,
}

impl Default for AssembleParams {
    fn default() -> Self {
        AssembleParams { cz: CzParams::default(), index: IndexParams::default(), l: 6.0, degenerate_tol: 1e-6, numerical: true }
    }
}

pub fn assemble_index(
    surface: &SurfaceSpec,
    n: usize,
    transitions: &TransitionData,
    asymptotics: &BTreeMap<String, AsymptoticOperator>,
    params: &AssembleParams,
) -> Result<IndexReport> {
    if n == 0 || transitions.n != n {
        return Err(Error::BadDimensions(format!("rank {n} with transitions of rank {}", transitions.n)));
    }
    let ends = surface.ends();
    for label in asymptotics.keys() {
        if !ends.iter().any(|e| &e.label == label) {
            return Err(Error::InvalidInput(format!("no puncture labelled {label}")));
        }
    }
    for tr in &transitions.transitions {
        match ends.iter().find(|e| e.label == tr.end) {
            None => return Err(Error::InvalidInput(format!("transition for unknown end {}", tr.end))),
            Some(e) if e.domain != tr.domain => {
                return Err(Error::EndKindMismatch(format!("transition at {} is not a {:?} path", tr.end, e.domain)))
            }
            _ => {}
        }
    }
    let mut cz = BTreeMap::new();
    let (mut cz_plus, mut cz_minus) = (0, 0);
    for e in &ends {
        let a = asymptotics.get(&e.label).ok_or_else(|| Error::InvalidInput(format!("missing asymptotic operator for {}", e.label)))?;
        if a.domain != e.domain {
            return Err(Error::EndKindMismatch(format!("{} needs a {:?} operator, got {:?}", e.label, e.domain, a.domain)));
        }
        if a.n != n {
            return Err(Error::BadDimensions(format!("{} has rank {}, expected {n}", e.label, a.n)));
        }
        let (ok, margin) = is_nondegenerate(a, params.cz.nt, params.degenerate_tol)?;
        if !ok {
            return Err(Error::DegenerateAsymptotics { end: e.label.clone(), margin });
        }
        let mu = cz_index(a, &params.cz)?;
        cz.insert(e.label.clone(), mu);
        match e.sign {
            Sign::Plus => cz_plus += mu,
            Sign::Minus => cz_minus += mu,
        }
    }
    let x_term = euler_characteristic(surface);
    let maslov = maslov_from_transitions(transitions)?;
    let assembled = n as i64 * x_term + maslov + cz_plus - cz_minus;
    let mut numerical = None;
    if params.numerical && transitions.is_trivial() && surface.two_ended().is_some() {
        let pick = |s: Sign| ends.iter().find(|e| e.sign == s).map(|e| &asymptotics[&e.label]).unwrap();
        let prob = CRProblem::interpolation(pick(Sign::Minus), pick(Sign::Plus), params.cz.profile, params.l)?;
        numerical = Some(fredholm_index(&prob, &params.index)?);
    }
    let agreement = numerical.as_ref().is_some_and(|c| c.index == assembled);
    Ok(IndexReport { n, x_term, maslov, cz, cz_plus, cz_minus, assembled, numerical, agreement })
}
