//! JSON problem files and their conversion to library types.

use std::collections::BTreeMap;

use crindex::antilinear::{ModelDomain, Zero, ZeroType};
use crindex::asymptotic::{conjugate_operator, make_operator, AsymptoticOperator, Coefficient, UnitaryPath};
use crindex::numerics::{CMatrix, DomainKind, C64};
use crindex::random::{random_operator_with_margin, rng};
use crindex::strip::Profile;
use crindex::surface::SurfaceSpec;
use crindex::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    #[serde(default)]
    pub params: Overrides,
    #[serde(default)]
    pub payload: Option<Payload>,
}

/// Numeric overrides. Flags on the command line win over these.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<usize>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Payload {
    Asymptotic(OperatorSpec),
    Cz(CzSpec),
    StripProblem(StripProblemSpec),
    Deformation(DeformationSpec),
    SurfaceIndex(SurfaceIndexSpec),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Asymptotic(_) => "asymptotic",
            Payload::Cz(_) => "cz",
            Payload::StripProblem(_) => "strip_problem",
            Payload::Deformation(_) => "deformation",
            Payload::SurfaceIndex(_) => "surface_index",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Strip,
    Circle,
}

impl From<Domain> for DomainKind {
    fn from(d: Domain) -> DomainKind {
        match d {
            Domain::Strip => DomainKind::Strip,
            Domain::Circle => DomainKind::Circle,
        }
    }
}

/// Real 2n×2n matrix, row by row.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSpec {
    /// `S = σ·C`.
    Reference { sigma: f64 },
    /// `S = θ·Id`.
    Scalar { theta: f64 },
    Constant { matrix: Matrix },
    Fourier {
        a0: Matrix,
        #[serde(default)]
        cos: Vec<Matrix>,
        #[serde(default)]
        sin: Vec<Matrix>,
    },
    Samples { values: Vec<Matrix> },
    /// Seeded random operator with the given spectral margin.
    Random {
        seed: u64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
}

fn default_margin() -> f64 {
    0.05
}

/// Asymptotic operator block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub n: usize,
    pub domain: Domain,
    pub coeff: CoeffSpec,
    /// Change of trivialization applied to the coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugate: Option<PathSpec>,
}

/// Complex n×n matrix as rows of `[re, im]` pairs.
pub type CMatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Identity,
    /// `half_rotation_K` or `full_loop_K`, K an integer (may be negative).
    Generator { name: String },
    /// Samples at `j/(len−1)`.
    Samples { values: Vec<CMatrixSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzSpec {
    pub operator: OperatorSpec,
    /// Change of trivialization for `parity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSpec>,
    /// Second operator: also report the spectral flow from `operator` to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<OperatorSpec>,
}

/// Strip or cylinder problem interpolating from `minus` to `plus`, or
/// translation invariant when `plus` is absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripSpec {
    pub minus: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plus: Option<OperatorSpec>,
    #[serde(default)]
    pub profile: Profile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripProblemSpec {
    pub problem: StripSpec,
    /// Right factor for `glue`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glue_with: Option<StripSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Seed of the smooth right-hand side for `solve`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroSpec {
    pub re: f64,
    pub im: f64,
    pub kind: ZeroType,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationSpec {
    pub domain: ModelDomain,
    pub zeros: Vec<ZeroSpec>,
    /// Distance from the zeros to the box edges for `deform`; by default it
    /// shrinks with σ like the kernel does.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

impl DeformationSpec {
    pub fn zeros(&self) -> Vec<Zero> {
        self.zeros.iter().map(|z| Zero::new(z.re, z.im, z.kind)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub end: String,
    pub path: PathSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceIndexSpec {
    pub surface: SurfaceSpec,
    pub n: usize,
    /// Asymptotic operator per end label (`int+K`, `int-K`, `bdC.K`).
    pub ends: BTreeMap<String, OperatorSpec>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
}

pub fn parse(text: &str) -> Result<ProblemFile> {
    let file: ProblemFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("problem file: {e}")))?;
    if file.version != FORMAT_VERSION {
        return Err(Error::InvalidInput(format!("unsupported problem file version {}", file.version)));
    }
    Ok(file)
}

fn real_matrix(m: &Matrix) -> Result<DMatrix<f64>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || m.iter().any(|r| r.len() != cols) {
        return Err(Error::BadDimensions("matrix rows must be nonempty and of equal length".into()));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| m[i][j]))
}

fn complex_matrix(m: &CMatrixSpec) -> Result<CMatrix> {
    let rows = m.len();
    if rows == 0 || m.iter().any(|r| r.len() != rows) {
        return Err(Error::BadDimensions("complex path samples must be square".into()));
    }
    Ok(CMatrix::from_fn(rows, rows, |i, j| C64::new(m[i][j][0], m[i][j][1])))
}

impl PathSpec {
    pub fn build(&self, n: usize) -> Result<UnitaryPath> {
        match self {
            PathSpec::Identity => Ok(UnitaryPath::identity(n)),
            PathSpec::Generator { name } => {
                let bad = || Error::InvalidInput(format!("unknown path generator {name:?}"));
                let (kind, k) = name.rsplit_once('_').ok_or_else(bad)?;
                let k: i64 = k.parse().map_err(|_| bad())?;
                match kind {
                    "half_rotation" => Ok(UnitaryPath::half_rotation(n, k)),
                    "full_loop" => Ok(UnitaryPath::full_loop(n, k)),
                    _ => Err(bad()),
                }
            }
            PathSpec::Samples { values } => {
                let v = values.iter().map(complex_matrix).collect::<Result<Vec<_>>>()?;
                if v.len() < 2 || v.iter().any(|m| m.nrows() != n) {
                    return Err(Error::BadDimensions(format!("path needs at least two {n}×{n} samples")));
                }
                Ok(UnitaryPath::Samples(v))
            }
        }
    }
}

impl OperatorSpec {
    /// `nt` is the working grid, used to certify the margin of random operators.
    pub fn build(&self, nt: usize) -> Result<AsymptoticOperator> {
        let (n, domain) = (self.n, DomainKind::from(self.domain));
        if n == 0 {
            return Err(Error::BadDimensions("complex rank must be at least 1".into()));
        }
        let base = match &self.coeff {
            CoeffSpec::Reference { sigma } => AsymptoticOperator::reference(n, domain, *sigma),
            CoeffSpec::Scalar { theta } => {
                make_operator(n, domain, Coefficient::Constant(DMatrix::identity(2 * n, 2 * n) * *theta))?
            }
            CoeffSpec::Constant { matrix } => make_operator(n, domain, Coefficient::Constant(real_matrix(matrix)?))?,
            CoeffSpec::Fourier { a0, cos, sin } => make_operator(
                n,
                domain,
                Coefficient::Fourier {
                    a0: real_matrix(a0)?,
                    cos: cos.iter().map(real_matrix).collect::<Result<_>>()?,
                    sin: sin.iter().map(real_matrix).collect::<Result<_>>()?,
                },
            )?,
            CoeffSpec::Samples { values } => {
                make_operator(n, domain, Coefficient::Samples(values.iter().map(real_matrix).collect::<Result<_>>()?))?
            }
            CoeffSpec::Random { seed, margin } => random_operator_with_margin(n, domain, nt, *margin, &mut rng(*seed))?,
        };
        match &self.conjugate {
            None => Ok(base),
            Some(p) => conjugate_operator(&base, &p.build(n)?),
        }
    }
}

impl StripSpec {
    pub fn ends(&self, nt: usize) -> Result<(AsymptoticOperator, Option<AsymptoticOperator>)> {
        let minus = self.minus.build(nt)?;
        let plus = self.plus.as_ref().map(|p| p.build(nt)).transpose()?;
        Ok((minus, plus))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"version": 1, "payload": {"asymptotic": {"n": 1, "domain": "strip",
            "coeff": {"kind": "reference", "sigma": 1.0}, "colour": 3}}}"#;
        assert!(parse(bad).is_err());
        let bad_top = r#"{"version": 1, "extra": true}"#;
        assert!(parse(bad_top).is_err());
    }

    #[test]
    fn version_must_match() {
        assert!(parse(r#"{"version": 2}"#).is_err());
        assert!(parse(r#"{"version": 1}"#).unwrap().payload.is_none());
    }

    #[test]
    fn generators_parse() {
        for (name, ok) in [("half_rotation_1", true), ("full_loop_-2", true), ("twist_1", false), ("full_loop_x", false)] {
            let p = PathSpec::Generator { name: name.into() };
            assert_eq!(p.build(2).is_ok(), ok, "{name}");
        }
    }

    #[test]
    fn constant_matrix_must_be_symmetric() {
        let spec = OperatorSpec {
            n: 1,
            domain: Domain::Strip,
            coeff: CoeffSpec::Constant { matrix: vec![vec![1.0, 2.0], vec![0.0, 1.0]] },
            conjugate: None,
        };
        assert!(matches!(spec.build(16), Err(Error::NonSymmetric { .. })));
    }
}
