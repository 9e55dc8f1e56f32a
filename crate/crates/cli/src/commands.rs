//! One function per command. Each returns the `results` block of the
//! report plus warnings and the exit status.

use std::collections::BTreeMap;
use std::time::Instant;

use crindex::antilinear::{
    build_deformation, concentration_margin, concentration_point_at, default_density, local_model, total_count, DomainBox,
    PlanarDims, ZeroType,
};
use crindex::asymptotic::{conjugate_operator, is_nondegenerate, spectrum, AsymptoticOperator};
use crindex::cz_flow::{cz_index_direct, parity_shift, reference_for, spectral_flow, CzParams, OperatorPath, FLOW_SIGN};
use crindex::numerics::RankPolicy;
use crindex::strip::{
    decay_rates, fredholm_index, glue, integrated_residual, smooth_strip_rhs, solve_translation_invariant, CRProblem,
    IndexComputation, IndexParams, SGrid,
};
use crindex::surface::{assemble_index, AssembleParams, Transition, TransitionData};
use crindex::verify::{run_criterion, VerifyOptions};
use crindex::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::problem::{DeformationSpec, OperatorSpec, Payload, ProblemFile, StripSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Spectrum,
    Cz,
    Parity,
    IndexStrip,
    Glue,
    Solve,
    LocalModels,
    Deform,
    Concentrate,
    Index,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Cz => "cz",
            Command::Parity => "parity",
            Command::IndexStrip => "index-strip",
            Command::Glue => "glue",
            Command::Solve => "solve",
            Command::LocalModels => "local-models",
            Command::Deform => "deform",
            Command::Concentrate => "concentrate",
            Command::Index => "index",
            Command::Verify => "verify",
        }
    }
}

/// Parameters after defaults, problem-file overrides and flags.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub nt: usize,
    pub ns: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub sigma: Vec<f64>,
    pub tol: f64,
    pub seed: u64,
    pub refine: bool,
    pub ns_flow: usize,
    pub flow_tol: f64,
    pub rank_policy: RankPolicy,
}

impl Resolved {
    pub fn defaults(cmd: Command) -> Resolved {
        let cz = CzParams::default();
        let mut r = Resolved {
            nt: cz.nt,
            ns: cz.ns_strip,
            l: cz.l,
            sigma: vec![cz.sigma_ref],
            tol: 1e-6,
            seed: VerifyOptions::default().seed,
            refine: true,
            ns_flow: cz.ns_flow,
            flow_tol: cz.tol,
            rank_policy: RankPolicy::default(),
        };
        match cmd {
            Command::Solve => r.ns = 64,
            // grid points per axis and box half-width of the planar models
            Command::LocalModels => {
                r.nt = 96;
                r.l = 6.0;
            }
            Command::Deform | Command::Concentrate => r.sigma = vec![1.0, 4.0, 16.0],
            Command::Index => r.l = AssembleParams::default().l,
            _ => {}
        }
        r
    }

    fn cz(&self) -> CzParams {
        CzParams {
            ns_flow: self.ns_flow,
            ns_strip: self.ns,
            nt: self.nt,
            l: self.l,
            tol: self.flow_tol,
            sigma_ref: self.sigma[0],
            refine: self.refine,
            policy: self.rank_policy,
            ..CzParams::default()
        }
    }

    fn index(&self) -> IndexParams {
        IndexParams { ns: self.ns, nt: self.nt, policy: self.rank_policy, refine: self.refine }
    }

    fn validate(&self) -> Result<()> {
        if self.nt < 4 || self.ns == 0 {
            return Err(Error::InvalidInput("grids need nt ≥ 4 and ns ≥ 1".into()));
        }
        if !(self.l > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidInput("L and tol must be positive".into()));
        }
        if self.sigma.is_empty() || self.sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("σ list must be nonempty and positive".into()));
        }
        Ok(())
    }
}

pub struct Outcome {
    pub results: Value,
    pub warnings: Vec<String>,
    pub exit: i32,
    pub csv: Option<String>,
}

impl Outcome {
    fn ok(results: Value) -> Outcome {
        Outcome { results, warnings: vec![], exit: 0, csv: None }
    }
}

pub fn run(cmd: Command, file: Option<&ProblemFile>, r: &Resolved, criteria: &[u8]) -> Result<Outcome> {
    r.validate()?;
    let payload = file.and_then(|f| f.payload.as_ref());
    let mut out = match cmd {
        Command::Spectrum => spectrum_cmd(operator_of(payload, cmd)?, r),
        Command::Cz => cz_cmd(payload, r),
        Command::Parity => parity_cmd(payload, r),
        Command::IndexStrip => index_strip_cmd(payload, r),
        Command::Glue => glue_cmd(payload, r),
        Command::Solve => solve_cmd(payload, r),
        Command::LocalModels => local_models_cmd(r),
        Command::Deform => deform_cmd(deformation_of(payload, cmd)?, r),
        Command::Concentrate => concentrate_cmd(deformation_of(payload, cmd)?, r),
        Command::Index => index_cmd(payload, r),
        Command::Verify => verify_cmd(r, criteria),
    }?;
    if !r.refine && cmd != Command::Verify && cmd != Command::Spectrum {
        out.warnings.push("refinement disabled: integers are from a single grid".into());
    }
    Ok(out)
}

fn wrong_payload(cmd: Command, want: &str, got: Option<&Payload>) -> Error {
    Error::InvalidInput(format!(
        "{} needs a {want} payload, got {}",
        cmd.name(),
        got.map_or("none", Payload::kind)
    ))
}

fn operator_of(payload: Option<&Payload>, cmd: Command) -> Result<&OperatorSpec> {
    match payload {
        Some(Payload::Asymptotic(op)) => Ok(op),
        Some(Payload::Cz(c)) => Ok(&c.operator),
        other => Err(wrong_payload(cmd, "asymptotic or cz", other)),
    }
}

fn deformation_of(payload: Option<&Payload>, cmd: Command) -> Result<&DeformationSpec> {
    match payload {
        Some(Payload::Deformation(d)) => Ok(d),
        other => Err(wrong_payload(cmd, "deformation", other)),
    }
}

fn strip_of(payload: Option<&Payload>, cmd: Command) -> Result<&crate::problem::StripProblemSpec> {
    match payload {
        Some(Payload::StripProblem(p)) => Ok(p),
        other => Err(wrong_payload(cmd, "strip_problem", other)),
    }
}

fn require_nondegenerate(a: &AsymptoticOperator, end: &str, r: &Resolved) -> Result<f64> {
    let (ok, margin) = is_nondegenerate(a, r.nt, r.tol)?;
    if !ok {
        return Err(Error::DegenerateAsymptotics { end: end.into(), margin });
    }
    Ok(margin)
}

fn nearest_zero(values: &[f64], k: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    v.truncate(k);
    v.sort_by(f64::total_cmp);
    v
}

fn spectrum_cmd(op: &OperatorSpec, r: &Resolved) -> Result<Outcome> {
    let a = op.build(r.nt)?;
    let coarse = spectrum(&a, r.nt)?;
    let fine = spectrum(&a, 2 * r.nt)?;
    let (nondegenerate, margin) = is_nondegenerate(&a, r.nt, r.tol)?;
    let mut eigenvalues = coarse.eigenvalues.clone();
    eigenvalues.sort_by(f64::total_cmp);
    let (neg, pos) = coarse.gap_edges();
    let results = json!({
        "n": a.n,
        "domain": a.domain,
        "nondegenerate": nondegenerate,
        "margin": margin,
        "gap_edges": [neg, pos],
        "nearest_zero": [
            {"nt": r.nt, "eigenvalues": nearest_zero(&coarse.eigenvalues, 8), "margin": coarse.margin()},
            {"nt": 2 * r.nt, "eigenvalues": nearest_zero(&fine.eigenvalues, 8), "margin": fine.margin()},
        ],
        "eigenvalues": eigenvalues,
    });
    let mut out = Outcome::ok(results);
    if !nondegenerate {
        out.warnings.push(format!("operator is degenerate: margin {margin:.3e} below tol {:.1e}", r.tol));
        out.exit = 4;
    }
    Ok(out)
}

/// `μ(to) − μ(from)` by spectral flow, with the per-grid records.
fn flow_evidence(from: &AsymptoticOperator, to: &AsymptoticOperator, p: &CzParams) -> Result<(i64, Value)> {
    let mut grids = vec![(p.ns_flow, p.nt)];
    if p.refine {
        grids.push((2 * p.ns_flow, 2 * p.nt));
    }
    let mut records = Vec::new();
    let mut values = Vec::new();
    for &(ns_flow, nt) in &grids {
        let rec = spectral_flow(&OperatorPath::new(from, to, p.profile, ns_flow)?, nt, p.tol)?;
        values.push(FLOW_SIGN * rec.net_flow);
        records.push(json!({
            "ns_flow": ns_flow,
            "nt": nt,
            "value": FLOW_SIGN * rec.net_flow,
            "crossings": rec.crossings.len(),
            "min_abs_eigenvalue": rec.min_abs_eigenvalue,
        }));
    }
    if values.iter().any(|&v| v != values[0]) {
        return Err(Error::UnstableIndex { what: "spectral flow".into(), coarse: values[0], fine: values[1] });
    }
    Ok((values[0], json!({"value": values[0], "refined": p.refine, "grids": records})))
}

fn cz_cmd(payload: Option<&Payload>, r: &Resolved) -> Result<Outcome> {
    let (op, to) = match payload {
        Some(Payload::Cz(c)) => (&c.operator, c.to.as_ref()),
        Some(Payload::Asymptotic(op)) => (op, None),
        other => return Err(wrong_payload(Command::Cz, "asymptotic or cz", other)),
    };
    let p = r.cz();
    let a = op.build(r.nt)?;
    let margin = require_nondegenerate(&a, "operator", r)?;
    let (flow, flow_rec) = flow_evidence(&reference_for(&a, p.sigma_ref), &a, &p)?;
    let direct = cz_index_direct(&a, &p)?;
    let agreement = flow == direct.index;
    let mut results = json!({
        "cz": flow,
        "margin": margin,
        "spectral_flow": flow_rec,
        "direct": direct,
        "agreement": agreement,
    });
    if let Some(to) = to {
        let b = to.build(r.nt)?;
        require_nondegenerate(&b, "to", r)?;
        let (d, rec) = flow_evidence(&a, &b, &p)?;
        results["flow_to"] = json!({"difference": d, "spectral_flow": rec});
    }
    let mut out = Outcome::ok(results);
    if !agreement {
        out.warnings.push(format!("spectral flow {flow} and direct index {} disagree", direct.index));
        out.exit = 3;
    }
    Ok(out)
}

fn parity_cmd(payload: Option<&Payload>, r: &Resolved) -> Result<Outcome> {
    let spec = match payload {
        Some(Payload::Cz(c)) if c.path.is_some() => c,
        other => return Err(wrong_payload(Command::Parity, "cz (with a path)", other)),
    };
    let p = r.cz();
    let a = spec.operator.build(r.nt)?;
    let omega = spec.path.as_ref().expect("checked above").build(a.n)?;
    let shift = parity_shift(&omega, a.domain)?;
    let b = conjugate_operator(&a, &omega)?;
    require_nondegenerate(&a, "operator", r)?;
    require_nondegenerate(&b, "conjugated", r)?;
    let (mu_a, rec_a) = flow_evidence(&reference_for(&a, p.sigma_ref), &a, &p)?;
    let (mu_b, rec_b) = flow_evidence(&reference_for(&b, p.sigma_ref), &b, &p)?;
    let holds = (mu_b - mu_a).rem_euclid(2) == shift as i64;
    let mut out = Outcome::ok(json!({
        "parity_shift": shift,
        "cz": {"value": mu_a, "spectral_flow": rec_a},
        "cz_conjugated": {"value": mu_b, "spectral_flow": rec_b},
        "law_holds": holds,
    }));
    if !holds {
        out.warnings.push(format!("μ changed from {mu_a} to {mu_b}, parity shift {shift}"));
        out.exit = 3;
    }
    Ok(out)
}

fn build_strip(spec: &StripSpec, r: &Resolved) -> Result<CRProblem> {
    let (minus, plus) = spec.ends(r.nt)?;
    require_nondegenerate(&minus, "minus", r)?;
    match plus {
        None => Ok(CRProblem::translation_invariant(&minus, r.l)),
        Some(plus) => {
            require_nondegenerate(&plus, "plus", r)?;
            CRProblem::interpolation(&minus, &plus, spec.profile, r.l)
        }
    }
}

fn index_strip_cmd(payload: Option<&Payload>, r: &Resolved) -> Result<Outcome> {
    let spec = strip_of(payload, Command::IndexStrip)?;
    let prob = build_strip(&spec.problem, r)?;
    let ind = fredholm_index(&prob, &r.index())?;
    Ok(Outcome::ok(json!({"index": ind.index, "computation": ind})))
}

fn glue_cmd(payload: Option<&Payload>, r: &Resolved) -> Result<Outcome> {
    let spec = strip_of(payload, Command::Glue)?;
    let right = spec.glue_with.as_ref().ok_or_else(|| Error::InvalidInput("glue needs glue_with".into()))?;
    let rho = spec.rho.unwrap_or(4.0);
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("ρ must be positive, got {rho}")));
    }
    let left = build_strip(&spec.problem, r)?;
    let right = build_strip(right, r)?;
    let glued = glue(&left, &right, rho)?;
    let params = r.index();
    let parts: Vec<Result<IndexComputation>> =
        [&left, &right, &glued].par_iter().map(|p| fredholm_index(p, &params)).collect();
    let mut parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let g = parts.pop().expect("three parts");
    let (a, b) = (&parts[0], &parts[1]);
    let additive = g.index == a.index + b.index;
    let mut out = Outcome::ok(json!({
        "rho": rho,
        "left": a,
        "right": b,
        "glued": g,
        "additive": additive,
    }));
    if !additive {
        out.warnings.push(format!("{} + {} ≠ {}", a.index, b.index, g.index));
        out.exit = 3;
    }
    Ok(out)
}

fn solve_cmd(payload: Option<&Payload>, r: &Resolved) -> Result<Outcome> {
    let spec = strip_of(payload, Command::Solve)?;
    if spec.problem.plus.is_some() {
        return Err(Error::InvalidInput("solve needs a translation-invariant problem (no plus operator)".into()));
    }
    if r.l < 5.0 {
        return Err(Error::InvalidInput(format!("solve needs L ≥ 5, got {}", r.l)));
    }
    let a = spec.problem.minus.build(r.nt)?;
    require_nondegenerate(&a, "minus", r)?;
    let grid = SGrid::symmetric(r.l, r.ns);
    let seed = spec.rhs_seed.unwrap_or(r.seed);
    let eta = smooth_strip_rhs(&a, r.nt, &grid, seed)?;
    let u = solve_translation_invariant(&a, r.nt, &grid, &eta)?;
    let residual = integrated_residual(&a, r.nt, &grid, &u, &eta)?;
    let (neg, pos) = spectrum(&a, r.nt)?.gap_edges();
    let (rate_plus, rate_minus) = decay_rates(&u, &grid, (3.5, r.l - 0.5), (0.5 - r.l, -3.5))?;
    let profile: Vec<[f64; 2]> = (0..grid.nodes()).map(|j| [grid.s(j), u[j].norm()]).collect();
    let mut out = Outcome::ok(json!({
        "rhs_seed": seed,
        "grid": grid,
        "relative_residual": residual,
        "decay": {
            "rate_plus": rate_plus,
            "rate_minus": rate_minus,
            "gap_edges": [neg, pos],
        },
        "norm_profile": profile,
    }));
    out.csv = Some(csv_text(&["s", "norm"], profile.iter().map(|p| p.to_vec()))?);
    Ok(out)
}

fn dims_record(d: &PlanarDims, grid: Value) -> Value {
    json!({"kernel": d.kernel, "cokernel": d.cokernel, "gap_ratio": d.gap_ratio, "grid": grid})
}

/// Dims on the base grid and, with refinement, on the finer one; the
/// integers must agree.
fn refined_dims(
    r: &Resolved,
    what: &str,
    base: impl Fn() -> Result<(PlanarDims, Value)>,
    fine: impl Fn() -> Result<(PlanarDims, Value)>,
) -> Result<(PlanarDims, Vec<Value>)> {
    let (d, g) = base()?;
    let mut evidence = vec![dims_record(&d, g)];
    if r.refine {
        let (f, g) = fine()?;
        evidence.push(dims_record(&f, g));
        if f.kernel != d.kernel || f.cokernel != d.cokernel {
            let (coarse, fine) = if f.kernel != d.kernel { (d.kernel, f.kernel) } else { (d.cokernel, f.cokernel) };
            return Err(Error::UnstableIndex { what: what.into(), coarse: coarse as i64, fine: fine as i64 });
        }
    }
    Ok((d, evidence))
}

fn local_models_cmd(r: &Resolved) -> Result<Outcome> {
    let sigma = r.sigma[0];
    let (radius, grid) = (r.l, r.nt);
    let fine_grid = grid + grid / 4;
    let rows: Vec<Result<Value>> = ZeroType::ALL
        .par_iter()
        .map(|&zt| {
            let at = |g: usize| -> Result<(PlanarDims, Value)> {
                Ok((local_model(zt, sigma, radius, g)?.dims(&r.rank_policy)?, json!(g)))
            };
            let (d, evidence) = refined_dims(r, &format!("{} model", zt.tag()), || at(grid), || at(fine_grid))?;
            let count = zt.count();
            let expected = (count.max(0) as usize, (-count).max(0) as usize);
            Ok(json!({
                "type": zt.tag(),
                "kernel": d.kernel,
                "cokernel": d.cokernel,
                "index": d.index,
                "count": count,
                "matches_count": (d.kernel, d.cokernel) == expected,
                "grids": evidence,
            }))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let all = rows.iter().all(|v| v["matches_count"] == json!(true));
    let mut out = Outcome::ok(json!({"sigma": sigma, "radius": radius, "grid": grid, "models": rows, "all_match": all}));
    if !all {
        out.warnings.push("some local model dimensions differ from the zero counts".into());
        out.exit = 3;
    }
    Ok(out)
}

fn deform_cmd(spec: &DeformationSpec, r: &Resolved) -> Result<Outcome> {
    let zeros = spec.zeros();
    let count = total_count(&zeros);
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for &sigma in &r.sigma {
        let margin = spec.margin.unwrap_or_else(|| concentration_margin(sigma));
        let bx = DomainBox::around(&zeros, spec.domain, margin);
        let at = |density: f64| -> Result<(PlanarDims, Value)> {
            Ok((build_deformation(&zeros, sigma, &bx, Some(density))?.dims(&r.rank_policy)?, json!({"density": density})))
        };
        let base = default_density(sigma);
        let (d, evidence) = refined_dims(r, &format!("deformation at σ={sigma}"), || at(base), || at(1.25 * base))?;
        rows.push(json!({
            "sigma": sigma,
            "box_margin": margin,
            "kernel": d.kernel,
            "cokernel": d.cokernel,
            "index": d.index,
            "count_sum": count,
            "agrees": d.index == count,
            "grids": evidence,
        }));
        csv_rows.push(vec![sigma, d.kernel as f64, d.cokernel as f64, d.index as f64, count as f64, d.gap_ratio]);
    }
    let all = rows.iter().all(|v| v["agrees"] == json!(true));
    let mut out = Outcome::ok(json!({"count_sum": count, "sweep": rows, "all_agree": all}));
    out.csv = Some(csv_text(&["sigma", "kernel", "cokernel", "index", "count_sum", "gap_ratio"], csv_rows.into_iter())?);
    if !all {
        out.warnings.push("deformation index differs from the count sum".into());
        out.exit = 3;
    }
    Ok(out)
}

fn concentrate_cmd(spec: &DeformationSpec, r: &Resolved) -> Result<Outcome> {
    if spec.margin.is_some() {
        return Err(Error::InvalidInput("concentrate chooses its own box margin; remove \"margin\"".into()));
    }
    let zeros = spec.zeros();
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    let mut fractions = Vec::new();
    for &sigma in &r.sigma {
        let base = default_density(sigma);
        let at = |density: f64| concentration_point_at(&zeros, spec.domain, sigma, Some(density), &r.rank_policy);
        let (d, f) = at(base)?;
        let record = |d: &PlanarDims, density: f64, f: Option<f64>| {
            let mut v = dims_record(d, json!({"density": density}));
            v["fraction"] = json!(f);
            v
        };
        let mut evidence = vec![record(&d, base, f)];
        if r.refine {
            let (d2, f2) = at(1.25 * base)?;
            evidence.push(record(&d2, 1.25 * base, f2));
            if d2.kernel != d.kernel {
                return Err(Error::UnstableIndex { what: format!("kernel at σ={sigma}"), coarse: d.kernel as i64, fine: d2.kernel as i64 });
            }
        }
        fractions.push(f);
        rows.push(json!({"sigma": sigma, "kernel_dim": d.kernel, "fraction": f, "grids": evidence}));
        csv_rows.push(vec![sigma, d.kernel as f64, f.unwrap_or(f64::NAN)]);
    }
    // non-decreasing within 0.02 from the first σ with a kernel
    let present: Vec<f64> = fractions.iter().flatten().copied().collect();
    let monotone = present.windows(2).all(|w| w[1] >= w[0] - 0.02);
    let mut out = Outcome::ok(json!({"profile": rows, "non_decreasing": monotone}));
    out.csv = Some(csv_text(&["sigma", "kernel_dim", "fraction"], csv_rows.into_iter())?);
    if present.is_empty() {
        out.warnings.push("kernel is empty at every σ".into());
    }
    Ok(out)
}

fn index_cmd(payload: Option<&Payload>, r: &Resolved) -> Result<Outcome> {
    let spec = match payload {
        Some(Payload::SurfaceIndex(s)) => s,
        other => return Err(wrong_payload(Command::Index, "surface_index", other)),
    };
    let ends = spec.surface.ends();
    let mut ops = BTreeMap::new();
    for (label, op) in &spec.ends {
        ops.insert(label.clone(), op.build(r.nt)?);
    }
    let mut transitions = Vec::new();
    for t in &spec.transitions {
        let end = ends
            .iter()
            .find(|e| e.label == t.end)
            .ok_or_else(|| Error::InvalidInput(format!("transition for unknown end {}", t.end)))?;
        transitions.push(Transition { end: t.end.clone(), domain: end.domain, path: t.path.build(spec.n)? });
    }
    let params = AssembleParams {
        cz: r.cz(),
        index: r.index(),
        l: r.l,
        degenerate_tol: r.tol,
        numerical: true,
    };
    let report = assemble_index(&spec.surface, spec.n, &TransitionData { n: spec.n, transitions }, &ops, &params)?;
    let mut out = Outcome::ok(json!({
        "report": report,
        "cz_refined": r.refine,
        "formula": "n·X + μ_Mas + Σ₊μCZ − Σ₋μCZ",
    }));
    if report.numerical.is_some() && !report.agreement {
        out.warnings.push("assembled and numerical index disagree".into());
        out.exit = 3;
    }
    Ok(out)
}

fn verify_cmd(r: &Resolved, criteria: &[u8]) -> Result<Outcome> {
    let opts = VerifyOptions { seed: r.seed };
    let ids: Vec<u8> = if criteria.is_empty() { (1..=10).collect() } else { criteria.to_vec() };
    let mut rows = Vec::new();
    let mut passed = 0;
    for &id in &ids {
        let start = Instant::now();
        let c = run_criterion(id, &opts)?;
        // wall-clock time is kept out of the report so reruns compare equal
        eprintln!("criterion {id:2} {} ({:.1} s)", if c.passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        passed += c.passed as usize;
        rows.push(json!({"id": c.id, "title": c.title, "passed": c.passed, "detail": c.detail}));
    }
    let all = passed == ids.len();
    let mut out = Outcome::ok(json!({"criteria": rows, "passed": passed, "total": ids.len(), "all_passed": all}));
    if !all {
        out.exit = 1;
    }
    Ok(out)
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<String> {
    let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() })).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
