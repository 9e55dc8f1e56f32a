//! Acceptance experiments.
//!
//! Each criterion runs a fixed, seeded experiment and reports what it
//! measured next to the pass/fail decision. The integration test suite and
//! the `verify` command of the front end both call [`run_criterion`].

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antilinear::{
    bochner_residual, calibrate_global_constant, concentration_point, deformation_alpha, global_bochner_terms, random_test_section, kernel_overlap, local_model, total_count,
    ModelDomain, ModelOperator, Sampled2D, Zero, ZeroType,
};
use crate::asymptotic::{apply_asymptotic, conjugate_operator, solve_asymptotic, spectrum, AsymptoticOperator};
use crate::cz_flow::{cz_index, cz_index_direct, parity_shift, CzParams};
use crate::error::{Error, Result};
use crate::numerics::{DomainKind, RankPolicy};
use crate::random::{random_operator, random_operator_with_margin, random_path, rng};
use crate::strip::{decay_rates, fredholm_index, glue, integrated_residual, smooth_strip_rhs, solve_translation_invariant, CRProblem, IndexParams, Profile, SGrid};
use crate::surface::{
    arcs, assemble_index, canonical_zero_sets, count_zero_set, euler_characteristic, AssembleParams, InteriorPunctures,
    Sign, SurfaceSpec, TransitionData,
};

pub const TITLES: [&str; 10] = [
    "local model table",
    "Gaussian kernel overlaps",
    "reference operator has index 0",
    "spectral flow equals direct index on random operators",
    "parity law under trivialization change",
    "gluing additivity",
    "index formula on strips and cylinders",
    "Euler characteristic",
    "deformation index and concentration",
    "inequalities, solves and decay rates",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    /// Measured quantities, one line per sub-check.
    pub detail: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Added to every base seed; 0 reproduces the reference runs.
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0 }
    }
}

/// Accumulates sub-check outcomes.
#[derive(Default)]
struct Log {
    ok: bool,
    lines: Vec<String>,
}

impl Log {
    fn new() -> Log {
        Log { ok: true, lines: Vec::new() }
    }

    fn check(&mut self, pass: bool, line: String) {
        self.ok &= pass;
        self.lines.push(format!("[{}] {line}", if pass { "ok" } else { "FAIL" }));
    }

    fn error(&mut self, what: &str, e: &Error) {
        self.check(false, format!("{what}: {e}"));
    }
}

pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Result<CriterionResult> {
    if !(1..=10).contains(&id) {
        return Err(Error::InvalidInput(format!("no criterion {id}; valid ids are 1..=10")));
    }
    let start = Instant::now();
    let mut log = Log::new();
    let s = opts.seed;
    match id {
        1 => local_table(&mut log),
        2 => overlaps(&mut log),
        3 => reference_index(&mut log),
        4 => flow_vs_direct(&mut log, s),
        5 => parity(&mut log, s),
        6 => gluing(&mut log, s),
        7 => main_formula(&mut log, s),
        8 => euler(&mut log),
        9 => deformation(&mut log),
        _ => inequalities(&mut log, s),
    }
    Ok(CriterionResult {
        id,
        title: TITLES[id as usize - 1].to_string(),
        passed: log.ok,
        detail: log.lines,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// All criteria in order.
pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionResult> {
    (1..=10).map(|id| run_criterion(id, opts).expect("valid id")).collect()
}

fn cz_params() -> CzParams {
    CzParams { nt: 32, ns_strip: 8, l: 4.0, ..Default::default() }
}

fn index_params() -> IndexParams {
    IndexParams { ns: 8, nt: 32, ..Default::default() }
}

fn domain_of(i: u64) -> DomainKind {
    if i % 2 == 0 {
        DomainKind::Strip
    } else {
        DomainKind::Circle
    }
}

fn rank_of(i: u64) -> usize {
    1 + (i as usize / 2) % 2
}

// 1 -------------------------------------------------------------------

const TABLE: [(usize, usize); 6] = [(1, 0), (0, 1), (1, 0), (0, 0), (0, 0), (0, 1)];

fn local_table(log: &mut Log) {
    let start = Instant::now();
    let policy = RankPolicy::default();
    let rows: Vec<_> = ZeroType::ALL.par_iter().map(|&z| local_model(z, 1.0, 6.0, 96).and_then(|op| op.dims(&policy))).collect();
    let secs = start.elapsed().as_secs_f64();
    for ((z, row), want) in ZeroType::ALL.iter().zip(rows).zip(TABLE) {
        match row {
            Ok(d) => log.check(
                (d.kernel, d.cokernel) == want && d.gap_ratio >= 1e3,
                format!("{:10} (ker, coker) = ({}, {}) want {want:?}, gap ratio {:.3e}", z.tag(), d.kernel, d.cokernel, d.gap_ratio),
            ),
            Err(e) => log.error(z.tag(), &e),
        }
    }
    log.check(secs <= 60.0, format!("six models in {secs:.1} s (budget 60 s)"));
}

// 2 -------------------------------------------------------------------

fn overlaps(log: &mut Log) {
    let policy = RankPolicy::default();
    let kinds = [ZeroType::InteriorPlus, ZeroType::InteriorMinus, ZeroType::PlusPlus, ZeroType::MinusMinus];
    let res: Vec<_> = kinds.par_iter().map(|&z| ModelOperator::new(z, 1.0, 6.0, 96).and_then(|m| kernel_overlap(&m, &policy))).collect();
    for (z, r) in kinds.iter().zip(res) {
        match r {
            Ok(ov) => log.check(ov >= 0.999, format!("{:10} overlap {ov:.6}", z.tag())),
            Err(e) => log.error(z.tag(), &e),
        }
    }
}

// 3 -------------------------------------------------------------------

fn reference_index(log: &mut Log) {
    let p = cz_params();
    for domain in [DomainKind::Strip, DomainKind::Circle] {
        for n in [1, 2] {
            let a = AsymptoticOperator::reference(n, domain, 1.0);
            let tag = format!("{domain:?} n={n}");
            match (cz_index(&a, &p), cz_index_direct(&a, &p)) {
                (Ok(f), Ok(d)) => log.check(f == 0 && d.index == 0, format!("{tag}: flow {f}, direct {}", d.index)),
                (Err(e), _) | (_, Err(e)) => log.error(&tag, &e),
            }
        }
    }
}

// 4 -------------------------------------------------------------------

fn flow_vs_direct(log: &mut Log, seed: u64) {
    let start = Instant::now();
    let p = cz_params();
    let res: Vec<_> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let a = random_operator(rank_of(i), domain_of(i), p.nt, &mut rng(seed + 4000 + i))?;
            Ok((cz_index(&a, &p)?, cz_index_direct(&a, &p)?.index))
        })
        .collect::<Vec<Result<(i64, i64)>>>();
    for (i, r) in res.into_iter().enumerate() {
        let tag = format!("#{i:02} {:?} n={}", domain_of(i as u64), rank_of(i as u64));
        match r {
            Ok((f, d)) => log.check(f == d, format!("{tag}: flow {f}, direct {d}")),
            Err(e) => log.error(&tag, &e),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    log.check(secs <= 300.0, format!("20 instances in {secs:.1} s (budget 300 s)"));
}

// 5 -------------------------------------------------------------------

fn parity(log: &mut Log, seed: u64) {
    let p = cz_params();
    let res: Vec<_> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let domain = domain_of(i);
            let mut r = rng(seed + 5000 + i);
            let a = random_operator(rank_of(i), domain, p.nt, &mut r)?;
            let (omega, _) = random_path(rank_of(i), domain, &mut r)?;
            let b = conjugate_operator(&a, &omega)?;
            let diff = cz_index(&b, &p)? - cz_index(&a, &p)?;
            Ok((diff, parity_shift(&omega, domain)?))
        })
        .collect::<Vec<Result<(i64, u8)>>>();
    for (i, r) in res.into_iter().enumerate() {
        let domain = domain_of(i as u64);
        let tag = format!("#{i:02} {domain:?} n={}", rank_of(i as u64));
        match r {
            Ok((diff, shift)) => {
                let circle_ok = domain == DomainKind::Strip || shift == 0;
                log.check(diff.rem_euclid(2) as u8 == shift && circle_ok, format!("{tag}: μCZ difference {diff}, parity shift {shift}"));
            }
            Err(e) => log.error(&tag, &e),
        }
    }
}

// 6 -------------------------------------------------------------------

fn gluing(log: &mut Log, seed: u64) {
    let ip = index_params();
    let res: Vec<_> = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let domain = domain_of(i);
            let mut r = rng(seed + 6000 + i);
            let ops = (0..3).map(|_| random_operator_with_margin(1, domain, ip.nt, 0.5, &mut r)).collect::<Result<Vec<_>>>()?;
            let pm = CRProblem::interpolation(&ops[0], &ops[1], Profile::Smoothstep, 4.0)?;
            let pp = CRProblem::interpolation(&ops[1], &ops[2], Profile::Smoothstep, 4.0)?;
            let a = fredholm_index(&pm, &ip)?.index;
            let b = fredholm_index(&pp, &ip)?.index;
            Ok((a, b, fredholm_index(&glue(&pm, &pp, 4.0)?, &ip)?.index))
        })
        .collect::<Vec<Result<(i64, i64, i64)>>>();
    for (i, r) in res.into_iter().enumerate() {
        let tag = format!("pair #{i} {:?}", domain_of(i as u64));
        match r {
            Ok((a, b, g)) => log.check(g == a + b, format!("{tag}: ind {a} + {b}, glued {g}")),
            Err(e) => log.error(&tag, &e),
        }
    }
    // a path glued to its reverse
    for (k, domain) in [DomainKind::Strip, DomainKind::Circle].into_iter().enumerate() {
        let tag = format!("ZC#CZ {domain:?}");
        let run = || -> Result<(i64, i64, i64)> {
            let a = random_operator_with_margin(1, domain, ip.nt, 0.5, &mut rng(seed + 6100 + k as u64))?;
            let al = AsymptoticOperator::reference(1, domain, 2.0);
            let cz = CRProblem::interpolation(&al, &a, Profile::Smoothstep, 4.0)?;
            let zc = CRProblem::interpolation(&a, &al, Profile::Smoothstep, 4.0)?;
            Ok((
                fredholm_index(&zc, &ip)?.index,
                fredholm_index(&cz, &ip)?.index,
                fredholm_index(&glue(&zc, &cz, 4.0)?, &ip)?.index,
            ))
        };
        match run() {
            Ok((zc, cz, g)) => log.check(g == 0 && zc == -cz, format!("{tag}: ind ZC {zc}, ind CZ {cz}, glued {g}")),
            Err(e) => log.error(&tag, &e),
        }
    }
}

// 7 -------------------------------------------------------------------

fn main_formula(log: &mut Log, seed: u64) {
    let params = AssembleParams { cz: cz_params(), index: index_params(), l: 4.0, ..Default::default() };
    let res: Vec<_> = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let domain = domain_of(i);
            let n = rank_of(i);
            let surface = match domain {
                DomainKind::Strip => SurfaceSpec::disk(&[Sign::Plus, Sign::Minus]),
                DomainKind::Circle => SurfaceSpec::closed(0, 1, 1),
            };
            let mut r = rng(seed + 7000 + i);
            let mut ends = BTreeMap::new();
            for e in surface.ends() {
                ends.insert(e.label, random_operator(n, domain, params.cz.nt, &mut r)?);
            }
            assemble_index(&surface, n, &TransitionData::trivial(n), &ends, &params)
        })
        .collect::<Vec<_>>();
    for (i, r) in res.into_iter().enumerate() {
        let tag = format!("#{i} {:?} n={}", domain_of(i as u64), rank_of(i as u64));
        match r {
            Ok(rep) => {
                let num = rep.numerical.as_ref().map(|c| c.index);
                log.check(
                    rep.x_term == 0 && rep.maslov == 0 && num == Some(rep.cz_plus - rep.cz_minus) && rep.agreement,
                    format!("{tag}: numerical {num:?}, μCZ(A₊) − μCZ(A₋) = {} − {}", rep.cz_plus, rep.cz_minus),
                );
            }
            Err(e) => log.error(&tag, &e),
        }
    }
}

// 8 -------------------------------------------------------------------

/// Independent count: half of `χ(double) − #punctures of the double` plus
/// half of `#(+,+) arcs − #(−,−) arcs`.
fn doubling_count(s: &SurfaceSpec) -> i64 {
    let b = s.boundary.len() as i64;
    let chi_double = if b == 0 { 2 * s.chi() } else { 2 - 2 * (2 * s.genus as i64 + b - 1) };
    let on_boundary: i64 = s.boundary.iter().map(|c| c.len() as i64).sum();
    let doubled = 2 * s.interior_count() as i64 + on_boundary;
    let arc_term: i64 = s
        .boundary
        .iter()
        .flat_map(|c| arcs(c))
        .map(|a| match a {
            (Sign::Plus, Sign::Plus) => 1,
            (Sign::Minus, Sign::Minus) => -1,
            _ => 0,
        })
        .sum();
    (chi_double - doubled + arc_term) / 2
}

fn sign_patterns(max_len: usize) -> Vec<Vec<Sign>> {
    let mut out = vec![vec![]];
    for len in 1..=max_len {
        for bits in 0..(1u32 << len) {
            out.push((0..len).map(|i| if bits >> i & 1 == 1 { Sign::Minus } else { Sign::Plus }).collect());
        }
    }
    out
}

fn surface_sweep() -> Vec<SurfaceSpec> {
    let pats = sign_patterns(4);
    let mut out = Vec::new();
    for genus in 0..=2 {
        for (plus, minus) in [(0, 0), (1, 0), (0, 1), (2, 1)] {
            let interior = InteriorPunctures { plus, minus };
            out.push(SurfaceSpec { genus, boundary: vec![], interior });
            for a in &pats {
                out.push(SurfaceSpec { genus, boundary: vec![a.clone()], interior });
                for b in &pats {
                    out.push(SurfaceSpec { genus, boundary: vec![a.clone(), b.clone()], interior });
                }
            }
            for a in &pats[..7] {
                for b in &pats[..7] {
                    for c in &pats {
                        out.push(SurfaceSpec { genus, boundary: vec![a.clone(), b.clone(), c.clone()], interior });
                    }
                }
            }
        }
    }
    out
}

fn euler(log: &mut Log) {
    use Sign::{Minus as M, Plus as P};
    for (signs, want) in [(vec![P, M, M], -1), (vec![P, P, M, M], -1), (vec![P, P, M], 0)] {
        let x = euler_characteristic(&SurfaceSpec::disk(&signs));
        log.check(x == want, format!("disk {signs:?}: X = {x}, want {want}"));
    }
    let all = surface_sweep();
    let mut bad = Vec::new();
    for s in &all {
        let x = euler_characteristic(s);
        let (a, b) = canonical_zero_sets(s);
        if x != doubling_count(s) || count_zero_set(&a) != x || count_zero_set(&b) != x {
            bad.push(s.clone());
        }
    }
    log.check(bad.is_empty(), format!("{} surfaces: closed form = doubling count = both zero-set counts ({} mismatches)", all.len(), bad.len()));
    let mut closed_bad = 0;
    let mut closed = 0;
    for g in 0..=3 {
        for k in 0..=4 {
            for plus in 0..=k {
                closed += 1;
                if euler_characteristic(&SurfaceSpec::closed(g, plus, k - plus)) != 2 - 2 * g as i64 - k as i64 {
                    closed_bad += 1;
                }
            }
        }
    }
    log.check(closed_bad == 0, format!("{closed} closed surfaces: X = 2 − 2g − k ({closed_bad} mismatches)"));
}

// 9 -------------------------------------------------------------------

/// Five zero configurations with pairwise separation ≥ 4.
pub fn deformation_configs() -> Vec<(Vec<Zero>, ModelDomain)> {
    use ZeroType::*;
    vec![
        (vec![Zero::new(0.0, 0.0, InteriorPlus)], ModelDomain::Plane),
        (vec![Zero::new(-2.5, 0.0, InteriorPlus), Zero::new(2.5, 0.0, InteriorMinus)], ModelDomain::Plane),
        (vec![Zero::new(-3.0, 0.0, PlusPlus), Zero::new(3.0, 0.0, MinusMinus)], ModelDomain::HalfPlane),
        (
            vec![Zero::new(-4.0, 0.0, PlusMinus), Zero::new(4.0, 0.0, MinusPlus), Zero::new(0.0, 2.5, InteriorPlus)],
            ModelDomain::HalfPlane,
        ),
        (vec![Zero::new(-2.5, 0.0, InteriorPlus), Zero::new(2.5, 0.0, InteriorPlus)], ModelDomain::Plane),
    ]
}

const SIGMAS: [f64; 4] = [1.0, 4.0, 16.0, 64.0];

fn deformation(log: &mut Log) {
    let policy = RankPolicy::default();
    let configs = deformation_configs();
    let jobs: Vec<(usize, f64)> = (0..configs.len()).flat_map(|c| SIGMAS.iter().map(move |&s| (c, s))).collect();
    let points: Vec<_> = jobs
        .par_iter()
        .map(|&(c, sigma)| concentration_point(&configs[c].0, configs[c].1, sigma, &policy))
        .collect();
    let mut fractions: Vec<Vec<Option<f64>>> = vec![Vec::new(); configs.len()];
    for ((c, sigma), p) in jobs.iter().zip(points) {
        let want = total_count(&configs[*c].0);
        let tag = format!("config {c} σ={sigma}");
        match p {
            Ok((d, frac)) => {
                log.check(
                    d.index == want,
                    format!("{tag}: ker {} − coker {} = {}, count sum {want}, gap ratio {:.3e}", d.kernel, d.cokernel, d.index, d.gap_ratio),
                );
                fractions[*c].push(frac);
            }
            Err(e) => {
                log.error(&tag, &e);
                fractions[*c].push(None);
            }
        }
    }
    for (c, fr) in fractions.iter().enumerate() {
        let tag = format!("config {c} concentration");
        if fr.iter().all(|f| f.is_none()) {
            log.lines.push(format!("[--] {tag}: no kernel at any σ"));
            continue;
        }
        // a kernel that appears only from some σ on is judged from there
        let seen: Vec<f64> = fr.iter().skip_while(|f| f.is_none()).map(|f| f.unwrap_or(f64::NAN)).collect();
        let monotone = seen.windows(2).all(|w| w[1] >= w[0] - 0.02);
        let last = *seen.last().unwrap();
        log.check(last >= 0.9 && monotone, format!("{tag}: fractions {fr:.4?} (σ = 1, 4, 16, 64)"));
    }
}

// 10 ------------------------------------------------------------------

fn inequalities(log: &mut Log, seed: u64) {
    local_bochner(log, seed);
    global_bochner(log, seed);
    asymptotic_solve(log, seed);
    translation_invariant_solve(log, seed);
    decay(log);
}

fn local_bochner(log: &mut Log, seed: u64) {
    let mut r = rng(seed + 10_000);
    let mut worst = f64::INFINITY;
    let mut fails = 0;
    for k in 0..100 {
        let kind = ZeroType::ALL[k % 6];
        let (s, t) = match kind.domain() {
            ModelDomain::Plane => ((-6.0, 6.0), (-6.0, 6.0)),
            ModelDomain::HalfPlane => ((-6.0, 6.0), (0.0, 6.0)),
        };
        let v = random_test_section(&mut r, kind.domain(), s, t, 121);
        match bochner_residual(kind, &v) {
            Ok(sl) => {
                let rel = sl.slack / sl.rhs;
                worst = worst.min(rel);
                fails += (sl.slack < -0.05 * sl.rhs) as usize;
            }
            Err(e) => return log.error("local Bochner", &e),
        }
    }
    log.check(fails == 0, format!("local Bochner on 100 sections: worst slack/RHS {worst:.4} (floor −0.05)"));
}

fn global_bochner(log: &mut Log, seed: u64) {
    let zeros = [Zero::new(-2.5, 0.0, ZeroType::InteriorPlus), Zero::new(2.5, 0.0, ZeroType::InteriorMinus)];
    let run = || -> Result<(f64, f64, usize)> {
        let alpha = deformation_alpha(&zeros, ModelDomain::Plane)?;
        let (s, t) = ((-7.0, 7.0), (-6.0, 6.0));
        let sigmas = [4.0, 16.0, 64.0];
        let mut r = rng(seed + 10_100);
        let calib: Vec<Sampled2D> = (0..10).map(|_| random_test_section(&mut r, ModelDomain::Plane, s, t, 161)).collect();
        let c_hat = calibrate_global_constant(&alpha, ModelDomain::Plane, &sigmas, &calib)?;
        let mut r = rng(seed + 10_200);
        let tests: Vec<Sampled2D> = (0..100).map(|_| random_test_section(&mut r, ModelDomain::Plane, s, t, 161)).collect();
        let rels = tests
            .par_iter()
            .map(|xi| {
                sigmas
                    .iter()
                    .map(|&sigma| global_bochner_terms(&alpha, ModelDomain::Plane, sigma, xi).map(|g| g.slack(c_hat)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut worst = f64::INFINITY;
        let mut fails = 0;
        for sl in rels.iter().flatten() {
            worst = worst.min(sl.slack / sl.rhs);
            fails += (sl.slack < -0.05 * sl.rhs) as usize;
        }
        Ok((c_hat, worst, fails))
    };
    match run() {
        Ok((c, worst, fails)) => {
            log.check(fails == 0, format!("global Bochner on 100 sections × 3 σ: Ĉ = {c:.4}, worst slack/RHS {worst:.4} (floor −0.05)"))
        }
        Err(e) => log.error("global Bochner", &e),
    }
}

/// Smooth right-hand side: a few low cosine/sine modes in t.
fn smooth_eta(dim: usize, nt: usize, r: &mut impl Rng) -> Vec<DVector<f64>> {
    let modes: Vec<(f64, DVector<f64>, DVector<f64>)> = (0..4)
        .map(|k| {
            let c = DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0));
            let s = DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0));
            (k as f64, c, s)
        })
        .collect();
    (0..nt)
        .map(|j| {
            let t = j as f64 / (nt - 1) as f64;
            modes.iter().fold(DVector::zeros(dim), |acc, (k, c, s)| acc + c * (std::f64::consts::PI * k * t).cos() + s * (std::f64::consts::PI * k * t).sin())
        })
        .collect()
}

fn asymptotic_solve(log: &mut Log, seed: u64) {
    let nt = 257;
    let mut r = rng(seed + 10_300);
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let n = rank_of(i);
        let a = match random_operator(n, DomainKind::Strip, 32, &mut r) {
            Ok(a) => a,
            Err(e) => return log.error("solve_asymptotic", &e),
        };
        let eta = smooth_eta(2 * n, nt, &mut r);
        match solve_asymptotic(&a, &eta) {
            Ok(xi) => {
                let back = apply_asymptotic(&a, &xi);
                let res: f64 = back.iter().zip(&eta).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt();
                let scale: f64 = eta.iter().map(|y| y.norm_squared()).sum::<f64>().sqrt();
                worst = worst.max(res / scale);
            }
            Err(e) => return log.error("solve_asymptotic", &e),
        }
    }
    log.check(worst <= 1e-6, format!("solve_asymptotic on 20 random (A, η), Nt = {nt}: worst relative residual {worst:.3e} (limit 1e-6)"));
}

fn translation_invariant_solve(log: &mut Log, seed: u64) {
    let nt = 32;
    let run = || -> Result<f64> {
        let a = random_operator(1, DomainKind::Strip, nt, &mut rng(seed + 10_400))?;
        let grid = SGrid::symmetric(5.0, 128);
        let eta = smooth_strip_rhs(&a, nt, &grid, seed + 10_401)?;
        let u = solve_translation_invariant(&a, nt, &grid, &eta)?;
        integrated_residual(&a, nt, &grid, &u, &eta)
    };
    match run() {
        Ok(rel) => log.check(rel <= 1e-5, format!("translation-invariant solve: relative residual {rel:.3e} (limit 1e-5)")),
        Err(e) => log.error("translation-invariant solve", &e),
    }
}

fn decay(log: &mut Log) {
    let nt = 64;
    let theta = crate::asymptotic::make_operator(
        1,
        DomainKind::Strip,
        crate::asymptotic::Coefficient::Constant(nalgebra::DMatrix::identity(2, 2)),
    );
    let ops = match theta {
        Ok(t) => vec![("S = Id", t), ("reference", AsymptoticOperator::reference(1, DomainKind::Strip, 1.0))],
        Err(e) => return log.error("decay", &e),
    };
    for (name, a) in ops {
        let run = || -> Result<(f64, f64, f64, f64)> {
            let spec = spectrum(&a, nt)?;
            let (neg, pos) = spec.gap_edges();
            let grid = SGrid::symmetric(12.0, 16);
            let v: DVector<f64> = spec.eigenvectors.column_sum();
            let eta: Vec<DVector<f64>> = (0..grid.nodes()).map(|j| &v * (1.0 - grid.s(j).abs()).max(0.0)).collect();
            let u = solve_translation_invariant(&a, nt, &grid, &eta)?;
            let (rp, rm) = decay_rates(&u, &grid, (4.0, 9.0), (-9.0, -4.0))?;
            Ok((rp, neg, rm, pos))
        };
        match run() {
            Ok((rp, neg, rm, pos)) => log.check(
                (rp - neg).abs() <= 0.05 * neg.abs() && (rm - pos).abs() <= 0.05 * pos.abs(),
                format!("decay ({name}): rate at +∞ {rp:.4} vs λ⁻ {neg:.4}, at −∞ {rm:.4} vs λ⁺ {pos:.4}"),
            ),
            Err(e) => log.error(&format!("decay ({name})"), &e),
        }
    }
}
