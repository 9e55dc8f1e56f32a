use super::*;
use crate::asymptotic::{make_operator, Coefficient};
use crate::cz_flow::CzParams;
use crate::numerics::kernel_dims;
use crate::random::rng;
use std::f64::consts::PI;

fn theta(t: f64) -> AsymptoticOperator {
    make_operator(1, DomainKind::Strip, Coefficient::Constant(DMatrix::identity(2, 2) * t)).unwrap()
}

fn dense_dims(op: &DiscretizedOperator) -> (usize, usize) {
    let (k, c) = kernel_dims(&op.to_dense(), &RankPolicy::default()).unwrap();
    (k.zero_count, c.zero_count)
}

#[test]
fn structured_rank_matches_dense_svd() {
    let policy = RankPolicy { value_tol: 1e-11, ..Default::default() };
    for (a, b) in [(0.5, 3.6), (3.6, 0.5), (0.5, 7.0), (1.0, 1.5)] {
        let p = CRProblem::interpolation(&theta(a), &theta(b), Profile::Smoothstep, 2.0).unwrap();
        let op = discretize_cr(&p, 4, 8).unwrap();
        assert!(op.left.segment_cells > 0 && op.right.segment_cells > 0);
        let ra = op.rank_analysis(&policy).unwrap();
        let (k, c) = dense_dims(&op);
        assert_eq!((ra.kernel.zero_count, ra.cokernel.zero_count), (k, c), "θ {a} → {b}");
        let rt = op.adjoint().rank_analysis(&policy).unwrap();
        assert_eq!((rt.kernel.zero_count, rt.cokernel.zero_count), (c, k));
        // smallest singular value agrees with the dense one
        let sv = op.to_dense().svd(false, false).singular_values;
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if k == 0 {
            let got = ra.kernel.singular_values[0];
            assert!((got - smin).abs() < 1e-8 * smin.max(1.0), "{got} vs {smin}");
        }
    }
}

#[test]
fn segment_elimination_preserves_kernel_vectors() {
    let p = CRProblem::interpolation(&theta(0.5), &theta(3.6), Profile::Smoothstep, 3.0).unwrap();
    let op = discretize_cr(&p, 4, 8).unwrap();
    let (ra, vecs) = op.rank_analysis_with_vectors(&RankPolicy::default(), 4).unwrap();
    assert_eq!(ra.kernel.zero_count, 1);
    let v = &vecs[0];
    let r = op.apply(v).norm() / v.norm();
    assert!(r < 1e-9, "residual {r}");
}

#[test]
fn crossing_pi_changes_index_by_one() {
    let params = IndexParams { ns: 8, nt: 16, ..Default::default() };
    let up = fredholm_index(&CRProblem::interpolation(&theta(0.5), &theta(PI + 0.5), Profile::Smoothstep, 4.0).unwrap(), &params).unwrap();
    let down = fredholm_index(&CRProblem::interpolation(&theta(PI + 0.5), &theta(0.5), Profile::Smoothstep, 4.0).unwrap(), &params).unwrap();
    assert_eq!(up.index, -down.index);
    assert_eq!(up.index.abs(), 1);
    assert_eq!(up.kernel + down.kernel, 1);
}

#[test]
fn reference_operator_is_invertible() {
    for domain in [DomainKind::Strip, DomainKind::Circle] {
        let a = AsymptoticOperator::reference(2, domain, 1.0);
        let p = CRProblem::translation_invariant(&a, 4.0);
        let c = fredholm_index(&p, &IndexParams { ns: 8, nt: 16, ..Default::default() }).unwrap();
        assert_eq!((c.kernel, c.cokernel, c.index), (0, 0, 0));
        assert_eq!(c.grids.len(), 2);
    }
}

#[test]
fn adjoint_twice_is_identity() {
    let p = CRProblem::interpolation(&theta(0.5), &theta(2.0), Profile::Quintic, 2.0).unwrap();
    let op = discretize_cr(&p, 4, 8).unwrap();
    let back = op.adjoint().adjoint();
    assert_eq!(op.to_dense(), back.to_dense());
    assert_eq!(op.adjoint().to_dense(), op.to_dense().transpose());
}

#[test]
fn unsettled_and_degenerate_problems_are_rejected() {
    let f: FieldFn = Arc::new(|s, _t| DMatrix::identity(2, 2) * (0.5 + 0.1 * s));
    let p = CRProblem {
        n: 1,
        domain: DomainKind::Strip,
        minus: theta(0.5),
        plus: theta(0.5),
        field: Field::Procedural { f, core: (0.0, 1.0), settled: false },
        antilinear: None,
        l: 2.0,
    };
    assert!(matches!(discretize_cr(&p, 4, 8), Err(Error::CoefficientNotSettled { .. })));
    let q = CRProblem::translation_invariant(&theta(0.0), 2.0);
    assert!(matches!(discretize_cr(&q, 4, 8), Err(Error::EndDegenerate { .. })));
}

#[test]
fn matvec_and_dense_agree() {
    let p = CRProblem::interpolation(&theta(0.3), &theta(2.0), Profile::Smoothstep, 1.0).unwrap();
    let op = discretize_cr(&p, 4, 8).unwrap();
    let d = op.to_dense();
    let x = DVector::from_fn(d.ncols(), |i, _| (i as f64 * 0.37).sin());
    assert!((op.apply(&x) - &d * &x).norm() < 1e-10);
    let y = DVector::from_fn(d.nrows(), |i, _| (i as f64 * 0.91).cos());
    assert!((op.apply_transpose(&y) - d.transpose() * &y).norm() < 1e-10);
}

#[test]
fn profiles_are_admissible() {
    for p in [Profile::Smoothstep, Profile::Quintic] {
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(1.0), 1.0);
        assert_eq!(p.eval(2.0), 1.0);
        let mut prev = 0.0;
        for k in 0..=100 {
            let v = p.eval(k as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }
}


fn params() -> IndexParams {
    IndexParams { ns: 8, nt: 32, ..Default::default() }
}

fn quick_cz() -> CzParams {
    CzParams { nt: 32, ns_strip: 8, l: 4.0, ..Default::default() }
}

/// Decaying solution of `w′ − λw = hat(s)`, `hat = max(0, 1 − |s|)`, by
/// composite Simpson quadrature of the convolution integral.
fn hat_response(lam: f64, s: f64) -> f64 {
    let hat = |r: f64| (1.0 - r.abs()).max(0.0);
    let simpson = |a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = 2000;
        let h = (b - a) / n as f64;
        let f = |r: f64| (lam * (s - r)).exp() * hat(r);
        let mut acc = f(a) + f(b);
        for k in 1..n {
            acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    // split at the kink of the hat
    let pieces = [(-1.0, 0.0), (0.0, 1.0)];
    if lam < 0.0 {
        pieces.iter().map(|&(a, b)| simpson(a, f64::min(b, s))).sum()
    } else {
        -pieces.iter().map(|&(a, b)| simpson(f64::max(a, s), b)).sum::<f64>()
    }
}

#[test]
fn translation_invariant_solve_of_single_modes() {
    let a = AsymptoticOperator::reference(1, DomainKind::Strip, 1.0);
    let nt = 32;
    let spec = crate::asymptotic::spectrum(&a, nt).unwrap();
    let grid = SGrid::symmetric(6.0, 64);
    let zero = vec![DVector::zeros(spec.eigenvalues.len()); grid.nodes()];
    let u0 = solve_translation_invariant(&a, nt, &grid, &zero).unwrap();
    assert!(u0.iter().all(|v| v.amax() == 0.0));
    let mid = spec.eigenvalues.len() / 2;
    for k in [mid - 2, mid - 1, mid, mid + 1] {
        let lam = spec.eigenvalues[k];
        let v = spec.eigenvectors.column(k).into_owned();
        let eta: Vec<DVector<f64>> = (0..grid.nodes()).map(|j| &v * (1.0 - grid.s(j).abs()).max(0.0)).collect();
        let u = solve_translation_invariant(&a, nt, &grid, &eta).unwrap();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..grid.nodes() {
            let want = hat_response(lam, grid.s(j));
            err = err.max((&u[j] - &v * want).amax());
            scale = scale.max(want.abs());
        }
        assert!(err <= 1e-8 * scale, "λ={lam}: {err:.3e} vs {scale:.3e}");
    }
}

fn smooth_rhs(a: &AsymptoticOperator, nt: usize, grid: &SGrid, seed: u64) -> Vec<DVector<f64>> {
    use rand::Rng;
    let spec = crate::asymptotic::spectrum(a, nt).unwrap();
    let mut r = rng(seed);
    let mid = spec.eigenvalues.len() / 2;
    // low modes with smooth compactly supported profiles in s
    let terms: Vec<(usize, f64, f64)> = (0..5)
        .map(|_| (mid - 3 + r.random_range(0..6), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    (0..grid.nodes())
        .map(|j| {
            let s = grid.s(j);
            let mut acc = DVector::zeros(spec.eigenvalues.len());
            for &(k, c, shift) in &terms {
                let x = (s - shift) / 1.5;
                let bump = if x.abs() < 1.0 { (1.0 - x * x).powi(4) } else { 0.0 };
                acc += spec.eigenvectors.column(k) * (c * bump);
            }
            acc
        })
        .collect()
}

#[test]
fn translation_invariant_solve_residual_and_least_squares() {
    let nt = 32;
    let a = crate::random::random_operator(1, DomainKind::Strip, nt, &mut rng(5)).unwrap();
    let l = 5.0;
    let grid = SGrid::symmetric(l, 128);
    let eta = smooth_rhs(&a, nt, &grid, 11);
    let u = solve_translation_invariant(&a, nt, &grid, &eta).unwrap();
    // Simpson form of u(s+2h) − u(s) = ∫ (A u + η) over two cells
    let am = crate::asymptotic::discretize_asymptotic(&a, nt).unwrap();
    let h = grid.h;
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for j in 0..grid.cells - 1 {
        let int_u = (&u[j] + &u[j + 1] * 4.0 + &u[j + 2]) * (h / 3.0);
        let int_eta = (&eta[j] + &eta[j + 1] * 2.0 + &eta[j + 2]) * (h / 2.0);
        let r = &u[j + 2] - &u[j] - &am * int_u - &int_eta;
        res = res.max(r.norm());
        scale = scale.max(int_eta.norm());
    }
    assert!(res <= 1e-5 * scale, "residual {res:.3e} vs {scale:.3e}");

    // the box-scheme least-squares solution of the discretized operator
    let coeff = a.clone();
    let f: FieldFn = Arc::new(move |_s, t| coeff.coefficient_at(t));
    let p = CRProblem { n: 1, domain: DomainKind::Strip, minus: a.clone(), plus: a.clone(), field: Field::Procedural { f, core: (0.0, 0.0), settled: false }, antilinear: None, l };
    let op = discretize_cr(&p, 128, nt).unwrap();
    assert_eq!(op.cells, grid.cells);
    let rhs: Vec<DVector<f64>> = (0..grid.cells).map(|j| (&eta[j] + &eta[j + 1]) * 0.5).collect();
    let x = least_squares_cells(&op, &rhs, 1e-12).unwrap();
    let m = op.m();
    let (mut diff, mut norm) = (0.0f64, 0.0f64);
    for j in 0..grid.nodes() {
        let xj = x.rows(j * m, m);
        diff = diff.max((&u[j] - xj).amax());
        norm = norm.max(u[j].amax());
    }
    assert!(diff <= 1e-4 * norm, "least squares differs by {diff:.3e} (scale {norm:.3e})");
}

#[test]
fn decay_rates_follow_the_spectral_gap() {
    let nt = 64;
    for a in [theta(1.0), AsymptoticOperator::reference(1, DomainKind::Strip, 1.0)] {
        let spec = crate::asymptotic::spectrum(&a, nt).unwrap();
        let (neg, pos) = spec.gap_edges();
        let grid = SGrid::symmetric(12.0, 16);
        let v: DVector<f64> = spec.eigenvectors.column_sum();
        let eta: Vec<DVector<f64>> = (0..grid.nodes()).map(|j| &v * (1.0 - grid.s(j).abs()).max(0.0)).collect();
        let u = solve_translation_invariant(&a, nt, &grid, &eta).unwrap();
        let (rp, rm) = decay_rates(&u, &grid, (4.0, 9.0), (-9.0, -4.0)).unwrap();
        assert!((rp - neg).abs() <= 0.05 * neg.abs(), "rate {rp} vs λ⁻ {neg}");
        assert!((rm - pos).abs() <= 0.05 * pos.abs(), "rate {rm} vs λ⁺ {pos}");
        assert!(rp <= neg + 0.05 && rm >= pos - 0.05);
    }
}

#[test]
fn decay_fit_edge_cases() {
    let grid = SGrid::symmetric(4.0, 4);
    let zero = vec![DVector::zeros(4); grid.nodes()];
    assert_eq!(decay_rates(&zero, &grid, (1.0, 3.0), (-3.0, -1.0)), Err(Error::Underflow));
    assert!(matches!(decay_rates(&zero, &grid, (1.0, 1.2), (-3.0, -1.0)), Err(Error::WindowTooShort(_))));
    let a = theta(1.0);
    let m = crate::asymptotic::discretize_asymptotic(&a, 16).unwrap().nrows();
    let wide = vec![DVector::from_element(m, 1.0); grid.nodes()];
    assert!(matches!(solve_translation_invariant(&a, 16, &grid, &wide), Err(Error::SupportTooWide(_))));
}

#[test]
fn gluing_a_path_to_its_reverse() {
    let a = crate::random::random_operator_with_margin(1, DomainKind::Strip, 32, 0.5, &mut rng(3)).unwrap();
    // σ = 2 keeps the reference neck's slowest rate at 2; at σ = 1 the
    // kernel/cokernel pair across a ρ = 4 neck couples at ~e^{-12}
    let al = AsymptoticOperator::reference(1, DomainKind::Strip, 2.0);
    let cz = CRProblem::interpolation(&al, &a, Profile::Smoothstep, 4.0).unwrap();
    let zc = CRProblem::interpolation(&a, &al, Profile::Smoothstep, 4.0).unwrap();
    let ind_cz = fredholm_index(&cz, &params()).unwrap().index;
    let ind_zc = fredholm_index(&zc, &params()).unwrap().index;
    assert_eq!(ind_cz, -ind_zc);
    assert_eq!(ind_cz, crate::cz_flow::cz_index(&a, &quick_cz()).unwrap());
    assert_eq!(fredholm_index(&glue(&cz, &zc, 4.0).unwrap(), &params()).unwrap().index, 0);
    assert_eq!(fredholm_index(&glue(&zc, &cz, 4.0).unwrap(), &params()).unwrap().index, 0);
    let other = CRProblem::interpolation(&al, &theta(0.5), Profile::Smoothstep, 4.0).unwrap();
    assert!(glue(&cz, &other, 4.0).is_err());
}

#[test]
fn gluing_adds_indices() {
    let mut r = rng(77);
    for _ in 0..2 {
        let ops: Vec<AsymptoticOperator> = (0..3).map(|_| crate::random::random_operator_with_margin(1, DomainKind::Strip, 32, 0.5, &mut r).unwrap()).collect();
        let pm = CRProblem::interpolation(&ops[0], &ops[1], Profile::Smoothstep, 4.0).unwrap();
        let pp = CRProblem::interpolation(&ops[1], &ops[2], Profile::Smoothstep, 4.0).unwrap();
        let sum = fredholm_index(&pm, &params()).unwrap().index + fredholm_index(&pp, &params()).unwrap().index;
        assert_eq!(fredholm_index(&glue(&pm, &pp, 4.0).unwrap(), &params()).unwrap().index, sum);
    }
}

#[test]
fn direct_sum_adds_indices() {
    let up = CRProblem::interpolation(&theta(0.5), &theta(PI + 0.5), Profile::Smoothstep, 4.0).unwrap();
    let al = AsymptoticOperator::reference(1, DomainKind::Strip, 1.0);
    let down = CRProblem::interpolation(&theta(PI + 0.5), &al, Profile::Quintic, 4.0).unwrap();
    let a = fredholm_index(&up, &params()).unwrap().index;
    let b = fredholm_index(&down, &params()).unwrap().index;
    let both = fredholm_index(&CRProblem::direct_sum(&up, &down).unwrap(), &params()).unwrap().index;
    assert_eq!(both, a + b);
}

#[test]
fn index_is_difference_of_end_indices() {
    let mut r = rng(404);
    for domain in [DomainKind::Strip, DomainKind::Circle] {
        let am = crate::random::random_operator(1, domain, 32, &mut r).unwrap();
        let ap = crate::random::random_operator(1, domain, 32, &mut r).unwrap();
        let p = CRProblem::interpolation(&am, &ap, Profile::Smoothstep, 4.0).unwrap();
        let ind = fredholm_index(&p, &params()).unwrap().index;
        let cz = crate::cz_flow::cz_index(&ap, &quick_cz()).unwrap() - crate::cz_flow::cz_index(&am, &quick_cz()).unwrap();
        assert_eq!(ind, cz, "{domain:?}");
    }
}

#[test]
fn translation_invariant_operators_are_uniformly_injective() {
    let a = crate::random::random_operator(1, DomainKind::Circle, 32, &mut rng(9)).unwrap();
    let p = CRProblem::translation_invariant(&a, 2.0);
    let policy = RankPolicy::default();
    let mut smallest = vec![];
    for (ns, nt) in [(64, 32), (128, 64), (256, 128)] {
        let p = CRProblem { field: Field::Procedural { f: { let c = a.clone(); Arc::new(move |_s, t| c.coefficient_at(t)) }, core: (0.0, 0.0), settled: false }, ..p.clone() };
        let ra = discretize_cr(&p, ns / 4, nt).unwrap().rank_analysis(&policy).unwrap();
        assert_eq!(ra.kernel.zero_count + ra.cokernel.zero_count, 0);
        smallest.push(ra.kernel.singular_values[0]);
    }
    assert!(smallest[0] > 0.0);
    for w in smallest.windows(2) {
        assert!(w[1] >= 0.5 * w[0], "{smallest:?}");
    }
}

