use super::*;
use crate::random::rng;

fn policy() -> RankPolicy {
    RankPolicy::default()
}

#[test]
fn zero_type_table_and_duality() {
    let counts: Vec<i64> = ZeroType::ALL.iter().map(|z| z.count()).collect();
    assert_eq!(counts, vec![1, -1, 1, 0, 0, -1]);
    for z in ZeroType::ALL {
        assert_eq!(z.dual().dual(), z);
        assert_eq!(ZeroType::parse(z.tag()).unwrap(), z);
        let w = C64::new(0.3, 0.7);
        // the dual local form is minus the conjugate of the original
        assert!((z.dual().local_alpha(w) + z.local_alpha(w).conj()).norm() < 1e-15);
    }
}

#[test]
fn gaussian_element_requires_nonzero_count() {
    let like = Sampled2D::from_fn((-1.0, 1.0), (-1.0, 1.0), 9, 9, |_| C64::new(0.0, 0.0));
    assert_eq!(gaussian_element(ZeroType::PlusMinus, 1.0, &like), Err(Error::NoElement));
    let g = gaussian_element(ZeroType::InteriorPlus, 1.0, &like).unwrap();
    assert!((g.norm() - 1.0).abs() < 1e-12);
    assert!(g.values.iter().all(|v| v.re == 0.0));
}

#[test]
fn coarse_grids_are_rejected() {
    assert!(matches!(local_model(ZeroType::PlusPlus, 16.0, 6.0, 48), Err(Error::GridTooCoarse { .. })));
}

#[test]
fn deformation_validation() {
    let close = [Zero::new(0.0, 0.0, ZeroType::InteriorPlus), Zero::new(3.0, 0.0, ZeroType::InteriorMinus)];
    assert!(matches!(deformation_alpha(&close, ModelDomain::Plane), Err(Error::ZerosTooClose { .. })));
    let low = [Zero::new(0.0, 1.5, ZeroType::InteriorPlus)];
    assert!(matches!(deformation_alpha(&low, ModelDomain::HalfPlane), Err(Error::ZerosTooClose { .. })));
    let same = [Zero::new(-3.0, 0.0, ZeroType::PlusPlus), Zero::new(3.0, 0.0, ZeroType::PlusPlus)];
    assert!(matches!(deformation_alpha(&same, ModelDomain::HalfPlane), Err(Error::IncompatibleBoundaryZeros(_))));
}

#[test]
fn deformation_alpha_has_exact_local_forms() {
    let zeros = [
        Zero::new(-4.0, 0.0, ZeroType::PlusMinus),
        Zero::new(4.0, 0.0, ZeroType::MinusPlus),
        Zero::new(0.0, 2.5, ZeroType::InteriorPlus),
    ];
    let a = deformation_alpha(&zeros, ModelDomain::HalfPlane).unwrap();
    // real on the real axis
    for k in 0..50 {
        let x = -6.0 + 0.25 * k as f64;
        assert!(a(C64::new(x, 0.0)).im.abs() < 1e-14);
    }
    // boundary local forms agree to first order
    for z in &zeros[..2] {
        let d = C64::new(2e-3, 1e-3);
        assert!((a(z.position + d) - z.kind.local_alpha(d)).norm() < d.norm_sqr());
    }
    // interior: unit slope up to a phase, exactly within radius 1/2
    let d = C64::new(0.1, -0.2);
    assert!((a(zeros[2].position + d).norm() - d.norm()).abs() < 1e-14);
    // unit modulus far from the zeros
    assert!((a(C64::new(0.0, 6.0)).norm() - 1.0).abs() < 1e-14);
}

#[test]
fn rescaling_maps_are_adjoint() {
    let sigma = 16.0;
    let zeta = C64::new(0.5, 0.0);
    let v = Sampled2D::from_fn((-6.0, 6.0), (-6.0, 6.0), 241, 241, |z| C64::new(1.0, 0.5) * (-0.5 * z.norm_sqr()).exp() * (z + 1.0));
    let u = Sampled2D::from_fn((-1.0, 2.0), (-1.5, 1.5), 241, 241, |z| (-(z - 0.7).norm_sqr()).exp() * C64::new(z.im, 1.0));
    let phi_v = rescale_in(&v, sigma, zeta, &u);
    let pi_u = rescale_out(&u, sigma, zeta, &v);
    let a = phi_v.inner(&u);
    let b = v.inner(&pi_u);
    assert!((a - b).abs() <= 1e-3 * a.abs().max(b.abs()), "{a} vs {b}");
    assert!(phi_v.norm() <= v.norm() * (1.0 + 1e-3));
}

#[test]
fn rescaling_preserves_norm_of_inner_supported_functions() {
    let sigma = 16.0;
    // supported well inside |w| ≤ σ^{1/2}/2 = 2
    let v = Sampled2D::from_fn((-4.0, 4.0), (-4.0, 4.0), 321, 321, |w| (-3.0 * w.norm_sqr()).exp() * C64::new(1.0, -1.0));
    let like = Sampled2D::from_fn((-1.0, 1.0), (-1.0, 1.0), 321, 321, |_| C64::new(0.0, 0.0));
    let phi = rescale_in(&v, sigma, C64::new(0.0, 0.0), &like);
    assert!((phi.norm() / v.norm() - 1.0).abs() < 1e-3);
    // Π_σΦ_σ v = ρ(·/√σ)² v
    let back = rescale_out(&phi, sigma, C64::new(0.0, 0.0), &v);
    let want = v.map(|w, x| x * bump(w.norm() / 4.0).powi(2));
    let mut diff = back.clone();
    for (a, b) in diff.values.iter_mut().zip(&want.values) {
        *a -= b;
    }
    assert!(diff.norm() <= 1e-3 * v.norm());
}

#[test]
fn local_bochner_holds_on_random_sections() {
    let mut r = rng(2024);
    for k in 0..24 {
        let kind = ZeroType::ALL[k % 6];
        let (s, t) = match kind.domain() {
            ModelDomain::Plane => ((-6.0, 6.0), (-6.0, 6.0)),
            ModelDomain::HalfPlane => ((-6.0, 6.0), (0.0, 6.0)),
        };
        let v = random_test_section(&mut r, kind.domain(), s, t, 121);
        let sl = bochner_residual(kind, &v).unwrap();
        assert!(sl.slack >= -0.05 * sl.rhs, "{kind:?}: {sl:?}");
    }
}

#[test]
fn bochner_rejects_complex_boundary_values() {
    let v = Sampled2D::from_fn((-3.0, 3.0), (0.0, 3.0), 31, 31, |z| C64::new(0.0, 1.0) * (-z.norm_sqr()).exp());
    assert!(matches!(bochner_residual(ZeroType::PlusPlus, &v), Err(Error::BoundaryConditionViolated(_))));
    let zero = v.map(|_, _| C64::new(0.0, 0.0));
    assert_eq!(bochner_residual(ZeroType::PlusPlus, &zero).unwrap().slack, 0.0);
}

#[test]
fn gaussian_overlaps_of_nonzero_count_models() {
    for z in [ZeroType::InteriorPlus, ZeroType::InteriorMinus, ZeroType::PlusPlus, ZeroType::MinusMinus] {
        let m = ModelOperator::new(z, 1.0, 6.0, 96).unwrap();
        let ov = kernel_overlap(&m, &policy()).unwrap();
        assert!(ov >= 0.999, "{}: overlap {ov}", z.tag());
    }
    let m = ModelOperator::new(ZeroType::PlusMinus, 1.0, 6.0, 96).unwrap();
    assert_eq!(kernel_overlap(&m, &policy()), Err(Error::NoElement));
}

#[test]
fn dual_model_swaps_kernel_and_cokernel() {
    let m = ModelOperator::new(ZeroType::PlusPlus, 1.0, 5.0, 64).unwrap();
    let d = dual_model(&m);
    assert_eq!(dual_model(&d), m);
    let a = m.discretize().unwrap().dims(&policy()).unwrap();
    let b = d.discretize().unwrap().dims(&policy()).unwrap();
    assert_eq!((a.kernel, a.cokernel), (b.cokernel, b.kernel));
    // the transposed matrix of the dual has the kernel of the original
    let bt = d.discretize().unwrap().op.adjoint().rank_analysis(&policy()).unwrap();
    assert_eq!(bt.kernel.zero_count, a.kernel);
}

#[test]
fn opposite_sign_plane_model_is_gauge_equivalent() {
    // ∂̄ + zC on ℂ is conjugate to ∂̄ − zC by u ↦ iu
    let alpha: AlphaFn = Arc::new(|z| z);
    let bx = DomainBox { domain: ModelDomain::Plane, s: (-6.0, 6.0), t: (-6.0, 6.0) };
    let d = discretize_planar(alpha, 1.0, &bx, 80, 80).unwrap().dims(&policy()).unwrap();
    assert_eq!((d.kernel, d.cokernel), (1, 0));
}

fn sweep_configs() -> Vec<(Vec<Zero>, ModelDomain)> {
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

#[test]
fn deformation_index_is_the_count_sum() {
    // rank-decided, so this is not just cols − rows; larger σ run in the acceptance suite
    for (zeros, domain) in sweep_configs() {
        let bx = DomainBox::around(&zeros, domain, 2.5);
        for sigma in [1.0, 4.0] {
            let op = build_deformation(&zeros, sigma, &bx, None).unwrap();
            let d = op.dims(&policy()).unwrap();
            assert_eq!(d.index, total_count(&zeros), "{zeros:?} at σ={sigma}");
            assert_eq!(op.index(), d.index);
        }
    }
}

#[test]
fn deformation_dims_small_sigma() {
    let (zeros, domain) = &sweep_configs()[0];
    let bx = DomainBox::around(zeros, *domain, 2.5);
    for sigma in [1.0, 4.0] {
        let d = build_deformation(zeros, sigma, &bx, None).unwrap().dims(&policy()).unwrap();
        assert_eq!((d.kernel, d.cokernel), (1, 0), "σ={sigma}");
    }
}

#[test]
fn opposite_boundary_zeros_give_kernel_and_cokernel() {
    let (zeros, domain) = &sweep_configs()[2];
    let bx = DomainBox::around(zeros, *domain, 2.5);
    let d = build_deformation(zeros, 4.0, &bx, None).unwrap().dims(&policy()).unwrap();
    assert_eq!((d.kernel, d.cokernel, d.index), (1, 1, 0), "{d:?}");
}

#[test]
fn nowhere_vanishing_deformation_is_invertible() {
    let bx = DomainBox { domain: ModelDomain::Plane, s: (-3.0, 3.0), t: (-3.0, 3.0) };
    let op = build_deformation(&[], 4.0, &bx, None).unwrap();
    let d = op.dims(&policy()).unwrap();
    assert_eq!((d.index, d.kernel, d.cokernel), (0, 0, 0));
}

#[test]
fn kernel_concentrates_at_positive_zeros() {
    let zeros = [Zero::new(0.0, 0.0, ZeroType::InteriorPlus)];
    let prof = concentration_profile(&zeros, ModelDomain::Plane, &[1.0, 4.0, 16.0, 64.0], &policy()).unwrap();
    for w in prof.windows(2) {
        assert!(w[1].fraction >= w[0].fraction - 0.02, "{prof:?}");
    }
    assert!(prof[3].fraction >= 0.9, "{prof:?}");
    assert!(prof[0].fraction < prof[3].fraction);
    assert!(prof.iter().all(|p| p.kernel_dim == 1));
}

#[test]
fn concentration_needs_a_kernel() {
    let zeros = [Zero::new(0.0, 0.0, ZeroType::InteriorMinus)];
    assert_eq!(concentration_profile(&zeros, ModelDomain::Plane, &[4.0], &policy()), Err(Error::EmptyKernel));
}

#[test]
fn global_bochner_with_calibrated_constant() {
    let zeros = [Zero::new(-2.5, 0.0, ZeroType::InteriorPlus), Zero::new(2.5, 0.0, ZeroType::InteriorMinus)];
    let alpha = deformation_alpha(&zeros, ModelDomain::Plane).unwrap();
    let (s, t) = ((-7.0, 7.0), (-6.0, 6.0));
    let sigmas = [4.0, 16.0, 64.0];
    let mut r = rng(7);
    let calib: Vec<Sampled2D> = (0..10).map(|_| random_test_section(&mut r, ModelDomain::Plane, s, t, 161)).collect();
    let c_hat = calibrate_global_constant(&alpha, ModelDomain::Plane, &sigmas, &calib).unwrap();
    let mut r = rng(8);
    for _ in 0..50 {
        let xi = random_test_section(&mut r, ModelDomain::Plane, s, t, 161);
        for &sigma in &sigmas {
            let sl = global_bochner_terms(&alpha, ModelDomain::Plane, sigma, &xi).unwrap().slack(c_hat);
            assert!(sl.slack >= -0.05 * sl.rhs, "σ={sigma} Ĉ={c_hat}: {sl:?}");
        }
    }
}

