use super::*;
use crate::qmath::{kron_vec, real_diag};
use crate::states::{antisymmetric_projector, basis_state, maximally_entangled, random_density, symmetric_projector};

fn bell_zero() -> Subspace {
    let bell = maximally_entangled(2).unwrap();
    let zero = basis_state(&[2], 0).unwrap();
    let v = kron_vec(bell.vector(), zero.vector());
    Subspace::new(CMat::from_column_slice(8, 1, v.as_slice()), vec![2, 2, 2]).unwrap()
}

fn werner_difference(d: usize) -> CMat {
    let sym = symmetric_projector(2, d).unwrap();
    let anti = antisymmetric_projector(d).unwrap();
    anti.projector() / c64(anti.dim() as f64, 0.0) - sym.projector() / c64(sym.dim() as f64, 0.0)
}

#[test]
fn box_only_is_positive_part() {
    let m = real_diag(&[0.7, -0.2, 0.4, -1.0]);
    let s = maximize_linear(&FeasibleSetSpec::full(&[2, 2]), &m, &SolverConfig::default()).unwrap();
    assert!((s.value - 1.1).abs() < 1e-12);
    assert!((s.maximizer.clone() - real_diag(&[1.0, 0.0, 1.0, 0.0])).norm() < 1e-12);
}

#[test]
fn zero_objective_returns_half_identity() {
    let spec = FeasibleSetSpec::ppt(&[2, 2], BipartitionMask::all_cuts(2));
    let s = maximize_linear(&spec, &CMat::zeros(4, 4), &SolverConfig::default()).unwrap();
    assert_eq!(s.value, 0.0);
    assert!((s.maximizer - identity(4) * c64(0.5, 0.0)).norm() == 0.0);
}

#[test]
fn qubit_werner_objective_respects_ppt_bound() {
    let anti = antisymmetric_projector(2).unwrap();
    let sym = symmetric_projector(2, 2).unwrap();
    let obj = anti.projector() - sym.projector() / c64(3.0, 0.0);
    let spec = FeasibleSetSpec::ppt(&[2, 2], BipartitionMask::all_cuts(2));
    let s = maximize_linear(&spec, &obj, &SolverConfig::default()).unwrap();
    let norm = 2.0 * s.value - obj.trace().re;
    assert!(norm <= 2.0 + 1e-9, "{norm}");
    assert!(spec.violation(&s.maximizer) == 0.0);
    let ub = s.upper_bound.unwrap();
    assert!(ub + 1e-9 >= s.value && ub - s.value < 1e-5, "value {} ub {}", s.value, ub);
}

#[test]
fn werner_ppt_half_norm_matches_known_value() {
    // reference value 2/(d+1), obtained with an interior-point SDP solver
    for d in 2..=3 {
        let delta = werner_difference(d);
        let spec = FeasibleSetSpec::ppt(&[d, d], BipartitionMask::all_cuts(2));
        let s = maximize_linear(&spec, &delta, &SolverConfig::default()).unwrap();
        let want = 2.0 / (d as f64 + 1.0);
        assert!((s.value - want).abs() < 1e-5, "d={d}: {} vs {want}", s.value);
        assert!(s.value <= 2.0 / d as f64 + 1e-9);
    }
}

#[test]
fn dropping_a_cut_never_decreases_the_optimum() {
    let dims = [2, 2, 2];
    let cfg = SolverConfig::default();
    for seed in 0..3 {
        let obj = random_density(&dims, 1, seed).unwrap().mat() - random_density(&dims, 2, seed + 50).unwrap().mat();
        let all = FeasibleSetSpec::ppt(&dims, BipartitionMask::all_cuts(3));
        let fewer = FeasibleSetSpec::ppt(&dims, BipartitionMask::all_cuts(3)[..2].to_vec());
        let a = maximize_linear(&all, &obj, &cfg).unwrap();
        let b = maximize_linear(&fewer, &obj, &cfg).unwrap();
        let full = maximize_linear(&FeasibleSetSpec::full(&dims), &obj, &cfg).unwrap();
        assert!(b.value >= a.value - 1e-6 && full.value >= b.value - 1e-6);
        assert!(b.upper_bound.unwrap() >= a.value - 1e-9);
    }
}

#[test]
fn spectral_gap_of_bell_times_zero() {
    let v = bell_zero();
    let spec = FeasibleSetSpec::ppt(&[2, 2, 2], BipartitionMask::all_cuts(3));
    let g = spectral_gap_program(&spec, &v, &SolverConfig::default()).unwrap();
    assert!((g.value - 2.0 / 3.0).abs() < 1e-4, "{}", g.value);
    assert!(universal_defect(v.projector(), &g.omega) < 1e-12);
    let full = spectral_gap_program(&FeasibleSetSpec::full(&[2, 2, 2]), &v, &SolverConfig::default()).unwrap();
    assert!((full.value - 1.0).abs() < 1e-5);
}

#[test]
fn visibility_is_one_for_full_class() {
    let v = crate::states::random_subspace(&[2, 2], 2, 4).unwrap();
    for eps in [0.3, 1.0] {
        let s = visibility_program(&FeasibleSetSpec::full(&[2, 2]), &v, eps, &SolverConfig::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-5, "eps {eps}: {}", s.value);
    }
}

#[test]
fn visibility_of_bell_times_zero_is_two_thirds() {
    let v = bell_zero();
    let spec = FeasibleSetSpec::ppt(&[2, 2, 2], BipartitionMask::all_cuts(3));
    for eps in [0.5, 1.0] {
        let s = visibility_program(&spec, &v, eps, &SolverConfig::default()).unwrap();
        assert!((s.value - 2.0 / 3.0).abs() < 1e-3, "eps {eps}: {}", s.value);
        assert!(crate::states::fidelity_to_subspace(&s.rho, &v).unwrap() > 1.0 - 1e-9);
        assert!(crate::states::fidelity_to_subspace(&s.sigma, &v).unwrap() <= 1.0 - eps + 1e-9);
    }
}

#[test]
fn orthogonal_program_on_bell_times_zero() {
    let v = bell_zero();
    let rho = v.uniform_state();
    let spec = FeasibleSetSpec::ppt(&[2, 2, 2], BipartitionMask::all_cuts(3));
    let s = orthogonal_program(&spec, &rho, &SolverConfig::default()).unwrap();
    assert!((s.value - 2.0 / 3.0).abs() < 1e-4, "{}", s.value);
    assert!(inner_re(rho.mat(), s.sigma.mat()).abs() < 1e-9);
}

#[test]
fn beta_dual_matches_direct_maximization() {
    // for a projector Omega = Pi the optimum is 1 - eps
    let v = crate::states::random_subspace(&[3], 1, 2).unwrap();
    let (b, _) = beta_eps(v.projector(), &v, 0.3);
    assert!((b - 0.7).abs() < 1e-9);
    // Omega with eigenvalue 1/3 off the subspace: (1 - eps) + eps / 3
    let om = v.projector() * c64(2.0 / 3.0, 0.0) + identity(3) * c64(1.0 / 3.0, 0.0);
    let (b, _) = beta_eps(&om, &v, 0.4);
    assert!((b - (0.6 + 0.4 / 3.0)).abs() < 1e-9);
}

#[test]
fn projection_examples() {
    let out = project_onto(&ProjectionTarget::Box, &real_diag(&[1.5, -0.2]));
    assert!((out - real_diag(&[1.0, 0.0])).norm() < 1e-14);

    let v = Subspace::new(CMat::from_column_slice(2, 1, &[c64(1.0, 0.0), c64(0.0, 0.0)]), vec![2]).unwrap();
    let sigma = real_diag(&[0.9, 0.1]);
    let set = ConvexStateSet::FidelityAtMost { v: v.clone(), bound: 0.7 };
    let p = set.project(&sigma);
    assert!((inner_re(v.projector(), &p) - 0.7).abs() < 1e-9);
    assert!(set.contains(&p, 1e-9));
    // grid search over the active face: diag(0.7, 0.3) + off-diagonal x
    let best = (0..=200)
        .map(|k| {
            let x = -0.4 + 0.004 * k as f64;
            let mut c = real_diag(&[0.7, 0.3]);
            c[(0, 1)] = c64(x, 0.0);
            c[(1, 0)] = c64(x, 0.0);
            if qmath::lambda_min(&c) < 0.0 {
                f64::INFINITY
            } else {
                qmath::frob_norm(&(c - &sigma))
            }
        })
        .fold(f64::INFINITY, f64::min);
    assert!(qmath::frob_norm(&(p - &sigma)) <= best + 1e-12);

    let rho = random_density(&[2, 2], 4, 3).unwrap();
    let mask = BipartitionMask::single(1);
    let ppt_state = &identity(4) * c64(0.25, 0.0) * c64(0.5, 0.0) + rho.mat() * c64(0.5, 0.0);
    let t = ProjectionTarget::PtCone { dims: vec![2, 2], mask };
    if qmath::lambda_min(&qmath::partial_transpose_mat(&ppt_state, &[2, 2], &BipartitionMask::single(1))) >= 0.0 {
        let out = project_onto(&t, &ppt_state);
        assert!((out - &ppt_state).norm() < 1e-10);
    }
}

#[test]
fn dykstra_reaches_the_intersection() {
    let dims = vec![2, 2];
    let x = qmath::hermitian_part(&qmath::complex_gaussian_matrix(4, 4, &mut qmath::rng_from_seed(9)));
    let targets = vec![
        ProjectionTarget::Box,
        ProjectionTarget::PtBox { dims: dims.clone(), mask: BipartitionMask::single(1) },
    ];
    let r = project_intersection(&targets, &x, 20_000, 1e-10);
    assert!(r.residual < 1e-8, "{}", r.residual);
    // optimality: the result is at least as close as the feasible point I/2
    let half = identity(4) * c64(0.5, 0.0);
    assert!(qmath::frob_norm(&(&r.point - &x)) <= qmath::frob_norm(&(half - &x)) + 1e-12);
}

#[test]
fn saddle_on_orthogonal_full_class() {
    let phi = maximally_entangled(2).unwrap().density();
    let range = Subspace::new(phi.support(1e-10), vec![2, 2]).unwrap();
    let p = SaddleProblem {
        rho: StateVar::Fixed(phi.mat().clone()),
        sigma: StateVar::Free(ConvexStateSet::InComplement(range)),
        scale: 0.5,
        rho_start: None,
        sigma_start: None,
    };
    let oracle = |d: &CMat| {
        let e = eigh(d);
        (e.values.iter().map(|l| l.max(0.0)).sum(), e.map(|l| if l > 0.0 { 1.0 } else { 0.0 }))
    };
    let r = saddle_solve(&p, oracle, &SolverConfig { max_iter: 500, ..SolverConfig::default() });
    assert!((r.value - 1.0).abs() < 1e-9);
}

#[test]
fn repair_produces_feasible_points() {
    let spec = FeasibleSetSpec::ppt(&[2, 2], BipartitionMask::all_cuts(2)).with_universal(bell_zero_2q());
    let bad = real_diag(&[1.2, -0.1, 0.5, 0.3]);
    let (m, raw, theta) = spec.repair(&bad);
    assert!(raw > 0.0 && theta > 0.0 && theta < 1.0);
    assert!(spec.violation(&m) < 1e-12);
}

fn bell_zero_2q() -> CMat {
    maximally_entangled(2).unwrap().projector()
}
