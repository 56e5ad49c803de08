use super::*;
use crate::states::{antisymmetric_projector, maximally_entangled, random_density, symmetric_projector};

fn rand_delta(dims: &[usize], seed: u64) -> CMat {
    let n: usize = dims.iter().product();
    random_density(dims, 2.min(n), seed).unwrap().mat() - random_density(dims, 3.min(n), seed + 1000).unwrap().mat()
}

fn all_classes_2q() -> Vec<MeasurementClass> {
    vec![
        MeasurementClass::full(&[2, 2]),
        MeasurementClass::ppt(&[2, 2]),
        MeasurementClass::lo(&[2, 2]).with_restarts(8),
        MeasurementClass::lpv(2).with_restarts(8),
        MeasurementClass::pauli(2),
    ]
}

#[test]
fn half_identity_is_member_everywhere() {
    let half = identity(4) * c64(0.5, 0.0);
    for c in all_classes_2q() {
        assert!(membership_check(&c, &half).unwrap().is_member(), "{}", c.name());
    }
    let des = MeasurementClass::design(stabilizer_povm());
    assert!(membership_check(&des, &(identity(2) * c64(0.5, 0.0))).unwrap().is_member());
}

#[test]
fn box_violation_rejected_everywhere() {
    let m = qmath::real_diag(&[1.2, 0.5, 0.5, 0.1]);
    for c in all_classes_2q() {
        let r = membership_check(&c, &m).unwrap();
        assert_eq!(r.status, Membership::NotMember);
        assert_eq!(r.violations[0].constraint, "box");
    }
}

#[test]
fn ppt_strategy_for_bell_is_member() {
    let phi = maximally_entangled(2).unwrap().projector();
    let omega = &phi + (identity(4) - &phi) * c64(1.0 / 3.0, 0.0);
    assert!(membership_check(&MeasurementClass::ppt(&[2, 2]), &omega).unwrap().is_member());
    // the projector itself is not PPT
    assert_eq!(membership_check(&MeasurementClass::ppt(&[2, 2]), &phi).unwrap().status, Membership::NotMember);
}

#[test]
fn complement_closure_on_exact_classes() {
    let cfg = SolverConfig::default();
    let classes = vec![MeasurementClass::full(&[2, 2]), MeasurementClass::ppt(&[2, 2])];
    for c in classes {
        for seed in 0..3 {
            let s = sup_oracle(&c, &rand_delta(&[2, 2], seed), &cfg).unwrap();
            let comp = identity(4) - &s.maximizer;
            assert!(membership_check(&c, &s.maximizer).unwrap().is_member());
            assert!(membership_check(&c, &comp).unwrap().is_member());
        }
    }
    let des = MeasurementClass::design(stabilizer_povm());
    for seed in 0..3 {
        let d = rand_delta(&[2], seed);
        let s = sup_oracle(&des, &d, &cfg).unwrap();
        assert!(membership_check(&des, &s.maximizer).unwrap().is_member());
        assert!(membership_check(&des, &(identity(2) - &s.maximizer)).unwrap().is_member());
    }
}

#[test]
fn design_membership_rejects_outside_points() {
    // a rank-one projector off the stabilizer axes lies outside the zonotope
    let v = qmath::haar_random_pure_state(2, 3).unwrap();
    let p = &v * v.adjoint();
    let des = MeasurementClass::design(stabilizer_povm());
    assert_eq!(membership_check(&des, &p).unwrap().status, Membership::NotMember);
}

#[test]
fn sup_pair_dominates_trace() {
    let cfg = SolverConfig::default();
    for c in all_classes_2q() {
        for seed in 0..3 {
            let d = rand_delta(&[2, 2], seed) + identity(4) * c64(0.1, 0.0);
            let a = sup_oracle(&c, &d, &cfg).unwrap().value;
            let b = sup_oracle(&c, &(-&d), &cfg).unwrap().value;
            assert!(a + b >= d.trace().re.abs() - 1e-9, "{}", c.name());
        }
    }
}

#[test]
fn class_ordering() {
    let cfg = SolverConfig::default();
    for seed in 0..5 {
        let d = rand_delta(&[2, 2], seed);
        let full = sup_oracle(&MeasurementClass::full(&[2, 2]), &d, &cfg).unwrap().value;
        let ppt = sup_oracle(&MeasurementClass::ppt(&[2, 2]), &d, &cfg).unwrap();
        let lo = sup_oracle(&MeasurementClass::lo(&[2, 2]), &d, &cfg).unwrap().value;
        let pauli = sup_oracle(&MeasurementClass::pauli(2), &d, &cfg).unwrap().value;
        assert!(ppt.value <= full + 1e-9);
        assert!(lo <= ppt.upper().unwrap() + 1e-7);
        assert!(pauli <= lo + 1e-7 || pauli <= ppt.upper().unwrap() + 1e-7);
    }
}

#[test]
fn full_oracle_on_orthogonal_pure_states() {
    let a = crate::states::basis_state(&[2, 2], 0).unwrap().projector();
    let b = crate::states::basis_state(&[2, 2], 3).unwrap().projector();
    let s = sup_oracle(&MeasurementClass::full(&[2, 2]), &(&a - &b), &SolverConfig::default()).unwrap();
    assert!((s.value - 1.0).abs() < 1e-12);
    assert!((s.maximizer - a).norm() < 1e-12);
}

#[test]
fn zero_delta_gives_half_identity() {
    for c in all_classes_2q() {
        let s = sup_oracle(&c, &CMat::zeros(4, 4), &SolverConfig::default()).unwrap();
        assert_eq!(s.value, 0.0);
    }
}

#[test]
fn ppt_werner_objective_within_bound() {
    let anti = antisymmetric_projector(2).unwrap();
    let sym = symmetric_projector(2, 2).unwrap();
    let d = anti.projector() - sym.projector() / c64(3.0, 0.0);
    let s = sup_oracle(&MeasurementClass::ppt(&[2, 2]), &d, &SolverConfig::default()).unwrap();
    assert!(2.0 * s.value - d.trace().re <= 2.0 + 1e-9);
    assert!((inner_re(&s.maximizer, &d) - s.value).abs() < 1e-8);
}

#[test]
fn design_oracle_matches_subset_enumeration() {
    let povm = stabilizer_povm();
    let el = povm.elements();
    let class = MeasurementClass::design(povm);
    for seed in 0..20 {
        let d = qmath::hermitian_part(&qmath::complex_gaussian_matrix(2, 2, &mut qmath::rng_from_seed(seed)));
        let s = sup_oracle(&class, &d, &SolverConfig::default()).unwrap();
        let brute = (0..64u32)
            .map(|mask| (0..6).filter(|i| mask & (1 << i) != 0).map(|i| inner_re(&el[i], &d)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((s.value - brute).abs() <= 1e-10);
    }
}

#[test]
fn lo_witness_certifies_membership() {
    let d = rand_delta(&[2, 2], 7);
    for c in [MeasurementClass::lo(&[2, 2]), MeasurementClass::pauli(2), MeasurementClass::lpv(2)] {
        let s = sup_oracle(&c, &d, &SolverConfig::default()).unwrap();
        let w = s.witness.clone().unwrap();
        assert!(membership_with_witness(&c, &s.maximizer, &w).unwrap().is_member());
        assert_eq!(membership_check(&c, &s.maximizer).unwrap().status, Membership::Unknown);
    }
    // a generic local basis is not a Pauli witness
    let s = sup_oracle(&MeasurementClass::lo(&[2, 2]), &d, &SolverConfig::default()).unwrap();
    let r = membership_with_witness(&MeasurementClass::pauli(2), &s.maximizer, s.witness.as_ref().unwrap()).unwrap();
    assert_eq!(r.status, Membership::NotMember);
}

#[test]
fn see_saw_agrees_with_grid() {
    for seed in 0..5 {
        let d = rand_delta(&[2, 2], 100 + seed);
        let a = sup_oracle(&MeasurementClass::lo(&[2, 2]), &d, &SolverConfig::default()).unwrap().value;
        let b = lo_grid_oracle(&d, DEFAULT_GRID).unwrap().value;
        assert!((a - b).abs() < 1e-2, "{a} vs {b}");
    }
}

#[test]
fn class_descriptor_round_trips() {
    let c = MeasurementClass::ppt(&[2, 2, 2]);
    let s = serde_json::to_string(&c).unwrap();
    let back: MeasurementClass = serde_json::from_str(&s).unwrap();
    assert_eq!(c, back);
}

#[test]
fn polytope_programs_match_closed_form_oracles() {
    let cfg = SolverConfig::default();
    let des = MeasurementClass::design(stabilizer_povm());
    for seed in 0..3 {
        let d = rand_delta(&[2], 30 + seed);
        let exact = sup_oracle(&des, &d, &cfg).unwrap().value;
        let lp = maximize_linear(&des.feasible_set().unwrap(), &d, &cfg).unwrap().value;
        assert!((exact - lp).abs() < 1e-5, "{exact} vs {lp}");
    }
    let pauli = MeasurementClass::pauli(2);
    for seed in 0..3 {
        let d = rand_delta(&[2, 2], 60 + seed);
        let exact = sup_oracle(&pauli, &d, &cfg).unwrap().value;
        let lp = maximize_linear(&pauli.feasible_set().unwrap(), &d, &cfg).unwrap().value;
        assert!((exact - lp).abs() < 1e-5, "{exact} vs {lp}");
    }
}
