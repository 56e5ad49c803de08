//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use qsvlab::cli::hoeffding_cases;
use qsvlab::hiding::{orthogonalize, werner_hiding_pair};
use qsvlab::measclass::{
    build_design_povm, lo_grid_oracle, stabilizer_povm, sup_oracle, verify_design, MeasurementClass, DEFAULT_GRID,
};
use qsvlab::optim::SolverConfig;
use qsvlab::protocol::{run_protocol, sample_complexity};
use qsvlab::qmath::{
    self, c64, inner_re, kron_vec, partial_transpose_mat, rng_from_seed, BipartitionMask, CMat,
};
use qsvlab::quantities::{continuity_check, extremal_scan, gamma_eps_grid, gamma_hat, m_norm, mu_eps_grid};
use qsvlab::states::{
    basis_state, binomial, maximally_entangled, random_density, random_pure_state,
    random_subspace, symmetric_projector, trace_distance, Subspace,
};
use qsvlab::strategies::{
    dicke_subset_strategy, evaluate_omega, ppt_universal_strategy, sampled_twirl, symmetric_subspace_strategy,
    StrategyCertificate,
};
use rand::Rng;
use std::time::Instant;

type Check = Result<(bool, String), String>;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn bell_zero() -> Subspace {
    let v = kron_vec(maximally_entangled(2).unwrap().vector(), basis_state(&[2], 0).unwrap().vector());
    Subspace::new(CMat::from_column_slice(8, 1, v.as_slice()), vec![2, 2, 2]).unwrap()
}

/// `lambda_min(Q^dag Omega Q) - lambda_max(Q_perp^dag Omega Q_perp)` from
/// compressions, independent of the strategy bookkeeping.
fn compressed_gap(omega: &CMat, v: &Subspace) -> f64 {
    let q = v.basis();
    let p = v.complement_basis();
    qmath::lambda_min(&(q.adjoint() * omega * q)) - qmath::lambda_max(&(p.adjoint() * omega * &p))
}

fn c1() -> Check {
    let start = Instant::now();
    let c = cfg();
    let g = gamma_hat(&MeasurementClass::ppt(&[2, 2, 2]), &bell_zero(), &c).map_err(err)?;
    let mut ok = (g.value - 2.0 / 3.0).abs() <= 1e-4;
    let mut worst = f64::INFINITY;
    for i in 0..100u64 {
        let n = if i < 50 { 2 } else { 3 };
        let phi = random_pure_state(&vec![2; n], 1000 + i).map_err(err)?;
        let v = Subspace::from_state(&phi).map_err(err)?;
        let r = gamma_hat(&MeasurementClass::ppt(&vec![2; n]), &v, &c).map_err(err)?;
        worst = worst.min(r.value);
    }
    ok &= worst >= 2.0 / 3.0 - 1e-4;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    Ok((ok, format!("bell-zero gap {:.7}, min over 100 random targets {:.7}, {secs:.1}s", g.value, worst)))
}

fn c2() -> Check {
    let mut ok = true;
    let mut worst_eig: f64 = f64::INFINITY;
    let mut worst_floor_gap: f64 = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    for i in 0..100u64 {
        let n = if i % 2 == 0 { 2 } else { 3 };
        let phi = random_pure_state(&vec![2; n], 2000 + i).map_err(err)?;
        let s = ppt_universal_strategy(&phi).map_err(err)?;
        let dims = vec![2; n];
        let comp = qmath::identity(s.omega.nrows()) - &s.omega;
        let cuts = match &s.certificate {
            StrategyCertificate::Schmidt { cuts } => cuts.clone(),
            other => return Err(format!("unexpected certificate {other:?}")),
        };
        if cuts.len() != BipartitionMask::all_cuts(n).len() {
            ok = false;
        }
        for cut in &cuts {
            let k = BipartitionMask::new(cut.parties.clone(), n).map_err(err)?;
            let e1 = qmath::lambda_min(&partial_transpose_mat(&s.omega, &dims, &k));
            let e2 = qmath::lambda_min(&partial_transpose_mat(&comp, &dims, &k));
            worst_eig = worst_eig.min(e1).min(e2);
            worst_floor_gap = worst_floor_gap.min(e1 - cut.omega_floor).min(e2 - cut.complement_floor);
            ok &= e1 >= -1e-10 && e2 >= -1e-10;
            ok &= cut.omega_floor <= e1 + 1e-9 && cut.complement_floor <= e2 + 1e-9;
        }
        let v = Subspace::from_state(&phi).map_err(err)?;
        worst_gap = worst_gap.max((compressed_gap(&s.omega, &v) - 2.0 / 3.0).abs()).max((s.gap - 2.0 / 3.0).abs());
    }
    ok &= worst_gap <= 1e-12;
    Ok((ok, format!("min pt eigenvalue {worst_eig:.3e}, min (numeric - analytic floor) {worst_floor_gap:.3e}, gap error {worst_gap:.1e}")))
}

fn c3() -> Check {
    let c = cfg();
    let mut ok = true;
    let mut lines = Vec::new();
    for d in 2..=8usize {
        let p = werner_hiding_pair(d, &c).map_err(err)?;
        let (s0, s1) = p.states().map_err(err)?;
        let td = trace_distance(&s0, &s1).map_err(err)?;
        let v = symmetric_projector(2, d).map_err(err)?;
        let g = gamma_eps_grid(&MeasurementClass::ppt(&[d, d]), &v, &[1.0], &c).map_err(err)?.remove(0);
        let bound = 2.0 / d as f64;
        ok &= p.eps == 1.0 && (td - 1.0).abs() <= 1e-12 && p.delta <= bound + 1e-6 && g.value <= bound + 1e-3;
        lines.push(format!("d={d}: eps {} delta {:.6} gamma {:.6}", p.eps, p.delta, g.value));
    }
    Ok((ok, lines.join("; ")))
}

fn c4() -> Check {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (n, d) in [(2usize, 2usize), (3, 2), (2, 3)] {
        let s = symmetric_subspace_strategy(n, d).map_err(err)?;
        let want = d as f64 / binomial(n + d - 1, d - 1) as f64;
        worst = worst.max((compressed_gap(&s.omega, &s.target) - want).abs()).max((s.gap - want).abs());
    }
    let mut count = 0;
    for n in 1..=5usize {
        for mask in 1u32..(1 << (n + 1)) {
            let ks: Vec<usize> = (0..=n).filter(|k| mask & (1 << k) != 0).collect();
            if ks.len() == n + 1 {
                // the whole symmetric subspace; covered above
                continue;
            }
            let s = dicke_subset_strategy(n, &ks).map_err(err)?;
            let want = 2.0 / (n + 2 * ks.len() + 1) as f64;
            worst = worst.max((compressed_gap(&s.omega, &s.target) - want).abs()).max((s.gap - want).abs());
            count += 1;
        }
    }
    ok &= worst <= 1e-12;
    Ok((ok, format!("max gap error {worst:.1e} over 3 symmetric and {count} Dicke strategies")))
}

fn c5() -> Check {
    let t = sampled_twirl(2, 2, 100_000, 5).map_err(err)?;
    let exact = symmetric_projector(2, 2).map_err(err)?.projector() * c64(2.0 / 3.0, 0.0);
    let dev = (t - exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((dev <= 5e-3, format!("max entry deviation {dev:.2e}")))
}

fn c6() -> Check {
    let start = Instant::now();
    let b = sample_complexity(2.0 / 3.0, 0.1, 0.01).map_err(err)?;
    let mut ok = b.lower == 56 && b.upper == 2073;
    let mut lines = vec![format!("bounds ({}, {})", b.lower, b.upper)];
    for (label, spec, target, far) in hoeffding_cases().map_err(err)? {
        for (which, state) in [("target", &target), ("far", &far)] {
            let r = run_protocol(&spec, state, 10_000, 11).map_err(err)?;
            ok &= r.pass == Some(true);
            let hi = r.confidence_interval.map(|c| c.1).unwrap_or(1.0);
            lines.push(format!("{label}/{which}: m {} failures {:?} cp99 upper {hi:.2e}", r.m, r.failures));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    lines.push(format!("{secs:.1}s"));
    Ok((ok, lines.join("; ")))
}

fn c7() -> Check {
    let c = cfg();
    let ppt = MeasurementClass::ppt(&[2, 2]);
    let full = MeasurementClass::full(&[2, 2]);
    let grid = [0.25, 0.5, 1.0];
    // looser solves keep the fifty heuristic searches affordable; the slack is 2e-3
    let mu_cfg = SolverConfig { restarts: 0, tolerance: 1e-5, ..cfg() };
    let mut ok = true;
    let (mut worst_mu, mut worst_full, mut worst_ppt): (f64, f64, f64) = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..50u64 {
        let r = 1 + (i % 2) as usize;
        let v = random_subspace(&[2, 2], r, 3000 + i).map_err(err)?;
        let gs = gamma_eps_grid(&ppt, &v, &grid, &c).map_err(err)?;
        let mut seeds = Vec::new();
        let rho = gs[0].witnesses.rho_state().ok_or("missing witness")?;
        for g in &gs {
            seeds.push(g.witnesses.sigma_state().ok_or("missing witness")?);
        }
        // mu at the visibility witnesses: rho in V, sigma at distance >= eps
        let mus = mu_eps_grid(&ppt, &rho, &grid, &seeds, &mu_cfg).map_err(err)?;
        for (g, m) in gs.iter().zip(&mus) {
            worst_mu = worst_mu.max(m.value - g.value);
            ok &= m.value <= g.value + 2e-3;
        }
        for g in &gs {
            let a = g.witnesses.rho_state().ok_or("missing witness")?;
            let b = g.witnesses.sigma_state().ok_or("missing witness")?;
            ok &= trace_distance(&a, &b).map_err(err)? >= g.eps.unwrap() - 1e-9;
            let o = orthogonalize(&a, &b).map_err(err)?;
            ok &= o.rho_hat.rank(1e-10) <= a.rank(1e-10).min(2);
            let l1 = qmath::trace_norm_herm(&(a.mat() - b.mat()));
            for (class, worst) in [(&full, &mut worst_full), (&ppt, &mut worst_ppt)] {
                let before = m_norm(class, &a, &b, &c).map_err(err)?.value / l1;
                let after = 0.5 * m_norm(class, &o.rho_hat, &o.sigma_hat, &c).map_err(err)?.value;
                *worst = worst.max((before - after).abs());
            }
        }
    }
    ok &= worst_full <= 2e-7 && worst_ppt <= 2e-6;
    Ok((ok, format!("max mu - gamma {worst_mu:.2e}; ratio drift full {worst_full:.1e}, ppt {worst_ppt:.1e}")))
}

fn c8() -> Check {
    let c = cfg();
    let ppt = MeasurementClass::ppt(&[2, 2]);
    let mut ok = true;
    let mut rng = rng_from_seed(8);
    let grid = [0.1, 0.25, 0.5, 0.75, 1.0];
    let mut worst_mono: f64 = f64::NEG_INFINITY;
    for i in 0..5u64 {
        let v = random_subspace(&[2, 2], 1 + (i % 3) as usize, 4000 + i).map_err(err)?;
        let gs = gamma_eps_grid(&ppt, &v, &grid, &c).map_err(err)?;
        for w in gs.windows(2) {
            worst_mono = worst_mono.max(w[0].value - w[1].value);
        }
    }
    ok &= worst_mono <= 1e-6;
    let mut cont_pass = 0;
    for i in 0..20u64 {
        let v = random_subspace(&[2, 2], 1 + (i % 3) as usize, 5000 + i).map_err(err)?;
        let a: f64 = rng.gen_range(0.05..0.9);
        let b: f64 = rng.gen_range(a + 0.02..=1.0);
        let r = continuity_check(&ppt, &v, a, b, &c).map_err(err)?;
        cont_pass += r.pass as usize;
    }
    ok &= cont_pass == 20;
    let mut worst_mu: f64 = f64::NEG_INFINITY;
    let mu_grid = [0.2, 0.4, 0.6, 0.8];
    let mu_cfg = SolverConfig { restarts: 2, ..cfg() };
    for i in 0..3u64 {
        let rho = random_density(&[2, 2], 2, 6000 + i).map_err(err)?;
        let ms = mu_eps_grid(&ppt, &rho, &mu_grid, &[], &mu_cfg).map_err(err)?;
        for w in ms.windows(2) {
            worst_mu = worst_mu.max(w[0].value - w[1].value);
        }
    }
    ok &= worst_mu <= 1e-3;
    Ok((ok, format!("gamma max decrease {worst_mono:.1e}; continuity {cont_pass}/20; mu max decrease {worst_mu:.1e}")))
}

fn c9() -> Check {
    let c = cfg();
    let ppt = MeasurementClass::ppt(&[2, 2]);
    let grid = [0.25, 0.5, 1.0];
    let mut ok = true;
    let mut worst_weak: f64 = f64::NEG_INFINITY;
    let mut worst_bell: f64 = 0.0;
    for i in 0..11u64 {
        let bell = i == 10;
        let phi = if bell { maximally_entangled(2).map_err(err)? } else { random_pure_state(&[2, 2], 7000 + i).map_err(err)? };
        let v = Subspace::from_state(&phi).map_err(err)?;
        for g in gamma_eps_grid(&ppt, &v, &grid, &c).map_err(err)? {
            let e = g.eps.unwrap();
            let omega = g.witnesses.strategy_matrix().ok_or("missing strategy")?;
            let primal = evaluate_omega(&omega, &v, e).map_err(err)?.gap_eps / e;
            let a = g.witnesses.rho_state().ok_or("missing witness")?;
            let b = g.witnesses.sigma_state().ok_or("missing witness")?;
            let n = m_norm(&ppt, &a, &b, &c).map_err(err)?;
            let dual = n.upper.ok_or("missing dual bound")? / (2.0 * e);
            worst_weak = worst_weak.max(primal - dual);
            ok &= primal <= dual + 2e-3;
            if bell {
                worst_bell = worst_bell.max(dual - primal);
                ok &= primal >= dual - 2e-3;
            }
        }
    }
    Ok((ok, format!("max primal - dual {worst_weak:.1e}; Bell max dual - primal {worst_bell:.1e}")))
}

fn random_traceless_difference(seed: u64, dims: &[usize]) -> CMat {
    let a = random_density(dims, 2, seed).unwrap();
    let b = random_density(dims, 2, seed + 7919).unwrap();
    a.mat() - b.mat()
}

fn c10() -> Check {
    let c = cfg();
    let lo = MeasurementClass::lo(&[2, 2]);
    let mut worst_lo: f64 = 0.0;
    for i in 0..20u64 {
        let d = random_traceless_difference(8000 + i, &[2, 2]);
        let s = sup_oracle(&lo, &d, &c).map_err(err)?;
        let g = lo_grid_oracle(&d, DEFAULT_GRID).map_err(err)?;
        worst_lo = worst_lo.max((s.value - g.value).abs());
    }
    let povm = stabilizer_povm();
    let elements = povm.elements();
    let class = MeasurementClass::design(povm);
    let mut worst_design: f64 = 0.0;
    for i in 0..20u64 {
        let d = random_traceless_difference(9000 + i, &[2]);
        let s = sup_oracle(&class, &d, &c).map_err(err)?;
        let brute = (0u32..(1 << elements.len()))
            .map(|mask| (0..elements.len()).filter(|j| mask & (1 << j) != 0).map(|j| inner_re(&elements[j], &d)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        worst_design = worst_design.max((s.value - brute).abs());
    }
    Ok((worst_lo <= 1e-2 && worst_design <= 1e-10, format!("see-saw vs grid {worst_lo:.1e}; design vs 64 subsets {worst_design:.1e}")))
}

fn c11() -> Check {
    let c = cfg();
    let povm = build_design_povm(2, 4, 0).map_err(err)?;
    let residual = verify_design(&povm, 4).map_err(err)?;
    let class = MeasurementClass::design(povm);
    let mut worst: f64 = f64::INFINITY;
    for i in 0..20u64 {
        let a = random_density(&[2], 2, 10_000 + i).map_err(err)?;
        let b = random_density(&[2], 1 + (i % 2) as usize, 11_000 + i).map_err(err)?;
        let n = m_norm(&class, &a, &b, &c).map_err(err)?;
        worst = worst.min(n.value - qmath::frob_norm(&(a.mat() - b.mat())) / 3.0);
    }
    Ok((residual <= 1e-6 && worst >= -1e-6, format!("design residual {residual:.1e}; min (norm - two-norm/3) {worst:.3e}")))
}

fn c12() -> Check {
    let start = Instant::now();
    let r = extremal_scan(&MeasurementClass::ppt(&[2, 2, 2]), 1, 200, 12, &cfg()).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let target = 2.0 / 3.0;
    let ok = (r.min_gamma_hat - target).abs() <= 1e-3 && (r.min_mu_one - target).abs() <= 1e-3 && secs < 600.0;
    Ok((ok, format!("min gamma_hat {:.6}, min mu(1) {:.6}, {secs:.1}s", r.min_gamma_hat, r.min_mu_one)))
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, fn() -> Check); 12] = [
        ("PPT universal constant 2/3", c1),
        ("Omega_Phi partial-transpose certificates", c2),
        ("Werner pair and symmetric subspace bounds", c3),
        ("symmetric and Dicke strategy gaps", c4),
        ("Monte Carlo twirl", c5),
        ("Hoeffding protocol", c6),
        ("duality inequalities and orthogonalization", c7),
        ("monotonicity and continuity", c8),
        ("minimax consistency", c9),
        ("oracle equivalence", c10),
        ("4-design construction", c11),
        ("extremal scan", c12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("C{id:<2} {tag} {name}: {detail} [{:.1}s]", start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
