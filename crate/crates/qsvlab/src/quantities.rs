//! The distinguishability and visibility quantities: M-norms, the
//! distinguishability ratios `mu`, the visibility `gamma(eps)` and the
//! spectral gap, together with the deviation and continuity checks that tie
//! them together.

use crate::error::{QsvError, Result};
use crate::io::MatrixJson;
use crate::measclass::{sup_oracle, Certificate, ClassKind, MeasurementClass, SupOracleResult};
use crate::optim::{
    self, beta_eps, orthogonal_program, saddle_solve, spectral_gap_program, visibility_program, ConvexStateSet,
    SaddleProblem, SolveReport, SolverConfig, StateVar,
};
use crate::qmath::{self, c64, eigh, haar_state_rng, haar_unitary_rng, identity, rng_from_seed, CMat};
use crate::states::{DensityMatrix, Subspace};
use crate::strategies::{deviation_blocks, known_strategies};
use serde::{Deserialize, Serialize};

/// Iteration cap of the subgradient saddle solver used for classes without
/// a convex description.
pub const SADDLE_ITERS: usize = 400;
/// Steps of each ratio descent run.
pub const RATIO_STEPS: usize = 30;
/// Rank threshold for supports.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityName {
    MNorm,
    MuEps,
    MuOne,
    MuHat,
    GammaEps,
    GammaHat,
}

/// How the reported value relates to the true quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimate {
    /// Exact up to solver tolerance.
    Exact,
    HeuristicUpperBound,
    HeuristicLowerBound,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<MatrixJson>,
    /// Strategy or maximizing binary measurement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<MatrixJson>,
}

impl Witnesses {
    fn states(dims: &[usize], rho: &CMat, sigma: &CMat) -> Self {
        Witnesses { rho: Some(MatrixJson::from_mat(rho, dims)), sigma: Some(MatrixJson::from_mat(sigma, dims)), strategy: None }
    }

    fn with_strategy(mut self, dims: &[usize], m: &CMat) -> Self {
        self.strategy = Some(MatrixJson::from_mat(m, dims));
        self
    }

    pub fn rho_state(&self) -> Option<DensityMatrix> {
        self.rho.as_ref().and_then(|j| j.to_density().ok())
    }

    pub fn sigma_state(&self) -> Option<DensityMatrix> {
        self.sigma.as_ref().and_then(|j| j.to_density().ok())
    }

    pub fn strategy_matrix(&self) -> Option<CMat> {
        self.strategy.as_ref().and_then(|j| j.to_operator().ok())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantityResult {
    pub name: QuantityName,
    pub value: f64,
    /// Certified lower bound, when one is available.
    pub lower: Option<f64>,
    /// Certified upper bound, when one is available.
    pub upper: Option<f64>,
    pub estimate: Estimate,
    pub class: String,
    pub eps: Option<f64>,
    pub witnesses: Witnesses,
    pub report: Option<SolveReport>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl QuantityResult {
    fn new(name: QuantityName, class: &MeasurementClass, value: f64, estimate: Estimate) -> Self {
        QuantityResult {
            name,
            value,
            lower: None,
            upper: None,
            estimate,
            class: class.name().to_string(),
            eps: None,
            witnesses: Witnesses::default(),
            report: None,
            notes: Vec::new(),
        }
    }

    fn exact_one(name: QuantityName, class: &MeasurementClass) -> Self {
        let mut r = Self::new(name, class, 1.0, Estimate::Exact);
        r.lower = Some(1.0);
        r.upper = Some(1.0);
        r.report = Some(SolveReport::exact());
        r
    }
}

fn check_dims(class: &MeasurementClass, n: usize) -> Result<()> {
    class.validate()?;
    if class.dim() != n {
        return Err(QsvError::Shape(format!("class acts on dimension {}, operands on {n}", class.dim())));
    }
    Ok(())
}

/// `||Delta||_M` from one oracle call: `(value, certified upper, oracle)`.
pub fn norm_of(class: &MeasurementClass, delta: &CMat, cfg: &SolverConfig) -> Result<(f64, Option<f64>, SupOracleResult)> {
    let s = sup_oracle(class, delta, cfg)?;
    let tr = delta.trace().re;
    let value = (2.0 * s.value - tr).max(0.0);
    let upper = s.upper().map(|u| (2.0 * u - tr).max(value));
    Ok((value, upper, s))
}

/// `||rho - sigma||_M = 2 sup_M tr(M (rho - sigma)) - tr(rho - sigma)`.
pub fn m_norm(class: &MeasurementClass, rho: &DensityMatrix, sigma: &DensityMatrix, cfg: &SolverConfig) -> Result<QuantityResult> {
    if rho.dim() != sigma.dim() {
        return Err(QsvError::Shape(format!("states of dimension {} and {}", rho.dim(), sigma.dim())));
    }
    check_dims(class, rho.dim())?;
    let delta = rho.mat() - sigma.mat();
    let (value, upper, s) = norm_of(class, &delta, cfg)?;
    let estimate = if class.is_exact() { Estimate::Exact } else { Estimate::HeuristicLowerBound };
    let mut r = QuantityResult::new(QuantityName::MNorm, class, value, estimate);
    r.lower = Some(value);
    r.upper = upper;
    r.witnesses = Witnesses::states(rho.dims(), rho.mat(), sigma.mat()).with_strategy(rho.dims(), &s.maximizer);
    r.report = Some(match s.certificate {
        Certificate::DualBound { iterations, converged, .. } => SolveReport { iterations, converged, ..Default::default() },
        _ => SolveReport::exact(),
    });
    Ok(r)
}

/// `eps_rho = max_sigma ||rho - sigma||_1 / 2`.
///
/// The maximum of a convex function over states is attained at a pure
/// state; pure candidates are the eigenvectors of `rho` plus a local ascent
/// over the sphere from random starts. For the eigenvector of the smallest
/// eigenvalue the value is `1 - lambda_min(rho)`.
pub fn eps_max(rho: &DensityMatrix, restarts: usize, seed: u64) -> f64 {
    let n = rho.dim();
    let dist = |v: &qmath::CVec| 0.5 * qmath::trace_norm_herm(&(rho.mat() - v * v.adjoint()));
    let e = eigh(rho.mat());
    let mut best = (0..n).map(|k| dist(&e.vectors.column(k).into_owned())).fold(0.0, f64::max);
    let mut rng = rng_from_seed(seed);
    for _ in 0..restarts {
        let mut v = haar_state_rng(n, &mut rng);
        let mut f = dist(&v);
        let mut step = 0.5;
        for _ in 0..200 {
            // gradient of tr(S (v v^dag)) with S the sign of (v v^dag - rho)
            let d = &v * v.adjoint() - rho.mat();
            let s = eigh(&d).map(|l| if l > 0.0 { 1.0 } else if l < 0.0 { -1.0 } else { 0.0 });
            let g = &s * &v;
            let cand = (&v + &g * c64(step, 0.0)).normalize();
            let fc = dist(&cand);
            if fc > f {
                v = cand;
                f = fc;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best = best.max(f);
    }
    best.min(1.0)
}

fn rank_deficient(rho: &DensityMatrix) -> bool {
    rho.rank(RANK_TOL) < rho.dim()
}

fn range_of(rho: &DensityMatrix) -> Result<Subspace> {
    Subspace::new(rho.support(RANK_TOL), rho.dims().to_vec())
}

/// `mu(1) = (1/2) min_{sigma perp rho} ||rho - sigma||_M`.
pub fn mu_one(class: &MeasurementClass, rho: &DensityMatrix, cfg: &SolverConfig) -> Result<QuantityResult> {
    check_dims(class, rho.dim())?;
    if !rank_deficient(rho) {
        return Err(QsvError::Domain("mu(1) is defined only for density operators that are not of full rank".into()));
    }
    let range = range_of(rho)?;
    let dims = rho.dims();
    let sigma_perp = range.complement().uniform_state();
    if let ClassKind::Full = class.kind {
        let mut r = QuantityResult::exact_one(QuantityName::MuOne, class);
        r.eps = Some(1.0);
        r.witnesses = Witnesses::states(dims, rho.mat(), sigma_perp.mat());
        return Ok(r);
    }
    let mut r = if let Some(spec) = class.feasible_set() {
        let s = orthogonal_program(&spec, rho, cfg)?;
        let delta = rho.mat() - s.sigma.mat();
        let (v, upper, oracle) = norm_of(class, &delta, cfg)?;
        let value = 0.5 * upper.unwrap_or(v);
        let mut r = QuantityResult::new(QuantityName::MuOne, class, value, Estimate::Exact);
        r.lower = Some(s.value.min(value));
        r.upper = Some(value);
        r.witnesses = Witnesses::states(dims, rho.mat(), s.sigma.mat()).with_strategy(dims, &oracle.maximizer);
        r.report = Some(s.report);
        r
    } else {
        let problem = SaddleProblem {
            rho: StateVar::Fixed(rho.mat().clone()),
            sigma: StateVar::Free(ConvexStateSet::InComplement(range)),
            scale: 0.5,
            rho_start: None,
            sigma_start: Some(sigma_perp.mat().clone()),
        };
        let sc = SolverConfig { max_iter: cfg.max_iter.min(SADDLE_ITERS), ..cfg.clone() };
        let sol = saddle(class, &problem, &sc)?;
        let estimate = if class.is_exact() { Estimate::Exact } else { Estimate::HeuristicLowerBound };
        let mut r = QuantityResult::new(QuantityName::MuOne, class, sol.value, estimate);
        r.witnesses = Witnesses::states(dims, &sol.rho, &sol.sigma).with_strategy(dims, &sol.maximizer);
        r.report = Some(SolveReport { iterations: sol.iterations, converged: sol.converged, ..Default::default() });
        if !class.is_exact() {
            r.upper = relaxed_ratio(class, rho, &sol.sigma, cfg)?;
            r.notes.push("inner maximization is heuristic; the value is not certified".into());
        }
        r
    };
    r.eps = Some(1.0);
    Ok(r)
}

fn saddle(class: &MeasurementClass, p: &SaddleProblem, cfg: &SolverConfig) -> Result<optim::SaddleResult> {
    let err = std::cell::RefCell::new(None);
    let n = class.dim();
    let oracle = |d: &CMat| match sup_oracle(class, d, cfg) {
        Ok(s) => (s.value, s.maximizer),
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            (0.0, identity(n) * c64(0.5, 0.0))
        }
    };
    let out = saddle_solve(p, oracle, cfg);
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// One point of the ratio search: the direction `D = sigma - rho`.
#[derive(Clone, Debug)]
struct Candidate {
    ratio: f64,
    /// Largest `||rho - sigma'||_1 / 2` along the ray `rho + s D`.
    reach: f64,
    direction: CMat,
    maximizer: CMat,
}

/// Largest `s` with `rho + s D >= 0`.
fn ray_extent(rho: &CMat, d: &CMat) -> f64 {
    let ok = |s: f64| qmath::lambda_min(&(rho + d * c64(s, 0.0))) >= -1e-12;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return lo;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

struct RatioSearch<'a> {
    class: &'a MeasurementClass,
    rho: &'a DensityMatrix,
    cfg: &'a SolverConfig,
    pool: Vec<Candidate>,
}

impl<'a> RatioSearch<'a> {
    fn new(class: &'a MeasurementClass, rho: &'a DensityMatrix, cfg: &'a SolverConfig) -> Self {
        RatioSearch { class, rho, cfg, pool: Vec::new() }
    }

    /// Ratio `||rho - sigma||_M / ||rho - sigma||_1` (certified upper bound of
    /// the norm when available), its gradient in `sigma`, and the maximizer.
    fn ratio(&self, sigma: &CMat) -> Result<Option<(f64, CMat, CMat)>> {
        let delta = self.rho.mat() - sigma;
        let n1 = qmath::trace_norm_herm(&delta);
        if n1 < 1e-9 {
            return Ok(None);
        }
        let (v, upper, s) = norm_of(self.class, &delta, self.cfg)?;
        let nm = upper.unwrap_or(v);
        let n = delta.nrows();
        let sign = eigh(&delta).map(|l| if l > 0.0 { 1.0 } else if l < 0.0 { -1.0 } else { 0.0 });
        let g = ((&s.maximizer * c64(2.0, 0.0) - identity(n)) * c64(-n1, 0.0) + sign * c64(nm, 0.0)) / c64(n1 * n1, 0.0);
        Ok(Some((nm / n1, g, s.maximizer)))
    }

    fn record(&mut self, sigma: &CMat, ratio: f64, maximizer: CMat) -> f64 {
        let d = sigma - self.rho.mat();
        let reach = ray_extent(self.rho.mat(), &d) * 0.5 * qmath::trace_norm_herm(&d);
        self.pool.push(Candidate { ratio, reach: reach.min(1.0), direction: d, maximizer });
        reach
    }

    /// Evaluates `sigma` and adds it to the pool.
    fn add(&mut self, sigma: &CMat) -> Result<()> {
        if let Some((r, _, m)) = self.ratio(sigma)? {
            self.record(sigma, r, m);
        }
        Ok(())
    }

    /// Projected descent on the ratio keeping `||rho - sigma||_1 / 2 >= floor`.
    fn descend(&mut self, start: &CMat, floor: f64, steps: usize) -> Result<()> {
        let set = ConvexStateSet::AllDensities { dim: self.rho.dim() };
        let mut sigma = set.project(start);
        if 0.5 * qmath::trace_norm_herm(&(self.rho.mat() - &sigma)) < floor {
            return Ok(());
        }
        let Some((mut r, mut g, m)) = self.ratio(&sigma)? else { return Ok(()) };
        self.record(&sigma, r, m);
        let mut h = 0.2 * qmath::frob_norm(&(self.rho.mat() - &sigma)) / qmath::frob_norm(&g).max(1e-12);
        let mut taken = 0;
        while taken < steps && h > 1e-9 {
            let cand = set.project(&(&sigma - &g * c64(h, 0.0)));
            let far = 0.5 * qmath::trace_norm_herm(&(self.rho.mat() - &cand)) >= floor;
            taken += 1;
            match if far { self.ratio(&cand)? } else { None } {
                Some((rc, gc, mc)) if rc < r - 1e-12 => {
                    self.record(&cand, rc, mc);
                    sigma = cand;
                    r = rc;
                    g = gc;
                    h *= 1.5;
                }
                _ => h *= 0.3,
            }
        }
        Ok(())
    }

    fn best(&self, eps: Option<f64>) -> Option<&Candidate> {
        self.pool
            .iter()
            .filter(|c| eps.map_or(true, |e| c.reach >= e - 1e-12))
            .min_by(|a, b| a.ratio.total_cmp(&b.ratio))
    }

    /// Random far-away starting states: boundary points along rays towards
    /// Haar-random pure states.
    fn random_starts(&self, count: usize, seed: u64) -> Vec<CMat> {
        let n = self.rho.dim();
        let mut rng = rng_from_seed(seed);
        (0..count)
            .map(|_| {
                let v = haar_state_rng(n, &mut rng);
                let d = &v * v.adjoint() - self.rho.mat();
                let s = ray_extent(self.rho.mat(), &d);
                self.rho.mat() + d * c64(s, 0.0)
            })
            .collect()
    }

    /// Pure state on the eigenvector of the smallest eigenvalue.
    fn farthest_pure(&self) -> CMat {
        let e = eigh(self.rho.mat());
        let v = e.vectors.column(self.rho.dim() - 1).into_owned();
        &v * v.adjoint()
    }
}

fn witness_at(rho: &DensityMatrix, c: &Candidate, eps: f64) -> CMat {
    let t = eps / (0.5 * qmath::trace_norm_herm(&c.direction));
    rho.mat() + &c.direction * c64(t, 0.0)
}

fn check_eps_range(rho: &DensityMatrix, grid: &[f64], cfg: &SolverConfig) -> Result<f64> {
    let emax = eps_max(rho, 4, cfg.seed);
    for &e in grid {
        if !(e > 0.0 && e <= emax + 1e-12) {
            return Err(QsvError::Domain(format!("eps = {e} is outside (0, {emax}]")));
        }
    }
    Ok(emax)
}

/// PPT relaxation of a local class: its norm bounds the local norm from above.
fn ppt_relaxation(class: &MeasurementClass) -> Option<MeasurementClass> {
    match class.kind {
        ClassKind::Lo { .. } | ClassKind::Lpv { .. } | ClassKind::Pauli if !class.is_exact() && class.dims.len() >= 2 => {
            Some(MeasurementClass::ppt(&class.dims))
        }
        _ => None,
    }
}

/// Certified upper bound on the ratio at `sigma` through the PPT relaxation.
fn relaxed_ratio(class: &MeasurementClass, rho: &DensityMatrix, sigma: &CMat, cfg: &SolverConfig) -> Result<Option<f64>> {
    let Some(ppt) = ppt_relaxation(class) else { return Ok(None) };
    let delta = rho.mat() - sigma;
    let n1 = qmath::trace_norm_herm(&delta);
    if n1 < 1e-9 {
        return Ok(None);
    }
    let (v, upper, _) = norm_of(&ppt, &delta, cfg)?;
    Ok(Some(upper.unwrap_or(v) / n1))
}

fn mu_estimate(class: &MeasurementClass) -> Estimate {
    if class.is_exact() {
        Estimate::HeuristicUpperBound
    } else {
        Estimate::HeuristicLowerBound
    }
}

/// Starting states shared by the ratio searches: user seeds, the `mu(1)`
/// witness and the farthest pure state.
fn ratio_starts(search: &RatioSearch, seeds: &[DensityMatrix], one: Option<&QuantityResult>) -> Vec<CMat> {
    let mut starts: Vec<CMat> = seeds.iter().map(|s| s.mat().clone()).collect();
    if let Some(w) = one.and_then(|o| o.witnesses.sigma_state()) {
        starts.push(w.mat().clone());
    }
    starts.push(search.farthest_pure());
    starts
}

/// Fills the pool with descents aimed at each `eps` of the grid, largest first.
fn grid_descents(search: &mut RatioSearch, grid: &[f64], starts: &[CMat], cfg: &SolverConfig) -> Result<()> {
    for s in starts {
        search.add(s)?;
    }
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    for (k, &e) in order.iter().enumerate() {
        let mut runs: Vec<CMat> = starts.to_vec();
        if let Some(c) = search.best(Some(e)) {
            runs.push(witness_at(search.rho, c, c.reach));
        }
        runs.extend(search.random_starts(cfg.restarts, cfg.seed.wrapping_add(1000 * k as u64)));
        for s in runs {
            search.descend(&s, e, RATIO_STEPS)?;
        }
    }
    Ok(())
}

/// `mu(eps)` on a grid: heuristic upper bounds from a shared pool of ratio
/// candidates, so the values are non-decreasing in `eps` by construction.
/// `seeds` are extra states `sigma` to start descents from.
pub fn mu_eps_grid(
    class: &MeasurementClass,
    rho: &DensityMatrix,
    grid: &[f64],
    seeds: &[DensityMatrix],
    cfg: &SolverConfig,
) -> Result<Vec<QuantityResult>> {
    check_dims(class, rho.dim())?;
    let emax = check_eps_range(rho, grid, cfg)?;
    let dims = rho.dims();
    if let ClassKind::Full = class.kind {
        let far = RatioSearch::new(class, rho, cfg).farthest_pure();
        let d = &far - rho.mat();
        return Ok(grid
            .iter()
            .map(|&e| {
                let mut r = QuantityResult::exact_one(QuantityName::MuEps, class);
                r.eps = Some(e);
                let sigma = rho.mat() + &d * c64(e / emax, 0.0);
                r.witnesses = Witnesses::states(dims, rho.mat(), &sigma);
                r
            })
            .collect());
    }
    let one = if rank_deficient(rho) { Some(mu_one(class, rho, cfg)?) } else { None };
    let mut search = RatioSearch::new(class, rho, cfg);
    let starts = ratio_starts(&search, seeds, one.as_ref());
    grid_descents(&mut search, grid, &starts, cfg)?;
    grid.iter()
        .map(|&e| {
            if e >= 1.0 - 1e-12 {
                if let Some(o) = &one {
                    let mut r = o.clone();
                    r.name = QuantityName::MuEps;
                    return Ok(r);
                }
            }
            let c = search
                .best(Some(e))
                .ok_or_else(|| QsvError::NonConvergence(format!("no candidate reaches trace distance {e}")))?;
            let mut r = QuantityResult::new(QuantityName::MuEps, class, c.ratio, mu_estimate(class));
            r.eps = Some(e);
            let sigma = witness_at(rho, c, e);
            r.upper = if class.is_exact() { Some(c.ratio) } else { relaxed_ratio(class, rho, &sigma, cfg)? };
            r.witnesses = Witnesses::states(dims, rho.mat(), &sigma).with_strategy(dims, &c.maximizer);
            Ok(r)
        })
        .collect()
}

pub fn mu_eps(class: &MeasurementClass, rho: &DensityMatrix, eps: f64, cfg: &SolverConfig) -> Result<QuantityResult> {
    Ok(mu_eps_grid(class, rho, &[eps], &[], cfg)?.remove(0))
}

/// Heuristic upper bound on `min_sigma ||rho - sigma||_M / ||rho - sigma||_1`.
/// Combines direct ratio descent with a small-`eps` sweep; `seeds` are extra
/// candidate states.
pub fn mu_hat(class: &MeasurementClass, rho: &DensityMatrix, seeds: &[DensityMatrix], cfg: &SolverConfig) -> Result<QuantityResult> {
    check_dims(class, rho.dim())?;
    let dims = rho.dims();
    if let ClassKind::Full = class.kind {
        let mut r = QuantityResult::exact_one(QuantityName::MuHat, class);
        let far = RatioSearch::new(class, rho, cfg).farthest_pure();
        r.witnesses = Witnesses::states(dims, rho.mat(), &far);
        return Ok(r);
    }
    let one = if rank_deficient(rho) { Some(mu_one(class, rho, cfg)?) } else { None };
    let mut search = RatioSearch::new(class, rho, cfg);
    let mut starts = ratio_starts(&search, seeds, one.as_ref());
    // direct descent without a distance floor
    let mut runs = starts.clone();
    runs.extend(search.random_starts(cfg.restarts, cfg.seed));
    for s in &runs {
        search.descend(s, 0.0, RATIO_STEPS)?;
    }
    // small-eps sweep: descents that keep a small but positive distance,
    // started from the best direction so far
    let emax = eps_max(rho, 4, cfg.seed);
    let small = (emax * 1e-3).max(1e-6);
    if let Some(c) = search.best(None) {
        starts.push(witness_at(rho, c, c.reach));
    }
    let sweep_cfg = SolverConfig { restarts: cfg.restarts / 2, ..cfg.clone() };
    grid_descents(&mut search, &[small], &starts, &sweep_cfg)?;
    let c = search.best(None).ok_or_else(|| QsvError::NonConvergence("empty ratio pool".into()))?;
    let sigma = rho.mat() + &c.direction;
    let mut r = QuantityResult::new(QuantityName::MuHat, class, c.ratio, mu_estimate(class));
    r.upper = if class.is_exact() { Some(c.ratio) } else { relaxed_ratio(class, rho, &sigma, cfg)? };
    r.witnesses = Witnesses::states(dims, rho.mat(), &sigma).with_strategy(dims, &c.maximizer);
    if let Some(o) = &one {
        r.notes.push(format!("mu(1) = {}", o.value));
    }
    Ok(r)
}

fn check_subspace(class: &MeasurementClass, v: &Subspace) -> Result<()> {
    check_dims(class, v.ambient_dim())?;
    if v.dim() == 0 || v.dim() >= v.ambient_dim() {
        return Err(QsvError::Domain("the subspace must be nontrivial and proper".into()));
    }
    Ok(())
}

/// Per-eps raw solution before pooling.
struct VisPoint {
    eps: f64,
    /// `(1/2eps) ||rho - sigma||_M` at the pair, from above when certified.
    dual: f64,
    rho: CMat,
    sigma: CMat,
    omega: CMat,
    report: SolveReport,
}

/// `gamma(eps)` on a grid. Values are the pooled dual
/// `min_{rho in V, tr(sigma Pi) <= 1 - eps} (1/2eps) ||rho - sigma||_M`;
/// `lower` is the best primal `(alpha - beta_eps)/eps` over all strategies
/// found. Both are non-decreasing in `eps`.
pub fn gamma_eps_grid(class: &MeasurementClass, v: &Subspace, grid: &[f64], cfg: &SolverConfig) -> Result<Vec<QuantityResult>> {
    check_subspace(class, v)?;
    for &e in grid {
        if !(e > 0.0 && e <= 1.0) {
            return Err(QsvError::Domain(format!("eps = {e} is outside (0, 1]")));
        }
    }
    let dims = v.dims();
    let rho_v = v.uniform_state();
    if let ClassKind::Full = class.kind {
        let perp = v.complement().uniform_state();
        return Ok(grid
            .iter()
            .map(|&e| {
                let mut r = QuantityResult::exact_one(QuantityName::GammaEps, class);
                r.eps = Some(e);
                let sigma = rho_v.mat() * c64(1.0 - e, 0.0) + perp.mat() * c64(e, 0.0);
                r.witnesses = Witnesses::states(dims, rho_v.mat(), &sigma).with_strategy(dims, v.projector());
                r
            })
            .collect());
    }
    let mut points = Vec::new();
    for &e in grid {
        let p = if let Some(spec) = class.feasible_set() {
            let s = visibility_program(&spec, v, e, cfg)?;
            let delta = s.rho.mat() - s.sigma.mat();
            let (nv, upper, _) = norm_of(class, &delta, cfg)?;
            VisPoint {
                eps: e,
                dual: upper.unwrap_or(nv) / (2.0 * e),
                rho: s.rho.mat().clone(),
                sigma: s.sigma.mat().clone(),
                omega: s.omega,
                report: s.report,
            }
        } else {
            let problem = SaddleProblem {
                rho: StateVar::Free(ConvexStateSet::InSubspace(v.clone())),
                sigma: StateVar::Free(ConvexStateSet::FidelityAtMost { v: v.clone(), bound: 1.0 - e }),
                scale: 1.0 / (2.0 * e),
                rho_start: Some(rho_v.mat().clone()),
                sigma_start: Some(v.complement().uniform_state().mat().clone()),
            };
            let sc = SolverConfig { max_iter: cfg.max_iter.min(SADDLE_ITERS), ..cfg.clone() };
            let sol = saddle(class, &problem, &sc)?;
            VisPoint {
                eps: e,
                dual: sol.value,
                rho: sol.rho,
                sigma: sol.sigma,
                omega: sol.maximizer,
                report: SolveReport { iterations: sol.iterations, converged: sol.converged, ..Default::default() },
            }
        };
        points.push(p);
    }
    // strategies usable as primal certificates at every eps
    let mut strategies: Vec<CMat> = points.iter().map(|p| p.omega.clone()).collect();
    strategies.extend(known_strategies(class, v).into_iter().map(|s| s.omega));
    let primal = |om: &CMat, e: f64| (optim::alpha_on(om, v) - beta_eps(om, v, e).0) / e;
    let exact = class.is_exact();
    let mut out = Vec::new();
    for &e in grid {
        // dual pooling: a pair at eps' >= eps mixed with rho keeps its value
        let best = points
            .iter()
            .filter(|p| p.eps >= e - 1e-15)
            .min_by(|a, b| a.dual.total_cmp(&b.dual))
            .expect("grid point itself qualifies");
        let keep = e / best.eps;
        let sigma = &best.sigma * c64(keep, 0.0) + &best.rho * c64(1.0 - keep, 0.0);
        // primal pooling: gamma is non-decreasing, so any eps'' <= eps helps
        let (lower, omega) = strategies
            .iter()
            .flat_map(|om| grid.iter().filter(|&&e2| e2 <= e).map(move |&e2| (primal(om, e2), om)))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("nonempty");
        let estimate = if exact { Estimate::Exact } else { Estimate::HeuristicLowerBound };
        let value = if exact { best.dual.max(lower) } else { best.dual };
        let mut r = QuantityResult::new(QuantityName::GammaEps, class, value, estimate);
        r.eps = Some(e);
        r.lower = Some(lower);
        if exact {
            r.upper = Some(value);
        }
        r.witnesses = Witnesses::states(dims, &best.rho, &sigma).with_strategy(dims, omega);
        r.report = Some(best.report.clone());
        if !exact {
            r.notes.push("inner maximization is heuristic; witnesses are not certified".into());
        }
        out.push(r);
    }
    Ok(out)
}

pub fn gamma_eps(class: &MeasurementClass, v: &Subspace, eps: f64, cfg: &SolverConfig) -> Result<QuantityResult> {
    Ok(gamma_eps_grid(class, v, &[eps], cfg)?.remove(0))
}

/// Spectral gap `max (a - t)` over universal strategies in the class.
pub fn gamma_hat(class: &MeasurementClass, v: &Subspace, cfg: &SolverConfig) -> Result<QuantityResult> {
    check_subspace(class, v)?;
    let dims = v.dims();
    if let ClassKind::Full = class.kind {
        let mut r = QuantityResult::exact_one(QuantityName::GammaHat, class);
        r.witnesses.strategy = Some(MatrixJson::from_mat(v.projector(), dims));
        return Ok(r);
    }
    if let Some(spec) = class.feasible_set() {
        let g = spectral_gap_program(&spec, v, cfg)?;
        let mut r = QuantityResult::new(QuantityName::GammaHat, class, g.value, Estimate::Exact);
        r.lower = Some(g.value);
        r.witnesses.strategy = Some(MatrixJson::from_mat(&g.omega, dims));
        r.report = Some(g.report);
        return Ok(r);
    }
    let n = v.ambient_dim();
    let mut best = (0.0, identity(n) * c64(0.5, 0.0), "I/2".to_string());
    for s in known_strategies(class, v) {
        if s.universal && s.gap > best.0 {
            let label = match &s.certificate {
                crate::strategies::StrategyCertificate::Constructive { description } => description.clone(),
                _ => "constructed".into(),
            };
            best = (s.gap, s.omega.clone(), label);
        }
    }
    let mut r = QuantityResult::new(QuantityName::GammaHat, class, best.0, Estimate::HeuristicLowerBound);
    r.lower = Some(best.0);
    r.witnesses.strategy = Some(MatrixJson::from_mat(&best.1, dims));
    r.report = Some(SolveReport::exact());
    r.notes.push(format!("lower bound from strategy: {}", best.2));
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationReport {
    pub eps: f64,
    pub s: f64,
    /// `min tr(Omega (rho - sigma))` over `rho in V`, `tr(sigma Pi) <= 1 - eps`.
    pub hypothesis_value: f64,
    pub hypothesis_met: bool,
    /// `min tr(Omega (rho - sigma))` over `rho in V`, `sigma` on the complement.
    pub separation: f64,
    pub delta1_norm: f64,
    pub delta2_norm: f64,
    /// `sqrt(eps/(1 - eps)) / 2`.
    pub threshold1: f64,
    /// `eps / (1 - eps)`.
    pub threshold2: f64,
    pub in_box: bool,
    /// Conclusions, asserted only when the hypothesis holds.
    pub separation_ok: bool,
    pub delta1_ok: bool,
    pub delta2_ok: bool,
    pub pass: bool,
    pub note: String,
}

/// Checks the deviation bounds implied by a visibility lower bound `eps s`.
pub fn lemma1_check(omega: &CMat, v: &Subspace, eps: f64, s: f64) -> Result<DeviationReport> {
    if omega.nrows() != v.ambient_dim() || omega.ncols() != v.ambient_dim() {
        return Err(QsvError::Shape("strategy and subspace dimensions differ".into()));
    }
    if !(eps > 0.0 && eps < 1.0 && s > 0.0 && s < 1.0) {
        return Err(QsvError::Domain(format!("need eps, s in (0, 1); got eps = {eps}, s = {s}")));
    }
    let defect = qmath::hermitian_defect(omega);
    if defect > qmath::HERM_TOL_OP {
        return Err(QsvError::NotHermitian(defect));
    }
    let omega = qmath::hermitian_part(omega);
    let ev = qmath::eigvalsh(&omega);
    let in_box = ev[0] <= 1.0 + 1e-12 && ev[ev.len() - 1] >= -1e-12;
    let alpha = optim::alpha_on(&omega, v);
    let hypothesis_value = alpha - beta_eps(&omega, v, eps).0;
    let separation = alpha - beta_eps(&omega, v, 1.0).0;
    let (d1, d2) = deviation_blocks(&omega, v);
    let delta1_norm = qmath::op_norm_general(&d1);
    let delta2_norm = qmath::op_norm_herm(&d2);
    let threshold1 = 0.5 * (eps / (1.0 - eps)).sqrt();
    let threshold2 = eps / (1.0 - eps);
    let hypothesis_met = in_box && hypothesis_value > eps * s;
    let separation_ok = separation > s;
    let delta1_ok = delta1_norm < threshold1;
    let delta2_ok = delta2_norm < threshold2;
    let pass = !hypothesis_met || (separation_ok && delta1_ok && delta2_ok);
    let note = if !in_box {
        "strategy leaves the box 0 <= Omega <= I; hypothesis not evaluated".to_string()
    } else if hypothesis_met {
        "hypothesis met; conclusions asserted".to_string()
    } else {
        "hypothesis not met".to_string()
    };
    Ok(DeviationReport {
        eps,
        s,
        hypothesis_value,
        hypothesis_met,
        separation,
        delta1_norm,
        delta2_norm,
        threshold1,
        threshold2,
        in_box,
        separation_ok,
        delta1_ok,
        delta2_ok,
        pass,
        note,
    })
}

/// `f(eps, eps') = ((1 - eps + sqrt(1 - eps)) / eps') ((eps' - eps) / (1 - eps))`.
pub fn continuity_bound(eps: f64, eps_prime: f64) -> f64 {
    ((1.0 - eps + (1.0 - eps).sqrt()) / eps_prime) * ((eps_prime - eps) / (1.0 - eps))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub eps: f64,
    pub eps_prime: f64,
    /// `gamma(eps')`.
    pub lhs: f64,
    /// `gamma(eps) + f(eps, eps') + slack`.
    pub rhs: f64,
    pub f: f64,
    pub pass: bool,
}

/// `gamma(eps') <= gamma(eps) + f(eps, eps')` for `eps < eps'`.
pub fn continuity_check(class: &MeasurementClass, v: &Subspace, eps: f64, eps_prime: f64, cfg: &SolverConfig) -> Result<ContinuityReport> {
    if !(eps > 0.0 && eps < eps_prime && eps_prime <= 1.0) {
        return Err(QsvError::Domain(format!("need 0 < eps < eps' <= 1; got {eps}, {eps_prime}")));
    }
    if !class.is_exact() {
        return Err(QsvError::Domain("continuity check needs a class with exact norms".into()));
    }
    let g = gamma_eps_grid(class, v, &[eps, eps_prime], cfg)?;
    let f = continuity_bound(eps, eps_prime);
    let lhs = g[1].value;
    let rhs = g[0].value + f + 2.0 * cfg.tolerance + 1e-6;
    Ok(ContinuityReport { eps, eps_prime, lhs, rhs, f, pass: lhs <= rhs })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremalReport {
    pub trials: usize,
    pub rank: usize,
    pub min_gamma_hat: f64,
    pub min_mu_one: f64,
    /// `min gamma_hat - min mu(1)`.
    pub gap: f64,
    /// `min gamma_hat >= min mu(1) - tolerance`.
    pub ordering_ok: bool,
    /// Whether the two minima agree within tolerance.
    pub equality_holds: bool,
    pub tolerance: f64,
    pub argmin_subspace: MatrixJson,
    pub argmin_state: MatrixJson,
}

fn perturb_basis(basis: &CMat, step: f64, rng: &mut rand_chacha::ChaCha8Rng) -> CMat {
    // exp(i step H) for a random Hermitian H, via its eigendecomposition
    let n = basis.nrows();
    let g = qmath::complex_gaussian_matrix(n, n, rng);
    let h = qmath::hermitian_part(&g);
    let e = eigh(&h);
    let phases = CMat::from_diagonal(&qmath::CVec::from_iterator(n, e.values.iter().map(|&l| qmath::C64::from_polar(1.0, step * l))));
    let u = &e.vectors * phases * e.vectors.adjoint();
    u * basis
}

/// Randomized search for the smallest spectral gap over `r`-dimensional
/// subspaces and the smallest `mu(1)` over rank-`r` states, each followed by
/// a local refinement of the best instance.
pub fn extremal_scan(class: &MeasurementClass, r: usize, trials: usize, seed: u64, cfg: &SolverConfig) -> Result<ExtremalReport> {
    let dims = class.dims.clone();
    let n = class.dim();
    class.validate()?;
    if !class.is_exact() || class.feasible_set().is_none() {
        return Err(QsvError::Domain("extremal scan needs a class with a convex description".into()));
    }
    if r == 0 || r >= n {
        return Err(QsvError::Domain(format!("rank {r} is not in 1..{n}")));
    }
    let mut rng = rng_from_seed(seed);
    let gh = |b: &CMat| -> Result<f64> {
        let v = Subspace::new(b.clone(), dims.clone())?;
        Ok(gamma_hat(class, &v, cfg)?.value)
    };
    let mu = |b: &CMat| -> Result<f64> {
        let rho = Subspace::new(b.clone(), dims.clone())?.uniform_state();
        Ok(mu_one(class, &rho, cfg)?.value)
    };
    let mut best_g = (f64::INFINITY, CMat::zeros(n, r));
    let mut best_m = (f64::INFINITY, CMat::zeros(n, r));
    for _ in 0..trials.max(1) {
        let u = haar_unitary_rng(n, &mut rng);
        let b = u.columns(0, r).into_owned();
        let g = gh(&b)?;
        if g < best_g.0 {
            best_g = (g, b.clone());
        }
        let m = mu(&b)?;
        if m < best_m.0 {
            best_m = (m, b);
        }
    }
    let refine = |best: &mut (f64, CMat), f: &dyn Fn(&CMat) -> Result<f64>, rng: &mut rand_chacha::ChaCha8Rng| -> Result<()> {
        let mut step = 0.3;
        let mut fails = 0;
        while step > 1e-4 {
            let cand = perturb_basis(&best.1, step, rng);
            let val = f(&cand)?;
            if val < best.0 {
                *best = (val, cand);
                fails = 0;
            } else {
                fails += 1;
                if fails >= 12 {
                    step *= 0.5;
                    fails = 0;
                }
            }
        }
        Ok(())
    };
    refine(&mut best_g, &gh, &mut rng)?;
    refine(&mut best_m, &mu, &mut rng)?;
    // the best instance of each search seeds the other
    let cross_g = gh(&best_m.1)?;
    if cross_g < best_g.0 {
        best_g = (cross_g, best_m.1.clone());
    }
    let cross_m = mu(&best_g.1)?;
    if cross_m < best_m.0 {
        best_m = (cross_m, best_g.1.clone());
    }
    let tolerance = 1e-3;
    let rho = Subspace::new(best_m.1.clone(), dims.clone())?.uniform_state();
    Ok(ExtremalReport {
        trials,
        rank: r,
        min_gamma_hat: best_g.0,
        min_mu_one: best_m.0,
        gap: best_g.0 - best_m.0,
        ordering_ok: best_g.0 >= best_m.0 - tolerance,
        equality_holds: (best_g.0 - best_m.0).abs() <= tolerance,
        tolerance,
        argmin_subspace: MatrixJson::from_mat(&best_g.1, &dims),
        argmin_state: MatrixJson::from_density(&rho),
    })
}
