//! Convex optimization over binary-measurement sets and state sets.
//!
//! Linear objectives over `{0 <= M <= I} ∩ PT boxes` (optionally with the
//! universal-strategy equalities) are solved with consensus ADMM. Reported
//! values are always evaluated at an exactly feasible point obtained by
//! polishing the solver output, so they are lower bounds on the optimum;
//! where a dual certificate is available an upper bound is reported too.

pub mod admm;
pub mod project;
pub mod saddle;
pub mod sets;

use crate::error::{QsvError, Result};
use crate::qmath::{self, c64, eigh, eigvalsh, identity, inner_re, BipartitionMask, CMat, PtMap};
use crate::states::{DensityMatrix, Subspace};
use admm::{AdmmOutput, AdmmSettings, ConvexSet, Point, Problem};
use serde::{Deserialize, Serialize};
use sets::{Coupling, Epigraph, GroupBox, LinearGraph, Nonnegative, PtBox, SimplexSet, SpectralBox, UniversalAffine};

pub use project::{project_intersection, project_onto, ConvexStateSet, ProjectionTarget};
pub use saddle::{saddle_solve, SaddleProblem, SaddleResult, StateVar};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-7, max_iter: 20_000, restarts: 16, seed: 0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iter == 0 {
            return Err(QsvError::Domain("solver tolerance must be positive and max_iter at least 1".into()));
        }
        Ok(())
    }

    fn admm(&self) -> AdmmSettings {
        AdmmSettings { tol: self.tolerance, max_iter: self.max_iter, ..AdmmSettings::default() }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Largest constraint violation of the raw solver iterate.
    pub raw_violation: f64,
    /// Weight of `I/2` mixed in to make the iterate exactly feasible.
    pub polish_weight: f64,
}

impl SolveReport {
    fn from_admm(out: &AdmmOutput, raw_violation: f64, polish_weight: f64) -> Self {
        SolveReport {
            iterations: out.iterations,
            primal_residual: out.primal_residual,
            dual_residual: out.dual_residual,
            converged: out.converged,
            raw_violation,
            polish_weight,
        }
    }

    pub fn exact() -> Self {
        SolveReport { converged: true, ..Default::default() }
    }
}

/// Convex hull of subset sums drawn from one of several POVMs:
/// `M = sum_{g,i} x_{g,i} E_{g,i}` with `0 <= x_{g,i} <= p_g` and `p` a
/// probability vector over the POVMs `g`.
#[derive(Clone, Debug)]
pub struct Polytope {
    pub groups: Vec<Vec<CMat>>,
}

impl Polytope {
    pub fn n_scalars(&self) -> usize {
        self.groups.iter().map(|g| g.len() + 1).sum()
    }

    fn elements(&self) -> Vec<CMat> {
        self.groups.iter().flatten().cloned().collect()
    }

    /// Scalar layout: all `x` first (group by group), then the `p`.
    fn layout(&self, offset: usize) -> (Vec<usize>, Vec<(Vec<usize>, usize)>, Vec<usize>) {
        let nx: usize = self.groups.iter().map(|g| g.len()).sum();
        let mut xs = Vec::new();
        let mut groups = Vec::new();
        let mut ps = Vec::new();
        let mut k = offset;
        for (gi, g) in self.groups.iter().enumerate() {
            let idx: Vec<usize> = (k..k + g.len()).collect();
            k += g.len();
            xs.extend_from_slice(&idx);
            let p = offset + nx + gi;
            ps.push(p);
            groups.push((idx, p));
        }
        (xs, groups, ps)
    }

    fn start(&self) -> Vec<f64> {
        let w = 1.0 / self.groups.len() as f64;
        let mut v: Vec<f64> = self.groups.iter().flat_map(|g| vec![0.5 * w; g.len()]).collect();
        v.extend(std::iter::repeat(w).take(self.groups.len()));
        v
    }

    /// Exact member built from (possibly infeasible) scalars.
    fn member(&self, scalars: &[f64]) -> CMat {
        let nx: usize = self.groups.iter().map(|g| g.len()).sum();
        let p = sets::simplex_project(&scalars[nx..nx + self.groups.len()], 1.0);
        let n = self.groups[0][0].nrows();
        let mut m = CMat::zeros(n, n);
        let mut k = 0;
        for (gi, g) in self.groups.iter().enumerate() {
            for e in g {
                m += e * c64(scalars[k].clamp(0.0, p[gi]), 0.0);
                k += 1;
            }
        }
        m
    }
}

/// Constraint set for a binary measurement operator `M`.
#[derive(Clone, Debug)]
pub struct FeasibleSetSpec {
    pub dims: Vec<usize>,
    /// Cuts `K` with `0 <= M^{T_K} <= I`.
    pub pt_masks: Vec<BipartitionMask>,
    /// Projector `Pi` for the equalities `Pi M Pi = a Pi`, `(I - Pi) M Pi = 0`.
    pub universal: Option<CMat>,
    /// Replaces the spectral box and cuts when present.
    pub polytope: Option<Polytope>,
}

impl FeasibleSetSpec {
    pub fn full(dims: &[usize]) -> Self {
        FeasibleSetSpec { dims: dims.to_vec(), pt_masks: Vec::new(), universal: None, polytope: None }
    }

    pub fn ppt(dims: &[usize], masks: Vec<BipartitionMask>) -> Self {
        FeasibleSetSpec { dims: dims.to_vec(), pt_masks: masks, universal: None, polytope: None }
    }

    pub fn polytope(dims: &[usize], groups: Vec<Vec<CMat>>) -> Self {
        FeasibleSetSpec { dims: dims.to_vec(), pt_masks: Vec::new(), universal: None, polytope: Some(Polytope { groups }) }
    }

    fn aux_scalars(&self) -> usize {
        self.polytope.as_ref().map_or(0, |p| p.n_scalars())
    }

    fn aux_start(&self) -> Vec<f64> {
        self.polytope.as_ref().map_or(Vec::new(), |p| p.start())
    }

    pub fn with_universal(mut self, pi: CMat) -> Self {
        self.universal = Some(pi);
        self
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let n = qmath::dims_product(&self.dims)?;
        for k in &self.pt_masks {
            if k.parties().iter().any(|&p| p >= self.dims.len()) {
                return Err(QsvError::Shape(format!("cut {:?} outside shape {:?}", k.parties(), self.dims)));
            }
        }
        if let Some(poly) = &self.polytope {
            if poly.groups.is_empty() || poly.groups.iter().flatten().any(|e| e.nrows() != n || e.ncols() != n) {
                return Err(QsvError::Shape("polytope elements do not match the dimension".into()));
            }
        }
        if let Some(pi) = &self.universal {
            if pi.nrows() != n || pi.ncols() != n {
                return Err(QsvError::Shape("projector dimension does not match".into()));
            }
            if (pi * pi - pi).norm() > 1e-9 || qmath::hermitian_defect(pi) > 1e-10 {
                return Err(QsvError::Domain("equality constraint needs an orthogonal projector".into()));
            }
            let r = pi.trace().re;
            if r < 0.5 || r > n as f64 - 0.5 {
                return Err(QsvError::Domain("equality constraint needs a nontrivial proper subspace".into()));
            }
        }
        Ok(())
    }

    fn pt_maps(&self) -> Vec<PtMap> {
        self.pt_masks.iter().map(|k| PtMap::new(&self.dims, k)).collect()
    }

    /// Largest violation of the constraints by `m` (0 when feasible).
    pub fn violation(&self, m: &CMat) -> f64 {
        let (box_v, _) = self.box_violation(m, &self.pt_maps());
        let mut v = box_v;
        if let Some(pi) = &self.universal {
            v = v.max(universal_defect(pi, m));
        }
        v
    }

    fn box_violation(&self, m: &CMat, maps: &[PtMap]) -> (f64, f64) {
        let ev = eigvalsh(m);
        let mut r = (-ev[ev.len() - 1]).max(ev[0] - 1.0).max(0.0);
        let mut worst_pt: f64 = 0.0;
        for map in maps {
            let e = eigvalsh(&map.apply(m));
            let rv = (-e[e.len() - 1]).max(e[0] - 1.0).max(0.0);
            worst_pt = worst_pt.max(rv);
            r = r.max(rv);
        }
        (r, worst_pt)
    }

    /// Makes `m` exactly feasible: projects onto the equality constraints and
    /// mixes with `I/2` just enough to remove eigenvalue violations.
    /// Returns the repaired matrix, the raw violation and the mixing weight.
    pub fn repair(&self, m: &CMat) -> (CMat, f64, f64) {
        let n = m.nrows();
        let mut mm = qmath::hermitian_part(m);
        let mut raw = 0.0;
        if let Some(pi) = &self.universal {
            raw = universal_defect(pi, &mm);
            mm = UniversalAffine::project_matrix(pi, &mm);
        }
        let (r, _) = self.box_violation(&mm, &self.pt_maps());
        let raw = raw.max(r);
        if r == 0.0 {
            return (mm, raw, 0.0);
        }
        let r = r * (1.0 + 1e-9) + 1e-15;
        let theta = 2.0 * r / (1.0 + 2.0 * r);
        let out = mm * c64(1.0 - theta, 0.0) + identity(n) * c64(0.5 * theta, 0.0);
        (out, raw, theta)
    }

    /// Makes the ADMM output exactly feasible. Polytope specs rebuild the
    /// operator from the consensus scalars starting at `offset`.
    fn repair_output(&self, out: &AdmmOutput, m: &CMat, offset: usize) -> (CMat, f64, f64) {
        match &self.polytope {
            None => self.repair(m),
            Some(poly) => {
                let mut mm = poly.member(&out.x.scalars[offset..]);
                let mut raw = qmath::frob_norm(&(&mm - m));
                if let Some(pi) = &self.universal {
                    raw = raw.max(universal_defect(pi, &mm));
                    mm = UniversalAffine::project_matrix(pi, &mm);
                }
                (mm, raw, 0.0)
            }
        }
    }

    fn push_sets(&self, sets: &mut Vec<Box<dyn ConvexSet>>, mat: usize, offset: usize) {
        if let Some(poly) = &self.polytope {
            let (xs, groups, ps) = poly.layout(offset);
            sets.push(Box::new(LinearGraph::new(mat, xs, poly.elements())));
            sets.push(Box::new(GroupBox::new(groups)));
            sets.push(Box::new(SimplexSet::new(ps)));
            return;
        }
        sets.push(Box::new(SpectralBox::new(mat)));
        for (k, map) in self.pt_masks.iter().zip(self.pt_maps()) {
            sets.push(Box::new(PtBox::new(mat, map, format!("{:?}", k.parties()))));
        }
    }
}

/// Appends the spec's auxiliary scalars (zero objective) to a problem whose
/// own scalars come first.
fn with_aux(spec: &FeasibleSetSpec, mut p: Problem) -> Problem {
    let extra = spec.aux_scalars();
    if extra > 0 {
        p.n_scalars += extra;
        p.start.scalars.extend(spec.aux_start());
        p.objective.scalars.extend(std::iter::repeat(0.0).take(extra));
    }
    p
}

/// `max(||(I - Pi) M Pi||, ||Pi M Pi - a Pi||)` with `a` the trace average.
pub fn universal_defect(pi: &CMat, m: &CMat) -> f64 {
    let n = pi.nrows();
    let pp = identity(n) - pi;
    let r = pi.trace().re.round();
    let a = inner_re(pi, m) / r;
    let off = qmath::op_norm_general(&(&pp * m * pi));
    let inb = qmath::op_norm_herm(&(pi * m * pi - pi * c64(a, 0.0)));
    off.max(inb)
}

#[derive(Clone, Debug)]
pub struct LinearSolve {
    /// Objective at the exactly feasible maximizer (a lower bound).
    pub value: f64,
    pub maximizer: CMat,
    /// Dual certificate (an upper bound), when available.
    pub upper_bound: Option<f64>,
    pub report: SolveReport,
}

impl LinearSolve {
    pub fn gap(&self) -> Option<f64> {
        self.upper_bound.map(|u| u - self.value)
    }
}

fn positive_part_sum(m: &CMat) -> f64 {
    eigvalsh(m).iter().map(|&l| l.max(0.0)).sum()
}

/// `max tr(M objective)` over the feasible set.
pub fn maximize_linear(spec: &FeasibleSetSpec, objective: &CMat, cfg: &SolverConfig) -> Result<LinearSolve> {
    spec.validate()?;
    cfg.validate()?;
    let n = spec.dim();
    if objective.nrows() != n || objective.ncols() != n {
        return Err(QsvError::Shape(format!("objective is {}x{}, expected {n}", objective.nrows(), objective.ncols())));
    }
    let defect = qmath::hermitian_defect(objective);
    if defect > qmath::HERM_TOL_OP {
        return Err(QsvError::NotHermitian(defect));
    }
    let obj = qmath::hermitian_part(objective);
    let half = identity(n) * c64(0.5, 0.0);
    if qmath::max_abs_entry(&obj) == 0.0 {
        return Ok(LinearSolve { value: 0.0, maximizer: half, upper_bound: Some(0.0), report: SolveReport::exact() });
    }
    if spec.pt_masks.is_empty() && spec.universal.is_none() && spec.polytope.is_none() {
        let e = eigh(&obj);
        let m = e.map(|l| if l > 0.0 { 1.0 } else { 0.0 });
        let v = e.values.iter().map(|&l| l.max(0.0)).sum();
        return Ok(LinearSolve { value: v, maximizer: m, upper_bound: Some(v), report: SolveReport::exact() });
    }
    maximize_linear_admm(spec, &obj, cfg, None).map(|(s, _)| s)
}

/// ADMM path of [`maximize_linear`], also used directly for warm starts.
pub fn maximize_linear_admm(
    spec: &FeasibleSetSpec,
    obj: &CMat,
    cfg: &SolverConfig,
    warm: Option<&AdmmOutput>,
) -> Result<(LinearSolve, AdmmOutput)> {
    let n = spec.dim();
    let mut sets: Vec<Box<dyn ConvexSet>> = Vec::new();
    let n_scalars = usize::from(spec.universal.is_some());
    spec.push_sets(&mut sets, 0, n_scalars);
    if let Some(pi) = &spec.universal {
        sets.push(Box::new(UniversalAffine::new(0, 0, pi.clone())));
    }
    let mut start = Point::zeros(&[n], n_scalars);
    start.mats[0] = identity(n) * c64(0.5, 0.0);
    if n_scalars == 1 {
        start.scalars[0] = 0.5;
    }
    let mut objective = Point::zeros(&[n], n_scalars);
    objective.mats[0] = obj.clone();
    let problem = with_aux(spec, Problem { mat_dims: vec![n], n_scalars, sets, objective, start });
    let out = admm::solve(&problem, &cfg.admm(), warm);
    let (m, raw, theta) = spec.repair_output(&out, &out.z[0].mats[0], n_scalars);
    let value = inner_re(obj, &m);
    let upper_bound = if spec.universal.is_none() && spec.polytope.is_none() {
        // Weak duality: sum of support functions of multipliers adding up to
        // the objective.
        let mut y_box = obj.clone();
        let mut ub = 0.0;
        for (j, map) in spec.pt_maps().iter().enumerate() {
            let yk = qmath::hermitian_part(&out.y[j + 1].mats[0]);
            y_box -= &yk;
            ub += positive_part_sum(&map.apply(&yk));
        }
        Some(ub + positive_part_sum(&y_box))
    } else {
        None
    };
    let report = SolveReport::from_admm(&out, raw, theta);
    Ok((LinearSolve { value, maximizer: m, upper_bound, report }, out))
}

/// Result of the universal-strategy (spectral gap) program.
#[derive(Clone, Debug)]
pub struct GapSolve {
    pub value: f64,
    pub omega: CMat,
    /// Eigenvalue of `Omega` on the subspace.
    pub a: f64,
    /// Largest eigenvalue of `Omega` on the complement.
    pub t: f64,
    pub report: SolveReport,
}

/// `max a - t` over feasible `Omega` with `Pi Omega Pi = a Pi`,
/// `(I - Pi) Omega Pi = 0`, `(I - Pi) Omega (I - Pi) <= t (I - Pi)`.
pub fn spectral_gap_program(spec: &FeasibleSetSpec, v: &Subspace, cfg: &SolverConfig) -> Result<GapSolve> {
    let spec = FeasibleSetSpec { universal: Some(v.projector().clone()), ..spec.clone() };
    spec.validate()?;
    cfg.validate()?;
    let n = spec.dim();
    let qperp = v.complement_basis();
    let mut sets: Vec<Box<dyn ConvexSet>> = Vec::new();
    spec.push_sets(&mut sets, 0, 2);
    let univ_idx = sets.len();
    sets.push(Box::new(UniversalAffine::new(0, 0, v.projector().clone())));
    sets.push(Box::new(Epigraph::upper(0, 1, qperp.clone())));
    let mut start = Point::zeros(&[n], 2);
    start.mats[0] = identity(n) * c64(0.5, 0.0);
    start.scalars = vec![0.5, 0.5];
    let mut objective = Point::zeros(&[n], 2);
    objective.scalars = vec![1.0, -1.0];
    let problem = with_aux(&spec, Problem { mat_dims: vec![n], n_scalars: 2, sets, objective, start });
    let out = admm::solve(&problem, &cfg.admm(), None);
    let (omega, raw, theta) = spec.repair_output(&out, &out.z[univ_idx].mats[0], 2);
    let a = inner_re(v.projector(), &omega) / v.dim() as f64;
    let t = qmath::lambda_max(&(qperp.adjoint() * &omega * &qperp));
    Ok(GapSolve { value: a - t, omega, a, t, report: SolveReport::from_admm(&out, raw, theta) })
}

/// `max_{sigma >= 0, tr sigma = 1, tr(sigma Pi) <= 1 - eps} tr(Omega sigma)`,
/// evaluated through its one-dimensional dual
/// `min_{z >= 0} lambda_max(Omega - z Pi) + z (1 - eps)`.
/// Returns the value and the minimizing `z` (infinite for `eps = 1`).
pub fn beta_eps(omega: &CMat, v: &Subspace, eps: f64) -> (f64, f64) {
    if eps >= 1.0 {
        let q = v.complement_basis();
        return (qmath::lambda_max(&(q.adjoint() * omega * &q)), f64::INFINITY);
    }
    let pi = v.projector();
    let f = |z: f64| qmath::lambda_max(&(omega - pi * c64(z, 0.0))) + z * (1.0 - eps);
    let ev = eigvalsh(omega);
    let hi = ((ev[0] - ev[ev.len() - 1]) / (1.0 - eps)).max(0.0);
    let f0 = f(0.0);
    if hi == 0.0 {
        return (f0, 0.0);
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut up) = (0.0, hi);
    let mut x1 = up - g * (up - lo);
    let mut x2 = lo + g * (up - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = (f0, 0.0);
    let fh = f(hi);
    if fh < best.0 {
        best = (fh, hi);
    }
    for _ in 0..200 {
        if up - lo <= 1e-14 * (1.0 + hi) {
            break;
        }
        if f1 <= f2 {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - g * (up - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (up - lo);
            f2 = f(x2);
        }
        if f1 < best.0 {
            best = (f1, x1);
        }
        if f2 < best.0 {
            best = (f2, x2);
        }
    }
    best
}

/// `lambda_min` of `Omega` compressed to the subspace.
pub fn alpha_on(omega: &CMat, v: &Subspace) -> f64 {
    qmath::lambda_min(&(v.basis().adjoint() * omega * v.basis()))
}

/// Result of the visibility program together with the states recovered from
/// its multipliers.
#[derive(Clone, Debug)]
pub struct VisibilitySolve {
    /// `(alpha - beta) / eps` at the exactly feasible strategy.
    pub value: f64,
    pub omega: CMat,
    pub alpha: f64,
    pub beta: f64,
    pub rho: DensityMatrix,
    pub sigma: DensityMatrix,
    pub report: SolveReport,
}

/// `max (alpha(Omega) - beta_eps(Omega)) / eps` over feasible `Omega`.
pub fn visibility_program(spec: &FeasibleSetSpec, v: &Subspace, eps: f64, cfg: &SolverConfig) -> Result<VisibilitySolve> {
    spec.validate()?;
    cfg.validate()?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(QsvError::Domain(format!("eps = {eps} is outside (0, 1]")));
    }
    let n = spec.dim();
    let dims = spec.dims.clone();
    let qv = v.basis().clone();
    let mut sets: Vec<Box<dyn ConvexSet>> = Vec::new();
    let own = if eps >= 1.0 { 2 } else { 3 };
    spec.push_sets(&mut sets, 0, own);
    let lower_idx = sets.len();
    sets.push(Box::new(Epigraph::lower(0, 0, qv)));
    let half = identity(n) * c64(0.5, 0.0);
    let (problem, sigma_idx, sigma_mat) = if eps >= 1.0 {
        let qperp = v.complement_basis();
        let idx = sets.len();
        sets.push(Box::new(Epigraph::upper(0, 1, qperp)));
        let mut start = Point::zeros(&[n], 2);
        start.mats[0] = half.clone();
        start.scalars = vec![0.5, 0.5];
        let mut objective = Point::zeros(&[n], 2);
        objective.scalars = vec![1.0, -1.0];
        (Problem { mat_dims: vec![n], n_scalars: 2, sets, objective, start }, idx, 0)
    } else {
        // scalars: a, y, z; matrices: Omega, W = Omega - z Pi
        sets.push(Box::new(Coupling::new(0, 1, 2, v.projector().clone())));
        let idx = sets.len();
        sets.push(Box::new(Epigraph::upper_full(1, 1, n)));
        sets.push(Box::new(Nonnegative::new(2)));
        let mut start = Point::zeros(&[n, n], 3);
        start.mats[0] = half.clone();
        start.mats[1] = half.clone();
        start.scalars = vec![0.5, 0.5, 0.0];
        let mut objective = Point::zeros(&[n, n], 3);
        objective.scalars = vec![1.0, -1.0, -(1.0 - eps)];
        (Problem { mat_dims: vec![n, n], n_scalars: 3, sets, objective, start }, idx, 1)
    };
    let problem = with_aux(spec, problem);
    let out = admm::solve(&problem, &cfg.admm(), None);
    let (omega, raw, theta) = spec.repair_output(&out, &out.z[0].mats[0], own);
    let alpha = alpha_on(&omega, v);
    let (beta, _) = beta_eps(&omega, v, eps);
    let value = (alpha - beta) / eps;
    let rho_raw = -qmath::hermitian_part(&out.y[lower_idx].mats[0]);
    let sigma_raw = qmath::hermitian_part(&out.y[sigma_idx].mats[sigma_mat]);
    let rho = recover_state(&ConvexStateSet::InSubspace(v.clone()), &rho_raw, &dims)?;
    let sigma_set = if eps >= 1.0 {
        ConvexStateSet::InComplement(v.clone())
    } else {
        ConvexStateSet::FidelityAtMost { v: v.clone(), bound: 1.0 - eps }
    };
    let sigma = recover_state(&sigma_set, &sigma_raw, &dims)?;
    Ok(VisibilitySolve { value, omega, alpha, beta, rho, sigma, report: SolveReport::from_admm(&out, raw, theta) })
}

/// Normalizes a multiplier and projects it onto a state set.
fn recover_state(set: &ConvexStateSet, raw: &CMat, dims: &[usize]) -> Result<DensityMatrix> {
    let tr = raw.trace().re;
    let scaled = if tr > 1e-12 { raw / c64(tr, 0.0) } else { raw.clone() };
    let p = set.project(&scaled);
    DensityMatrix::from_approx(&p, dims)
}

#[derive(Clone, Debug)]
pub struct OrthogonalSolve {
    /// `tr(M rho) - lambda_max` of `M` on `range(rho)^perp`, at feasible `M`.
    pub value: f64,
    pub maximizer: CMat,
    pub sigma: DensityMatrix,
    pub report: SolveReport,
}

/// `max_M tr(M rho) - max_{sigma perp rho} tr(M sigma)`, which equals
/// `min_{sigma perp rho} sup_M tr(M (rho - sigma))`.
pub fn orthogonal_program(spec: &FeasibleSetSpec, rho: &DensityMatrix, cfg: &SolverConfig) -> Result<OrthogonalSolve> {
    spec.validate()?;
    cfg.validate()?;
    let n = spec.dim();
    let support = rho.support(1e-10);
    if support.ncols() == n {
        return Err(QsvError::Domain("state has full rank; no orthogonal states exist".into()));
    }
    let range = Subspace::new(support, rho.dims().to_vec())?;
    let qperp = range.complement_basis();
    let mut sets: Vec<Box<dyn ConvexSet>> = Vec::new();
    spec.push_sets(&mut sets, 0, 1);
    let epi = sets.len();
    sets.push(Box::new(Epigraph::upper(0, 0, qperp.clone())));
    let mut start = Point::zeros(&[n], 1);
    start.mats[0] = identity(n) * c64(0.5, 0.0);
    start.scalars[0] = 0.5;
    let mut objective = Point::zeros(&[n], 1);
    objective.mats[0] = rho.mat().clone();
    objective.scalars[0] = -1.0;
    let problem = with_aux(spec, Problem { mat_dims: vec![n], n_scalars: 1, sets, objective, start });
    let out = admm::solve(&problem, &cfg.admm(), None);
    let (m, raw, theta) = spec.repair_output(&out, &out.z[0].mats[0], 1);
    let value = inner_re(rho.mat(), &m) - qmath::lambda_max(&(qperp.adjoint() * &m * &qperp));
    let sigma_raw = qmath::hermitian_part(&out.y[epi].mats[0]);
    let sigma = recover_state(&ConvexStateSet::InComplement(range), &sigma_raw, rho.dims())?;
    Ok(OrthogonalSolve { value, maximizer: m, sigma, report: SolveReport::from_admm(&out, raw, theta) })
}

#[cfg(test)]
mod tests;
