//! Euclidean projections onto state sets, boxes and PT cones, and Dykstra's
//! algorithm for their intersections.

use super::sets::{box_project, density_project, psd_project, simplex_project};
use crate::qmath::{self, c64, eigh, inner_re, BipartitionMask, CMat, PtMap};
use crate::states::Subspace;

/// Convex sets of density matrices.
#[derive(Clone, Debug)]
pub enum ConvexStateSet {
    /// All density matrices of the given dimension.
    AllDensities { dim: usize },
    /// Densities with `range(rho)` inside `V`.
    InSubspace(Subspace),
    /// Densities with `tr(sigma Pi_V) <= bound`.
    FidelityAtMost { v: Subspace, bound: f64 },
    /// Densities supported on `V^perp`.
    InComplement(Subspace),
}

fn compressed_density_project(q: &CMat, x: &CMat) -> CMat {
    let b = q.adjoint() * x * q;
    let p = density_project(&b);
    q * p * q.adjoint()
}

impl ConvexStateSet {
    pub fn project(&self, x: &CMat) -> CMat {
        let x = qmath::hermitian_part(x);
        match self {
            ConvexStateSet::AllDensities { .. } => density_project(&x),
            ConvexStateSet::InSubspace(v) => compressed_density_project(v.basis(), &x),
            ConvexStateSet::InComplement(v) => compressed_density_project(&v.complement_basis(), &x),
            ConvexStateSet::FidelityAtMost { v, bound } => fidelity_capped_project(&x, v.projector(), *bound),
        }
    }

    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        let ev = qmath::eigvalsh(x);
        if ev[ev.len() - 1] < -tol || (x.trace().re - 1.0).abs() > tol {
            return false;
        }
        match self {
            ConvexStateSet::AllDensities { .. } => true,
            ConvexStateSet::InSubspace(v) => inner_re(v.projector(), x) >= 1.0 - tol,
            ConvexStateSet::InComplement(v) => inner_re(v.projector(), x) <= tol,
            ConvexStateSet::FidelityAtMost { v, bound } => inner_re(v.projector(), x) <= bound + tol,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexStateSet::AllDensities { dim } => *dim,
            ConvexStateSet::InSubspace(v) | ConvexStateSet::InComplement(v) => v.ambient_dim(),
            ConvexStateSet::FidelityAtMost { v, .. } => v.ambient_dim(),
        }
    }
}

/// Projection onto `{sigma density : tr(sigma Pi) <= bound}`: the density
/// projection of `x - lambda Pi` with the multiplier `lambda >= 0` found by
/// bisection (`tr(Pi sigma(lambda))` is non-increasing in `lambda`).
fn fidelity_capped_project(x: &CMat, pi: &CMat, bound: f64) -> CMat {
    let at = |lam: f64| density_project(&(x - pi * c64(lam, 0.0)));
    let s0 = at(0.0);
    if inner_re(pi, &s0) <= bound {
        return s0;
    }
    let mut hi = 1.0;
    while inner_re(pi, &at(hi)) > bound && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inner_re(pi, &at(mid)) > bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Targets accepted by [`project_onto`].
#[derive(Clone, Debug)]
pub enum ProjectionTarget {
    /// `0 <= M <= I`.
    Box,
    /// `{X : X^{T_K} >= 0}`.
    PtCone { dims: Vec<usize>, mask: BipartitionMask },
    /// `{X : 0 <= X^{T_K} <= I}`.
    PtBox { dims: Vec<usize>, mask: BipartitionMask },
    Psd,
    States(ConvexStateSet),
}

pub fn project_onto(target: &ProjectionTarget, x: &CMat) -> CMat {
    let x = qmath::hermitian_part(x);
    match target {
        ProjectionTarget::Box => box_project(&x),
        ProjectionTarget::Psd => psd_project(&x),
        ProjectionTarget::PtCone { dims, mask } => {
            let map = PtMap::new(dims, mask);
            map.apply(&psd_project(&map.apply(&x)))
        }
        ProjectionTarget::PtBox { dims, mask } => {
            let map = PtMap::new(dims, mask);
            map.apply(&box_project(&map.apply(&x)))
        }
        ProjectionTarget::States(s) => s.project(&x),
    }
}

/// Distance from `x` to a target, measured after projecting.
pub fn distance_to(target: &ProjectionTarget, x: &CMat) -> f64 {
    qmath::frob_norm(&(project_onto(target, x) - x))
}

#[derive(Clone, Debug)]
pub struct DykstraResult {
    pub point: CMat,
    /// Largest distance from the final point to any individual set.
    pub residual: f64,
    pub iterations: usize,
}

/// Dykstra's alternating projections; converges to the projection of `x`
/// onto the intersection of the targets.
pub fn project_intersection(targets: &[ProjectionTarget], x: &CMat, max_iter: usize, tol: f64) -> DykstraResult {
    let n = x.nrows();
    let mut cur = qmath::hermitian_part(x);
    let mut corr = vec![CMat::zeros(n, n); targets.len()];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        let prev = cur.clone();
        for (t, p) in targets.iter().zip(corr.iter_mut()) {
            let y = &cur + &*p;
            let next = project_onto(t, &y);
            *p = y - &next;
            cur = next;
        }
        let change = qmath::frob_norm(&(&cur - &prev));
        if change < tol {
            residual = targets.iter().map(|t| distance_to(t, &cur)).fold(0.0, f64::max);
            if residual < tol {
                break;
            }
        }
    }
    if residual.is_infinite() {
        residual = targets.iter().map(|t| distance_to(t, &cur)).fold(0.0, f64::max);
    }
    DykstraResult { point: cur, residual, iterations }
}

/// Projects a real vector of eigenvalues onto the probability simplex.
pub fn eigen_simplex(values: &[f64]) -> Vec<f64> {
    simplex_project(values, 1.0)
}

/// `sigma` moved along the segment towards `sigma_perp` until
/// `tr(sigma Pi) <= bound` holds.
pub fn mix_into_cap(sigma: &CMat, sigma_perp: &CMat, pi: &CMat, bound: f64) -> CMat {
    let f = inner_re(pi, sigma);
    if f <= bound {
        return sigma.clone();
    }
    let g = inner_re(pi, sigma_perp);
    let t = ((f - bound) / (f - g)).clamp(0.0, 1.0);
    sigma * c64(1.0 - t, 0.0) + sigma_perp * c64(t, 0.0)
}

/// Spectral decomposition helper reused by callers that need the positive
/// and negative parts of a Hermitian matrix.
pub fn split_parts(x: &CMat, thresh: f64) -> (CMat, CMat) {
    let e = eigh(x);
    let pos = e.map(|l| if l > thresh { l } else { 0.0 });
    let neg = e.map(|l| if l < -thresh { -l } else { 0.0 });
    (pos, neg)
}
