//! Consensus ADMM for maximizing a linear functional over an intersection of
//! closed convex sets, each given by its Euclidean projection.
//!
//! The variable is a [`Point`]: a list of Hermitian matrices plus a list of
//! real scalars, with the real Frobenius inner product.

use crate::qmath::{c64, frob_norm, inner_re, CMat};

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub mats: Vec<CMat>,
    pub scalars: Vec<f64>,
}

impl Point {
    pub fn zeros(mat_dims: &[usize], n_scalars: usize) -> Self {
        Point { mats: mat_dims.iter().map(|&n| CMat::zeros(n, n)).collect(), scalars: vec![0.0; n_scalars] }
    }

    pub fn dot(&self, other: &Point) -> f64 {
        let m: f64 = self.mats.iter().zip(&other.mats).map(|(a, b)| inner_re(a, b)).sum();
        let s: f64 = self.scalars.iter().zip(&other.scalars).map(|(a, b)| a * b).sum();
        m + s
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, f: f64) {
        for m in &mut self.mats {
            *m *= c64(f, 0.0);
        }
        for s in &mut self.scalars {
            *s *= f;
        }
    }
}

/// A closed convex set acting on some components of a [`Point`].
pub trait ConvexSet: Send + Sync {
    /// Indices of the matrix components the set constrains.
    fn mats(&self) -> &[usize];
    /// Indices of the scalar components the set constrains.
    fn scalars(&self) -> &[usize];
    /// Replaces the constrained components of `v` by their projection.
    fn project(&self, v: &mut Point);
    fn name(&self) -> String;
}

pub struct Problem {
    pub mat_dims: Vec<usize>,
    pub n_scalars: usize,
    pub sets: Vec<Box<dyn ConvexSet>>,
    /// Linear objective `<c, x>` to maximize.
    pub objective: Point,
    pub start: Point,
}

#[derive(Clone, Debug)]
pub struct AdmmSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub relaxation: f64,
    pub check_every: usize,
    pub adaptive: bool,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        AdmmSettings { tol: 1e-7, max_iter: 20_000, rho: 1.0, relaxation: 1.6, check_every: 10, adaptive: true }
    }
}

#[derive(Clone, Debug)]
pub struct AdmmOutput {
    /// Consensus iterate.
    pub x: Point,
    /// Per-set projected iterates.
    pub z: Vec<Point>,
    /// Per-set multipliers, scaled so that they sum to the objective.
    pub y: Vec<Point>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    pub rho: f64,
    u: Vec<Point>,
    scale: f64,
}

impl AdmmOutput {
    /// Projected iterate of set `j`.
    pub fn set_point(&self, j: usize) -> &Point {
        &self.z[j]
    }
}

fn touch_counts(p: &Problem) -> (Vec<usize>, Vec<usize>) {
    let mut mc = vec![0; p.mat_dims.len()];
    let mut sc = vec![0; p.n_scalars];
    for s in &p.sets {
        for &i in s.mats() {
            mc[i] += 1;
        }
        for &i in s.scalars() {
            sc[i] += 1;
        }
    }
    (mc, sc)
}

fn restricted_diff_sq(a: &Point, b: &Point, set: &dyn ConvexSet) -> f64 {
    let mut acc = 0.0;
    for &i in set.mats() {
        acc += (&a.mats[i] - &b.mats[i]).iter().map(|x| x.norm_sqr()).sum::<f64>();
    }
    for &i in set.scalars() {
        acc += (a.scalars[i] - b.scalars[i]).powi(2);
    }
    acc
}

/// Runs ADMM; `warm` supplies iterates from a previous run on a problem with
/// the same variable layout and set list.
pub fn solve(p: &Problem, settings: &AdmmSettings, warm: Option<&AdmmOutput>) -> AdmmOutput {
    let (mc, sc) = touch_counts(p);
    assert!(mc.iter().all(|&c| c > 0) && sc.iter().all(|&c| c > 0), "every component must be constrained");
    let m = p.sets.len();
    let mut scale = p.objective.norm();
    if scale == 0.0 {
        scale = 1.0;
    }
    let mut c = p.objective.clone();
    c.scale(1.0 / scale);

    let (mut z, mut u, mut rho) = match warm {
        Some(w) => {
            let ratio = w.scale / scale;
            let mut u = w.u.clone();
            for uj in &mut u {
                uj.scale(ratio);
            }
            (w.z.clone(), u, w.rho)
        }
        None => {
            let mut z = Vec::with_capacity(m);
            for s in &p.sets {
                let mut v = p.start.clone();
                s.project(&mut v);
                z.push(v);
            }
            let u = vec![Point::zeros(&p.mat_dims, p.n_scalars); m];
            (z, u, settings.rho)
        }
    };
    let mut x = p.start.clone();
    let alpha = settings.relaxation;
    let mut iterations = 0;
    let mut primal_residual = f64::INFINITY;
    let mut dual_residual = f64::INFINITY;
    let mut converged = false;

    while iterations < settings.max_iter {
        iterations += 1;
        // consensus update
        for (i, xm) in x.mats.iter_mut().enumerate() {
            xm.fill(c64(0.0, 0.0));
            for (j, s) in p.sets.iter().enumerate() {
                if s.mats().contains(&i) {
                    *xm += &z[j].mats[i] - &u[j].mats[i];
                }
            }
            *xm *= c64(1.0 / mc[i] as f64, 0.0);
            *xm += &c.mats[i] * c64(1.0 / (mc[i] as f64 * rho), 0.0);
        }
        for (i, xs) in x.scalars.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, s) in p.sets.iter().enumerate() {
                if s.scalars().contains(&i) {
                    acc += z[j].scalars[i] - u[j].scalars[i];
                }
            }
            *xs = acc / sc[i] as f64 + c.scalars[i] / (sc[i] as f64 * rho);
        }
        let check = iterations % settings.check_every == 0 || iterations == settings.max_iter;
        let mut r2 = 0.0;
        let mut s2 = 0.0;
        for (j, s) in p.sets.iter().enumerate() {
            let mut v = z[j].clone();
            for &i in s.mats() {
                let xh = &x.mats[i] * c64(alpha, 0.0) + &z[j].mats[i] * c64(1.0 - alpha, 0.0);
                v.mats[i] = xh + &u[j].mats[i];
            }
            for &i in s.scalars() {
                let xh = alpha * x.scalars[i] + (1.0 - alpha) * z[j].scalars[i];
                v.scalars[i] = xh + u[j].scalars[i];
            }
            let before = v.clone();
            s.project(&mut v);
            for &i in s.mats() {
                u[j].mats[i] = &before.mats[i] - &v.mats[i];
            }
            for &i in s.scalars() {
                u[j].scalars[i] = before.scalars[i] - v.scalars[i];
            }
            if check {
                r2 += restricted_diff_sq(&x, &v, s.as_ref());
                s2 += restricted_diff_sq(&z[j], &v, s.as_ref());
            }
            z[j] = v;
        }
        if check {
            primal_residual = r2.sqrt();
            dual_residual = rho * s2.sqrt();
            if primal_residual < settings.tol && dual_residual < settings.tol {
                converged = true;
                break;
            }
            if settings.adaptive {
                let f = if primal_residual > 10.0 * dual_residual {
                    2.0
                } else if dual_residual > 10.0 * primal_residual {
                    0.5
                } else {
                    1.0
                };
                if f != 1.0 {
                    rho *= f;
                    for uj in &mut u {
                        uj.scale(1.0 / f);
                    }
                }
            }
        }
    }
    let y = u
        .iter()
        .map(|uj| {
            let mut y = uj.clone();
            y.scale(rho * scale);
            y
        })
        .collect();
    AdmmOutput { x, z, y, iterations, primal_residual, dual_residual, converged, rho, u, scale }
}

/// Frobenius distance between two matrices.
pub fn mat_dist(a: &CMat, b: &CMat) -> f64 {
    frob_norm(&(a - b))
}
