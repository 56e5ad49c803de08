//! Rank-one t-design POVMs: the qubit stabilizer construction and a
//! numerical frame-potential construction for the general case.
//!
//! Elements are `w_i |psi_i><psi_i|`; the design condition is
//! `sum_i w_i |psi_i><psi_i|^{(x) t} = d / dim(Sym^t) * Pi_sym`.

use crate::error::{QsvError, Result};
use crate::qmath::{self, c64, haar_state_rng, rng_from_seed, CMat, CVec};
use crate::states::{binomial, symmetric_projector};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const EXACT_TOL: f64 = 1e-10;
pub const NUMERIC_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DesignPovm {
    pub dim: usize,
    pub t: usize,
    /// Unit vectors, stored as (re, im) pairs.
    pub vectors: Vec<Vec<(f64, f64)>>,
    pub weights: Vec<f64>,
    pub tolerance: f64,
    pub residual: f64,
}

impl DesignPovm {
    pub fn from_parts(dim: usize, t: usize, vectors: &[CVec], weights: Vec<f64>, tolerance: f64) -> Result<Self> {
        if vectors.len() != weights.len() || vectors.is_empty() {
            return Err(QsvError::Construction("need one weight per vector".into()));
        }
        for v in vectors {
            if v.len() != dim {
                return Err(QsvError::Shape(format!("vector of length {} in dimension {dim}", v.len())));
            }
        }
        let vecs = vectors.iter().map(|v| v.iter().map(|z| (z.re, z.im)).collect()).collect();
        let mut p = DesignPovm { dim, t, vectors: vecs, weights, tolerance, residual: f64::NAN };
        p.residual = frame_residual(&p.states(), &p.weights, dim, t);
        Ok(p)
    }

    pub fn states(&self) -> Vec<CVec> {
        self.vectors.iter().map(|v| CVec::from_iterator(v.len(), v.iter().map(|&(a, b)| c64(a, b)))).collect()
    }

    /// `w_i |psi_i><psi_i|`.
    pub fn elements(&self) -> Vec<CMat> {
        self.states().iter().zip(&self.weights).map(|(v, &w)| v * v.adjoint() * c64(w, 0.0)).collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `||sum_i phi_i - I||_F`.
    pub fn unity_defect(&self) -> f64 {
        let mut s = -CMat::identity(self.dim, self.dim);
        for e in self.elements() {
            s += e;
        }
        qmath::frob_norm(&s)
    }
}

/// The six qubit stabilizer states with weight `1/3`: an exact 3-design.
pub fn stabilizer_povm() -> DesignPovm {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: (f64, f64), b: (f64, f64)| CVec::from_vec(vec![c64(a.0, a.1), c64(b.0, b.1)]);
    let states = vec![
        v((1.0, 0.0), (0.0, 0.0)),
        v((0.0, 0.0), (1.0, 0.0)),
        v((s, 0.0), (s, 0.0)),
        v((s, 0.0), (-s, 0.0)),
        v((s, 0.0), (0.0, s)),
        v((s, 0.0), (0.0, -s)),
    ];
    DesignPovm::from_parts(2, 3, &states, vec![1.0 / 3.0; 6], EXACT_TOL).expect("stabilizer states")
}

/// `||sum w_i w_j |<psi_i|psi_j>|^{2t} - 2 c sum w_i + c^2 D||^{1/2}` with
/// `c = d / D`, `D = dim Sym^t(C^d)`.
fn frame_residual(states: &[CVec], w: &[f64], d: usize, t: usize) -> f64 {
    frame_objective(states, w, d, t).max(0.0).sqrt()
}

fn frame_objective(states: &[CVec], w: &[f64], d: usize, t: usize) -> f64 {
    let big_d = binomial(t + d - 1, t) as f64;
    let c = d as f64 / big_d;
    let mut fp = 0.0;
    for i in 0..states.len() {
        for j in 0..states.len() {
            let g = states[i].dotc(&states[j]).norm_sqr();
            fp += w[i] * w[j] * g.powi(t as i32);
        }
    }
    fp - 2.0 * c * w.iter().sum::<f64>() + c * c * big_d
}

/// Frame-potential descent over `n` weighted directions.
fn descend(d: usize, t: usize, n: usize, seed: u64, max_iter: usize) -> (Vec<CVec>, Vec<f64>, f64) {
    let mut rng = rng_from_seed(seed);
    let mut x: Vec<CVec> = (0..n).map(|_| haar_state_rng(d, &mut rng)).collect();
    let mut w = vec![d as f64 / n as f64; n];
    // tiny weight jitter so symmetric starts can break ties
    for wi in &mut w {
        *wi *= 1.0 + 1e-3 * (rng.gen::<f64>() - 0.5);
    }
    let ws: f64 = w.iter().sum();
    for wi in &mut w {
        *wi *= d as f64 / ws;
    }
    let big_d = binomial(t + d - 1, t) as f64;
    let c = d as f64 / big_d;
    let mut f = frame_objective(&x, &w, d, t);
    let mut step = 1.0;
    for _ in 0..max_iter {
        if f < 1e-26 {
            break;
        }
        let mut gx = vec![CVec::zeros(d); n];
        let mut gw = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let g = x[i].dotc(&x[j]);
                let a = g.norm_sqr();
                gw[i] += 2.0 * w[j] * a.powi(t as i32);
                if i != j {
                    let coef = 4.0 * t as f64 * w[i] * w[j] * a.powi(t as i32 - 1);
                    gx[i] += &x[j] * (g.conj() * coef);
                }
            }
            gw[i] -= 2.0 * c;
            // tangent projection
            let r = x[i].dotc(&gx[i]).re;
            let xi = x[i].clone();
            gx[i] -= xi * c64(r, 0.0);
        }
        let mean = gw.iter().sum::<f64>() / n as f64;
        for g in &mut gw {
            *g -= mean;
        }
        let gnorm2: f64 = gx.iter().map(|g| g.norm_squared()).sum::<f64>() + gw.iter().map(|g| g * g).sum::<f64>();
        if gnorm2 < 1e-32 {
            break;
        }
        loop {
            let xn: Vec<CVec> = x.iter().zip(&gx).map(|(a, g)| (a - g * c64(step, 0.0)).normalize()).collect();
            let mut wn: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| (a - step * g).max(1e-12)).collect();
            let s: f64 = wn.iter().sum();
            for v in &mut wn {
                *v *= d as f64 / s;
            }
            let fnew = frame_objective(&xn, &wn, d, t);
            if fnew < f - 1e-4 * step * gnorm2 || step < 1e-14 {
                x = xn;
                w = wn;
                f = fnew;
                break;
            }
            step *= 0.5;
        }
        step *= 1.5;
    }
    (x, w, f.max(0.0).sqrt())
}

/// Rescales elements so that they sum to the identity exactly:
/// `phi_i -> S^{-1/2} phi_i S^{-1/2}` with `S = sum_i phi_i`.
fn fix_unity(x: &[CVec], w: &[f64], d: usize) -> (Vec<CVec>, Vec<f64>) {
    let mut s = CMat::zeros(d, d);
    for (v, &wi) in x.iter().zip(w) {
        s += v * v.adjoint() * c64(wi, 0.0);
    }
    let inv_sqrt = qmath::eigh(&s).map(|l| 1.0 / l.sqrt());
    let mut xs = Vec::with_capacity(x.len());
    let mut ws = Vec::with_capacity(x.len());
    for (v, &wi) in x.iter().zip(w) {
        let y = &inv_sqrt * v * c64(wi.sqrt(), 0.0);
        let nrm = y.norm();
        ws.push(nrm * nrm);
        xs.push(y / c64(nrm, 0.0));
    }
    (xs, ws)
}

/// Default number of directions: three times the symmetric dimension.
pub fn default_size(d: usize, t: usize) -> usize {
    3 * binomial(t + d - 1, t)
}

/// Builds a `t`-design POVM on `C^d`. Qubit designs up to `t = 3` use the
/// stabilizer states; everything else is optimized numerically.
pub fn build_design_povm(d: usize, t: usize, seed: u64) -> Result<DesignPovm> {
    if d == 2 && t <= 3 && t >= 1 {
        return Ok(stabilizer_povm_with_order(t));
    }
    build_numeric_design(d, t, default_size(d, t), seed)
}

fn stabilizer_povm_with_order(t: usize) -> DesignPovm {
    let mut p = stabilizer_povm();
    p.t = t;
    p.residual = frame_residual(&p.states(), &p.weights, 2, t);
    p
}

/// Numerical construction with an explicit number of directions.
pub fn build_numeric_design(d: usize, t: usize, n: usize, seed: u64) -> Result<DesignPovm> {
    if d < 2 || t < 1 {
        return Err(QsvError::Domain(format!("design needs d >= 2 and t >= 1 (got d={d}, t={t})")));
    }
    if n < d {
        return Err(QsvError::Domain(format!("{n} directions cannot resolve the identity in dimension {d}")));
    }
    let mut best: Option<DesignPovm> = None;
    for r in 0..8u64 {
        let (x, w, _) = descend(d, t, n, seed.wrapping_add(r), 60_000);
        let (x, w) = fix_unity(&x, &w, d);
        let p = DesignPovm::from_parts(d, t, &x, w, NUMERIC_TOL)?;
        let ok = p.residual <= NUMERIC_TOL;
        if best.as_ref().map_or(true, |b| p.residual < b.residual) {
            best = Some(p);
        }
        if ok {
            break;
        }
    }
    let best = best.unwrap();
    if best.residual > NUMERIC_TOL {
        return Err(QsvError::Construction(format!("design residual {:e} above {:e}", best.residual, NUMERIC_TOL)));
    }
    Ok(best)
}

/// Recomputes `||sum_i w_i |psi_i><psi_i|^{(x) t} - d/D Pi_sym||_F` from
/// explicit tensor powers and the permutation-built symmetric projector.
pub fn verify_design(povm: &DesignPovm, t: usize) -> Result<f64> {
    let d = povm.dim;
    let big_d = binomial(t + d - 1, t) as f64;
    let target = if t == 1 {
        CMat::identity(d, d)
    } else {
        symmetric_projector(t, d)?.projector() * c64(d as f64 / big_d, 0.0)
    };
    let mut acc = -target;
    for (v, &w) in povm.states().iter().zip(&povm.weights) {
        let mut vt = v.clone();
        for _ in 1..t {
            vt = qmath::kron_vec(&vt, v);
        }
        acc += &vt * vt.adjoint() * c64(w, 0.0);
    }
    Ok(qmath::frob_norm(&acc))
}
