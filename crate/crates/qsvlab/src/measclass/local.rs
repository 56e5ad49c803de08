//! Sup-oracles over local projective measurements: see-saw over local bases,
//! Bloch-vector ascent for qubits, Pauli enumeration and a brute-force grid
//! for two qubits.

use crate::qmath::{self, c64, haar_unitary_rng, rng_from_seed, CMat, C64};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One local orthonormal basis per party plus the accepted joint outcomes
/// (lexicographic order, leftmost party most significant). Realizes
/// `M = sum_{s accepted} (x)_a |u_{a, s_a}><u_{a, s_a}|`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LocalWitness {
    pub dims: Vec<usize>,
    /// Row-major real and imaginary parts of each basis matrix (columns are
    /// basis vectors).
    pub bases_re: Vec<Vec<f64>>,
    pub bases_im: Vec<Vec<f64>>,
    pub accepted: Vec<bool>,
}

impl LocalWitness {
    pub fn new(bases: &[CMat], accepted: Vec<bool>) -> Self {
        let dims = bases.iter().map(|b| b.nrows()).collect();
        let flat = |f: fn(&C64) -> f64, b: &CMat| {
            let mut v = Vec::with_capacity(b.len());
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    v.push(f(&b[(i, j)]));
                }
            }
            v
        };
        LocalWitness {
            dims,
            bases_re: bases.iter().map(|b| flat(|z| z.re, b)).collect(),
            bases_im: bases.iter().map(|b| flat(|z| z.im, b)).collect(),
            accepted,
        }
    }

    pub fn bases(&self) -> Vec<CMat> {
        self.dims
            .iter()
            .enumerate()
            .map(|(a, &d)| CMat::from_fn(d, d, |i, j| c64(self.bases_re[a][i * d + j], self.bases_im[a][i * d + j])))
            .collect()
    }

    pub fn realize(&self) -> CMat {
        let u = product_basis(&self.bases());
        let n = u.nrows();
        let mut m = CMat::zeros(n, n);
        for (s, &acc) in self.accepted.iter().enumerate() {
            if acc {
                let col = u.column(s);
                m += &col * col.adjoint();
            }
        }
        m
    }
}

pub(crate) fn product_basis(bases: &[CMat]) -> CMat {
    let mut u = CMat::identity(1, 1);
    for b in bases {
        u = qmath::kron(&u, b);
    }
    u
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// `U_p^dag m U_p` with `U_p = I (x) u (x) I` acting on factor `p`.
pub fn conj_local(m: &CMat, dims: &[usize], p: usize, u: &CMat) -> CMat {
    let n = m.nrows();
    let st = strides(dims)[p];
    let d = dims[p];
    let digit = |i: usize| (i / st) % d;
    let mut t = CMat::zeros(n, n);
    for j in 0..n {
        let jp = digit(j);
        let base = j - jp * st;
        for b in 0..d {
            let w = u[(b, jp)];
            if w == c64(0.0, 0.0) {
                continue;
            }
            let src = base + b * st;
            for i in 0..n {
                t[(i, j)] += m[(i, src)] * w;
            }
        }
    }
    let mut r = CMat::zeros(n, n);
    for i in 0..n {
        let ip = digit(i);
        let base = i - ip * st;
        for a in 0..d {
            let w = u[(a, ip)].conj();
            if w == c64(0.0, 0.0) {
                continue;
            }
            let src = base + a * st;
            for j in 0..n {
                r[(i, j)] += w * t[(src, j)];
            }
        }
    }
    r
}

fn rotate_all(delta: &CMat, dims: &[usize], bases: &[CMat], skip: Option<usize>) -> CMat {
    let mut m = delta.clone();
    for (p, u) in bases.iter().enumerate() {
        if Some(p) != skip {
            m = conj_local(&m, dims, p, u);
        }
    }
    m
}

/// Outcome weights `<e_s| Delta |e_s>` for the product basis.
pub fn outcome_weights(delta: &CMat, dims: &[usize], bases: &[CMat]) -> Vec<f64> {
    let r = rotate_all(delta, dims, bases, None);
    (0..r.nrows()).map(|i| r[(i, i)].re).collect()
}

/// Sum of positive outcome weights; ties within `1e-12` are dropped.
pub fn selected_value(weights: &[f64]) -> (f64, Vec<bool>) {
    let acc: Vec<bool> = weights.iter().map(|&w| w > 1e-12).collect();
    let v = weights.iter().zip(&acc).filter(|(_, &a)| a).map(|(w, _)| w).sum();
    (v, acc)
}

/// Diagonal blocks `B_{s_{-p}}` of `Delta` rotated on every party but `p`,
/// indexed by the outcome of the other parties.
fn party_blocks(delta: &CMat, dims: &[usize], bases: &[CMat], p: usize) -> Vec<(Vec<usize>, CMat)> {
    let r = rotate_all(delta, dims, bases, Some(p));
    let n = r.nrows();
    let st = strides(dims)[p];
    let d = dims[p];
    let mut out = Vec::new();
    for base in 0..n {
        if (base / st) % d != 0 {
            continue;
        }
        let idx: Vec<usize> = (0..d).map(|i| base + i * st).collect();
        let b = CMat::from_fn(d, d, |i, j| r[(idx[i], idx[j])]);
        out.push((idx, b));
    }
    out
}

/// Nearest unitary (polar factor) of a square matrix.
fn polar(g: &CMat) -> CMat {
    let svd = g.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

#[derive(Clone, Debug)]
pub struct LocalSearch {
    pub value: f64,
    pub bases: Vec<CMat>,
    pub accepted: Vec<bool>,
    /// Best value of each restart.
    pub restart_values: Vec<f64>,
}

impl LocalSearch {
    pub fn witness(&self) -> LocalWitness {
        LocalWitness::new(&self.bases, self.accepted.clone())
    }
}

fn finish(delta: &CMat, dims: &[usize], bases: Vec<CMat>, restart_values: Vec<f64>) -> LocalSearch {
    let w = outcome_weights(delta, dims, &bases);
    let (value, accepted) = selected_value(&w);
    LocalSearch { value, bases, accepted, restart_values }
}

/// See-saw over local orthonormal bases: alternately fixes the accepted
/// outcomes and improves one party's basis by a minorize-maximize polar step.
pub fn see_saw(delta: &CMat, dims: &[usize], restarts: usize, seed: u64) -> LocalSearch {
    let mut best: Option<(f64, Vec<CMat>)> = None;
    let mut values = Vec::with_capacity(restarts);
    for r in 0..restarts.max(1) {
        let mut rng = rng_from_seed(seed.wrapping_add(r as u64));
        let mut bases: Vec<CMat> = dims.iter().map(|&d| haar_unitary_rng(d, &mut rng)).collect();
        let mut prev = f64::NEG_INFINITY;
        for _sweep in 0..500 {
            for p in 0..dims.len() {
                let blocks = party_blocks(delta, dims, &bases, p);
                let d = dims[p];
                let u = bases[p].clone();
                // accepted outcomes under the current basis
                let mut a_mats = vec![CMat::zeros(d, d); d];
                for (_, b) in &blocks {
                    let rot = u.adjoint() * b * &u;
                    for i in 0..d {
                        if rot[(i, i)].re > 1e-12 {
                            a_mats[i] += b;
                        }
                    }
                }
                let shift = a_mats.iter().map(qmath::lambda_min).fold(0.0f64, f64::min);
                let mut cur = u;
                for _ in 0..4 {
                    let mut g = CMat::zeros(d, d);
                    for i in 0..d {
                        let col = (&a_mats[i] - CMat::identity(d, d) * c64(shift, 0.0)) * cur.column(i);
                        g.set_column(i, &col);
                    }
                    if g.norm() < 1e-300 {
                        break;
                    }
                    cur = polar(&g);
                }
                bases[p] = cur;
            }
            let (v, _) = selected_value(&outcome_weights(delta, dims, &bases));
            if v <= prev + 1e-13 {
                prev = prev.max(v);
                break;
            }
            prev = v;
        }
        values.push(prev);
        if best.as_ref().map_or(true, |(b, _)| prev > *b) {
            best = Some((prev, bases));
        }
    }
    finish(delta, dims, best.unwrap().1, values)
}

/// Projective qubit basis with Bloch direction `n`: columns `|+n>`, `|-n>`.
pub fn bloch_basis(n: [f64; 3]) -> CMat {
    let h = qmath::pauli_x() * c64(n[0], 0.0) + qmath::pauli_y() * c64(n[1], 0.0) + qmath::pauli_z() * c64(n[2], 0.0);
    let e = qmath::eigh(&h);
    e.vectors
}

fn normalize(w: [f64; 3]) -> Option<[f64; 3]> {
    let s = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if s < 1e-300 {
        None
    } else {
        Some([w[0] / s, w[1] / s, w[2] / s])
    }
}

fn random_direction<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let s: f64 = v.iter().map(|x| x * x).sum();
        if s > 1e-6 && s <= 1.0 {
            return normalize(v).unwrap();
        }
    }
}

/// Coordinate ascent over per-qubit Bloch directions. With the accepted
/// outcomes fixed the objective is affine in each direction, so every
/// coordinate step is exact.
pub fn bloch_ascent(delta: &CMat, n_qubits: usize, restarts: usize, seed: u64) -> LocalSearch {
    let dims = vec![2; n_qubits];
    let paulis = [qmath::pauli_x(), qmath::pauli_y(), qmath::pauli_z()];
    let mut best: Option<(f64, Vec<CMat>)> = None;
    let mut values = Vec::new();
    for r in 0..restarts.max(1) {
        let mut rng = rng_from_seed(seed.wrapping_add(r as u64));
        let mut dirs: Vec<[f64; 3]> = (0..n_qubits).map(|_| random_direction(&mut rng)).collect();
        let mut bases: Vec<CMat> = dirs.iter().map(|&n| bloch_basis(n)).collect();
        let mut prev = f64::NEG_INFINITY;
        for _sweep in 0..500 {
            for p in 0..n_qubits {
                let blocks = party_blocks(delta, &dims, &bases, p);
                let mut w = [0.0; 3];
                for (_, b) in &blocks {
                    let rot = bases[p].adjoint() * b * &bases[p];
                    // outcome 0 is |+n>, outcome 1 is |-n>
                    for (i, sgn) in [(0usize, 1.0), (1, -1.0)] {
                        if rot[(i, i)].re > 1e-12 {
                            for k in 0..3 {
                                w[k] += sgn * 0.5 * qmath::inner_re(&paulis[k], b);
                            }
                        }
                    }
                }
                if let Some(nd) = normalize(w) {
                    dirs[p] = nd;
                    bases[p] = bloch_basis(nd);
                }
            }
            let (v, _) = selected_value(&outcome_weights(delta, &dims, &bases));
            if v <= prev + 1e-13 {
                prev = prev.max(v);
                break;
            }
            prev = v;
        }
        values.push(prev);
        if best.as_ref().map_or(true, |(b, _)| prev > *b) {
            best = Some((prev, bases));
        }
    }
    finish(delta, &dims, best.unwrap().1, values)
}

/// Eigenbases of X, Y and Z.
pub fn pauli_bases() -> [CMat; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = CMat::from_row_slice(2, 2, &[c64(s, 0.0), c64(s, 0.0), c64(s, 0.0), c64(-s, 0.0)]);
    let y = CMat::from_row_slice(2, 2, &[c64(s, 0.0), c64(s, 0.0), c64(0.0, s), c64(0.0, -s)]);
    let z = CMat::identity(2, 2);
    [x, y, z]
}

/// Exhaustive search over the `3^n` product Pauli bases.
pub fn pauli_enumerate(delta: &CMat, n_qubits: usize) -> LocalSearch {
    let dims = vec![2; n_qubits];
    let pb = pauli_bases();
    let mut best = (f64::NEG_INFINITY, vec![0usize; n_qubits]);
    let mut choice = vec![0usize; n_qubits];
    // depth-first, rotating one qubit at a time
    fn rec(
        m: &CMat,
        q: usize,
        dims: &[usize],
        pb: &[CMat; 3],
        choice: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
    ) {
        if q == dims.len() {
            let w: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].re).collect();
            let (v, _) = selected_value(&w);
            if v > best.0 + 1e-15 {
                *best = (v, choice.clone());
            }
            return;
        }
        for (k, u) in pb.iter().enumerate() {
            choice[q] = k;
            let r = conj_local(m, dims, q, u);
            rec(&r, q + 1, dims, pb, choice, best);
        }
    }
    rec(delta, 0, &dims, &pb, &mut choice, &mut best);
    let bases: Vec<CMat> = best.1.iter().map(|&k| pb[k].clone()).collect();
    finish(delta, &dims, bases, vec![best.0])
}

/// Coordinate search over Pauli axes, used beyond the enumeration cutoff.
pub fn pauli_coordinate(delta: &CMat, n_qubits: usize, restarts: usize, seed: u64) -> LocalSearch {
    let dims = vec![2; n_qubits];
    let pb = pauli_bases();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut values = Vec::new();
    for r in 0..restarts.max(1) {
        let mut rng = rng_from_seed(seed.wrapping_add(r as u64));
        let mut choice: Vec<usize> = (0..n_qubits).map(|_| rng.gen_range(0..3)).collect();
        let value_of = |c: &[usize]| {
            let bases: Vec<CMat> = c.iter().map(|&k| pb[k].clone()).collect();
            selected_value(&outcome_weights(delta, &dims, &bases)).0
        };
        let mut cur = value_of(&choice);
        loop {
            let mut improved = false;
            for q in 0..n_qubits {
                for k in 0..3 {
                    if k == choice[q] {
                        continue;
                    }
                    let old = choice[q];
                    choice[q] = k;
                    let v = value_of(&choice);
                    if v > cur + 1e-13 {
                        cur = v;
                        improved = true;
                    } else {
                        choice[q] = old;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        values.push(cur);
        if best.as_ref().map_or(true, |(b, _)| cur > *b) {
            best = Some((cur, choice));
        }
    }
    let bases = best.unwrap().1.iter().map(|&k| pb[k].clone()).collect();
    finish(delta, &dims, bases, values)
}

/// Brute-force oracle for two qubits: a `grid x grid` (theta, phi) grid of
/// Bloch directions per party followed by a local pattern search.
///
/// With `r_A`, `r_B` the local Bloch components and `T` the correlation
/// matrix of `Delta`, outcome `(a, b)` has weight
/// `(tr Delta + a n.r_A + b m.r_B + a b n.T m) / 4`.
pub fn two_qubit_grid(delta: &CMat, grid: usize) -> LocalSearch {
    let p = [qmath::pauli_x(), qmath::pauli_y(), qmath::pauli_z()];
    let id = CMat::identity(2, 2);
    let tr = delta.trace().re;
    let mut ra = [0.0; 3];
    let mut rb = [0.0; 3];
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        ra[i] = qmath::inner_re(&qmath::kron(&p[i], &id), delta);
        rb[i] = qmath::inner_re(&qmath::kron(&id, &p[i]), delta);
        for j in 0..3 {
            t[i][j] = qmath::inner_re(&qmath::kron(&p[i], &p[j]), delta);
        }
    }
    let val = |n: &[f64; 3], m: &[f64; 3]| {
        let na: f64 = (0..3).map(|i| n[i] * ra[i]).sum();
        let mb: f64 = (0..3).map(|i| m[i] * rb[i]).sum();
        let ntm: f64 = (0..3).map(|i| (0..3).map(|j| n[i] * t[i][j] * m[j]).sum::<f64>()).sum();
        let mut s = 0.0;
        for a in [1.0, -1.0] {
            for b in [1.0, -1.0] {
                s += (0.25 * (tr + a * na + b * mb + a * b * ntm)).max(0.0);
            }
        }
        s
    };
    let dir = |th: f64, ph: f64| [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
    let g = grid.max(2);
    let pts: Vec<(f64, f64)> = (0..g)
        .flat_map(|i| {
            (0..g).map(move |j| {
                (std::f64::consts::PI * (i as f64 + 0.5) / g as f64, 2.0 * std::f64::consts::PI * j as f64 / g as f64)
            })
        })
        .collect();
    let dirs: Vec<[f64; 3]> = pts.iter().map(|&(a, b)| dir(a, b)).collect();
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (i, n) in dirs.iter().enumerate() {
        for (j, m) in dirs.iter().enumerate() {
            let v = val(n, m);
            if v > best.0 {
                best = (v, i, j);
            }
        }
    }
    // pattern search in (theta_A, phi_A, theta_B, phi_B)
    let mut x = [pts[best.1].0, pts[best.1].1, pts[best.2].0, pts[best.2].1];
    let mut fx = best.0;
    let mut h = std::f64::consts::PI / g as f64;
    while h > 1e-10 {
        let mut improved = false;
        for k in 0..4 {
            for s in [1.0, -1.0] {
                let mut y = x;
                y[k] += s * h;
                let fy = val(&dir(y[0], y[1]), &dir(y[2], y[3]));
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let bases = vec![bloch_basis(dir(x[0], x[1])), bloch_basis(dir(x[2], x[3]))];
    finish(delta, &[2, 2], bases, vec![fx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random_density;

    #[test]
    fn conj_local_matches_kron() {
        let dims = [2, 3, 2];
        let m = qmath::hermitian_part(&qmath::complex_gaussian_matrix(12, 12, &mut rng_from_seed(1)));
        let u = qmath::haar_random_unitary(3, 4).unwrap();
        let full = qmath::kron(&qmath::kron(&CMat::identity(2, 2), &u), &CMat::identity(2, 2));
        let want = full.adjoint() * &m * &full;
        assert!((conj_local(&m, &dims, 1, &u) - want).norm() < 1e-12);
    }

    #[test]
    fn witness_realizes_its_value() {
        let d = random_density(&[2, 2], 4, 1).unwrap().mat() - random_density(&[2, 2], 4, 2).unwrap().mat();
        let s = see_saw(&d, &[2, 2], 4, 0);
        let m = s.witness().realize();
        assert!((qmath::inner_re(&m, &d) - s.value).abs() < 1e-10);
    }

    #[test]
    fn product_delta_is_solved_exactly() {
        // Delta = |00><00| - |11><11| has local optimum 1
        let d = qmath::real_diag(&[1.0, 0.0, 0.0, -1.0]);
        for s in [see_saw(&d, &[2, 2], 8, 3), bloch_ascent(&d, 2, 8, 3), pauli_enumerate(&d, 2), two_qubit_grid(&d, 20)] {
            assert!((s.value - 1.0).abs() < 1e-8, "{}", s.value);
        }
    }

    #[test]
    fn pauli_bases_are_eigenbases() {
        let p = [qmath::pauli_x(), qmath::pauli_y(), qmath::pauli_z()];
        for (u, s) in pauli_bases().iter().zip(&p) {
            let r = u.adjoint() * s * u;
            assert!((r - qmath::real_diag(&[1.0, -1.0])).norm() < 1e-14);
        }
    }
}
