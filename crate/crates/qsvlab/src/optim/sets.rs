//! Convex sets with closed-form projections used by the ADMM engine.

use super::admm::{ConvexSet, Point};
use crate::qmath::{c64, eigh, CMat, PtMap};

/// Projection of a real vector onto `{w : sum w = total, w >= 0}`.
pub fn simplex_project(values: &[f64], total: f64) -> Vec<f64> {
    let mut s: Vec<f64> = values.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - total) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    values.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Eigenvalue clipping onto the spectral box `0 <= M <= I`.
pub fn box_project(m: &CMat) -> CMat {
    eigh(m).map(|l| l.clamp(0.0, 1.0))
}

pub fn psd_project(m: &CMat) -> CMat {
    eigh(m).map(|l| l.max(0.0))
}

/// Projection of a Hermitian matrix onto the density matrices.
pub fn density_project(m: &CMat) -> CMat {
    let e = eigh(m);
    e.with_values(&simplex_project(&e.values, 1.0))
}

/// Projects `(b, tau)` onto `{(B, t) : B <= t I}`; returns the new block and `t`.
pub fn upper_epigraph_project(b: &CMat, tau: f64) -> (CMat, f64) {
    let e = eigh(b);
    // e.values is descending
    let mut t = tau;
    let mut acc = 0.0;
    for (k, &l) in e.values.iter().enumerate() {
        let cand = (tau + acc) / (k + 1) as f64;
        if l <= cand {
            t = cand;
            break;
        }
        acc += l;
        t = (tau + acc) / (k + 2) as f64;
    }
    (e.map(|l| l.min(t)), t)
}

/// `0 <= M <= I` on matrix component `mat`.
pub struct SpectralBox {
    idx: [usize; 1],
}

impl SpectralBox {
    pub fn new(mat: usize) -> Self {
        SpectralBox { idx: [mat] }
    }
}

impl ConvexSet for SpectralBox {
    fn mats(&self) -> &[usize] {
        &self.idx
    }
    fn scalars(&self) -> &[usize] {
        &[]
    }
    fn project(&self, v: &mut Point) {
        let i = self.idx[0];
        v.mats[i] = box_project(&v.mats[i]);
    }
    fn name(&self) -> String {
        "box".into()
    }
}

/// `0 <= M^{T_K} <= I`, i.e. both `M` and `I - M` stay positive under the
/// partial transpose. The partial transpose is an orthogonal involution, so
/// the projection is conjugation of the box projection.
pub struct PtBox {
    idx: [usize; 1],
    map: PtMap,
    label: String,
}

impl PtBox {
    pub fn new(mat: usize, map: PtMap, label: String) -> Self {
        PtBox { idx: [mat], map, label }
    }
}

impl ConvexSet for PtBox {
    fn mats(&self) -> &[usize] {
        &self.idx
    }
    fn scalars(&self) -> &[usize] {
        &[]
    }
    fn project(&self, v: &mut Point) {
        let i = self.idx[0];
        let t = self.map.apply(&v.mats[i]);
        v.mats[i] = self.map.apply(&box_project(&t));
    }
    fn name(&self) -> String {
        format!("pt-box {}", self.label)
    }
}

/// `{(M, a) : Pi M Pi = a Pi, (I - Pi) M Pi = 0}`.
pub struct UniversalAffine {
    mat: [usize; 1],
    scal: [usize; 1],
    pi: CMat,
    pi_perp: CMat,
    rank: f64,
}

impl UniversalAffine {
    pub fn new(mat: usize, a: usize, pi: CMat) -> Self {
        let n = pi.nrows();
        let pi_perp = CMat::identity(n, n) - &pi;
        let rank = pi.trace().re.round();
        UniversalAffine { mat: [mat], scal: [a], pi, pi_perp, rank }
    }

    /// Projection of a single matrix with the scalar eliminated
    /// (`a` set to the trace average on the subspace).
    pub fn project_matrix(pi: &CMat, m: &CMat) -> CMat {
        let n = pi.nrows();
        let pp = CMat::identity(n, n) - pi;
        let rank = pi.trace().re.round();
        let a = crate::qmath::inner_re(pi, m) / rank;
        pi * c64(a, 0.0) + &pp * m * &pp
    }
}

impl ConvexSet for UniversalAffine {
    fn mats(&self) -> &[usize] {
        &self.mat
    }
    fn scalars(&self) -> &[usize] {
        &self.scal
    }
    fn project(&self, v: &mut Point) {
        let (i, k) = (self.mat[0], self.scal[0]);
        let tr = crate::qmath::inner_re(&self.pi, &v.mats[i]);
        let a = (tr + v.scalars[k]) / (self.rank + 1.0);
        v.mats[i] = &self.pi * c64(a, 0.0) + &self.pi_perp * &v.mats[i] * &self.pi_perp;
        v.scalars[k] = a;
    }
    fn name(&self) -> String {
        "universal".into()
    }
}

/// `{(M, t) : Q^dag M Q <= t I}` for an isometry `Q`, or, with `lower`,
/// `{(M, a) : Q^dag M Q >= a I}`.
pub struct Epigraph {
    mat: [usize; 1],
    scal: [usize; 1],
    q: CMat,
    lower: bool,
    full: bool,
}

impl Epigraph {
    pub fn upper(mat: usize, t: usize, q: CMat) -> Self {
        let full = q.nrows() == q.ncols();
        Epigraph { mat: [mat], scal: [t], q, lower: false, full }
    }

    pub fn lower(mat: usize, a: usize, q: CMat) -> Self {
        let full = q.nrows() == q.ncols();
        Epigraph { mat: [mat], scal: [a], q, lower: true, full }
    }

    /// Upper epigraph on the whole space (no compression).
    pub fn upper_full(mat: usize, t: usize, n: usize) -> Self {
        Epigraph { mat: [mat], scal: [t], q: CMat::identity(n, n), lower: false, full: true }
    }

    pub fn basis(&self) -> &CMat {
        &self.q
    }
}

impl ConvexSet for Epigraph {
    fn mats(&self) -> &[usize] {
        &self.mat
    }
    fn scalars(&self) -> &[usize] {
        &self.scal
    }
    fn project(&self, v: &mut Point) {
        let (i, k) = (self.mat[0], self.scal[0]);
        let sign = if self.lower { -1.0 } else { 1.0 };
        let b = if self.full {
            v.mats[i].clone()
        } else {
            self.q.adjoint() * &v.mats[i] * &self.q
        };
        let b = if self.lower { -b } else { b };
        let (nb, t) = upper_epigraph_project(&b, sign * v.scalars[k]);
        let delta = (nb - b) * c64(sign, 0.0);
        if self.full {
            v.mats[i] += delta;
        } else {
            v.mats[i] += &self.q * delta * self.q.adjoint();
        }
        v.scalars[k] = sign * t;
    }
    fn name(&self) -> String {
        if self.lower { "lower-epigraph".into() } else { "upper-epigraph".into() }
    }
}

/// Affine coupling `{(M, W, z) : W = M - z Pi}`.
pub struct Coupling {
    mats: [usize; 2],
    scal: [usize; 1],
    pi: CMat,
    rank: f64,
}

impl Coupling {
    pub fn new(m: usize, w: usize, z: usize, pi: CMat) -> Self {
        let rank = pi.trace().re.round();
        Coupling { mats: [m, w], scal: [z], pi, rank }
    }
}

impl ConvexSet for Coupling {
    fn mats(&self) -> &[usize] {
        &self.mats
    }
    fn scalars(&self) -> &[usize] {
        &self.scal
    }
    fn project(&self, v: &mut Point) {
        let (im, iw, iz) = (self.mats[0], self.mats[1], self.scal[0]);
        // residual of A(M, W, z) = W - M + z Pi
        let g = &v.mats[iw] - &v.mats[im] + &self.pi * c64(v.scalars[iz], 0.0);
        // solve (A A^*) R = g with A A^*(R) = 2R + tr(Pi R) Pi
        let t = crate::qmath::inner_re(&self.pi, &g) / (2.0 + self.rank);
        let r = (g - &self.pi * c64(t, 0.0)) * c64(0.5, 0.0);
        let trr = crate::qmath::inner_re(&self.pi, &r);
        v.mats[im] += &r;
        v.mats[iw] -= &r;
        v.scalars[iz] -= trr;
    }
    fn name(&self) -> String {
        "coupling".into()
    }
}

/// `z >= 0` on a scalar component.
pub struct Nonnegative {
    scal: [usize; 1],
}

impl Nonnegative {
    pub fn new(z: usize) -> Self {
        Nonnegative { scal: [z] }
    }
}

impl ConvexSet for Nonnegative {
    fn mats(&self) -> &[usize] {
        &[]
    }
    fn scalars(&self) -> &[usize] {
        &self.scal
    }
    fn project(&self, v: &mut Point) {
        let k = self.scal[0];
        v.scalars[k] = v.scalars[k].max(0.0);
    }
    fn name(&self) -> String {
        "nonnegative".into()
    }
}

/// Graph of the linear map `x -> sum_i x_i E_i`: `{(M, x) : M = A x}`.
pub struct LinearGraph {
    mat: [usize; 1],
    scal: Vec<usize>,
    elements: Vec<CMat>,
    /// `(I + A^* A)^{-1}`.
    inv: nalgebra::DMatrix<f64>,
}

impl LinearGraph {
    pub fn new(mat: usize, scal: Vec<usize>, elements: Vec<CMat>) -> Self {
        let k = elements.len();
        let g = nalgebra::DMatrix::from_fn(k, k, |i, j| {
            crate::qmath::inner_re(&elements[i], &elements[j]) + if i == j { 1.0 } else { 0.0 }
        });
        let inv = g.cholesky().expect("I + Gram is positive definite").inverse();
        LinearGraph { mat: [mat], scal, elements, inv }
    }
}

impl ConvexSet for LinearGraph {
    fn mats(&self) -> &[usize] {
        &self.mat
    }
    fn scalars(&self) -> &[usize] {
        &self.scal
    }
    fn project(&self, v: &mut Point) {
        let i = self.mat[0];
        let k = self.elements.len();
        let rhs = nalgebra::DVector::from_fn(k, |j, _| {
            v.scalars[self.scal[j]] + crate::qmath::inner_re(&self.elements[j], &v.mats[i])
        });
        let x = &self.inv * rhs;
        let n = v.mats[i].nrows();
        let mut m = CMat::zeros(n, n);
        for (j, e) in self.elements.iter().enumerate() {
            m += e * c64(x[j], 0.0);
            v.scalars[self.scal[j]] = x[j];
        }
        v.mats[i] = m;
    }
    fn name(&self) -> String {
        "linear-graph".into()
    }
}

/// Projection of `(a, b)` onto `{(x, p) : 0 <= x_i <= p}`.
pub fn capped_box_project(a: &[f64], b: f64) -> (Vec<f64>, f64) {
    let mut s: Vec<f64> = a.to_vec();
    s.sort_by(|x, y| y.total_cmp(x));
    // k entries above the cap: p = (b + top_k sum) / (1 + k)
    let mut acc = 0.0;
    let mut p = b;
    for k in 0..=s.len() {
        let cand = (b + acc) / (1 + k) as f64;
        let upper = if k == 0 { f64::INFINITY } else { s[k - 1] };
        let lower = if k == s.len() { f64::NEG_INFINITY } else { s[k] };
        if cand <= upper && cand >= lower {
            p = cand;
            break;
        }
        if k < s.len() {
            acc += s[k];
        }
    }
    let p = p.max(0.0);
    (a.iter().map(|&x| x.clamp(0.0, p)).collect(), p)
}

/// `{0 <= x_{g,i} <= p_g}` for groups of scalars sharing a cap.
pub struct GroupBox {
    scal: Vec<usize>,
    groups: Vec<(Vec<usize>, usize)>,
}

impl GroupBox {
    pub fn new(groups: Vec<(Vec<usize>, usize)>) -> Self {
        let mut scal = Vec::new();
        for (xs, p) in &groups {
            scal.extend_from_slice(xs);
            scal.push(*p);
        }
        GroupBox { scal, groups }
    }
}

impl ConvexSet for GroupBox {
    fn mats(&self) -> &[usize] {
        &[]
    }
    fn scalars(&self) -> &[usize] {
        &self.scal
    }
    fn project(&self, v: &mut Point) {
        for (xs, p) in &self.groups {
            let a: Vec<f64> = xs.iter().map(|&i| v.scalars[i]).collect();
            let (x, cap) = capped_box_project(&a, v.scalars[*p]);
            for (&i, xi) in xs.iter().zip(x) {
                v.scalars[i] = xi;
            }
            v.scalars[*p] = cap;
        }
    }
    fn name(&self) -> String {
        "group-box".into()
    }
}

/// Probability simplex on a list of scalars.
pub struct SimplexSet {
    scal: Vec<usize>,
}

impl SimplexSet {
    pub fn new(scal: Vec<usize>) -> Self {
        SimplexSet { scal }
    }
}

impl ConvexSet for SimplexSet {
    fn mats(&self) -> &[usize] {
        &[]
    }
    fn scalars(&self) -> &[usize] {
        &self.scal
    }
    fn project(&self, v: &mut Point) {
        let a: Vec<f64> = self.scal.iter().map(|&i| v.scalars[i]).collect();
        for (&i, x) in self.scal.iter().zip(simplex_project(&a, 1.0)) {
            v.scalars[i] = x;
        }
    }
    fn name(&self) -> String {
        "simplex".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{complex_gaussian_matrix, hermitian_part, inner_re, rng_from_seed};

    fn rand_herm(n: usize, seed: u64) -> CMat {
        hermitian_part(&complex_gaussian_matrix(n, n, &mut rng_from_seed(seed)))
    }

    fn check_projection(set: &dyn ConvexSet, v: &Point, members: &[Point]) {
        // variational inequality <v - P v, m - P v> <= 0 for members m
        let mut p = v.clone();
        set.project(&mut p);
        let mut pp = p.clone();
        set.project(&mut pp);
        let mut d = pp.clone();
        for (a, b) in d.mats.iter_mut().zip(&p.mats) {
            *a -= b;
        }
        for (a, b) in d.scalars.iter_mut().zip(&p.scalars) {
            *a -= b;
        }
        assert!(d.norm() < 1e-10, "not idempotent");
        for m in members {
            let mut lhs = 0.0;
            for i in 0..v.mats.len() {
                lhs += inner_re(&(&v.mats[i] - &p.mats[i]), &(&m.mats[i] - &p.mats[i]));
            }
            for i in 0..v.scalars.len() {
                lhs += (v.scalars[i] - p.scalars[i]) * (m.scalars[i] - p.scalars[i]);
            }
            assert!(lhs <= 1e-9, "variational inequality violated: {lhs}");
        }
    }

    #[test]
    fn simplex_projection_cases() {
        assert_eq!(simplex_project(&[0.2, 0.3, 0.5], 1.0), vec![0.2, 0.3, 0.5]);
        let w = simplex_project(&[2.0, 0.0, -1.0], 1.0);
        assert!((w[0] - 1.0).abs() < 1e-15 && w[1] == 0.0 && w[2] == 0.0);
        let w = simplex_project(&[0.5, 0.5, 0.5], 1.0);
        assert!(w.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn box_projection_example() {
        let m = crate::qmath::real_diag(&[1.5, -0.2]);
        assert!((box_project(&m) - crate::qmath::real_diag(&[1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn upper_epigraph_against_members() {
        for seed in 0..10 {
            let n = 4;
            let set = Epigraph::upper_full(0, 0, n);
            let v = Point { mats: vec![rand_herm(n, seed)], scalars: vec![0.3 - seed as f64 * 0.1] };
            let members: Vec<Point> = (0..20)
                .map(|k| {
                    let m = rand_herm(n, 1000 + seed * 50 + k);
                    let t = crate::qmath::lambda_max(&m) + (k as f64) * 0.05;
                    Point { mats: vec![m], scalars: vec![t] }
                })
                .collect();
            check_projection(&set, &v, &members);
        }
    }

    #[test]
    fn compressed_lower_epigraph_against_members() {
        let n = 6;
        let q = crate::qmath::haar_random_unitary(n, 3).unwrap().columns(0, 2).into_owned();
        let set = Epigraph::lower(0, 0, q.clone());
        for seed in 0..10 {
            let v = Point { mats: vec![rand_herm(n, seed)], scalars: vec![0.5] };
            let members: Vec<Point> = (0..20)
                .map(|k| {
                    let m = rand_herm(n, 500 + seed * 50 + k);
                    let a = crate::qmath::lambda_min(&(q.adjoint() * &m * &q)) - 0.01 * k as f64;
                    Point { mats: vec![m], scalars: vec![a] }
                })
                .collect();
            check_projection(&set, &v, &members);
        }
    }

    #[test]
    fn universal_affine_against_members() {
        let n = 4;
        let psi = crate::qmath::haar_random_pure_state(n, 8).unwrap();
        let pi = &psi * psi.adjoint();
        let set = UniversalAffine::new(0, 0, pi.clone());
        let pp = CMat::identity(n, n) - &pi;
        for seed in 0..5 {
            let v = Point { mats: vec![rand_herm(n, seed)], scalars: vec![0.7] };
            let members: Vec<Point> = (0..10)
                .map(|k| {
                    let a = 0.1 * k as f64 - 0.3;
                    let m = &pi * c64(a, 0.0) + &pp * rand_herm(n, 77 + k) * &pp;
                    Point { mats: vec![m], scalars: vec![a] }
                })
                .collect();
            check_projection(&set, &v, &members);
        }
    }

    #[test]
    fn coupling_against_members() {
        let n = 4;
        let pi = crate::qmath::real_diag(&[1.0, 1.0, 0.0, 0.0]);
        let set = Coupling::new(0, 1, 0, pi.clone());
        for seed in 0..5 {
            let v = Point { mats: vec![rand_herm(n, seed), rand_herm(n, seed + 9)], scalars: vec![0.2] };
            let members: Vec<Point> = (0..10)
                .map(|k| {
                    let m = rand_herm(n, 300 + k);
                    let z = 0.3 * k as f64 - 1.0;
                    let w = &m - &pi * c64(z, 0.0);
                    Point { mats: vec![m, w], scalars: vec![z] }
                })
                .collect();
            check_projection(&set, &v, &members);
        }
    }

    #[test]
    fn capped_box_against_members() {
        let set = GroupBox::new(vec![(vec![0, 1, 2], 3)]);
        for seed in 0..10 {
            let mut rng = rng_from_seed(seed);
            let vals: Vec<f64> = (0..4).map(|_| rand::Rng::gen_range(&mut rng, -1.0..2.0)).collect();
            let v = Point { mats: vec![], scalars: vals };
            let members: Vec<Point> = (0..30)
                .map(|k| {
                    let p = 0.05 * (k + 1) as f64;
                    let xs: Vec<f64> = (0..3).map(|_| rand::Rng::gen_range(&mut rng, 0.0..=p)).collect();
                    Point { mats: vec![], scalars: vec![xs[0], xs[1], xs[2], p] }
                })
                .collect();
            check_projection(&set, &v, &members);
        }
    }

    #[test]
    fn linear_graph_against_members() {
        let els: Vec<CMat> = (0..3).map(|k| rand_herm(2, 40 + k)).collect();
        let set = LinearGraph::new(0, vec![0, 1, 2], els.clone());
        let v = Point { mats: vec![rand_herm(2, 1)], scalars: vec![0.3, -0.2, 0.9] };
        let members: Vec<Point> = (0..10)
            .map(|k| {
                let x = [0.1 * k as f64, 1.0 - 0.2 * k as f64, 0.5];
                let m = &els[0] * c64(x[0], 0.0) + &els[1] * c64(x[1], 0.0) + &els[2] * c64(x[2], 0.0);
                Point { mats: vec![m], scalars: x.to_vec() }
            })
            .collect();
        check_projection(&set, &v, &members);
    }

    #[test]
    fn pt_box_is_idempotent_and_feasible() {
        let dims = [2, 2];
        let k = crate::qmath::BipartitionMask::single(1);
        let set = PtBox::new(0, PtMap::new(&dims, &k), "1".into());
        let mut v = Point { mats: vec![rand_herm(4, 4)], scalars: vec![] };
        set.project(&mut v);
        let ev = crate::qmath::eigvalsh(&crate::qmath::partial_transpose_mat(&v.mats[0], &dims, &k));
        assert!(ev[0] <= 1.0 + 1e-12 && ev[3] >= -1e-12);
    }
}
