//! Dense complex linear algebra on tensor-factored spaces.
//!
//! Basis ordering is the computational basis with the leftmost tensor factor
//! most significant: for dims `[d1, d2]` the index of `|a b>` is `a * d2 + b`.
//! Tensor factors are addressed by zero-based indices.

use crate::error::{QsvError, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest total dimension any operator may have.
pub const MAX_DIM: usize = 4096;

/// Tolerance applied when a matrix is flagged Hermitian at construction.
pub const HERM_TOL_BUILD: f64 = 1e-12;
/// Tolerance applied by operations that require Hermitian input.
pub const HERM_TOL_OP: f64 = 1e-10;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A set of tensor factors `K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct BipartitionMask {
    parties: Vec<usize>,
}

impl BipartitionMask {
    pub fn new(mut parties: Vec<usize>, n: usize) -> Result<Self> {
        parties.sort_unstable();
        parties.dedup();
        if let Some(&p) = parties.last() {
            if p >= n {
                return Err(QsvError::Shape(format!("factor index {p} out of range for {n} factors")));
            }
        }
        Ok(BipartitionMask { parties })
    }

    pub fn single(p: usize) -> Self {
        BipartitionMask { parties: vec![p] }
    }

    pub fn parties(&self) -> &[usize] {
        &self.parties
    }

    pub fn contains(&self, p: usize) -> bool {
        self.parties.binary_search(&p).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    pub fn complement(&self, n: usize) -> Self {
        BipartitionMask { parties: (0..n).filter(|p| !self.contains(*p)).collect() }
    }

    /// The `2^(n-1) - 1` nontrivial cuts, each represented by the side that
    /// excludes factor 0.
    pub fn all_cuts(n: usize) -> Vec<Self> {
        if n < 2 {
            return Vec::new();
        }
        (1..(1usize << (n - 1)))
            .map(|bits| BipartitionMask {
                parties: (1..n).filter(|p| bits & (1 << (p - 1)) != 0).collect(),
            })
            .collect()
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

pub fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(QsvError::Shape(format!("invalid tensor shape {dims:?}")));
    }
    let mut total: usize = 1;
    for &d in dims {
        total = total.checked_mul(d).ok_or(QsvError::Size(usize::MAX, MAX_DIM))?;
        if total > MAX_DIM {
            return Err(QsvError::Size(total, MAX_DIM));
        }
    }
    Ok(total)
}

/// Square complex matrix with an attached tensor shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    mat: CMat,
    dims: Vec<usize>,
}

impl ComplexMatrix {
    pub fn new(mat: CMat, dims: Vec<usize>) -> Result<Self> {
        let total = check_dims(&dims)?;
        if mat.nrows() != total || mat.ncols() != total {
            return Err(QsvError::Shape(format!(
                "matrix is {}x{} but tensor shape {dims:?} has dimension {total}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(ComplexMatrix { mat, dims })
    }

    /// Matrix without tensor structure (a single factor).
    pub fn from_mat(mat: CMat) -> Result<Self> {
        let n = mat.nrows();
        Self::new(mat, vec![n])
    }

    /// Hermitian-flagged constructor: rejects input beyond 1e-12 and
    /// symmetrizes the remainder.
    pub fn hermitian(mat: CMat, dims: Vec<usize>) -> Result<Self> {
        let m = Self::new(mat, dims)?;
        let defect = m.hermitian_defect();
        if defect > HERM_TOL_BUILD {
            return Err(QsvError::NotHermitian(defect));
        }
        Ok(ComplexMatrix { mat: hermitian_part(&m.mat), dims: m.dims })
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        let n = check_dims(dims)?;
        Ok(ComplexMatrix { mat: CMat::identity(n, n), dims: dims.to_vec() })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let n = check_dims(dims)?;
        Ok(ComplexMatrix { mat: CMat::zeros(n, n), dims: dims.to_vec() })
    }

    pub fn from_real_diag(dims: &[usize], diag: &[f64]) -> Result<Self> {
        let n = check_dims(dims)?;
        if diag.len() != n {
            return Err(QsvError::Shape(format!("{} diagonal entries for dimension {n}", diag.len())));
        }
        let mut mat = CMat::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            mat[(i, i)] = c64(v, 0.0);
        }
        Ok(ComplexMatrix { mat, dims: dims.to_vec() })
    }

    /// `|v><v|`.
    pub fn projector(v: &CVec, dims: &[usize]) -> Result<Self> {
        Self::new(v * v.adjoint(), dims.to_vec())
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn with_mat(&self, mat: CMat) -> Self {
        assert_eq!(mat.shape(), self.mat.shape());
        ComplexMatrix { mat, dims: self.dims.clone() }
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.mat)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn dagger(&self) -> Self {
        self.with_mat(self.mat.adjoint())
    }

    pub fn tensor_product(&self, other: &ComplexMatrix) -> Result<Self> {
        tensor_product(self, other)
    }

    pub fn partial_trace(&self, keep: &BipartitionMask) -> Result<Self> {
        partial_trace(self, keep)
    }

    pub fn partial_transpose(&self, k: &BipartitionMask) -> Result<Self> {
        partial_transpose(self, k)
    }

    pub fn eig_hermitian(&self) -> Result<Eigen> {
        eig_hermitian(self)
    }
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// `Re tr(a^dagger b)`, the real Frobenius inner product.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn frob_norm(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    check_dims(&dims)?;
    Ok(ComplexMatrix { mat: kron(&a.mat, &b.mat), dims })
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

/// Index permutation realizing a partial transpose on a fixed tensor shape.
#[derive(Clone, Debug)]
pub struct PtMap {
    n: usize,
    kpart: Vec<usize>,
    rpart: Vec<usize>,
}

impl PtMap {
    pub fn new(dims: &[usize], k: &BipartitionMask) -> Self {
        let n: usize = dims.iter().product();
        let st = strides(dims);
        let mut kpart = vec![0; n];
        let mut rpart = vec![0; n];
        for (i, (kp, rp)) in kpart.iter_mut().zip(rpart.iter_mut()).enumerate() {
            for (f, dg) in digits(i, dims).into_iter().enumerate() {
                if k.contains(f) {
                    *kp += dg * st[f];
                } else {
                    *rp += dg * st[f];
                }
            }
        }
        PtMap { n, kpart, rpart }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn apply(&self, m: &CMat) -> CMat {
        let n = self.n;
        CMat::from_fn(n, n, |i, j| {
            let ii = self.rpart[i] + self.kpart[j];
            let jj = self.rpart[j] + self.kpart[i];
            m[(ii, jj)]
        })
    }
}

pub fn partial_transpose_mat(m: &CMat, dims: &[usize], k: &BipartitionMask) -> CMat {
    PtMap::new(dims, k).apply(m)
}

pub fn partial_transpose(a: &ComplexMatrix, k: &BipartitionMask) -> Result<ComplexMatrix> {
    if let Some(&p) = k.parties().last() {
        if p >= a.dims.len() {
            return Err(QsvError::Shape(format!("mask factor {p} outside shape {:?}", a.dims)));
        }
    }
    Ok(a.with_mat(partial_transpose_mat(&a.mat, &a.dims, k)))
}

pub fn partial_trace_mat(m: &CMat, dims: &[usize], keep: &BipartitionMask) -> CMat {
    let n: usize = dims.iter().product();
    let kept_dims: Vec<usize> = keep.parties().iter().map(|&p| dims[p]).collect();
    let kst = strides(&kept_dims);
    let st = strides(dims);
    let nk: usize = kept_dims.iter().product();
    let mut kidx = vec![0; n];
    let mut tpart = vec![0; n];
    for i in 0..n {
        let dg = digits(i, dims);
        let mut pos = 0;
        for (f, &d) in dg.iter().enumerate() {
            if keep.contains(f) {
                kidx[i] += d * kst[pos];
                pos += 1;
            } else {
                tpart[i] += d * st[f];
            }
        }
    }
    let mut out = CMat::zeros(nk, nk);
    for j in 0..n {
        for i in 0..n {
            if tpart[i] == tpart[j] {
                out[(kidx[i], kidx[j])] += m[(i, j)];
            }
        }
    }
    out
}

pub fn partial_trace(a: &ComplexMatrix, keep: &BipartitionMask) -> Result<ComplexMatrix> {
    if keep.is_empty() {
        return Err(QsvError::Shape("partial trace needs a non-empty set of kept factors".into()));
    }
    if *keep.parties().last().unwrap() >= a.dims.len() {
        return Err(QsvError::Shape(format!("kept factors {:?} outside shape {:?}", keep.parties(), a.dims)));
    }
    let kept_dims: Vec<usize> = keep.parties().iter().map(|&p| a.dims[p]).collect();
    ComplexMatrix::new(partial_trace_mat(&a.mat, &a.dims, keep), kept_dims)
}

/// Reorders tensor factors of a vector: factor `perm[k]` of the input becomes
/// factor `k` of the output.
pub fn permute_vector(v: &CVec, dims: &[usize], perm: &[usize]) -> CVec {
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let st = strides(dims);
    let n = v.len();
    let mut out = CVec::zeros(n);
    for (j, o) in out.iter_mut().enumerate() {
        let dg = digits(j, &new_dims);
        let src: usize = dg.iter().zip(perm).map(|(&d, &p)| d * st[p]).sum();
        *o = v[src];
    }
    out
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: CMat,
}

impl Eigen {
    /// Rebuilds `sum_i f(lambda_i) |v_i><v_i|`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (k, &l) in self.values.iter().enumerate() {
            let s = f(l);
            scaled.column_mut(k).scale_mut(s);
        }
        let mut out = CMat::zeros(n, n);
        out.gemm(c64(1.0, 0.0), &scaled, &self.vectors.adjoint(), c64(0.0, 0.0));
        out
    }

    /// Rebuilds `sum_i w_i |v_i><v_i|` for replacement eigenvalues `w`.
    pub fn with_values(&self, w: &[f64]) -> CMat {
        let mut scaled = self.vectors.clone();
        for (k, &s) in w.iter().enumerate() {
            scaled.column_mut(k).scale_mut(s);
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition (input is symmetrized first).
///
/// The QR-based routine of `nalgebra` occasionally returns a wrong
/// decomposition for highly degenerate structured inputs, so its result is
/// checked by reconstruction and replaced by cyclic Jacobi when it fails.
pub fn eigh(m: &CMat) -> Eigen {
    let h = hermitian_part(m);
    let se = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(m.nrows(), order.len(), |i, j| se.eigenvectors[(i, order[j])]);
    let e = Eigen { values, vectors };
    let scale = h.norm().max(1.0);
    let err = (e.map(|l| l) - &h).norm();
    if err <= EIG_RECON_TOL * scale {
        e
    } else {
        jacobi_eigh(&h)
    }
}

/// Relative reconstruction error accepted from the QR eigensolver.
const EIG_RECON_TOL: f64 = 1e-11;

/// Cyclic Jacobi for Hermitian matrices; slow but unconditionally stable.
pub fn jacobi_eigh(h: &CMat) -> Eigen {
    let n = h.nrows();
    let mut a = hermitian_part(h);
    let mut v = identity(n);
    let total = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-16 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let e = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if tau >= 0.0 { 1.0 } else { -1.0 } / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = diag(1, conj(e)) R with R the real rotation [[c, s], [-s, c]]
                let jpp = c64(c, 0.0);
                let jpq = c64(s, 0.0);
                let jqp = e.conj() * (-s);
                let jqq = e.conj() * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = c64(0.0, 0.0);
                a[(q, p)] = c64(0.0, 0.0);
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Eigen { values, vectors }
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).values
}

pub fn lambda_max(m: &CMat) -> f64 {
    eigvalsh(m)[0]
}

pub fn lambda_min(m: &CMat) -> f64 {
    *eigvalsh(m).last().unwrap()
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn op_norm_herm(m: &CMat) -> f64 {
    let v = eigvalsh(m);
    v[0].abs().max(v[v.len() - 1].abs())
}

/// Largest singular value.
pub fn op_norm_general(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn trace_norm_herm(m: &CMat) -> f64 {
    eigvalsh(m).iter().map(|l| l.abs()).sum()
}

pub fn eig_hermitian(a: &ComplexMatrix) -> Result<Eigen> {
    let defect = a.hermitian_defect();
    if defect > HERM_TOL_OP {
        return Err(QsvError::NotHermitian(defect));
    }
    Ok(eigh(&a.mat))
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Squared Schmidt coefficients, descending.
    pub coefficients: Vec<f64>,
    pub left: Vec<CVec>,
    pub right: Vec<CVec>,
}

/// Schmidt decomposition of `psi` across the cut `cut | rest`.
pub fn schmidt_decompose(psi: &CVec, dims: &[usize], cut: &BipartitionMask) -> Result<SchmidtDecomposition> {
    let total = check_dims(dims)?;
    if psi.len() != total {
        return Err(QsvError::Shape(format!("vector length {} vs shape {dims:?}", psi.len())));
    }
    let nrm = psi.norm();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(QsvError::Normalization(nrm));
    }
    let n = dims.len();
    let rest = cut.complement(n);
    let perm: Vec<usize> = cut.parties().iter().chain(rest.parties()).copied().collect();
    let da: usize = cut.parties().iter().map(|&p| dims[p]).product();
    let db = total / da;
    let v = permute_vector(psi, dims, &perm);
    // row-major reshape: entry (a, b) is v[a * db + b]
    let coef = CMat::from_fn(da, db, |a, b| v[a * db + b]);
    let svd = coef.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut coefficients = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &k in &order {
        coefficients.push(svd.singular_values[k].powi(2));
        left.push(u.column(k).into_owned());
        right.push(vt.row(k).transpose());
    }
    Ok(SchmidtDecomposition { coefficients, left, right })
}

pub fn complex_gaussian_matrix<R: rand::Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(s * re, s * im)
    })
}

pub fn haar_unitary_rng<R: rand::Rng>(d: usize, rng: &mut R) -> CMat {
    let g = complex_gaussian_matrix(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let rk = r[(k, k)];
        let ph = if rk.norm() > 0.0 { rk / rk.norm() } else { c64(1.0, 0.0) };
        q.column_mut(k).scale_mut_c(ph);
    }
    q
}

trait ScaleC {
    fn scale_mut_c(&mut self, s: C64);
}

impl<S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>> ScaleC for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S> {
    fn scale_mut_c(&mut self, s: C64) {
        for x in self.iter_mut() {
            *x *= s;
        }
    }
}

pub fn haar_random_unitary(d: usize, seed: u64) -> Result<CMat> {
    check_dims(&[d])?;
    Ok(haar_unitary_rng(d, &mut rng_from_seed(seed)))
}

pub fn haar_state_rng<R: rand::Rng>(d: usize, rng: &mut R) -> CVec {
    let g = complex_gaussian_matrix(d, 1, rng);
    let v = CVec::from_column_slice(g.as_slice());
    let n = v.norm();
    v / c64(n, 0.0)
}

pub fn haar_random_pure_state(d: usize, seed: u64) -> Result<CVec> {
    check_dims(&[d])?;
    Ok(haar_state_rng(d, &mut rng_from_seed(seed)))
}

/// Computational basis vector `|k>` in dimension `d`.
pub fn basis_vec(d: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[k] = c64(1.0, 0.0);
    v
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)])
}

pub fn real_scalar(x: f64) -> C64 {
    c64(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Real part of `<v|m|v>`.
pub fn expectation(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

pub fn real_diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0))))
}

pub fn to_real_matrix_pair(m: &CMat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
    let im = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect();
    (re, im)
}

pub(crate) fn dims_product(dims: &[usize]) -> Result<usize> {
    check_dims(dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_a_random_hermitian() {
        let mut rng = rng_from_seed(4);
        let h = hermitian_part(&complex_gaussian_matrix(7, 7, &mut rng));
        let e = jacobi_eigh(&h);
        assert!((e.map(|l| l) - &h).norm() < 1e-12);
        assert!((e.vectors.adjoint() * &e.vectors - identity(7)).norm() < 1e-12);
        let r = eigh(&h);
        for (a, b) in e.values.iter().zip(&r.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigh_survives_degenerate_projector_complements() {
        // complement of two Dicke states on four qubits: the plain QR routine
        // returns a wrong decomposition for this input
        let dicke = |k: u32| {
            let c = (0..16u32).filter(|i| i.count_ones() == k).count() as f64;
            CVec::from_fn(16, |i, _| if (i as u32).count_ones() == k { c64(1.0 / c.sqrt(), 0.0) } else { c64(0.0, 0.0) })
        };
        let (a, b) = (dicke(1), dicke(2));
        let p = &a * a.adjoint() + &b * b.adjoint();
        let m = identity(16) - &p;
        let e = eigh(&m);
        assert!((e.map(|l| l) - &m).norm() < 1e-12);
    }

    fn bell() -> CVec {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CVec::from_vec(vec![c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)])
    }

    #[test]
    fn kron_of_identities() {
        let i2 = ComplexMatrix::identity(&[2]).unwrap();
        let p = i2.tensor_product(&i2).unwrap();
        assert_eq!(p.mat(), &identity(4));
        assert_eq!(p.dims(), &[2, 2]);
    }

    #[test]
    fn kron_basis_projectors() {
        let p0 = ComplexMatrix::from_real_diag(&[2], &[1.0, 0.0]).unwrap();
        let p1 = ComplexMatrix::from_real_diag(&[2], &[0.0, 1.0]).unwrap();
        let p = p0.tensor_product(&p1).unwrap();
        assert_eq!(p.mat(), &real_diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn xx_flips_both_bits() {
        let xx = kron(&pauli_x(), &pauli_x());
        let out = &xx * basis_vec(4, 0);
        assert_eq!(out, basis_vec(4, 3));
    }

    #[test]
    fn size_limit_enforced() {
        let a = ComplexMatrix::identity(&[64]).unwrap();
        let b = ComplexMatrix::identity(&[65]).unwrap();
        assert!(matches!(a.tensor_product(&b), Err(QsvError::Size(..))));
    }

    #[test]
    fn bell_marginal_is_mixed() {
        let phi = ComplexMatrix::projector(&bell(), &[2, 2]).unwrap();
        let r = phi.partial_trace(&BipartitionMask::single(0)).unwrap();
        assert!((r.mat() - identity(2) * c64(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_by_hand() {
        let m = ComplexMatrix::from_real_diag(&[2, 2], &[0.5, 0.25, 0.25, 0.0]).unwrap();
        let r = m.partial_trace(&BipartitionMask::single(0)).unwrap();
        assert_eq!(r.mat(), &real_diag(&[0.75, 0.25]));
        let r2 = m.partial_trace(&BipartitionMask::single(1)).unwrap();
        assert_eq!(r2.mat(), &real_diag(&[0.75, 0.25]));
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = rng_from_seed(3);
        let a = complex_gaussian_matrix(2, 2, &mut rng);
        let b = complex_gaussian_matrix(3, 3, &mut rng);
        let ab = ComplexMatrix::new(kron(&a, &b), vec![2, 3]).unwrap();
        let r = ab.partial_trace(&BipartitionMask::single(0)).unwrap();
        assert!((r.mat() - &a * b.trace()).norm() < 1e-12);
        let r = ab.partial_trace(&BipartitionMask::single(1)).unwrap();
        assert!((r.mat() - &b * a.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_missing_keep_is_error() {
        let m = ComplexMatrix::identity(&[2, 2]).unwrap();
        assert!(m.partial_trace(&BipartitionMask::new(vec![], 2).unwrap()).is_err());
        assert!(m.partial_trace(&BipartitionMask::single(2)).is_err());
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let phi = ComplexMatrix::projector(&bell(), &[2, 2]).unwrap();
        let pt = phi.partial_transpose(&BipartitionMask::single(0)).unwrap();
        let ev = pt.eig_hermitian().unwrap().values;
        let expect = [0.5, 0.5, 0.5, -0.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        // Brute force: the partial transpose of Phi+ is SWAP / d.
        let mut swap = CMat::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                swap[(a * 2 + b, b * 2 + a)] = c64(0.5, 0.0);
            }
        }
        assert!((pt.mat() - swap).norm() < 1e-15);
    }

    #[test]
    fn partial_transpose_of_product() {
        let mut rng = rng_from_seed(5);
        let a = complex_gaussian_matrix(2, 2, &mut rng);
        let b = complex_gaussian_matrix(3, 3, &mut rng);
        let ab = ComplexMatrix::new(kron(&a, &b), vec![2, 3]).unwrap();
        let pt = ab.partial_transpose(&BipartitionMask::single(1)).unwrap();
        assert!((pt.mat() - kron(&a, &b.transpose())).norm() < 1e-14);
        let id = ComplexMatrix::identity(&[2, 3]).unwrap();
        assert_eq!(id.partial_transpose(&BipartitionMask::single(0)).unwrap(), id);
    }

    #[test]
    fn partial_transpose_involution_bit_exact() {
        let mut rng = rng_from_seed(9);
        let m = complex_gaussian_matrix(12, 12, &mut rng);
        let a = ComplexMatrix::new(m, vec![2, 3, 2]).unwrap();
        for k in BipartitionMask::all_cuts(3) {
            let back = a.partial_transpose(&k).unwrap().partial_transpose(&k).unwrap();
            assert_eq!(back, a);
        }
    }

    #[test]
    fn eigen_diag_and_pauli() {
        let d = ComplexMatrix::from_real_diag(&[3], &[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(d.eig_hermitian().unwrap().values, vec![3.0, 2.0, 1.0]);
        let x = ComplexMatrix::from_mat(pauli_x()).unwrap();
        let e = x.eig_hermitian().unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        let v = e.vectors.column(0);
        assert!((v[0].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((v[0] - v[1]).norm() < 1e-12);
    }

    #[test]
    fn omega_bell_spectrum() {
        let phi = bell() * bell().adjoint();
        let omega = &phi + (identity(4) - &phi) * c64(1.0 / 3.0, 0.0);
        let ev = eigvalsh(&omega);
        let expect = [1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = ComplexMatrix::from_mat(CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)])).unwrap();
        assert!(matches!(m.eig_hermitian(), Err(QsvError::NotHermitian(_))));
    }

    #[test]
    fn eigen_residual_small() {
        let mut rng = rng_from_seed(17);
        let g = complex_gaussian_matrix(16, 16, &mut rng);
        let h = hermitian_part(&g);
        let e = eigh(&h);
        let scale = h.iter().map(|x| x.norm()).fold(0.0, f64::max);
        for k in 0..16 {
            let v = e.vectors.column(k);
            let r = (&h * v - v * c64(e.values[k], 0.0)).norm();
            assert!(r <= 1e-9 * scale);
        }
    }

    #[test]
    fn schmidt_examples() {
        let p00 = basis_vec(4, 0);
        let s = schmidt_decompose(&p00, &[2, 2], &BipartitionMask::single(0)).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-14 && s.coefficients[1].abs() < 1e-14);
        let s = schmidt_decompose(&bell(), &[2, 2], &BipartitionMask::single(0)).unwrap();
        assert!((s.coefficients[0] - 0.5).abs() < 1e-14 && (s.coefficients[1] - 0.5).abs() < 1e-14);
        let v = CVec::from_vec(vec![c64(0.8f64.sqrt(), 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.2f64.sqrt(), 0.0)]);
        let s = schmidt_decompose(&v, &[2, 2], &BipartitionMask::single(0)).unwrap();
        assert!((s.coefficients[0] - 0.8).abs() < 1e-14 && (s.coefficients[1] - 0.2).abs() < 1e-14);
        assert!(matches!(
            schmidt_decompose(&(v * c64(2.0, 0.0)), &[2, 2], &BipartitionMask::single(0)),
            Err(QsvError::Normalization(_))
        ));
    }

    #[test]
    fn schmidt_reconstructs_nonadjacent_cut() {
        let mut rng = rng_from_seed(21);
        let psi = haar_state_rng(12, &mut rng);
        let dims = [2, 3, 2];
        let cut = BipartitionMask::new(vec![0, 2], 3).unwrap();
        let s = schmidt_decompose(&psi, &dims, &cut).unwrap();
        assert!((s.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        // rebuild in the order (cut, rest) and permute back
        let mut v = CVec::zeros(12);
        for k in 0..s.coefficients.len() {
            v += kron_vec(&s.left[k], &s.right[k]) * c64(s.coefficients[k].sqrt(), 0.0);
        }
        // factors of v are (0, 2, 1); move them back to (0, 1, 2)
        let back = permute_vector(&v, &[2, 2, 3], &[0, 2, 1]);
        assert!((back - psi).norm() < 1e-10);
    }

    #[test]
    fn haar_unitary_properties() {
        let u = haar_random_unitary(1, 4).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
        for seed in 0..100 {
            let u = haar_random_unitary(8, seed).unwrap();
            assert!((u.adjoint() * &u - identity(8)).norm() < 1e-10);
        }
        assert_eq!(haar_random_unitary(5, 11).unwrap(), haar_random_unitary(5, 11).unwrap());
    }

    #[test]
    fn haar_first_moment_twirl() {
        let d = 3;
        let mut rng = rng_from_seed(2024);
        let mut acc = CMat::zeros(d, d);
        let samples = 100_000;
        for _ in 0..samples {
            let u = haar_unitary_rng(d, &mut rng);
            let col = u.column(0);
            acc += col * col.adjoint();
        }
        acc /= c64(samples as f64, 0.0);
        let target = identity(d) * c64(1.0 / d as f64, 0.0);
        assert!(max_abs_entry(&(acc - target)) < 5e-3);
    }

    #[test]
    fn all_cuts_count() {
        assert_eq!(BipartitionMask::all_cuts(2).len(), 1);
        assert_eq!(BipartitionMask::all_cuts(3).len(), 3);
        assert_eq!(BipartitionMask::all_cuts(4).len(), 7);
    }
}
