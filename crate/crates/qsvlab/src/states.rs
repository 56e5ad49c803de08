//! States, subspaces and the standard constructions used throughout.

use crate::error::{QsvError, Result};
use crate::qmath::{
    self, basis_vec, c64, digits, eigh, haar_state_rng, haar_unitary_rng, identity, rng_from_seed, CMat, CVec,
    ComplexMatrix,
};

const PSD_FLOOR: f64 = -1e-10;
const TRACE_TOL: f64 = 1e-10;

/// Unit vector on a tensor-factored space.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    vector: CVec,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(vector: CVec, dims: Vec<usize>) -> Result<Self> {
        let n = qmath::dims_product(&dims)?;
        if vector.len() != n {
            return Err(QsvError::Shape(format!("vector of length {} for shape {dims:?}", vector.len())));
        }
        let nrm = vector.norm();
        if (nrm - 1.0).abs() > 1e-10 {
            return Err(QsvError::Normalization(nrm));
        }
        Ok(PureState { vector, dims })
    }

    /// Normalizes `vector` before wrapping it.
    pub fn normalized(vector: CVec, dims: Vec<usize>) -> Result<Self> {
        let nrm = vector.norm();
        if nrm < 1e-300 {
            return Err(QsvError::Normalization(nrm));
        }
        Self::new(vector / c64(nrm, 0.0), dims)
    }

    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn projector(&self) -> CMat {
        &self.vector * self.vector.adjoint()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { op: ComplexMatrix::new(self.projector(), self.dims.clone()).unwrap() }
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        qmath::dims_product(&dims)?;
        Ok(PureState { vector: qmath::kron_vec(&self.vector, &other.vector), dims })
    }
}

/// Positive semidefinite unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: ComplexMatrix,
}

impl DensityMatrix {
    /// Validating constructor; no clipping is applied.
    pub fn new(mat: CMat, dims: Vec<usize>) -> Result<Self> {
        let op = ComplexMatrix::hermitian(mat, dims)?;
        let tr = op.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(QsvError::Domain(format!("density matrix has trace {tr}")));
        }
        let lmin = qmath::lambda_min(op.mat());
        if lmin < PSD_FLOOR {
            return Err(QsvError::Domain(format!("density matrix has eigenvalue {lmin:e}")));
        }
        Ok(DensityMatrix { op })
    }

    /// Constructor for externally supplied data: small negative eigenvalues
    /// (down to -1e-10) are clipped and the trace renormalized.
    pub fn new_clipped(mat: CMat, dims: Vec<usize>) -> Result<Self> {
        let op = ComplexMatrix::new(mat, dims)?;
        let defect = op.hermitian_defect();
        if defect > qmath::HERM_TOL_OP {
            return Err(QsvError::NotHermitian(defect));
        }
        let e = eigh(op.mat());
        if *e.values.last().unwrap() < PSD_FLOOR {
            return Err(QsvError::Domain(format!("density matrix has eigenvalue {:e}", e.values.last().unwrap())));
        }
        let clipped = e.map(|l| l.max(0.0));
        let tr = clipped.trace().re;
        if (tr - 1.0).abs() > 1e-8 {
            return Err(QsvError::Domain(format!("density matrix has trace {tr}")));
        }
        let dims = op.dims().to_vec();
        Ok(DensityMatrix { op: ComplexMatrix::new(qmath::hermitian_part(&(clipped / c64(tr, 0.0))), dims)? })
    }

    /// Wraps a matrix already known to be a state up to solver accuracy:
    /// takes the Hermitian part, clips negative eigenvalues and renormalizes.
    pub fn from_approx(mat: &CMat, dims: &[usize]) -> Result<Self> {
        let e = eigh(mat);
        let clipped = e.map(|l| l.max(0.0));
        let tr = clipped.trace().re;
        if tr <= 1e-14 {
            return Err(QsvError::Domain("matrix has no positive part".into()));
        }
        Ok(DensityMatrix { op: ComplexMatrix::new(qmath::hermitian_part(&(clipped / c64(tr, 0.0))), dims.to_vec())? })
    }

    pub fn maximally_mixed(dims: &[usize]) -> Result<Self> {
        let n = qmath::dims_product(dims)?;
        Ok(DensityMatrix { op: ComplexMatrix::new(identity(n) / c64(n as f64, 0.0), dims.to_vec())? })
    }

    /// `P / tr P` for an orthogonal projector.
    pub fn normalized_projector(p: &CMat, dims: &[usize]) -> Result<Self> {
        let tr = p.trace().re;
        Self::new(p / c64(tr, 0.0), dims.to_vec())
    }

    pub fn op(&self) -> &ComplexMatrix {
        &self.op
    }

    pub fn mat(&self) -> &CMat {
        self.op.mat()
    }

    pub fn dims(&self) -> &[usize] {
        self.op.dims()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        qmath::eigvalsh(self.mat()).iter().filter(|&&l| l > tol).count()
    }

    /// Orthonormal basis of the support (eigenvalues above `tol`).
    pub fn support(&self, tol: f64) -> CMat {
        let e = eigh(self.mat());
        let r = e.values.iter().filter(|&&l| l > tol).count();
        e.vectors.columns(0, r).into_owned()
    }
}

/// Nontrivial proper subspace with an explicit orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: CMat,
    projector: CMat,
    dims: Vec<usize>,
}

impl Subspace {
    pub fn new(basis: CMat, dims: Vec<usize>) -> Result<Self> {
        let n = qmath::dims_product(&dims)?;
        if basis.nrows() != n {
            return Err(QsvError::Shape(format!("basis has {} rows for dimension {n}", basis.nrows())));
        }
        let r = basis.ncols();
        if r == 0 || r >= n {
            return Err(QsvError::Domain(format!("subspace dimension {r} is not in 1..{n}")));
        }
        let gram = basis.adjoint() * &basis;
        let err = (gram - identity(r)).norm();
        if err > 1e-10 {
            return Err(QsvError::Domain(format!("basis is not orthonormal (defect {err:e})")));
        }
        let projector = qmath::hermitian_part(&(&basis * basis.adjoint()));
        Ok(Subspace { basis, projector, dims })
    }

    /// Orthonormalizes the columns of `vectors` (which must be independent).
    pub fn span(vectors: &CMat, dims: Vec<usize>) -> Result<Self> {
        let qr = vectors.clone().qr();
        let q = qr.q();
        let r = qr.r();
        for k in 0..vectors.ncols() {
            if r[(k, k)].norm() < 1e-10 {
                return Err(QsvError::Domain("spanning vectors are linearly dependent".into()));
            }
        }
        Self::new(q.columns(0, vectors.ncols()).into_owned(), dims)
    }

    pub fn from_state(psi: &PureState) -> Result<Self> {
        Self::new(CMat::from_column_slice(psi.dim(), 1, psi.vector().as_slice()), psi.dims().to_vec())
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn projector(&self) -> &CMat {
        &self.projector
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement_basis(&self) -> CMat {
        let n = self.ambient_dim();
        let e = eigh(&(identity(n) - &self.projector));
        e.vectors.columns(0, n - self.dim()).into_owned()
    }

    pub fn complement(&self) -> Subspace {
        Subspace::new(self.complement_basis(), self.dims.clone()).expect("complement of a proper subspace")
    }

    /// Maximally mixed state on the subspace.
    pub fn uniform_state(&self) -> DensityMatrix {
        DensityMatrix::normalized_projector(&self.projector, &self.dims).expect("projector state")
    }
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

pub fn binomial(n: usize, k: usize) -> usize {
    binom(n, k)
}

/// `|D_k^(n)>`: uniform superposition of weight-`k` bit strings.
pub fn dicke_state(n: usize, k: usize) -> Result<PureState> {
    if n == 0 || k > n {
        return Err(QsvError::Domain(format!("Dicke state needs 0 <= k <= n, n >= 1 (got n={n}, k={k})")));
    }
    let dims = vec![2; n];
    let dim = qmath::dims_product(&dims)?;
    let amp = 1.0 / (binom(n, k) as f64).sqrt();
    let v = CVec::from_fn(dim, |i, _| if (i as u64).count_ones() as usize == k { c64(amp, 0.0) } else { c64(0.0, 0.0) });
    PureState::new(v, dims)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Operator permuting the `n` tensor factors of `(C^d)^{(x) n}`:
/// factor `k` of the output carries factor `perm[k]` of the input.
pub fn permutation_operator(n: usize, d: usize, perm: &[usize]) -> Result<CMat> {
    let dims = vec![d; n];
    let dim = qmath::dims_product(&dims)?;
    let mut p = CMat::zeros(dim, dim);
    for i in 0..dim {
        let dg = digits(i, &dims);
        let mut j = 0;
        for &src in perm {
            j = j * d + dg[src];
        }
        p[(j, i)] = c64(1.0, 0.0);
    }
    Ok(p)
}

/// Symmetrizer `(1/n!) sum_pi P_pi` built from all permutation operators.
pub fn symmetrizer(n: usize, d: usize) -> Result<CMat> {
    let dim = qmath::dims_product(&vec![d; n])?;
    let perms = permutations(n);
    let mut acc = CMat::zeros(dim, dim);
    for p in &perms {
        acc += permutation_operator(n, d, p)?;
    }
    Ok(acc / c64(perms.len() as f64, 0.0))
}

fn multisets(n: usize, d: usize) -> Vec<Vec<usize>> {
    // nondecreasing sequences of length n over 0..d, lexicographic
    fn rec(n: usize, d: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in start..d {
            cur.push(v);
            rec(n, d, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, 0, &mut Vec::new(), &mut out);
    out
}

/// Symmetric subspace of `(C^d)^{(x) n}`. The basis consists of normalized
/// symmetrized occupation states in lexicographic order; for `d = 2` this is
/// the Dicke basis ordered by increasing weight.
pub fn symmetric_projector(n: usize, d: usize) -> Result<Subspace> {
    if n < 2 || d < 2 {
        return Err(QsvError::Domain(format!("symmetric subspace needs n >= 2 and d >= 2 (got n={n}, d={d})")));
    }
    let dims = vec![d; n];
    let dim = qmath::dims_product(&dims)?;
    let types = multisets(n, d);
    let mut basis = CMat::zeros(dim, types.len());
    for i in 0..dim {
        let mut dg = digits(i, &dims);
        dg.sort_unstable();
        let col = types.binary_search(&dg).unwrap();
        basis[(i, col)] = c64(1.0, 0.0);
    }
    for mut col in basis.column_iter_mut() {
        let nrm = col.norm();
        col /= c64(nrm, 0.0);
    }
    Subspace::new(basis, dims)
}

/// Antisymmetric subspace of `C^d (x) C^d`, basis `(|ij> - |ji>)/sqrt 2`, `i < j`.
pub fn antisymmetric_projector(d: usize) -> Result<Subspace> {
    if d < 2 {
        return Err(QsvError::Domain(format!("antisymmetric subspace needs d >= 2 (got {d})")));
    }
    let dims = vec![d, d];
    let dim = qmath::dims_product(&dims)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut cols = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let mut v = CVec::zeros(dim);
            v[i * d + j] = c64(s, 0.0);
            v[j * d + i] = c64(-s, 0.0);
            cols.push(v);
        }
    }
    Subspace::new(CMat::from_columns(&cols), dims)
}

/// `sum_i |ii> / sqrt d`.
pub fn maximally_entangled(d: usize) -> Result<PureState> {
    if d < 2 {
        return Err(QsvError::Domain(format!("maximally entangled state needs d >= 2 (got {d})")));
    }
    let dims = vec![d, d];
    let dim = qmath::dims_product(&dims)?;
    let a = 1.0 / (d as f64).sqrt();
    let v = CVec::from_fn(dim, |i, _| if i / d == i % d { c64(a, 0.0) } else { c64(0.0, 0.0) });
    PureState::new(v, dims)
}

/// `(|01> - |10>)/sqrt 2`.
pub fn singlet() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = CVec::from_vec(vec![c64(0.0, 0.0), c64(s, 0.0), c64(-s, 0.0), c64(0.0, 0.0)]);
    PureState::new(v, vec![2, 2]).unwrap()
}

/// Computational basis state `|k>` on the given shape.
pub fn basis_state(dims: &[usize], k: usize) -> Result<PureState> {
    let n = qmath::dims_product(dims)?;
    if k >= n {
        return Err(QsvError::Domain(format!("basis index {k} out of range {n}")));
    }
    PureState::new(basis_vec(n, k), dims.to_vec())
}

fn check_same(a: &[usize], b: &[usize]) -> Result<()> {
    let na: usize = a.iter().product();
    let nb: usize = b.iter().product();
    if na != nb {
        return Err(QsvError::Shape(format!("dimension mismatch {na} vs {nb}")));
    }
    Ok(())
}

/// `tr(rho Pi_V)` clamped to `[0, 1]`.
pub fn fidelity_to_subspace(rho: &DensityMatrix, v: &Subspace) -> Result<f64> {
    check_same(rho.dims(), v.dims())?;
    let f = qmath::inner_re(v.projector(), rho.mat());
    if !(-1e-12..=1.0 + 1e-12).contains(&f) {
        return Err(QsvError::Domain(format!("fidelity {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// `||rho - sigma||_1 / 2`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same(rho.dims(), sigma.dims())?;
    let t = 0.5 * qmath::trace_norm_herm(&(rho.mat() - sigma.mat()));
    Ok(t.clamp(0.0, 1.0))
}

/// Haar-random `r`-dimensional subspace of a space with the given shape.
pub fn random_subspace(dims: &[usize], r: usize, seed: u64) -> Result<Subspace> {
    let n = qmath::dims_product(dims)?;
    if r == 0 || r >= n {
        return Err(QsvError::Domain(format!("subspace dimension {r} is not in 1..{n}")));
    }
    let u = haar_unitary_rng(n, &mut rng_from_seed(seed));
    Subspace::new(u.columns(0, r).into_owned(), dims.to_vec())
}

/// Normalized Wishart density of the given rank.
pub fn random_density(dims: &[usize], rank: usize, seed: u64) -> Result<DensityMatrix> {
    let n = qmath::dims_product(dims)?;
    if rank == 0 || rank > n {
        return Err(QsvError::Domain(format!("rank {rank} is not in 1..={n}")));
    }
    let mut rng = rng_from_seed(seed);
    if rank == 1 {
        let v = haar_state_rng(n, &mut rng);
        return Ok(PureState::new(v, dims.to_vec())?.density());
    }
    let g = qmath::complex_gaussian_matrix(n, rank, &mut rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::new(qmath::hermitian_part(&(w / c64(tr, 0.0))), dims.to_vec())
}

pub fn random_pure_state(dims: &[usize], seed: u64) -> Result<PureState> {
    let n = qmath::dims_product(dims)?;
    PureState::new(haar_state_rng(n, &mut rng_from_seed(seed)), dims.to_vec())
}
