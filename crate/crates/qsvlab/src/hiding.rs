//! Data-hiding pairs: certification, orthogonalization of a pair into
//! orthogonal states with the same distinguishability ratio, and the
//! antisymmetric/symmetric Werner pair.

use crate::error::{QsvError, Result};
use crate::io::MatrixJson;
use crate::measclass::MeasurementClass;
use crate::optim::project::split_parts;
use crate::optim::SolverConfig;
use crate::qmath::{self, c64, haar_unitary_rng, kron, rng_from_seed, BipartitionMask};
use crate::quantities::{gamma_eps, m_norm};
use crate::states::{antisymmetric_projector, symmetric_projector, trace_distance, DensityMatrix, Subspace};
use serde::{Deserialize, Serialize};

/// Eigenvalues within this of zero belong to neither part of a difference.
pub const SPLIT_TOL: f64 = 1e-12;
/// Largest local dimension for the Werner pair (total dimension 64).
pub const WERNER_MAX_D: usize = 8;
/// Largest total dimension for which the PPT norm is solved in the
/// representation-theoretic bound check.
pub const HARROW_MAX_DIM: usize = 64;
pub const COMMUTE_SAMPLES: usize = 20;
pub const COMMUTE_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-10;
/// Slack between a pair built from visibility witnesses and the visibility.
const PAIR_TOL: f64 = 1e-6;

/// A pair of states with `1/2 ||s0 - s1||_1 = eps` and
/// `1/2 ||s0 - s1||_M = delta`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HidingPair {
    pub sigma0: MatrixJson,
    pub sigma1: MatrixJson,
    pub class: String,
    pub eps: f64,
    /// Value at the best measurement found; never above the true value.
    pub delta: f64,
    /// Certified upper bound on delta, when the class has a dual bound.
    pub delta_upper: Option<f64>,
    pub eps_certified: bool,
    /// True only when `delta_upper` is a certificate (exact classes) or an
    /// analytic bound is attached.
    pub delta_certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_bound: Option<f64>,
    pub rank0: usize,
    pub provenance: Vec<String>,
}

impl HidingPair {
    pub fn states(&self) -> Result<(DensityMatrix, DensityMatrix)> {
        Ok((self.sigma0.to_density()?, self.sigma1.to_density()?))
    }

    /// Smallest certified bound on delta.
    pub fn certified_delta(&self) -> Option<f64> {
        match (self.delta_upper, self.analytic_bound) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Orthogonalized {
    pub rho_hat: DensityMatrix,
    pub sigma_hat: DensityMatrix,
    /// Trace of each part, `1/2 ||rho - sigma||_1`.
    pub lambda: f64,
    /// Whether the parts were swapped to keep `rank(rho_hat) <= dim/2`.
    pub swapped: bool,
}

/// Writes `rho - sigma = lambda (rho_hat - sigma_hat)` with orthogonal
/// states from the positive and negative parts of the difference.
pub fn orthogonalize(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Orthogonalized> {
    if rho.dims() != sigma.dims() {
        return Err(QsvError::Shape(format!("shapes {:?} and {:?}", rho.dims(), sigma.dims())));
    }
    let delta = rho.mat() - sigma.mat();
    if qmath::frob_norm(&delta) <= 1e-12 {
        return Err(QsvError::Domain("the two states coincide; there is nothing to orthogonalize".into()));
    }
    let (pos, neg) = split_parts(&delta, SPLIT_TOL);
    let tp = pos.trace().re;
    let tn = neg.trace().re;
    if tp <= SPLIT_TOL || tn <= SPLIT_TOL {
        return Err(QsvError::Domain("difference has no positive or no negative part".into()));
    }
    let dims = rho.dims().to_vec();
    let mut rho_hat = DensityMatrix::from_approx(&(pos / c64(tp, 0.0)), &dims)?;
    let mut sigma_hat = DensityMatrix::from_approx(&(neg / c64(tn, 0.0)), &dims)?;
    let swapped = rho_hat.rank(RANK_TOL) > rho.dim() / 2;
    if swapped {
        std::mem::swap(&mut rho_hat, &mut sigma_hat);
    }
    Ok(Orthogonalized { rho_hat, sigma_hat, lambda: 0.5 * (tp + tn), swapped })
}

/// Measures a pair: exact trace distance, and the class distance with its
/// certificate status.
pub fn certify_pair(class: &MeasurementClass, sigma0: &DensityMatrix, sigma1: &DensityMatrix, cfg: &SolverConfig) -> Result<HidingPair> {
    let eps = trace_distance(sigma0, sigma1)?;
    let norm = m_norm(class, sigma0, sigma1, cfg)?;
    let delta = 0.5 * norm.value;
    let exact = class.is_exact();
    let delta_upper = if exact { norm.upper.map(|u| 0.5 * u) } else { None };
    let mut provenance = vec![format!("certified against class {}", class.name())];
    if !exact {
        provenance.push("class distance is a heuristic lower bound, not a security guarantee".into());
    }
    if delta > eps + 2.0 * cfg.tolerance {
        provenance.push(format!("class distance {delta} exceeds the trace distance {eps}"));
    }
    Ok(HidingPair {
        sigma0: MatrixJson::from_density(sigma0),
        sigma1: MatrixJson::from_density(sigma1),
        class: class.name().to_string(),
        eps,
        delta,
        delta_upper,
        eps_certified: true,
        delta_certified: delta_upper.is_some(),
        analytic_bound: None,
        rank0: sigma0.rank(RANK_TOL),
        provenance,
    })
}

/// `1/2 ||X^Gamma||_1` with `X = s0 - s1` transposed on the second factor;
/// an upper bound on the PPT distance of a bipartite pair.
pub fn partial_transpose_bound(sigma0: &DensityMatrix, sigma1: &DensityMatrix) -> Result<f64> {
    let dims = sigma0.dims();
    if dims.len() != 2 || sigma1.dims() != dims {
        return Err(QsvError::Shape("partial transpose bound needs a bipartite pair".into()));
    }
    let x = sigma0.mat() - sigma1.mat();
    let xt = qmath::partial_transpose_mat(&x, dims, &BipartitionMask::single(1));
    Ok(0.5 * qmath::trace_norm_herm(&qmath::hermitian_part(&xt)))
}

/// Normalized antisymmetric versus symmetric projector on `C^d (x) C^d`,
/// certified against the PPT class.
pub fn werner_hiding_pair(d: usize, cfg: &SolverConfig) -> Result<HidingPair> {
    if d < 2 {
        return Err(QsvError::Domain("local dimension must be at least 2".into()));
    }
    if d > WERNER_MAX_D {
        return Err(QsvError::Size(d, WERNER_MAX_D));
    }
    let s0 = antisymmetric_projector(d)?.uniform_state();
    let s1 = symmetric_projector(2, d)?.uniform_state();
    let mut pair = certify_pair(&MeasurementClass::ppt(&[d, d]), &s0, &s1, cfg)?;
    // supports are orthogonal, so the trace distance is one
    pair.eps = 1.0;
    let analytic = 2.0 / d as f64;
    let pt = partial_transpose_bound(&s0, &s1)?;
    pair.analytic_bound = Some(analytic);
    pair.delta_certified = true;
    pair.provenance.push(format!("Werner pair d = {d}"));
    pair.provenance.push(format!("analytic bound 2/d = {analytic}; partial transpose bound {pt}"));
    Ok(pair)
}

/// Turns the visibility witnesses of `v` into an orthogonal hiding pair
/// whose first state lives in `v`.
pub fn pair_from_subspace(class: &MeasurementClass, v: &Subspace, eps: f64, cfg: &SolverConfig) -> Result<HidingPair> {
    if !class.is_exact() {
        return Err(QsvError::Domain(format!("class {} has no exact norm; pairs would not be certified", class.name())));
    }
    let g = gamma_eps(class, v, eps, cfg)?;
    let (rho, sigma) = match (g.witnesses.rho_state(), g.witnesses.sigma_state()) {
        (Some(r), Some(s)) => (r, s),
        _ => return Err(QsvError::Construction("visibility solve returned no witness states".into())),
    };
    let o = orthogonalize(&rho, &sigma)?;
    let mut pair = certify_pair(class, &o.rho_hat, &o.sigma_hat, cfg)?;
    let rank_cap = v.dim().min(v.ambient_dim() / 2).max(1);
    if pair.rank0 > rank_cap {
        return Err(QsvError::Construction(format!("first state has rank {} above {rank_cap}", pair.rank0)));
    }
    if pair.delta > g.value + PAIR_TOL {
        return Err(QsvError::Construction(format!("pair distance {} exceeds the visibility {}", pair.delta, g.value)));
    }
    pair.provenance.push(format!("visibility witnesses at eps = {eps}, gamma = {}", g.value));
    pair.provenance.push(format!("orthogonalized with lambda = {}{}", o.lambda, if o.swapped { ", parts swapped" } else { "" }));
    Ok(pair)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarrowReport {
    pub n: usize,
    pub d: usize,
    /// `||rho - sigma||_PPT` at the best measurement found.
    pub ppt_norm: f64,
    pub ppt_upper: Option<f64>,
    /// `12 n^2 / sqrt(d)`.
    pub bound: f64,
    /// The bound is at least 2, the trivial value.
    pub vacuous: bool,
    pub commutator_residual: f64,
    pub pass: bool,
}

/// Checks `||rho - sigma||_PPT <= 12 n^2 / sqrt(d)` for `U^{(x) n}`-invariant
/// states on `n` parties of dimension `d`.
pub fn harrow_bound_check(n: usize, d: usize, rho: &DensityMatrix, sigma: &DensityMatrix, cfg: &SolverConfig) -> Result<HarrowReport> {
    let dims = vec![d; n];
    if n < 2 || d < 2 {
        return Err(QsvError::Domain("need at least two parties of dimension at least 2".into()));
    }
    if rho.dims() != dims.as_slice() || sigma.dims() != dims.as_slice() {
        return Err(QsvError::Shape(format!("states must have shape {dims:?}")));
    }
    let total = rho.dim();
    if total > HARROW_MAX_DIM {
        return Err(QsvError::Size(total, HARROW_MAX_DIM));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut residual: f64 = 0.0;
    for _ in 0..COMMUTE_SAMPLES {
        let u = haar_unitary_rng(d, &mut rng);
        let mut un = u.clone();
        for _ in 1..n {
            un = kron(&un, &u);
        }
        for m in [rho.mat(), sigma.mat()] {
            residual = residual.max(qmath::frob_norm(&(&un * m - m * &un)));
        }
    }
    if residual > COMMUTE_TOL {
        return Err(QsvError::Domain(format!("states are not invariant under U^(x)n (commutator {residual:e})")));
    }
    let r = m_norm(&MeasurementClass::ppt(&dims), rho, sigma, cfg)?;
    let bound = 12.0 * (n * n) as f64 / (d as f64).sqrt();
    let checked = r.upper.unwrap_or(r.value);
    Ok(HarrowReport {
        n,
        d,
        ppt_norm: r.value,
        ppt_upper: r.upper,
        bound,
        vacuous: bound >= 2.0,
        commutator_residual: residual,
        pass: checked <= bound + cfg.tolerance,
    })
}
