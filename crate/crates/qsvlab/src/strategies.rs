//! Explicit verification strategies with spectral data and feasibility
//! certificates.

use crate::error::{QsvError, Result};
use crate::io::MatrixJson;
use crate::measclass::{membership_check, ClassKind, MeasurementClass, Membership};
use crate::optim::{alpha_on, beta_eps};
use crate::qmath::{self, c64, haar_unitary_rng, identity, inner_re, kron, rng_from_seed, BipartitionMask, CMat};
use crate::states::{dicke_state, symmetric_projector, PureState, Subspace};
use serde::{Deserialize, Serialize};

/// Tolerance for the universal flag and box checks.
pub const UNIVERSAL_TOL: f64 = 1e-9;

/// Analytic and numerical partial-transpose floors across one cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutCertificate {
    pub parties: Vec<usize>,
    /// Two largest squared Schmidt coefficients.
    pub s1: f64,
    pub s2: f64,
    /// `(1 - 2 sqrt(s1 s2)) / 3`, a lower bound on `Omega^{T_K}`.
    pub omega_floor: f64,
    /// `2 (1 - s1) / 3`, a lower bound on `(I - Omega)^{T_K}`.
    pub complement_floor: f64,
    pub omega_eig_min: f64,
    pub complement_eig_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum StrategyCertificate {
    /// Built from an explicit measurement procedure.
    Constructive { description: String },
    Schmidt { cuts: Vec<CutCertificate> },
    /// Result of a class membership test.
    Membership { status: Membership, note: String },
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StrategyJson {
    omega: MatrixJson,
    class: MeasurementClass,
    target: MatrixJson,
    alpha: f64,
    beta: f64,
    gap: f64,
    universal: bool,
    certificate: StrategyCertificate,
    #[serde(default)]
    notes: Vec<String>,
}

/// A binary measurement `Omega` aimed at a target subspace.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "StrategyJson", try_from = "StrategyJson")]
pub struct Strategy {
    pub omega: CMat,
    pub class: MeasurementClass,
    pub target: Subspace,
    /// `min tr(Omega rho)` over states in the target.
    pub alpha: f64,
    /// `max tr(Omega sigma)` over states on the complement.
    pub beta: f64,
    pub gap: f64,
    pub universal: bool,
    pub certificate: StrategyCertificate,
    pub notes: Vec<String>,
}

impl From<Strategy> for StrategyJson {
    fn from(s: Strategy) -> Self {
        StrategyJson {
            omega: MatrixJson::from_mat(&s.omega, s.target.dims()),
            target: MatrixJson::from_subspace(&s.target),
            class: s.class,
            alpha: s.alpha,
            beta: s.beta,
            gap: s.gap,
            universal: s.universal,
            certificate: s.certificate,
            notes: s.notes,
        }
    }
}

impl TryFrom<StrategyJson> for Strategy {
    type Error = QsvError;

    /// Spectral data is recomputed from the matrices; stored numbers are
    /// not trusted.
    fn try_from(j: StrategyJson) -> Result<Self> {
        let omega = j.omega.to_operator()?;
        let target = j.target.to_subspace()?;
        let mut s = Strategy::new(omega, j.class, target, j.certificate)?;
        s.notes = j.notes;
        Ok(s)
    }
}

impl Strategy {
    /// Wraps `omega`, checking `0 <= Omega <= I` and computing the spectral
    /// data.
    pub fn new(omega: CMat, class: MeasurementClass, target: Subspace, certificate: StrategyCertificate) -> Result<Self> {
        let n = target.ambient_dim();
        if omega.nrows() != n || omega.ncols() != n {
            return Err(QsvError::Shape(format!("strategy is {}x{}, target lives in dimension {n}", omega.nrows(), omega.ncols())));
        }
        if class.dim() != n {
            return Err(QsvError::Shape("class dimension does not match the target".into()));
        }
        let defect = qmath::hermitian_defect(&omega);
        if defect > qmath::HERM_TOL_OP {
            return Err(QsvError::NotHermitian(defect));
        }
        let omega = qmath::hermitian_part(&omega);
        let ev = qmath::eigvalsh(&omega);
        if ev[0] > 1.0 + UNIVERSAL_TOL || ev[ev.len() - 1] < -UNIVERSAL_TOL {
            return Err(QsvError::Domain(format!("strategy spectrum [{}, {}] leaves [0, 1]", ev[ev.len() - 1], ev[0])));
        }
        let alpha = alpha_on(&omega, &target);
        let (beta, _) = beta_eps(&omega, &target, 1.0);
        let universal = universal_deviation(&omega, &target) <= UNIVERSAL_TOL;
        let mut notes = Vec::new();
        if alpha < 1.0 - 1e-12 {
            notes.push("target states are accepted with probability below one".into());
        }
        Ok(Strategy { omega, class, target, alpha, beta, gap: alpha - beta, universal, certificate, notes })
    }

    pub fn dims(&self) -> &[usize] {
        self.target.dims()
    }
}

/// `max(||(I - Pi) Omega Pi||, ||Pi Omega Pi - a Pi||)` with `a` the mean
/// eigenvalue on the target.
pub fn universal_deviation(omega: &CMat, v: &Subspace) -> f64 {
    let (d1, d2) = deviation_blocks(omega, v);
    qmath::op_norm_general(&d1).max(qmath::op_norm_herm(&d2))
}

/// `Delta_1 = (I - Pi) Omega Pi` and `Delta_2 = Pi Omega Pi - (tr(Omega Pi)/tr Pi) Pi`.
pub fn deviation_blocks(omega: &CMat, v: &Subspace) -> (CMat, CMat) {
    let pi = v.projector();
    let n = pi.nrows();
    let perp = identity(n) - pi;
    let d1 = &perp * omega * pi;
    let a = inner_re(omega, pi) / v.dim() as f64;
    let d2 = pi * omega * pi - pi * c64(a, 0.0);
    (d1, d2)
}

/// `(d / dim Sym) Pi_Sym` on `n` qudits: apply a Haar-random `U` to every
/// qudit, measure in the computational basis, accept when all outcomes agree.
pub fn symmetric_subspace_strategy(n: usize, d: usize) -> Result<Strategy> {
    if n < 1 || d < 2 {
        return Err(QsvError::Domain("need n >= 1 and d >= 2".into()));
    }
    let sym = symmetric_projector(n, d)?;
    let w = d as f64 / sym.dim() as f64;
    let omega = sym.projector() * c64(w, 0.0);
    let class = MeasurementClass::lo(&vec![d; n]);
    let cert = StrategyCertificate::Constructive { description: "twirled computational POVM".into() };
    Strategy::new(omega, class, sym, cert)
}

/// Projector onto computational strings of Hamming weight `k`.
fn weight_projector(n: usize, k: usize) -> CMat {
    let dim = 1usize << n;
    qmath::real_diag(&(0..dim).map(|i| if (i as u64).count_ones() as usize == k { 1.0 } else { 0.0 }).collect::<Vec<_>>())
}

/// Mixture of the twirled measurement and the weight measurements for
/// `V = span{|D_k> : k in K}`, with mixing weight `p = 2|K|/(n + 2|K| + 1)`.
pub fn dicke_subset_strategy(n: usize, k_set: &[usize]) -> Result<Strategy> {
    let mut ks = k_set.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(QsvError::Domain("the weight set K is empty".into()));
    }
    if n < 1 || ks.iter().any(|&k| k > n) {
        return Err(QsvError::Domain(format!("weights must lie in 0..={n}")));
    }
    let dims = vec![2; n];
    let dim = qmath::dims_product(&dims)?;
    let kk = ks.len() as f64;
    let p = 2.0 * kk / (n as f64 + 2.0 * kk + 1.0);
    let mut twirled = CMat::zeros(dim, dim);
    for k in 0..=n {
        twirled += dicke_state(n, k)?.projector();
    }
    let mut omega = twirled * c64((1.0 - p) * 2.0 / (n as f64 + 1.0), 0.0);
    for &k in &ks {
        omega += weight_projector(n, k) * c64(p / kk, 0.0);
    }
    let mut basis = CMat::zeros(dim, ks.len());
    for (c, &k) in ks.iter().enumerate() {
        basis.set_column(c, dicke_state(n, k)?.vector());
    }
    let v = Subspace::new(basis, dims.clone())?;
    let cert = StrategyCertificate::Constructive { description: "mixture of twirled and computational measurements".into() };
    Strategy::new(omega, MeasurementClass::lo(&dims), v, cert)
}

/// Schmidt-based PT certificate for `Omega = Phi + (I - Phi)/3` across `cut`.
fn cut_certificate(phi: &PureState, omega: &CMat, cut: &BipartitionMask) -> Result<CutCertificate> {
    let sd = qmath::schmidt_decompose(phi.vector(), phi.dims(), cut)?;
    let s1 = sd.coefficients.first().copied().unwrap_or(0.0);
    let s2 = sd.coefficients.get(1).copied().unwrap_or(0.0);
    let n = omega.nrows();
    let pt = qmath::partial_transpose_mat(omega, phi.dims(), cut);
    let ptc = qmath::partial_transpose_mat(&(identity(n) - omega), phi.dims(), cut);
    Ok(CutCertificate {
        parties: cut.parties().to_vec(),
        s1,
        s2,
        omega_floor: (1.0 - 2.0 * (s1 * s2).sqrt()) / 3.0,
        complement_floor: 2.0 * (1.0 - s1) / 3.0,
        omega_eig_min: qmath::lambda_min(&pt),
        complement_eig_min: qmath::lambda_min(&ptc),
    })
}

/// `Omega_Phi = Phi + (I - Phi)/3`, PPT across every cut, gap 2/3.
pub fn ppt_universal_strategy(phi: &PureState) -> Result<Strategy> {
    let n = phi.dim();
    let proj = phi.projector();
    let omega = &proj + (identity(n) - &proj) * c64(1.0 / 3.0, 0.0);
    let cuts = BipartitionMask::all_cuts(phi.dims().len())
        .iter()
        .map(|k| cut_certificate(phi, &omega, k))
        .collect::<Result<Vec<_>>>()?;
    let v = Subspace::from_state(phi)?;
    Strategy::new(omega, MeasurementClass::ppt(phi.dims()), v, StrategyCertificate::Schmidt { cuts })
}

/// The mixing weight `p = eps^{1/3}` used to universalize an
/// `eps`-visibility strategy.
pub fn default_mixing_weight(eps: f64) -> f64 {
    eps.cbrt()
}

/// `(1 - p) Omega + p Omega'` with
/// `Omega' = I/2 - ((1 - p)/p)(Delta_1 + Delta_1^dag + Delta_2)`, which is
/// block diagonal and scalar on the target by construction.
pub fn universalize(omega: &CMat, v: &Subspace, p: f64, class: &MeasurementClass) -> Result<Strategy> {
    if !(p > 0.0 && p < 1.0) {
        return Err(QsvError::Domain(format!("mixing weight p = {p} is outside (0, 1)")));
    }
    let n = v.ambient_dim();
    let (d1, d2) = deviation_blocks(omega, v);
    let dev = &d1 + d1.adjoint() + &d2;
    let omega_prime = qmath::hermitian_part(&(identity(n) * c64(0.5, 0.0) - &dev * c64((1.0 - p) / p, 0.0)));
    let ev = qmath::eigvalsh(&omega_prime);
    let (hi, lo) = (ev[0], ev[ev.len() - 1]);
    if hi > 1.0 + UNIVERSAL_TOL || lo < -UNIVERSAL_TOL {
        let bad = if hi > 1.0 + UNIVERSAL_TOL { hi } else { lo };
        return Err(QsvError::Construction(format!("auxiliary measurement leaves the box: eigenvalue {bad}")));
    }
    // assemble the block-diagonal form directly so the universal structure is exact
    let pi = v.projector();
    let perp = identity(n) - pi;
    let a = inner_re(omega, pi) / v.dim() as f64;
    let block = &perp * omega * &perp + pi * c64(a, 0.0);
    let hat = qmath::hermitian_part(&(block * c64(1.0 - p, 0.0) + identity(n) * c64(0.5 * p, 0.0)));
    let report = membership_check(class, &omega_prime)?;
    let cert = StrategyCertificate::Membership { status: report.status, note: format!("auxiliary measurement: {}", report.note) };
    Strategy::new(hat, class.clone(), v.clone(), cert)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyEvaluation {
    pub alpha: f64,
    pub beta: f64,
    pub gap_eps: f64,
}

/// `alpha`, `beta_eps` and `gap_eps = alpha - beta_eps` of a strategy for
/// accuracy `eps`.
pub fn evaluate_strategy(s: &Strategy, v: &Subspace, eps: f64) -> Result<StrategyEvaluation> {
    evaluate_omega(&s.omega, v, eps)
}

pub fn evaluate_omega(omega: &CMat, v: &Subspace, eps: f64) -> Result<StrategyEvaluation> {
    if omega.nrows() != v.ambient_dim() {
        return Err(QsvError::Shape(format!("strategy of size {} for dimension {}", omega.nrows(), v.ambient_dim())));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(QsvError::Domain(format!("eps = {eps} is outside (0, 1]")));
    }
    let alpha = alpha_on(omega, v);
    let beta = if universal_deviation(omega, v) <= UNIVERSAL_TOL {
        let a = inner_re(omega, v.projector()) / v.dim() as f64;
        let q = v.complement_basis();
        let t = qmath::lambda_max(&(q.adjoint() * omega * &q));
        if a >= t {
            (1.0 - eps) * a + eps * t
        } else {
            t
        }
    } else {
        beta_eps(omega, v, eps).0
    };
    Ok(StrategyEvaluation { alpha, beta, gap_eps: alpha - beta })
}

/// Strategies from the closed-form constructions that apply to `(class, v)`.
/// Used as certified lower bounds for classes without a convex description.
pub fn known_strategies(class: &MeasurementClass, v: &Subspace) -> Vec<Strategy> {
    let mut out = Vec::new();
    let dims = &class.dims;
    let n = dims.len();
    let local = matches!(class.kind, ClassKind::Lo { .. });
    if !local || n == 0 || dims.iter().any(|&d| d != dims[0]) {
        return out;
    }
    let d = dims[0];
    let same = |w: &Subspace| qmath::frob_norm(&(w.projector() - v.projector())) < 1e-9;
    if let Ok(s) = symmetric_subspace_strategy(n, d) {
        if same(&s.target) {
            out.push(s);
        }
    }
    if d == 2 && v.dim() <= n + 1 {
        // which Dicke states span V, if any
        let ks: Vec<usize> = (0..=n)
            .filter(|&k| dicke_state(n, k).map(|s| qmath::expectation(v.projector(), s.vector()) > 1.0 - 1e-9).unwrap_or(false))
            .collect();
        if ks.len() == v.dim() {
            if let Ok(s) = dicke_subset_strategy(n, &ks) {
                if same(&s.target) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// Monte Carlo estimate of the twirled coincidence measurement
/// `E_U (U^dag)^{(x) n} P (U)^{(x) n}` with `P` the all-outcomes-equal projector.
pub fn sampled_twirl(n: usize, d: usize, samples: usize, seed: u64) -> Result<CMat> {
    let dims = vec![d; n];
    let dim = qmath::dims_product(&dims)?;
    let mut rng = rng_from_seed(seed);
    let mut acc = CMat::zeros(dim, dim);
    let step: usize = (0..n).map(|k| d.pow(k as u32)).sum();
    for _ in 0..samples.max(1) {
        let u = haar_unitary_rng(d, &mut rng);
        // rows of U^{(x) n} at the coincidence strings i...i
        let mut full = u.clone();
        for _ in 1..n {
            full = kron(&full, &u);
        }
        for i in 0..d {
            let row = full.row(i * step).adjoint();
            acc += &row * row.adjoint();
        }
    }
    Ok(acc / c64(samples.max(1) as f64, 0.0))
}
