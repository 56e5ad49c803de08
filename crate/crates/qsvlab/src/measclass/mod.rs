//! Measurement classes, their binary-measurement sets, membership tests and
//! sup-oracles `sup_{M} tr(M Delta)`.

pub mod design;
pub mod local;

use crate::error::{QsvError, Result};
use crate::optim::{maximize_linear, FeasibleSetSpec, SolverConfig};
use crate::qmath::{self, c64, eigh, identity, inner_re, BipartitionMask, CMat, PtMap};
use serde::{Deserialize, Serialize};

pub use design::{build_design_povm, build_numeric_design, stabilizer_povm, verify_design, DesignPovm};
pub use local::LocalWitness;

/// Largest qubit count for exhaustive Pauli enumeration.
pub const PAULI_ENUM_MAX: usize = 6;
/// Largest qubit count for which the Pauli class gets a convex description.
pub const PAULI_POLYTOPE_MAX: usize = 3;
pub const DEFAULT_LOCAL_RESTARTS: usize = 32;
pub const DEFAULT_GRID: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Exact,
    HeuristicLowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassKind {
    Full,
    Ppt { partitions: Vec<BipartitionMask> },
    Lo { restarts: usize },
    Lpv { restarts: usize },
    Pauli,
    Design { povm: DesignPovm },
}

/// A measurement class on a fixed tensor shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementClass {
    pub dims: Vec<usize>,
    pub kind: ClassKind,
}

impl MeasurementClass {
    pub fn full(dims: &[usize]) -> Self {
        MeasurementClass { dims: dims.to_vec(), kind: ClassKind::Full }
    }

    /// PPT class over every nontrivial bipartition.
    pub fn ppt(dims: &[usize]) -> Self {
        Self::ppt_with(dims, BipartitionMask::all_cuts(dims.len()))
    }

    pub fn ppt_with(dims: &[usize], partitions: Vec<BipartitionMask>) -> Self {
        MeasurementClass { dims: dims.to_vec(), kind: ClassKind::Ppt { partitions } }
    }

    pub fn lo(dims: &[usize]) -> Self {
        MeasurementClass { dims: dims.to_vec(), kind: ClassKind::Lo { restarts: DEFAULT_LOCAL_RESTARTS } }
    }

    pub fn lpv(n: usize) -> Self {
        MeasurementClass { dims: vec![2; n], kind: ClassKind::Lpv { restarts: DEFAULT_LOCAL_RESTARTS } }
    }

    pub fn pauli(n: usize) -> Self {
        MeasurementClass { dims: vec![2; n], kind: ClassKind::Pauli }
    }

    pub fn design(povm: DesignPovm) -> Self {
        MeasurementClass { dims: vec![povm.dim], kind: ClassKind::Design { povm } }
    }

    pub fn with_restarts(mut self, r: usize) -> Self {
        match &mut self.kind {
            ClassKind::Lo { restarts } | ClassKind::Lpv { restarts } => *restarts = r,
            _ => {}
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn exactness(&self) -> Exactness {
        match &self.kind {
            ClassKind::Full | ClassKind::Ppt { .. } | ClassKind::Design { .. } => Exactness::Exact,
            ClassKind::Pauli if self.dims.len() <= PAULI_ENUM_MAX => Exactness::Exact,
            _ => Exactness::HeuristicLowerBound,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exactness() == Exactness::Exact
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ClassKind::Full => "full",
            ClassKind::Ppt { .. } => "ppt",
            ClassKind::Lo { .. } => "lo",
            ClassKind::Lpv { .. } => "lpv",
            ClassKind::Pauli => "pauli",
            ClassKind::Design { .. } => "design",
        }
    }

    /// Constraint set for the classes with a convex description.
    pub fn feasible_set(&self) -> Option<FeasibleSetSpec> {
        match &self.kind {
            ClassKind::Full => Some(FeasibleSetSpec::full(&self.dims)),
            ClassKind::Ppt { partitions } => Some(FeasibleSetSpec::ppt(&self.dims, partitions.clone())),
            ClassKind::Design { povm } => Some(FeasibleSetSpec::polytope(&self.dims, vec![povm.elements()])),
            ClassKind::Pauli if self.dims.len() <= PAULI_POLYTOPE_MAX => {
                Some(FeasibleSetSpec::polytope(&self.dims, pauli_povms(self.dims.len())))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        qmath::dims_product(&self.dims)?;
        match &self.kind {
            ClassKind::Lpv { .. } | ClassKind::Pauli if self.dims.iter().any(|&d| d != 2) => {
                Err(QsvError::Domain(format!("{} class is defined on qubits only", self.name())))
            }
            ClassKind::Ppt { partitions } => {
                for k in partitions {
                    if k.is_empty() || k.parties().iter().any(|&p| p >= self.dims.len()) {
                        return Err(QsvError::Shape(format!("bad cut {:?}", k.parties())));
                    }
                }
                Ok(())
            }
            ClassKind::Design { povm } if povm.dim != self.dim() => {
                Err(QsvError::Shape("design dimension does not match the class".into()))
            }
            _ => Ok(()),
        }
    }

    fn check_operator(&self, m: &CMat) -> Result<()> {
        let n = self.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(QsvError::Shape(format!("operator is {}x{}, class acts on dimension {n}", m.nrows(), m.ncols())));
        }
        let defect = qmath::hermitian_defect(m);
        if defect > qmath::HERM_TOL_OP {
            return Err(QsvError::NotHermitian(defect));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Member,
    NotMember,
    Unknown,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub amount: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MembershipReport {
    pub status: Membership,
    pub violations: Vec<Violation>,
    pub note: String,
}

impl MembershipReport {
    pub fn is_member(&self) -> bool {
        self.status == Membership::Member
    }
}

const MEMBER_TOL: f64 = 1e-8;

fn box_excess(m: &CMat) -> f64 {
    let ev = qmath::eigvalsh(m);
    (-ev[ev.len() - 1]).max(ev[0] - 1.0).max(0.0)
}

/// Tests `m` against the binary-measurement set of `class`.
pub fn membership_check(class: &MeasurementClass, m: &CMat) -> Result<MembershipReport> {
    class.check_operator(m)?;
    let m = qmath::hermitian_part(m);
    let mut violations = Vec::new();
    let b = box_excess(&m);
    if b > MEMBER_TOL {
        violations.push(Violation { constraint: "box".into(), amount: b });
        return Ok(MembershipReport { status: Membership::NotMember, violations, note: String::new() });
    }
    let n = class.dim();
    // multiples of the identity are mixtures of the trivial outcomes
    let c = m.trace().re / n as f64;
    if qmath::frob_norm(&(&m - identity(n) * c64(c, 0.0))) <= MEMBER_TOL {
        return Ok(MembershipReport { status: Membership::Member, violations, note: "multiple of identity".into() });
    }
    match &class.kind {
        ClassKind::Full => Ok(MembershipReport { status: Membership::Member, violations, note: String::new() }),
        ClassKind::Ppt { partitions } => {
            for k in partitions {
                let t = PtMap::new(&class.dims, k).apply(&m);
                let v = box_excess(&t);
                if v > MEMBER_TOL {
                    violations.push(Violation { constraint: format!("pt{:?}", k.parties()), amount: v });
                }
            }
            let status = if violations.is_empty() { Membership::Member } else { Membership::NotMember };
            Ok(MembershipReport { status, violations, note: String::new() })
        }
        ClassKind::Design { povm } => {
            let (res, _) = zonotope_distance(&povm.elements(), &m);
            if res <= MEMBER_TOL {
                Ok(MembershipReport { status: Membership::Member, violations, note: format!("residual {res:e}") })
            } else {
                violations.push(Violation { constraint: "subset-sum hull".into(), amount: res });
                Ok(MembershipReport { status: Membership::NotMember, violations, note: String::new() })
            }
        }
        ClassKind::Lo { .. } | ClassKind::Lpv { .. } | ClassKind::Pauli => Ok(MembershipReport {
            status: Membership::Unknown,
            violations,
            note: "membership is certified only through a constructive witness".into(),
        }),
    }
}

/// Certifies `m` from a local-measurement witness: the bases must be unitary
/// (Pauli eigenbases for the Pauli class) and must realize `m`.
pub fn membership_with_witness(class: &MeasurementClass, m: &CMat, w: &LocalWitness) -> Result<MembershipReport> {
    class.check_operator(m)?;
    let mut violations = Vec::new();
    if w.dims != class.dims || w.accepted.len() != class.dim() {
        return Err(QsvError::Shape("witness shape does not match the class".into()));
    }
    let bases = w.bases();
    for (a, u) in bases.iter().enumerate() {
        let d = u.nrows();
        let e = (u.adjoint() * u - identity(d)).norm();
        if e > MEMBER_TOL {
            violations.push(Violation { constraint: format!("unitary basis {a}"), amount: e });
        }
        if class.kind == ClassKind::Pauli {
            let dev = local::pauli_bases()
                .iter()
                .map(|p| {
                    let ov = p.adjoint() * u;
                    // each column of u must be a phase times a column of p
                    let mut dev: f64 = 0.0;
                    for j in 0..2 {
                        let best = (0..2).map(|i| ov[(i, j)].norm()).fold(0.0, f64::max);
                        dev = dev.max(1.0 - best);
                    }
                    dev
                })
                .fold(f64::INFINITY, f64::min);
            if dev > MEMBER_TOL {
                violations.push(Violation { constraint: format!("pauli basis {a}"), amount: dev });
            }
        }
    }
    let diff = qmath::frob_norm(&(w.realize() - m));
    if diff > MEMBER_TOL {
        violations.push(Violation { constraint: "witness realization".into(), amount: diff });
    }
    let status = match (&class.kind, violations.is_empty()) {
        (ClassKind::Full | ClassKind::Ppt { .. } | ClassKind::Design { .. }, _) => return membership_check(class, m),
        (_, true) => Membership::Member,
        (_, false) => Membership::NotMember,
    };
    Ok(MembershipReport { status, violations, note: "local witness".into() })
}

/// Distance from `m` to `{sum_i r_i phi_i : 0 <= r_i <= 1}` (the convex hull
/// of subset sums), by accelerated projected gradient on `r`.
pub fn zonotope_distance(elements: &[CMat], m: &CMat) -> (f64, Vec<f64>) {
    let k = elements.len();
    let gram: Vec<Vec<f64>> = elements.iter().map(|a| elements.iter().map(|b| inner_re(a, b)).collect()).collect();
    let rhs: Vec<f64> = elements.iter().map(|a| inner_re(a, m)).collect();
    let gm = nalgebra::DMatrix::from_fn(k, k, |i, j| gram[i][j]);
    let lip = gm.symmetric_eigen().eigenvalues.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let mut r = vec![0.5; k];
    let mut y = r.clone();
    let mut tk = 1.0f64;
    for _ in 0..20_000 {
        let grad: Vec<f64> = (0..k).map(|i| (0..k).map(|j| gram[i][j] * y[j]).sum::<f64>() - rhs[i]).collect();
        let rn: Vec<f64> = (0..k).map(|i| (y[i] - grad[i] / lip).clamp(0.0, 1.0)).collect();
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let change: f64 = rn.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = (0..k).map(|i| rn[i] + (tk - 1.0) / tn * (rn[i] - r[i])).collect();
        r = rn;
        tk = tn;
        if change < 1e-15 {
            break;
        }
    }
    let mut acc = -m.clone();
    for (e, &ri) in elements.iter().zip(&r) {
        acc += e * c64(ri, 0.0);
    }
    (qmath::frob_norm(&acc), r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Certificate {
    /// Closed form (eigendecomposition, enumeration).
    Exact,
    /// Convex solve with a dual upper bound.
    DualBound { upper: f64, iterations: usize, converged: bool },
    /// Heuristic search; values of each restart.
    Restarts { values: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct SupOracleResult {
    /// `tr(M Delta)` at the returned maximizer.
    pub value: f64,
    pub maximizer: CMat,
    pub certificate: Certificate,
    pub exactness: Exactness,
    pub witness: Option<LocalWitness>,
}

impl SupOracleResult {
    /// Upper bound on the true supremum, when known.
    pub fn upper(&self) -> Option<f64> {
        match (&self.certificate, self.exactness) {
            (Certificate::DualBound { upper, .. }, _) => Some(*upper),
            (_, Exactness::Exact) => Some(self.value),
            _ => None,
        }
    }
}

/// `sup_{M in class} tr(M Delta)`.
pub fn sup_oracle(class: &MeasurementClass, delta: &CMat, cfg: &SolverConfig) -> Result<SupOracleResult> {
    class.validate()?;
    class.check_operator(delta)?;
    let delta = qmath::hermitian_part(delta);
    let n = class.dim();
    let exactness = class.exactness();
    if qmath::max_abs_entry(&delta) == 0.0 {
        return Ok(SupOracleResult {
            value: 0.0,
            maximizer: identity(n) * c64(0.5, 0.0),
            certificate: Certificate::Exact,
            exactness,
            witness: None,
        });
    }
    let from_local = |s: local::LocalSearch, exact: bool| {
        let w = s.witness();
        let m = w.realize();
        let value = inner_re(&m, &delta);
        let certificate = if exact { Certificate::Exact } else { Certificate::Restarts { values: s.restart_values } };
        SupOracleResult { value, maximizer: m, certificate, exactness, witness: Some(w) }
    };
    let out = match &class.kind {
        ClassKind::Full => {
            let e = eigh(&delta);
            let m = e.map(|l| if l > 0.0 { 1.0 } else { 0.0 });
            SupOracleResult { value: inner_re(&m, &delta), maximizer: m, certificate: Certificate::Exact, exactness, witness: None }
        }
        ClassKind::Ppt { .. } => {
            let spec = class.feasible_set().unwrap();
            let s = maximize_linear(&spec, &delta, cfg)?;
            let upper = s.upper_bound.unwrap_or(f64::INFINITY);
            let value = inner_re(&s.maximizer, &delta);
            SupOracleResult {
                value,
                maximizer: s.maximizer,
                certificate: Certificate::DualBound { upper, iterations: s.report.iterations, converged: s.report.converged },
                exactness,
                witness: None,
            }
        }
        ClassKind::Design { povm } => {
            let mut m = CMat::zeros(n, n);
            for e in povm.elements() {
                if inner_re(&e, &delta) > 1e-12 {
                    m += e;
                }
            }
            SupOracleResult { value: inner_re(&m, &delta), maximizer: m, certificate: Certificate::Exact, exactness, witness: None }
        }
        ClassKind::Pauli => {
            let q = class.dims.len();
            if q <= PAULI_ENUM_MAX {
                from_local(local::pauli_enumerate(&delta, q), true)
            } else {
                from_local(local::pauli_coordinate(&delta, q, DEFAULT_LOCAL_RESTARTS, cfg.seed), false)
            }
        }
        ClassKind::Lo { restarts } => from_local(local::see_saw(&delta, &class.dims, *restarts, cfg.seed), false),
        ClassKind::Lpv { restarts } => {
            from_local(local::bloch_ascent(&delta, class.dims.len(), *restarts, cfg.seed), false)
        }
    };
    Ok(out)
}

/// Projectors of the `3^n` product Pauli measurements, one group per basis.
pub fn pauli_povms(n: usize) -> Vec<Vec<CMat>> {
    let pb = local::pauli_bases();
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let mut bases = vec![CMat::zeros(2, 2); n];
        for q in (0..n).rev() {
            bases[q] = pb[c % 3].clone();
            c /= 3;
        }
        let u = local::product_basis(&bases);
        out.push((0..u.ncols()).map(|s| u.column(s) * u.column(s).adjoint()).collect());
    }
    out
}

/// Brute-force grid oracle for the two-qubit local class.
pub fn lo_grid_oracle(delta: &CMat, grid: usize) -> Result<SupOracleResult> {
    if delta.nrows() != 4 || delta.ncols() != 4 {
        return Err(QsvError::Shape("grid oracle is defined for two qubits".into()));
    }
    let delta = qmath::hermitian_part(delta);
    let s = local::two_qubit_grid(&delta, grid);
    let w = s.witness();
    let m = w.realize();
    Ok(SupOracleResult {
        value: inner_re(&m, &delta),
        maximizer: m,
        certificate: Certificate::Restarts { values: s.restart_values },
        exactness: Exactness::HeuristicLowerBound,
        witness: Some(w),
    })
}

#[cfg(test)]
mod tests;
