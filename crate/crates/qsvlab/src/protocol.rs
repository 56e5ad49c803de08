//! The sequential verification protocol with identical binary
//! measurements: sample-complexity bounds and Monte Carlo runs.

use crate::error::{QsvError, Result};
use crate::qmath::{self, rng_from_seed, CMat};
use crate::states::{fidelity_to_subspace, DensityMatrix};
use crate::strategies::{evaluate_strategy, Strategy};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

/// Confidence level of the reported Clopper-Pearson intervals.
pub const CONFIDENCE: f64 = 0.99;
/// Relative distance to an integer below which a bound is treated as that
/// integer.
const TIE_TOL: f64 = 1e-9;
/// Fidelity slack for deciding which hypothesis a state satisfies.
const HYPOTHESIS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub strategy: Strategy,
    pub eps: f64,
    pub delta: f64,
    /// Acceptance probability guaranteed on the target.
    pub alpha: f64,
    /// Largest acceptance probability at fidelity at most `1 - eps`.
    pub beta: f64,
    pub tau: f64,
    /// Copies per run.
    pub m: usize,
}

impl ProtocolSpec {
    /// Protocol at accuracy `eps` with threshold `(alpha + beta)/2`; `m`
    /// defaults to the Hoeffding bound for error `delta`.
    pub fn new(strategy: Strategy, eps: f64, delta: f64, m: Option<usize>) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(QsvError::Domain(format!("delta = {delta} is outside (0, 1)")));
        }
        let ev = evaluate_strategy(&strategy, &strategy.target, eps)?;
        let (alpha, beta) = (ev.alpha, ev.beta);
        let tau = 0.5 * (alpha + beta);
        if !(0.0 <= beta && beta < tau && tau < alpha && alpha <= 1.0 + 1e-12) {
            return Err(QsvError::Domain(format!("strategy does not separate the hypotheses (alpha {alpha}, beta {beta})")));
        }
        let m = match m {
            Some(0) => return Err(QsvError::Domain("at least one copy is needed".into())),
            Some(m) => m,
            None => sample_complexity(ev.gap_eps / eps, eps, delta)?.upper,
        };
        Ok(ProtocolSpec { strategy, eps, delta, alpha, beta, tau, m })
    }

    /// `(alpha - beta) / eps`.
    pub fn visibility(&self) -> f64 {
        (self.alpha - self.beta) / self.eps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexityBounds {
    pub gamma: f64,
    pub eps: f64,
    pub delta: f64,
    /// `ceil(log(1/(2 delta)) / (gamma log(1/(1 - eps))))`, at least 1.
    pub lower: usize,
    /// `floor(2 log(1/delta) / (gamma eps)^2) + 1`.
    pub upper: usize,
}

fn near_integer(x: f64) -> Option<f64> {
    let r = x.round();
    ((x - r).abs() <= TIE_TOL * x.abs().max(1.0)).then_some(r)
}

fn ceil_snapped(x: f64) -> f64 {
    near_integer(x).unwrap_or_else(|| x.ceil())
}

fn floor_snapped(x: f64) -> f64 {
    near_integer(x).unwrap_or_else(|| x.floor())
}

/// Both sample-complexity bounds for visibility `gamma` (or spectral gap),
/// accuracy `eps` and error `delta`, with natural logarithms.
pub fn sample_complexity(gamma: f64, eps: f64, delta: f64) -> Result<SampleComplexityBounds> {
    for (name, x) in [("gamma", gamma), ("eps", eps)] {
        if !(x > 0.0 && x <= 1.0) {
            return Err(QsvError::Domain(format!("{name} = {x} is outside (0, 1]")));
        }
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QsvError::Domain(format!("delta = {delta} is outside (0, 1)")));
    }
    // log(1/(1 - eps)) without cancellation; infinite at eps = 1
    let rate = -(-eps).ln_1p();
    let lower = if rate.is_infinite() {
        1.0
    } else {
        ceil_snapped((1.0 / (2.0 * delta)).ln() / (gamma * rate)).max(1.0)
    };
    let upper = floor_snapped(2.0 * (1.0 / delta).ln() / (gamma * eps).powi(2)) + 1.0;
    if upper > usize::MAX as f64 / 2.0 {
        return Err(QsvError::Domain("sample bound overflows".into()));
    }
    Ok(SampleComplexityBounds { gamma, eps, delta, lower: lower as usize, upper: upper as usize })
}

/// Which hypothesis the tested state satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    /// Supported on the target; failure means rejection.
    Target,
    /// Fidelity at most `1 - eps`; failure means acceptance.
    Far,
    BetweenHypotheses,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trials: usize,
    pub acceptances: usize,
    pub hypothesis: Hypothesis,
    pub failures: Option<usize>,
    pub failure_rate: Option<f64>,
    /// Clopper-Pearson interval for the failure probability.
    pub confidence_interval: Option<(f64, f64)>,
    /// Whether the upper end of the interval is at most `delta`.
    pub pass: Option<bool>,
    pub q: f64,
    pub m: usize,
    pub tau: f64,
    pub delta: f64,
    pub seed: u64,
}

/// Single-copy acceptance probability `tr(Omega rho)`, clamped to `[0, 1]`.
pub fn q_exact(spec: &ProtocolSpec, state: &DensityMatrix) -> Result<f64> {
    if state.dims() != spec.strategy.dims() {
        return Err(QsvError::Shape(format!("state of shape {:?} for a strategy on {:?}", state.dims(), spec.strategy.dims())));
    }
    acceptance_probability(&spec.strategy.omega, state)
}

pub fn acceptance_probability(omega: &CMat, state: &DensityMatrix) -> Result<f64> {
    if omega.nrows() != state.dim() || omega.ncols() != state.dim() {
        return Err(QsvError::Shape(format!("operator of size {} for a state of dimension {}", omega.nrows(), state.dim())));
    }
    Ok(qmath::inner_re(omega, state.mat()).clamp(0.0, 1.0))
}

/// Runs `trials` independent protocols on copies of `state`.
pub fn run_protocol(spec: &ProtocolSpec, state: &DensityMatrix, trials: usize, seed: u64) -> Result<TrialReport> {
    if trials == 0 {
        return Err(QsvError::Domain("at least one trial is needed".into()));
    }
    let q = q_exact(spec, state)?;
    let fid = fidelity_to_subspace(state, &spec.strategy.target)?;
    let hypothesis = if fid >= 1.0 - HYPOTHESIS_TOL {
        Hypothesis::Target
    } else if fid <= 1.0 - spec.eps + HYPOTHESIS_TOL {
        Hypothesis::Far
    } else {
        Hypothesis::BetweenHypotheses
    };
    // the count of accepting copies is binomial; one draw per trial
    let dist = Binomial::new(spec.m as u64, q).map_err(|e| QsvError::Domain(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let m = spec.m as f64;
    let acceptances = (0..trials).filter(|_| dist.sample(&mut rng) as f64 / m > spec.tau).count();
    let failures = match hypothesis {
        Hypothesis::Target => Some(trials - acceptances),
        Hypothesis::Far => Some(acceptances),
        Hypothesis::BetweenHypotheses => None,
    };
    let confidence_interval = failures.map(|k| clopper_pearson(k, trials, CONFIDENCE));
    Ok(TrialReport {
        trials,
        acceptances,
        hypothesis,
        failures,
        failure_rate: failures.map(|k| k as f64 / trials as f64),
        confidence_interval,
        pass: confidence_interval.map(|(_, hi)| hi <= spec.delta),
        q,
        m: spec.m,
        tau: spec.tau,
        delta: spec.delta,
        seed,
    })
}

/// Quantile of `Beta(a, b)` by bisection on the regularized incomplete
/// beta function.
fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Clopper-Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> (f64, f64) {
    let tail = 0.5 * (1.0 - confidence);
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 { 0.0 } else { beta_quantile(kf, nf - kf + 1.0, tail) };
    let hi = if k >= n { 1.0 } else { beta_quantile(kf + 1.0, nf - kf, 1.0 - tail) };
    (lo, hi)
}
