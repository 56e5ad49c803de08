//! Projected subgradient descent for `min_{rho, sigma} sup_M tr(M (rho - sigma))`
//! when only a sup-oracle for the inner problem is available.

use super::project::ConvexStateSet;
use super::SolverConfig;
use crate::qmath::{c64, frob_norm, identity, CMat};

/// The outer variable: either a fixed state or a state ranging over a set.
#[derive(Clone, Debug)]
pub enum StateVar {
    Fixed(CMat),
    Free(ConvexStateSet),
}

#[derive(Clone, Debug)]
pub struct SaddleProblem {
    pub rho: StateVar,
    pub sigma: StateVar,
    /// Objective is `scale * ||rho - sigma||_M`.
    pub scale: f64,
    pub rho_start: Option<CMat>,
    pub sigma_start: Option<CMat>,
}

#[derive(Clone, Debug)]
pub struct SaddleResult {
    /// Best objective value seen (an upper bound on the minimum when the
    /// oracle is exact).
    pub value: f64,
    pub rho: CMat,
    pub sigma: CMat,
    /// Inner maximizer at the best point.
    pub maximizer: CMat,
    pub iterations: usize,
    /// Spread of the best value over the last window of iterations.
    pub spread: f64,
    pub converged: bool,
}

fn start_for(var: &StateVar, hint: &Option<CMat>) -> CMat {
    match var {
        StateVar::Fixed(m) => m.clone(),
        StateVar::Free(set) => {
            let n = set.dim();
            let x = hint.clone().unwrap_or_else(|| identity(n) * c64(1.0 / n as f64, 0.0));
            set.project(&x)
        }
    }
}

/// Minimizes `scale * (2 sup_M tr(M Delta) - tr Delta)` over the free state
/// variables. `oracle(Delta)` returns `(sup value, maximizer)`.
pub fn saddle_solve<F>(p: &SaddleProblem, oracle: F, cfg: &SolverConfig) -> SaddleResult
where
    F: Fn(&CMat) -> (f64, CMat),
{
    let mut rho = start_for(&p.rho, &p.rho_start);
    let mut sigma = start_for(&p.sigma, &p.sigma_start);
    let n = rho.nrows();
    let eye = identity(n);
    let eval = |r: &CMat, s: &CMat| {
        let d = r - s;
        let (v, m) = oracle(&d);
        (p.scale * (2.0 * v - d.trace().re), m)
    };
    let (mut cur, mut m) = eval(&rho, &sigma);
    let mut best = (cur, rho.clone(), sigma.clone(), m.clone());
    let window = 100usize;
    let mut history: Vec<f64> = Vec::with_capacity(cfg.max_iter.min(100_000));
    let mut iterations = 0;
    let mut spread = f64::INFINITY;
    let mut converged = false;
    let step0 = 0.5;
    while iterations < cfg.max_iter {
        iterations += 1;
        let g = (&m * c64(2.0, 0.0) - &eye) * c64(p.scale, 0.0);
        let gn = frob_norm(&g);
        if gn < 1e-14 {
            converged = true;
            spread = 0.0;
            break;
        }
        let h = step0 / (iterations as f64).sqrt() / gn;
        if let StateVar::Free(set) = &p.rho {
            rho = set.project(&(&rho - &g * c64(h, 0.0)));
        }
        if let StateVar::Free(set) = &p.sigma {
            sigma = set.project(&(&sigma + &g * c64(h, 0.0)));
        }
        let (v, mm) = eval(&rho, &sigma);
        cur = v;
        m = mm;
        if cur < best.0 {
            best = (cur, rho.clone(), sigma.clone(), m.clone());
        }
        history.push(best.0);
        if history.len() > window {
            let old = history[history.len() - 1 - window];
            spread = old - best.0;
            if spread <= 10.0 * cfg.tolerance {
                converged = true;
                break;
            }
        }
    }
    let _ = cur;
    SaddleResult { value: best.0, rho: best.1, sigma: best.2, maximizer: best.3, iterations, spread, converged }
}
