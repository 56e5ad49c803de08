//! Command line front end: argument parsing, presets for targets and
//! states, reproduction tables and output formatting.

use crate::error::{QsvError, Result};
use crate::hiding::{pair_from_subspace, werner_hiding_pair};
use crate::io::{read_json, MatrixJson};
use crate::measclass::{build_design_povm, membership_check, stabilizer_povm, MeasurementClass};
use crate::optim::SolverConfig;
use crate::protocol::{run_protocol, sample_complexity, ProtocolSpec};
use crate::qmath::{self, c64, identity, kron_vec, CMat};
use crate::quantities::{gamma_eps_grid, gamma_hat, m_norm, mu_eps_grid, mu_hat, mu_one, QuantityResult};
use crate::states::{
    antisymmetric_projector, basis_state, dicke_state, maximally_entangled, random_subspace, singlet, symmetric_projector,
    DensityMatrix, PureState, Subspace,
};
use crate::strategies::{dicke_subset_strategy, ppt_universal_strategy, symmetric_subspace_strategy, Strategy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

#[derive(Parser, Debug)]
#[command(name = "qsvlab", version, about = "Verification and data-hiding quantities under restricted measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 20_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub out: OutFormat,
}

impl Common {
    fn config(&self) -> SolverConfig {
        SolverConfig { tolerance: self.tol, max_iter: self.max_iter, restarts: self.restarts, seed: self.seed }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    GammaEps,
    GammaHat,
    MuEps,
    MuOne,
    MuHat,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    #[value(name = "table1-row1")]
    Table1Row1,
    #[value(name = "table1-row3")]
    Table1Row3,
    #[value(name = "table1-row4")]
    Table1Row4,
    PptTwoThirds,
    Werner,
    Hoeffding,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Class distance `||rho - sigma||_M` of two states.
    Norm {
        #[arg(long)]
        class: String,
        /// State file or preset.
        #[arg(long)]
        rho: String,
        #[arg(long)]
        sigma: String,
        #[command(flatten)]
        common: Common,
    },
    /// One of the visibility or distinguishability quantities.
    Quantity {
        #[arg(value_enum)]
        name: QuantityArg,
        #[arg(long)]
        class: String,
        /// Target subspace (file or preset), for the visibility quantities.
        #[arg(long)]
        subspace: Option<String>,
        /// State (file or preset), for the distinguishability ratios.
        #[arg(long)]
        state: Option<String>,
        /// Comma-separated accuracy grid.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        eps: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare computed values against the published constants.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo run of the sequential protocol.
    Simulate {
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        state: String,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Copies per run; defaults to the Hoeffding bound.
        #[arg(long)]
        copies: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Emit the JSON of a constructed strategy.
    Strategy {
        /// sym:N,D | dicke:N:K1,K2 | ppt-universal:TARGET
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Load a strategy file and recompute its spectral data and membership.
    Certify {
        #[arg(long)]
        strategy: String,
        #[command(flatten)]
        common: Common,
    },
    /// Build a certified hiding pair.
    Hide {
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        subspace: Option<String>,
        /// Werner pair with this local dimension.
        #[arg(long)]
        werner: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Serialize)]
pub struct CommandResult {
    pub command: Vec<String>,
    pub config: SolverConfig,
    pub outputs: Value,
    pub exit_code: i32,
}

/// One line of a comparison table.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub quantity: String,
    pub class: String,
    pub params: String,
    pub paper_bound: String,
    pub computed: f64,
    pub tolerance: f64,
    pub pass: Option<bool>,
}

pub const CSV_HEADER: &str = "quantity,class,params,paper_bound,computed,tolerance,pass";

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let pass = r.pass.map(|p| if p { "PASS" } else { "FAIL" }).unwrap_or("");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(&r.quantity),
            csv_field(&r.class),
            csv_field(&r.params),
            csv_field(&r.paper_bound),
            r.computed,
            r.tolerance,
            pass
        ));
    }
    out
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| QsvError::Domain(format!("'{s}' is not a nonnegative integer")))
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(parse_usize).collect()
}

/// Measurement class by name on the given shape.
pub fn parse_class(name: &str, dims: &[usize], restarts: usize, seed: u64) -> Result<MeasurementClass> {
    let lower = name.to_ascii_lowercase();
    let class = match lower.as_str() {
        "full" => MeasurementClass::full(dims),
        "ppt" => MeasurementClass::ppt(dims),
        "lo" => MeasurementClass::lo(dims).with_restarts(restarts),
        "lpv" => MeasurementClass::lpv(dims.len()).with_restarts(restarts),
        "pauli" => MeasurementClass::pauli(dims.len()),
        "stabilizer" => MeasurementClass::design(stabilizer_povm()),
        _ => match lower.strip_prefix("design") {
            Some(t) => {
                let t = parse_usize(t)?;
                let d = qmath::dims_product(dims)?;
                MeasurementClass::design(build_design_povm(d, t, seed)?)
            }
            None => return Err(QsvError::Domain(format!("unknown measurement class '{name}'"))),
        },
    };
    if class.dim() != qmath::dims_product(dims)? {
        return Err(QsvError::Shape(format!("class {name} does not act on shape {dims:?}")));
    }
    class.validate()?;
    Ok(class)
}

fn bell_zero() -> Result<Subspace> {
    let v = kron_vec(maximally_entangled(2)?.vector(), basis_state(&[2], 0)?.vector());
    Subspace::new(CMat::from_column_slice(8, 1, v.as_slice()), vec![2, 2, 2])
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split('x').map(parse_usize).collect()
}

/// Subspace from a JSON file or a preset:
/// `bell`, `bell-zero`, `sym:N,D`, `antisym:D`, `dicke:N:K1,K2`,
/// `random:DIMS:R:SEED` (e.g. `random:2x2:1:7`).
pub fn parse_subspace(spec: &str) -> Result<Subspace> {
    if Path::new(spec).is_file() {
        return read_json::<MatrixJson>(Path::new(spec))?.to_subspace();
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["bell"] => Subspace::from_state(&maximally_entangled(2)?),
        ["bell-zero"] | ["bell0"] => bell_zero(),
        ["sym", nd] => match parse_list(nd)?.as_slice() {
            [n, d] => symmetric_projector(*n, *d),
            _ => Err(QsvError::Domain("expected sym:N,D".into())),
        },
        ["antisym", d] => antisymmetric_projector(parse_usize(d)?),
        ["dicke", n, ks] => {
            let n = parse_usize(n)?;
            let ks = parse_list(ks)?;
            let cols: Vec<_> = ks.iter().map(|&k| dicke_state(n, k).map(|s| s.vector().clone())).collect::<Result<_>>()?;
            Subspace::span(&CMat::from_columns(&cols), vec![2; n])
        }
        ["random", dims, r, seed] => random_subspace(&parse_dims(dims)?, parse_usize(r)?, parse_usize(seed)? as u64),
        _ => Err(QsvError::Io(format!("'{spec}' is neither a file nor a known subspace preset"))),
    }
}

/// `(I - Phi)/(d^2 - 1)`, the normalized complement of the maximally
/// entangled state.
pub fn werner_complement(d: usize) -> Result<DensityMatrix> {
    let n = d * d;
    let phi = maximally_entangled(d)?.projector();
    DensityMatrix::new((identity(n) - phi) * c64(1.0 / (n as f64 - 1.0), 0.0), vec![d, d])
}

/// State from a JSON file or a preset: `werner-complement:D`,
/// `singlet`, or any subspace preset (its normalized projector).
pub fn parse_state(spec: &str) -> Result<DensityMatrix> {
    if Path::new(spec).is_file() {
        return read_json::<MatrixJson>(Path::new(spec))?.to_density();
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["werner-complement", d] => werner_complement(parse_usize(d)?),
        ["singlet"] => Ok(singlet().density()),
        _ => parse_subspace(spec).map(|v| v.uniform_state()),
    }
}

/// Strategy preset: `sym:N,D`, `dicke:N:K1,K2` or `ppt-universal:TARGET`
/// with a one-dimensional target preset or file.
pub fn parse_strategy(spec: &str) -> Result<Strategy> {
    if Path::new(spec).is_file() {
        return read_json::<Strategy>(Path::new(spec));
    }
    let (head, rest) = spec.split_once(':').ok_or_else(|| QsvError::Io(format!("'{spec}' is not a strategy preset")))?;
    match head {
        "sym" => match parse_list(rest)?.as_slice() {
            [n, d] => symmetric_subspace_strategy(*n, *d),
            _ => Err(QsvError::Domain("expected sym:N,D".into())),
        },
        "dicke" => {
            let (n, ks) = rest.split_once(':').ok_or_else(|| QsvError::Domain("expected dicke:N:K1,K2".into()))?;
            dicke_subset_strategy(parse_usize(n)?, &parse_list(ks)?)
        }
        "ppt-universal" => {
            let v = parse_subspace(rest)?;
            if v.dim() != 1 {
                return Err(QsvError::Domain("the PPT universal strategy needs a one-dimensional target".into()));
            }
            ppt_universal_strategy(&PureState::new(v.basis().column(0).into_owned(), v.dims().to_vec())?)
        }
        _ => Err(QsvError::Io(format!("'{spec}' is neither a file nor a known strategy preset"))),
    }
}

fn quantity_row(r: &QuantityResult, params: &str) -> Row {
    Row {
        quantity: serde_json::to_value(r.name).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        class: r.class.clone(),
        params: match r.eps {
            Some(e) => format!("{params};eps={e}"),
            None => params.to_string(),
        },
        paper_bound: String::new(),
        computed: r.value,
        tolerance: 0.0,
        pass: None,
    }
}

/// Exact-class results whose iterative solve stopped early.
fn unconverged(results: &[QuantityResult]) -> bool {
    results.iter().any(|r| r.estimate == crate::quantities::Estimate::Exact && r.report.as_ref().is_some_and(|s| !s.converged))
}

struct Outcome {
    outputs: Value,
    rows: Option<Vec<Row>>,
    code: i32,
}

impl Outcome {
    fn json(outputs: Value) -> Self {
        Outcome { outputs, rows: None, code: 0 }
    }
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn bound_row(quantity: &str, class: &str, params: String, rel: &str, bound: f64, computed: f64, tol: f64) -> Row {
    let pass = match rel {
        ">=" => computed >= bound - tol,
        "<=" => computed <= bound + tol,
        _ => (computed - bound).abs() <= tol,
    };
    Row {
        quantity: quantity.into(),
        class: class.into(),
        params,
        paper_bound: format!("{rel}{bound}"),
        computed,
        tolerance: tol,
        pass: Some(pass),
    }
}

/// Rows of a reproduction target.
pub fn reproduce(target: Target, cfg: &SolverConfig) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    match target {
        Target::Table1Row1 => {
            for (n, d) in [(2usize, 2usize), (3, 2), (2, 3)] {
                let s = symmetric_subspace_strategy(n, d)?;
                let bound = d as f64 / s.target.dim() as f64;
                rows.push(bound_row("gamma_hat", "lo", format!("n={n};d={d}"), ">=", bound, s.gap, 1e-12));
            }
        }
        Target::Table1Row3 => {
            let class = MeasurementClass::ppt(&[2, 2]);
            for r in 1..=3usize {
                let v = random_subspace(&[2, 2], r, 100 + r as u64)?;
                let bound = 1.0 / (2.0 * (r as f64).sqrt());
                for g in gamma_eps_grid(&class, &v, &[0.5, 1.0], cfg)? {
                    let params = format!("dims=2x2;dimV={r};eps={}", g.eps.unwrap_or(1.0));
                    rows.push(bound_row("gamma_eps", "ppt", params, ">=", bound, g.lower.unwrap_or(g.value), 1e-9));
                }
            }
        }
        Target::Table1Row4 => {
            for d in 2..=4usize {
                let v = symmetric_projector(2, d)?;
                let g = gamma_eps_grid(&MeasurementClass::ppt(&[d, d]), &v, &[1.0], cfg)?.remove(0);
                rows.push(bound_row("gamma_eps", "ppt", format!("n=2;d={d};eps=1"), "<=", 2.0 / d as f64, g.value, 1e-3));
            }
        }
        Target::PptTwoThirds => {
            let g = gamma_hat(&MeasurementClass::ppt(&[2, 2, 2]), &bell_zero()?, cfg)?;
            rows.push(bound_row("gamma_hat", "ppt", "V=bell-zero".into(), "=", 2.0 / 3.0, g.value, 1e-4));
        }
        Target::Werner => {
            for d in 2..=8usize {
                let p = werner_hiding_pair(d, cfg)?;
                rows.push(bound_row("eps", "ppt", format!("werner;d={d}"), "=", 1.0, p.eps, 0.0));
                rows.push(bound_row("delta", "ppt", format!("werner;d={d}"), "<=", 2.0 / d as f64, p.delta, 1e-6));
            }
        }
        Target::Hoeffding => {
            let b = sample_complexity(2.0 / 3.0, 0.1, 0.01)?;
            let params = "gamma=2/3;eps=0.1;delta=0.01".to_string();
            rows.push(bound_row("sample_lower", "-", params.clone(), "=", 56.0, b.lower as f64, 0.0));
            rows.push(bound_row("sample_upper", "-", params, "=", 2073.0, b.upper as f64, 0.0));
            for (label, spec, target, far) in hoeffding_cases()? {
                for (which, state) in [("target", &target), ("far", &far)] {
                    let r = run_protocol(&spec, state, 10_000, cfg.seed)?;
                    let hi = r.confidence_interval.map(|c| c.1).unwrap_or(1.0);
                    let params = format!("{label};{which};eps={};m={}", spec.eps, spec.m);
                    rows.push(bound_row("failure_rate_cp99", "-", params, "<=", spec.delta, hi, 0.0));
                }
            }
        }
    }
    Ok(rows)
}

/// The two reference protocols with a target state and a far state each.
pub fn hoeffding_cases() -> Result<Vec<(String, ProtocolSpec, DensityMatrix, DensityMatrix)>> {
    let sym = symmetric_subspace_strategy(2, 2)?;
    let sym_spec = ProtocolSpec::new(sym, 0.5, 0.05, None)?;
    let triplet = basis_state(&[2, 2], 0)?.density();
    let bell = maximally_entangled(2)?;
    let eps = 0.2;
    let bell_spec = ProtocolSpec::new(ppt_universal_strategy(&bell)?, eps, 0.05, None)?;
    let far = bell.density().mat() * c64(1.0 - eps, 0.0) + singlet().density().mat() * c64(eps, 0.0);
    let far = DensityMatrix::new(far, vec![2, 2])?;
    Ok(vec![
        ("sym-2-2".into(), sym_spec, triplet, singlet().density()),
        ("omega-bell".into(), bell_spec, bell.density(), far),
    ])
}

fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Norm { class, rho, sigma, common } => {
            let cfg = common.config();
            let rho = parse_state(rho)?;
            let sigma = parse_state(sigma)?;
            let class = parse_class(class, rho.dims(), common.restarts, common.seed)?;
            let r = m_norm(&class, &rho, &sigma, &cfg)?;
            let code = if unconverged(std::slice::from_ref(&r)) { 3 } else { 0 };
            let row = quantity_row(&r, &format!("dims={:?}", rho.dims()));
            Ok(Outcome { outputs: to_value(&r)?, rows: Some(vec![row]), code })
        }
        Command::Quantity { name, class, subspace, state, eps, common } => {
            let cfg = common.config();
            let results = match name {
                QuantityArg::GammaEps | QuantityArg::GammaHat => {
                    let spec = subspace.as_deref().ok_or_else(|| QsvError::Domain("--subspace is required".into()))?;
                    let v = parse_subspace(spec)?;
                    let class = parse_class(class, v.dims(), common.restarts, common.seed)?;
                    if *name == QuantityArg::GammaHat {
                        vec![gamma_hat(&class, &v, &cfg)?]
                    } else {
                        gamma_eps_grid(&class, &v, eps, &cfg)?
                    }
                }
                _ => {
                    let spec = state.as_deref().ok_or_else(|| QsvError::Domain("--state is required".into()))?;
                    let rho = parse_state(spec)?;
                    let class = parse_class(class, rho.dims(), common.restarts, common.seed)?;
                    match name {
                        QuantityArg::MuOne => vec![mu_one(&class, &rho, &cfg)?],
                        QuantityArg::MuHat => vec![mu_hat(&class, &rho, &[], &cfg)?],
                        _ => mu_eps_grid(&class, &rho, eps, &[], &cfg)?,
                    }
                }
            };
            let target = subspace.as_deref().or(state.as_deref()).unwrap_or_default();
            let rows = results.iter().map(|r| quantity_row(r, target)).collect();
            let code = if unconverged(&results) { 3 } else { 0 };
            Ok(Outcome { outputs: to_value(&results)?, rows: Some(rows), code })
        }
        Command::Reproduce { target, common } => {
            let rows = reproduce(*target, &common.config())?;
            let all = rows.iter().all(|r| r.pass != Some(false));
            Ok(Outcome { outputs: json!({ "rows": to_value(&rows)?, "pass": all }), rows: Some(rows), code: 0 })
        }
        Command::Simulate { strategy, state, eps, delta, trials, copies, common } => {
            let s = parse_strategy(strategy)?;
            let rho = parse_state(state)?;
            let spec = ProtocolSpec::new(s, *eps, *delta, *copies)?;
            let bounds = sample_complexity(spec.visibility().min(1.0), *eps, *delta)?;
            let report = run_protocol(&spec, &rho, *trials, common.seed)?;
            Ok(Outcome::json(json!({ "report": to_value(&report)?, "bounds": to_value(&bounds)?, "tau": spec.tau })))
        }
        Command::Strategy { preset, .. } => Ok(Outcome::json(to_value(&parse_strategy(preset)?)?)),
        Command::Certify { strategy, .. } => {
            let s: Strategy = read_json(Path::new(strategy))?;
            let membership = membership_check(&s.class, &s.omega)?;
            Ok(Outcome::json(json!({
                "alpha": s.alpha,
                "beta": s.beta,
                "gap": s.gap,
                "universal": s.universal,
                "membership": to_value(&membership)?,
                "certificate": to_value(&s.certificate)?,
            })))
        }
        Command::Hide { class, subspace, werner, eps, common } => {
            let cfg = common.config();
            let pair = match (werner, subspace) {
                (Some(d), _) => werner_hiding_pair(*d, &cfg)?,
                (None, Some(v)) => {
                    let v = parse_subspace(v)?;
                    let name = class.as_deref().unwrap_or("ppt");
                    let class = parse_class(name, v.dims(), common.restarts, common.seed)?;
                    pair_from_subspace(&class, &v, *eps, &cfg)?
                }
                (None, None) => return Err(QsvError::Domain("give --werner D or --subspace V".into())),
            };
            Ok(Outcome::json(to_value(&pair)?))
        }
    }
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::Norm { common, .. }
        | Command::Quantity { common, .. }
        | Command::Reproduce { common, .. }
        | Command::Simulate { common, .. }
        | Command::Strategy { common, .. }
        | Command::Certify { common, .. }
        | Command::Hide { common, .. } => common,
    }
}

/// Runs a parsed command and returns the text to print with the exit code.
pub fn run(cli: &Cli, argv: Vec<String>) -> (String, i32) {
    let common = common_of(&cli.command);
    let config = common.config();
    if let Err(e) = config.validate() {
        return (json!({ "error": e.to_string() }).to_string(), e.exit_code());
    }
    match execute(&cli.command) {
        Ok(o) => {
            if common.out == OutFormat::Csv {
                if let Some(rows) = &o.rows {
                    return (rows_to_csv(rows), o.code);
                }
                let e = QsvError::Domain("csv output is not available for this command".into());
                return (json!({ "error": e.to_string() }).to_string(), e.exit_code());
            }
            let result = CommandResult { command: argv, config, outputs: o.outputs, exit_code: o.code };
            (serde_json::to_string_pretty(&result).unwrap_or_default(), o.code)
        }
        Err(e) => {
            let code = e.exit_code();
            let result = CommandResult { command: argv, config, outputs: json!({ "error": e.to_string() }), exit_code: code };
            (serde_json::to_string_pretty(&result).unwrap_or_default(), code)
        }
    }
}

/// Parses `argv` and runs it; clap usage errors exit with 2.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (text, code) = run(&cli, argv);
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout(), "{text}");
    code
}

#[cfg(test)]
mod tests;
