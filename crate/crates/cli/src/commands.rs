use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uniform_capacity::analytic::lattice::lattice_positions;
use uniform_capacity::*;

use crate::io::{emit, fmt_f64, to_json, SCHEMA};

/// Grid cells at least this heavy are listed for full-support solutions.
pub const CELL_FLOOR: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GridOut {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct KktOut {
    pub max_violation: f64,
    pub max_equality_residual: f64,
    pub cost_residual: f64,
    pub check_grid_size: usize,
    pub worst_x: f64,
    pub passed: bool,
}

impl From<&Report> for KktOut {
    fn from(k: &Report) -> Self {
        Self {
            max_violation: k.max_inequality_violation,
            max_equality_residual: k.max_equality_residual,
            cost_residual: k.cost_residual,
            check_grid_size: k.check_grid_size,
            worst_x: k.worst_x,
            passed: k.passed,
        }
    }
}

/// Fields `verify` needs from a `solve` or `oracle` document.
#[derive(Debug, Deserialize)]
struct VerifyInput {
    schema: String,
    r: f64,
    alpha: f64,
    cbar: f64,
    lambda_star: f64,
    #[serde(default)]
    support: Vec<Point>,
    #[serde(default)]
    grid: Option<GridOut>,
}

#[derive(Debug, Serialize)]
pub struct SolveOut {
    pub schema: String,
    pub r: f64,
    pub alpha: f64,
    pub cbar: f64,
    pub regime: String,
    pub support_index: Option<usize>,
    pub lambda_star: f64,
    pub cbar_star: f64,
    pub capacity_nats: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_bits: Option<f64>,
    pub support: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridOut>,
    pub kkt: KktOut,
}

fn bits(enabled: bool, nats: f64) -> Option<f64> {
    enabled.then(|| nats / LN_2)
}

fn grid_out(grid: &Grid, iterations: Option<usize>, converged: Option<bool>) -> GridOut {
    GridOut {
        grid: grid.positions(),
        weights: grid.weights().to_vec(),
        iterations,
        converged,
    }
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| ((*k).to_owned(), v.clone())).collect()
}

pub struct SolveArgs {
    pub r: f64,
    pub alpha: f64,
    pub cbar: f64,
    pub grid: usize,
    pub bits: bool,
}

pub fn solve_one(a: &SolveArgs) -> Result<SolveOut> {
    let ch = Channel::from_r(a.r)?;
    let cost = Cost::new(a.alpha, a.cbar)?;
    let solver = DefaultSolver::new(OracleConfig::with_grid(a.grid), KktOptions::default());
    let res = solver.solve(&ch, &cost)?;
    let (support, grid) = match &res.solution {
        Solution::Discrete(d) => (d.iter().map(|(x, m)| Point { x, m }).collect(), None),
        Solution::Continuous {
            grid,
            iterations,
            converged,
        } => (Vec::new(), Some(grid_out(grid, Some(*iterations), Some(*converged)))),
    };
    Ok(SolveOut {
        schema: SCHEMA.into(),
        r: ch.r(),
        alpha: a.alpha,
        cbar: a.cbar,
        regime: res.regime.label().into(),
        support_index: res.regime.support_index(),
        lambda_star: res.lambda_star,
        cbar_star: res.cbar_star,
        capacity_nats: res.capacity_nats,
        capacity_bits: bits(a.bits, res.capacity_nats),
        support,
        grid,
        kkt: KktOut::from(&res.kkt),
    })
}

pub fn solve(a: &SolveArgs, out: &Path) -> Result<bool> {
    let result = solve_one(a)?;
    emit(
        "solve",
        params(&[
            ("r", json!(a.r)),
            ("alpha", json!(a.alpha)),
            ("cbar", json!(a.cbar)),
            ("grid", json!(a.grid)),
            ("bits", json!(a.bits)),
        ]),
        &[(out.to_path_buf(), to_json(&result)?)],
        out,
    )?;
    Ok(true)
}

pub struct VerifyArgs {
    pub eq_tol: Option<f64>,
    pub ineq_tol: Option<f64>,
    pub check_grid: usize,
    /// Optional CSV of `i(x)` and `I + λ(c(x) - c̄)` on the check grid.
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Residual {
    x: f64,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct VerifyOut {
    schema: &'static str,
    input: String,
    r: f64,
    alpha: f64,
    cbar: f64,
    lambda: f64,
    capacity_nats: f64,
    eq_tol: f64,
    ineq_tol: f64,
    equality_residuals: Vec<Residual>,
    max_equality_residual: f64,
    max_violation: f64,
    worst_x: f64,
    cost_residual: f64,
    check_grid_size: usize,
    infinite_at: Option<f64>,
    passed: bool,
}

/// Checks a `solve` (or `oracle`) output file; returns whether it passed.
pub fn verify(input: &Path, a: &VerifyArgs, out: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let doc: VerifyInput = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a {SCHEMA} solution document", input.display()))?;
    ensure!(
        doc.schema == SCHEMA,
        "unsupported schema {:?}, expected {SCHEMA:?}",
        doc.schema
    );
    let ch = Channel::from_r(doc.r)?;
    let cost = Cost::new(doc.alpha, doc.cbar)?;
    // gridded solutions are checked with the looser full-support tolerances
    let (dist, mut opts) = if !doc.support.is_empty() {
        let dist = Distribution::new(doc.support.iter().map(|p| (p.x, p.m)))?;
        (dist, KktOptions::default())
    } else if let Some(g) = &doc.grid {
        ensure!(
            g.grid.len() == g.weights.len(),
            "grid and weights differ in length"
        );
        let dist = Distribution::normalized(
            g.grid
                .iter()
                .zip(&g.weights)
                .filter(|&(_, &w)| w > 0.0)
                .map(|(&x, &w)| (x, w)),
        )?;
        (dist, DefaultSolver::default().continuous_kkt)
    } else {
        bail!("document has neither a support nor a grid");
    };
    opts.check_grid_size = a.check_grid;
    if let Some(t) = a.eq_tol {
        opts.eq_tol = t;
    }
    if let Some(t) = a.ineq_tol {
        opts.ineq_tol = t;
    }
    let rep = uniform_capacity::verify(&dist, doc.lambda_star, &ch, &cost, &opts)?;
    let curve = match &a.curve {
        Some(path) => Some((path.clone(), info_curve(&dist, doc.lambda_star, rep.capacity_nats, &ch, &cost, a.check_grid)?)),
        None => None,
    };
    let result = VerifyOut {
        schema: SCHEMA,
        input: input.display().to_string(),
        r: doc.r,
        alpha: doc.alpha,
        cbar: doc.cbar,
        lambda: doc.lambda_star,
        capacity_nats: rep.capacity_nats,
        eq_tol: opts.eq_tol,
        ineq_tol: opts.ineq_tol,
        equality_residuals: rep
            .equality_residuals
            .iter()
            .map(|&(x, residual)| Residual { x, residual })
            .collect(),
        max_equality_residual: rep.max_equality_residual,
        max_violation: rep.max_inequality_violation,
        worst_x: rep.worst_x,
        cost_residual: rep.cost_residual,
        check_grid_size: rep.check_grid_size,
        infinite_at: rep.infinite_at,
        passed: rep.passed,
    };
    emit(
        "verify",
        params(&[
            ("input", json!(input.display().to_string())),
            ("eq_tol", json!(opts.eq_tol)),
            ("ineq_tol", json!(opts.ineq_tol)),
            ("check_grid", json!(a.check_grid)),
            ("curve", json!(a.curve.as_ref().map(|p| p.display().to_string()))),
        ]),
        &std::iter::once((out.to_path_buf(), to_json(&result)?))
            .chain(curve)
            .collect::<Vec<_>>(),
        out,
    )?;
    Ok(rep.passed)
}

/// `x,info_density,bound` rows; the density is `inf` where the output vanishes.
fn info_curve(
    dist: &Distribution,
    lambda: f64,
    capacity: f64,
    ch: &Channel,
    cost: &Cost,
    points: usize,
) -> Result<String> {
    ensure!(points >= 2, "check grid needs at least 2 points");
    let density = OutputDensity::new(dist, ch);
    let mut csv = String::from("x,info_density,bound\n");
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        let bound = capacity + lambda * (cost.cost(x) - cost.cbar());
        let info = density.information_density(x).value();
        writeln!(csv, "{},{},{}", fmt_f64(x), fmt_f64(info), fmt_f64(bound))?;
    }
    Ok(csv)
}

pub struct OracleArgs {
    pub r: f64,
    pub alpha: f64,
    pub cbar: f64,
    pub grid: usize,
    pub max_iter: usize,
    pub conv_tol: f64,
    pub bits: bool,
}

#[derive(Debug, Serialize)]
struct OracleOut {
    schema: &'static str,
    r: f64,
    alpha: f64,
    cbar: f64,
    lambda_star: f64,
    cbar_star: f64,
    capacity_nats: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    capacity_bits: Option<f64>,
    achieved_cost: f64,
    iterations: usize,
    converged: bool,
    duality_gap: f64,
    diagnostic: Option<String>,
    bisection_trace: Vec<[f64; 2]>,
    clusters: Vec<Point>,
    grid: GridOut,
}

pub fn oracle(a: &OracleArgs, out: &Path) -> Result<bool> {
    let ch = Channel::from_r(a.r)?;
    let cost = Cost::new(a.alpha, a.cbar)?;
    let cfg = OracleConfig {
        grid_size: a.grid,
        max_iter: a.max_iter,
        conv_tol: a.conv_tol,
        ..OracleConfig::default()
    };
    let ba = ba_constrained(&ch, &cost, &cfg)?;
    let h = ba.dist.spacing();
    let clusters = uniform_capacity::oracle::clusters(&ba.dist, 1e-3, 1.5 * h)
        .into_iter()
        .map(|c| Point {
            x: c.center,
            m: c.mass,
        })
        .collect();
    let result = OracleOut {
        schema: SCHEMA,
        r: ch.r(),
        alpha: a.alpha,
        cbar: a.cbar,
        lambda_star: ba.lambda,
        cbar_star: critical_cost(&ch, &cost),
        capacity_nats: ba.capacity_nats,
        capacity_bits: bits(a.bits, ba.capacity_nats),
        achieved_cost: ba.achieved_cost,
        iterations: ba.iterations,
        converged: ba.converged,
        duality_gap: ba.duality_gap,
        diagnostic: ba.diagnostic.clone(),
        bisection_trace: ba.bisection_trace.iter().map(|&(l, c)| [l, c]).collect(),
        clusters,
        grid: grid_out(&ba.dist, None, None),
    };
    emit(
        "oracle",
        params(&[
            ("r", json!(a.r)),
            ("alpha", json!(a.alpha)),
            ("cbar", json!(a.cbar)),
            ("grid", json!(a.grid)),
            ("max_iter", json!(a.max_iter)),
            ("conv_tol", json!(a.conv_tol)),
            ("bits", json!(a.bits)),
        ]),
        &[(out.to_path_buf(), to_json(&result)?)],
        out,
    )?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct ThresholdsOut {
    schema: &'static str,
    r: f64,
    alpha: f64,
    cbar_star: f64,
    /// `(θ_k, λ_k)`, budget at which `x_{2k+2}` leaves the support.
    thresholds: Vec<ThresholdRow>,
    regimes: Vec<RegimeRow>,
}

#[derive(Debug, Serialize)]
struct ThresholdRow {
    k: usize,
    theta: f64,
    lambda: f64,
    vanishing_point: f64,
}

#[derive(Debug, Serialize)]
struct RegimeRow {
    k: usize,
    cbar_low: f64,
    cbar_high: f64,
    support_size: usize,
}

pub fn thresholds(r: f64, alpha: f64, out: &Path) -> Result<bool> {
    let ch = Channel::from_r(r)?;
    let cost = Cost::new(alpha, 1.0)?;
    ensure!(
        cost.is_concave(),
        "thresholds exist only for alpha <= 1 (alpha > 1 gives full support below c̄*)"
    );
    let table = DefaultSolver::default().thresholds(&ch, &cost)?;
    let lattice = lattice_positions(&ch);
    let result = ThresholdsOut {
        schema: SCHEMA,
        r: ch.r(),
        alpha,
        cbar_star: table.cbar_star,
        thresholds: table
            .thetas
            .iter()
            .zip(&table.lambdas)
            .enumerate()
            .map(|(k, (&theta, &lambda))| ThresholdRow {
                k,
                theta,
                lambda,
                vanishing_point: lattice[2 * k + 1],
            })
            .collect(),
        regimes: (0..table.num_regimes())
            .map(|k| {
                let (lo, hi) = table.cost_range(k);
                RegimeRow {
                    k,
                    cbar_low: lo,
                    cbar_high: hi,
                    support_size: ch.num_points() - k,
                }
            })
            .collect(),
    };
    emit(
        "thresholds",
        params(&[("r", json!(r)), ("alpha", json!(alpha))]),
        &[(out.to_path_buf(), to_json(&result)?)],
        out,
    )?;
    Ok(true)
}

pub struct SweepArgs {
    pub r_min: f64,
    pub r_max: f64,
    pub steps: usize,
    pub alpha: f64,
    pub cbar: Option<f64>,
    pub grid: usize,
}

pub fn sweep_r(a: &SweepArgs, out: &Path) -> Result<bool> {
    ensure!(a.steps >= 1, "steps must be at least 1");
    ensure!(
        a.r_min > 0.0 && (a.r_min < a.r_max || (a.steps == 1 && a.r_min == a.r_max)),
        "need 0 < r-min < r-max, got {} and {}",
        a.r_min,
        a.r_max
    );
    ensure!(a.alpha > 0.0, "alpha must be positive");
    let rs: Vec<f64> = if a.steps == 1 {
        vec![a.r_min]
    } else {
        (0..a.steps)
            .map(|i| a.r_min + (a.r_max - a.r_min) * i as f64 / (a.steps - 1) as f64)
            .collect()
    };
    let solver = DefaultSolver::new(OracleConfig::with_grid(a.grid), KktOptions::default());
    let rows: Vec<Result<String>> = rs
        .par_iter()
        .map(|&r| {
            let ch = Channel::from_r(r)?;
            let mut text = String::new();
            let (regime, points): (String, Vec<(f64, f64)>) = match a.cbar {
                None => ("I".into(), unconstrained_solution(&ch).iter().collect()),
                Some(cbar) => {
                    let res = solver.solve(&ch, &Cost::new(a.alpha, cbar)?)?;
                    let pts = match &res.solution {
                        Solution::Discrete(d) => d.iter().collect(),
                        Solution::Continuous { grid, .. } => (0..grid.grid_size())
                            .filter(|&i| grid.weights()[i] >= CELL_FLOOR)
                            .map(|i| (grid.position(i), grid.weights()[i]))
                            .collect(),
                    };
                    (res.regime.to_string(), pts)
                }
            };
            for (x, m) in points {
                writeln!(text, "{},{},{},{}", fmt_f64(r), regime, fmt_f64(x), fmt_f64(m))?;
            }
            Ok(text)
        })
        .collect();
    let mut csv = String::from("r,regime,x,m\n");
    for row in rows {
        csv.push_str(&row?);
    }
    emit(
        "sweep-r",
        params(&[
            ("r_min", json!(a.r_min)),
            ("r_max", json!(a.r_max)),
            ("steps", json!(a.steps)),
            ("alpha", json!(a.alpha)),
            ("cbar", json!(a.cbar)),
            ("grid", json!(a.grid)),
        ]),
        &[(out.to_path_buf(), csv)],
        out,
    )?;
    Ok(true)
}

pub struct PhaseArgs {
    pub r: f64,
    pub alpha: (f64, f64),
    pub cbar: (f64, f64),
    pub resolution: usize,
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Classification only: the support size follows from the regime, so no
/// cell needs a full solve.
pub fn phase(a: &PhaseArgs, out: &Path) -> Result<bool> {
    for (name, (lo, hi)) in [("alpha", a.alpha), ("cbar", a.cbar)] {
        ensure!(lo > 0.0 && lo <= hi, "{name} range must satisfy 0 < min <= max");
    }
    ensure!(a.resolution >= 1, "resolution must be at least 1");
    let ch = Channel::from_r(a.r)?;
    let solver = DefaultSolver::default();
    let alphas = linspace(a.alpha, a.resolution);
    let cbars = linspace(a.cbar, a.resolution);
    let rows: Vec<Result<String>> = alphas
        .par_iter()
        .map(|&alpha| {
            let mut text = String::new();
            for &cbar in &cbars {
                let regime = solver.classify(&ch, &Cost::new(alpha, cbar)?)?;
                let size = match regime.support_index() {
                    Some(k) => (ch.num_points() - k).to_string(),
                    None => "inf".to_owned(),
                };
                writeln!(text, "{},{},{},{}", fmt_f64(alpha), fmt_f64(cbar), regime, size)?;
            }
            Ok(text)
        })
        .collect();
    let mut csv = String::from("alpha,cbar,regime,support_size\n");
    for row in rows {
        csv.push_str(&row?);
    }
    emit(
        "phase",
        params(&[
            ("r", json!(a.r)),
            ("alpha_min", json!(a.alpha.0)),
            ("alpha_max", json!(a.alpha.1)),
            ("cbar_min", json!(a.cbar.0)),
            ("cbar_max", json!(a.cbar.1)),
            ("resolution", json!(a.resolution)),
        ]),
        &[(out.to_path_buf(), csv)],
        out,
    )?;
    Ok(true)
}
