//! Constrained Blahut–Arimoto on a discretized channel.
//!
//! The input is restricted to a uniform grid on `[0, 1]`. By default the
//! output interval `[-b, 1 + b]` is cut at every noise-block edge, which
//! makes the discrete channel exact for grid inputs. The cost enters as a
//! per-symbol penalty `λ c(x)`; an outer bisection on `λ` enforces the
//! budget. This solver shares no code path with the closed-form
//! constructions and serves as their reference.

use crate::channel::{ChannelSpec, CostSpec, DiscreteDistribution, GridDistribution};
use crate::error::{invalid, Result};
use crate::roots::LAMBDA_CAP;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct BaConfig<T> {
    /// Input grid points on `[0, 1]`.
    pub grid_size: usize,
    /// Uniform output cells on `[-b, 1 + b]`; `None` cuts at the block edges.
    pub output_grid_size: Option<usize>,
    pub max_iter: usize,
    /// Stop once the capacity estimate moves by less than this per iteration.
    pub conv_tol: T,
    pub lambda_bisect_tol: T,
    /// Keep the per-iteration objective of the final λ.
    pub record_trace: bool,
}

impl<T: Real> Default for BaConfig<T> {
    fn default() -> Self {
        Self {
            grid_size: 241,
            output_grid_size: None,
            max_iter: 20_000,
            conv_tol: T::lit(1e-10),
            lambda_bisect_tol: T::lit(1e-6),
            record_trace: false,
        }
    }
}

impl<T: Real> BaConfig<T> {
    pub fn with_grid(grid_size: usize) -> Self {
        Self {
            grid_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 51 {
            return Err(invalid("grid_size", "must be at least 51"));
        }
        if matches!(self.output_grid_size, Some(m) if m < 2) {
            return Err(invalid("output_grid_size", "must be at least 2"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be positive"));
        }
        if !(self.conv_tol > T::zero()) {
            return Err(invalid("conv_tol", "must be positive"));
        }
        if !(self.lambda_bisect_tol > T::zero()) {
            return Err(invalid("lambda_bisect_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Banded row-stochastic matrix `W[i][k] = P(output cell k | input x_i)`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix<T> {
    output_edges: Vec<T>,
    starts: Vec<usize>,
    rows: Vec<Vec<T>>,
}

impl<T: Real> TransitionMatrix<T> {
    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.output_edges.len() - 1
    }

    pub fn output_edges(&self) -> &[T] {
        &self.output_edges
    }

    /// First nonzero column and the nonzero entries of row `i`.
    pub fn row(&self, i: usize) -> (usize, &[T]) {
        (self.starts[i], &self.rows[i])
    }

    pub fn get(&self, i: usize, k: usize) -> T {
        let (start, row) = self.row(i);
        if k < start {
            return T::zero();
        }
        row.get(k - start).copied().unwrap_or_else(T::zero)
    }
}

pub fn build_transition_matrix<T: Real>(
    ch: &ChannelSpec<T>,
    cfg: &BaConfig<T>,
) -> Result<TransitionMatrix<T>> {
    cfg.validate()?;
    let b = ch.b();
    let (y_lo, y_hi) = ch.output_interval();
    let input_step = T::one() / T::from_usize_lossy(cfg.grid_size - 1);
    let output_edges = match cfg.output_grid_size {
        Some(cells) => {
            let width = (y_hi - y_lo) / T::from_usize_lossy(cells);
            let mut edges: Vec<T> = (0..cells)
                .map(|k| y_lo + T::from_usize_lossy(k) * width)
                .collect();
            edges.push(y_hi);
            edges
        }
        None => block_edges(cfg.grid_size, input_step, b),
    };
    let cells = output_edges.len() - 1;

    let mut starts = Vec::with_capacity(cfg.grid_size);
    let mut rows = Vec::with_capacity(cfg.grid_size);
    for i in 0..cfg.grid_size {
        let x = T::from_usize_lossy(i) * input_step;
        let (lo, hi) = (x - b, x + b);
        let first = output_edges.partition_point(|&e| e <= lo).saturating_sub(1);
        let mut row = Vec::new();
        let mut k = first;
        while k < cells && output_edges[k] < hi {
            let overlap = hi.min(output_edges[k + 1]) - lo.max(output_edges[k]);
            row.push(overlap.max(T::zero()));
            k += 1;
        }
        let total = row.iter().fold(T::zero(), |a, &v| a + v);
        for v in &mut row {
            *v = *v / total;
        }
        starts.push(first);
        rows.push(row);
    }
    Ok(TransitionMatrix {
        output_edges,
        starts,
        rows,
    })
}

/// Sorted union of all noise-block edges `x_i ± b`. On these cells every
/// row is exact, so the discrete channel loses nothing on the output side.
fn block_edges<T: Real>(grid_size: usize, step: T, b: T) -> Vec<T> {
    let mut edges: Vec<T> = (0..grid_size)
        .flat_map(|i| {
            let x = T::from_usize_lossy(i) * step;
            [x - b, x + b]
        })
        .collect();
    edges.sort_by(|a, c| a.partial_cmp(c).expect("finite edges"));
    let snap = T::tol(1e-12);
    edges.dedup_by(|a, c| (*a - *c).abs() <= snap);
    edges
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaResult<T> {
    pub dist: GridDistribution<T>,
    pub capacity_nats: T,
    pub lambda: T,
    pub achieved_cost: T,
    pub iterations: usize,
    pub converged: bool,
    /// `max_i [D_i - λ c_i] - [I - λ⟨c⟩]`, an upper bound on the
    /// suboptimality of the Lagrangian at the returned iterate.
    pub duality_gap: T,
    /// Lagrangian `I - λ⟨c⟩` per iteration of the final run.
    pub objective_trace: Vec<T>,
    /// `(λ, achieved cost)` for every multiplier tried by the outer search.
    pub bisection_trace: Vec<(T, T)>,
    pub diagnostic: Option<String>,
}

struct Engine<'a, T> {
    matrix: TransitionMatrix<T>,
    log_rows: Vec<Vec<T>>,
    costs: Vec<T>,
    cfg: &'a BaConfig<T>,
}

impl<'a, T: Real> Engine<'a, T> {
    fn new(ch: &ChannelSpec<T>, cost: &CostSpec<T>, cfg: &'a BaConfig<T>) -> Result<Self> {
        let matrix = build_transition_matrix(ch, cfg)?;
        let log_rows = matrix
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&w| if w > T::zero() { w.ln() } else { T::zero() })
                    .collect()
            })
            .collect();
        let step = T::one() / T::from_usize_lossy(cfg.grid_size - 1);
        let costs = (0..cfg.grid_size)
            .map(|i| cost.cost(T::from_usize_lossy(i) * step))
            .collect();
        Ok(Self {
            matrix,
            log_rows,
            costs,
            cfg,
        })
    }

    /// Per-input divergences `D_i = Σ_k W_ik ln(W_ik / q_k)` and `I(p)`.
    fn divergences(&self, p: &[T], q: &mut [T], d: &mut [T]) -> T {
        q.iter_mut().for_each(|v| *v = T::zero());
        for (i, &pi) in p.iter().enumerate() {
            if pi == T::zero() {
                continue;
            }
            let (start, row) = self.matrix.row(i);
            for (off, &w) in row.iter().enumerate() {
                q[start + off] = q[start + off] + pi * w;
            }
        }
        let floor = T::lit(1e-300).max(T::min_positive_value());
        for v in q.iter_mut() {
            *v = v.max(floor).ln();
        }
        let mut info = T::zero();
        for (i, di) in d.iter_mut().enumerate() {
            let (start, row) = self.matrix.row(i);
            let logs = &self.log_rows[i];
            let mut acc = T::zero();
            for (off, &w) in row.iter().enumerate() {
                if w > T::zero() {
                    acc = acc + w * (logs[off] - q[start + off]);
                }
            }
            *di = acc;
            info = info + p[i] * acc;
        }
        info
    }

    fn run(&self, lambda: T, mut p: Vec<T>) -> BaResult<T> {
        let n = p.len();
        let mut q = vec![T::zero(); self.matrix.output_size()];
        let mut d = vec![T::zero(); n];
        let floor = T::lit(1e-300).max(T::min_positive_value());
        let mut trace = Vec::new();
        let mut previous: Option<T> = None;
        let mut converged = false;
        let mut iterations = 0;
        let mut info = T::zero();
        let mut gap = T::infinity();
        for it in 1..=self.cfg.max_iter {
            iterations = it;
            info = self.divergences(&p, &mut q, &mut d);
            let mean_cost = dot(&p, &self.costs);
            let objective = info - lambda * mean_cost;
            if self.cfg.record_trace {
                trace.push(objective);
            }
            let mut best = T::neg_infinity();
            for i in 0..n {
                let v = d[i] - lambda * self.costs[i];
                if p[i] > T::zero() && v > best {
                    best = v;
                }
            }
            gap = best - objective;
            if let Some(prev) = previous {
                if (info - prev).abs() < self.cfg.conv_tol {
                    converged = true;
                    break;
                }
            }
            previous = Some(info);
            let mut total = T::zero();
            for i in 0..n {
                if p[i] > T::zero() {
                    p[i] = p[i] * (d[i] - lambda * self.costs[i] - best).exp();
                    if p[i] < floor {
                        p[i] = T::zero();
                    }
                }
                total = total + p[i];
            }
            for v in &mut p {
                *v = *v / total;
            }
        }
        let achieved_cost = dot(&p, &self.costs);
        BaResult {
            dist: GridDistribution::new(p).expect("BA iterate stays normalized"),
            capacity_nats: info,
            lambda,
            achieved_cost,
            iterations,
            converged,
            duality_gap: gap,
            objective_trace: trace,
            bisection_trace: Vec::new(),
            diagnostic: (!converged)
                .then(|| format!("no convergence within {} iterations", self.cfg.max_iter)),
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn uniform<T: Real>(n: usize) -> Vec<T> {
    vec![T::one() / T::from_usize_lossy(n); n]
}

/// Restarts from a previous iterate, mixing in a little uniform mass so
/// that no grid point is locked out.
fn warm_start<T: Real>(p: &[T]) -> Vec<T> {
    let eps = T::lit(1e-6);
    let u = eps / T::from_usize_lossy(p.len());
    p.iter().map(|&v| (T::one() - eps) * v + u).collect()
}

/// Maximizes `I(p) - λ⟨c⟩` over grid inputs for a fixed multiplier.
pub fn ba_fixed_lambda<T: Real>(
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
    lambda: T,
    cfg: &BaConfig<T>,
) -> Result<BaResult<T>> {
    if !(lambda >= T::zero() && lambda.is_finite()) {
        return Err(invalid("lambda", "must be finite and nonnegative"));
    }
    let engine = Engine::new(ch, cost, cfg)?;
    let mut res = engine.run(lambda, uniform(cfg.grid_size));
    res.bisection_trace.push((lambda, res.achieved_cost));
    Ok(res)
}

/// Maximizes `I(p)` over grid inputs subject to `⟨c⟩ ≤ c̄`.
pub fn ba_constrained<T: Real>(
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
    cfg: &BaConfig<T>,
) -> Result<BaResult<T>> {
    let engine = Engine::new(ch, cost, cfg)?;
    let cbar = cost.cbar();
    let tol = cfg.lambda_bisect_tol;
    let mut trace = Vec::new();
    let mut all_converged = true;

    let free = engine.run(T::zero(), uniform(cfg.grid_size));
    trace.push((T::zero(), free.achieved_cost));
    all_converged &= free.converged;
    if free.achieved_cost <= cbar + tol {
        return Ok(finish(free, trace, all_converged, None));
    }

    let mut lo = T::zero();
    let mut lo_state = free;
    let mut hi = T::one();
    let mut hi_state = loop {
        let res = engine.run(hi, warm_start(lo_state.dist.weights()));
        trace.push((hi, res.achieved_cost));
        all_converged &= res.converged;
        if res.achieved_cost <= cbar + tol {
            break res;
        }
        if hi >= T::lit(LAMBDA_CAP) {
            let note = format!(
                "budget {cbar} below the cost {} reached at lambda = {hi}",
                res.achieved_cost
            );
            return Ok(finish(res, trace, false, Some(note)));
        }
        lo = hi;
        lo_state = res;
        hi = hi + hi;
    };

    while hi_state.achieved_cost < cbar - tol {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let nearer = if (lo_state.achieved_cost - cbar).abs() < (hi_state.achieved_cost - cbar).abs() {
            &lo_state
        } else {
            &hi_state
        };
        let res = engine.run(mid, warm_start(nearer.dist.weights()));
        trace.push((mid, res.achieved_cost));
        all_converged &= res.converged;
        if res.achieved_cost > cbar + tol {
            lo = mid;
            lo_state = res;
        } else {
            hi = mid;
            hi_state = res;
        }
    }
    Ok(finish(hi_state, trace, all_converged, None))
}

fn finish<T: Real>(
    mut res: BaResult<T>,
    trace: Vec<(T, T)>,
    converged: bool,
    note: Option<String>,
) -> BaResult<T> {
    res.bisection_trace = trace;
    res.converged = converged && res.converged && note.is_none();
    if note.is_some() {
        res.diagnostic = note;
    } else if !res.converged && res.diagnostic.is_none() {
        res.diagnostic = Some("an inner run did not converge".into());
    }
    res
}

/// A run of adjacent heavy grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    pub center: T,
    pub mass: T,
    pub first: T,
    pub last: T,
    pub cells: usize,
}

/// Groups cells heavier than `mass_tol` into clusters: a cell joins the
/// current cluster when it lies within `cluster_radius` of the previous
/// heavy cell.
pub fn clusters<T: Real>(dist: &GridDistribution<T>, mass_tol: T, cluster_radius: T) -> Vec<Cluster<T>> {
    let mut out: Vec<Cluster<T>> = Vec::new();
    let mut moment = T::zero();
    for (i, &w) in dist.weights().iter().enumerate() {
        if w <= mass_tol {
            continue;
        }
        let x = dist.position(i);
        match out.last_mut() {
            Some(c) if x - c.last <= cluster_radius + T::tol(1e-12) => {
                c.mass = c.mass + w;
                moment = moment + w * x;
                c.center = moment / c.mass;
                c.last = x;
                c.cells += 1;
            }
            _ => {
                moment = w * x;
                out.push(Cluster {
                    center: x,
                    mass: w,
                    first: x,
                    last: x,
                    cells: 1,
                });
            }
        }
    }
    out
}

/// Cluster centroids with their (renormalized) masses.
pub fn support_points<T: Real>(
    dist: &GridDistribution<T>,
    mass_tol: T,
    cluster_radius: T,
) -> Result<DiscreteDistribution<T>> {
    DiscreteDistribution::normalized(
        clusters(dist, mass_tol, cluster_radius)
            .into_iter()
            .map(|c| (c.center, c.mass)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(r: f64) -> ChannelSpec<f64> {
        ChannelSpec::from_r(r).unwrap()
    }

    #[test]
    fn transition_rows_are_normalized_and_local() {
        let c = ChannelSpec::from_b(0.25).unwrap();
        let cfg = BaConfig::<f64>::with_grid(241);
        let w = build_transition_matrix(&c, &cfg).unwrap();
        for i in 0..w.input_size() {
            let (_, row) = w.row(i);
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // interior cell: width / (2b)
        let width = 1.0 / 240.0;
        assert!((w.get(120, w.output_size() / 2) - width / 0.5).abs() < 1e-12);
        // x = 0 only reaches [-b, b]
        let (start, row) = w.row(0);
        assert_eq!(start, 0);
        let edges = w.output_edges();
        assert!(edges[start + row.len()] <= 0.25 + 1e-12);
    }

    #[test]
    fn block_edges_start_and_end_every_row() {
        let c = ch(4.4);
        let cfg = BaConfig::<f64>::with_grid(101);
        let w = build_transition_matrix(&c, &cfg).unwrap();
        let edges = w.output_edges();
        for i in 0..w.input_size() {
            let x = i as f64 / 100.0;
            let (start, row) = w.row(i);
            assert!((edges[start] - (x - c.b())).abs() < 1e-12);
            assert!((edges[start + row.len()] - (x + c.b())).abs() < 1e-12);
            for (off, &v) in row.iter().enumerate() {
                let width = edges[start + off + 1] - edges[start + off];
                assert!((v - width * c.r()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_output_grid_has_fractional_boundary_cells() {
        let c = ch(4.4);
        let cfg = BaConfig::<f64> {
            output_grid_size: Some(150),
            ..BaConfig::with_grid(101)
        };
        let w = build_transition_matrix(&c, &cfg).unwrap();
        assert_eq!(w.output_size(), 150);
        let (_, row) = w.row(37);
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let full = row.iter().cloned().fold(0.0, f64::max);
        assert!(row.first().unwrap() < &full || row.last().unwrap() < &full);
    }

    #[test]
    fn config_validation() {
        assert!(BaConfig::<f64>::with_grid(50).validate().is_err());
        let cfg = BaConfig::<f64> {
            conv_tol: 0.0,
            ..BaConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn clustering() {
        let mut w = vec![0.0; 101];
        w[10] = 0.3;
        w[11] = 0.2;
        w[60] = 0.5;
        let g = GridDistribution::<f64>::new(w).unwrap();
        let cs = clusters(&g, 1e-6, 0.015);
        assert_eq!(cs.len(), 2);
        assert!((cs[0].mass - 0.5).abs() < 1e-15);
        assert!((cs[0].center - (0.3 * 0.1 + 0.2 * 0.11) / 0.5).abs() < 1e-15);
        let single = GridDistribution::new({
            let mut v = vec![0.0; 101];
            v[40] = 1.0;
            v
        })
        .unwrap();
        let d = support_points(&single, 1e-6, 0.01).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.masses()[0], 1.0);
        let flat = GridDistribution::<f64>::uniform(101).unwrap();
        let cs = clusters(&flat, 1e-6, 0.011);
        assert_eq!(cs.len(), 1);
        assert!((cs[0].center - 0.5).abs() < 1e-12);
    }

    #[test]
    fn huge_lambda_concentrates_at_zero() {
        let cost = CostSpec::new(1.0, 0.5).unwrap();
        let res = ba_fixed_lambda(&ch(2.0), &cost, 500.0, &BaConfig::with_grid(101)).unwrap();
        assert!(res.dist.weights()[0] > 0.999);
        assert!(res.capacity_nats < 1e-2);
    }
}
