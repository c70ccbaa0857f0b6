//! Closed-form capacity-achieving inputs and regime classification.
//!
//! | regime | condition                         | support                  |
//! |--------|-----------------------------------|--------------------------|
//! | I      | `c̄ ≥ c̄*`                          | `S_0`, λ = 0             |
//! | IIa    | `c̄ < c̄*`, `α ≤ 1`, integer `r`     | `S_0`, Gibbs masses      |
//! | IIb(k) | `c̄ < c̄*`, `α ≤ 1`, non-integer `r` | `S_k`                    |
//! | III    | `c̄ < c̄*`, `α > 1`                 | all of `[0, 1]` (numeric)|

pub mod lambda;
pub mod lattice;
pub mod masses;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::channel::{mutual_information, ChannelSpec, CostSpec, DiscreteDistribution, GridDistribution};
use crate::error::{Error, Result};
use crate::kkt::{verify, KktOptions, KktReport};
use crate::oracle::{ba_constrained, BaConfig};
use crate::scalar::Real;

pub use lambda::{compute_thresholds, solve_lambda, solve_lambda_with, ThresholdTable};
pub use lattice::{critical_cost, unconstrained_capacity, unconstrained_solution};
pub use masses::{mass_profile, masses_integer, masses_noninteger, MassProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    CaseI,
    CaseIIa,
    CaseIIb { k: usize },
    CaseIII,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::CaseI => "I",
            Regime::CaseIIa => "IIa",
            Regime::CaseIIb { .. } => "IIb",
            Regime::CaseIII => "III",
        }
    }

    pub fn support_index(&self) -> Option<usize> {
        match self {
            Regime::CaseI | Regime::CaseIIa => Some(0),
            Regime::CaseIIb { k } => Some(*k),
            Regime::CaseIII => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, Regime::CaseIII)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::CaseIIb { k } => write!(f, "IIb(k={k})"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution<T> {
    Discrete(DiscreteDistribution<T>),
    /// Blahut–Arimoto grid solution for the full-support regime.
    Continuous {
        grid: GridDistribution<T>,
        iterations: usize,
        converged: bool,
    },
}

impl<T: Real> Solution<T> {
    pub fn discrete(&self) -> Option<&DiscreteDistribution<T>> {
        match self {
            Solution::Discrete(d) => Some(d),
            Solution::Continuous { .. } => None,
        }
    }

    pub fn support_size(&self) -> Option<usize> {
        self.discrete().map(DiscreteDistribution::len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub regime: Regime,
    pub lambda_star: T,
    pub cbar_star: T,
    pub solution: Solution<T>,
    pub capacity_nats: T,
    pub kkt: KktReport<T>,
}

/// Regime dispatcher with a per-`(r, α)` threshold cache.
///
/// The cache sits behind an `RwLock`, so one solver can be shared
/// across threads.
#[derive(Debug)]
pub struct Solver<T> {
    pub oracle: BaConfig<T>,
    pub kkt: KktOptions<T>,
    /// Tolerances applied when verifying gridded full-support solutions.
    pub continuous_kkt: KktOptions<T>,
    cache: RwLock<HashMap<CacheKey, Arc<ThresholdTable<T>>>>,
}

/// Bit patterns of `(r, α)`.
type CacheKey = (u64, u64);

impl<T: Real> Default for Solver<T> {
    fn default() -> Self {
        Self::new(BaConfig::default(), KktOptions::default())
    }
}

impl<T: Real> Solver<T> {
    pub fn new(oracle: BaConfig<T>, kkt: KktOptions<T>) -> Self {
        let continuous_kkt = KktOptions {
            check_grid_size: kkt.check_grid_size,
            eq_tol: T::lit(5e-3),
            ineq_tol: T::lit(5e-3),
            eq_mass_floor: T::lit(1e-4),
        };
        Self {
            oracle,
            kkt,
            continuous_kkt,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Threshold table for `(r, α)`; empty for integer `r`.
    pub fn thresholds(&self, ch: &ChannelSpec<T>, cost: &CostSpec<T>) -> Result<Arc<ThresholdTable<T>>> {
        let key = (ch.r().as_f64().to_bits(), cost.alpha().as_f64().to_bits());
        if let Some(t) = self.cache.read().expect("threshold cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = if ch.is_integer_r() || !cost.is_concave() {
            ThresholdTable::empty(critical_cost(ch, cost))
        } else {
            compute_thresholds(ch, cost)?
        };
        let table = Arc::new(table);
        self.cache
            .write()
            .expect("threshold cache poisoned")
            .entry(key)
            .or_insert_with(|| Arc::clone(&table));
        Ok(table)
    }

    pub fn classify(&self, ch: &ChannelSpec<T>, cost: &CostSpec<T>) -> Result<Regime> {
        let table = self.thresholds(ch, cost)?;
        Ok(if cost.cbar() >= table.cbar_star {
            Regime::CaseI
        } else if !cost.is_concave() {
            Regime::CaseIII
        } else if ch.is_integer_r() {
            Regime::CaseIIa
        } else {
            Regime::CaseIIb {
                k: table.regime_for(cost.cbar()),
            }
        })
    }

    pub fn solve_lambda(
        &self,
        target_cbar: T,
        k: usize,
        ch: &ChannelSpec<T>,
        cost: &CostSpec<T>,
    ) -> Result<(T, DiscreteDistribution<T>)> {
        let table = self.thresholds(ch, cost)?;
        solve_lambda_with(target_cbar, k, ch, cost, &table)
    }

    pub fn solve(&self, ch: &ChannelSpec<T>, cost: &CostSpec<T>) -> Result<SolveResult<T>> {
        let regime = self.classify(ch, cost)?;
        let cbar_star = self.thresholds(ch, cost)?.cbar_star;
        match regime {
            Regime::CaseI => self.finish_discrete(regime, T::zero(), cbar_star, unconstrained_solution(ch), ch, cost),
            Regime::CaseIIa | Regime::CaseIIb { .. } => {
                let k = regime.support_index().unwrap_or(0);
                let (lambda, dist) = self.solve_lambda(cost.cbar(), k, ch, cost)?;
                self.finish_discrete(regime, lambda, cbar_star, dist, ch, cost)
            }
            Regime::CaseIII => {
                let ba = ba_constrained(ch, cost, &self.oracle)?;
                let support = ba.dist.to_discrete(T::zero())?;
                let kkt = verify(&support, ba.lambda, ch, cost, &self.continuous_kkt)?;
                Ok(SolveResult {
                    regime,
                    lambda_star: ba.lambda,
                    cbar_star,
                    capacity_nats: kkt.capacity_nats,
                    kkt,
                    solution: Solution::Continuous {
                        grid: ba.dist,
                        iterations: ba.iterations,
                        converged: ba.converged,
                    },
                })
            }
        }
    }

    fn finish_discrete(
        &self,
        regime: Regime,
        lambda: T,
        cbar_star: T,
        dist: DiscreteDistribution<T>,
        ch: &ChannelSpec<T>,
        cost: &CostSpec<T>,
    ) -> Result<SolveResult<T>> {
        let capacity = mutual_information(&dist, ch)
            .finite()
            .ok_or_else(|| Error::Structure("closed-form solution has infinite information density".into()))?;
        let kkt = verify(&dist, lambda, ch, cost, &self.kkt)?;
        Ok(SolveResult {
            regime,
            lambda_star: lambda,
            cbar_star,
            solution: Solution::Discrete(dist),
            capacity_nats: capacity,
            kkt,
        })
    }
}

/// One-shot solve with default settings.
pub fn solve<T: Real>(ch: &ChannelSpec<T>, cost: &CostSpec<T>) -> Result<SolveResult<T>> {
    Solver::default().solve(ch, cost)
}
