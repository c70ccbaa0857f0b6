//! Capacity-achieving input distributions of the additive uniform noise
//! channel `Y = X + N`, `N ~ Uniform(-b, b)`, with peak amplitude
//! constraint `X ∈ [0, 1]` and power constraint `E[X^α] ≤ c̄`.
//!
//! * [`channel`] evaluates output densities, the marginal information
//!   density and mutual information exactly for discrete inputs.
//! * [`analytic`] builds the closed-form optimum in every discrete regime
//!   and dispatches on the regime.
//! * [`oracle`] is an independent constrained Blahut–Arimoto solver.
//! * [`kkt`] checks the optimality conditions and structural properties.
//!
//! Everything is generic over the float type through [`Real`]; the
//! aliases below fix it to `f64`.

// `!(a < b)` comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod error;
pub mod kkt;
pub mod oracle;
pub mod roots;
pub mod scalar;

pub use analytic::{
    compute_thresholds, critical_cost, masses_integer, masses_noninteger, solve, solve_lambda,
    unconstrained_capacity, unconstrained_solution, MassProfile, Regime, Solution, SolveResult,
    Solver, ThresholdTable,
};
pub use channel::{
    expected_cost, marginal_information_density, mutual_information, output_density, ChannelSpec,
    CostSpec, DiscreteDistribution, GridDistribution, InfoDensity, OutputDensity,
};
pub use error::{Error, Result};
pub use kkt::{
    check_gap_concavity, check_piecewise_linearity, verify, GapConcavity, KktOptions, KktReport,
    SegmentCheck, SegmentLinearity,
};
pub use oracle::{
    ba_constrained, ba_fixed_lambda, build_transition_matrix, support_points, BaConfig, BaResult,
    Cluster,
};
pub use scalar::Real;

pub type Channel = ChannelSpec<f64>;
pub type Cost = CostSpec<f64>;
pub type Distribution = DiscreteDistribution<f64>;
pub type Grid = GridDistribution<f64>;
pub type Profile = MassProfile<f64>;
pub type Thresholds = ThresholdTable<f64>;
pub type Outcome = SolveResult<f64>;
pub type Report = KktReport<f64>;
pub type OracleConfig = BaConfig<f64>;
pub type OracleResult = BaResult<f64>;
pub type DefaultSolver = Solver<f64>;
