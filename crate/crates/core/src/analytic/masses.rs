//! Mass vectors on the lattice `S_0` as functions of the multiplier λ.
//!
//! Integer `r`: the noise blocks of neighbouring lattice points touch, so
//! `i(x_j) = -ln m_j` and the equality conditions force the Gibbs form
//! `m_j ∝ exp(-λ c_j)`.
//!
//! Non-integer `r`: the odd and even points form two interleaved tilings
//! of the output interval. Each output segment is covered by one odd and
//! one even block, so `p_Y` only takes the values of the overlap sums
//!
//! ```text
//! m̂ = (m_1, m_2 + m_3, …, m_2n + m_2n+1, m_2n+2)   on segments of weight ρ
//! m̄ = (m_1 + m_2, …, m_2n+1 + m_2n+2)              on segments of weight 1-ρ
//! ```
//!
//! and `i(x_j) = -ρ ln m̂_⌊j/2⌋+1 - (1-ρ) ln m̄_⌊(j+1)/2⌋`. Differencing the
//! equality conditions at consecutive support points gives two
//! independent geometric chains for `m̂` and `m̄`, from which the masses
//! follow by alternating differences.
//!
//! With support `S_k` (even points `x_2, …, x_2k` removed) the head
//! `x_1, x_3, …, x_2k-1` is covered by a single layer and again obeys the
//! Gibbs form, while the tail `x_2k+1, …, x_2n+2` obeys the two chains
//! started at index `k + 1`. The equality condition differenced between
//! `x_2k-1` and `x_2k+1` fixes the head/tail ratio:
//!
//! ```text
//! m_2k-1 / T = exp(-λ (c_2k-1 - c_2k+1)) · ĥ_k+1^ρ · h̄_k+1^(1-ρ)
//! ```
//!
//! where `T` is the tail mass and `ĥ`, `h̄` are the normalized chains.

use crate::analytic::lattice::lattice_positions;
use crate::channel::{ChannelSpec, CostSpec, DiscreteDistribution};
use crate::error::{invalid, Error, Result};
use crate::scalar::{log_sum_exp, softmax, Real};

/// Signed masses on the full lattice `S_0` for a given λ and support `S_k`.
///
/// Masses of removed points are exactly zero. Outside the λ-range served
/// by `S_k` some support masses come out negative; the profile keeps
/// them so that root finders can locate the regime boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MassProfile<T> {
    positions: Vec<T>,
    masses: Vec<T>,
    k: usize,
    lambda: T,
}

impl<T: Real> MassProfile<T> {
    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// Number of removed even points.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Mass `m_j`, 1-based.
    pub fn mass(&self, j: usize) -> T {
        self.masses[j - 1]
    }

    /// Whether lattice point `x_j` (1-based) belongs to `S_k`.
    pub fn in_support(&self, j: usize) -> bool {
        !(j.is_multiple_of(2) && j <= 2 * self.k)
    }

    /// `(j, m_j)` of the smallest mass on `S_k`.
    pub fn min_support_mass(&self) -> (usize, T) {
        (1..=self.masses.len())
            .filter(|&j| self.in_support(j))
            .map(|j| (j, self.mass(j)))
            .fold((0, T::infinity()), |a, b| if b.1 < a.1 { b } else { a })
    }

    /// All masses on `S_k` are nonnegative.
    pub fn is_valid(&self) -> bool {
        self.min_support_mass().1 >= T::zero()
    }

    pub fn expected_cost(&self, cost: &CostSpec<T>) -> T {
        self.positions
            .iter()
            .zip(&self.masses)
            .fold(T::zero(), |acc, (&x, &m)| acc + m * cost.cost(x))
    }

    pub fn to_distribution(&self) -> Result<DiscreteDistribution<T>> {
        let (j, m) = self.min_support_mass();
        if m < T::zero() {
            return Err(Error::Structure(format!(
                "m_{j} = {m} < 0 at lambda = {}; lambda lies outside the range served by S_{}",
                self.lambda, self.k
            )));
        }
        DiscreteDistribution::normalized(
            self.positions
                .iter()
                .copied()
                .zip(self.masses.iter().copied()),
        )
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if lambda >= T::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid("lambda", format!("must be finite and nonnegative, got {lambda}")))
    }
}

/// Gibbs masses `m_j ∝ exp(-λ x_j^α)` on the integer lattice.
pub fn integer_profile<T: Real>(
    lambda: T,
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
) -> Result<MassProfile<T>> {
    if !ch.is_integer_r() {
        return Err(Error::WrongLattice("integer r"));
    }
    check_lambda(lambda)?;
    let positions = lattice_positions(ch);
    let logs: Vec<T> = positions.iter().map(|&x| -lambda * cost.cost(x)).collect();
    Ok(MassProfile {
        masses: softmax(&logs),
        positions,
        k: 0,
        lambda,
    })
}

pub fn masses_integer<T: Real>(
    lambda: T,
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
) -> Result<DiscreteDistribution<T>> {
    integer_profile(lambda, ch, cost)?.to_distribution()
}

/// Mass profile on `S_k` for non-integer `r`.
pub fn masses_noninteger<T: Real>(
    lambda: T,
    k: usize,
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
) -> Result<MassProfile<T>> {
    if ch.is_integer_r() {
        return Err(Error::WrongLattice("non-integer r"));
    }
    let n = ch.n();
    if k > n {
        return Err(Error::SupportIndexOutOfRange { k, n });
    }
    check_lambda(lambda)?;

    let positions = lattice_positions(ch);
    // c[j] for 1-based j; c[0] unused
    let c: Vec<T> = std::iter::once(T::zero())
        .chain(positions.iter().map(|&x| cost.cost(x)))
        .collect();
    let rho = ch.rho();
    let rho_bar = T::one() - rho;

    // log-chains for m̂_{k+1..=n+2} and m̄_{k+1..=n+1}
    // for linear cost both steps are exactly λ/r; using that avoids rounding
    // noise in the position differences
    let linear = cost.alpha() == T::one();
    let hat_step = |i: usize| {
        if linear {
            lambda / ch.r()
        } else {
            lambda / rho * (c[2 * i] - c[2 * i - 1])
        }
    };
    let bar_step = |i: usize| {
        if linear {
            lambda / ch.r()
        } else {
            lambda / rho_bar * (c[2 * i + 1] - c[2 * i])
        }
    };
    let mut log_hat = vec![T::zero()];
    for i in k + 1..=n + 1 {
        let last = *log_hat.last().unwrap();
        log_hat.push(last - hat_step(i));
    }
    let mut log_bar = vec![T::zero()];
    for i in k + 1..=n {
        let last = *log_bar.last().unwrap();
        log_bar.push(last - bar_step(i));
    }
    let unit = tail_unit_masses(&log_hat, &log_bar);

    // head masses relative to the tail total, in logs
    let log_hat_first = -log_sum_exp(&log_hat);
    let log_bar_first = -log_sum_exp(&log_bar);
    let head: Vec<T> = (0..k)
        .map(|i| {
            lambda * (c[2 * k + 1] - c[2 * i + 1]) + rho * log_hat_first + rho_bar * log_bar_first
        })
        .collect();
    let mut all = head.clone();
    all.push(T::zero());
    let log_total = log_sum_exp(&all);
    let tail_scale = (-log_total).exp();

    let mut masses = vec![T::zero(); 2 * n + 2];
    for (i, &l) in head.iter().enumerate() {
        masses[2 * i] = (l - log_total).exp();
    }
    for (q, &t) in unit.iter().enumerate() {
        masses[2 * k + q] = t * tail_scale;
    }
    Ok(MassProfile {
        positions,
        masses,
        k,
        lambda,
    })
}

/// Tail masses `t_2k+1, …, t_2n+2` (summing to one) from the unnormalized
/// log-chains `a` (for `m̂`, length `B + 1`) and `ā` (for `m̄`, length `B`).
///
/// Each mass is a difference of partial sums of the two normalized chains.
/// Cross-multiplying by both partition functions turns it into a sum of
/// pairwise terms `e^u - e^v`, each evaluated as `e^u (-expm1(v - u))`,
/// so masses far below the chain heads keep their relative accuracy.
fn tail_unit_masses<T: Real>(a: &[T], abar: &[T]) -> Vec<T> {
    let len = abar.len();
    let shift = a.iter().chain(abar).copied().fold(T::neg_infinity(), |x, y| x.max(y));
    let diff = |u: T, v: T| -> T { (u - shift - shift).exp() * -(v - u).exp_m1() };
    let scale = (shift + shift - log_sum_exp(a) - log_sum_exp(abar)).exp();
    let mut out = Vec::with_capacity(2 * len);
    for p in 0..len {
        // odd point: Σ_{m ≥ p} e^{a_p + ā_m} + Σ_{l < p ≤ m} (e^{a_l + ā_m} - e^{ā_l + a_m+1})
        let mut odd = T::zero();
        for m in p..len {
            odd = odd + (a[p] + abar[m] - shift - shift).exp();
            for l in 0..p {
                odd = odd + diff(a[l] + abar[m], abar[l] + a[m + 1]);
            }
        }
        out.push(odd * scale);
        // even point: Σ_{l ≤ p} e^{ā_l + a_B} + Σ_{l ≤ p < m} (e^{ā_l + a_m} - e^{a_l + ā_m})
        let mut even = T::zero();
        for l in 0..=p {
            even = even + (abar[l] + a[len] - shift - shift).exp();
            for m in p + 1..len {
                even = even + diff(abar[l] + a[m], a[l] + abar[m]);
            }
        }
        out.push(even * scale);
    }
    out
}

/// Dispatches to the integer or non-integer construction.
pub fn mass_profile<T: Real>(
    lambda: T,
    k: usize,
    ch: &ChannelSpec<T>,
    cost: &CostSpec<T>,
) -> Result<MassProfile<T>> {
    if ch.is_integer_r() {
        if k != 0 {
            return Err(Error::SupportIndexOutOfRange { k, n: 0 });
        }
        integer_profile(lambda, ch, cost)
    } else {
        masses_noninteger(lambda, k, ch, cost)
    }
}
