//! Channel geometry, input distributions and exact information quantities.
//!
//! The channel is `Y = X + N` with `N ~ Uniform(-b, b)` and input
//! `X ∈ [0, 1]`. For a discrete input the output density is piecewise
//! constant, so the marginal information density
//!
//! ```text
//! i(x; p) = -r ∫_{x-b}^{x+b} ln(2b p_Y(y)) dy,   r = 1/(2b)
//! ```
//!
//! is evaluated exactly by summing over the constant pieces of `p_Y`.
//! All information quantities are in nats.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Noise geometry: half-width `b`, inverse width `r = 1/(2b)`, `n = ⌊r⌋`
/// and `ρ = r - n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec<T> {
    b: T,
    r: T,
    n: usize,
    rho: T,
    integer: bool,
}

impl<T: Real> ChannelSpec<T> {
    /// Default tolerance for deciding that `r` is an integer.
    pub const DEFAULT_EPS_R: f64 = 1e-9;

    pub fn from_r(r: T) -> Result<Self> {
        Self::from_r_with_eps(r, T::lit(Self::DEFAULT_EPS_R))
    }

    pub fn from_b(b: T) -> Result<Self> {
        if !(b.is_finite() && b > T::zero()) {
            return Err(invalid("b", format!("must be positive and finite, got {b}")));
        }
        Self::from_r(T::one() / (b + b))
    }

    /// Builds the channel from `r`, treating it as an integer when it is
    /// within `eps_r` of one. Integer channels are snapped to `r = n`
    /// exactly so that the noise blocks tile the output interval.
    pub fn from_r_with_eps(r: T, eps_r: T) -> Result<Self> {
        if !(r.is_finite() && r > T::zero()) {
            return Err(invalid("r", format!("must be positive and finite, got {r}")));
        }
        if !(eps_r >= T::zero()) {
            return Err(invalid("eps_r", "must be nonnegative"));
        }
        let nearest = r.round();
        let integer = nearest >= T::one() && (r - nearest).abs() < eps_r;
        let (r, n, rho) = if integer {
            let n = nearest.to_usize().ok_or_else(|| invalid("r", "too large"))?;
            (nearest, n, T::zero())
        } else {
            let fl = r.floor();
            let n = fl.to_usize().ok_or_else(|| invalid("r", "too large"))?;
            (r, n, r - fl)
        };
        let b = T::one() / (r + r);
        Ok(Self {
            b,
            r,
            n,
            rho,
            integer,
        })
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn is_integer_r(&self) -> bool {
        self.integer
    }

    /// Number of mass points of the unconstrained optimum.
    pub fn num_points(&self) -> usize {
        if self.integer {
            self.n + 1
        } else {
            2 * self.n + 2
        }
    }

    /// Output alphabet `D_Y = [-b, 1 + b]`.
    pub fn output_interval(&self) -> (T, T) {
        (-self.b, T::one() + self.b)
    }

    /// Noise density `p_N(y | x)`.
    pub fn noise_density(&self, y: T, x: T) -> T {
        if (y - x).abs() < self.b {
            self.r
        } else {
            T::zero()
        }
    }
}

/// Power-law cost `c(x) = x^α` with budget `c̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSpec<T> {
    alpha: T,
    cbar: T,
}

impl<T: Real> CostSpec<T> {
    pub fn new(alpha: T, cbar: T) -> Result<Self> {
        if !(alpha.is_finite() && alpha > T::zero()) {
            return Err(invalid("alpha", format!("must be positive and finite, got {alpha}")));
        }
        if !(cbar.is_finite() && cbar > T::zero()) {
            return Err(invalid("cbar", format!("must be positive and finite, got {cbar}")));
        }
        Ok(Self { alpha, cbar })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn cbar(&self) -> T {
        self.cbar
    }

    pub fn with_cbar(&self, cbar: T) -> Result<Self> {
        Self::new(self.alpha, cbar)
    }

    #[inline]
    pub fn cost(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else {
            x.powf(self.alpha)
        }
    }

    pub fn is_concave(&self) -> bool {
        self.alpha <= T::one()
    }
}

fn sum_tolerance<T: Real>() -> T {
    T::tol(1e-12)
}

/// Finite list of `(position, mass)` pairs on `[0, 1]`.
///
/// Positions are strictly increasing, masses positive and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<T> {
    positions: Vec<T>,
    masses: Vec<T>,
}

impl<T: Real> DiscreteDistribution<T> {
    /// Validates and stores `points`; zero-mass points are dropped.
    pub fn new(points: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let (positions, masses): (Vec<T>, Vec<T>) = points.into_iter().unzip();
        let total = masses.iter().fold(T::zero(), |a, &m| a + m);
        if (total - T::one()).abs() > sum_tolerance::<T>() {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Self::checked(positions, masses)
    }

    /// Like [`DiscreteDistribution::new`] but rescales the masses to sum to one.
    pub fn normalized(points: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let (positions, masses): (Vec<T>, Vec<T>) = points.into_iter().unzip();
        let total = masses.iter().fold(T::zero(), |a, &m| a + m);
        if !(total > T::zero() && total.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} cannot be normalized"
            )));
        }
        let masses = masses.into_iter().map(|m| m / total).collect();
        Self::checked(positions, masses)
    }

    pub fn point_mass(x: T) -> Result<Self> {
        Self::new([(x, T::one())])
    }

    fn checked(positions: Vec<T>, masses: Vec<T>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidDistribution("no points".into()));
        }
        for (i, (&x, &m)) in positions.iter().zip(&masses).enumerate() {
            if !(x >= T::zero() && x <= T::one()) {
                return Err(Error::InvalidDistribution(format!(
                    "position {x} outside [0, 1]"
                )));
            }
            if !(m >= T::zero() && m.is_finite()) {
                return Err(Error::InvalidDistribution(format!("mass {m} at {x} is negative")));
            }
            if i > 0 && x <= positions[i - 1] {
                return Err(Error::InvalidDistribution(
                    "positions must be strictly increasing".into(),
                ));
            }
        }
        let (positions, masses) = positions
            .into_iter()
            .zip(masses)
            .filter(|&(_, m)| m > T::zero())
            .unzip::<T, T, Vec<T>, Vec<T>>();
        if positions.is_empty() {
            return Err(Error::InvalidDistribution("all masses are zero".into()));
        }
        Ok(Self { positions, masses })
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.positions.iter().copied().zip(self.masses.iter().copied())
    }

    /// Mirror image `x ↦ 1 - x`.
    pub fn reflected(&self) -> Self {
        Self {
            positions: self.positions.iter().rev().map(|&x| T::one() - x).collect(),
            masses: self.masses.iter().rev().copied().collect(),
        }
    }
}

/// Probability weights on the uniform grid `x_i = i / (N - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDistribution<T> {
    weights: Vec<T>,
}

impl<T: Real> GridDistribution<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidDistribution("grid needs at least two points".into()));
        }
        if weights.iter().any(|&w| !(w >= T::zero() && w.is_finite())) {
            return Err(Error::InvalidDistribution("negative or non-finite weight".into()));
        }
        let total = weights.iter().fold(T::zero(), |a, &w| a + w);
        if (total - T::one()).abs() > sum_tolerance::<T>() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(invalid("grid_size", "must be at least 2"));
        }
        let w = T::one() / T::from_usize_lossy(grid_size);
        Ok(Self {
            weights: vec![w; grid_size],
        })
    }

    pub fn grid_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn spacing(&self) -> T {
        T::one() / T::from_usize_lossy(self.weights.len() - 1)
    }

    pub fn position(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.spacing()
    }

    pub fn positions(&self) -> Vec<T> {
        (0..self.weights.len()).map(|i| self.position(i)).collect()
    }

    pub fn expected_cost(&self, cost: &CostSpec<T>) -> T {
        self.weights
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &w)| acc + w * cost.cost(self.position(i)))
    }

    /// Grid cells carrying more than `min_mass`, renormalized.
    pub fn to_discrete(&self, min_mass: T) -> Result<DiscreteDistribution<T>> {
        DiscreteDistribution::normalized(
            self.weights
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w > min_mass)
                .map(|(i, &w)| (self.position(i), w)),
        )
    }
}

/// Value of the marginal information density; `Infinite` when the output
/// density vanishes on a set of positive measure inside the noise window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfoDensity<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> InfoDensity<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, InfoDensity::Finite(_))
    }

    pub fn finite(self) -> Option<T> {
        match self {
            InfoDensity::Finite(v) => Some(v),
            InfoDensity::Infinite => None,
        }
    }

    /// The value as a float, `+∞` for the infinite marker.
    pub fn value(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }
}

/// Piecewise-constant output density of a discrete input.
///
/// Stored as the overlap mass `s(y) = 2b p_Y(y)` on the segments between
/// consecutive block edges `x_j ± b`. Edges closer than a snapping
/// tolerance are merged so that blocks which touch in exact arithmetic
/// also touch here.
#[derive(Debug, Clone)]
pub struct OutputDensity<T> {
    b: T,
    r: T,
    edges: Vec<T>,
    overlap: Vec<T>,
    covered: Vec<bool>,
}

impl<T: Real> OutputDensity<T> {
    pub fn new(dist: &DiscreteDistribution<T>, ch: &ChannelSpec<T>) -> Self {
        let b = ch.b();
        let eps = T::tol(1e-12);
        let mut raw: Vec<(T, usize, bool)> = Vec::with_capacity(2 * dist.len());
        for (j, &x) in dist.positions().iter().enumerate() {
            raw.push((x - b, j, true));
            raw.push((x + b, j, false));
        }
        raw.sort_by(|a, c| a.0.partial_cmp(&c.0).expect("finite edges"));

        let mut edges: Vec<T> = Vec::new();
        let mut left = vec![0usize; dist.len()];
        let mut right = vec![0usize; dist.len()];
        let mut prev: Option<T> = None;
        for &(v, j, is_left) in &raw {
            match prev {
                Some(p) if v - p <= eps => {}
                _ => edges.push(v),
            }
            prev = Some(v);
            let g = edges.len() - 1;
            if is_left {
                left[j] = g;
            } else {
                right[j] = g;
            }
        }

        let segments = edges.len().saturating_sub(1);
        let mut overlap = vec![T::zero(); segments];
        let mut covered = vec![false; segments];
        for (j, &m) in dist.masses().iter().enumerate() {
            for k in left[j]..right[j] {
                overlap[k] = overlap[k] + m;
                covered[k] = true;
            }
        }
        Self {
            b,
            r: ch.r(),
            edges,
            overlap,
            covered,
        }
    }

    /// Segment boundaries and overlap masses `2b p_Y` on each segment.
    pub fn segments(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.overlap)
            .map(|(e, &s)| (e[0], e[1], s))
    }

    /// `p_Y(y)` read off the segment table (open segments).
    pub fn density(&self, y: T) -> T {
        let k = self.edges.partition_point(|&e| e <= y);
        if k == 0 || k >= self.edges.len() {
            return T::zero();
        }
        if self.edges[k - 1] == y {
            return T::zero();
        }
        self.overlap[k - 1] * self.r
    }

    /// `∫ p_Y dy`, exact up to rounding.
    pub fn total_mass(&self) -> T {
        self.segments()
            .fold(T::zero(), |acc, (a, c, s)| acc + (c - a) * s * self.r)
    }

    pub fn information_density(&self, x: T) -> InfoDensity<T> {
        let eps = T::tol(1e-12);
        let lo = x - self.b;
        let hi = x + self.b;
        let (first, last) = match (self.edges.first(), self.edges.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return InfoDensity::Infinite,
        };
        if first.min(hi) - lo > eps || hi - last.max(lo) > eps {
            return InfoDensity::Infinite;
        }
        let start = self.edges.partition_point(|&e| e <= lo).saturating_sub(1);
        let mut acc = T::zero();
        for k in start..self.overlap.len() {
            let a = self.edges[k];
            if a >= hi {
                break;
            }
            let len = hi.min(self.edges[k + 1]) - lo.max(a);
            if len <= T::zero() {
                continue;
            }
            if !self.covered[k] {
                if len > eps {
                    return InfoDensity::Infinite;
                }
                continue;
            }
            acc = acc + len * self.overlap[k].ln();
        }
        InfoDensity::Finite(-self.r * acc)
    }
}

/// `p_Y(y) = Σ_j m_j p_N(y | x_j)`.
pub fn output_density<T: Real>(y: T, dist: &DiscreteDistribution<T>, ch: &ChannelSpec<T>) -> T {
    dist.iter()
        .fold(T::zero(), |acc, (x, m)| acc + m * ch.noise_density(y, x))
}

pub fn marginal_information_density<T: Real>(
    x: T,
    dist: &DiscreteDistribution<T>,
    ch: &ChannelSpec<T>,
) -> InfoDensity<T> {
    OutputDensity::new(dist, ch).information_density(x)
}

/// `I(p) = Σ_j m_j i(x_j; p)`.
pub fn mutual_information<T: Real>(
    dist: &DiscreteDistribution<T>,
    ch: &ChannelSpec<T>,
) -> InfoDensity<T> {
    let out = OutputDensity::new(dist, ch);
    let mut total = T::zero();
    for (x, m) in dist.iter() {
        match out.information_density(x) {
            InfoDensity::Finite(v) => total = total + m * v,
            InfoDensity::Infinite => return InfoDensity::Infinite,
        }
    }
    InfoDensity::Finite(total)
}

pub fn expected_cost<T: Real>(dist: &DiscreteDistribution<T>, cost: &CostSpec<T>) -> T {
    dist.iter()
        .fold(T::zero(), |acc, (x, m)| acc + m * cost.cost(x))
}
