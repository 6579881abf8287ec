//! Problem data: boundary matrices, the interval, the field strength, an
//! optional piecewise-constant potential, and spinor-valued grid functions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Complex2x2;

/// The two decoupled components of the spinor. Channel `Plus` carries the
/// energy shift `+b`, so its local momentum is `sqrt(lambda - b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Plus,
    Minus,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Plus, Channel::Minus];

    /// `+1` for `Plus`, `-1` for `Minus`.
    pub fn sign(self) -> f64 {
        match self {
            Channel::Plus => 1.0,
            Channel::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Channel::Plus => 0,
            Channel::Minus => 1,
        }
    }
}

/// Robin boundary data `Psi'(+-a) + A^{+-} Psi(+-a) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPair {
    pub a_plus: Complex2x2,
    pub a_minus: Complex2x2,
}

impl BoundaryPair {
    pub fn new(a_plus: Complex2x2, a_minus: Complex2x2) -> Result<Self> {
        if !a_plus.is_finite() || !a_minus.is_finite() {
            return Err(Error::InvalidInput("boundary matrices must be finite".into()));
        }
        Ok(Self { a_plus, a_minus })
    }

    /// Largest entry modulus over both matrices.
    pub fn max_abs_entry(&self) -> f64 {
        self.a_plus.max_abs_entry().max(self.a_minus.max_abs_entry())
    }

    /// `|A| = ||A^+|| + ||A^-||` in operator norms.
    pub fn norm(&self) -> f64 {
        self.a_plus.operator_norm() + self.a_minus.operator_norm()
    }

    pub fn is_diagonal(&self) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        [self.a_plus, self.a_minus]
            .iter()
            .all(|m| m.m[0][1] == zero && m.m[1][0] == zero)
    }
}

/// Piecewise-constant real potential: `values[i]` on `[breakpoints[i], breakpoints[i+1])`,
/// zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePotential {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewisePotential {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "potential needs one more breakpoint than values, got {} and {}",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("potential data must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints, values })
    }

    /// Constant height `v0` on `[left, right)`.
    pub fn square_barrier(left: f64, right: f64, v0: f64) -> Result<Self> {
        Self::new(vec![left, right], vec![v0])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        if x < b[0] || x >= b[b.len() - 1] {
            return 0.0;
        }
        let i = b.partition_point(|&p| p <= x) - 1;
        self.values[i]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Pieces covering `[-a, a]` as `(left, right, value)`, including the
    /// zero-potential gaps at both ends.
    pub fn pieces_on(&self, half_width: f64) -> Vec<(f64, f64, f64)> {
        let mut cuts = vec![-half_width];
        cuts.extend(self.breakpoints.iter().copied().filter(|&x| x > -half_width && x < half_width));
        cuts.push(half_width);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1], self.value_at(0.5 * (w[0] + w[1]))))
            .collect()
    }
}

/// Everything that defines one operator instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub half_width: f64,
    pub field: f64,
    pub boundary: BoundaryPair,
    pub potential: Option<PiecewisePotential>,
}

impl ProblemSpec {
    pub fn new(half_width: f64, field: f64, boundary: BoundaryPair) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidInput(format!("half-width must be positive, got {half_width}")));
        }
        if !field.is_finite() {
            return Err(Error::InvalidInput("field strength must be finite".into()));
        }
        Ok(Self {
            half_width,
            field,
            boundary,
            potential: None,
        })
    }

    /// Attaches a potential whose support lies strictly inside `(-a, a)`.
    pub fn with_potential(mut self, potential: PiecewisePotential) -> Result<Self> {
        let b = potential.breakpoints();
        if b[0] <= -self.half_width || b[b.len() - 1] >= self.half_width {
            return Err(Error::InvalidInput(format!(
                "potential support [{}, {}] must lie inside (-{a}, {a})",
                b[0],
                b[b.len() - 1],
                a = self.half_width
            )));
        }
        self.potential = Some(potential);
        Ok(self)
    }

    pub fn with_boundary(&self, boundary: BoundaryPair) -> Self {
        Self {
            boundary,
            ..self.clone()
        }
    }

    pub fn has_potential(&self) -> bool {
        self.potential.as_ref().is_some_and(|p| !p.is_zero())
    }

    pub fn potential_at(&self, x: f64) -> f64 {
        self.potential.as_ref().map_or(0.0, |p| p.value_at(x))
    }
}

/// Samples of a two-component function on a strictly increasing grid over `[-a, a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorGridFunction {
    grid: Vec<f64>,
    values: Vec<[Complex64; 2]>,
}

impl SpinorGridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<[Complex64; 2]>) -> Result<Self> {
        if grid.len() < 3 {
            return Err(Error::InvalidInput("grid needs at least three points".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("grid must be strictly increasing".into()));
        }
        Ok(Self { grid, values })
    }

    /// `n` equally spaced points on `[-a, a]`, endpoints included.
    pub fn uniform_grid(half_width: f64, n: usize) -> Vec<f64> {
        let h = 2.0 * half_width / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { half_width } else { -half_width + h * i as f64 })
            .collect()
    }

    pub fn from_fn(half_width: f64, n: usize, f: impl Fn(f64) -> [Complex64; 2]) -> Result<Self> {
        let grid = Self::uniform_grid(half_width, n);
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[[Complex64; 2]] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    pub fn map_values(&self, f: impl Fn(usize, [Complex64; 2]) -> [Complex64; 2]) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect(),
        }
    }

    /// Trapezoid weights of the grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.grid)
    }

    /// `(f, g) = sum_i w_i (conj f_i . g_i)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.grid.len(), other.grid.len(), "grids differ");
        self.trapezoid_weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (f, g))| (f[0].conj() * g[0] + f[1].conj() * g[1]) * *w)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v[0].norm().max(v[1].norm()))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Named boundary families used in parameter studies.
pub mod families {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Hermitian off-diagonal coupling: `A^+ = A^- = [[0, i alpha], [-i alpha, 0]]`.
    pub fn hermitian_coupling(alpha: f64) -> BoundaryPair {
        let m = Complex2x2::new(c(0.0, 0.0), c(0.0, alpha), c(0.0, -alpha), c(0.0, 0.0));
        BoundaryPair { a_plus: m, a_minus: m }
    }

    /// Scalar imaginary Robin data `A^+ = (i alpha + beta) I`, `A^- = (i alpha - beta) I`.
    pub fn scalar_imaginary(alpha: f64, beta: f64) -> BoundaryPair {
        BoundaryPair {
            a_plus: Complex2x2::scalar(c(beta, alpha)),
            a_minus: Complex2x2::scalar(c(-beta, alpha)),
        }
    }

    /// Symmetric anti-Hermitian coupling `A^{+-} = +-[[0, i alpha], [i alpha, 0]]`.
    pub fn symmetric_coupling(alpha: f64) -> BoundaryPair {
        let a_plus = Complex2x2::new(c(0.0, 0.0), c(0.0, alpha), c(0.0, alpha), c(0.0, 0.0));
        BoundaryPair {
            a_plus,
            a_minus: -a_plus,
        }
    }

    /// Pure Neumann data.
    pub fn neumann() -> BoundaryPair {
        BoundaryPair {
            a_plus: Complex2x2::zero(),
            a_minus: Complex2x2::zero(),
        }
    }
}
