//! Second-order finite differences for the operator and resolvent-norm
//! estimates for the discrete proxy.
//!
//! Robin conditions are eliminated through ghost points. The resulting
//! matrix is then symmetrized by the square roots of the trapezoid weights,
//! so the Euclidean norm on its index space is the discrete `L^2` norm and
//! a Hermitian boundary pair gives a Hermitian matrix.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::model::{ProblemSpec, SpinorGridFunction};
use crate::spectra::SearchRegion;

const MIN_POINTS: usize = 8;
const MAX_ITERATIONS: usize = 2000;

/// The discretized operator on `n` nodes per channel. Unknowns are
/// interleaved: index `2 j + c` holds channel `c` at node `j`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub n: usize,
    pub h: f64,
    pub half_width: f64,
    /// Symmetrized matrix of size `2n x 2n`.
    pub matrix: DenseMatrix,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn discretize(spec: &ProblemSpec, n: usize) -> Result<DiscreteOperator> {
    if n < MIN_POINTS {
        return Err(Error::InvalidInput(format!("need at least {MIN_POINTS} grid points, got {n}")));
    }
    let a = spec.half_width;
    let h = 2.0 * a / (n - 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    let edge = std::f64::consts::SQRT_2 * inv_h2;
    let mut m = DenseMatrix::zeros(2 * n, 2 * n);
    let grid = SpinorGridFunction::uniform_grid(a, n);

    for j in 0..n {
        let v = spec.potential_at(grid[j]);
        for ch in 0..2 {
            let sign = if ch == 0 { 1.0 } else { -1.0 };
            let i = 2 * j + ch;
            m[(i, i)] = c(2.0 * inv_h2 + sign * spec.field + v);
            if j > 0 {
                let off = if j == 1 || j == n - 1 { edge } else { inv_h2 };
                m[(i, i - 2)] = c(-off);
            }
            if j + 1 < n {
                let off = if j == 0 || j == n - 2 { edge } else { inv_h2 };
                m[(i, i + 2)] = c(-off);
            }
        }
    }
    let (am, ap) = (&spec.boundary.a_minus, &spec.boundary.a_plus);
    let last = 2 * (n - 1);
    for r in 0..2 {
        for s in 0..2 {
            m[(r, s)] -= am.m[r][s] * (2.0 / h);
            m[(last + r, last + s)] += ap.m[r][s] * (2.0 / h);
        }
    }
    Ok(DiscreteOperator {
        n,
        h,
        half_width: a,
        matrix: m,
    })
}

impl DiscreteOperator {
    /// Applies the (unsymmetrized) difference operator to nodal samples.
    pub fn apply(&self, f: &SpinorGridFunction) -> Result<SpinorGridFunction> {
        if f.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "function has {} samples, operator expects {}",
                f.len(),
                self.n
            )));
        }
        let root = self.root_weights();
        let x: Vec<Complex64> = f
            .values()
            .iter()
            .enumerate()
            .flat_map(|(j, v)| [v[0] * root[j], v[1] * root[j]])
            .collect();
        let y = self.matrix.mul_vec(&x);
        Ok(f.map_values(|j, _| [y[2 * j] / root[j], y[2 * j + 1] / root[j]]))
    }

    fn root_weights(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| if j == 0 || j == self.n - 1 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 })
            .collect()
    }

    /// Smallest singular value of `M - z`, or zero if the shifted matrix is
    /// singular to working precision.
    pub fn sigma_min(&self, z: Complex64, tol: f64) -> f64 {
        let Some(lu) = self.matrix.shifted(z).lu() else {
            return 0.0;
        };
        let dim = lu.dim();
        let mut x: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new(1.0 + ((i * 7919) % 101) as f64 / 101.0, ((i * 104_729) % 89) as f64 / 89.0))
            .collect();
        let mut estimate = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let nx = norm2(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            // one step of the power method on ((M - z)(M - z)^*)^{-1}
            let y = lu.solve_adjoint(&x);
            let w = lu.solve(&y);
            let growth = norm2(&w);
            if !growth.is_finite() || growth == 0.0 {
                return 0.0;
            }
            let next = 1.0 / growth.sqrt();
            let converged = (next - estimate).abs() <= tol * next;
            estimate = next;
            x = w;
            if converged {
                break;
            }
        }
        estimate
    }

    /// `1 / sigma_min(M - z)`, or infinity when `z` is a discrete eigenvalue.
    pub fn resolvent_norm_estimate(&self, z: Complex64, tol: f64) -> f64 {
        let s = self.sigma_min(z, tol);
        if s > 0.0 {
            1.0 / s
        } else {
            f64::INFINITY
        }
    }
}

/// One point of a pseudospectrum table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoPoint {
    pub z: Complex64,
    pub sigma_min: f64,
}

/// `sigma_min(M - z)` on an `nx` by `ny` grid over `region`, row-major with
/// the imaginary part fixed along a row.
pub fn pseudospectrum_grid(spec: &ProblemSpec, region: &SearchRegion, nx: usize, ny: usize, n: usize) -> Result<Vec<PseudoPoint>> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidInput(format!("grid needs at least 2 x 2 points, got {nx} x {ny}")));
    }
    let op = discretize(spec, n)?;
    let points: Vec<Complex64> = (0..ny)
        .flat_map(|r| {
            let im = region.im_min + region.height() * r as f64 / (ny - 1) as f64;
            (0..nx).map(move |k| Complex64::new(region.re_min + region.width() * k as f64 / (nx - 1) as f64, im))
        })
        .collect();
    Ok(points
        .par_iter()
        .map(|&z| PseudoPoint {
            z,
            sigma_min: op.sigma_min(z, 1e-8),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::families;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn neumann_constant_is_reproduced() {
        let spec = ProblemSpec::new(FRAC_PI_4, 1.0, families::neumann()).unwrap();
        let op = discretize(&spec, 50).unwrap();
        let one = SpinorGridFunction::from_fn(FRAC_PI_4, 50, |_| [c(1.0), c(0.0)]).unwrap();
        let out = op.apply(&one).unwrap();
        for v in out.values() {
            assert!((v[0] - 1.0).norm() < 1e-9 && v[1].norm() < 1e-12);
        }
    }

    #[test]
    fn neumann_kernel() {
        let spec = ProblemSpec::new(FRAC_PI_4, 0.0, families::neumann()).unwrap();
        let op = discretize(&spec, 60).unwrap();
        assert!(op.sigma_min(c(0.0), 1e-10) < 1e-6);
    }

    #[test]
    fn hermitian_boundary_gives_hermitian_matrix() {
        let spec = ProblemSpec::new(1.0, 0.3, families::hermitian_coupling(1.2)).unwrap();
        let m = discretize(&spec, 20).unwrap().matrix;
        let adj = m.adjoint();
        for i in 0..40 {
            for j in 0..40 {
                assert!((m[(i, j)] - adj[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn far_left_point_in_self_adjoint_case() {
        let spec = ProblemSpec::new(FRAC_PI_4, 0.0, families::neumann()).unwrap();
        let op = discretize(&spec, 200).unwrap();
        let r = op.resolvent_norm_estimate(c(-100.0), 1e-8);
        assert!((r * 100.0 - 1.0).abs() < 0.05, "{r}");
    }

    #[test]
    fn sigma_min_at_eigenvalue_decays_quadratically() {
        let spec = ProblemSpec::new(FRAC_PI_4, 0.4, families::scalar_imaginary(1.0, 0.0)).unwrap();
        let s1 = discretize(&spec, 100).unwrap().sigma_min(c(0.6), 1e-10);
        let s2 = discretize(&spec, 200).unwrap().sigma_min(c(0.6), 1e-10);
        let ratio = s1 / s2;
        assert!((3.5..4.5).contains(&ratio), "{s1} {s2} {ratio}");
    }

    #[test]
    fn rejects_small_grids() {
        let spec = ProblemSpec::new(1.0, 0.0, families::neumann()).unwrap();
        assert!(discretize(&spec, 4).is_err());
        assert!(pseudospectrum_grid(&spec, &SearchRegion::new(0.0, 1.0, 0.0, 1.0).unwrap(), 1, 3, 10).is_err());
    }
}
