//! The metric operator `Theta = I + K` for the decoupled family with
//! `A+ = (b + i al) I` and `A- = (-b + i al) I`, acting on each spinor
//! component by the integral kernel
//!
//! ```text
//! K(x, y) = exp(i al (x - y) - be |x - y|) (c + i al sgn(x - y))
//! ```
//!
//! with a free real parameter `c`. On the diagonal `sgn(0) = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{norm2, Cholesky, DenseMatrix};
use crate::model::{families, trapezoid_weights, ProblemSpec, SpinorGridFunction};
use crate::oracle;
use crate::spectra::{enclosure, find_eigenvalues, SearchRegion};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub half_width: f64,
}

impl MetricParams {
    pub fn new(alpha: f64, beta: f64, c: f64, half_width: f64) -> Result<Self> {
        if ![alpha, beta, c, half_width].iter().all(|x| x.is_finite()) || !(half_width > 0.0) {
            return Err(Error::InvalidInput(format!(
                "metric parameters must be finite with positive half-width, got {alpha}, {beta}, {c}, {half_width}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            c,
            half_width,
        })
    }
}

pub fn metric_kernel(x: f64, y: f64, p: &MetricParams) -> C {
    let d = x - y;
    let sgn = if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    };
    C::new(-p.beta * d.abs(), p.alpha * d).exp() * C::new(p.c, p.alpha * sgn)
}

/// `(Theta f)(x_i) = f(x_i) + sum_j w_j K(x_i, x_j) f(x_j)` with trapezoid
/// weights, in linear time. The kernel separates on either side of the
/// diagonal, so two running sums suffice.
pub fn apply_metric(f: &SpinorGridFunction, p: &MetricParams) -> SpinorGridFunction {
    let x = f.grid();
    let w = f.trapezoid_weights();
    let n = x.len();
    let v = f.values();
    let below = C::new(-p.beta, p.alpha);
    let above = C::new(p.beta, p.alpha);
    let mut left = vec![[C::new(0.0, 0.0); 2]; n];
    let mut right = vec![[C::new(0.0, 0.0); 2]; n];
    for i in 1..n {
        let e = (below * (x[i] - x[i - 1])).exp();
        for ch in 0..2 {
            left[i][ch] = e * (left[i - 1][ch] + v[i - 1][ch] * w[i - 1]);
        }
    }
    for i in (0..n - 1).rev() {
        let e = (-above * (x[i + 1] - x[i])).exp();
        for ch in 0..2 {
            right[i][ch] = e * (right[i + 1][ch] + v[i + 1][ch] * w[i + 1]);
        }
    }
    let up = C::new(p.c, p.alpha);
    let down = C::new(p.c, -p.alpha);
    f.map_values(|i, val| {
        let mut out = [C::new(0.0, 0.0); 2];
        for ch in 0..2 {
            out[ch] = val[ch] * (1.0 + p.c * w[i]) + up * left[i][ch] + down * right[i][ch];
        }
        out
    })
}

/// Gram matrix `(Psi_m, Theta Psi_n)` of the lowest eigenfunctions.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGram {
    pub eigenvalues: Vec<f64>,
    pub gram: Vec<Vec<C>>,
}

impl ThetaGram {
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, row) in self.gram.iter().enumerate() {
            for (n, v) in row.iter().enumerate() {
                if m != n {
                    worst = worst.max(v.norm());
                }
            }
        }
        worst
    }
}

/// Eigenfunctions of the `n_eigs` lowest eigenvalues on `steps` shooting
/// intervals, and their Theta-Gram matrix. The spectrum must be real.
pub fn theta_orthogonality(spec: &ProblemSpec, p: &MetricParams, n_eigs: usize, steps: usize) -> Result<ThetaGram> {
    let expected = families::scalar_imaginary(p.alpha, p.beta);
    let tol = 1e-12 * (1.0 + expected.max_abs_entry());
    if !spec.boundary.a_plus.approx_eq(&expected.a_plus, tol)
        || !spec.boundary.a_minus.approx_eq(&expected.a_minus, tol)
        || (spec.half_width - p.half_width).abs() > 1e-12 * p.half_width
    {
        return Err(Error::InvalidInput(
            "the metric is defined only for the decoupled family with matching parameters".into(),
        ));
    }
    if n_eigs == 0 {
        return Err(Error::InvalidInput("need at least one eigenfunction".into()));
    }

    let enc = enclosure(spec);
    let mut re_max = 10.0_f64.max(4.0 * spec.field.abs());
    let eigenvalues = loop {
        let h = enc.upper_boundary(re_max).unwrap_or(1.0).max(1.0);
        let region = SearchRegion::new(-enc.c_const - 1.0, re_max, -h, h)?;
        let ev = find_eigenvalues(spec, &region, 1e-11)?;
        if let Some(e) = ev.iter().find(|e| e.lambda.im.abs() > 1e-8 * (1.0 + e.lambda.norm())) {
            return Err(Error::ComplexSpectrum(e.lambda));
        }
        if ev.iter().map(|e| e.geometric_mult).sum::<usize>() >= n_eigs || re_max > 1e5 {
            break ev;
        }
        re_max *= 2.0;
    };

    let mut lambdas = Vec::new();
    let mut functions = Vec::new();
    for e in &eigenvalues {
        for mode in oracle::eigenfunctions(C::new(e.lambda.re, 0.0), spec, steps)? {
            if functions.len() < n_eigs {
                lambdas.push(e.lambda.re);
                functions.push(mode.function);
            }
        }
    }
    let images: Vec<SpinorGridFunction> = functions.iter().map(|f| apply_metric(f, p)).collect();
    let gram = functions
        .iter()
        .map(|f| images.iter().map(|g| f.inner(g)).collect())
        .collect();
    Ok(ThetaGram {
        eigenvalues: lambdas,
        gram,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Positivity {
    pub positive: bool,
    /// Estimate of the smallest eigenvalue of the discretized metric.
    pub smallest_eigenvalue: f64,
    /// Whether the verdict survives halving the grid spacing.
    pub refinement_consistent: bool,
}

/// The Hermitian matrix `I + W^{1/2} K W^{1/2}` on `n` uniform points; its
/// quadratic form is the discretized `(f, Theta f)`.
pub fn metric_matrix(p: &MetricParams, n: usize) -> Result<DenseMatrix> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 grid points, got {n}")));
    }
    let x = SpinorGridFunction::uniform_grid(p.half_width, n);
    let root: Vec<f64> = trapezoid_weights(&x).iter().map(|w| w.sqrt()).collect();
    let mut m = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += metric_kernel(x[i], x[j], p) * (root[i] * root[j]);
        }
    }
    Ok(m)
}

pub fn theta_positivity(p: &MetricParams, n: usize) -> Result<Positivity> {
    let m = metric_matrix(p, n)?;
    let fine = Cholesky::factor(&metric_matrix(p, 2 * n - 1)?).is_some();
    let (positive, smallest) = match Cholesky::factor(&m) {
        Some(ch) => (true, smallest_by_inverse_iteration(&ch, n)),
        None => (false, smallest_by_bisection(&m)),
    };
    Ok(Positivity {
        positive,
        smallest_eigenvalue: smallest,
        refinement_consistent: positive == fine,
    })
}

fn smallest_by_inverse_iteration(ch: &Cholesky, n: usize) -> f64 {
    let mut x: Vec<C> = (0..n).map(|i| C::new(1.0 + (i % 7) as f64 * 0.1, 0.0)).collect();
    let mut estimate = f64::INFINITY;
    for _ in 0..500 {
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let y = ch.solve(&x);
        let next = 1.0 / norm2(&y);
        x = y;
        if (next - estimate).abs() <= 1e-12 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Largest shift `s` keeping `M - s I` positive definite, which is the
/// smallest eigenvalue of `M`.
fn smallest_by_bisection(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let mut hi = 0.0;
    let mut lo = -m.norm_inf();
    let shifted = |s: f64| {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] -= s;
        }
        Cholesky::factor(&a).is_some()
    };
    while hi - lo > 1e-10 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if shifted(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
