//! Small dense complex linear algebra: 2x2 boundary matrices, a row-major
//! dense matrix with an LU factorization that skips structural zeros, a
//! Cholesky factorization for Hermitian matrices and a one-sided Jacobi SVD.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A complex 2x2 matrix stored by rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex2x2 {
    pub m: [[Complex64; 2]; 2],
}

impl Complex2x2 {
    pub const fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(s: Complex64) -> Self {
        Self::new(s, ZERO, ZERO, s)
    }

    pub fn diagonal(d1: Complex64, d2: Complex64) -> Self {
        Self::new(d1, ZERO, ZERO, d2)
    }

    pub fn from_real(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self::new(a11.into(), a12.into(), a21.into(), a22.into())
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::new(f(self.m[0][0]), f(self.m[0][1]), f(self.m[1][0]), f(self.m[1][1]))
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]
    }

    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let (hi, _) = self.singular_values();
        hi
    }

    /// Singular values `(largest, smallest)` in closed form.
    pub fn singular_values(&self) -> (f64, f64) {
        let f2 = self.entries().iter().map(|z| z.norm_sqr()).sum::<f64>();
        let d = self.det().norm();
        let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
        let hi = ((f2 + disc) / 2.0).sqrt();
        let lo = if hi > 0.0 { d / hi } else { 0.0 };
        (hi, lo)
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Entrywise comparison against an absolute threshold.
    pub fn approx_eq(&self, other: &Self, threshold: f64) -> bool {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .all(|(a, b)| (a - b).norm() <= threshold)
    }
}

impl Add for Complex2x2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.m[0][0] + rhs.m[0][0],
            self.m[0][1] + rhs.m[0][1],
            self.m[1][0] + rhs.m[1][0],
            self.m[1][1] + rhs.m[1][1],
        )
    }
}

impl Sub for Complex2x2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for Complex2x2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl Mul for Complex2x2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<Complex64> for Complex2x2 {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        self.map(|z| z * rhs)
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Returns `self - z I`.
    pub fn shifted(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] -= z;
        }
        out
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn lu(&self) -> Option<Lu> {
        Lu::factor(self)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
///
/// Exact zeros are skipped during elimination and the factors are stored as
/// per-row sparse lists, so banded input stays cheap to factor and to solve.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    perm: Vec<usize>,
    lower: Vec<Vec<(usize, Complex64)>>,
    upper: Vec<Vec<(usize, Complex64)>>,
    diag: Vec<Complex64>,
}

impl Lu {
    /// Returns `None` when a pivot is negligible relative to the matrix norm.
    pub fn factor(a: &DenseMatrix) -> Option<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let norm = a.norm_inf();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        let tiny = norm * 1e-14;
        let mut w = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut p = k;
            let mut best = w[k * n + k].norm();
            for i in k + 1..n {
                let v = w[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny {
                return None;
            }
            if p != k {
                for j in 0..n {
                    w.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = w[k * n + k];
            let cols: Vec<usize> = (k + 1..n).filter(|&j| w[k * n + j] != ZERO).collect();
            for i in k + 1..n {
                let e = w[i * n + k];
                if e == ZERO {
                    continue;
                }
                let l = e / pivot;
                w[i * n + k] = l;
                for &j in &cols {
                    let u = w[k * n + j];
                    w[i * n + j] -= l * u;
                }
            }
        }

        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            let row = &w[i * n..(i + 1) * n];
            lower.push(
                (0..i)
                    .filter(|&j| row[j] != ZERO)
                    .map(|j| (j, row[j]))
                    .collect(),
            );
            diag.push(row[i]);
            upper.push(
                (i + 1..n)
                    .filter(|&j| row[j] != ZERO)
                    .map(|j| (j, row[j]))
                    .collect(),
            );
        }
        Some(Self {
            n,
            perm,
            lower,
            upper,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for &(j, l) in &self.lower[i] {
                s -= l * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for &(j, u) in &self.upper[i] {
                s -= u * y[j];
            }
            y[i] = s / self.diag[i];
        }
        y
    }

    /// Solves `A^* x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        // A^* = U^* L^* P, so solve U^* v = b, then L^* w = v, then x = P^T w.
        let n = self.n;
        let mut v = b.to_vec();
        for i in 0..n {
            v[i] /= self.diag[i].conj();
            let vi = v[i];
            for &(j, u) in &self.upper[i] {
                v[j] -= u.conj() * vi;
            }
        }
        for i in (0..n).rev() {
            let vi = v[i];
            for &(j, l) in &self.lower[i] {
                v[j] -= l.conj() * vi;
            }
        }
        let mut x = vec![ZERO; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = v[k];
        }
        x
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<Complex64>,
}

impl Cholesky {
    /// Returns `None` if the matrix is not numerically positive definite.
    /// Only the lower triangle of `a` is read.
    pub fn factor(a: &DenseMatrix) -> Option<Self> {
        assert_eq!(a.rows, a.cols, "Cholesky needs a square matrix");
        let n = a.rows;
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = Complex64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Self { n, l })
    }

    /// Solves `A x = b` with `A = L L^*`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i].conj() * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Singular values of a small dense matrix, largest first, by one-sided
/// Jacobi rotations.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let (m, n) = (a.rows, a.cols);
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (alpha - beta) / (2.0 * g);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = -sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = cols[p][i];
                    let y = cols[q][i] * phase.conj();
                    cols[p][i] = x * c - y * s;
                    cols[q][i] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Euclidean norm of a complex vector.
pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Principal square root with the branch cut on the negative real axis and
/// `Im >= 0` on the cut itself.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.re == 0.0 && r.im < 0.0 {
        -r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_matrix(n: usize) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let x = ((i * 7 + j * 3) % 11) as f64 - 5.0;
                let y = ((i * 5 + j * 2) % 7) as f64 - 3.0;
                a[(i, j)] = c(x, 0.5 * y);
            }
            a[(i, i)] += c(10.0, 0.0);
        }
        a
    }

    #[test]
    fn two_by_two_singular_values_match_jacobi() {
        let m = Complex2x2::new(c(1.0, 2.0), c(-0.5, 0.3), c(0.0, 1.0), c(2.0, -1.0));
        let mut d = DenseMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                d[(i, j)] = m.m[i][j];
            }
        }
        let sv = singular_values(&d);
        let (hi, lo) = m.singular_values();
        assert!((sv[0] - hi).abs() < 1e-12);
        assert!((sv[1] - lo).abs() < 1e-12);
        assert!((hi * lo - m.det().norm()).abs() < 1e-12);
    }

    #[test]
    fn lu_solves_and_adjoint_solves() {
        let a = sample_matrix(9);
        let lu = a.lu().unwrap();
        let b: Vec<Complex64> = (0..9).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let x = lu.solve(&b);
        let r: Vec<Complex64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) < 1e-12 * norm2(&b));
        let y = lu.solve_adjoint(&b);
        let r: Vec<Complex64> = a.adjoint().mul_vec(&y).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) < 1e-12 * norm2(&b));
    }

    #[test]
    fn lu_rejects_singular() {
        let a = DenseMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(a.lu().is_none());
    }

    #[test]
    fn cholesky_solves_hermitian_system() {
        let b = sample_matrix(6);
        let mut a = DenseMatrix::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                let s: Complex64 = (0..6).map(|k| b[(k, i)].conj() * b[(k, j)]).sum();
                a[(i, j)] = s;
            }
        }
        let ch = Cholesky::factor(&a).unwrap();
        let rhs: Vec<Complex64> = (0..6).map(|i| c(1.0, i as f64)).collect();
        let x = ch.solve(&rhs);
        let r: Vec<Complex64> = a.mul_vec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) < 1e-10 * norm2(&rhs));
        assert!(Cholesky::factor(&a.shifted(c(1e6, 0.0))).is_none());
    }

    #[test]
    fn jacobi_detects_rank_deficiency() {
        let mut a = sample_matrix(4);
        for i in 0..4 {
            let v = a[(i, 0)] * c(0.3, -1.2) + a[(i, 1)];
            a[(i, 3)] = v;
        }
        let sv = singular_values(&a);
        assert!(sv[3] < 1e-12 * sv[0]);
        assert!(sv[2] > 1e-3 * sv[0]);
    }

    #[test]
    fn principal_sqrt_on_cut() {
        let r = principal_sqrt(c(-4.0, -0.0));
        assert_eq!(r, c(0.0, 2.0));
        assert!(principal_sqrt(c(3.0, -1.0)).re > 0.0);
    }
}
