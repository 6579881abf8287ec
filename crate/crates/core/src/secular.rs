//! The regularized characteristic function of the potential-free operator and
//! the 4x4 boundary matrix on the fundamental system.
//!
//! With `c = cos(2a k)` and `s = sin(2a k)/k` per channel, the function
//!
//! ```text
//! F(l) = G_cc c- c+ + G_ss s- s+ + G_sc s- c+ + G_cs c- s+ + G_0
//! ```
//!
//! depends on `mu = k^2` only, so it is entire in the spectral parameter.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::principal_sqrt;
use crate::model::{BoundaryPair, ProblemSpec};

/// Squared and principal-branch momenta of both channels at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMomenta {
    pub mu_plus: Complex64,
    pub mu_minus: Complex64,
    pub k_plus: Complex64,
    pub k_minus: Complex64,
}

impl ChannelMomenta {
    pub fn new(lambda: Complex64, field: f64) -> Self {
        let mu_plus = lambda - field;
        let mu_minus = lambda + field;
        Self {
            mu_plus,
            mu_minus,
            k_plus: principal_sqrt(mu_plus),
            k_minus: principal_sqrt(mu_minus),
        }
    }

    /// The same energies on a non-principal branch.
    pub fn flipped(self, plus: bool, minus: bool) -> Self {
        Self {
            k_plus: if plus { -self.k_plus } else { self.k_plus },
            k_minus: if minus { -self.k_minus } else { self.k_minus },
            ..self
        }
    }
}

/// A function value with an optional derivative and the magnitude of its
/// largest additive term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharValue {
    pub value: Complex64,
    pub derivative: Option<Complex64>,
    pub scale: f64,
}

impl CharValue {
    /// `|value| / scale`, or zero when every term vanishes.
    pub fn relative_residual(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.norm() / self.scale
        } else {
            0.0
        }
    }
}

/// `cos(L sqrt(mu))`, `sin(L sqrt(mu))/sqrt(mu)` and their `mu`-derivatives.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TrigPair {
    pub c: Complex64,
    pub s: Complex64,
    pub dc: Complex64,
    pub ds: Complex64,
}

const SERIES_THRESHOLD: f64 = 1e-2;

impl TrigPair {
    pub fn new(mu: Complex64, k: Complex64, length: f64) -> Self {
        let x = mu * length * length;
        if x.norm() < SERIES_THRESHOLD {
            return Self::series(mu, length);
        }
        let c = (k * length).cos();
        let s = (k * length).sin() / k;
        Self {
            c,
            s,
            dc: -0.5 * length * s,
            ds: (length * c - s) / (2.0 * mu),
        }
    }

    /// Non-vanishing envelopes `(E, E / max(|k|, 1/L))` with
    /// `E = sqrt(|c|^2 + |k s|^2) >= 1`, bounding `|c|` and `|s|`.
    pub fn envelopes(&self, k: Complex64, length: f64) -> (f64, f64) {
        let e = (self.c.norm_sqr() + (k * self.s).norm_sqr()).sqrt().max(1.0);
        (e, e / k.norm().max(1.0 / length))
    }

    pub fn from_mu(mu: Complex64, length: f64) -> Self {
        Self::new(mu, principal_sqrt(mu), length)
    }

    /// Power series in `x = mu L^2`, used near the threshold `mu = 0`.
    pub fn series(mu: Complex64, length: f64) -> Self {
        let x = mu * length * length;
        let mut c = Complex64::new(0.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        let mut ds = Complex64::new(0.0, 0.0);
        // term_n = (-x)^n; factorials carried in f64
        let mut power = Complex64::new(1.0, 0.0);
        let mut prev_power = Complex64::new(0.0, 0.0);
        let mut fact_even = 1.0; // (2n)!
        let mut fact_odd = 1.0; // (2n+1)!
        for n in 0..12 {
            if n > 0 {
                fact_even *= (2 * n - 1) as f64 * (2 * n) as f64;
                fact_odd *= (2 * n) as f64 * (2 * n + 1) as f64;
            }
            c += power / fact_even;
            s += power / fact_odd;
            if n > 0 {
                // d/dx (-x)^n = -n (-x)^(n-1)
                ds += -(n as f64) * prev_power / fact_odd;
            }
            prev_power = power;
            power *= -x;
        }
        let l2 = length * length;
        let s = s * length;
        Self {
            c,
            s,
            dc: -0.5 * length * s,
            ds: ds * length * l2,
        }
    }
}

/// Coefficients of the characteristic function for fixed boundary data.
#[derive(Debug, Clone, Copy)]
pub struct CharFunction {
    half_width: f64,
    field: f64,
    boundary: BoundaryPair,
}

impl CharFunction {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        if spec.has_potential() {
            return Err(Error::PotentialPresent);
        }
        Ok(Self {
            half_width: spec.half_width,
            field: spec.field,
            boundary: spec.boundary,
        })
    }

    pub fn eval(&self, lambda: Complex64) -> CharValue {
        self.eval_momenta(&ChannelMomenta::new(lambda, self.field))
    }

    /// Evaluates with explicitly supplied momenta, which may sit on either branch.
    pub fn eval_momenta(&self, km: &ChannelMomenta) -> CharValue {
        let len = 2.0 * self.half_width;
        let tp = TrigPair::new(km.mu_plus, km.k_plus, len);
        let tm = TrigPair::new(km.mu_minus, km.k_minus, len);
        let (mp, mm) = (km.mu_plus, km.mu_minus);

        let [[p11, p12], [p21, p22]] = self.boundary.a_plus.m;
        let [[m11, m12], [m21, m22]] = self.boundary.a_minus.m;
        let dp = self.boundary.a_plus.det();
        let dm = self.boundary.a_minus.det();

        let g_cc = dp + dm - p11 * m22 - p22 * m11;
        let g_ss = dp * dm + p11 * m11 * mm + p22 * m22 * mp + mm * mp;
        let g_sc = -dp * m22 + p22 * dm + (m11 - p11) * mm;
        let g_cs = -dp * m11 + p11 * dm + (m22 - p22) * mp;
        let g_0 = p21 * m12 + p12 * m21;

        let terms = [
            g_cc * tm.c * tp.c,
            g_ss * tm.s * tp.s,
            g_sc * tm.s * tp.c,
            g_cs * tm.c * tp.s,
            g_0,
        ];
        let value = terms.iter().sum();

        // Magnitudes of the fully expanded terms, with each trigonometric factor
        // replaced by an envelope that never vanishes. Zeros of the individual
        // factors therefore do not shrink the noise scale.
        let (ecp, esp) = tp.envelopes(km.k_plus, len);
        let (ecm, esm) = tm.envelopes(km.k_minus, len);
        let n = |z: Complex64| z.norm();
        let mag_cc = n(dp) + n(dm) + n(p11 * m22) + n(p22 * m11);
        let mag_ss = n(dp * dm) + n(p11 * m11 * mm) + n(p22 * m22 * mp) + n(mm * mp);
        let mag_sc = n(dp * m22) + n(p22 * dm) + n((m11 - p11) * mm);
        let mag_cs = n(dp * m11) + n(p11 * dm) + n((m22 - p22) * mp);
        let scale = [
            mag_cc * ecm * ecp,
            mag_ss * esm * esp,
            mag_sc * esm * ecp,
            mag_cs * ecm * esp,
            n(p21 * m12) + n(p12 * m21),
        ]
        .into_iter()
        .fold(0.0, f64::max);

        let dg_ss = p11 * m11 + p22 * m22 + mm + mp;
        let dg_sc = m11 - p11;
        let dg_cs = m22 - p22;
        let derivative = g_cc * (tm.dc * tp.c + tm.c * tp.dc)
            + dg_ss * tm.s * tp.s
            + g_ss * (tm.ds * tp.s + tm.s * tp.ds)
            + dg_sc * tm.s * tp.c
            + g_sc * (tm.ds * tp.c + tm.s * tp.dc)
            + dg_cs * tm.c * tp.s
            + g_cs * (tm.dc * tp.s + tm.c * tp.ds);

        CharValue {
            value,
            derivative: Some(derivative),
            scale,
        }
    }
}

/// Evaluates the characteristic function and its derivative at `lambda`.
pub fn char_function(lambda: Complex64, spec: &ProblemSpec) -> Result<CharValue> {
    Ok(CharFunction::new(spec)?.eval(lambda))
}

/// The four boundary conditions applied to the basis
/// `(cos k+(x+a), 0), (sin k+(x+a)/k+, 0), (0, cos k-(x+a)), (0, sin k-(x+a)/k-)`.
/// Rows: left condition (two components), then right condition.
pub fn boundary_matrix_4x4(lambda: Complex64, spec: &ProblemSpec) -> Result<[[Complex64; 4]; 4]> {
    if spec.has_potential() {
        return Err(Error::PotentialPresent);
    }
    let km = ChannelMomenta::new(lambda, spec.field);
    let len = 2.0 * spec.half_width;
    let tp = TrigPair::new(km.mu_plus, km.k_plus, len);
    let tm = TrigPair::new(km.mu_minus, km.k_minus, len);
    let [[m11, m12], [m21, m22]] = spec.boundary.a_minus.m;
    let [[p11, p12], [p21, p22]] = spec.boundary.a_plus.m;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    Ok([
        [m11, one, m12, zero],
        [m21, zero, m22, one],
        [
            -km.mu_plus * tp.s + p11 * tp.c,
            tp.c + p11 * tp.s,
            p12 * tm.c,
            p12 * tm.s,
        ],
        [
            p21 * tp.c,
            p21 * tp.s,
            -km.mu_minus * tm.s + p22 * tm.c,
            tm.c + p22 * tm.s,
        ],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Complex2x2, DenseMatrix};
    use crate::model::families;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(a: f64, b: f64, pair: BoundaryPair) -> ProblemSpec {
        ProblemSpec::new(a, b, pair).unwrap()
    }

    fn det4(m: &[[Complex64; 4]; 4]) -> Complex64 {
        let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.to_vec()).collect();
        let d = DenseMatrix::from_rows(&rows);
        // cofactor expansion is fine at this size
        fn det(m: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Complex64 {
            if rows.len() == 1 {
                return m[(rows[0], cols[0])];
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &col) in cols.iter().enumerate() {
                let sub: Vec<usize> = cols.iter().copied().filter(|&j| j != col).collect();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * m[(rows[0], col)] * det(m, &rows[1..], &sub);
            }
            acc
        }
        det(&d, &[0, 1, 2, 3], &[0, 1, 2, 3])
    }

    #[test]
    fn neumann_zero_at_four() {
        let s = spec(FRAC_PI_4, 0.0, families::neumann());
        let v = char_function(c(4.0, 0.0), &s).unwrap();
        assert!(v.relative_residual() < 1e-14, "{v:?}");
    }

    #[test]
    fn decoupled_zero_at_alpha_squared_minus_b() {
        let s = spec(FRAC_PI_4, 0.4, families::scalar_imaginary(1.0, 0.0));
        let v = char_function(c(0.6, 0.0), &s).unwrap();
        assert!(v.relative_residual() < 1e-14, "{v:?}");
    }

    #[test]
    fn neumann_double_zero_at_origin() {
        let s = spec(FRAC_PI_4, 0.0, families::neumann());
        let l = 2.0 * FRAC_PI_4;
        for eps in [1e-3, 1e-4] {
            let v = char_function(c(eps, 0.0), &s).unwrap().value;
            assert!((v.re / (eps * eps * l * l) - 1.0).abs() < 1e-2);
        }
        assert_eq!(char_function(c(0.0, 0.0), &s).unwrap().value.norm(), 0.0);
    }

    #[test]
    fn hermitian_coupling_matches_closed_form() {
        let alpha = 1.0;
        let s = spec(FRAC_PI_4, 1.0, families::hermitian_coupling(alpha));
        let l = c(2.0, 1.0);
        let km = ChannelMomenta::new(l, 1.0);
        let (kp, kmn) = (km.k_plus, km.k_minus);
        let a = FRAC_PI_4;
        let a4 = alpha.powi(4);
        let expected = (2.0 * alpha * alpha * kp * kmn * (1.0 - (2.0 * a * kp).cos() * (2.0 * a * kmn).cos())
            + (kp * kp * kmn * kmn + a4) * (2.0 * a * kp).sin() * (2.0 * a * kmn).sin())
            / (kp * kmn);
        let got = char_function(l, &s).unwrap().value;
        assert!((got - expected).norm() < 1e-12 * expected.norm(), "{got} vs {expected}");
    }

    #[test]
    fn four_by_four_determinant_is_minus_char_function() {
        let pair = BoundaryPair::new(
            Complex2x2::new(c(0.3, -1.0), c(0.2, 0.5), c(-1.1, 0.0), c(0.0, 0.7)),
            Complex2x2::new(c(-0.4, 0.1), c(1.0, 1.0), c(0.0, -0.3), c(1.5, 0.0)),
        )
        .unwrap();
        let s = spec(0.8, -0.3, pair);
        for l in [c(1.0, 0.5), c(-2.0, 0.1), c(7.0, -1.0), c(0.3, 0.0)] {
            let f = char_function(l, &s).unwrap().value;
            let d = det4(&boundary_matrix_4x4(l, &s).unwrap());
            assert!((d + f).norm() < 1e-12 * (1.0 + f.norm()), "{d} vs {f}");
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_threshold() {
        let len = 1.3;
        for mu in [c(5.9e-3, 0.0), c(0.0, 5.9e-3), c(-4e-3, 4e-3)] {
            let mu = mu / (len * len);
            let s = TrigPair::series(mu, len);
            let k = principal_sqrt(mu);
            let cf = (k * len).cos();
            let sf = (k * len).sin() / k;
            let dsf = (len * cf - sf) / (2.0 * mu);
            assert!((s.c - cf).norm() < 1e-14);
            assert!((s.s - sf).norm() < 1e-14);
            assert!((s.ds - dsf).norm() < 1e-7 * dsf.norm());
        }
    }

    #[test]
    fn analytic_derivative_matches_finite_differences() {
        let s = spec(0.9, 0.35, families::symmetric_coupling(0.8));
        let f = CharFunction::new(&s).unwrap();
        for l in [c(2.0, 0.3), c(-0.5, -1.2), c(11.0, 0.0), c(0.35 + 1e-4, 0.0)] {
            let h = 1e-5;
            let fd = (f.eval(l + h).value - f.eval(l - h).value) / (2.0 * h);
            let an = f.eval(l).derivative.unwrap();
            assert!((fd - an).norm() < 1e-7 * (1.0 + an.norm()), "{l}: {fd} vs {an}");
        }
    }

    #[test]
    fn rejects_potential() {
        let s = spec(1.0, 0.0, families::neumann())
            .with_potential(crate::model::PiecewisePotential::square_barrier(-0.5, 0.5, 1.0).unwrap())
            .unwrap();
        assert_eq!(char_function(c(1.0, 0.0), &s), Err(Error::PotentialPresent));
    }
}
