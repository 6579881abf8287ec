//! Eigenvalue location: winding numbers, region search with multiplicities,
//! the spectral enclosure and parameter sweeps.

pub mod contour;
pub mod enclosure;
pub mod sweep;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, DenseMatrix};
use crate::model::ProblemSpec;
use crate::secular::{boundary_matrix_4x4, CharFunction};

pub use enclosure::{enclosure, resolvent_bound, EnclosureRegion, ResolventBound};
pub use sweep::{sweep, Branch, EventKind, SweepEvent, SweepResult};

/// Axis-aligned rectangle in the spectral plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let finite = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite());
        if !finite || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidInput(format!(
                "degenerate search region [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.width().hypot(self.height())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Corners in counter-clockwise order.
    pub fn vertices(&self) -> Vec<Complex64> {
        vec![
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Grows every edge outward by a small deterministic amount that
    /// depends on `attempt`. A region symmetric about the real axis stays
    /// symmetric.
    pub fn jittered(&self, attempt: u32) -> Self {
        let base = 1e-4 * (1.0 + self.width().max(self.height()));
        let k = [1.0, 2.7, 6.1, 11.3][(attempt as usize).min(3)];
        let d = base * k;
        let symmetric = (self.im_min + self.im_max).abs() <= 1e-12 * self.height();
        Self {
            re_min: self.re_min - 0.61 * d,
            re_max: self.re_max + 0.83 * d,
            im_min: self.im_min - if symmetric { d } else { 0.37 * d },
            im_max: self.im_max + d,
        }
    }
}

/// An eigenvalue with its multiplicities and relative residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub lambda: Complex64,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
    pub residual: f64,
}

/// Number of eigenvalues inside `region`, counted with algebraic multiplicity.
pub fn winding_number(region: &SearchRegion, spec: &ProblemSpec) -> Result<i64> {
    contour::rect_winding(&CharFunction::new(spec)?, region)
}

/// Eigenvalue count inside a circle.
pub fn circle_winding_number(center: Complex64, radius: f64, spec: &ProblemSpec) -> Result<i64> {
    contour::circle_winding(&CharFunction::new(spec)?, center, radius)
}

/// Dimension of the eigenspace at `lambda`: the numerical nullity of the
/// 4x4 boundary matrix, clamped to `1..=2`.
pub fn geometric_multiplicity(lambda: Complex64, spec: &ProblemSpec) -> Result<usize> {
    let m = boundary_matrix_4x4(lambda, spec)?;
    let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.to_vec()).collect();
    let sv = singular_values(&DenseMatrix::from_rows(&rows));
    let thr = f64::EPSILON.sqrt() * sv[0];
    Ok(sv.iter().filter(|&&s| s < thr).count().clamp(1, 2))
}

/// All eigenvalues in `region` (intersected with the enclosure), sorted by
/// real then imaginary part.
pub fn find_eigenvalues(spec: &ProblemSpec, region: &SearchRegion, tol: f64) -> Result<Vec<Eigenvalue>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let f = CharFunction::new(spec)?;
    let Some(clipped) = enclosure(spec).clip(region) else {
        return Ok(Vec::new());
    };

    let mut last_err = Error::UnresolvedContour;
    for attempt in 0..4 {
        let r = if attempt == 0 { clipped } else { clipped.jittered(attempt - 1) };
        match contour::find_zeros(&f, &r, 10.0 * tol) {
            Ok((total, zeros)) => return finish(&f, spec, total, zeros),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn finish(f: &CharFunction, spec: &ProblemSpec, total: i64, zeros: Vec<contour::Zero>) -> Result<Vec<Eigenvalue>> {
    let mut out = Vec::with_capacity(zeros.len());
    for (i, zero) in zeros.iter().enumerate() {
        let nearest = zeros
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, o)| (o.z - zero.z).norm())
            .fold(f64::INFINITY, f64::min);
        let rho = (0.4 * nearest).min(1e-3 * (1.0 + zero.z.norm())).min(zero.cell_radius);
        let alg = contour::circle_winding(f, zero.z, rho)
            .ok()
            .filter(|&w| w > 0)
            .map_or(zero.order, |w| w as usize);
        let geom = geometric_multiplicity(zero.z, spec)?.min(alg);
        out.push(Eigenvalue {
            lambda: zero.z,
            algebraic_mult: alg,
            geometric_mult: geom,
            residual: f.eval(zero.z).relative_residual(),
        });
    }
    let found: i64 = out.iter().map(|e| e.algebraic_mult as i64).sum();
    if found != total {
        return Err(Error::CountMismatch { expected: total, found });
    }
    out.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::families;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn region(a: f64, b: f64, c0: f64, d: f64) -> SearchRegion {
        SearchRegion::new(a, b, c0, d).unwrap()
    }

    #[test]
    fn windings_of_small_contours() {
        let s = ProblemSpec::new(FRAC_PI_4, 0.4, families::scalar_imaginary(1.0, 0.0)).unwrap();
        assert_eq!(circle_winding_number(c(0.6, 0.0), 0.01, &s).unwrap(), 1);
        let n = ProblemSpec::new(FRAC_PI_4, 0.0, families::neumann()).unwrap();
        assert_eq!(circle_winding_number(c(0.0, 0.0), 0.01, &n).unwrap(), 2);
        assert_eq!(winding_number(&region(10.0, 11.0, -0.1, 0.1), &n).unwrap(), 0);
    }

    #[test]
    fn scalar_family_spectrum() {
        let s = ProblemSpec::new(FRAC_PI_4, 0.4, families::scalar_imaginary(1.0, 0.0)).unwrap();
        let ev = find_eigenvalues(&s, &region(-1.0, 9.0, -1.0, 1.0), 1e-10).unwrap();
        let want = [0.6, 1.4, 3.6, 4.4];
        assert_eq!(ev.len(), 4, "{ev:?}");
        for (e, w) in ev.iter().zip(want) {
            assert!((e.lambda - w).norm() < 1e-9, "{e:?}");
            assert_eq!((e.algebraic_mult, e.geometric_mult), (1, 1));
        }
    }

    #[test]
    fn neumann_shifted_spectrum() {
        let s = ProblemSpec::new(FRAC_PI_4, 1.0, families::neumann()).unwrap();
        let ev = find_eigenvalues(&s, &region(-2.0, 6.0, -1.0, 1.0), 1e-10).unwrap();
        let got: Vec<f64> = ev.iter().map(|e| e.lambda.re).collect();
        assert_eq!(got.len(), 4, "{ev:?}");
        for (g, w) in got.iter().zip([-1.0, 1.0, 3.0, 5.0]) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn jitter_keeps_symmetry() {
        let r = region(-1.0, 2.0, -0.5, 0.5).jittered(2);
        assert!((r.im_min + r.im_max).abs() < 1e-15);
        assert!(r.re_min < -1.0 && r.re_max > 2.0);
    }
}
