//! Parity `P`, time reversal `T` and complex conjugation `K` on spinors and
//! on boundary matrices, plus the boundary-level symmetry classification.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Complex2x2;
use crate::model::{BoundaryPair, SpinorGridFunction};

pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;

/// `(P psi)(x) = psi(-x)`. The grid must be symmetric about the origin.
pub fn apply_parity(f: &SpinorGridFunction) -> Result<SpinorGridFunction> {
    let g = f.grid();
    let n = g.len();
    let scale = g[n - 1].abs().max(g[0].abs());
    if (0..n).any(|i| (g[i] + g[n - 1 - i]).abs() > 1e-12 * scale) {
        return Err(Error::AsymmetricGrid);
    }
    let vals = f.values();
    Ok(f.map_values(|i, _| vals[n - 1 - i]))
}

/// `(T psi) = (conj psi_-, -conj psi_+)`; `T^2 = -1`.
pub fn apply_time_reversal(f: &SpinorGridFunction) -> SpinorGridFunction {
    f.map_values(|_, [p, m]| [m.conj(), -p.conj()])
}

pub fn apply_conjugation(f: &SpinorGridFunction) -> SpinorGridFunction {
    f.map_values(|_, [p, m]| [p.conj(), m.conj()])
}

/// `T M T = [[-conj m22, conj m21], [conj m12, -conj m11]]`.
pub fn t_conjugate(m: &Complex2x2) -> Complex2x2 {
    let [[m11, m12], [m21, m22]] = m.m;
    Complex2x2::new(-m22.conj(), m21.conj(), m12.conj(), -m11.conj())
}

/// Replaces both matrices by their conjugate transposes.
pub fn adjoint_boundary(b: &BoundaryPair) -> BoundaryPair {
    BoundaryPair {
        a_plus: b.a_plus.adjoint(),
        a_minus: b.a_minus.adjoint(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub self_adjoint: bool,
    pub pt_symmetric: bool,
    pub pk_symmetric: bool,
    pub p_self_adjoint: bool,
    pub t_self_adjoint: bool,
    pub k_self_adjoint: bool,
    pub tolerance: f64,
}

impl SymmetryReport {
    /// `(name, value)` pairs in a fixed order.
    pub fn flags(&self) -> [(&'static str, bool); 6] {
        [
            ("self_adjoint", self.self_adjoint),
            ("pt_symmetric", self.pt_symmetric),
            ("pk_symmetric", self.pk_symmetric),
            ("p_self_adjoint", self.p_self_adjoint),
            ("t_self_adjoint", self.t_self_adjoint),
            ("k_self_adjoint", self.k_self_adjoint),
        ]
    }
}

/// Entrywise classification of the boundary data. `tol` is relative to the
/// largest entry modulus of the pair.
pub fn classify(b: &BoundaryPair, tol: f64) -> SymmetryReport {
    let thr = tol * b.max_abs_entry();
    let (p, m) = (&b.a_plus, &b.a_minus);
    let zero = Complex64::new(0.0, 0.0);
    let scalar = |a: &Complex2x2| {
        a.approx_eq(&Complex2x2::new(a.m[0][0], zero, zero, a.m[0][0]), thr)
            && (a.m[1][1] - a.m[0][0]).norm() <= thr
    };

    SymmetryReport {
        self_adjoint: p.approx_eq(&p.adjoint(), thr) && m.approx_eq(&m.adjoint(), thr),
        pt_symmetric: m.approx_eq(&t_conjugate(p), thr),
        pk_symmetric: m.approx_eq(&-p.conj(), thr),
        p_self_adjoint: m.approx_eq(&-p.adjoint(), thr),
        t_self_adjoint: scalar(p) && scalar(m),
        k_self_adjoint: p.approx_eq(&p.transpose(), thr) && m.approx_eq(&m.transpose(), thr),
        tolerance: tol,
    }
}
