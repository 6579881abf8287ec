//! Full-line scattering off a piecewise-constant potential supported in
//! `(-a, a)`, and perfect-transmission energies.
//!
//! A perfect-transmission energy (PTE) `l*` of a channel is a real energy
//! at which the reflection amplitude vanishes. Equivalently, the linear
//! problem with the energy-dependent boundary matrix
//! `A = diag(-i sqrt(al - b), -i sqrt(al + b))` at both ends has `l* = al`
//! among its eigenvalues. Two independent routes find them:
//!
//! - direct: substitute `l = al` and find real roots of the shooting
//!   determinant as a function of `al`;
//! - eigencurve: follow the eigenvalues `l_n(al)` of the linear problem and
//!   solve `l_n(al) = al` by the secant method.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{principal_sqrt, Complex2x2};
use crate::model::{BoundaryPair, Channel, ProblemSpec};
use crate::oracle;
use crate::secular::{CharValue, TrigPair};
use crate::spectra::contour::{find_zeros, FnAnalytic};
use crate::spectra::SearchRegion;

type C = Complex64;

/// RK4 steps used by the direct route.
pub const DIRECT_STEPS: usize = 8192;

const I: C = C::new(0.0, 1.0);

/// The same boundary matrix at both endpoints, built from the asymptotic
/// channel momenta at energy `alpha`. Below `|b|` the principal square root
/// is used; see [`below_threshold`].
pub fn energy_dependent_boundary(alpha: f64, field: f64) -> BoundaryPair {
    energy_boundary(C::new(alpha, 0.0), field)
}

/// Whether some channel momentum at energy `alpha` is not real and positive.
pub fn below_threshold(alpha: f64, field: f64) -> bool {
    alpha <= field.abs()
}

fn energy_boundary(alpha: C, field: f64) -> BoundaryPair {
    let m = Complex2x2::diagonal(-I * principal_sqrt(alpha - field), -I * principal_sqrt(alpha + field));
    BoundaryPair { a_plus: m, a_minus: m }
}

/// Exact propagator of `(psi, psi')` from `-a` to `a` in one channel, with
/// its derivative in the energy.
pub fn propagator(lambda: C, channel: Channel, spec: &ProblemSpec) -> (Complex2x2, Complex2x2) {
    let pieces = match &spec.potential {
        Some(p) => p.pieces_on(spec.half_width),
        None => vec![(-spec.half_width, spec.half_width, 0.0)],
    };
    let mut p = Complex2x2::identity();
    let mut dp = Complex2x2::zero();
    for (l, r, v) in pieces {
        let mu = lambda - channel.sign() * spec.field - v;
        let t = TrigPair::from_mu(mu, r - l);
        let step = Complex2x2::new(t.c, t.s, -mu * t.s, t.c);
        let d_step = Complex2x2::new(t.dc, t.ds, -t.s - mu * t.ds, t.dc);
        dp = d_step * p + step * dp;
        p = step * p;
    }
    (p, dp)
}

fn channel_momentum(lambda: C, channel: Channel, field: f64) -> C {
    principal_sqrt(lambda - channel.sign() * field)
}

/// Transfer matrix in the plane-wave basis: amplitudes `(A, B)` of
/// `A e^{ik(x - x0)} + B e^{-ik(x - x0)}` at `x0 = -a` map to those at
/// `x0 = a`. Its determinant is one.
pub fn transfer_matrix(lambda: C, channel: Channel, spec: &ProblemSpec) -> Result<Complex2x2> {
    let k = channel_momentum(lambda, channel, spec.field);
    if k.norm() <= 1e-12 * (1.0 + lambda.norm()) {
        return Err(Error::ChannelThreshold(lambda));
    }
    let (p, _) = propagator(lambda, channel, spec);
    let s = Complex2x2::new(C::new(1.0, 0.0), C::new(1.0, 0.0), I * k, -I * k);
    let s_inv = Complex2x2::new(I * k, C::new(1.0, 0.0), I * k, C::new(-1.0, 0.0)) * (1.0 / (2.0 * I * k));
    Ok(s_inv * p * s)
}

/// Transmission and reflection amplitudes for a wave incident from the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelScattering {
    pub channel: Channel,
    pub t: C,
    pub r: C,
}

pub fn transmission(lambda: C, channel: Channel, spec: &ProblemSpec) -> Result<ChannelScattering> {
    let k = channel_momentum(lambda, channel, spec.field);
    let (p, _) = propagator(lambda, channel, spec);
    let [[p11, p12], [p21, p22]] = p.m;
    let ika = I * k * spec.half_width;
    let u = (-ika).exp();
    let denom = I * k * (p11 + p22) - p21 + k * k * p12;
    if denom == C::new(0.0, 0.0) {
        return Err(Error::ChannelThreshold(lambda));
    }
    let v = -u * (I * k * (p11 - p22) - p21 - k * k * p12) / denom;
    Ok(ChannelScattering {
        channel,
        t: (p11 * (u + v) + I * k * p12 * (u - v)) * u,
        r: v * u,
    })
}

/// One perfect-transmission energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PteRecord {
    pub lambda_star: f64,
    pub channel: Channel,
    /// Position among the PTEs of the same channel, counted from below.
    pub branch: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PteSolution {
    /// No potential: every energy transmits perfectly.
    EveryEnergy,
    Energies(Vec<PteRecord>),
}

struct Scan {
    lo: f64,
    step: f64,
    alphas: Vec<f64>,
}

impl Scan {
    fn new(field: f64, lambda_max: f64) -> Self {
        let lo = field.abs();
        let step = 0.01 * (lambda_max - lo);
        Self {
            lo,
            step,
            alphas: (1..=100).map(|j| lo + step * j as f64).collect(),
        }
    }

    fn accepts(&self, alpha: C, tol: f64) -> bool {
        alpha.im.abs() < tol && alpha.re > self.lo && alpha.re <= self.lo + 100.0 * self.step + tol
    }
}

/// Direct-route function of one channel: reflection numerator at `l = al`
/// from RK4 shooting, as a fraction of its natural size.
fn direct_value(alpha: C, channel: Channel, spec: &ProblemSpec) -> Result<(C, f64)> {
    let s = oracle::shoot(alpha, &spec.with_boundary(energy_boundary(alpha, spec.field)), DIRECT_STEPS)?;
    let i = channel.index();
    Ok((s.terminal.m[i][i], s.scale))
}

fn direct_route(spec: &ProblemSpec, scan: &Scan, channel: Channel, tol: f64) -> Result<Option<Vec<f64>>> {
    let values: Vec<(C, f64)> = scan
        .alphas
        .iter()
        .map(|&a| direct_value(C::new(a, 0.0), channel, spec))
        .collect::<Result<_>>()?;
    if values.iter().all(|(v, s)| v.norm() <= 1e-8 * s) {
        return Ok(None);
    }
    let mag: Vec<f64> = values.iter().map(|(v, _)| v.norm()).collect();
    let mut found = Vec::new();
    for j in 0..mag.len() {
        let left = if j > 0 { mag[j - 1] } else { f64::INFINITY };
        let right = if j + 1 < mag.len() { mag[j + 1] } else { f64::INFINITY };
        if mag[j] > left || mag[j] > right {
            continue;
        }
        if let Some(root) = newton_alpha(C::new(scan.alphas[j], 0.0), scan.step, tol, |a| {
            Ok(direct_value(a, channel, spec)?.0)
        })? {
            if scan.accepts(root, tol) {
                push_unique(&mut found, root.re, 10.0 * tol);
            }
        }
    }
    found.sort_by(f64::total_cmp);
    Ok(Some(found))
}

/// Complex Newton iteration in `al` with a central-difference derivative.
/// Returns `None` if it leaves the neighbourhood of the start or stalls.
fn newton_alpha(start: C, reach: f64, tol: f64, f: impl Fn(C) -> Result<C>) -> Result<Option<C>> {
    let mut a = start;
    for _ in 0..60 {
        let d = 1e-6 * (1.0 + a.norm());
        let deriv = (f(a + d)? - f(a - d)?) / (2.0 * d);
        if deriv == C::new(0.0, 0.0) {
            return Ok(None);
        }
        let step = f(a)? / deriv;
        a -= step;
        if (a - start).norm() > 3.0 * reach {
            return Ok(None);
        }
        if step.norm() <= 1e-3 * tol {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

fn push_unique(list: &mut Vec<f64>, x: f64, radius: f64) {
    if list.iter().all(|&y| (y - x).abs() > radius) {
        list.push(x);
    }
}

/// Boundary-condition residual of the linear problem at energy `lambda`
/// with the boundary matrix frozen at energy `alpha`, computed with the
/// exact propagator, and its derivative in `lambda`.
fn eigencurve_value(lambda: C, alpha: C, channel: Channel, spec: &ProblemSpec) -> CharValue {
    let k = channel_momentum(alpha, channel, spec.field);
    let (p, dp) = propagator(lambda, channel, spec);
    let g = |m: &Complex2x2| m.m[1][0] + I * k * (m.m[1][1] - m.m[0][0]) + k * k * m.m[0][1];
    let scale = p.max_abs_entry() * (1.0 + k.norm()).powi(2);
    CharValue {
        value: g(&p),
        derivative: Some(g(&dp)),
        scale,
    }
}

/// Newton iteration for an eigenvalue of the linear problem with the
/// boundary frozen at `alpha`, started from `lambda`.
fn follow(lambda: C, alpha: C, channel: Channel, spec: &ProblemSpec) -> Option<C> {
    let mut z = lambda;
    for _ in 0..50 {
        let v = eigencurve_value(z, alpha, channel, spec);
        let d = v.derivative?;
        if d == C::new(0.0, 0.0) {
            return None;
        }
        let step = v.value / d;
        z -= step;
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    let v = eigencurve_value(z, alpha, channel, spec);
    (v.relative_residual() < 1e-10).then_some(z)
}

fn eigencurve_route(spec: &ProblemSpec, scan: &Scan, channel: Channel, tol: f64) -> Result<Vec<f64>> {
    let w = (4.0 * scan.step).max(0.5);
    let mut found = Vec::new();
    for &alpha in &scan.alphas {
        let a = C::new(alpha, 0.0);
        let f = FnAnalytic(|z: C| eigencurve_value(z, a, channel, spec));
        let mut zeros = None;
        for grow in [1.0, 1.071, 1.137, 1.213] {
            let r = SearchRegion::new(alpha - w * grow, alpha + w * grow, -w * grow, w * 1.03 * grow)?;
            if let Ok((_, z)) = find_zeros(&f, &r, 1e-9) {
                zeros = Some(z);
                break;
            }
        }
        let Some(zeros) = zeros else {
            return Err(Error::UnresolvedContour);
        };
        for zero in zeros {
            if let Some(root) = secant_fixed_point(a, zero.z, channel, spec, scan.step, 2.0 * w, tol) {
                if scan.accepts(root, tol) {
                    push_unique(&mut found, root.re, 10.0 * tol);
                }
            }
        }
    }
    found.sort_by(f64::total_cmp);
    Ok(found)
}

/// Solves `l_n(al) = al` by the secant method, continuing the eigenvalue
/// `lambda` of the linear problem at `alpha`. Steps are capped at `step` so the iteration cannot jump across a branch
/// point of the eigencurve, and it gives up beyond `reach` from the start.
fn secant_fixed_point(alpha: C, lambda: C, channel: Channel, spec: &ProblemSpec, step: f64, reach: f64, tol: f64) -> Option<C> {
    let limit = |a: C, from: C| {
        let d = a - from;
        if d.norm() > step {
            from + d * (step / d.norm())
        } else {
            a
        }
    };
    let mut a0 = alpha;
    let mut g0 = lambda - alpha;
    let mut a1 = alpha + 1e-3 * step;
    let mut l1 = follow(lambda, a1, channel, spec)?;
    for _ in 0..100 {
        let g1 = l1 - a1;
        if g1 == g0 {
            return (g1.norm() <= tol).then_some(a1);
        }
        let a2 = limit(a1 - g1 * (a1 - a0) / (g1 - g0), a1);
        if (a2 - alpha).norm() > reach {
            return None;
        }
        l1 = follow(l1, a2, channel, spec)?;
        (a0, g0, a1) = (a1, g1, a2);
        if (a1 - a0).norm() <= 1e-3 * tol {
            return Some(a1);
        }
    }
    None
}

/// Perfect-transmission energies of both channels in `(|b|, lambda_max]`.
/// Both routes must agree within `10 tol`, and the reflection amplitude at
/// every accepted energy must be below `10 tol`.
pub fn pte_solve(spec: &ProblemSpec, lambda_max: f64, tol: f64) -> Result<PteSolution> {
    if !(lambda_max > spec.field.abs()) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need lambda_max > |b| and tol > 0, got {lambda_max} and {tol}"
        )));
    }
    if !spec.has_potential() {
        return Ok(PteSolution::EveryEnergy);
    }
    let scan = Scan::new(spec.field, lambda_max);
    let mut records = Vec::new();
    for channel in Channel::BOTH {
        let Some(direct) = direct_route(spec, &scan, channel, tol)? else {
            return Ok(PteSolution::EveryEnergy);
        };
        let curve = eigencurve_route(spec, &scan, channel, tol)?;
        let agree = direct.len() == curve.len() && direct.iter().zip(&curve).all(|(d, c)| (d - c).abs() <= 10.0 * tol);
        if !agree {
            return Err(Error::RouteDisagreement {
                direct,
                eigencurve: curve,
            });
        }
        for (branch, &lambda) in direct.iter().enumerate() {
            let r = transmission(C::new(lambda, 0.0), channel, spec)?.r.norm();
            if r >= 10.0 * tol {
                return Err(Error::ReflectionNotVanishing { lambda, reflection: r });
            }
            let (v, scale) = direct_value(C::new(lambda, 0.0), channel, spec)?;
            records.push(PteRecord {
                lambda_star: lambda,
                channel,
                branch,
                residual: v.norm() / scale,
            });
        }
    }
    records.sort_by(|a, b| a.lambda_star.total_cmp(&b.lambda_star));
    Ok(PteSolution::Energies(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PiecewisePotential;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn barrier(a: f64, b: f64) -> ProblemSpec {
        let p = PiecewisePotential::square_barrier(-1.0, 1.0, 2.0).unwrap();
        ProblemSpec::new(a, b, energy_dependent_boundary(2.0, b))
            .unwrap()
            .with_potential(p)
            .unwrap()
    }

    #[test]
    fn boundary_entries() {
        let m = energy_dependent_boundary(1.4, 0.4).a_plus;
        assert!((m.m[0][0] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((m.m[1][1] - c(0.0, -(1.8f64).sqrt())).norm() < 1e-15);
        assert!(below_threshold(0.3, -0.4) && !below_threshold(0.5, 0.4));
    }

    #[test]
    fn free_transfer_is_propagation() {
        let spec = ProblemSpec::new(1.5, 0.2, energy_dependent_boundary(1.0, 0.2)).unwrap();
        let lambda = c(3.0, 0.4);
        let t = transfer_matrix(lambda, Channel::Minus, &spec).unwrap();
        let k = principal_sqrt(lambda + 0.2);
        assert!((t.m[0][0] - (I * k * 3.0).exp()).norm() < 1e-12);
        assert!((t.m[1][1] - (-I * k * 3.0).exp()).norm() < 1e-12);
        assert!(t.m[0][1].norm() < 1e-12 && t.m[1][0].norm() < 1e-12);
        let s = transmission(lambda, Channel::Minus, &spec).unwrap();
        assert!((s.t - 1.0).norm() < 1e-12 && s.r.norm() < 1e-12);
    }

    #[test]
    fn transfer_determinant_is_one() {
        let spec = barrier(2.0, 0.4);
        for z in [c(3.0, 0.0), c(0.7, 1.3), c(12.0, -2.0)] {
            let t = transfer_matrix(z, Channel::Plus, &spec).unwrap();
            assert!((t.det() - 1.0).norm() < 1e-10);
        }
        assert!(matches!(
            transfer_matrix(c(0.4, 0.0), Channel::Plus, &spec),
            Err(Error::ChannelThreshold(_))
        ));
    }

    #[test]
    fn barrier_resonance_is_reflectionless() {
        let spec = barrier(2.0, 0.4);
        let lambda = 2.4 + (PI / 2.0).powi(2);
        let s = transmission(c(lambda, 0.0), Channel::Plus, &spec).unwrap();
        assert!(s.r.norm() < 1e-12 && (s.t.norm() - 1.0).abs() < 1e-12);
        let off = transmission(c(7.0, 0.0), Channel::Plus, &spec).unwrap();
        assert!((off.t.norm_sqr() + off.r.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(off.r.norm() > 1e-3);
    }

    #[test]
    fn propagator_derivative() {
        let spec = barrier(2.0, 0.4);
        let z = c(3.3, 0.2);
        let h = 1e-6;
        let (_, dp) = propagator(z, Channel::Minus, &spec);
        let fd = (propagator(z + h, Channel::Minus, &spec).0 - propagator(z - h, Channel::Minus, &spec).0)
            * C::new(0.5 / h, 0.0);
        assert!((dp - fd).max_abs_entry() < 1e-7);
    }

    #[test]
    fn no_potential_means_every_energy() {
        let spec = ProblemSpec::new(2.0, 0.4, energy_dependent_boundary(2.0, 0.4)).unwrap();
        assert_eq!(pte_solve(&spec, 15.0, 1e-8).unwrap(), PteSolution::EveryEnergy);
    }
}
