//! Shooting on the two channel equations `-y'' + (V +/- b) y = l y` with
//! fixed-step RK4, independent of the closed-form characteristic function.
//!
//! Each channel carries its 2x2 fundamental matrix together with its
//! derivative in `l`. Both are renormalized as they grow and the common
//! magnitude is kept as a logarithm, so large `|Im l|` never overflows.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Complex2x2;
use crate::model::{Channel, ProblemSpec, SpinorGridFunction};
use crate::secular::CharValue;
use crate::spectra::contour::Analytic;

const RENORMALIZE_EVERY: usize = 32;
const MIN_STEPS: usize = 64;

type C = Complex64;

fn zero() -> C {
    C::new(0.0, 0.0)
}

/// One RK4 step of `u' = [[0, 1], [q, 0]] u` with constant `q`, and its
/// derivative with respect to `l` (where `dq/dl = -1`).
fn rk4_step(h: f64, q: C) -> (Complex2x2, Complex2x2) {
    let h2 = h * h;
    let alpha = 1.0 + 0.5 * h2 * q + h2 * h2 * q * q / 24.0;
    let beta = h + h2 * h * q / 6.0;
    let d_alpha = -(0.5 * h2 + h2 * h2 * q / 12.0);
    let d_beta = C::new(-h2 * h / 6.0, 0.0);
    let step = Complex2x2::new(alpha, beta, beta * q, alpha);
    let d_step = Complex2x2::new(d_alpha, d_beta, d_beta * q - beta, d_alpha);
    (step, d_step)
}

/// Calls `f(step, h, v)` for the pieces of the uniform grid of `steps`
/// intervals over `[-a, a]`; an interval that contains a potential
/// breakpoint is split there into sub-steps.
fn for_each_substep(spec: &ProblemSpec, steps: usize, mut f: impl FnMut(usize, f64, f64)) {
    let a = spec.half_width;
    let h = 2.0 * a / steps as f64;
    let cuts = spec.potential.as_ref().map_or(&[][..], |p| p.breakpoints());
    let mut next_cut = 0;
    for i in 0..steps {
        let mut l = -a + i as f64 * h;
        let r = if i + 1 == steps { a } else { -a + (i + 1) as f64 * h };
        while next_cut < cuts.len() && cuts[next_cut] <= l {
            next_cut += 1;
        }
        if next_cut == cuts.len() || cuts[next_cut] >= r {
            f(i, h, spec.potential_at(0.5 * (l + r)));
            continue;
        }
        while next_cut < cuts.len() && cuts[next_cut] < r {
            let x = cuts[next_cut];
            f(i, x - l, spec.potential_at(0.5 * (l + x)));
            l = x;
            next_cut += 1;
        }
        f(i, r - l, spec.potential_at(0.5 * (l + r)));
    }
}

/// Fundamental matrices of one channel, mapping `(y, y')` at `-a` to the
/// current point, with a shared log-scale.
#[derive(Debug, Clone, Copy)]
struct Transport {
    phi: Complex2x2,
    dphi: Complex2x2,
    log_scale: f64,
}

impl Transport {
    fn start() -> Self {
        Self {
            phi: Complex2x2::identity(),
            dphi: Complex2x2::zero(),
            log_scale: 0.0,
        }
    }

    fn advance(&mut self, h: f64, q: C) {
        let (r, dr) = rk4_step(h, q);
        self.dphi = dr * self.phi + r * self.dphi;
        self.phi = r * self.phi;
    }

    fn renormalize(&mut self) {
        let m = self.phi.max_abs_entry().max(self.dphi.max_abs_entry());
        if m > 0.0 && m.is_finite() {
            self.phi = self.phi * C::new(1.0 / m, 0.0);
            self.dphi = self.dphi * C::new(1.0 / m, 0.0);
            self.log_scale += m.ln();
        }
    }

    /// Applies `n` identical RK4 steps at once by binary powering.
    fn advance_many(&mut self, h: f64, q: C, mut n: usize) {
        let (r, dr) = rk4_step(h, q);
        let mut base = (r, dr, 0.0);
        let mut acc = (Complex2x2::identity(), Complex2x2::zero(), 0.0);
        while n > 0 {
            if n & 1 == 1 {
                acc = scaled_product(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = scaled_product(&base, &base);
            }
        }
        let (p, dp, log) = acc;
        self.dphi = dp * self.phi + p * self.dphi;
        self.phi = p * self.phi;
        self.log_scale += log;
        self.renormalize();
    }

    fn rescaled(&self, log_ref: f64) -> (Complex2x2, Complex2x2) {
        let f = C::new((self.log_scale - log_ref).exp(), 0.0);
        (self.phi * f, self.dphi * f)
    }
}

/// Product of two `(M, dM, log_scale)` triples, renormalized.
fn scaled_product(x: &(Complex2x2, Complex2x2, f64), y: &(Complex2x2, Complex2x2, f64)) -> (Complex2x2, Complex2x2, f64) {
    let m = x.0 * y.0;
    let dm = x.1 * y.0 + x.0 * y.1;
    let size = m.max_abs_entry().max(dm.max_abs_entry());
    if size > 0.0 && size.is_finite() {
        let f = C::new(1.0 / size, 0.0);
        (m * f, dm * f, x.2 + y.2 + size.ln())
    } else {
        (m, dm, x.2 + y.2)
    }
}

fn check_steps(steps: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidInput(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    Ok(())
}

/// Integrates both channels across the interval, calling `visit` after each
/// full grid step.
fn integrate(lambda: C, spec: &ProblemSpec, steps: usize, mut visit: impl FnMut(usize, &[Transport; 2])) -> [Transport; 2] {
    let mut tr = [Transport::start(), Transport::start()];
    let mut done = 0;
    for_each_substep(spec, steps, |i, h, v| {
        if i > done {
            finish_step(&mut tr, done, &mut visit);
            done = i;
        }
        for ch in Channel::BOTH {
            tr[ch.index()].advance(h, v + ch.sign() * spec.field - lambda);
        }
    });
    finish_step(&mut tr, done, &mut visit);
    tr
}

fn finish_step(tr: &mut [Transport; 2], step: usize, visit: &mut impl FnMut(usize, &[Transport; 2])) {
    if (step + 1) % RENORMALIZE_EVERY == 0 {
        tr.iter_mut().for_each(Transport::renormalize);
    }
    visit(step + 1, tr);
}

/// Terminal data of the shooting problem. True quantities are the mantissas
/// times `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingValue {
    /// Columns are `Psi_i'(a) + A+ Psi_i(a)` for the two solutions with
    /// `Psi_i(-a) = e_i`, `Psi_i'(-a) = -A- e_i`.
    pub terminal: Complex2x2,
    pub d_terminal: Complex2x2,
    pub log_scale: f64,
    /// Rough magnitude of the terms that make up the determinant.
    pub scale: f64,
}

impl ShootingValue {
    pub fn det_mantissa(&self) -> C {
        self.terminal.det()
    }

    pub fn det_derivative_mantissa(&self) -> C {
        let (t, d) = (&self.terminal.m, &self.d_terminal.m);
        d[0][0] * t[1][1] + t[0][0] * d[1][1] - d[0][1] * t[1][0] - t[0][1] * d[1][0]
    }

    /// The determinant itself; may overflow for very large `|Im l|`.
    pub fn determinant(&self) -> C {
        self.det_mantissa() * (2.0 * self.log_scale).exp()
    }
}

/// Applies the boundary operator at `+a` to solutions launched from `-a`.
fn terminal_of(tr: &[Transport; 2], spec: &ProblemSpec, log_ref: f64) -> (Complex2x2, Complex2x2, f64) {
    let ap = &spec.boundary.a_plus;
    let am = &spec.boundary.a_minus;
    let mut t = Complex2x2::zero();
    let mut dt = Complex2x2::zero();
    let mut values = [[zero(); 2]; 2];
    let mut dvalues = [[zero(); 2]; 2];
    let mut mag = 1.0;
    for c in 0..2 {
        let (phi, dphi) = tr[c].rescaled(log_ref);
        mag *= phi.max_abs_entry().max(1e-300);
        for i in 0..2 {
            let init = [if c == i { C::new(1.0, 0.0) } else { zero() }, -am.m[c][i]];
            let [y, dy] = phi.mul_vec(init);
            let [ey, edy] = dphi.mul_vec(init);
            values[c][i] = y;
            dvalues[c][i] = ey;
            t.m[c][i] = dy;
            dt.m[c][i] = edy;
        }
    }
    for c in 0..2 {
        for i in 0..2 {
            for d in 0..2 {
                t.m[c][i] += ap.m[c][d] * values[d][i];
                dt.m[c][i] += ap.m[c][d] * dvalues[d][i];
            }
        }
    }
    let scale = mag * (1.0 + ap.operator_norm()) * (1.0 + am.operator_norm());
    (t, dt, scale)
}

/// Terminal data of the RK4 shooting problem with `steps` uniform steps.
/// Runs of identical steps are applied as matrix powers, which gives the
/// same result as stepping one by one.
pub fn shoot(lambda: C, spec: &ProblemSpec, steps: usize) -> Result<ShootingValue> {
    check_steps(steps)?;
    let mut runs: Vec<(f64, f64, usize)> = Vec::new();
    for_each_substep(spec, steps, |_, h, v| match runs.last_mut() {
        Some(last) if last.0 == h && last.1 == v => last.2 += 1,
        _ => runs.push((h, v, 1)),
    });
    let mut tr = [Transport::start(), Transport::start()];
    for ch in Channel::BOTH {
        let t = &mut tr[ch.index()];
        for &(h, v, n) in &runs {
            t.advance_many(h, v + ch.sign() * spec.field - lambda, n);
        }
    }
    let log_ref = tr[0].log_scale.max(tr[1].log_scale);
    let (terminal, d_terminal, scale) = terminal_of(&tr, spec, log_ref);
    Ok(ShootingValue {
        terminal,
        d_terminal,
        log_scale: log_ref,
        scale,
    })
}

/// Determinant of the terminal matrix; it vanishes exactly on the spectrum
/// of the discretized problem. With no potential it reproduces the
/// regularized characteristic function.
pub fn shooting_determinant(lambda: C, spec: &ProblemSpec, steps: usize) -> Result<C> {
    Ok(shoot(lambda, spec, steps)?.determinant())
}

/// The shooting determinant as an analytic function for the contour
/// machinery (phase and logarithmic derivative are exact in the mantissa).
#[derive(Debug, Clone)]
pub struct ShootingFunction {
    spec: ProblemSpec,
    steps: usize,
}

impl ShootingFunction {
    pub fn new(spec: &ProblemSpec, steps: usize) -> Result<Self> {
        check_steps(steps)?;
        Ok(Self {
            spec: spec.clone(),
            steps,
        })
    }
}

impl Analytic for ShootingFunction {
    fn eval(&self, z: C) -> CharValue {
        let s = shoot(z, &self.spec, self.steps).expect("step count checked at construction");
        CharValue {
            value: s.det_mantissa(),
            derivative: Some(s.det_derivative_mantissa()),
            scale: s.scale,
        }
    }
}

/// Newton iteration on the shooting determinant.
pub fn shooting_root(start: C, spec: &ProblemSpec, steps: usize, tol: f64) -> Result<C> {
    let mut z = start;
    for _ in 0..50 {
        let s = shoot(z, spec, steps)?;
        let d = s.det_derivative_mantissa();
        if d == zero() {
            break;
        }
        let dz = s.det_mantissa() / d;
        z -= dz;
        if dz.norm() <= tol * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    Err(Error::NotAnEigenvalue { lambda: start })
}

/// An eigenfunction sampled on the uniform shooting grid, with its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenmode {
    pub lambda: C,
    pub function: SpinorGridFunction,
    pub derivative: SpinorGridFunction,
}

impl Eigenmode {
    /// Largest violation of `Psi' + A Psi = 0` over both endpoints,
    /// relative to the largest sample.
    pub fn boundary_residual(&self, spec: &ProblemSpec) -> f64 {
        let f = self.function.values();
        let d = self.derivative.values();
        let n = f.len() - 1;
        let left = spec.boundary.a_minus.mul_vec(f[0]);
        let right = spec.boundary.a_plus.mul_vec(f[n]);
        let worst = (0..2)
            .map(|c| (d[0][c] + left[c]).norm().max((d[n][c] + right[c]).norm()))
            .fold(0.0, f64::max);
        worst / self.function.max_abs()
    }
}

/// A basis of eigenfunctions at `lambda`, each of unit discrete norm. The
/// basis has two elements when the terminal matrix vanishes.
pub fn eigenfunctions(lambda: C, spec: &ProblemSpec, steps: usize) -> Result<Vec<Eigenmode>> {
    check_steps(steps)?;
    let mut nodes: Vec<[Transport; 2]> = Vec::with_capacity(steps + 1);
    nodes.push([Transport::start(), Transport::start()]);
    let tr = integrate(lambda, spec, steps, |_, t| nodes.push(*t));
    let log_ref = tr[0].log_scale.max(tr[1].log_scale);
    let (terminal, _, scale) = terminal_of(&tr, spec, log_ref);

    let kernel = kernel_2x2(&terminal, 1e-6 * scale);
    if kernel.is_empty() {
        return Err(Error::NotAnEigenvalue { lambda });
    }
    let node_ref = nodes
        .iter()
        .flat_map(|n| n.iter().map(|t| t.log_scale))
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = SpinorGridFunction::uniform_grid(spec.half_width, steps + 1);
    let am = &spec.boundary.a_minus;

    kernel
        .into_iter()
        .map(|v| {
            let init = am.mul_vec(v);
            let mut vals = Vec::with_capacity(steps + 1);
            let mut ders = Vec::with_capacity(steps + 1);
            for node in &nodes {
                let mut y = [zero(); 2];
                let mut dy = [zero(); 2];
                for c in 0..2 {
                    let (phi, _) = node[c].rescaled(node_ref);
                    let [a, b] = phi.mul_vec([v[c], -init[c]]);
                    y[c] = a;
                    dy[c] = b;
                }
                vals.push(y);
                ders.push(dy);
            }
            let function = SpinorGridFunction::new(grid.clone(), vals)?;
            let norm = function.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::NotAnEigenvalue { lambda });
            }
            let inv = C::new(1.0 / norm, 0.0);
            Ok(Eigenmode {
                lambda,
                function: function.map_values(|_, [a, b]| [a * inv, b * inv]),
                derivative: SpinorGridFunction::new(grid.clone(), ders)?
                    .map_values(|_, [a, b]| [a * inv, b * inv]),
            })
        })
        .collect()
}

/// Orthonormal basis of the numerical kernel of a 2x2 matrix.
fn kernel_2x2(t: &Complex2x2, threshold: f64) -> Vec<[C; 2]> {
    let (hi, lo) = t.singular_values();
    if hi <= threshold {
        return vec![[C::new(1.0, 0.0), zero()], [zero(), C::new(1.0, 0.0)]];
    }
    if lo > threshold {
        return Vec::new();
    }
    // the null vector is orthogonal to the conjugate of the dominant row
    let m = &t.m;
    let row = if m[0][0].norm_sqr() + m[0][1].norm_sqr() >= m[1][0].norm_sqr() + m[1][1].norm_sqr() {
        m[0]
    } else {
        m[1]
    };
    let v = [-row[1], row[0]];
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    vec![[v[0] / n, v[1] / n]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{families, PiecewisePotential};
    use crate::secular::char_function;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn matches_characteristic_function_without_potential() {
        let spec = ProblemSpec::new(FRAC_PI_4, 1.0, families::hermitian_coupling(1.0)).unwrap();
        for z in [c(2.0, 1.0), c(-0.5, 0.2), c(7.0, -2.0)] {
            let d = shooting_determinant(z, &spec, 4096).unwrap();
            let f = char_function(z, &spec).unwrap();
            assert!((d - f.value).norm() < 1e-9 * f.scale, "{z}: {d} vs {}", f.value);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let spec = ProblemSpec::new(1.1, 0.3, families::symmetric_coupling(0.7)).unwrap();
        let z = c(3.0, 0.5);
        let h = 1e-5;
        let s = shoot(z, &spec, 512).unwrap();
        let fd = (shooting_determinant(z + h, &spec, 512).unwrap() - shooting_determinant(z - h, &spec, 512).unwrap())
            / (2.0 * h);
        let d = s.det_derivative_mantissa() * (2.0 * s.log_scale).exp();
        assert!((d - fd).norm() < 1e-6 * (1.0 + d.norm()));
    }

    #[test]
    fn known_eigenvalue_is_a_root() {
        let spec = ProblemSpec::new(FRAC_PI_4, 0.4, families::scalar_imaginary(1.0, 0.0)).unwrap();
        assert!(shooting_determinant(c(0.6, 0.0), &spec, 4096).unwrap().norm() < 1e-8);
        let n = ProblemSpec::new(FRAC_PI_4, 0.0, families::neumann()).unwrap();
        assert!(shooting_determinant(c(5.0, 0.0), &n, 4096).unwrap().norm() > 1e-3);
    }

    #[test]
    fn large_imaginary_part_is_finite_in_mantissa() {
        let spec = ProblemSpec::new(2.0, 0.0, families::neumann()).unwrap();
        let s = shoot(c(0.0, 4000.0), &spec, 256).unwrap();
        assert!(s.det_mantissa().is_finite() && s.log_scale > 10.0);
    }

    #[test]
    fn fourth_order_convergence() {
        let p = PiecewisePotential::square_barrier(-0.5, 0.3, 1.5).unwrap();
        let spec = ProblemSpec::new(1.0, 0.2, families::scalar_imaginary(0.5, 0.5))
            .unwrap()
            .with_potential(p)
            .unwrap();
        let z = c(4.3, 0.0);
        let reference = shooting_determinant(z, &spec, 1 << 14).unwrap();
        let e1 = (shooting_determinant(z, &spec, 128).unwrap() - reference).norm();
        let e2 = (shooting_determinant(z, &spec, 256).unwrap() - reference).norm();
        let ratio = e1 / e2;
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn neumann_ground_state_is_constant() {
        let spec = ProblemSpec::new(FRAC_PI_4, 0.0, families::neumann()).unwrap();
        let modes = eigenfunctions(c(0.0, 0.0), &spec, 256).unwrap();
        assert_eq!(modes.len(), 2);
        for m in &modes {
            let v = m.function.values();
            for c in 0..2 {
                assert!(v.iter().all(|x| (x[c] - v[0][c]).norm() < 1e-12));
            }
            assert!((m.function.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_eigenvalue() {
        let spec = ProblemSpec::new(FRAC_PI_4, 0.0, families::neumann()).unwrap();
        assert!(matches!(
            eigenfunctions(c(1.0, 0.0), &spec, 256),
            Err(Error::NotAnEigenvalue { .. })
        ));
        assert!(shoot(c(1.0, 0.0), &spec, 10).is_err());
    }
}
