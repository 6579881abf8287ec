//! Zeros of analytic functions in rectangles by the argument principle.
//!
//! The phase of `f` is tracked along polylines with adaptive bisection of
//! segments. Cells with a small zero count are resolved from power-sum
//! moments on a circumscribed circle; larger counts are subdivided.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::SearchRegion;
use crate::error::{Error, Result};
use crate::secular::{CharFunction, CharValue};

/// An analytic function with a noise scale for relative residuals.
pub trait Analytic: Sync {
    fn eval(&self, z: Complex64) -> CharValue;
}

impl Analytic for CharFunction {
    fn eval(&self, z: Complex64) -> CharValue {
        CharFunction::eval(self, z)
    }
}

/// Adapts a closure to [`Analytic`].
pub struct FnAnalytic<F>(pub F);

impl<F: Fn(Complex64) -> CharValue + Sync> Analytic for FnAnalytic<F> {
    fn eval(&self, z: Complex64) -> CharValue {
        (self.0)(z)
    }
}

const POINTS_PER_UNIT: f64 = 64.0;
const MIN_POINTS_PER_EDGE: usize = 4;
const MAX_DEPTH: u32 = 14;
const ACCEPT_PHASE: f64 = PI / 3.0;
const ZERO_FLOOR: f64 = 1e-14;
const MAX_MOMENT_ORDER: i64 = 4;
const CIRCLE_VERTICES: usize = 64;
const NOISE: f64 = 1e-10;
const SPLIT_FRACTIONS: [(f64, f64); 4] = [
    (0.5123, 0.4629),
    (0.4629, 0.5619),
    (0.5619, 0.4123),
    (0.4123, 0.5377),
];

/// Derivative from the value if available, else from an 8-point circle rule.
pub(crate) fn derivative_at<F: Analytic + ?Sized>(f: &F, z: Complex64, v: &CharValue) -> Complex64 {
    if let Some(d) = v.derivative {
        return d;
    }
    let h = 1e-3 * (1.0 + z.norm());
    let n = 8;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        acc += f.eval(z + h * w).value / w;
    }
    acc / (n as f64 * h)
}

fn sample<F: Analytic + ?Sized>(f: &F, z: Complex64) -> Result<Complex64> {
    let v = f.eval(z);
    let x = v.value;
    if !(x.re.is_finite() && x.im.is_finite()) || x.norm() <= ZERO_FLOOR * v.scale || x.norm() == 0.0 {
        return Err(Error::UnresolvedContour);
    }
    Ok(x)
}

fn segment_phase<F: Analytic + ?Sized>(
    f: &F,
    (z0, f0): (Complex64, Complex64),
    (z1, f1): (Complex64, Complex64),
    depth: u32,
) -> Result<f64> {
    let zm = 0.5 * (z0 + z1);
    let fm = sample(f, zm)?;
    let d1 = (fm / f0).arg();
    let d2 = (f1 / fm).arg();
    if d1.abs() < ACCEPT_PHASE && d2.abs() < ACCEPT_PHASE {
        return Ok(d1 + d2);
    }
    if depth == 0 {
        return Err(Error::UnresolvedContour);
    }
    Ok(segment_phase(f, (z0, f0), (zm, fm), depth - 1)? + segment_phase(f, (zm, fm), (z1, f1), depth - 1)?)
}

/// Total change of `arg f` around the closed polygon.
fn polygon_phase<F: Analytic + ?Sized>(f: &F, vertices: &[Complex64]) -> Result<f64> {
    let mut total = 0.0;
    let n = vertices.len();
    for e in 0..n {
        let (a, b) = (vertices[e], vertices[(e + 1) % n]);
        let pts = ((b - a).norm() * POINTS_PER_UNIT).ceil().max(MIN_POINTS_PER_EDGE as f64) as usize;
        let mut prev = (a, sample(f, a)?);
        for j in 1..=pts {
            let z = a + (b - a) * (j as f64 / pts as f64);
            let cur = (z, sample(f, z)?);
            total += segment_phase(f, prev, cur, MAX_DEPTH)?;
            prev = cur;
        }
    }
    Ok(total)
}

/// Winding number of `f` around a counter-clockwise polygon.
pub fn polygon_winding<F: Analytic + ?Sized>(f: &F, vertices: &[Complex64]) -> Result<i64> {
    let turns = polygon_phase(f, vertices)? / (2.0 * PI);
    let w = turns.round();
    if (turns - w).abs() > 0.25 {
        return Err(Error::UnresolvedContour);
    }
    Ok(w as i64)
}

pub fn rect_winding<F: Analytic + ?Sized>(f: &F, r: &SearchRegion) -> Result<i64> {
    polygon_winding(f, &r.vertices())
}

pub(crate) fn circle_vertices(center: Complex64, radius: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| center + Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// Zero count inside a circle, approximated by an inscribed regular 32-gon.
pub fn circle_winding<F: Analytic + ?Sized>(f: &F, center: Complex64, radius: f64) -> Result<i64> {
    polygon_winding(f, &circle_vertices(center, radius, 32))
}

/// A located zero (or an unresolved cluster of zeros) with its order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub z: Complex64,
    pub order: usize,
    /// Radius of the circle the zero was resolved on.
    pub cell_radius: f64,
}

/// Newton iteration restricted to a disc of radius `radius` around `z0`.
pub fn newton_polish<F: Analytic + ?Sized>(f: &F, z0: Complex64, radius: f64) -> Option<Complex64> {
    let mut z = z0;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let v = f.eval(z);
        if v.value.norm() == 0.0 {
            return Some(z);
        }
        let d = derivative_at(f, z, &v);
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            return None;
        }
        let step = v.value / d;
        z -= step;
        if (z - z0).norm() > radius || !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        last = step.norm();
        if last <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    (last < 1e-9 * (1.0 + z.norm())).then_some(z)
}

/// All zeros in `region` with the total winding of its boundary.
pub fn find_zeros<F: Analytic + ?Sized>(f: &F, region: &SearchRegion, min_cell: f64) -> Result<(i64, Vec<Zero>)> {
    let w = rect_winding(f, region)?;
    let zeros = resolve(f, region, w, min_cell)?;
    Ok((w, zeros))
}

fn resolve<F: Analytic + ?Sized>(f: &F, rect: &SearchRegion, w: i64, min_cell: f64) -> Result<Vec<Zero>> {
    if w == 0 {
        return Ok(Vec::new());
    }
    if w < 0 {
        return Err(Error::UnresolvedContour);
    }
    let diameter = 2.0 * rect.half_diagonal();
    if w <= MAX_MOMENT_ORDER {
        if let Some(zs) = moment_zeros(f, rect, w, diameter > min_cell) {
            return Ok(zs);
        }
    }
    if diameter < min_cell {
        return Ok(vec![Zero {
            z: rect.center(),
            order: w as usize,
            cell_radius: rect.half_diagonal(),
        }]);
    }
    let children = match split(f, rect, w) {
        Ok(c) => c,
        // the function is at its noise floor around the whole cell
        Err(_) if diameter < 1e-6 * (1.0 + rect.center().norm()) => {
            return Ok(vec![Zero {
                z: rect.center(),
                order: w as usize,
                cell_radius: rect.half_diagonal(),
            }]);
        }
        Err(e) => return Err(e),
    };
    let parts = children
        .par_iter()
        .map(|(r, cw)| resolve(f, r, *cw, min_cell))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn split<F: Analytic + ?Sized>(f: &F, rect: &SearchRegion, w: i64) -> Result<Vec<(SearchRegion, i64)>> {
    let (wd, ht) = (rect.width(), rect.height());
    for &(fx, fy) in &SPLIT_FRACTIONS {
        let xs = rect.re_min + fx * wd;
        let ys = rect.im_min + fy * ht;
        let cells: Vec<SearchRegion> = if wd > 2.0 * ht {
            vec![
                SearchRegion { re_max: xs, ..*rect },
                SearchRegion { re_min: xs, ..*rect },
            ]
        } else if ht > 2.0 * wd {
            vec![
                SearchRegion { im_max: ys, ..*rect },
                SearchRegion { im_min: ys, ..*rect },
            ]
        } else {
            vec![
                SearchRegion { re_max: xs, im_max: ys, ..*rect },
                SearchRegion { re_min: xs, im_max: ys, ..*rect },
                SearchRegion { re_max: xs, im_min: ys, ..*rect },
                SearchRegion { re_min: xs, im_min: ys, ..*rect },
            ]
        };
        let windings: Result<Vec<i64>> = cells.par_iter().map(|c| rect_winding(f, c)).collect();
        if let Ok(ws) = windings {
            if ws.iter().sum::<i64>() == w {
                return Ok(cells.into_iter().zip(ws).collect());
            }
        }
    }
    Err(Error::UnresolvedContour)
}

/// Resolves a cell with `w` zeros from moments on its circumscribed circle.
/// Returns `None` when the cell should be subdivided instead.
fn moment_zeros<F: Analytic + ?Sized>(f: &F, rect: &SearchRegion, w: i64, can_split: bool) -> Option<Vec<Zero>> {
    let center = rect.center();
    let radius = rect.half_diagonal() / (PI / CIRCLE_VERTICES as f64).cos() * 1.02;
    let wc = polygon_winding(f, &circle_vertices(center, radius, CIRCLE_VERTICES)).ok()?;
    if wc != w {
        return None;
    }
    let order = w as usize;
    let sums = power_sums(f, center, radius, order)?;
    let (sums, noise) = sums;
    if (sums[0] - w as f64).norm() > 1e-6 + noise {
        return None;
    }
    let coef = monic_from_power_sums(&sums[1..]);
    let roots = polynomial_roots(&coef)?;
    let groups = group_roots(&roots);

    let mut zeros = Vec::with_capacity(groups.len());
    for g in &groups {
        let mean: Complex64 = g.iter().map(|&i| roots[i]).sum::<Complex64>() / g.len() as f64;
        let u = cluster_center(&coef, mean, g.len());
        let estimate = center + radius * u;
        let z = if g.len() == 1 {
            let z = newton_polish(f, estimate, radius)?;
            if (z - center).norm() >= radius {
                return None;
            }
            z
        } else {
            estimate
        };
        zeros.push(Zero {
            z,
            order: g.len(),
            cell_radius: radius,
        });
    }

    if can_split {
        for i in 0..zeros.len() {
            for j in i + 1..zeros.len() {
                if (zeros[i].z - zeros[j].z).norm() < 0.05 * radius {
                    return None;
                }
            }
        }
    }
    Some(zeros)
}

/// Normalized moments `t_p = (1/2 pi i) oint f'/f ((z - c)/R)^p dz`, `p = 0..=order`,
/// by the trapezoid rule with doubling until stable. Also returns an
/// estimate of the evaluation noise carried into the moments.
fn power_sums<F: Analytic + ?Sized>(f: &F, center: Complex64, radius: f64, order: usize) -> Option<(Vec<Complex64>, f64)> {
    let mut n = 64;
    let mut prev: Option<Vec<Complex64>> = None;
    while n <= 4096 {
        let mut t = vec![Complex64::new(0.0, 0.0); order + 1];
        let mut noise: f64 = 0.0;
        for j in 0..n {
            let u = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            let z = center + radius * u;
            let v = f.eval(z);
            if v.value.norm() <= ZERO_FLOOR * v.scale || v.value.norm() == 0.0 {
                return None;
            }
            let g = derivative_at(f, z, &v) / v.value * radius * u;
            noise = noise.max(1e-13 * v.scale / v.value.norm() * g.norm().max(1.0));
            let mut up = Complex64::new(1.0, 0.0);
            for tp in t.iter_mut() {
                *tp += g * up;
                up *= u;
            }
        }
        for tp in t.iter_mut() {
            *tp /= n as f64;
        }
        if let Some(p) = &prev {
            let diff = p.iter().zip(&t).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if diff < 1e-11 * order as f64 + noise {
                return Some((t, noise));
            }
        }
        prev = Some(t);
        n *= 2;
    }
    None
}

/// Coefficients `[1, c1, ..., cw]` of the monic polynomial whose roots have
/// the given power sums `p_1..p_w` (Newton's identities).
fn monic_from_power_sums(p: &[Complex64]) -> Vec<Complex64> {
    let w = p.len();
    let mut e = vec![Complex64::new(0.0, 0.0); w + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for k in 1..=w {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * p[i - 1];
        }
        e[k] = acc / k as f64;
    }
    e.iter()
        .enumerate()
        .map(|(k, &ek)| if k % 2 == 0 { ek } else { -ek })
        .collect()
}

/// Roots of a monic polynomial by Aberth iteration.
fn polynomial_roots(coef: &[Complex64]) -> Option<Vec<Complex64>> {
    let deg = coef.len() - 1;
    if deg == 1 {
        return Some(vec![-coef[1]]);
    }
    let eval = |z: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in coef {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(0.5, 2.0 * PI * k as f64 / deg as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm());
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z.iter().all(|r| r.re.is_finite() && r.im.is_finite()).then_some(z)
}

/// Refines the mean of an `m`-fold root cluster as the nearby simple root of
/// the `(m-1)`-th derivative of the polynomial, which does not suffer from
/// the `eps^(1/m)` scatter of the individual roots.
fn cluster_center(coef: &[Complex64], mean: Complex64, m: usize) -> Complex64 {
    if m == 1 {
        return mean;
    }
    let mut d = coef.to_vec();
    for _ in 1..m {
        let deg = d.len() - 1;
        d = d[..deg].iter().enumerate().map(|(i, &c)| c * (deg - i) as f64).collect();
    }
    let mut u = mean;
    for _ in 0..20 {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in &d {
            dp = dp * u + p;
            p = p * u + c;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        u -= step;
        if step.norm() < 1e-16 {
            break;
        }
    }
    if (u - mean).norm() < 0.1 {
        u
    } else {
        mean
    }
}

/// Groups roots that are indistinguishable at the moment noise level. A
/// group of `m` roots is formed when all its members lie within
/// `10 * NOISE^(1/m)` of each other (in units of the circle radius); larger
/// groups are tried first.
fn group_roots(roots: &[Complex64]) -> Vec<Vec<usize>> {
    let n = roots.len();
    let mut free = vec![true; n];
    let mut groups = Vec::new();
    for m in (2..=n).rev() {
        let thr = 10.0 * NOISE.powf(1.0 / m as f64);
        'seed: loop {
            for seed in 0..n {
                if !free[seed] {
                    continue;
                }
                let mut near: Vec<usize> = (0..n).filter(|&j| free[j] && j != seed).collect();
                if near.len() + 1 < m {
                    continue;
                }
                near.sort_by(|&a, &b| (roots[a] - roots[seed]).norm().total_cmp(&(roots[b] - roots[seed]).norm()));
                let mut g = vec![seed];
                g.extend_from_slice(&near[..m - 1]);
                let diameter = g
                    .iter()
                    .flat_map(|&i| g.iter().map(move |&j| (roots[i] - roots[j]).norm()))
                    .fold(0.0, f64::max);
                if diameter < thr {
                    for &i in &g {
                        free[i] = false;
                    }
                    g.sort_unstable();
                    groups.push(g);
                    continue 'seed;
                }
            }
            break;
        }
    }
    groups.extend((0..n).filter(|&i| free[i]).map(|i| vec![i]));
    groups
}
