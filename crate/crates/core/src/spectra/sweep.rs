//! Eigencurves over a real parameter with nearest-neighbour branch pairing.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{find_eigenvalues, SearchRegion};
use crate::error::{Error, Result};
use crate::model::{BoundaryPair, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Collision,
    Complexification,
    Realization,
    Ambiguous,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Collision => "collision",
            EventKind::Complexification => "complexification",
            EventKind::Realization => "realization",
            EventKind::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEvent {
    /// The grid interval `(alpha_prev, alpha)` in which the event happened.
    pub alpha_interval: (f64, f64),
    pub kind: EventKind,
    pub location: Complex64,
    pub branches: (usize, usize),
}

/// One eigencurve; `None` where the branch is absent from the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub values: Vec<Option<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub alphas: Vec<f64>,
    pub branches: Vec<Branch>,
    pub events: Vec<SweepEvent>,
}

impl SweepResult {
    /// Branch values at grid index `k`, as `(branch_id, lambda)`.
    pub fn values_at(&self, k: usize) -> Vec<(usize, Complex64)> {
        self.branches
            .iter()
            .filter_map(|b| b.values[k].map(|v| (b.id, v)))
            .collect()
    }
}

fn is_real(z: Complex64, tol: f64) -> bool {
    z.im.abs() <= tol.max(1e-8) * (1.0 + z.norm())
}

/// Follows the spectrum of `template` with boundary `family(alpha)` over
/// `alphas`. Eigenvalues of algebraic multiplicity `m` appear on `m` branches.
pub fn sweep<F>(family: F, template: &ProblemSpec, alphas: &[f64], window: &SearchRegion, tol: f64) -> Result<SweepResult>
where
    F: Fn(f64) -> BoundaryPair + Sync,
{
    if alphas.is_empty() || alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("parameter grid must be strictly increasing".into()));
    }
    let spectra: Vec<Vec<Complex64>> = alphas
        .par_iter()
        .map(|&alpha| {
            let spec = template.with_boundary(family(alpha));
            let ev = find_eigenvalues(&spec, window, tol)?;
            Ok(ev
                .iter()
                .flat_map(|e| std::iter::repeat_n(e.lambda, e.algebraic_mult))
                .collect())
        })
        .collect::<Result<_>>()?;

    let n = alphas.len();
    let mut branches: Vec<Branch> = Vec::new();
    let mut events = Vec::new();
    let mut active: Vec<usize> = Vec::new();

    for (k, values) in spectra.iter().enumerate() {
        let mut assigned: Vec<Option<usize>> = vec![None; values.len()];
        let mut next_active = Vec::new();

        if k > 0 {
            let preds: Vec<Complex64> = active
                .iter()
                .map(|&b| predict(&branches[b], alphas, k))
                .collect();
            let mut pairs: Vec<(f64, f64, usize, usize)> = Vec::new();
            for (ai, &b) in active.iter().enumerate() {
                let last = branches[b].values[k - 1].expect("active branch has a value");
                for (ci, &v) in values.iter().enumerate() {
                    pairs.push(((v - preds[ai]).norm(), (v.im - last.im).abs(), ai, ci));
                }
            }
            pairs.sort_by(|x, y| {
                x.0.total_cmp(&y.0)
                    .then(x.1.total_cmp(&y.1))
                    .then(x.2.cmp(&y.2))
                    .then(x.3.cmp(&y.3))
            });
            let mut branch_done = vec![false; active.len()];
            for &(cost, dim, ai, ci) in &pairs {
                if branch_done[ai] || assigned[ci].is_some() {
                    continue;
                }
                let b = active[ai];
                let rival = pairs.iter().find(|&&(c2, d2, a2, c2i)| {
                    a2 == ai
                        && c2i != ci
                        && assigned[c2i].is_none()
                        && (values[c2i] - values[ci]).norm() > 10.0 * tol
                        && (c2 - cost).abs() <= 1e-12 * (1.0 + cost)
                        && (d2 - dim).abs() <= 1e-12 * (1.0 + dim)
                });
                if rival.is_some() {
                    events.push(SweepEvent {
                        alpha_interval: (alphas[k - 1], alphas[k]),
                        kind: EventKind::Ambiguous,
                        location: values[ci],
                        branches: (b, b),
                    });
                }
                branch_done[ai] = true;
                assigned[ci] = Some(b);
                branches[b].values[k] = Some(values[ci]);
                next_active.push(b);
            }
        }

        for (ci, &v) in values.iter().enumerate() {
            if assigned[ci].is_none() {
                let id = branches.len();
                let mut vals = vec![None; n];
                vals[k] = Some(v);
                branches.push(Branch { id, values: vals });
                next_active.push(id);
            }
        }
        next_active.sort_unstable();
        active = next_active;

        if k > 0 {
            detect_events(&branches, alphas, k, tol, &mut events);
        }
    }

    Ok(SweepResult {
        alphas: alphas.to_vec(),
        branches,
        events,
    })
}

fn predict(b: &Branch, alphas: &[f64], k: usize) -> Complex64 {
    let last = b.values[k - 1].expect("active branch has a value");
    if k >= 2 {
        if let Some(prev) = b.values[k - 2] {
            let t = (alphas[k] - alphas[k - 1]) / (alphas[k - 1] - alphas[k - 2]);
            return last + (last - prev) * t;
        }
    }
    last
}

fn detect_events(branches: &[Branch], alphas: &[f64], k: usize, tol: f64, events: &mut Vec<SweepEvent>) {
    let interval = (alphas[k - 1], alphas[k]);
    let live: Vec<(usize, Complex64, Complex64)> = branches
        .iter()
        .filter_map(|b| Some((b.id, b.values[k - 1]?, b.values[k]?)))
        .collect();

    for (i, &(bi, pi, ci)) in live.iter().enumerate() {
        for &(bj, pj, cj) in &live[i + 1..] {
            let was_real = is_real(pi, tol) && is_real(pj, tol);
            let now_real = is_real(ci, tol) && is_real(cj, tol);
            let now_pair = !is_real(ci, tol) && (ci - cj.conj()).norm() <= 1e-6 * (1.0 + ci.norm());
            let was_pair = !is_real(pi, tol) && (pi - pj.conj()).norm() <= 1e-6 * (1.0 + pi.norm());
            let mut push = |kind, location| {
                events.push(SweepEvent {
                    alpha_interval: interval,
                    kind,
                    location,
                    branches: (bi, bj),
                })
            };
            if was_real && now_pair {
                push(EventKind::Complexification, Complex64::new(0.5 * (pi.re + pj.re), 0.0));
            } else if was_pair && now_real {
                push(EventKind::Realization, Complex64::new(0.5 * (ci.re + cj.re), 0.0));
            } else if was_real && now_real {
                let before = pi.re - pj.re;
                let after = ci.re - cj.re;
                let touching = after.abs() <= 10.0 * tol && before.abs() > 10.0 * tol;
                if before * after < 0.0 || touching {
                    let s = if before != after { before / (before - after) } else { 1.0 };
                    let loc = pi + (ci - pi) * s;
                    push(EventKind::Collision, Complex64::new(loc.re, 0.0));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::families;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn scalar_family_has_parabola_and_flat_branches() {
        let template = ProblemSpec::new(FRAC_PI_4, 0.4, families::neumann()).unwrap();
        let alphas: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
        let window = SearchRegion::new(-1.0, 6.0, -1.0, 1.0).unwrap();
        let r = sweep(|a| families::scalar_imaginary(a, 0.0), &template, &alphas, &window, 1e-10).unwrap();
        for (k, &a) in alphas.iter().enumerate() {
            let vals = r.values_at(k);
            for want in [a * a - 0.4, a * a + 0.4] {
                if want < 6.0 - 1e-6 {
                    assert!(vals.iter().any(|(_, v)| (v.re - want).abs() < 1e-8), "alpha {a}: {vals:?}");
                }
            }
            for want in [3.6, 4.4] {
                assert!(vals.iter().any(|(_, v)| (v.re - want).abs() < 1e-8));
            }
        }
        assert!(r.events.iter().any(|e| e.kind == EventKind::Collision));
    }
}
