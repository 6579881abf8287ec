use num_complex::Complex64;

use super::SearchRegion;
use crate::model::ProblemSpec;

/// The parabolic region
/// `Re z >= -C` and `|Im z| <= slope * sqrt(Re z + C) + offset`
/// that contains the whole spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnclosureRegion {
    pub c_const: f64,
    pub slope: f64,
    pub offset: f64,
}

/// Either the point lies in the enclosure, or the reciprocal distance to its boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolventBound {
    Inside,
    Bound(f64),
}

pub fn enclosure(spec: &ProblemSpec) -> EnclosureRegion {
    let norm = spec.boundary.norm();
    let a = spec.half_width;
    EnclosureRegion {
        c_const: spec.field.abs() + 4.0 * norm * norm + norm / (2.0 * a),
        slope: 8f64.sqrt() * norm,
        offset: norm / (2.0 * a),
    }
}

/// `1 / dist(z, boundary)` outside the enclosure.
pub fn resolvent_bound(z: Complex64, spec: &ProblemSpec) -> ResolventBound {
    let e = enclosure(spec);
    if e.contains(z) {
        ResolventBound::Inside
    } else {
        ResolventBound::Bound(1.0 / e.dist_to_boundary(z))
    }
}

impl EnclosureRegion {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= -self.c_const && z.im.abs() <= self.upper_boundary(z.re).unwrap_or(f64::NEG_INFINITY)
    }

    /// Height of the upper boundary arc at abscissa `re`, if `re >= -C`.
    pub fn upper_boundary(&self, re: f64) -> Option<f64> {
        (re >= -self.c_const).then(|| self.slope * (re + self.c_const).sqrt() + self.offset)
    }

    /// Euclidean distance from `z` to the boundary curve.
    pub fn dist_to_boundary(&self, z: Complex64) -> f64 {
        let (x, y) = (z.re, z.im.abs());
        let (cc, s, o) = (self.c_const, self.slope, self.offset);

        // vertical segment Re = -C, |Im| <= offset
        let mut best = if y <= o {
            (x + cc).abs()
        } else {
            ((x + cc).powi(2) + (y - o).powi(2)).sqrt()
        };

        // arc (t^2 - C, s t + o), t >= 0: stationary points solve
        // t^3 + (s^2/2 - (C + x)) t + s (o - y)/2 = 0
        let dist_at = |t: f64| ((t * t - cc - x).powi(2) + (s * t + o - y).powi(2)).sqrt();
        let p = 0.5 * s * s - (cc + x);
        let q = 0.5 * s * (o - y);
        for t in depressed_cubic_roots(p, q).into_iter().chain([0.0]) {
            if t >= 0.0 {
                best = best.min(dist_at(t));
            }
        }
        best
    }

    /// Intersects `r` with the bounding box of the enclosure over `r`'s real
    /// range, widened by a small margin. `None` if nothing remains.
    pub fn clip(&self, r: &SearchRegion) -> Option<SearchRegion> {
        let margin = 1e-3 * (1.0 + self.c_const);
        let re_min = r.re_min.max(-self.c_const - margin);
        if re_min >= r.re_max {
            return None;
        }
        let h = self.upper_boundary(r.re_max).unwrap_or(0.0) + margin;
        let im_min = r.im_min.max(-h);
        let im_max = r.im_max.min(h);
        if im_min >= im_max {
            return None;
        }
        Some(SearchRegion {
            re_min,
            re_max: r.re_max,
            im_min,
            im_max,
        })
    }
}

/// Real roots of `t^3 + p t + q = 0`, each refined by Newton steps.
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots = if disc > 0.0 {
        let sq = disc.sqrt();
        vec![(-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect()
    };
    for t in roots.iter_mut() {
        for _ in 0..3 {
            let d = 3.0 * *t * *t + p;
            if d != 0.0 {
                *t -= (*t * *t * *t + p * *t + q) / d;
            }
        }
    }
    roots
}
