use std::f64::consts::TAU;

use num_complex::Complex64;
use pauli_robin::linalg::Complex2x2;
use pauli_robin::model::{BoundaryPair, ProblemSpec, SpinorGridFunction};
use pauli_robin::secular::{char_function, ChannelMomenta, CharFunction};
use pauli_robin::spectra::{enclosure, find_eigenvalues, winding_number, Eigenvalue, SearchRegion};
use pauli_robin::symmetry::{
    adjoint_boundary, apply_conjugation, apply_parity, apply_time_reversal, classify, t_conjugate, DEFAULT_SYMMETRY_TOL,
};
use proptest::prelude::*;

fn entry() -> impl Strategy<Value = Complex64> {
    (0.0..2.0f64, 0.0..TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn matrix() -> impl Strategy<Value = Complex2x2> {
    (entry(), entry(), entry(), entry()).prop_map(|(a, b, c, d)| Complex2x2::new(a, b, c, d))
}

fn pair() -> impl Strategy<Value = BoundaryPair> {
    (matrix(), matrix()).prop_map(|(p, m)| BoundaryPair::new(p, m).unwrap())
}

fn spec() -> impl Strategy<Value = ProblemSpec> {
    (0.5..2.0f64, -1.0..1.0f64, pair()).prop_map(|(a, b, bc)| ProblemSpec::new(a, b, bc).unwrap())
}

fn lambda() -> impl Strategy<Value = Complex64> {
    (-5.0..25.0f64, -3.0..3.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn spinor() -> impl Strategy<Value = SpinorGridFunction> {
    (1usize..8, prop::collection::vec((entry(), entry()), 17)).prop_map(|(a, v)| {
        let grid = SpinorGridFunction::uniform_grid(a as f64 * 0.25, v.len());
        SpinorGridFunction::new(grid, v.into_iter().map(|(p, m)| [p, m]).collect()).unwrap()
    })
}

fn close(x: Complex64, y: Complex64, scale: f64, rel: f64) -> bool {
    (x - y).norm() <= rel * scale.max(1e-300)
}

fn sorted_values(ev: &[Eigenvalue]) -> Vec<Complex64> {
    ev.iter()
        .flat_map(|e| std::iter::repeat_n(e.lambda, e.algebraic_mult))
        .collect()
}

fn symmetric_window() -> SearchRegion {
    SearchRegion::new(-5.001, 15.001, -3.001, 3.001).unwrap()
}

/// Every element of `a` has a partner in `b` within `tol`, and the counts match.
fn matched(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| (x - y).norm() <= tol * (1.0 + x.norm())))
}

proptest! {
    #[test]
    fn spinor_symmetries_are_exact(f in spinor()) {
        let t2 = apply_time_reversal(&apply_time_reversal(&f));
        prop_assert_eq!(t2, f.map_values(|_, [p, m]| [-p, -m]));
        prop_assert_eq!(apply_parity(&apply_parity(&f).unwrap()).unwrap(), f.clone());
        prop_assert_eq!(apply_conjugation(&apply_conjugation(&f)), f.clone());

        let pt = apply_parity(&apply_time_reversal(&f)).unwrap();
        let tp = apply_time_reversal(&apply_parity(&f).unwrap());
        prop_assert_eq!(pt, tp);
        let pk = apply_parity(&apply_conjugation(&f)).unwrap();
        let kp = apply_conjugation(&apply_parity(&f).unwrap());
        prop_assert_eq!(pk, kp);
        let tk = apply_time_reversal(&apply_conjugation(&f));
        let kt = apply_conjugation(&apply_time_reversal(&f));
        prop_assert_eq!(tk, kt);
    }

    #[test]
    fn boundary_maps_are_involutions(b in pair()) {
        prop_assert_eq!(t_conjugate(&t_conjugate(&b.a_plus)), b.a_plus);
        prop_assert_eq!(adjoint_boundary(&adjoint_boundary(&b)), b);
        let adj = adjoint_boundary(&b);
        prop_assert_eq!(
            classify(&b, DEFAULT_SYMMETRY_TOL).self_adjoint,
            classify(&adj, DEFAULT_SYMMETRY_TOL).self_adjoint
        );
        let pt = BoundaryPair::new(b.a_plus, t_conjugate(&b.a_plus)).unwrap();
        prop_assert!(classify(&pt, DEFAULT_SYMMETRY_TOL).pt_symmetric);
        prop_assert!(classify(&adjoint_boundary(&pt), DEFAULT_SYMMETRY_TOL).pt_symmetric);
        prop_assert_eq!(
            classify(&b, DEFAULT_SYMMETRY_TOL).pt_symmetric,
            classify(&adj, DEFAULT_SYMMETRY_TOL).pt_symmetric
        );
    }

    #[test]
    fn value_does_not_depend_on_the_branch(s in spec(), l in lambda(), fp in any::<bool>(), fm in any::<bool>()) {
        let f = CharFunction::new(&s).unwrap();
        let km = ChannelMomenta::new(l, s.field);
        let a = f.eval_momenta(&km);
        let b = f.eval_momenta(&km.flipped(fp, fm));
        prop_assert!(close(a.value, b.value, a.scale, 1e-12));
    }

    #[test]
    fn conjugation_identity(s in spec(), l in lambda()) {
        let a = char_function(l, &s).unwrap();
        let adj = s.with_boundary(adjoint_boundary(&s.boundary));
        let b = char_function(l.conj(), &adj).unwrap();
        prop_assert!(close(b.value, a.value.conj(), a.scale, 1e-12));
    }

    #[test]
    fn relabelling_channels_flips_the_field(s in spec(), l in lambda()) {
        let swap = |m: &Complex2x2| {
            let [[a, b], [c, d]] = m.m;
            Complex2x2::new(d, c, b, a)
        };
        let bc = BoundaryPair::new(swap(&s.boundary.a_plus), swap(&s.boundary.a_minus)).unwrap();
        let t = ProblemSpec::new(s.half_width, -s.field, bc).unwrap();
        let a = char_function(l, &s).unwrap();
        let b = char_function(l, &t).unwrap();
        prop_assert!(close(a.value, b.value, a.scale, 1e-12));
    }

    #[test]
    fn decoupled_function_factorizes(
        a in 0.5..2.0f64, field in -1.0..1.0f64, l in lambda(),
        p1 in entry(), p2 in entry(), m1 in entry(), m2 in entry(),
    ) {
        let bc = BoundaryPair::new(Complex2x2::diagonal(p1, p2), Complex2x2::diagonal(m1, m2)).unwrap();
        let s = ProblemSpec::new(a, field, bc).unwrap();
        let robin = |mu: Complex64, plus: Complex64, minus: Complex64| {
            let k = mu.sqrt();
            let (c, sn) = ((2.0 * a * k).cos(), (2.0 * a * k).sin() / k);
            (mu + plus * minus) * sn + (minus - plus) * c
        };
        let want = robin(l - field, p1, m1) * robin(l + field, p2, m2);
        let got = char_function(l, &s).unwrap();
        prop_assert!(close(got.value, want, got.scale, 1e-11), "{} vs {}", got.value, want);
    }

    #[test]
    fn derivative_matches_differences(s in spec(), l in lambda()) {
        let v = char_function(l, &s).unwrap();
        let h = 1e-5 * (1.0 + l.norm());
        let fd = (char_function(l + h, &s).unwrap().value - char_function(l - h, &s).unwrap().value) / (2.0 * h);
        let d = v.derivative.unwrap();
        prop_assert!((d - fd).norm() <= 1e-7 * (d.norm() + v.scale), "{d} vs {fd}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn winding_is_additive(s in spec(), x in 0.1..0.9f64, y in 0.1..0.9f64, re0 in -3.0..5.0f64, im0 in -2.0..0.0f64) {
        let r = SearchRegion::new(re0, re0 + 8.0, im0, im0 + 3.0).unwrap();
        let (cx, cy) = (re0 + 8.0 * x, im0 + 3.0 * y);
        let parts = [
            SearchRegion::new(re0, cx, im0, cy).unwrap(),
            SearchRegion::new(cx, re0 + 8.0, im0, cy).unwrap(),
            SearchRegion::new(re0, cx, cy, im0 + 3.0).unwrap(),
            SearchRegion::new(cx, re0 + 8.0, cy, im0 + 3.0).unwrap(),
        ];
        let whole = winding_number(&r, &s);
        let pieces: Result<Vec<i64>, _> = parts.iter().map(|p| winding_number(p, &s)).collect();
        // a zero sitting on one of the cuts makes the split undefined
        prop_assume!(whole.is_ok() && pieces.is_ok());
        prop_assert_eq!(whole.unwrap(), pieces.unwrap().iter().sum::<i64>());
    }

    #[test]
    fn eigenvalues_lie_in_the_enclosure(s in spec()) {
        let enc = enclosure(&s);
        for e in find_eigenvalues(&s, &symmetric_window(), 1e-10).unwrap() {
            prop_assert!(enc.contains(e.lambda), "{}", e.lambda);
        }
    }

    #[test]
    fn adjoint_spectrum_is_conjugate(s in spec()) {
        let sigma = sorted_values(&find_eigenvalues(&s, &symmetric_window(), 1e-10).unwrap());
        let adj = s.with_boundary(adjoint_boundary(&s.boundary));
        let conj: Vec<Complex64> = sorted_values(&find_eigenvalues(&adj, &symmetric_window(), 1e-10).unwrap())
            .iter()
            .map(|z| z.conj())
            .collect();
        prop_assert!(matched(&sigma, &conj, 1e-8), "{sigma:?} vs {conj:?}");
    }

    #[test]
    fn pt_symmetric_spectra_are_conjugation_closed(a in 0.5..2.0f64, m in matrix()) {
        let s = ProblemSpec::new(a, 0.0, BoundaryPair::new(m, t_conjugate(&m)).unwrap()).unwrap();
        let sigma = sorted_values(&find_eigenvalues(&s, &symmetric_window(), 1e-10).unwrap());
        let conj: Vec<Complex64> = sigma.iter().map(|z| z.conj()).collect();
        prop_assert!(matched(&sigma, &conj, 1e-8), "{sigma:?}");
    }

    /// `T` reverses the field, so with `b != 0` a PT-symmetric pair maps the
    /// spectrum at `b` onto the conjugate spectrum at `-b`.
    #[test]
    fn pt_symmetry_reverses_the_field(a in 0.5..2.0f64, field in -1.0..1.0f64, m in matrix()) {
        let bc = BoundaryPair::new(m, t_conjugate(&m)).unwrap();
        let s = ProblemSpec::new(a, field, bc).unwrap();
        let flipped = ProblemSpec::new(a, -field, bc).unwrap();
        let sigma = sorted_values(&find_eigenvalues(&s, &symmetric_window(), 1e-10).unwrap());
        let conj: Vec<Complex64> = sorted_values(&find_eigenvalues(&flipped, &symmetric_window(), 1e-10).unwrap())
            .iter()
            .map(|z| z.conj())
            .collect();
        prop_assert!(matched(&sigma, &conj, 1e-8), "{sigma:?} vs {conj:?}");
    }

    #[test]
    fn pk_symmetric_spectra_are_conjugation_closed(a in 0.5..2.0f64, field in -1.0..1.0f64, m in matrix()) {
        let s = ProblemSpec::new(a, field, BoundaryPair::new(m, -m.conj()).unwrap()).unwrap();
        let sigma = sorted_values(&find_eigenvalues(&s, &symmetric_window(), 1e-10).unwrap());
        let conj: Vec<Complex64> = sigma.iter().map(|z| z.conj()).collect();
        prop_assert!(matched(&sigma, &conj, 1e-8), "{sigma:?}");
    }

    #[test]
    fn spectra_scale_with_the_interval(s in spec(), big in any::<bool>()) {
        let k = if big { 2.0 } else { 0.5 };
        let bc = BoundaryPair::new(s.boundary.a_plus * Complex64::from(k), s.boundary.a_minus * Complex64::from(k)).unwrap();
        let scaled = ProblemSpec::new(s.half_width / k, k * k * s.field, bc).unwrap();
        let w = symmetric_window();
        let wide = SearchRegion::new(k * k * w.re_min, k * k * w.re_max, k * k * w.im_min, k * k * w.im_max).unwrap();
        let base: Vec<Complex64> = sorted_values(&find_eigenvalues(&s, &w, 1e-10).unwrap())
            .iter()
            .map(|z| z * k * k)
            .collect();
        let got = sorted_values(&find_eigenvalues(&scaled, &wide, 1e-10).unwrap());
        prop_assert!(matched(&base, &got, 1e-8), "{base:?} vs {got:?}");
    }
}
