use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;
use pauli_robin::linalg::Complex2x2;
use pauli_robin::model::{families, BoundaryPair, ProblemSpec};
use pauli_robin::pseudo::{discretize, pseudospectrum_grid};
use pauli_robin::spectra::{enclosure, find_eigenvalues, SearchRegion};
use pauli_robin::symmetry::{classify, DEFAULT_SYMMETRY_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn smallest_singular_value_respects_the_enclosure_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = ProblemSpec::new(FRAC_PI_4, 0.4, families::scalar_imaginary(1.0, -0.5)).unwrap();
    let enc = enclosure(&spec);
    let op = discretize(&spec, 400).unwrap();
    let mut tested = 0;
    while tested < 6 {
        let z = c(rng.gen_range(-enc.c_const - 30.0..60.0), rng.gen_range(-60.0..60.0));
        if enc.contains(z) {
            continue;
        }
        let dist = enc.dist_to_boundary(z);
        let sigma = op.sigma_min(z, 1e-8);
        assert!(sigma >= 0.9 * dist, "z {z}: sigma {sigma} dist {dist}");
        tested += 1;
    }
}

#[test]
fn pk_symmetric_tables_are_conjugation_symmetric() {
    let a_plus = Complex2x2::new(c(0.3, 1.1), c(-0.4, 0.2), c(0.5, -0.7), c(1.2, 0.0));
    let boundary = BoundaryPair::new(a_plus, -a_plus.conj()).unwrap();
    assert!(classify(&boundary, DEFAULT_SYMMETRY_TOL).pk_symmetric);
    let spec = ProblemSpec::new(0.9, 0.25, boundary).unwrap();
    let region = SearchRegion::new(-2.0, 8.0, -3.0, 3.0).unwrap();
    let (nx, ny) = (5, 4);
    let table = pseudospectrum_grid(&spec, &region, nx, ny, 60).unwrap();
    for r in 0..ny {
        for k in 0..nx {
            let p = table[r * nx + k];
            let q = table[(ny - 1 - r) * nx + k];
            assert!((p.z - q.z.conj()).norm() < 1e-12);
            assert!((p.sigma_min - q.sigma_min).abs() <= 1e-8 * (1.0 + p.sigma_min), "{p:?} {q:?}");
        }
    }
}

#[test]
fn conjugate_pair_gives_mirrored_dips() {
    let spec = ProblemSpec::new(FRAC_PI_4, 0.4, families::scalar_imaginary(2.0, -0.5)).unwrap();
    let window = SearchRegion::new(-1.0, 10.0, -5.0, 5.0).unwrap();
    let pair: Vec<Complex64> = find_eigenvalues(&spec, &window, 1e-10)
        .unwrap()
        .iter()
        .map(|e| e.lambda)
        .filter(|l| l.im > 1e-8)
        .collect();
    assert!(!pair.is_empty());
    let op = discretize(&spec, 300).unwrap();
    for z in pair {
        let up = op.sigma_min(z, 1e-10);
        let down = op.sigma_min(z.conj(), 1e-10);
        assert!((up - down).abs() <= 1e-8 * (1.0 + up));
        for d in [c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5)] {
            assert!(op.sigma_min(z + d, 1e-10) > 5.0 * up, "no dip at {z}");
        }
    }
}

#[test]
fn discrete_eigenvalue_converges_quadratically() {
    let spec = ProblemSpec::new(FRAC_PI_4, 0.4, families::scalar_imaginary(2.0, -0.5)).unwrap();
    let window = SearchRegion::new(-1.0, 10.0, -5.0, 5.0).unwrap();
    let z = find_eigenvalues(&spec, &window, 1e-10).unwrap()[0].lambda;
    let coarse = discretize(&spec, 100).unwrap().sigma_min(z, 1e-10);
    let fine = discretize(&spec, 200).unwrap().sigma_min(z, 1e-10);
    assert!((3.0..5.0).contains(&(coarse / fine)), "{coarse} {fine}");
}

#[test]
fn random_interior_dense_matrix_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut e = || Complex64::from_polar(rng.gen_range(0.0..2.0), rng.gen_range(0.0..TAU));
    let m = Complex2x2::new(e(), e(), e(), e());
    let spec = ProblemSpec::new(1.3, -0.2, BoundaryPair::new(m, m).unwrap()).unwrap();
    let op = discretize(&spec, 16).unwrap();
    assert_eq!((op.matrix.rows(), op.matrix.cols()), (32, 32));
    assert!((op.h - 2.6 / 15.0).abs() < 1e-15);
}
