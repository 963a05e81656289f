//! Library routines against the independent reference computations in `common`.

mod common;

use common::{
    corner_char_oracle, det_oracle, jacobi_eigenvalues, min_norm_oracle, ray_distance_oracle,
};
use hessfield::avoidance::{
    avoid_ray, avoid_zero, certify_ray, certify_zero, min_norm_over_simplex,
    ray_distance_over_simplex, VectorField,
};
use hessfield::domain::{build_grid, build_sphere, ToleranceField};
use hessfield::fixtures::{random_hermitian, rng};
use hessfield::linalg::{hermitian_eig, Matrix, C64};
use hessfield::spectra::{char_poly, sturm_recurrence_check, sturm_sequence};
use proptest::prelude::*;
use rand::Rng;

fn points(max_pts: usize, max_dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_pts, 1..=max_dim)
        .prop_flat_map(|(k, m)| prop::collection::vec(prop::collection::vec(-2.0..2.0f64, m), k))
}

#[test]
fn oracle_sanity() {
    assert!((min_norm_oracle(&[vec![1.0, 0.0], vec![0.0, 1.0]]) - 0.5f64.sqrt()).abs() < 1e-15);
    assert!(min_norm_oracle(&[vec![1.0, 0.0], vec![-1.0, 0.0]]) < 1e-15);
    assert!((ray_distance_oracle(&[vec![-3.0, 2.0]]) - 2.0).abs() < 1e-12);
    assert!((ray_distance_oracle(&[vec![1.0, 0.0, 0.0]]) - 1.0).abs() < 1e-12);
    let m = Matrix::from_real(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
    assert!((det_oracle(&m).re - 18.0).abs() < 1e-12);
    let ev = jacobi_eigenvalues(&Matrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]));
    assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn min_norm_matches_oracle(vs in points(5, 6)) {
        let (lib, lam) = min_norm_over_simplex(&vs);
        let oracle = min_norm_oracle(&vs);
        prop_assert!((lib - oracle).abs() <= 1e-12 * (1.0 + oracle), "lib {lib} oracle {oracle}");
        prop_assert!(lam.iter().all(|&l| l >= -1e-12));
        prop_assert!((lam.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ray_distance_matches_oracle(vs in points(4, 5)) {
        let (lib, _, t) = ray_distance_over_simplex(&vs);
        let oracle = ray_distance_oracle(&vs);
        prop_assert!((lib - oracle).abs() <= 1e-12 * (1.0 + oracle), "lib {lib} oracle {oracle}");
        prop_assert!(t >= 0.0);
    }

    #[test]
    fn hermitian_eigenvalues_match_jacobi(seed in any::<u64>(), n in 1usize..8) {
        let m = random_hermitian(&mut rng(seed), n);
        let lib = hermitian_eig(&m).unwrap().values;
        let oracle = jacobi_eigenvalues(&m);
        for (a, b) in lib.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12, "{lib:?} vs {oracle:?}");
        }
    }

    #[test]
    fn determinant_matches_cofactor_oracle(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let m = Matrix::from_fn(n, n, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let a = m.det();
        let b = det_oracle(&m);
        prop_assert!((a - b).norm() < 1e-12);
    }
}

fn random_jacobi(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(r.gen_range(-2.0..2.0), 0.0);
        if i + 1 < n {
            let z = C64::new(r.gen_range(0.05..1.5), r.gen_range(-1.0..1.0));
            m[(i + 1, i)] = z;
            m[(i, i + 1)] = z.conj();
        }
    }
    m
}

#[test]
fn sturm_sequence_matches_cofactor_oracle() {
    let mut r = rng(2024);
    for _ in 0..100 {
        let n = r.gen_range(1..=8);
        let x = random_jacobi(&mut r, n);
        let seq = sturm_sequence(&x);
        let s = x.spectral_norm().max(1.0);
        let tol = 1e-8 * x.spectral_norm().powi(n as i32).max(1.0);
        for t in 0..20 {
            let lambda = -s + 2.0 * s * (t as f64 + 0.5) / 20.0;
            for i in 0..=n {
                let oracle = if i == n {
                    1.0
                } else {
                    corner_char_oracle(&x, i, lambda)
                };
                assert!((seq.eval(i, lambda) - oracle).abs() <= tol, "n {n} i {i}");
                // The corrected recurrence, written out against the oracle values.
                if i + 2 <= n {
                    let p1 = if i + 1 == n {
                        1.0
                    } else {
                        corner_char_oracle(&x, i + 1, lambda)
                    };
                    let p2 = if i + 2 == n {
                        1.0
                    } else {
                        corner_char_oracle(&x, i + 2, lambda)
                    };
                    let rhs = (x[(i, i)].re - lambda) * p1 - x[(i + 1, i)].norm_sqr() * p2;
                    assert!((oracle - rhs).abs() <= tol);
                }
            }
        }
        assert!(sturm_recurrence_check(&x, n).passed);
    }
}

#[test]
fn char_poly_roots_are_eigenvalues() {
    let mut r = rng(5);
    for _ in 0..20 {
        let m = random_hermitian(&mut r, 5);
        let c = char_poly(&m);
        for l in jacobi_eigenvalues(&m) {
            let v: f64 = c.iter().rev().fold(0.0, |acc, &a| acc * l + a);
            assert!(v.abs() < 1e-10, "{v}");
        }
    }
}

#[test]
fn avoidance_certificates_match_oracle() {
    let mut r = rng(99);
    for case in 0..40u64 {
        let d = (case % 3) as usize;
        let dom = if case % 2 == 0 {
            build_grid(d, 2).unwrap()
        } else {
            build_sphere(d.max(1), 1).unwrap()
        };
        let m = dom.dim + 2 + (case % 2) as usize;
        let vals: Vec<Vec<f64>> = (0..dom.vertex_count())
            .map(|_| {
                (0..m)
                    .map(|_| {
                        if case % 4 == 1 {
                            0.0
                        } else {
                            r.gen_range(-1.0..1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let f = VectorField::new(m, vals).unwrap();
        let eps = ToleranceField::constant(&dom, 0.2).unwrap();
        let (g, cert) = avoid_zero(&dom, &f, &eps, case).unwrap();
        let oracle = dom
            .simplices
            .iter()
            .map(|s| min_norm_oracle(&s.iter().map(|&i| g.values[i].clone()).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min);
        assert!(
            (cert.global_margin - oracle).abs() <= 1e-12,
            "{} vs {oracle}",
            cert.global_margin
        );
        assert_eq!(certify_zero(&dom, &g).1, cert.global_margin);
        assert!(g.max_distance(&f) < 0.2);

        let (g, cert) = avoid_ray(&dom, &f, &eps, case).unwrap();
        let oracle = dom
            .simplices
            .iter()
            .map(|s| {
                ray_distance_oracle(&s.iter().map(|&i| g.values[i].clone()).collect::<Vec<_>>())
            })
            .fold(f64::INFINITY, f64::min);
        assert!(
            (cert.global_margin - oracle).abs() <= 1e-12,
            "{} vs {oracle}",
            cert.global_margin
        );
        assert_eq!(certify_ray(&dom, &g).1, cert.global_margin);
    }
}
