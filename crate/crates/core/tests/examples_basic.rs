//! Worked examples for meshes, dense linear algebra and avoidance.

mod common;

use approx::assert_abs_diff_eq;
use hessfield::avoidance::{
    avoid_k_maps, avoid_ray, avoid_zero, avoid_zero_operator, certify_k_maps, VectorField,
};
use hessfield::domain::{
    audit_continuity, build_grid, build_sphere, evaluate, Domain, MatrixField, ToleranceField,
};
use hessfield::fixtures::rng;
use hessfield::linalg::{
    classify_bh, classify_h, givens_annihilate, hermitian_eig, householder_annihilate,
    polar_unitary, Matrix, C64, DEFAULT_TOL_POS, ONE, ZERO,
};
use hessfield::spectra::bott_field;
use hessfield::Error;
use rand::Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    (a - b).max_abs() <= tol
}

// ----- meshes ---------------------------------------------------------------

#[test]
fn grid_examples() {
    let p = build_grid(0, 1).unwrap();
    assert_eq!(p.vertex_count(), 1);
    assert!(p.simplices.iter().all(|s| s.len() == 1));
    let i = build_grid(1, 2).unwrap();
    assert_eq!((i.vertex_count(), i.edges.len()), (3, 2));
    assert!(i.vertices.iter().all(|v| (0.0..=1.0).contains(&v[0])));
    let g = build_grid(3, 4).unwrap();
    assert_eq!(g.vertex_count(), 125);
    assert_eq!(g.simplices.len(), 64 * 6);
}

#[test]
fn sphere_examples() {
    let s = build_sphere(1, 1).unwrap();
    assert_eq!((s.vertex_count(), s.edges.len()), (4, 4));
    for v in &s.vertices {
        assert_abs_diff_eq!(v.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
    }
    let s = build_sphere(2, 2).unwrap();
    for v in &s.vertices {
        assert_abs_diff_eq!(
            v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            1.0,
            epsilon = 1e-12
        );
    }
    assert_eq!(build_sphere(2, 4).unwrap().euler_characteristic(), 2);
}

#[test]
fn continuity_audit_examples() {
    let d = build_grid(2, 3).unwrap();
    let constant = MatrixField::constant(&d, &Matrix::identity(3));
    assert_eq!(audit_continuity(&d, &constant).max_edge_jump, 0.0);
    let delta = 0.37;
    let mut bumped = constant.clone();
    bumped.values[5] = &bumped.values[5] + &Matrix::identity(3).scale_real(delta);
    assert_abs_diff_eq!(
        audit_continuity(&d, &bumped).max_edge_jump,
        delta,
        epsilon = 1e-14
    );

    let coarse = build_sphere(2, 8).unwrap();
    let fine = build_sphere(2, 16).unwrap();
    let j8 = audit_continuity(&coarse, &bott_field(&coarse).unwrap()).max_edge_jump;
    let j16 = audit_continuity(&fine, &bott_field(&fine).unwrap()).max_edge_jump;
    assert!(j16 < j8 && j8 / j16 < 2.5, "{j8} {j16}");
}

#[test]
fn interpolation_examples() {
    let d = build_grid(2, 1).unwrap();
    let f = MatrixField::from_fn(&d, 2, |i, _| {
        hessfield::fixtures::random_hermitian(&mut rng(i as u64), 2)
    });
    let s = &d.simplices[0];
    let (a, b, cc) = (&f.values[s[0]], &f.values[s[1]], &f.values[s[2]]);
    assert!(close(
        &evaluate(&d, &f, 0, &[1.0, 0.0, 0.0]).unwrap(),
        a,
        0.0
    ));
    assert!(close(
        &evaluate(&d, &f, 0, &[0.5, 0.5, 0.0]).unwrap(),
        &(a + b).scale_real(0.5),
        1e-15
    ));
    let third = 1.0 / 3.0;
    let expect = (&(a + b) + cc).scale_real(third);
    assert!(close(
        &evaluate(&d, &f, 0, &[third, third, third]).unwrap(),
        &expect,
        1e-15
    ));
}

// ----- dense linear algebra ---------------------------------------------------

#[test]
fn householder_examples() {
    let (hd, r) = householder_annihilate(&[ONE, ZERO]).unwrap();
    assert_eq!(r, 1.0);
    // The aligned case fixes b; on h⊥ it acts as −1.
    assert!(close(
        &hd.reflection,
        &Matrix::diag_real(&[1.0, -1.0]),
        1e-15
    ));
    let b = [c(3.0, 0.0), c(0.0, 4.0)];
    let (hd, r) = householder_annihilate(&b).unwrap();
    assert_abs_diff_eq!(r, 5.0, epsilon = 1e-15);
    let rb = hd.reflection.mul_vec(&b);
    assert!((rb[0] - c(5.0, 0.0)).norm() < 1e-14 && rb[1].norm() < 1e-14);
    assert!(hd.reflection.unitarity_residual() < 1e-14);
    assert!(matches!(
        householder_annihilate(&[c(-1.0, 0.0), ZERO]),
        Err(Error::RayProximity(_))
    ));
}

#[test]
fn givens_examples() {
    assert!(close(
        &givens_annihilate(ONE, ZERO).unwrap(),
        &Matrix::identity(2),
        0.0
    ));
    let g = givens_annihilate(ZERO, ONE).unwrap();
    assert!(close(
        &g,
        &Matrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        0.0
    ));
    let v = [c(3.0, 0.0), c(0.0, 4.0)];
    let g = givens_annihilate(v[0], v[1]).unwrap();
    let out = g.mul_vec(&v);
    assert!((out[0] - c(5.0, 0.0)).norm() < 1e-14 && out[1].norm() < 1e-14);
    assert!(g.unitarity_residual() < 1e-15);
}

#[test]
fn eigen_examples() {
    let e = hermitian_eig(&Matrix::diag_real(&[3.0, 1.0])).unwrap();
    assert_eq!(e.values, vec![3.0, 1.0]);
    // V = I up to unimodular column phases.
    assert!(e.vectors[(0, 1)].norm() < 1e-15 && e.vectors[(1, 0)].norm() < 1e-15);
    assert!(
        (e.vectors[(0, 0)].norm() - 1.0).abs() < 1e-15
            && (e.vectors[(1, 1)].norm() - 1.0).abs() < 1e-15
    );
    let e = hermitian_eig(&Matrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
    assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] + 1.0).abs() < 1e-15);
    let e = hermitian_eig(&Matrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
    assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
}

#[test]
fn polar_examples() {
    let u = givens_annihilate(c(0.6, 0.1), c(0.3, -0.7)).unwrap();
    assert!(close(&polar_unitary(&u).unwrap(), &u, 1e-13));
    let two = Matrix::identity(3).scale_real(2.0);
    assert!(close(
        &polar_unitary(&two).unwrap(),
        &Matrix::identity(3),
        1e-14
    ));
    let z = Matrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let v = polar_unitary(&z).unwrap();
    assert!(v.unitarity_residual() < 1e-10);
    // z (z*z)^{−1/2} through the independent Jacobi eigenvalues of z*z = [[1,1],[1,2]].
    let zz = &z.adjoint() * &z;
    let ev = common::jacobi_eigenvalues(&zz);
    let (l1, l2) = (ev[0], ev[1]);
    let vec_for = |l: f64| {
        let (x, y) = (1.0, l - 1.0);
        let n = (x * x + y * y).sqrt();
        (x / n, y / n)
    };
    let (a1, b1) = vec_for(l1);
    let (a2, b2) = vec_for(l2);
    let inv_sqrt = Matrix::from_real(
        2,
        2,
        &[
            a1 * a1 / l1.sqrt() + a2 * a2 / l2.sqrt(),
            a1 * b1 / l1.sqrt() + a2 * b2 / l2.sqrt(),
            a1 * b1 / l1.sqrt() + a2 * b2 / l2.sqrt(),
            b1 * b1 / l1.sqrt() + b2 * b2 / l2.sqrt(),
        ],
    );
    assert!(close(&v, &(&z * &inv_sqrt), 1e-12));
}

#[test]
fn h_form_examples() {
    let id = Matrix::identity(4);
    assert!(classify_h(&id, 0, 1e-9, DEFAULT_TOL_POS).is_member());
    assert!(!classify_h(&id, 1, 1e-9, DEFAULT_TOL_POS).is_member());
}

#[test]
fn bh_form_examples() {
    let (n, cc) = (5, 2);
    let p = Matrix::diag_real(&[0.0, 0.0, 0.0, 1.0, 1.0]);
    let d = classify_bh(&p, n - cc, 1e-12);
    assert!(d.is_member());
    assert!(d.alpha.iter().all(|&a| a == 1));
    let mut p = Matrix::zeros(4, 4);
    p.set_block(0, 0, &Matrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]));
    p[(3, 3)] = ONE;
    let d = classify_bh(&p, 2, 1e-12);
    assert!(d.is_member());
    assert_eq!(d.alpha, vec![2]);
}

// ----- avoidance ------------------------------------------------------------------

fn interval() -> Domain {
    build_grid(1, 4).unwrap()
}

#[test]
fn avoid_zero_examples() {
    let d = interval();
    let f = VectorField::constant(&d, &[1.0, 0.0]);
    let eps = ToleranceField::constant(&d, 0.1).unwrap();
    let (g, cert) = avoid_zero(&d, &f, &eps, 1).unwrap();
    assert_eq!(g, f);
    assert_eq!(cert.global_margin, 1.0);

    let p = build_grid(0, 1).unwrap();
    let zero = VectorField::constant(&p, &[0.0]);
    let (g, cert) = avoid_zero(&p, &zero, &ToleranceField::constant(&p, 0.5).unwrap(), 3).unwrap();
    assert!(g.values[0][0] != 0.0 && g.values[0][0].abs() < 0.5);
    assert_eq!(cert.global_margin, g.values[0][0].abs());

    let line = VectorField::new(
        2,
        d.vertices.iter().map(|x| vec![x[0] - 0.5, 0.0]).collect(),
    )
    .unwrap();
    let (g, cert) = avoid_zero(&d, &line, &eps, 5).unwrap();
    assert!(cert.global_margin > 0.0);
    assert!(g.max_distance(&line) < 0.1);
    let oracle = d
        .simplices
        .iter()
        .map(|s| {
            common::min_norm_oracle(&s.iter().map(|&i| g.values[i].clone()).collect::<Vec<_>>())
        })
        .fold(f64::INFINITY, f64::min);
    assert!((oracle - cert.global_margin).abs() < 1e-12);

    // d ≥ m never certifies.
    let flat = VectorField::constant(&d, &[0.0]);
    assert!(matches!(
        avoid_zero(&d, &flat, &eps, 0),
        Err(Error::HypothesisViolation { .. })
    ));
}

#[test]
fn avoid_k_maps_examples() {
    let d = interval();
    let eps = ToleranceField::constant(&d, 0.1).unwrap();
    let f = VectorField::new(2, d.vertices.iter().map(|x| vec![x[0], 0.3]).collect()).unwrap();
    let target = VectorField::constant(&d, &[0.5, 0.3]);
    let (g1, _) = avoid_k_maps(&d, &f, std::slice::from_ref(&target), &eps, 11).unwrap();
    let shifted = VectorField::new(
        2,
        f.values
            .iter()
            .map(|v| vec![v[0] - 0.5, v[1] - 0.3])
            .collect(),
    )
    .unwrap();
    let (g0, _) = avoid_zero(&d, &shifted, &eps, 11).unwrap();
    let back: Vec<Vec<f64>> = g0
        .values
        .iter()
        .map(|v| vec![v[0] + 0.5, v[1] + 0.3])
        .collect();
    for (a, b) in g1.values.iter().zip(&back) {
        assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
    }

    let p = build_grid(0, 1).unwrap();
    let h = VectorField::constant(&p, &[0.2, -0.4]);
    let (g, _) = avoid_k_maps(
        &p,
        &h,
        std::slice::from_ref(&h),
        &ToleranceField::constant(&p, 1.0).unwrap(),
        2,
    )
    .unwrap();
    assert!(g.values[0] != h.values[0] && g.max_distance(&h) < 1.0);

    let sq = build_grid(2, 3).unwrap();
    let mut r = rng(8);
    let affine = |r: &mut rand_chacha::ChaCha8Rng| {
        let a: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
        VectorField::new(
            3,
            sq.vertices
                .iter()
                .map(|x| {
                    (0..3)
                        .map(|i| a[i] + b[2 * i] * x[0] + b[2 * i + 1] * x[1])
                        .collect()
                })
                .collect(),
        )
        .unwrap()
    };
    let f = affine(&mut r);
    let targets: Vec<VectorField> = (0..3).map(|_| affine(&mut r)).collect();
    let eps = ToleranceField::constant(&sq, 0.1).unwrap();
    let (g, cert) = avoid_k_maps(&sq, &f, &targets, &eps, 4).unwrap();
    assert!(cert.global_margin > 0.0);
    for t in &targets {
        assert!(certify_k_maps(&sq, &g, std::slice::from_ref(t)).1 > 0.0);
    }
}

#[test]
fn avoid_ray_examples() {
    let d = interval();
    let f = VectorField::constant(&d, &[1.0, 0.0, 0.0]);
    let (g, cert) = avoid_ray(&d, &f, &ToleranceField::constant(&d, 0.1).unwrap(), 0).unwrap();
    assert_eq!(g, f);
    assert!(cert.global_margin >= 1.0);

    let p = build_grid(0, 1).unwrap();
    let on_ray = VectorField::constant(&p, &[-1.0, 0.0, 0.0, 0.0]);
    let (g, cert) = avoid_ray(&p, &on_ray, &ToleranceField::constant(&p, 0.5).unwrap(), 1).unwrap();
    assert!(cert.global_margin > 0.0 && g.max_distance(&on_ray) < 0.5);

    let s1 = build_sphere(1, 4).unwrap();
    let loop_field = VectorField::new(
        4,
        s1.vertices
            .iter()
            .map(|x| vec![x[0] - 0.0, x[1], 0.0, 0.0])
            .collect(),
    )
    .unwrap();
    assert!(loop_field.values.iter().any(|v| v[0] <= -1.0 + 1e-12));
    let (g, cert) = avoid_ray(
        &s1,
        &loop_field,
        &ToleranceField::constant(&s1, 0.1).unwrap(),
        2,
    )
    .unwrap();
    assert!(cert.global_margin > 0.0);
    let oracle = s1
        .simplices
        .iter()
        .map(|s| {
            common::ray_distance_oracle(&s.iter().map(|&i| g.values[i].clone()).collect::<Vec<_>>())
        })
        .fold(f64::INFINITY, f64::min);
    assert!((oracle - cert.global_margin).abs() < 1e-12);
}

#[test]
fn operator_bump_examples() {
    let p = build_grid(0, 1).unwrap();
    let one = ToleranceField::constant(&p, 1.0).unwrap();
    let b = avoid_zero_operator(&p, &[vec![ZERO; 4]], &one, 0).unwrap();
    assert_eq!(b.g[0], vec![ONE, ZERO, ZERO, ZERO]);
    assert_eq!(b.margin, 1.0);

    let f = vec![vec![c(0.3, 0.1), c(-0.2, 0.0), ZERO, ZERO]];
    let b = avoid_zero_operator(&p, &f, &one, 2).unwrap();
    assert_eq!(b.index, 2);
    let diff: f64 = b.g[0]
        .iter()
        .zip(&f[0])
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert_eq!(diff, 1.0);
    assert!(matches!(
        avoid_zero_operator(&p, &f, &one, 4),
        Err(Error::NoFreeIndex { .. })
    ));
}
