//! Sturm sequences, multiplicity bounds and eigenvalue separation for Hermitian fields.

use crate::avoidance::{avoid_k_maps, derive_seed, AvoidanceCertificate, VectorField};
use crate::domain::{Domain, MatrixField, ToleranceField};
use crate::error::{Error, Result};
use crate::linalg::{
    classify_h, cluster_sizes, default_tol_zero, hermitian_eig, Matrix, C64, DEFAULT_TOL_POS,
};
use crate::reduction::{dim3_reducer, Reducer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

// ---------------------------------------------------------------------------
// Sturm sequences
// ---------------------------------------------------------------------------

/// Characteristic polynomials `p_i(λ) = det(c_i − λ)` of the trailing corners `c_i = x[i.., i..]`.
///
/// `coeffs[i][j]` is the coefficient of `λ^j` in `p_i` (0-based `i`); a final
/// entry `p_n = 1` closes the recurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct SturmSequence {
    pub coeffs: Vec<Vec<f64>>,
}

impl SturmSequence {
    pub fn eval(&self, i: usize, lambda: f64) -> f64 {
        self.coeffs[i]
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * lambda + c)
    }
}

/// Coefficients of `det(m − λ)` by the Faddeev–LeVerrier recursion.
pub fn char_poly(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    // det(λ − m) = Σ a_j λ^j with a_n = 1.
    let mut a = vec![C64::new(0.0, 0.0); n + 1];
    a[n] = C64::new(1.0, 0.0);
    let mut mk = Matrix::zeros(n, n);
    for k in 1..=n {
        let mut acc = &(m * &mk) + &Matrix::identity(n).scale(a[n - k + 1]);
        if k == 1 {
            acc = Matrix::identity(n);
        }
        mk = acc;
        let am = m * &mk;
        a[n - k] = -am.trace() / k as f64;
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    a.into_iter().map(|z| sign * z.re).collect()
}

pub fn sturm_sequence(x: &Matrix) -> SturmSequence {
    let n = x.rows();
    let mut coeffs: Vec<Vec<f64>> = (0..n).map(|i| char_poly(&x.block(i, n, i, n))).collect();
    coeffs.push(vec![1.0]);
    SturmSequence { coeffs }
}

fn det_corner(x: &Matrix, i: usize, lambda: f64) -> f64 {
    let n = x.rows();
    if i >= n {
        return 1.0;
    }
    let mut c = x.block(i, n, i, n);
    for t in 0..n - i {
        c[(t, t)] -= lambda;
    }
    c.det().re
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SturmCheck {
    pub passed: bool,
    /// Largest `|p_i − ((x_ii − λ) p_{i+1} − |x_{i+1,i}|² p_{i+2})|` with determinant evaluations.
    pub recurrence_residual: f64,
    /// Largest gap between the coefficient polynomials and direct determinants.
    pub polynomial_residual: f64,
    pub tolerance: f64,
}

/// Number of sample points per recurrence index.
pub const STURM_SAMPLES: usize = 20;

/// Checks the Sturm recurrence for indices `i < min(k, n−2)` (0-based) at sample points.
pub fn sturm_recurrence_check(x: &Matrix, k: usize) -> SturmCheck {
    let n = x.rows();
    let norm = x.spectral_norm();
    let tolerance = 1e-8 * norm.powi(n as i32).max(1.0);
    let seq = sturm_sequence(x);
    let s = norm.max(1.0);
    let mut rec: f64 = 0.0;
    let mut poly: f64 = 0.0;
    for t in 0..STURM_SAMPLES {
        let lambda = -s + 2.0 * s * (t as f64 + 0.5) / STURM_SAMPLES as f64;
        let dets: Vec<f64> = (0..=n).map(|i| det_corner(x, i, lambda)).collect();
        for (i, &d) in dets.iter().enumerate() {
            poly = poly.max((seq.eval(i, lambda) - d).abs());
        }
        for i in 0..k.min(n.saturating_sub(2)) {
            let rhs =
                (x[(i, i)].re - lambda) * dets[i + 1] - x[(i + 1, i)].norm_sqr() * dets[i + 2];
            rec = rec.max((dets[i] - rhs).abs());
        }
    }
    SturmCheck {
        passed: rec <= tolerance && poly <= tolerance,
        recurrence_residual: rec,
        polynomial_residual: poly,
        tolerance,
    }
}

// ---------------------------------------------------------------------------
// Multiplicity and interlacing
// ---------------------------------------------------------------------------

/// Cluster gap tolerance `1e-7 (1 + ‖x‖)`.
pub fn cluster_tolerance(x: &Matrix) -> f64 {
    1e-7 * (1.0 + x.norm_fro())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCheck {
    pub max_mult: usize,
    pub count_mult_gt1: usize,
    pub max_mult_bound: usize,
    pub count_bound: usize,
    pub max_mult_ok: bool,
    pub count_ok: bool,
}

/// Multiplicity bounds for a Hermitian matrix in `H_n^k`.
///
/// Only Hermitian input is supported: the bound on the largest multiplicity for
/// general matrices would need a nonsymmetric eigensolver.
pub fn multiplicity_bounds_check(x: &Matrix, k: usize) -> Result<MultiplicityCheck> {
    let n = x.rows();
    let desc = classify_h(x, k, default_tol_zero(x), DEFAULT_TOL_POS);
    if !desc.is_member() {
        return Err(Error::Precondition(format!("matrix is not in H_{n}^{k}")));
    }
    let eig = hermitian_eig(x)?;
    let clusters = cluster_sizes(&eig.values, cluster_tolerance(x));
    let max_mult = clusters.iter().copied().max().unwrap_or(0);
    let count_mult_gt1 = clusters.iter().filter(|&&c| c >= 2).count();
    let max_mult_bound = n.saturating_sub(k).max(1);
    let count_bound = n.saturating_sub(k + 1).max(1);
    Ok(MultiplicityCheck {
        max_mult,
        count_mult_gt1,
        max_mult_bound,
        count_bound,
        max_mult_ok: max_mult <= max_mult_bound,
        count_ok: count_mult_gt1 <= count_bound,
    })
}

/// Largest violation of `λ_1 ≥ μ_1 ≥ λ_2 ≥ … ≥ μ_{n−1} ≥ λ_n` for the trailing `(n−1)`-corner.
pub fn interlacing_check(x: &Matrix) -> Result<f64> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Precondition("interlacing needs n >= 2".into()));
    }
    let l = hermitian_eig(x)?.values;
    let m = hermitian_eig(&x.block(1, n, 1, n))?.values;
    let mut worst: f64 = 0.0;
    for i in 0..n - 1 {
        worst = worst.max(m[i] - l[i]).max(l[i + 1] - m[i]);
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Separation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// Per-vertex eigenvalues, descending.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Per-vertex cluster sizes.
    pub profiles: Vec<Vec<usize>>,
    pub distinct_count_min: usize,
    pub max_multiplicity: usize,
    /// Largest per-vertex number of clusters of size at least 2.
    pub clusters_gt1_max: usize,
    /// Smallest gap between consecutive eigenvalues over all vertices.
    pub min_gap: f64,
    pub perturbation_max: f64,
    pub hermitian_residual_max: f64,
    pub certificates: Vec<AvoidanceCertificate>,
}

impl SeparationReport {
    pub fn from_field(g: &MatrixField, f: Option<&MatrixField>, tol_scale: f64) -> Result<Self> {
        let per: Vec<(Vec<f64>, Vec<usize>)> = g
            .values
            .par_iter()
            .map(|m| {
                let e = hermitian_eig(&m.hermitian_part())?;
                let prof = cluster_sizes(&e.values, cluster_tolerance(m) * tol_scale);
                Ok((e.values, prof))
            })
            .collect::<Result<_>>()?;
        let n = g.n;
        let mut rep = SeparationReport {
            eigenvalues: Vec::with_capacity(per.len()),
            profiles: Vec::with_capacity(per.len()),
            distinct_count_min: n,
            max_multiplicity: 0,
            clusters_gt1_max: 0,
            min_gap: f64::INFINITY,
            perturbation_max: 0.0,
            hermitian_residual_max: 0.0,
            certificates: Vec::new(),
        };
        for (vals, prof) in per {
            rep.distinct_count_min = rep.distinct_count_min.min(prof.len());
            rep.max_multiplicity = rep
                .max_multiplicity
                .max(prof.iter().copied().max().unwrap_or(0));
            rep.clusters_gt1_max = rep
                .clusters_gt1_max
                .max(prof.iter().filter(|&&c| c >= 2).count());
            for w in vals.windows(2) {
                rep.min_gap = rep.min_gap.min(w[0] - w[1]);
            }
            rep.eigenvalues.push(vals);
            rep.profiles.push(prof);
        }
        if let Some(f) = f {
            for (a, b) in g.values.iter().zip(&f.values) {
                let d = a - b;
                rep.perturbation_max = rep
                    .perturbation_max
                    .max(d.hermitian_part().hermitian_norm());
                rep.hermitian_residual_max = rep.hermitian_residual_max.max(d.hermitian_residual());
            }
        }
        Ok(rep)
    }

    /// `vertex,eig_0,…,eig_{n−1},profile` with the profile as `a|b|c`.
    pub fn to_csv(&self) -> String {
        let n = self.eigenvalues.first().map_or(0, |v| v.len());
        let mut out = String::from("vertex");
        for i in 0..n {
            let _ = write!(out, ",eig_{i}");
        }
        out.push_str(",profile\n");
        for (v, (vals, prof)) in self.eigenvalues.iter().zip(&self.profiles).enumerate() {
            let _ = write!(out, "{v}");
            for x in vals {
                let _ = write!(out, ",{x}");
            }
            let p: Vec<String> = prof.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, ",{}", p.join("|"));
        }
        out
    }
}

fn require_hermitian(f: &MatrixField) -> Result<()> {
    let scale = 1.0 + f.values.iter().map(|m| m.norm_fro()).fold(0.0, f64::max);
    let r = f.max_hermitian_residual();
    if r > 1e-10 * scale {
        return Err(Error::NotHermitian(r));
    }
    Ok(())
}

/// Pulls back the generic reduction; multiplicities are at most `⌈d/2⌉ + 1`.
pub fn separate_default(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<(MatrixField, SeparationReport)> {
    require_hermitian(f)?;
    let red = crate::reduction::hessenberg_reduce_default(domain, f, eps, seed)?;
    let mut rep = SeparationReport::from_field(&red.g, Some(f), 1.0)?;
    rep.certificates = red.certificates;
    Ok((red.g, rep))
}

/// Eigenvalues of the leading `m`-corner of every `h`.
fn corner_eigs(h: &[Matrix], m: usize) -> Result<Vec<Vec<f64>>> {
    h.par_iter()
        .map(|x| Ok(hermitian_eig(&x.block(0, m, 0, m).hermitian_part())?.values))
        .collect()
}

fn finish_separation(
    r: Reducer<'_>,
    f: &MatrixField,
    k: usize,
) -> Result<(MatrixField, SeparationReport)> {
    let red = r.finish(f, k, f.n - k);
    let mut rep = SeparationReport::from_field(&red.g, Some(f), 1.0)?;
    rep.certificates = red.certificates;
    Ok((red.g, rep))
}

/// Total separation over domains of dimension at most 2.
pub fn separate_dim2(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<(MatrixField, SeparationReport)> {
    if domain.dim > 2 {
        return Err(Error::Precondition(format!(
            "total separation needs d <= 2, got {}",
            domain.dim
        )));
    }
    require_hermitian(f)?;
    let n = f.n;
    if n < 2 {
        f.check_domain(domain)?;
        let rep = SeparationReport::from_field(f, Some(f), 1.0)?;
        return Ok((f.clone(), rep));
    }
    let half = eps.scaled(0.5);
    let mut r = dim3_reducer(domain, f, &half, seed)?;
    let lambdas = corner_eigs(&r.h, n - 1)?;
    // b = (Re h[n−1][n−2], Im h[n−1][n−2], h[n−1][n−1]) against (0, 0, λ_i).
    let b = VectorField::new(
        3,
        r.h.iter()
            .map(|m| {
                let z = m[(n - 1, n - 2)];
                vec![z.re, z.im, m[(n - 1, n - 1)].re]
            })
            .collect(),
    )?;
    let targets: Vec<VectorField> = (0..n - 1)
        .map(|i| VectorField {
            m: 3,
            values: lambdas.iter().map(|l| vec![0.0, 0.0, l[i]]).collect(),
        })
        .collect();
    // ‖[[0, δ̄], [δ, δ_3]]‖ ≤ (2/√3)‖δ‖, so ε/4 keeps the step below ε/2.
    let (b2, cert) = avoid_k_maps(
        domain,
        &b,
        &targets,
        &eps.scaled(0.25),
        derive_seed(seed, 0x5e02),
    )?;
    r.certificates.push(cert);
    r.h.par_iter_mut().zip(&b2.values).for_each(|(m, x)| {
        let z = C64::new(x[0], x[1]);
        m[(n - 1, n - 2)] = z;
        m[(n - 2, n - 1)] = z.conj();
        m[(n - 1, n - 1)] = C64::new(x[2], 0.0);
    });
    finish_separation(r, f, n.saturating_sub(2))
}

/// Separation into at least `n − 1` distinct eigenvalues over domains of dimension at most 4.
pub fn separate_dim4(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<(MatrixField, SeparationReport)> {
    if domain.dim > 4 {
        return Err(Error::Precondition(format!(
            "separation needs d <= 4, got {}",
            domain.dim
        )));
    }
    require_hermitian(f)?;
    let n = f.n;
    if n <= 2 {
        f.check_domain(domain)?;
        let rep = SeparationReport::from_field(f, Some(f), 1.0)?;
        return Ok((f.clone(), rep));
    }
    let half = eps.scaled(0.5);
    let mut r = Reducer::new(domain, f, &half, seed)?;
    r.default_columns(n - 3)?;
    let lambdas = corner_eigs(&r.h, n - 2)?;
    let mus: Vec<Vec<f64>> =
        r.h.par_iter()
            .map(|m| Ok(hermitian_eig(&m.block(n - 2, n, n - 2, n).hermitian_part())?.values))
            .collect::<Result<_>>()?;
    // (a, b, 0) in C × C × R against (0, 0, λ_i − μ_j).
    let field = VectorField::new(
        5,
        r.h.iter()
            .map(|m| {
                let a = m[(n - 2, n - 3)];
                let b = m[(n - 1, n - 3)];
                vec![a.re, a.im, b.re, b.im, 0.0]
            })
            .collect(),
    )?;
    let mut targets = Vec::with_capacity(2 * (n - 2));
    for j in 0..2 {
        for i in 0..n - 2 {
            targets.push(VectorField {
                m: 5,
                values: lambdas
                    .iter()
                    .zip(&mus)
                    .map(|(l, mu)| vec![0.0, 0.0, 0.0, 0.0, l[i] - mu[j]])
                    .collect(),
            });
        }
    }
    // ‖Σ c_i E_i‖ ≤ √2 ‖c‖, so ε/(2√2) keeps the step below ε/2.
    let budget = eps.scaled(0.5 / std::f64::consts::SQRT_2);
    let (c, cert) = avoid_k_maps(domain, &field, &targets, &budget, derive_seed(seed, 0x5e04))?;
    r.certificates.push(cert);
    r.h.par_iter_mut().zip(&c.values).for_each(|(m, x)| {
        let a = C64::new(x[0], x[1]);
        let b = C64::new(x[2], x[3]);
        m[(n - 2, n - 3)] = a;
        m[(n - 3, n - 2)] = a.conj();
        m[(n - 1, n - 3)] = b;
        m[(n - 3, n - 1)] = b.conj();
        m[(n - 2, n - 2)] += x[4];
        m[(n - 1, n - 1)] += x[4];
    });
    finish_separation(r, f, n - 3)
}

/// `½ [[1 − z, x + iy], [x − iy, 1 + z]]`.
pub fn bott_matrix(x: f64, y: f64, z: f64) -> Matrix {
    Matrix::from_row_major(
        2,
        2,
        vec![
            C64::new((1.0 - z) / 2.0, 0.0),
            C64::new(x / 2.0, y / 2.0),
            C64::new(x / 2.0, -y / 2.0),
            C64::new((1.0 + z) / 2.0, 0.0),
        ],
    )
}

/// The Bott projection sampled at the vertices of a mesh in the closed unit ball of `R^3`.
pub fn bott_field(domain: &Domain) -> Result<MatrixField> {
    let values = domain
        .vertices
        .iter()
        .enumerate()
        .map(|(v, p)| {
            if p.len() != 3 {
                return Err(Error::Precondition(format!("vertex {v} is not in R^3")));
            }
            if p.iter().map(|t| t * t).sum::<f64>().sqrt() > 1.0 + 1e-12 {
                return Err(Error::Precondition(format!(
                    "vertex {v} lies outside the unit ball"
                )));
            }
            Ok(bott_matrix(p[0], p[1], p[2]))
        })
        .collect::<Result<_>>()?;
    MatrixField::new(2, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_poly_two_by_two() {
        let x = Matrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        // (2 − λ)² − 1 = λ² − 4λ + 3
        let c = char_poly(&x);
        assert!(
            (c[0] - 3.0).abs() < 1e-14 && (c[1] + 4.0).abs() < 1e-14 && (c[2] - 1.0).abs() < 1e-14
        );
        let s = sturm_sequence(&x);
        assert!((s.eval(1, 0.5) - 1.5).abs() < 1e-14);
        assert!(s.eval(0, 1.0).abs() < 1e-14 && s.eval(0, 3.0).abs() < 1e-14);
    }

    #[test]
    fn bott_poles() {
        assert_eq!(bott_matrix(0.0, 0.0, 1.0), Matrix::diag_real(&[0.0, 1.0]));
        assert_eq!(bott_matrix(0.0, 0.0, -1.0), Matrix::diag_real(&[1.0, 0.0]));
    }

    #[test]
    fn interlacing_diag() {
        assert_eq!(
            interlacing_check(&Matrix::diag_real(&[3.0, 1.0])).unwrap(),
            0.0
        );
    }
}
