//! Certified general-position perturbations of piecewise-linear vector fields.
//!
//! A field is perturbed at the vertices by seeded random vectors. Every simplex
//! of the mesh is then certified exactly: the distance from its affine image to
//! the forbidden set is a small convex quadratic program solved by face
//! enumeration.

use crate::domain::{Domain, ToleranceField};
use crate::error::{Error, Result};
use crate::linalg::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of reseeded attempts after the unperturbed one.
pub const MAX_RETRIES: usize = 32;

/// Per-vertex real vectors in `R^m`, interpolated affinely.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub m: usize,
    pub values: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(m: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        for (v, x) in values.iter().enumerate() {
            if x.len() != m {
                return Err(Error::Malformed(format!(
                    "vertex {v}: expected a vector of length {m}"
                )));
            }
            if x.iter().any(|t| !t.is_finite()) {
                return Err(Error::Malformed(format!("vertex {v}: non-finite entry")));
            }
        }
        Ok(VectorField { m, values })
    }

    pub fn constant(domain: &Domain, x: &[f64]) -> Self {
        VectorField {
            m: x.len(),
            values: vec![x.to_vec(); domain.vertex_count()],
        }
    }

    fn check(&self, domain: &Domain) -> Result<()> {
        if self.values.len() != domain.vertex_count() {
            return Err(Error::Malformed(
                "vector field length differs from vertex count".into(),
            ));
        }
        Ok(())
    }

    /// Largest per-vertex Euclidean distance to `other`.
    pub fn max_distance(&self, other: &VectorField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max)
    }
}

/// Proof data that an interpolated map misses a forbidden set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceCertificate {
    pub global_margin: f64,
    pub seed: u64,
    pub retries: usize,
    pub per_simplex: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Exact minimum-norm oracles
// ---------------------------------------------------------------------------

const MAX_KKT: usize = 8;

/// Solves the `n×n` system `a x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `false` if it is numerically singular.
fn solve_dense(a: &mut [[f64; MAX_KKT]; MAX_KKT], b: &mut [f64; MAX_KKT], n: usize) -> bool {
    let mut scale: f64 = 1e-300;
    for row in a.iter().take(n) {
        for x in row.iter().take(n) {
            scale = scale.max(x.abs());
        }
    }
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if a[i][k].abs() > a[piv][k].abs() {
                piv = i;
            }
        }
        if a[piv][k].abs() <= 1e-13 * scale {
            return false;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k][j] * b[j];
        }
        b[k] = s / a[k][k];
    }
    true
}

/// Minimizes `‖Σ λ_i v_i + t e_1‖` over the simplex `λ` and, when `with_ray`, over `t ≥ 0`.
///
/// Every face (optionally with the ray generator) gives an equality-constrained
/// least-squares problem whose KKT system is solved directly; the best feasible
/// candidate is the global minimum.
fn min_norm_faces(vs: &[Vec<f64>], with_ray: bool) -> (f64, Vec<f64>, f64) {
    let k = vs.len();
    assert!(
        (1..=6).contains(&k),
        "simplex must have between 1 and 6 vertices"
    );
    let m = vs[0].len();
    // Gram matrix of the generators v_0..v_{k-1}, e_1.
    let mut gram = [[0.0f64; MAX_KKT]; MAX_KKT];
    for i in 0..k {
        for j in i..k {
            let d: f64 = vs[i].iter().zip(&vs[j]).map(|(x, y)| x * y).sum();
            gram[i][j] = d;
            gram[j][i] = d;
        }
        let e = if m > 0 { vs[i][0] } else { 0.0 };
        gram[i][k] = e;
        gram[k][i] = e;
    }
    gram[k][k] = 1.0;
    let mut best = (f64::INFINITY, vec![0.0; k], 0.0);
    let ray_options: &[bool] = if with_ray && m > 0 {
        &[false, true]
    } else {
        &[false]
    };
    let mut idx = [0usize; MAX_KKT];
    for mask in 1u32..(1u32 << k) {
        let mut nf = 0;
        for i in 0..k {
            if mask & (1 << i) != 0 {
                idx[nf] = i;
                nf += 1;
            }
        }
        for &use_t in ray_options {
            let q = nf + use_t as usize;
            if use_t {
                idx[nf] = k;
            }
            let sz = q + 1;
            let mut a = [[0.0f64; MAX_KKT]; MAX_KKT];
            let mut rhs = [0.0f64; MAX_KKT];
            for i in 0..q {
                for j in 0..q {
                    a[i][j] = 2.0 * gram[idx[i]][idx[j]];
                }
            }
            for i in 0..nf {
                a[i][q] = 1.0;
                a[q][i] = 1.0;
            }
            rhs[q] = 1.0;
            if !solve_dense(&mut a, &mut rhs, sz) {
                continue;
            }
            if rhs[..q].iter().any(|&t| t < -1e-12) {
                continue;
            }
            // Evaluate at the clamped, renormalized point so the value is attained.
            let mut lam = vec![0.0; k];
            for slot in 0..nf {
                lam[idx[slot]] = rhs[slot].max(0.0);
            }
            let s: f64 = lam.iter().sum();
            if s <= 0.0 {
                continue;
            }
            lam.iter_mut().for_each(|l| *l /= s);
            let t = if use_t { rhs[nf].max(0.0) } else { 0.0 };
            let val = value_at(vs, &lam, t);
            if val < best.0 {
                best = (val, lam, t);
            }
        }
    }
    best
}

fn value_at(vs: &[Vec<f64>], lam: &[f64], t: f64) -> f64 {
    let m = vs[0].len();
    let mut p = vec![0.0; m];
    for (v, &l) in vs.iter().zip(lam) {
        for (pi, vi) in p.iter_mut().zip(v) {
            *pi += l * vi;
        }
    }
    if m > 0 {
        p[0] += t;
    }
    norm(&p)
}

/// Exact minimum of `‖Σ λ_i v_i‖` over the standard simplex, with the minimizing `λ`.
pub fn min_norm_over_simplex(vs: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let (v, lam, _) = min_norm_faces(vs, false);
    (v, lam)
}

/// Distance from the convex hull of `vs` to the closed ray `{−s e_1 : s ≥ 0}`,
/// with the minimizing barycentric point and ray parameter.
pub fn ray_distance_over_simplex(vs: &[Vec<f64>]) -> (f64, Vec<f64>, f64) {
    min_norm_faces(vs, true)
}

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

fn gather(values: &[Vec<f64>], s: &[usize]) -> Vec<Vec<f64>> {
    s.iter().map(|&i| values[i].clone()).collect()
}

fn uncovered_vertices(domain: &Domain) -> Vec<usize> {
    let mut covered = vec![false; domain.vertex_count()];
    for s in &domain.simplices {
        for &i in s {
            covered[i] = true;
        }
    }
    (0..covered.len()).filter(|&i| !covered[i]).collect()
}

fn certify_with(domain: &Domain, per: impl Fn(&[usize]) -> f64 + Sync) -> (Vec<f64>, f64) {
    let per_simplex: Vec<f64> = domain.simplices.par_iter().map(|s| per(s)).collect();
    let mut global = per_simplex.iter().copied().fold(f64::INFINITY, f64::min);
    for v in uncovered_vertices(domain) {
        global = global.min(per(&[v]));
    }
    (per_simplex, global)
}

/// Per-simplex distance from the PL image of `g` to the origin.
pub fn certify_zero(domain: &Domain, g: &VectorField) -> (Vec<f64>, f64) {
    certify_with(domain, |s| min_norm_over_simplex(&gather(&g.values, s)).0)
}

/// Per-simplex minimum over targets of the distance between `g` and `h_i`.
pub fn certify_k_maps(
    domain: &Domain,
    g: &VectorField,
    targets: &[VectorField],
) -> (Vec<f64>, f64) {
    certify_with(domain, |s| {
        targets
            .iter()
            .map(|h| {
                let diff: Vec<Vec<f64>> = s
                    .iter()
                    .map(|&i| {
                        g.values[i]
                            .iter()
                            .zip(&h.values[i])
                            .map(|(a, b)| a - b)
                            .collect()
                    })
                    .collect();
                min_norm_over_simplex(&diff).0
            })
            .fold(f64::INFINITY, f64::min)
    })
}

/// Per-simplex distance from the PL image of `g` to the closed negative `e_1` ray.
pub fn certify_ray(domain: &Domain, g: &VectorField) -> (Vec<f64>, f64) {
    certify_with(domain, |s| {
        ray_distance_over_simplex(&gather(&g.values, s)).0
    })
}

// ---------------------------------------------------------------------------
// Perturbation
// ---------------------------------------------------------------------------

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a stream tag into a seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix(seed ^ splitmix(tag))
}

fn attempt_rng(seed: u64, attempt: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt as u64))
}

/// Standard normal sample by Box–Muller.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn unit_direction(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| normal(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform sample in the open ball of radius `r` in `R^m`.
fn ball_sample(rng: &mut ChaCha8Rng, m: usize, r: f64) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let dir = unit_direction(rng, m);
    let rad = r * rng.gen::<f64>().powf(1.0 / m as f64);
    dir.into_iter().map(|x| x * rad).collect()
}

/// Smallest certified margin accepted for a perturbation budget.
pub fn min_margin(budget: f64) -> f64 {
    (1e-6 * budget).max(1e-11)
}

#[derive(Clone, Copy)]
enum Mode {
    Ball,
    NormPreserving,
}

fn perturb(f: &VectorField, radius: f64, rng: &mut ChaCha8Rng, mode: Mode) -> VectorField {
    let m = f.m;
    let values = f
        .values
        .iter()
        .map(|x| match mode {
            Mode::Ball => {
                let d = ball_sample(rng, m, radius);
                x.iter().zip(d).map(|(a, b)| a + b).collect()
            }
            Mode::NormPreserving => {
                let r = norm(x);
                if r == 0.0 || m < 2 {
                    let d = ball_sample(rng, m, radius);
                    return x.iter().zip(d).map(|(a, b)| a + b).collect();
                }
                // Tangential bump t ⟂ β with |t| < radius/r keeps |r β' − r β| < radius.
                let beta: Vec<f64> = x.iter().map(|a| a / r).collect();
                let mut t = unit_direction(rng, m);
                let dot: f64 = t.iter().zip(&beta).map(|(a, b)| a * b).sum();
                t.iter_mut().zip(&beta).for_each(|(a, b)| *a -= dot * b);
                let tn = norm(&t);
                let rad = (radius / r) * rng.gen::<f64>().powf(1.0 / (m - 1) as f64);
                let mut nb: Vec<f64> = beta
                    .iter()
                    .zip(&t)
                    .map(|(b, ti)| b + ti / tn.max(1e-300) * rad)
                    .collect();
                let nn = norm(&nb);
                nb.iter_mut().for_each(|a| *a *= r / nn);
                nb
            }
        })
        .collect();
    VectorField { m, values }
}

fn run_avoidance(
    domain: &Domain,
    f: &VectorField,
    eps: &ToleranceField,
    seed: u64,
    mode: Mode,
    certify: impl Fn(&VectorField) -> (Vec<f64>, f64),
) -> Result<(VectorField, AvoidanceCertificate)> {
    f.check(domain)?;
    if eps.values.len() != domain.vertex_count() {
        return Err(Error::Malformed(
            "tolerance field length differs from vertex count".into(),
        ));
    }
    let budget = eps.min();
    let threshold = min_margin(budget);
    let mut best_margin = f64::NEG_INFINITY;
    for attempt in 0..=MAX_RETRIES {
        let g = if attempt == 0 {
            f.clone()
        } else {
            let mut rng = attempt_rng(seed, attempt);
            perturb(f, budget / 2f64.powi(attempt as i32), &mut rng, mode)
        };
        let within_budget = g
            .values
            .iter()
            .zip(&f.values)
            .zip(&eps.values)
            .all(|((a, b), &e)| dist(a, b) < e);
        if !within_budget {
            continue;
        }
        let (per_simplex, global_margin) = certify(&g);
        if global_margin >= threshold {
            let cert = AvoidanceCertificate {
                global_margin,
                seed,
                retries: attempt,
                per_simplex,
            };
            return Ok((g, cert));
        }
        best_margin = best_margin.max(global_margin);
    }
    Err(Error::CertificationFailure {
        retries: MAX_RETRIES,
        best_margin,
    })
}

/// Perturbs `f` within `eps` so that its PL interpolation never vanishes.
pub fn avoid_zero(
    domain: &Domain,
    f: &VectorField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<(VectorField, AvoidanceCertificate)> {
    if domain.dim >= f.m {
        return Err(Error::HypothesisViolation {
            d: domain.dim,
            m: f.m,
        });
    }
    run_avoidance(domain, f, eps, seed, Mode::Ball, |g| {
        certify_zero(domain, g)
    })
}

/// Perturbs `f` within `eps` so that it never meets any of the `targets`.
pub fn avoid_k_maps(
    domain: &Domain,
    f: &VectorField,
    targets: &[VectorField],
    eps: &ToleranceField,
    seed: u64,
) -> Result<(VectorField, AvoidanceCertificate)> {
    if domain.dim >= f.m {
        return Err(Error::HypothesisViolation {
            d: domain.dim,
            m: f.m,
        });
    }
    for h in targets {
        h.check(domain)?;
        if h.m != f.m {
            return Err(Error::Malformed(
                "target dimension differs from field dimension".into(),
            ));
        }
    }
    run_avoidance(domain, f, eps, seed, Mode::Ball, |g| {
        certify_k_maps(domain, g, targets)
    })
}

/// Perturbs the direction of `f` within `eps`, keeping vertex norms, so that the PL
/// interpolation avoids the closed ray `{−s e_1 : s ≥ 0}`.
pub fn avoid_ray(
    domain: &Domain,
    f: &VectorField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<(VectorField, AvoidanceCertificate)> {
    if domain.dim + 2 > f.m {
        return Err(Error::HypothesisViolation {
            d: domain.dim,
            m: f.m,
        });
    }
    run_avoidance(domain, f, eps, seed, Mode::NormPreserving, |g| {
        certify_ray(domain, g)
    })
}

/// Result of the sequence-space bump.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBump {
    pub g: Vec<Vec<C64>>,
    /// 0-based index of the bumped coordinate.
    pub index: usize,
    /// Smallest real part of the bumped coordinate over all simplices.
    pub margin: f64,
}

/// Adds `ε(x) e_j` at the first index `j` beyond the support bound.
pub fn avoid_zero_operator(
    domain: &Domain,
    f: &[Vec<C64>],
    eps: &ToleranceField,
    support: usize,
) -> Result<OperatorBump> {
    let size = f.first().map_or(0, |v| v.len());
    if support >= size {
        return Err(Error::NoFreeIndex { support, size });
    }
    if f.len() != domain.vertex_count() || eps.values.len() != f.len() {
        return Err(Error::Malformed(
            "operator column field length differs from vertex count".into(),
        ));
    }
    let j = support;
    let g: Vec<Vec<C64>> = f
        .iter()
        .zip(&eps.values)
        .map(|(v, &e)| {
            let mut w = v.clone();
            w[j] += e;
            w
        })
        .collect();
    // The coordinate is affine on each simplex, so its minimum sits at a vertex.
    let coord = |i: usize| g[i][j].re;
    let mut margin = domain
        .simplices
        .iter()
        .map(|s| s.iter().map(|&i| coord(i)).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    for v in uncovered_vertices(domain) {
        margin = margin.min(coord(v));
    }
    if !(margin > 0.0) {
        return Err(Error::CertificationFailure {
            retries: 0,
            best_margin: margin,
        });
    }
    Ok(OperatorBump {
        g,
        index: j,
        margin,
    })
}
