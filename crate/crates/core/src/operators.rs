//! Truncated operator fields: iterative column-by-column Hessenberg reduction and
//! the Krylov construction for a single cyclic matrix.
//!
//! An `N × N` matrix stands for the top-left corner of an operator on `ℓ²`
//! extended by zero. Entries past the support bound are exactly zero, so a bump
//! placed past the current support never interacts with existing data.

use crate::avoidance::{avoid_zero_operator, certify_ray, VectorField};
use crate::domain::{Domain, MatrixField, ToleranceField};
use crate::error::{Error, Result};
use crate::linalg::{
    complex_to_real, hermitian_eig, householder_annihilate, inner, vec_norm, Matrix, C64, ZERO,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorField {
    pub field: MatrixField,
    /// Rows and columns with index `≥ support` vanish.
    pub support: usize,
}

impl OperatorField {
    pub fn new(field: MatrixField, support: usize) -> Result<Self> {
        let n = field.n;
        if support > n {
            return Err(Error::Malformed(format!(
                "support {support} exceeds truncation {n}"
            )));
        }
        for (v, m) in field.values.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    if (i >= support || j >= support) && m[(i, j)].norm() > 1e-14 {
                        return Err(Error::Malformed(format!(
                            "vertex {v}: entry ({i}, {j}) lies outside the support bound {support}"
                        )));
                    }
                }
            }
        }
        Ok(OperatorField { field, support })
    }

    pub fn truncation(&self) -> usize {
        self.field.n
    }
}

// ---------------------------------------------------------------------------
// Cyclic vectors
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CyclicHessenberg {
    pub u: Matrix,
    pub h: Matrix,
    pub krylov_sigma_min: f64,
}

/// Orthonormalizes the Krylov family of `ξ` under `x`; `u* x u` is Hessenberg with positive subdiagonal.
pub fn cyclic_to_hessenberg(x: &Matrix, xi: &[C64]) -> Result<CyclicHessenberg> {
    let n = x.rows();
    if xi.len() != n || n == 0 {
        return Err(Error::Malformed(
            "cyclic vector length differs from matrix size".into(),
        ));
    }
    let xi_norm = vec_norm(xi);
    if xi_norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    // Krylov rank test on the normalized family.
    let mut krylov: Vec<Vec<C64>> = vec![xi.to_vec()];
    for _ in 1..n {
        let next = x.mul_vec(krylov.last().unwrap());
        krylov.push(next);
    }
    let gram = Matrix::from_fn(n, n, |i, j| inner(&krylov[i], &krylov[j]));
    let lmin = hermitian_eig(&gram.hermitian_part())?
        .values
        .last()
        .copied()
        .unwrap_or(0.0);
    let sigma_min = lmin.max(0.0).sqrt();
    let bound = 1e-8 * xi_norm * x.spectral_norm().max(1.0).powi(n as i32 - 1);
    if sigma_min <= bound {
        return Err(Error::NotCyclic(sigma_min));
    }
    let mut q: Vec<Vec<C64>> = vec![xi.iter().map(|z| z / xi_norm).collect()];
    for j in 1..n {
        let mut w = x.mul_vec(&q[j - 1]);
        for _ in 0..2 {
            for qi in &q {
                let c = inner(qi, &w);
                for (a, b) in w.iter_mut().zip(qi) {
                    *a -= c * b;
                }
            }
        }
        let nw = vec_norm(&w);
        if nw <= 1e-14 * x.spectral_norm().max(1.0) {
            return Err(Error::NotCyclic(nw));
        }
        q.push(w.into_iter().map(|z| z / nw).collect());
    }
    let u = Matrix::from_fn(n, n, |i, j| q[j][i]);
    let h = &(&u.adjoint() * x) * &u;
    Ok(CyclicHessenberg {
        u,
        h,
        krylov_sigma_min: sigma_min,
    })
}

// ---------------------------------------------------------------------------
// Iterative reduction
// ---------------------------------------------------------------------------

/// Measurements for one iteration `g^k → g^{k+1}` (with `k` 1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    /// Smallest `ε(x)/2^k` over the vertices.
    pub budget_min: f64,
    pub bump_applied: bool,
    /// Row of the bump in `h^k` (0-based), when applied.
    pub bump_row: Option<usize>,
    /// Certified distance of the column block from the closed negative `e_1` ray after the bump.
    pub ray_margin: f64,
    /// Largest `‖g^{k+1} − g^k‖ / (ε(x)/2^k)`.
    pub perturbation_ratio_max: f64,
    pub perturbation_max: f64,
    pub hermitian_residual_max: f64,
    pub rank_max: usize,
    pub unitarity_max: f64,
}

#[derive(Clone, Debug)]
pub struct IterationTrace {
    /// `g[k−1]`, `u[k−1]`, `h[k−1]` hold `g^k`, `u^k`, `h^k` for `k = 1..=K+1`.
    pub g: Vec<MatrixField>,
    pub u: Vec<MatrixField>,
    pub h: Vec<MatrixField>,
    pub steps: Vec<StepRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorReport {
    pub truncation: usize,
    pub support: usize,
    pub steps: usize,
    pub final_support: usize,
    pub step_records: Vec<StepRecord>,
    /// `freeze[k][l]` for iterates `k ≤ l` (0-based iterate indices).
    pub freeze_matrix: Vec<Vec<f64>>,
    pub freeze_max: f64,
    /// Columns of the final iterate that are Hessenberg with positive subdiagonal at every vertex.
    pub hessenberg_columns: usize,
    pub subdiag_min: f64,
    pub below_subdiag_max: f64,
    /// Largest `‖f − g‖ / ε(x)`.
    pub total_ratio_max: f64,
    pub total_perturbation_max: f64,
    pub total_hermitian_residual_max: f64,
    /// Largest `‖g^k‖ − ‖f‖ − ε` over iterates; nonpositive when the uniform bound holds.
    pub norm_excess_max: f64,
    /// Largest `‖h − u g u*‖` over iterates.
    pub consistency_max: f64,
    pub isometry_max: f64,
}

#[derive(Clone, Debug)]
pub struct OperatorReduction {
    pub trace: IterationTrace,
    /// Final `v = (u^{K+1})*`, so `h = v* g v`.
    pub v: MatrixField,
    pub g: MatrixField,
    pub h: MatrixField,
    pub report: OperatorReport,
}

fn numerical_support(field: &MatrixField) -> usize {
    let n = field.n;
    let mut s = 0;
    for m in &field.values {
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != ZERO {
                    s = s.max(i.max(j) + 1);
                }
            }
        }
    }
    s
}

fn numerical_rank(m: &Matrix) -> Result<usize> {
    let e = hermitian_eig(&m.hermitian_part())?;
    Ok(e.values.iter().filter(|l| l.abs() > 1e-12).count())
}

/// Runs `steps` column iterations; step `k` touches column `k−1` and perturbs by less than `ε/2^k`.
pub fn operator_reduce(
    domain: &Domain,
    f: &OperatorField,
    eps: &ToleranceField,
    steps: usize,
) -> Result<OperatorReduction> {
    let n = f.truncation();
    f.field.check_domain(domain)?;
    if eps.values.len() != domain.vertex_count() {
        return Err(Error::Malformed(
            "tolerance field length differs from vertex count".into(),
        ));
    }
    if steps + 2 + f.support > n {
        return Err(Error::Precondition(format!(
            "K = {steps} exceeds the headroom N − 2 − s = {}",
            n as i64 - 2 - f.support as i64
        )));
    }
    for (v, m) in f.field.values.iter().enumerate() {
        let r = m.hermitian_residual();
        if r > 1e-12 {
            return Err(Error::Precondition(format!(
                "vertex {v}: operator not self-adjoint (residual {r:e})"
            )));
        }
    }
    let nv = domain.vertex_count();
    let mut g = f.field.clone();
    let mut u = MatrixField {
        n,
        values: vec![Matrix::identity(n); nv],
    };
    let mut h = g.clone();
    let mut trace = IterationTrace {
        g: vec![g.clone()],
        u: vec![u.clone()],
        h: vec![h.clone()],
        steps: Vec::new(),
    };

    for k in 1..=steps {
        let col = k - 1;
        let budget = eps.scaled(0.5f64.powi(k as i32));
        let bump_eps = eps.scaled(0.5f64.powi(k as i32 + 1));
        let b_of = |h: &MatrixField| -> Vec<Vec<C64>> {
            h.values
                .iter()
                .map(|m| (k..n).map(|i| m[(i, col)]).collect())
                .collect()
        };
        let real_field = |b: &[Vec<C64>]| VectorField {
            m: 2 * (n - k),
            values: b.iter().map(|v| complex_to_real(v)).collect(),
        };
        let (_, margin0) = certify_ray(domain, &real_field(&b_of(&h)));
        let mut bump_row = None;
        let mut ray_margin = margin0;
        let mut new_g = g.clone();
        let mut new_h = h.clone();
        if margin0 < bump_eps.min() {
            // b′ drops the first coordinate of b; its support ends where h's does.
            let support = numerical_support(&h).max(k + 1) - (k + 1);
            let bprime: Vec<Vec<C64>> = h
                .values
                .iter()
                .map(|m| (k + 1..n).map(|i| m[(i, col)]).collect())
                .collect();
            let bump = avoid_zero_operator(domain, &bprime, &bump_eps, support)?;
            let row = k + 1 + bump.index;
            for v in 0..nv {
                let mut delta = Matrix::zeros(n, n);
                let t = C64::new(bump_eps.values[v], 0.0);
                delta[(row, col)] = t;
                delta[(col, row)] = t;
                new_h.values[v] = &new_h.values[v] + &delta;
                let dg = delta.conjugate_by(&u.values[v].adjoint());
                new_g.values[v] = &new_g.values[v] + &dg;
            }
            bump_row = Some(row);
            ray_margin = certify_ray(domain, &real_field(&b_of(&new_h))).1;
            if !(ray_margin > 0.0) {
                return Err(Error::CertificationFailure {
                    retries: 0,
                    best_margin: ray_margin,
                });
            }
        }
        // Reflection on rows/columns k.. sending b to ‖b‖ e_1.
        let bs = b_of(&new_h);
        let updated: Vec<(Matrix, Matrix)> = new_h
            .values
            .par_iter()
            .zip(&u.values)
            .zip(&bs)
            .map(|((hm, um), b)| {
                let (hd, r) = householder_annihilate(b)?;
                let w = Matrix::embed_lower(k, &hd.reflection);
                let mut h2 = hm.conjugate_by(&w);
                h2[(k, col)] = C64::new(r, 0.0);
                h2[(col, k)] = C64::new(r, 0.0);
                for i in k + 1..n {
                    h2[(i, col)] = ZERO;
                    h2[(col, i)] = ZERO;
                }
                Ok((h2, &w * um))
            })
            .collect::<Result<_>>()?;
        let (hs, us): (Vec<Matrix>, Vec<Matrix>) = updated.into_iter().unzip();
        let next_h = MatrixField { n, values: hs };
        let next_u = MatrixField { n, values: us };

        let mut rec = StepRecord {
            k,
            budget_min: budget.min(),
            bump_applied: bump_row.is_some(),
            bump_row,
            ray_margin,
            perturbation_ratio_max: 0.0,
            perturbation_max: 0.0,
            hermitian_residual_max: 0.0,
            rank_max: 0,
            unitarity_max: 0.0,
        };
        for v in 0..nv {
            let diff = &new_g.values[v] - &g.values[v];
            let norm = diff.spectral_norm();
            rec.perturbation_max = rec.perturbation_max.max(norm);
            rec.perturbation_ratio_max = rec.perturbation_ratio_max.max(norm / budget.values[v]);
            rec.hermitian_residual_max = rec.hermitian_residual_max.max(diff.hermitian_residual());
            rec.rank_max = rec.rank_max.max(numerical_rank(&diff)?);
            rec.unitarity_max = rec.unitarity_max.max(next_u.values[v].unitarity_residual());
        }
        g = new_g;
        h = next_h;
        u = next_u;
        trace.g.push(g.clone());
        trace.u.push(u.clone());
        trace.h.push(h.clone());
        trace.steps.push(rec);
    }

    let report = summarize(f, eps, &trace)?;
    let v = u.map(|m| m.adjoint());
    Ok(OperatorReduction {
        trace,
        v,
        g,
        h,
        report,
    })
}

fn summarize(
    f: &OperatorField,
    eps: &ToleranceField,
    trace: &IterationTrace,
) -> Result<OperatorReport> {
    let n = f.truncation();
    let steps = trace.steps.len();
    let (freeze_matrix, freeze_max) = column_freeze_matrix(trace);
    let last_h = trace.h.last().unwrap();
    let last_g = trace.g.last().unwrap();
    let last_u = trace.u.last().unwrap();

    let mut subdiag_min = f64::INFINITY;
    let mut below_max: f64 = 0.0;
    let mut hess_cols = n;
    for m in &last_h.values {
        let mut cols = 0;
        for j in 0..n.saturating_sub(1) {
            let sub = m[(j + 1, j)];
            let below = (j + 2..n).map(|i| m[(i, j)].norm()).fold(0.0, f64::max);
            if sub.re > 0.0 && sub.im.abs() <= 1e-12 && below <= 1e-10 {
                cols += 1;
                if j < steps {
                    subdiag_min = subdiag_min.min(sub.re);
                    below_max = below_max.max(below);
                }
            } else {
                break;
            }
        }
        hess_cols = hess_cols.min(cols);
    }
    let mut total_ratio_max: f64 = 0.0;
    let mut total_max: f64 = 0.0;
    let mut total_herm: f64 = 0.0;
    let mut isometry_max: f64 = 0.0;
    for (v, (fm, gm)) in f.field.values.iter().zip(&last_g.values).enumerate() {
        let d = gm - fm;
        let norm = d.spectral_norm();
        total_max = total_max.max(norm);
        total_ratio_max = total_ratio_max.max(norm / eps.values[v]);
        total_herm = total_herm.max(d.hermitian_residual());
        let vm = last_u.values[v].adjoint();
        isometry_max = isometry_max.max((&(&vm.adjoint() * &vm) - &Matrix::identity(n)).max_abs());
    }
    let mut norm_excess_max = f64::NEG_INFINITY;
    let mut consistency_max: f64 = 0.0;
    for ((gk, hk), uk) in trace.g.iter().zip(&trace.h).zip(&trace.u) {
        for (v, ((gm, hm), um)) in gk.values.iter().zip(&hk.values).zip(&uk.values).enumerate() {
            let bound = f.field.values[v].spectral_norm() + eps.values[v];
            norm_excess_max = norm_excess_max.max(gm.spectral_norm() - bound);
            consistency_max = consistency_max.max((hm - &gm.conjugate_by(um)).max_abs());
        }
    }
    Ok(OperatorReport {
        truncation: n,
        support: f.support,
        steps,
        final_support: numerical_support(last_h),
        step_records: trace.steps.clone(),
        freeze_matrix,
        freeze_max,
        hessenberg_columns: hess_cols,
        subdiag_min,
        below_subdiag_max: below_max,
        total_ratio_max,
        total_perturbation_max: total_max,
        total_hermitian_residual_max: total_herm,
        norm_excess_max,
        consistency_max,
        isometry_max,
    })
}

fn column_freeze_matrix(trace: &IterationTrace) -> (Vec<Vec<f64>>, f64) {
    let count = trace.h.len();
    let mut mat = vec![vec![0.0; count]; count];
    let mut max: f64 = 0.0;
    for k in 0..count {
        // Iterate `k` (0-based) has its first `k` columns settled.
        for l in k..count {
            let mut dev: f64 = 0.0;
            for (a, b) in trace.h[k].values.iter().zip(&trace.h[l].values) {
                let n = a.rows();
                for j in 0..k.min(n) {
                    for i in 0..n {
                        dev = dev.max((a[(i, j)] - b[(i, j)]).norm());
                    }
                }
            }
            mat[k][l] = dev;
            max = max.max(dev);
        }
    }
    (mat, max)
}

/// Largest change, across later iterates, of the columns each iterate has already settled.
pub fn column_freeze_check(trace: &IterationTrace) -> f64 {
    column_freeze_matrix(trace).1
}
