//! Continuous Hessenberg reduction of matrix fields and the derived structure decompositions.

use crate::avoidance::{avoid_ray, avoid_zero, derive_seed, AvoidanceCertificate, VectorField};
use crate::domain::{audit_continuity, ContinuityAudit, Domain, MatrixField, ToleranceField};
use crate::error::{Error, Result};
use crate::linalg::{
    classify_h, cluster_sizes, default_tol_zero, givens_annihilate, hermitian_eig,
    householder_annihilate, HFormDescriptor, Matrix, C64, DEFAULT_TOL_POS, ZERO,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Size of the uncontrolled trailing corner for a domain of dimension `d`.
pub fn corner_size(d: usize) -> usize {
    match d {
        0 | 1 => 0,
        2 | 3 => 2,
        _ => d.div_ceil(2) + 1,
    }
}

/// Output of a reduction: `h = u g u*` with `h` in `H_n^k` at every vertex.
#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub g: MatrixField,
    pub u: MatrixField,
    pub h: MatrixField,
    pub k_achieved: usize,
    pub c: usize,
    /// Per-vertex `‖g − f‖`.
    pub perturbation: Vec<f64>,
    pub perturbation_max: f64,
    pub u_audit: ContinuityAudit,
    pub h_audit: ContinuityAudit,
    pub certificates: Vec<AvoidanceCertificate>,
    /// Largest relative residual of `u_0 b = (‖b‖, 0, …)` over all steps and vertices.
    pub householder_residual: f64,
    pub descriptors: Vec<HFormDescriptor>,
}

/// Measured invariants of a reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionChecks {
    pub unitarity_max: f64,
    pub hermitian_perturbation_max: f64,
    pub consistency_max: f64,
    pub budget_ok: bool,
    pub h_member: bool,
    pub violations: Vec<String>,
}

impl ReductionChecks {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl ReductionResult {
    /// Recomputes every per-vertex invariant against the input `f` and budget `eps`.
    pub fn check(&self, f: &MatrixField, eps: &ToleranceField) -> ReductionChecks {
        check_triple(f, &self.g, &self.u, &self.h, self.k_achieved, eps, 1.0)
    }
}

/// Verifies `(g, u, h)` against `f`; tolerances are multiplied by `tol_scale`.
pub fn check_triple(
    f: &MatrixField,
    g: &MatrixField,
    u: &MatrixField,
    h: &MatrixField,
    k: usize,
    eps: &ToleranceField,
    tol_scale: f64,
) -> ReductionChecks {
    let mut violations = Vec::new();
    let mut unitarity_max: f64 = 0.0;
    let mut hermitian_perturbation_max: f64 = 0.0;
    let mut consistency_max: f64 = 0.0;
    let mut budget_ok = true;
    let mut h_member = true;
    for v in 0..f.values.len() {
        let (fv, gv, uv, hv) = (&f.values[v], &g.values[v], &u.values[v], &h.values[v]);
        let ur = uv.unitarity_residual();
        unitarity_max = unitarity_max.max(ur);
        if ur > 1e-10 * tol_scale {
            violations.push(format!("vertex {v}: u not unitary (residual {ur:e})"));
        }
        let delta = gv - fv;
        let hr = delta.hermitian_residual();
        hermitian_perturbation_max = hermitian_perturbation_max.max(hr);
        if hr > 1e-12 * tol_scale {
            violations.push(format!("vertex {v}: g - f not Hermitian (residual {hr:e})"));
        }
        let pn = delta.spectral_norm();
        if !(pn < eps.values[v]) {
            budget_ok = false;
            violations.push(format!(
                "vertex {v}: perturbation {pn:e} not below eps {:e}",
                eps.values[v]
            ));
        }
        let cr = (hv - &gv.conjugate_by(uv)).norm_fro() / (1.0 + gv.norm_fro());
        consistency_max = consistency_max.max(cr);
        if cr > 1e-10 * tol_scale {
            violations.push(format!(
                "vertex {v}: h differs from u g u* (relative {cr:e})"
            ));
        }
        let desc = classify_h(
            hv,
            k,
            default_tol_zero(hv) * tol_scale,
            DEFAULT_TOL_POS / tol_scale,
        );
        if !desc.is_member() {
            h_member = false;
            violations.push(format!(
                "vertex {v}: h not in H_n^{k} (zero_max {:e}, subdiag_min {:?})",
                desc.zero_max, desc.subdiag_min
            ));
        }
    }
    ReductionChecks {
        unitarity_max,
        hermitian_perturbation_max,
        consistency_max,
        budget_ok,
        h_member,
        violations,
    }
}

/// Column-by-column state of a running reduction.
pub(crate) struct Reducer<'a> {
    pub domain: &'a Domain,
    pub eps: &'a ToleranceField,
    pub seed: u64,
    pub n: usize,
    pub h: Vec<Matrix>,
    pub u: Vec<Matrix>,
    pub certificates: Vec<AvoidanceCertificate>,
    pub householder_residual: f64,
}

fn pack(entries: &[C64]) -> Vec<f64> {
    entries.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn unpack(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|c| C64::new(c[0], c[1])).collect()
}

impl<'a> Reducer<'a> {
    pub fn new(
        domain: &'a Domain,
        f: &MatrixField,
        eps: &'a ToleranceField,
        seed: u64,
    ) -> Result<Self> {
        f.check_domain(domain)?;
        if eps.values.len() != domain.vertex_count() {
            return Err(Error::Malformed(
                "tolerance field length differs from vertex count".into(),
            ));
        }
        let n = f.n;
        Ok(Reducer {
            domain,
            eps,
            seed,
            n,
            h: f.values.clone(),
            u: vec![Matrix::identity(n); f.values.len()],
            certificates: Vec::new(),
            householder_residual: 0.0,
        })
    }

    /// Entries `h[r][p]` for `r ∈ rows`, packed as real vectors.
    pub fn column_field(&self, p: usize, r0: usize, r1: usize) -> VectorField {
        let values = self
            .h
            .iter()
            .map(|m| pack(&(r0..r1).map(|r| m[(r, p)]).collect::<Vec<_>>()))
            .collect();
        VectorField {
            m: 2 * (r1 - r0),
            values,
        }
    }

    /// Replaces `h[r0..][p]` by `new` and mirrors the change into row `p`, a self-adjoint update.
    pub fn set_column(&mut self, p: usize, r0: usize, new: &VectorField) {
        self.h.par_iter_mut().zip(&new.values).for_each(|(m, x)| {
            for (i, z) in unpack(x).into_iter().enumerate() {
                let r = r0 + i;
                let delta = z - m[(r, p)];
                m[(r, p)] = z;
                m[(p, r)] += delta.conj();
            }
        });
    }

    /// `h ← U h U*`, `u ← U u` per vertex.
    pub fn conjugate(&mut self, us: &[Matrix]) {
        self.h
            .par_iter_mut()
            .zip(self.u.par_iter_mut())
            .zip(us)
            .for_each(|((h, u), w)| {
                *h = h.conjugate_by(w);
                *u = w * &*u;
            });
    }

    fn step_eps(&self, frac: f64) -> ToleranceField {
        self.eps.scaled(frac)
    }

    /// Householder step on column `p`: zero avoidance, ray avoidance, reflection.
    pub fn householder_column(&mut self, p: usize, frac: f64) -> Result<()> {
        let n = self.n;
        let b = self.column_field(p, p + 1, n);
        let budget = self.step_eps(frac);
        let (b1, c1) = avoid_zero(
            self.domain,
            &b,
            &budget,
            derive_seed(self.seed, 2 * p as u64),
        )?;
        let (b2, c2) = avoid_ray(
            self.domain,
            &b1,
            &budget,
            derive_seed(self.seed, 2 * p as u64 + 1),
        )?;
        self.certificates.push(c1);
        self.certificates.push(c2);
        self.set_column(p, p + 1, &b2);
        let mut us = Vec::with_capacity(b2.values.len());
        let mut res: f64 = 0.0;
        for x in &b2.values {
            let bc = unpack(x);
            let (hd, r) = householder_annihilate(&bc)?;
            let rb = hd.reflection.mul_vec(&bc);
            let err = rb
                .iter()
                .enumerate()
                .map(|(i, z)| if i == 0 { (z - r).norm() } else { z.norm() })
                .fold(0.0, f64::max);
            res = res.max(err / r.max(1.0));
            us.push(Matrix::embed_lower(p + 1, &hd.reflection));
        }
        self.householder_residual = self.householder_residual.max(res);
        self.conjugate(&us);
        self.clean_column(p);
        Ok(())
    }

    /// Forces the exact `H` shape of column `p`: real subdiagonal, zeros below.
    fn clean_column(&mut self, p: usize) {
        let n = self.n;
        self.h.par_iter_mut().for_each(|m| {
            let s = m[(p + 1, p)];
            m[(p + 1, p)] = C64::new(s.norm(), 0.0);
            for i in p + 2..n {
                m[(i, p)] = ZERO;
            }
        });
    }

    /// Givens step on the pair `(h[n−2][n−3], h[n−1][n−3])`.
    pub fn givens_last_pair(&mut self, frac: f64) -> Result<()> {
        let n = self.n;
        let p = n - 3;
        let b = self.column_field(p, n - 2, n);
        let (b1, c1) = avoid_zero(
            self.domain,
            &b,
            &self.step_eps(frac),
            derive_seed(self.seed, 0x6976),
        )?;
        self.certificates.push(c1);
        self.set_column(p, n - 2, &b1);
        let us: Vec<Matrix> = b1
            .values
            .iter()
            .map(|x| {
                let z = unpack(x);
                givens_annihilate(z[0], z[1]).map(|g| Matrix::embed_lower(n - 2, &g))
            })
            .collect::<Result<_>>()?;
        self.conjugate(&us);
        self.clean_column(p);
        Ok(())
    }

    /// Makes `h[n−1][n−2]` positive: zero avoidance then a diagonal phase.
    pub fn phase_last_entry(&mut self, frac: f64) -> Result<()> {
        let n = self.n;
        let b = self.column_field(n - 2, n - 1, n);
        let (b1, c1) = avoid_zero(
            self.domain,
            &b,
            &self.step_eps(frac),
            derive_seed(self.seed, 0x7068),
        )?;
        self.certificates.push(c1);
        self.set_column(n - 2, n - 1, &b1);
        let us: Vec<Matrix> = b1
            .values
            .iter()
            .map(|x| {
                let z = C64::new(x[0], x[1]);
                let mut d = Matrix::identity(n);
                d[(n - 1, n - 1)] = z.norm() / z;
                d
            })
            .collect();
        self.conjugate(&us);
        self.clean_column(n - 2);
        Ok(())
    }

    /// Default Householder pass over the first `k` columns.
    pub fn default_columns(&mut self, k: usize) -> Result<()> {
        let frac = 1.0 / (2.0 * self.n as f64);
        for p in 0..k {
            let m = 2 * (self.n - p - 1);
            if self.domain.dim + 2 > m {
                return Err(Error::InvariantViolation(format!(
                    "column {p} needs d <= {} but d = {}",
                    m.saturating_sub(2),
                    self.domain.dim
                )));
            }
            self.householder_column(p, frac)?;
        }
        Ok(())
    }

    pub fn finish(self, f: &MatrixField, k: usize, c: usize) -> ReductionResult {
        let n = self.n;
        let g_values: Vec<Matrix> = self
            .h
            .par_iter()
            .zip(&self.u)
            .zip(&f.values)
            .map(|((h, u), fv)| {
                let g = &(&u.adjoint() * h) * u;
                let delta = (&g - fv).hermitian_part();
                fv + &delta
            })
            .collect();
        let perturbation: Vec<f64> = g_values
            .par_iter()
            .zip(&f.values)
            .map(|(g, fv)| (g - fv).hermitian_norm())
            .collect();
        let perturbation_max = perturbation.iter().copied().fold(0.0, f64::max);
        let g = MatrixField {
            n,
            values: g_values,
        };
        let u = MatrixField { n, values: self.u };
        let h = MatrixField { n, values: self.h };
        let descriptors = h
            .values
            .iter()
            .map(|m| classify_h(m, k, default_tol_zero(m), DEFAULT_TOL_POS))
            .collect();
        ReductionResult {
            u_audit: audit_continuity(self.domain, &u),
            h_audit: audit_continuity(self.domain, &h),
            g,
            u,
            h,
            k_achieved: k,
            c,
            perturbation,
            perturbation_max,
            certificates: self.certificates,
            householder_residual: self.householder_residual,
            descriptors,
        }
    }
}

/// Runs the Householder pass on exactly `k` columns with budget `ε/(2n)` per avoidance.
pub fn reduce_columns(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    seed: u64,
    k: usize,
) -> Result<ReductionResult> {
    let mut r = Reducer::new(domain, f, eps, seed)?;
    r.default_columns(k)?;
    let c = f.n - k.min(f.n);
    Ok(r.finish(f, k, c))
}

/// Reduction into `H_n^k` with `k = n − ⌈d/2⌉ − 1` (identity reduction when `k ≤ 0`).
pub fn hessenberg_reduce_default(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<ReductionResult> {
    let n = f.n as i64;
    let c = domain.dim.div_ceil(2) as i64 + 1;
    let k = (n - c).max(0) as usize;
    let mut res = reduce_columns(domain, f, eps, seed, k)?;
    res.c = c.min(n) as usize;
    Ok(res)
}

/// Reduction into `H_n^{n−2}` for domains of dimension at most 3.
pub fn hessenberg_reduce_dim3(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<ReductionResult> {
    let r = dim3_reducer(domain, f, eps, seed)?;
    let k = f.n.saturating_sub(2);
    Ok(r.finish(f, k, f.n - k))
}

pub(crate) fn dim3_reducer<'a>(
    domain: &'a Domain,
    f: &MatrixField,
    eps: &'a ToleranceField,
    seed: u64,
) -> Result<Reducer<'a>> {
    if domain.dim > 3 {
        return Err(Error::Precondition(format!(
            "dim3 reduction needs d <= 3, got {}",
            domain.dim
        )));
    }
    let n = f.n;
    let mut r = Reducer::new(domain, f, eps, seed)?;
    if n >= 3 {
        r.default_columns(n - 3)?;
        r.givens_last_pair(1.0 / n as f64)?;
    }
    Ok(r)
}

/// Reduction into `H_n^n` for domains of dimension at most 1.
pub fn hessenberg_reduce_dim1(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<ReductionResult> {
    if domain.dim > 1 {
        return Err(Error::Precondition(format!(
            "dim1 reduction needs d <= 1, got {}",
            domain.dim
        )));
    }
    let n = f.n;
    let mut r = dim3_reducer(domain, f, eps, seed)?;
    if n >= 2 {
        r.phase_last_entry(1.0 / n as f64)?;
    }
    Ok(r.finish(f, n, 0))
}

/// Dispatches on the domain dimension; the result lies in `H_n^{n−c}`.
pub fn hessenberg_summary(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    seed: u64,
) -> Result<ReductionResult> {
    let d = domain.dim;
    let mut res = match d {
        0 | 1 => hessenberg_reduce_dim1(domain, f, eps, seed)?,
        2 | 3 => hessenberg_reduce_dim3(domain, f, eps, seed)?,
        _ => hessenberg_reduce_default(domain, f, eps, seed)?,
    };
    let c = corner_size(d).min(f.n);
    res.c = c;
    Ok(res)
}

// ---------------------------------------------------------------------------
// Structure decompositions
// ---------------------------------------------------------------------------

/// Shape of the low-rank correction in the structure decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QMode {
    Rank1Positive,
    Rank1Negative,
    Rank2Traceless,
}

impl std::str::FromStr for QMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank1-positive" => Ok(QMode::Rank1Positive),
            "rank1-negative" => Ok(QMode::Rank1Negative),
            "rank2-traceless" => Ok(QMode::Rank2Traceless),
            _ => Err(Error::Malformed(format!("unknown q mode {s:?}"))),
        }
    }
}

/// `g = Σ λ_i p_i + r + q` with `g` the reduced Hessenberg field.
#[derive(Clone, Debug)]
pub struct StrucDecomposition {
    pub u: MatrixField,
    pub g: MatrixField,
    pub r: MatrixField,
    pub q: MatrixField,
    /// `p[i]` is the field of the `i`-th rank-one spectral projection.
    pub p: Vec<MatrixField>,
    /// `lambda[v][i]`, strictly decreasing in `i`.
    pub lambda: Vec<Vec<f64>>,
    pub q_mode: QMode,
    pub k: usize,
    pub c: usize,
    pub mu: Vec<f64>,
    pub report: StrucReport,
}

/// Measured invariants of a structure decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrucReport {
    pub reconstruction_max: f64,
    pub orthogonality_max: f64,
    pub r_orthogonality_max: f64,
    pub projection_sum_max: f64,
    pub min_lambda_gap: f64,
    /// Largest `‖q‖ / (‖f‖ + ε)`.
    pub q_norm_ratio_max: f64,
    /// Largest `‖q‖ / (√2 (‖f‖ + ε))`, for comparison with the rank-one bound.
    pub q_norm_ratio_sqrt2_max: f64,
    pub rank_checked_vertices: usize,
    pub perturbation_max: f64,
    pub violations: Vec<String>,
}

/// Splits the reduced field into spectral projections, a trailing corner and a low-rank term.
pub fn struc_decompose(
    domain: &Domain,
    f: &MatrixField,
    eps: &ToleranceField,
    q_mode: QMode,
    seed: u64,
) -> Result<StrucDecomposition> {
    let n = f.n;
    let c = domain.dim.div_ceil(2) + 1;
    if n <= c {
        return Err(Error::Precondition(format!(
            "structure decomposition needs n > c = {c}, got n = {n}"
        )));
    }
    let herm = f.max_hermitian_residual();
    if herm > 1e-10 * (1.0 + f.values.iter().map(|m| m.norm_fro()).fold(0.0, f64::max)) {
        return Err(Error::NotHermitian(herm));
    }
    let k = n - c;
    let red = reduce_columns(domain, f, eps, seed, k)?;
    let nv = f.values.len();

    let mut q_vals = Vec::with_capacity(nv);
    let mut r_vals = Vec::with_capacity(nv);
    let mut p_vals: Vec<Vec<Matrix>> = vec![Vec::with_capacity(nv); k];
    let mut lambda = Vec::with_capacity(nv);
    let mut mus = Vec::with_capacity(nv);
    let mut rep = StrucReport {
        reconstruction_max: 0.0,
        orthogonality_max: 0.0,
        r_orthogonality_max: 0.0,
        projection_sum_max: 0.0,
        min_lambda_gap: f64::INFINITY,
        q_norm_ratio_max: 0.0,
        q_norm_ratio_sqrt2_max: 0.0,
        rank_checked_vertices: 0,
        perturbation_max: 0.0,
        violations: Vec::new(),
    };
    let mut lead_sum = Matrix::zeros(n, n);
    for i in 0..k {
        lead_sum[(i, i)] = C64::new(1.0, 0.0);
    }
    for v in 0..nv {
        // Symmetrize away roundoff so the blocks are exactly Hermitian.
        let g = red.h.values[v].hermitian_part();
        let mu = g[(k, k - 1)].re;
        mus.push(mu);
        let mut q = Matrix::zeros(n, n);
        let (a, b) = match q_mode {
            QMode::Rank1Positive => (mu, mu),
            QMode::Rank1Negative => (-mu, -mu),
            QMode::Rank2Traceless => (0.0, 0.0),
        };
        q[(k - 1, k - 1)] = C64::new(a, 0.0);
        q[(k, k)] = C64::new(b, 0.0);
        q[(k - 1, k)] = C64::new(mu, 0.0);
        q[(k, k - 1)] = C64::new(mu, 0.0);
        let gq = &g - &q;
        let hk = gq.block(0, k, 0, k);
        let mut r = Matrix::zeros(n, n);
        r.set_block(k, k, &gq.block(k, n, k, n));
        let eig = hermitian_eig(&hk)?;
        let mut ps = Vec::with_capacity(k);
        for i in 0..k {
            let col = eig.vectors.column(i);
            let mut pm = Matrix::zeros(n, n);
            for a in 0..k {
                for b in 0..k {
                    pm[(a, b)] = col[a] * col[b].conj();
                }
            }
            ps.push(pm);
        }
        for w in eig.values.windows(2) {
            rep.min_lambda_gap = rep.min_lambda_gap.min(w[0] - w[1]);
        }
        // Reconstruction and orthogonality.
        let mut recon = &r + &q;
        let mut psum = Matrix::zeros(n, n);
        for (i, pm) in ps.iter().enumerate() {
            recon = &recon + &pm.scale_real(eig.values[i]);
            psum = &psum + pm;
            rep.r_orthogonality_max = rep.r_orthogonality_max.max((pm * &r).norm_fro());
            for (j, pj) in ps.iter().enumerate() {
                let prod = pm * pj;
                let target = if i == j {
                    pm.clone()
                } else {
                    Matrix::zeros(n, n)
                };
                rep.orthogonality_max = rep.orthogonality_max.max((&prod - &target).norm_fro());
            }
        }
        rep.reconstruction_max = rep.reconstruction_max.max((&recon - &g).norm_fro());
        rep.projection_sum_max = rep.projection_sum_max.max((&psum - &lead_sum).norm_fro());
        // Norm bound and rank claims.
        let qn = q.hermitian_norm();
        let fe = f.values[v].spectral_norm() + eps.values[v];
        rep.q_norm_ratio_max = rep.q_norm_ratio_max.max(qn / fe);
        rep.q_norm_ratio_sqrt2_max = rep
            .q_norm_ratio_sqrt2_max
            .max(qn / (std::f64::consts::SQRT_2 * fe));
        let bound = match q_mode {
            QMode::Rank2Traceless => fe,
            _ => 2.0 * fe,
        };
        if qn > bound {
            rep.violations
                .push(format!("vertex {v}: ‖q‖ = {qn:e} exceeds {bound:e}"));
        }
        if mu.abs() > DEFAULT_TOL_POS {
            rep.rank_checked_vertices += 1;
            let qe = hermitian_eig(&q)?;
            let tol = 1e-9 * (1.0 + qn);
            let pos = qe.values.iter().filter(|&&x| x > tol).count();
            let neg = qe.values.iter().filter(|&&x| x < -tol).count();
            let ok = match q_mode {
                QMode::Rank1Positive => pos == 1 && neg == 0,
                QMode::Rank1Negative => pos == 0 && neg == 1,
                QMode::Rank2Traceless => pos == 1 && neg == 1 && q.trace().norm() <= tol,
            };
            if !ok {
                rep.violations
                    .push(format!("vertex {v}: q has inertia (+{pos}, -{neg})"));
            }
        }
        lambda.push(eig.values.clone());
        for (i, pm) in ps.into_iter().enumerate() {
            p_vals[i].push(pm);
        }
        q_vals.push(q);
        r_vals.push(r);
    }
    rep.perturbation_max = red.perturbation_max;
    if !(rep.min_lambda_gap > 0.0) {
        rep.violations.push(format!(
            "eigenvalues of the leading block not distinct (gap {:e})",
            rep.min_lambda_gap
        ));
    }
    for (name, val, tol) in [
        ("reconstruction", rep.reconstruction_max, 1e-9),
        ("orthogonality", rep.orthogonality_max, 1e-9),
        ("r orthogonality", rep.r_orthogonality_max, 1e-9),
        ("projection sum", rep.projection_sum_max, 1e-9),
    ] {
        if val > tol {
            rep.violations
                .push(format!("{name} residual {val:e} exceeds {tol:e}"));
        }
    }
    Ok(StrucDecomposition {
        u: red.u,
        g: red.h,
        r: MatrixField { n, values: r_vals },
        q: MatrixField { n, values: q_vals },
        p: p_vals
            .into_iter()
            .map(|values| MatrixField { n, values })
            .collect(),
        lambda,
        q_mode,
        k,
        c,
        mu: mus,
        report: rep,
    })
}

/// Whether the last subdiagonal entry splits the reduced matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Split,
    Unsplit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strucdim3Report {
    pub labels: Vec<SplitLabel>,
    /// Smallest `|h_{n,n−1}|` over unsplit vertices: the open set persists under smaller perturbations.
    pub unsplit_witness: Option<f64>,
    /// Smallest eigenvalue gap of `h` over unsplit vertices.
    pub unsplit_min_gap: Option<f64>,
    /// Smallest eigenvalue gap of the leading `(n−1)`-block over split vertices.
    pub split_min_gap: Option<f64>,
    pub violations: Vec<String>,
}

/// Labels each vertex of a `H_n^{n−2}` reduction as split or unsplit and checks the eigenvalue claims.
pub fn strucdim3_classify(result: &ReductionResult) -> Result<Strucdim3Report> {
    let n = result.h.n;
    let mut rep = Strucdim3Report {
        labels: Vec::new(),
        unsplit_witness: None,
        unsplit_min_gap: None,
        split_min_gap: None,
        violations: Vec::new(),
    };
    let fold = |acc: Option<f64>, x: f64| Some(acc.map_or(x, |a: f64| a.min(x)));
    let min_gap = |vals: &[f64]| {
        vals.windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    };
    for (v, h) in result.h.values.iter().enumerate() {
        if n < 2 {
            rep.labels.push(SplitLabel::Unsplit);
            continue;
        }
        let desc = classify_h(h, n.saturating_sub(2), default_tol_zero(h), DEFAULT_TOL_POS);
        if !desc.is_member() {
            rep.violations
                .push(format!("vertex {v}: input not in H_n^(n-2)"));
        }
        let hh = h.hermitian_part();
        let tol = 1e-7 * (1.0 + hh.norm_fro());
        let sub = h[(n - 1, n - 2)].norm();
        if sub > DEFAULT_TOL_POS {
            rep.labels.push(SplitLabel::Unsplit);
            rep.unsplit_witness = fold(rep.unsplit_witness, sub);
            let e = hermitian_eig(&hh)?;
            let gap = min_gap(&e.values);
            rep.unsplit_min_gap = fold(rep.unsplit_min_gap, gap);
            if cluster_sizes(&e.values, tol).len() != n {
                rep.violations
                    .push(format!("vertex {v}: unsplit but eigenvalues not distinct"));
            }
        } else {
            rep.labels.push(SplitLabel::Split);
            let lead = hh.block(0, n - 1, 0, n - 1);
            let e = hermitian_eig(&lead)?;
            let gap = min_gap(&e.values);
            rep.split_min_gap = fold(rep.split_min_gap, gap);
            if cluster_sizes(&e.values, tol).len() != n - 1 {
                rep.violations.push(format!(
                    "vertex {v}: split but leading block eigenvalues not distinct"
                ));
            }
        }
    }
    Ok(rep)
}
