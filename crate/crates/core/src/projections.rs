//! Projection fields: reduction to block form and extraction of non-vanishing sections.

use crate::domain::{Domain, MatrixField, ToleranceField};
use crate::error::{Error, Result};
use crate::linalg::{
    classify_bh, hermitian_eig, polar_unitary, vec_norm, BHFormDescriptor, Matrix, C64, ONE, ZERO,
};
use crate::reduction::{corner_size, hessenberg_summary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A field of orthogonal projections.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionField {
    pub field: MatrixField,
    pub ranks: Vec<usize>,
}

impl ProjectionField {
    pub fn new(field: MatrixField) -> Result<Self> {
        let mut ranks = Vec::with_capacity(field.values.len());
        for (v, p) in field.values.iter().enumerate() {
            let idem = (&(p * p) - p).norm_fro();
            let herm = p.hermitian_residual();
            if idem > 1e-10 || herm > 1e-12 {
                return Err(Error::Precondition(format!(
                    "vertex {v} is not a projection (‖p²−p‖ = {idem:e}, ‖p−p*‖ = {herm:e})"
                )));
            }
            ranks.push(p.trace().re.round().max(0.0) as usize);
        }
        Ok(ProjectionField { field, ranks })
    }

    /// Smallest rank over the vertices.
    pub fn min_rank(&self) -> usize {
        self.ranks.iter().copied().min().unwrap_or(0)
    }
}

/// `γ(d)`: how many dimensions of a bundle may fail to split off.
pub fn gamma_of_dim(d: usize) -> usize {
    match d {
        0 | 1 => 0,
        2 | 3 => 1,
        _ => d.div_ceil(2),
    }
}

/// Largest admissible constant `ε` for the projection pipeline, just inside `1/(24² n³)`.
pub fn default_projection_eps(n: usize) -> f64 {
    0.9 / (576.0 * (n as f64).powi(3))
}

/// Smallest accepted distance of the spectrum of `h″` from `1/2`.
pub const SPECTRAL_GAP_MIN: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct ProjectionReduction {
    pub q: ProjectionField,
    pub u: MatrixField,
    pub descriptors: Vec<BHFormDescriptor>,
    pub report: ProjectionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub n: usize,
    pub c: usize,
    pub k: usize,
    pub eps: f64,
    /// Smallest `|λ − 1/2|` over the spectra of `h″`.
    pub spectral_gap_min: f64,
    /// Largest `‖h′ − h‖` with `h` the reduced field.
    pub truncation_max: f64,
    /// Largest `‖h″ − u p u*‖`.
    pub shrink_distance_max: f64,
    /// Largest `‖u p u* − q‖` with the final unitary.
    pub conjugacy_residual_max: f64,
    pub unitarity_max: f64,
    pub projection_residual_max: f64,
    /// Largest `|tr q − tr p|`.
    pub rank_defect_max: f64,
    pub bh_member: bool,
    pub reduction_perturbation_max: f64,
}

/// Shrinks `z` towards zero by `t`, vanishing on the closed disk of radius `t`.
fn shrink(z: C64, t: f64) -> C64 {
    let r = z.norm();
    if r <= t {
        ZERO
    } else {
        z * ((r - t) / r)
    }
}

/// Connected components of the nonzero pattern of a square matrix, in index order.
fn components(m: &Matrix) -> Vec<Vec<usize>> {
    let n = m.rows();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut stack = vec![s];
        let mut members = Vec::new();
        comp[s] = id;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..n {
                if comp[j] == usize::MAX && (m[(i, j)] != ZERO || m[(j, i)] != ZERO) {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// `χ_{(1/2, ∞)}(h)` evaluated block by block, with the smallest distance of the spectrum to `1/2`.
fn half_projection(h: &Matrix) -> Result<(Matrix, f64)> {
    let n = h.rows();
    let mut q = Matrix::zeros(n, n);
    let mut gap = f64::INFINITY;
    for comp in components(h) {
        let sz = comp.len();
        let block = Matrix::from_fn(sz, sz, |a, b| h[(comp[a], comp[b])]);
        let real = block.data().iter().all(|z| z.im == 0.0);
        if sz == 1 {
            let x = block[(0, 0)].re;
            gap = gap.min((x - 0.5).abs());
            if x > 0.5 {
                q[(comp[0], comp[0])] = ONE;
            }
        } else if sz == 2 && real {
            // Real symmetric 2x2 in closed form keeps the block real and nonnegative.
            let (a, b, c) = (block[(0, 0)].re, block[(1, 0)].re, block[(1, 1)].re);
            let mid = (a + c) / 2.0;
            let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
            let (hi, lo) = (mid + rad, mid - rad);
            gap = gap.min((hi - 0.5).abs()).min((lo - 0.5).abs());
            let above = (hi > 0.5) as usize + (lo > 0.5) as usize;
            let pb = match above {
                0 => Matrix::zeros(2, 2),
                2 => Matrix::identity(2),
                _ => {
                    let (x, y) = if a >= c { (hi - c, b) } else { (b, hi - a) };
                    let nn = x.hypot(y);
                    let (x, y) = (x / nn, y / nn);
                    Matrix::from_real(2, 2, &[x * x, x * y, x * y, y * y])
                }
            };
            for (ia, &i) in comp.iter().enumerate() {
                for (jb, &j) in comp.iter().enumerate() {
                    q[(i, j)] = pb[(ia, jb)];
                }
            }
        } else {
            let e = hermitian_eig(&block)?;
            for &l in &e.values {
                gap = gap.min((l - 0.5).abs());
            }
            let pb = e
                .apply(|l| if l > 0.5 { 1.0 } else { 0.0 })
                .hermitian_part();
            for (ia, &i) in comp.iter().enumerate() {
                for (jb, &j) in comp.iter().enumerate() {
                    q[(i, j)] = pb[(ia, jb)];
                }
            }
        }
    }
    Ok((q, gap))
}

/// Conjugates a projection field into `BH_n^{n−c}` form.
pub fn projection_reduce(
    domain: &Domain,
    p: &ProjectionField,
    eps: Option<f64>,
    seed: u64,
) -> Result<ProjectionReduction> {
    let n = p.field.n;
    let eps_val = eps.unwrap_or_else(|| default_projection_eps(n));
    if !(eps_val > 0.0 && eps_val < 1.0 / (576.0 * (n as f64).powi(3))) {
        return Err(Error::Precondition(format!(
            "projection eps {eps_val:e} outside (0, 1/(24² n³))"
        )));
    }
    let eps_field = ToleranceField::constant(domain, eps_val)?;
    let red = hessenberg_summary(domain, &p.field, &eps_field, seed)?;
    let c = corner_size(domain.dim).min(n);
    let k = n - c;
    let cut = 2.0 * (n as f64 * eps_val).sqrt();

    struct PerVertex {
        q: Matrix,
        u: Matrix,
        gap: f64,
        trunc: f64,
        shrink_dist: f64,
    }
    let per: Vec<PerVertex> = red
        .h
        .values
        .par_iter()
        .zip(&red.u.values)
        .zip(&p.field.values)
        .map(|((h, u), pv)| {
            let h1 = Matrix::from_fn(n, n, |i, j| {
                let keep = i.abs_diff(j) <= 1 || (i >= k && j >= k);
                if keep {
                    h[(i, j)]
                } else {
                    ZERO
                }
            })
            .hermitian_part();
            let trunc = (&h1 - h).spectral_norm();
            let h2 = Matrix::from_fn(n, n, |i, j| shrink(h1[(i, j)], cut));
            let hp = pv.conjugate_by(u).hermitian_part();
            let shrink_dist = (&h2 - &hp).spectral_norm();
            let (q, gap) = half_projection(&h2)?;
            if gap < SPECTRAL_GAP_MIN {
                return Err(Error::SpectralGap(gap));
            }
            let id = Matrix::identity(n);
            let z = &(&q * &hp) + &(&(&id - &q) * &(&id - &hp));
            let v = polar_unitary(&z)?;
            Ok(PerVertex {
                q,
                u: &v * u,
                gap,
                trunc,
                shrink_dist,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = ProjectionReport {
        n,
        c,
        k,
        eps: eps_val,
        spectral_gap_min: f64::INFINITY,
        truncation_max: 0.0,
        shrink_distance_max: 0.0,
        conjugacy_residual_max: 0.0,
        unitarity_max: 0.0,
        projection_residual_max: 0.0,
        rank_defect_max: 0.0,
        bh_member: true,
        reduction_perturbation_max: red.perturbation_max,
    };
    let mut descriptors = Vec::with_capacity(per.len());
    let mut qs = Vec::with_capacity(per.len());
    let mut us = Vec::with_capacity(per.len());
    for (pv, item) in p.field.values.iter().zip(per) {
        report.spectral_gap_min = report.spectral_gap_min.min(item.gap);
        report.truncation_max = report.truncation_max.max(item.trunc);
        report.shrink_distance_max = report.shrink_distance_max.max(item.shrink_dist);
        report.conjugacy_residual_max = report
            .conjugacy_residual_max
            .max((&pv.conjugate_by(&item.u) - &item.q).norm_fro());
        report.unitarity_max = report.unitarity_max.max(item.u.unitarity_residual());
        report.rank_defect_max = report
            .rank_defect_max
            .max((item.q.trace() - pv.trace()).norm());
        let desc = classify_bh(&item.q, k, 1e-9);
        report.projection_residual_max =
            report.projection_residual_max.max(desc.projection_residual);
        report.bh_member &= desc.is_member();
        descriptors.push(desc);
        qs.push(item.q);
        us.push(item.u);
    }
    let q = ProjectionField::new(MatrixField { n, values: qs })?;
    Ok(ProjectionReduction {
        q,
        u: MatrixField { n, values: us },
        descriptors,
        report,
    })
}

// ---------------------------------------------------------------------------
// Sections
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionExtraction {
    /// `section[v]` is the chosen column at vertex `v`.
    pub section: Vec<Vec<C64>>,
    /// 0-based column index `i_x` per vertex.
    pub indices: Vec<usize>,
    pub norm_min: f64,
    pub max_edge_jump: f64,
    pub input_max_edge_jump: f64,
    pub warnings: Vec<String>,
}

/// Column-norm threshold `1/√2`, with a roundoff allowance.
const HALF_NORM: f64 = std::f64::consts::FRAC_1_SQRT_2 - 1e-12;

/// Picks, per vertex, the first column of norm at least `1/√2` of a projection in `BH_n^{n−c}`.
pub fn extract_section(
    domain: &Domain,
    p: &ProjectionField,
    c: usize,
) -> Result<SectionExtraction> {
    let n = p.field.n;
    let k = n.saturating_sub(c);
    let mut section = Vec::with_capacity(p.field.values.len());
    let mut indices = Vec::with_capacity(p.field.values.len());
    let mut norm_min = f64::INFINITY;
    for (v, m) in p.field.values.iter().enumerate() {
        let desc = classify_bh(m, k, 1e-9);
        if !desc.is_member() {
            return Err(Error::Precondition(format!(
                "vertex {v}: projection not in BH_{n}^{k}"
            )));
        }
        if p.ranks[v] < c {
            return Err(Error::Precondition(format!(
                "vertex {v}: rank {} below {c}",
                p.ranks[v]
            )));
        }
        let i = (0..n)
            .find(|&j| vec_norm(&m.column(j)) >= HALF_NORM)
            .ok_or_else(|| {
                Error::InvariantViolation(format!("vertex {v}: no column of norm 1/√2"))
            })?;
        let col = m.column(i);
        norm_min = norm_min.min(vec_norm(&col));
        section.push(col);
        indices.push(i);
    }
    let mut max_edge_jump: f64 = 0.0;
    let mut input_max_edge_jump: f64 = 0.0;
    let mut warnings = Vec::new();
    for &(a, b) in &domain.edges {
        let js = vec_norm(
            &section[a]
                .iter()
                .zip(&section[b])
                .map(|(x, y)| x - y)
                .collect::<Vec<_>>(),
        );
        let jp = (&p.field.values[a] - &p.field.values[b]).op_norm();
        max_edge_jump = max_edge_jump.max(js);
        input_max_edge_jump = input_max_edge_jump.max(jp);
        if js > 10.0 * jp + 1e-12 {
            warnings.push(format!(
                "edge ({a}, {b}): section jump {js:e} exceeds 10x projection jump {jp:e}"
            ));
        }
    }
    Ok(SectionExtraction {
        section,
        indices,
        norm_min,
        max_edge_jump,
        input_max_edge_jump,
        warnings,
    })
}

/// Pointwise linearly independent sections of the column space of a projection field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionBundle {
    /// `sections[i][v]` is section `i` at vertex `v`.
    pub sections: Vec<Vec<Vec<C64>>>,
    /// Smallest singular value of the section matrix over all vertices.
    pub independence_margin: f64,
    /// Largest `‖p s − s‖`.
    pub range_residual_max: f64,
    pub norm_min: f64,
    pub b: usize,
    pub gamma: usize,
    pub warnings: Vec<String>,
    pub reports: Vec<ProjectionReport>,
}

/// Rounds a nearly idempotent Hermitian matrix to the projection onto eigenvalues above `1/2`.
fn eigen_round(m: &Matrix) -> Result<Matrix> {
    Ok(hermitian_eig(&m.hermitian_part())?
        .apply(|l| if l > 0.5 { 1.0 } else { 0.0 })
        .hermitian_part())
}

/// Extracts `b − γ` independent sections, where `b` is the smallest rank.
pub fn trivial_summand(
    domain: &Domain,
    p: &ProjectionField,
    eps: Option<f64>,
    seed: u64,
) -> Result<SectionBundle> {
    let n = p.field.n;
    let b = p.min_rank();
    let gamma = gamma_of_dim(domain.dim);
    if b < gamma + 1 {
        return Err(Error::Precondition(format!(
            "smallest rank b = {b} is below γ + 1 = {}",
            gamma + 1
        )));
    }
    let c = gamma + 1;
    let mut cur = p.clone();
    let mut sections: Vec<Vec<Vec<C64>>> = Vec::new();
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    let mut norm_min = f64::INFINITY;
    for t in 0..b - gamma {
        let red = projection_reduce(
            domain,
            &cur,
            eps,
            crate::avoidance::derive_seed(seed, t as u64),
        )?;
        let ext = extract_section(domain, &red.q, c)?;
        warnings.extend(ext.warnings.iter().map(|w| format!("section {t}: {w}")));
        reports.push(red.report);
        let s: Vec<Vec<C64>> = ext
            .section
            .iter()
            .zip(&red.u.values)
            .map(|(sv, u)| u.adjoint().mul_vec(sv))
            .collect();
        norm_min = norm_min.min(ext.norm_min);
        let next: Vec<Matrix> = cur
            .field
            .values
            .par_iter()
            .zip(&s)
            .map(|(pv, sv)| {
                let nn = vec_norm(sv).powi(2);
                let ss = Matrix::from_fn(n, n, |i, j| sv[i] * sv[j].conj() / nn);
                eigen_round(&(pv - &ss))
            })
            .collect::<Result<_>>()?;
        sections.push(s);
        cur = ProjectionField::new(MatrixField { n, values: next })?;
    }
    let m = sections.len();
    let mut independence_margin = f64::INFINITY;
    let mut range_residual_max: f64 = 0.0;
    for (v, pv) in p.field.values.iter().enumerate() {
        let gram = Matrix::from_fn(m, m, |i, j| {
            sections[i][v]
                .iter()
                .zip(&sections[j][v])
                .map(|(a, b)| a.conj() * b)
                .sum()
        });
        let lmin = hermitian_eig(&gram.hermitian_part())?
            .values
            .last()
            .copied()
            .unwrap_or(0.0);
        independence_margin = independence_margin.min(lmin.max(0.0).sqrt());
        for s in &sections {
            let ps = pv.mul_vec(&s[v]);
            let r = vec_norm(&ps.iter().zip(&s[v]).map(|(a, b)| a - b).collect::<Vec<_>>());
            range_residual_max = range_residual_max.max(r);
        }
    }
    Ok(SectionBundle {
        sections,
        independence_margin,
        range_residual_max,
        norm_min,
        b,
        gamma,
        warnings,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_of_dim(1), 0);
        assert_eq!(gamma_of_dim(2), 1);
        assert_eq!(gamma_of_dim(6), 3);
    }

    #[test]
    fn half_projection_of_real_block() {
        let h = Matrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let (q, gap) = half_projection(&h).unwrap();
        assert!((&q - &h).norm_fro() < 1e-15);
        assert!((gap - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shrink_kills_small_entries() {
        assert_eq!(shrink(C64::new(0.1, 0.0), 0.2), ZERO);
        assert!((shrink(C64::new(0.0, 1.0), 0.25) - C64::new(0.0, 0.75)).norm() < 1e-15);
    }
}
