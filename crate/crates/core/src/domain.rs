//! Simplicial meshes, per-vertex fields, interpolation and continuity audits.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Highest supported declared dimension.
pub const MAX_DIM: usize = 4;

/// A finite simplicial complex given by its maximal simplices.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<usize>>,
    pub dim: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Domain {
    /// Validates the simplices and derives the edge list.
    pub fn new(vertices: Vec<Vec<f64>>, simplices: Vec<Vec<usize>>, dim: usize) -> Result<Self> {
        let nv = vertices.len();
        if vertices.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Malformed("non-finite vertex coordinate".into()));
        }
        let mut edges = BTreeSet::new();
        for s in &simplices {
            if s.is_empty() || s.len() > dim + 1 {
                return Err(Error::Malformed(format!(
                    "simplex {s:?} has more than d+1 = {} vertices",
                    dim + 1
                )));
            }
            let distinct: BTreeSet<_> = s.iter().collect();
            if distinct.len() != s.len() || s.iter().any(|&i| i >= nv) {
                return Err(Error::Malformed(format!(
                    "simplex {s:?} has repeated or out-of-range vertices"
                )));
            }
            for a in 0..s.len() {
                for b in a + 1..s.len() {
                    let (i, j) = (s[a].min(s[b]), s[a].max(s[b]));
                    edges.insert((i, j));
                }
            }
        }
        Ok(Domain {
            vertices,
            simplices,
            dim,
            edges: edges.into_iter().collect(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// `V − E + F − …` over all faces of the complex.
    pub fn euler_characteristic(&self) -> i64 {
        let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
        for s in &self.simplices {
            let mut sorted = s.clone();
            sorted.sort_unstable();
            let k = sorted.len();
            for mask in 1u32..(1u32 << k) {
                let face: Vec<usize> = (0..k)
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| sorted[i])
                    .collect();
                faces.insert(face);
            }
        }
        let isolated = (0..self.vertices.len())
            .filter(|&v| !faces.contains(&vec![v]))
            .count() as i64;
        faces
            .iter()
            .map(|f| if f.len() % 2 == 1 { 1 } else { -1 })
            .sum::<i64>()
            + isolated
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Kuhn simplices of the cell with integer base corner `base`, stepping along `axes`.
fn kuhn_cell(base: &[i64], axes: &[usize]) -> Vec<Vec<Vec<i64>>> {
    permutations(axes)
        .into_iter()
        .map(|perm| {
            let mut cur = base.to_vec();
            let mut simplex = vec![cur.clone()];
            for &a in &perm {
                cur[a] += 1;
                simplex.push(cur.clone());
            }
            simplex
        })
        .collect()
}

/// All integer points of `{0..r-1}^k` in lexicographic order.
fn cells(k: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for x in 0..r {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn index_lattice(simplices: Vec<Vec<Vec<i64>>>) -> (Vec<Vec<i64>>, Vec<Vec<usize>>) {
    let mut points: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for s in &simplices {
        for p in s {
            points.insert(p.clone(), 0);
        }
    }
    for (i, v) in points.values_mut().enumerate() {
        *v = i;
    }
    let simp = simplices
        .iter()
        .map(|s| s.iter().map(|p| points[p]).collect())
        .collect();
    (points.into_keys().collect(), simp)
}

/// Kuhn (Freudenthal) triangulation of `[0,1]^d` with `resolution` cells per axis.
pub fn build_grid(d: usize, resolution: usize) -> Result<Domain> {
    if d > MAX_DIM {
        return Err(Error::Precondition(format!(
            "grid dimension {d} exceeds {MAX_DIM}"
        )));
    }
    if resolution == 0 {
        return Err(Error::Precondition("resolution must be at least 1".into()));
    }
    if d == 0 {
        return Domain::new(vec![vec![]], vec![vec![0]], 0);
    }
    let r = resolution as i64;
    let axes: Vec<usize> = (0..d).collect();
    let mut simplices = Vec::new();
    for base in cells(d, r) {
        simplices.extend(kuhn_cell(&base, &axes));
    }
    let (points, simp) = index_lattice(simplices);
    let vertices = points
        .iter()
        .map(|p| p.iter().map(|&x| x as f64 / r as f64).collect())
        .collect();
    Domain::new(vertices, simp, d)
}

/// Boundary of the refined `(k+1)`-cube `[-1,1]^{k+1}`, projected radially onto `S^k`.
///
/// Every facet carries the Kuhn triangulation inherited from the ambient lattice,
/// so adjacent facets agree on shared faces.
pub fn build_sphere(k: usize, resolution: usize) -> Result<Domain> {
    if !(1..=3).contains(&k) {
        return Err(Error::Precondition(format!(
            "sphere dimension {k} not in 1..=3"
        )));
    }
    if resolution == 0 {
        return Err(Error::Precondition("resolution must be at least 1".into()));
    }
    let r = resolution as i64;
    let amb = k + 1;
    let mut simplices = Vec::new();
    for axis in 0..amb {
        let others: Vec<usize> = (0..amb).filter(|&a| a != axis).collect();
        for side in [0, r] {
            for cell in cells(k, r) {
                let mut base = vec![0i64; amb];
                base[axis] = side;
                for (t, &a) in others.iter().enumerate() {
                    base[a] = cell[t];
                }
                simplices.extend(kuhn_cell(&base, &others));
            }
        }
    }
    let (points, simp) = index_lattice(simplices);
    let vertices = points
        .iter()
        .map(|p| {
            let x: Vec<f64> = p
                .iter()
                .map(|&c| -1.0 + 2.0 * c as f64 / r as f64)
                .collect();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter().map(|v| v / n).collect()
        })
        .collect();
    Domain::new(vertices, simp, k)
}

/// Per-vertex complex `n×n` samples, interpolated affinely on each simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub n: usize,
    pub values: Vec<Matrix>,
}

impl MatrixField {
    pub fn new(n: usize, values: Vec<Matrix>) -> Result<Self> {
        for (v, m) in values.iter().enumerate() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Malformed(format!(
                    "vertex {v}: expected {n}x{n} matrix"
                )));
            }
            if !m.is_finite() {
                return Err(Error::Malformed(format!("vertex {v}: non-finite entry")));
            }
        }
        Ok(MatrixField { n, values })
    }

    pub fn constant(domain: &Domain, m: &Matrix) -> Self {
        MatrixField {
            n: m.rows(),
            values: vec![m.clone(); domain.vertex_count()],
        }
    }

    pub fn from_fn(domain: &Domain, n: usize, f: impl Fn(usize, &[f64]) -> Matrix) -> Self {
        let values = domain
            .vertices
            .iter()
            .enumerate()
            .map(|(i, x)| f(i, x))
            .collect();
        MatrixField { n, values }
    }

    /// Checks that the field is sampled on every vertex of `domain`.
    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        if self.values.len() != domain.vertex_count() {
            return Err(Error::Malformed(format!(
                "field has {} samples but the domain has {} vertices",
                self.values.len(),
                domain.vertex_count()
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(&Matrix) -> Matrix) -> Self {
        let values: Vec<Matrix> = self.values.iter().map(f).collect();
        let n = values.first().map_or(self.n, |m| m.rows());
        MatrixField { n, values }
    }

    /// Largest per-vertex Hermitian residual.
    pub fn max_hermitian_residual(&self) -> f64 {
        self.values
            .iter()
            .map(|m| m.hermitian_residual())
            .fold(0.0, f64::max)
    }
}

/// Per-vertex positive tolerances `ε(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToleranceField {
    pub values: Vec<f64>,
}

impl ToleranceField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::Precondition(
                "tolerance values must be finite and positive".into(),
            ));
        }
        Ok(ToleranceField { values })
    }

    pub fn constant(domain: &Domain, eps: f64) -> Result<Self> {
        Self::new(vec![eps; domain.vertex_count()])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ToleranceField {
            values: self.values.iter().map(|e| e * s).collect(),
        }
    }
}

/// Largest operator-norm jump across any edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityAudit {
    pub max_edge_jump: f64,
    /// Index into `Domain::edges` where the maximum is attained.
    pub worst_edge: Option<usize>,
}

pub fn audit_continuity(domain: &Domain, field: &MatrixField) -> ContinuityAudit {
    use rayon::prelude::*;
    let jumps: Vec<f64> = domain
        .edges
        .par_iter()
        .map(|&(a, b)| (&field.values[a] - &field.values[b]).op_norm())
        .collect();
    let mut best = ContinuityAudit {
        max_edge_jump: 0.0,
        worst_edge: None,
    };
    for (i, &j) in jumps.iter().enumerate() {
        if best.worst_edge.is_none() || j > best.max_edge_jump {
            best = ContinuityAudit {
                max_edge_jump: j,
                worst_edge: Some(i),
            };
        }
    }
    best
}

/// Affine interpolation of `field` on simplex `simplex` at barycentric coordinates `bary`.
pub fn evaluate(
    domain: &Domain,
    field: &MatrixField,
    simplex: usize,
    bary: &[f64],
) -> Result<Matrix> {
    let s = domain
        .simplices
        .get(simplex)
        .ok_or_else(|| Error::Precondition(format!("simplex index {simplex} out of range")))?;
    if bary.len() != s.len() {
        return Err(Error::Precondition(
            "barycentric length does not match simplex".into(),
        ));
    }
    let sum: f64 = bary.iter().sum();
    if bary.iter().any(|&t| t < 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(
            "coordinates outside the simplex".into(),
        ));
    }
    // Exact at vertices.
    if let Some(i) = bary.iter().position(|&t| t == 1.0) {
        return Ok(field.values[s[i]].clone());
    }
    let n = field.n;
    let mut out = Matrix::zeros(n, n);
    for (&v, &t) in s.iter().zip(bary) {
        if t != 0.0 {
            out = &out + &field.values[v].scale_real(t);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON exchange format
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDoc {
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<usize>>,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDoc {
    pub n: usize,
    pub values: Vec<Vec<[f64; 2]>>,
}

/// `{"domain": {...}, "field": {...}}`, values row-major as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDocument {
    pub domain: DomainDoc,
    pub field: FieldDoc,
}

impl FieldDocument {
    pub fn from_parts(domain: &Domain, field: &MatrixField) -> Self {
        FieldDocument {
            domain: DomainDoc {
                vertices: domain.vertices.clone(),
                simplices: domain.simplices.clone(),
                dim: domain.dim,
            },
            field: FieldDoc {
                n: field.n,
                values: field
                    .values
                    .iter()
                    .map(|m| m.data().iter().map(|z| [z.re, z.im]).collect())
                    .collect(),
            },
        }
    }

    pub fn into_parts(self) -> Result<(Domain, MatrixField)> {
        let domain = Domain::new(self.domain.vertices, self.domain.simplices, self.domain.dim)?;
        let n = self.field.n;
        let mut values = Vec::with_capacity(self.field.values.len());
        for (v, row) in self.field.values.into_iter().enumerate() {
            if row.len() != n * n {
                return Err(Error::Malformed(format!(
                    "vertex {v}: expected {} entries",
                    n * n
                )));
            }
            values.push(Matrix::from_row_major(
                n,
                n,
                row.into_iter().map(|[re, im]| C64::new(re, im)).collect(),
            ));
        }
        let field = MatrixField::new(n, values)?;
        field.check_domain(&domain)?;
        Ok((domain, field))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("field documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }
}
