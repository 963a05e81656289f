//! Dense complex matrix kernel.
//!
//! Row-major `Matrix` over `Complex64`, Householder and Givens constructions,
//! a Hermitian eigensolver (Householder tridiagonalization followed by implicit
//! QL with Wilkinson shifts), polar factors, and membership tests for the
//! `H_n^k` and `BH_n^k` matrix classes.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data; panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix {
            rows,
            cols,
            data: data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Matrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Frobenius norm of `m - m*`.
    pub fn hermitian_residual(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// `(m + m*) / 2`.
    pub fn hermitian_part(&self) -> Matrix {
        let n = self.rows;
        Matrix::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Operator norm (largest singular value).
    ///
    /// Power iteration stalls when the top two singular values are close, so the
    /// value comes from the eigenvalues of `m* m` instead.
    pub fn op_norm(&self) -> f64 {
        self.spectral_norm()
    }

    /// Largest singular value computed from the eigenvalues of `m* m`.
    pub fn spectral_norm(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let g = (&self.adjoint() * self).hermitian_part();
        match hermitian_eig(&g) {
            Ok(e) => e.values[0].max(0.0).sqrt(),
            Err(_) => self.norm_fro(),
        }
    }

    /// Operator norm of a Hermitian matrix as its largest absolute eigenvalue.
    pub fn hermitian_norm(&self) -> f64 {
        let h = self.hermitian_part();
        match hermitian_eig(&h) {
            Ok(e) => e.values.iter().fold(0.0_f64, |a, &x| a.max(x.abs())),
            Err(_) => self.norm_fro(),
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Submatrix with rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Writes `b` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// `1_p ⊕ b` as an `(p + b.rows)`-square matrix.
    pub fn embed_lower(p: usize, b: &Matrix) -> Matrix {
        let mut m = Matrix::identity(p + b.rows);
        m.set_block(p, p, b);
        m
    }

    /// Block-diagonal direct sum `a ⊕ b`.
    pub fn direct_sum(a: &Matrix, b: &Matrix) -> Matrix {
        let mut m = Matrix::zeros(a.rows + b.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(a.rows, a.cols, b);
        m
    }

    /// `‖m m* − I‖` in Frobenius norm.
    pub fn unitarity_residual(&self) -> f64 {
        (&(self * &self.adjoint()) - &Matrix::identity(self.rows)).norm_fro()
    }

    /// `u m u*`.
    pub fn conjugate_by(&self, u: &Matrix) -> Matrix {
        &(u * self) * &u.adjoint()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> C64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = ONE;
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].norm();
            for i in k + 1..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                return ZERO;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let p = a[k * n + k];
            det *= p;
            for i in k + 1..n {
                let f = a[i * n + k] / p;
                if f != ZERO {
                    for j in k..n {
                        let t = a[k * n + j];
                        a[i * n + j] -= f * t;
                    }
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [C64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Inner product `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Packs a complex vector as `(re_0, im_0, re_1, im_1, …)`.
pub fn complex_to_real(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Inverse of [`complex_to_real`].
pub fn real_to_complex(v: &[f64]) -> Vec<C64> {
    assert!(v.len() % 2 == 0);
    v.chunks(2).map(|c| C64::new(c[0], c[1])).collect()
}

// ---------------------------------------------------------------------------
// Householder and Givens
// ---------------------------------------------------------------------------

/// Householder vector `h = b/‖b‖ + e_1` and the unitary `R` with `R b = ‖b‖ e_1`.
#[derive(Clone, Debug)]
pub struct HouseholderData {
    pub vector: Vec<C64>,
    pub reflection: Matrix,
}

/// Builds the unitary `R = h h* / h_0 − I` with `h = b/‖b‖ + e_1`.
///
/// When `b_0` is real this is the Hermitian reflection `2 h h*/⟨h,h⟩ − I`.
/// For complex `b_0` that reflection does not send `b` to the positive `e_1`
/// axis, so the normalization uses `h_0 = 1 + b_0/‖b‖` instead, which keeps `R`
/// unitary and continuous away from the closed negative real ray.
pub fn householder_annihilate(b: &[C64]) -> Result<(HouseholderData, f64)> {
    let m = b.len();
    if m == 0 {
        return Err(Error::ZeroVector);
    }
    let r = vec_norm(b);
    if r == 0.0 {
        return Err(Error::RayProximity(0.0));
    }
    let mut h: Vec<C64> = b.iter().map(|z| z / r).collect();
    h[0] += ONE;
    let hn = vec_norm(&h);
    if hn < 1e-10 {
        return Err(Error::RayProximity(hn));
    }
    let h0 = h[0];
    let reflection = Matrix::from_fn(m, m, |i, j| {
        let mut v = h[i] * h[j].conj() / h0;
        if i == j {
            v -= ONE;
        }
        v
    });
    Ok((
        HouseholderData {
            vector: h,
            reflection,
        },
        r,
    ))
}

/// Givens unitary `u_0 = (1/r) [[conj a, conj b], [−b, a]]` with `u_0 (a, b)ᵀ = (r, 0)ᵀ`.
pub fn givens_annihilate(a: C64, b: C64) -> Result<Matrix> {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(Matrix::from_row_major(
        2,
        2,
        vec![a.conj() / r, b.conj() / r, -b / r, a / r],
    ))
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver
// ---------------------------------------------------------------------------

/// Eigenvalues in descending order with matching unitary eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl HermitianEig {
    /// Reassembles `V diag(φ(λ)) V*`.
    pub fn apply(&self, phi: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let v = &self.vectors;
        Matrix::from_fn(n, n, |i, j| {
            let mut s = ZERO;
            for k in 0..n {
                let w = phi(self.values[k]);
                if w != 0.0 {
                    s += v[(i, k)] * v[(j, k)].conj() * w;
                }
            }
            s
        })
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(m: &Matrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::Precondition(
            "hermitian_eig needs a square matrix".into(),
        ));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(HermitianEig {
            values: vec![],
            vectors: Matrix::zeros(0, 0),
        });
    }
    let scale = m.norm_fro();
    let res = m.hermitian_residual();
    if res > 1e-10 * scale.max(f64::MIN_POSITIVE) && res > 0.0 {
        return Err(Error::NotHermitian(res));
    }
    let mut a = m.hermitian_part();
    let mut q = Matrix::identity(n);

    // Householder tridiagonalization: A ← H A H, Q ← Q H.
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xn = vec_norm(&x);
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            ONE
        };
        let alpha = -phase * xn;
        let mut v = x.clone();
        v[0] -= alpha;
        normalize(&mut v);
        // A ← (I − 2vv*) A (I − 2vv*) restricted to rows/cols k+1..n.
        let off = k + 1;
        let len = n - off;
        // w = A_sub v
        let mut w = vec![ZERO; n];
        for i in 0..n {
            let mut s = ZERO;
            for j in 0..len {
                s += a[(i, off + j)] * v[j];
            }
            w[i] = s;
        }
        // A ← A − 2 w v*  (right multiply)
        for i in 0..n {
            for j in 0..len {
                a[(i, off + j)] -= w[i] * v[j].conj() * 2.0;
            }
        }
        // A ← A − 2 v (v* A)  (left multiply)
        let mut z = vec![ZERO; n];
        for j in 0..n {
            let mut s = ZERO;
            for i in 0..len {
                s += v[i].conj() * a[(off + i, j)];
            }
            z[j] = s;
        }
        for i in 0..len {
            for j in 0..n {
                a[(off + i, j)] -= v[i] * z[j] * 2.0;
            }
        }
        // Q ← Q H
        for i in 0..n {
            let mut s = ZERO;
            for j in 0..len {
                s += q[(i, off + j)] * v[j];
            }
            for j in 0..len {
                q[(i, off + j)] -= s * v[j].conj() * 2.0;
            }
        }
    }

    // Diagonal phases make the tridiagonal matrix real: T = D* A D.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut phases = vec![ONE; n];
    for i in 0..n {
        d[i] = a[(i, i)].re;
    }
    for i in 0..n.saturating_sub(1) {
        let s = a[(i + 1, i)];
        let sn = s.norm();
        e[i] = sn;
        phases[i + 1] = if sn > 0.0 {
            phases[i] * s / sn
        } else {
            phases[i]
        };
    }
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql_implicit(&mut d, &mut e, &mut z, n)?;

    // Eigenvectors of A: Q D Z.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        d[j].partial_cmp(&d[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let qd = Matrix::from_fn(n, n, |i, j| q[(i, j)] * phases[j]);
    let vectors = Matrix::from_fn(n, n, |i, c| {
        let col = order[c];
        let mut s = ZERO;
        for k in 0..n {
            let zk = z[k * n + col];
            if zk != 0.0 {
                s += qd[(i, k)] * zk;
            }
        }
        s
    });
    Ok(HermitianEig { values, vectors })
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal, `e[i]` couples `i` and `i+1` (`e[n-1]` unused);
/// `z` (row-major `n×n`) accumulates the rotations.
fn tql_implicit(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m] == 0.0 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zf = z[k * n + i + 1];
                    let zi = z[k * n + i];
                    z[k * n + i + 1] = s * zi + c * zf;
                    z[k * n + i] = c * zi - s * zf;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Unitary polar factor `v = z (z* z)^{-1/2}`.
pub fn polar_unitary(z: &Matrix) -> Result<Matrix> {
    if !z.is_square() {
        return Err(Error::Precondition(
            "polar_unitary needs a square matrix".into(),
        ));
    }
    let g = (&z.adjoint() * z).hermitian_part();
    let eig = hermitian_eig(&g)?;
    let lmin = eig.values.last().copied().unwrap_or(1.0);
    let smin = lmin.max(0.0).sqrt();
    if smin < 1e-8 {
        return Err(Error::NearSingular(smin));
    }
    let inv_sqrt = eig.apply(|l| 1.0 / l.sqrt());
    Ok(z * &inv_sqrt)
}

// ---------------------------------------------------------------------------
// Matrix class membership
// ---------------------------------------------------------------------------

/// Default zero tolerance `1e-9 (1 + ‖m‖)`.
pub fn default_tol_zero(m: &Matrix) -> f64 {
    1e-9 * (1.0 + m.norm_fro())
}

/// Default positivity tolerance.
pub const DEFAULT_TOL_POS: f64 = 1e-9;

/// Measured margins for membership in `H_n^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HFormDescriptor {
    pub n: usize,
    pub k: usize,
    /// Smallest real part among required-positive subdiagonal entries (`None` if there are none).
    pub subdiag_min: Option<f64>,
    /// Largest magnitude among required-zero entries and imaginary parts of required-positive ones.
    pub zero_max: f64,
    pub tol_zero: f64,
    pub tol_pos: f64,
}

impl HFormDescriptor {
    pub fn is_member(&self) -> bool {
        self.zero_max <= self.tol_zero && self.subdiag_min.map_or(true, |s| s >= self.tol_pos)
    }
}

/// Classifies `m` against `H_n^k` (columns `j < k` unreduced Hessenberg, positive subdiagonal).
///
/// Since `H_n^{n-1} = H_n^n`, the positivity test covers columns `j < min(k, n-1)`.
pub fn classify_h(m: &Matrix, k: usize, tol_zero: f64, tol_pos: f64) -> HFormDescriptor {
    let n = m.rows();
    let k = k.min(n);
    let mut zero_max: f64 = 0.0;
    let mut subdiag_min: Option<f64> = None;
    for j in 0..k {
        if j + 1 < n {
            let s = m[(j + 1, j)];
            zero_max = zero_max.max(s.im.abs());
            subdiag_min = Some(subdiag_min.map_or(s.re, |x: f64| x.min(s.re)));
        }
        for i in j + 2..n {
            zero_max = zero_max.max(m[(i, j)].norm());
        }
    }
    HFormDescriptor {
        n,
        k,
        subdiag_min,
        zero_max,
        tol_zero,
        tol_pos,
    }
}

/// Membership test with default tolerances.
pub fn is_in_h(m: &Matrix, k: usize) -> bool {
    classify_h(m, k, default_tol_zero(m), DEFAULT_TOL_POS).is_member()
}

/// Measured margins for membership in `BH_n^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BHFormDescriptor {
    pub n: usize,
    pub k: usize,
    /// Leading block sizes `α_1, …, α_r` (each 1 or 2).
    pub alpha: Vec<usize>,
    /// Size of the trailing block.
    pub beta: usize,
    /// Smallest real part among entries required real nonnegative (`None` if there are none).
    pub nonneg_min: Option<f64>,
    /// Largest imaginary part among entries required real.
    pub imag_max: f64,
    /// Largest magnitude outside the declared blocks.
    pub offblock_max: f64,
    /// `max(‖p² − p‖, ‖p − p*‖)` in Frobenius norm.
    pub projection_residual: f64,
    pub tol_zero: f64,
}

impl BHFormDescriptor {
    pub fn is_member(&self) -> bool {
        // The leading blocks cover the first k indices, overshooting by one only
        // when the last of them is a 2-block straddling index k.
        let lead = self.n - self.beta;
        let k = self.k.min(self.n);
        let beta_ok = lead == k || (lead == k + 1 && self.alpha.last() == Some(&2));
        beta_ok
            && self.offblock_max <= self.tol_zero
            && self.imag_max <= self.tol_zero
            && self.nonneg_min.map_or(true, |x| x >= -self.tol_zero)
            && self.projection_residual <= self.tol_zero
    }
}

/// Classifies a projection against `BH_n^k`, inferring the block partition greedily from the left.
pub fn classify_bh(p: &Matrix, k: usize, tol_zero: f64) -> BHFormDescriptor {
    let n = p.rows();
    let k = k.min(n);
    let mut alpha = Vec::new();
    let mut j = 0;
    while j < k {
        if j + 1 < n && p[(j + 1, j)].norm() > tol_zero {
            alpha.push(2);
            j += 2;
        } else {
            alpha.push(1);
            j += 1;
        }
    }
    let lead = j;
    let beta = n - lead;
    // Block id per index.
    let mut block = vec![0usize; n];
    let mut pos = 0;
    for (b, &a) in alpha.iter().enumerate() {
        for t in 0..a {
            block[pos + t] = b;
        }
        pos += a;
    }
    for idx in lead..n {
        block[idx] = alpha.len();
    }
    let mut offblock_max: f64 = 0.0;
    let mut imag_max: f64 = 0.0;
    let mut nonneg_min: Option<f64> = None;
    for i in 0..n {
        for jj in 0..n {
            let z = p[(i, jj)];
            if block[i] != block[jj] {
                offblock_max = offblock_max.max(z.norm());
            } else if i < lead && jj < lead {
                imag_max = imag_max.max(z.im.abs());
                nonneg_min = Some(nonneg_min.map_or(z.re, |x: f64| x.min(z.re)));
            }
        }
    }
    let p2 = p * p;
    let projection_residual = (&p2 - p).norm_fro().max(p.hermitian_residual());
    BHFormDescriptor {
        n,
        k,
        alpha,
        beta,
        nonneg_min,
        imag_max,
        offblock_max,
        projection_residual,
        tol_zero,
    }
}

/// Splits sorted-descending eigenvalues into clusters whose consecutive gaps are `≤ tol`.
pub fn cluster_sizes(values_desc: &[f64], tol: f64) -> Vec<usize> {
    let mut out = Vec::new();
    if values_desc.is_empty() {
        return out;
    }
    let mut size = 1;
    for w in values_desc.windows(2) {
        if (w[0] - w[1]).abs() <= tol {
            size += 1;
        } else {
            out.push(size);
            size = 1;
        }
    }
    out.push(size);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn householder_three_four_i() {
        let b = [c(3.0, 0.0), c(0.0, 4.0)];
        let (hd, r) = householder_annihilate(&b).unwrap();
        assert!((r - 5.0).abs() < 1e-15);
        let rb = hd.reflection.mul_vec(&b);
        assert!((rb[0] - c(5.0, 0.0)).norm() < 1e-12);
        assert!(rb[1].norm() < 1e-12);
        assert!((hd.vector[0] - c(1.6, 0.0)).norm() < 1e-15);
        assert!((hd.vector[1] - c(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn householder_aligned_fixes_b() {
        // A reflection fixes the aligned vector and negates its complement.
        let (hd, r) = householder_annihilate(&[c(1.0, 0.0), ZERO]).unwrap();
        assert_eq!(r, 1.0);
        assert!((&hd.reflection - &Matrix::diag_real(&[1.0, -1.0])).norm_fro() < 1e-15);
        let (hd, _) = householder_annihilate(&[c(2.0, 0.0)]).unwrap();
        assert!((&hd.reflection - &Matrix::identity(1)).norm_fro() < 1e-15);
    }

    #[test]
    fn householder_rejects_negative_axis() {
        assert!(matches!(
            householder_annihilate(&[c(-1.0, 0.0), ZERO]),
            Err(Error::RayProximity(_))
        ));
    }

    #[test]
    fn givens_swap() {
        let u = givens_annihilate(ZERO, ONE).unwrap();
        let expect = Matrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((&u - &expect).norm_fro() < 1e-15);
        assert!((&givens_annihilate(ONE, ZERO).unwrap() - &Matrix::identity(2)).norm_fro() < 1e-15);
        assert!(matches!(
            givens_annihilate(ZERO, ZERO),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn eig_small_examples() {
        let e = hermitian_eig(&Matrix::diag_real(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        let e = hermitian_eig(&Matrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let e = hermitian_eig(&Matrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = Matrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn polar_examples() {
        let v = polar_unitary(&Matrix::identity(3).scale_real(2.0)).unwrap();
        assert!((&v - &Matrix::identity(3)).norm_fro() < 1e-14);
        let z = Matrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let v = polar_unitary(&z).unwrap();
        assert!(v.unitarity_residual() < 1e-10);
        assert!(matches!(
            polar_unitary(&Matrix::zeros(2, 2)),
            Err(Error::NearSingular(_))
        ));
    }

    #[test]
    fn classify_identity() {
        let i = Matrix::identity(4);
        assert!(is_in_h(&i, 0));
        assert!(!is_in_h(&i, 1));
        assert!(!is_in_h(&i, 4));
    }

    #[test]
    fn bh_examples() {
        let p = Matrix::diag_real(&[0.0, 0.0, 1.0, 1.0]);
        let d = classify_bh(&p, 2, 1e-9);
        assert!(d.is_member());
        assert_eq!(d.alpha, vec![1, 1]);
        assert_eq!(d.beta, 2);
        let mut p = Matrix::zeros(4, 4);
        p.set_block(0, 0, &Matrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]));
        let d = classify_bh(&p, 2, 1e-9);
        assert!(d.is_member());
        assert_eq!(d.alpha, vec![2]);
    }

    #[test]
    fn det_matches_product() {
        let m = Matrix::from_real(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        assert!((m.det() - c(18.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = Matrix::diag_real(&[1.0, -3.0, 2.0]);
        assert!((m.op_norm() - 3.0).abs() < 1e-9);
        assert!((m.spectral_norm() - 3.0).abs() < 1e-12);
    }
}
