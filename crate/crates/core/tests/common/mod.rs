//! Reference computations used only by tests. They share no code with the library
//! routines they check.
#![allow(dead_code)]

use hessfield::linalg::{Matrix, C64};

/// Distance from the origin to the convex hull of `vs`, by enumerating faces and
/// projecting onto each affine hull with modified Gram–Schmidt.
pub fn min_norm_oracle(vs: &[Vec<f64>]) -> f64 {
    let m = vs.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << m) {
        let face: Vec<&Vec<f64>> = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &vs[i])
            .collect();
        if let Some(d) = face_distance(&face) {
            best = best.min(d);
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Distance to the affine hull of `face` when the nearest point lies in the face, else `None`.
fn face_distance(face: &[&Vec<f64>]) -> Option<f64> {
    let w0 = face[0];
    let dim = w0.len();
    let k = face.len() - 1;
    // Edge vectors e_i = w_i − w_0, orthonormalized: E = Q R.
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = vec![vec![0.0; k]; k];
    for i in 0..k {
        let mut e: Vec<f64> = (0..dim).map(|t| face[i + 1][t] - w0[t]).collect();
        let scale = dot(&e, &e).sqrt();
        for (j, qj) in q.iter().enumerate() {
            let c = dot(qj, &e);
            r[j][i] = c;
            for t in 0..dim {
                e[t] -= c * qj[t];
            }
        }
        let nn = dot(&e, &e).sqrt();
        if nn <= 1e-12 * scale.max(1e-300) || nn == 0.0 {
            return None;
        }
        r[i][i] = nn;
        q.push(e.into_iter().map(|x| x / nn).collect());
    }
    // Coefficients c with E c = projection of −w_0 onto span(E).
    let rhs: Vec<f64> = q.iter().map(|qj| -dot(qj, w0)).collect();
    let mut c = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = rhs[i];
        for j in i + 1..k {
            s -= r[i][j] * c[j];
        }
        c[i] = s / r[i][i];
    }
    let l0 = 1.0 - c.iter().sum::<f64>();
    if l0 < -1e-12 || c.iter().any(|&x| x < -1e-12) {
        return None;
    }
    let mut p = w0.clone();
    for (i, ci) in c.iter().enumerate() {
        for t in 0..dim {
            p[t] += ci * (face[i + 1][t] - w0[t]);
        }
    }
    Some(dot(&p, &p).sqrt())
}

/// Distance from the convex hull of `vs` to the closed ray `{−t e_1 : t ≥ 0}`,
/// minimizing the convex function `t ↦ dist(hull + t e_1, 0)` by golden section.
pub fn ray_distance_oracle(vs: &[Vec<f64>]) -> f64 {
    let phi = |t: f64| {
        let shifted: Vec<Vec<f64>> = vs
            .iter()
            .map(|v| {
                let mut w = v.clone();
                w[0] += t;
                w
            })
            .collect();
        min_norm_oracle(&shifted)
    };
    let big = vs.iter().map(|v| dot(v, v).sqrt()).fold(0.0, f64::max) * 2.0 + 1.0;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, big);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = phi(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = phi(x2);
        }
    }
    phi(0.0).min(f1).min(f2).min(phi((a + b) / 2.0))
}

/// Determinant by cofactor expansion over column subsets (exact algebra, `O(2^n n)`).
pub fn det_oracle(m: &Matrix) -> C64 {
    let n = m.rows();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    // dp[mask] = det of the submatrix with rows 0..popcount(mask) and columns in mask.
    let mut dp = vec![C64::new(0.0, 0.0); 1 << n];
    dp[0] = C64::new(1.0, 0.0);
    for mask in 1usize..(1 << n) {
        let row = mask.count_ones() as usize - 1;
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            if mask & (1 << j) != 0 {
                let rest = mask & !(1 << j);
                // Sign from the position of column j among the chosen columns.
                let above = (rest & ((1 << j) - 1)).count_ones();
                let sign = if (row as u32 + above) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                acc += m[(row, j)] * dp[rest] * sign;
            }
        }
        dp[mask] = acc;
    }
    dp[(1 << n) - 1]
}

/// `det(x[i.., i..] − λ)` by the cofactor oracle.
pub fn corner_char_oracle(x: &Matrix, i: usize, lambda: f64) -> f64 {
    let n = x.rows();
    let mut c = x.block(i, n, i, n);
    for t in 0..n - i {
        c[(t, t)] -= C64::new(lambda, 0.0);
    }
    det_oracle(&c).re
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations, descending.
pub fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)]).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let (app, aqq) = (a[p][p].re, a[q][q].re);
                let theta = 0.5 * (2.0 * r).atan2(aqq - app);
                let (c, s) = (theta.cos(), theta.sin());
                // Rotation J with columns p, q: J_pp = c, J_pq = s·phase, J_qp = −s·conj(phase), J_qq = c.
                let jpp = C64::new(c, 0.0);
                let jpq = phase * s;
                let jqp = -phase.conj() * s;
                let jqq = C64::new(c, 0.0);
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = akp * jpp + akq * jqp;
                    a[k][q] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[q][k] = jpq.conj() * apk + jqq.conj() * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i].re).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}
