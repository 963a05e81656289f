//! Reproducible builtin fields.
//!
//! Random matrices draw real and imaginary parts uniformly from `[-1, 1]` with a
//! `ChaCha8` stream, then take the Hermitian part `(m + m*)/2`.

use crate::domain::{Domain, MatrixField};
use crate::linalg::{Matrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with real and imaginary parts uniform in `[-1, 1]`.
pub fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    random_complex(rng, n, n).hermitian_part()
}

/// Independent random Hermitian sample at every vertex.
pub fn random_hermitian_field(domain: &Domain, n: usize, seed: u64) -> MatrixField {
    let mut r = rng(seed);
    MatrixField {
        n,
        values: (0..domain.vertex_count())
            .map(|_| random_hermitian(&mut r, n))
            .collect(),
    }
}

/// `a + Σ x_i b_i` with random Hermitian `a`, `b_i`: smooth in the vertex coordinates.
pub fn affine_hermitian_field(domain: &Domain, n: usize, seed: u64) -> MatrixField {
    let mut r = rng(seed);
    let amb = domain.vertices.first().map_or(0, |v| v.len());
    let a = random_hermitian(&mut r, n);
    let bs: Vec<Matrix> = (0..amb).map(|_| random_hermitian(&mut r, n)).collect();
    MatrixField::from_fn(domain, n, |_, x| {
        let mut m = a.clone();
        for (xi, b) in x.iter().zip(&bs) {
            m = &m + &b.scale_real(*xi);
        }
        m
    })
}

/// The truncated unilateral shift `e_i ↦ e_{i+1}`.
pub fn shift_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| {
        if i == j + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn shift_field(domain: &Domain, n: usize) -> MatrixField {
    MatrixField::constant(domain, &shift_matrix(n))
}

pub fn zero_field(domain: &Domain, n: usize) -> MatrixField {
    MatrixField::constant(domain, &Matrix::zeros(n, n))
}

/// `m ⊕ 0_pad` at every vertex.
pub fn pad_field(field: &MatrixField, pad: usize) -> MatrixField {
    field.map(|m| Matrix::direct_sum(m, &Matrix::zeros(pad, pad)))
}

/// `m ⊕ m ⊕ …` (`copies` times) at every vertex.
pub fn repeat_field(field: &MatrixField, copies: usize) -> MatrixField {
    field.map(|m| (1..copies).fold(m.clone(), |acc, _| Matrix::direct_sum(&acc, m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;

    #[test]
    fn random_field_is_hermitian_and_reproducible() {
        let d = build_grid(1, 3).unwrap();
        let a = random_hermitian_field(&d, 4, 9);
        assert_eq!(a, random_hermitian_field(&d, 4, 9));
        assert_eq!(a.max_hermitian_residual(), 0.0);
        assert!(a.values.iter().all(|m| m.max_abs() <= 1.0));
    }

    #[test]
    fn padding_and_repetition() {
        let d = build_grid(0, 1).unwrap();
        let f = MatrixField::constant(&d, &Matrix::identity(2));
        assert_eq!(
            pad_field(&f, 2).values[0],
            Matrix::diag_real(&[1.0, 1.0, 0.0, 0.0])
        );
        assert_eq!(repeat_field(&f, 2).values[0], Matrix::identity(4));
    }
}
