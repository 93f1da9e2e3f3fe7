use alloc::vec::Vec;

use super::{inner, norm, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ROTATION_TOL: f64 = 1e-15;

/// Thin singular value decomposition `M = U diag(S) V†`.
///
/// `left_vectors` is `rows x k`, `right_vectors` is `cols x k` with
/// `k = min(rows, cols)`. Columns of both are orthonormal, including the ones
/// paired with zero singular values. The first component of each right
/// singular vector whose magnitude exceeds `1e-12` is real and positive.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left_vectors: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub right_vectors: ComplexMatrix,
}

impl SvdResult {
    /// `U diag(S) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.left_vectors.clone();
        for j in 0..us.cols() {
            let s = self.singular_values[j];
            for i in 0..us.rows() {
                us[(i, j)] *= s;
            }
        }
        &us * &self.right_vectors.adjoint()
    }
}

/// One-sided Jacobi SVD.
pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::Domain("svd of an empty matrix".into()));
    }
    let mut out = if m.rows() >= m.cols() {
        jacobi_tall(m)?
    } else {
        let t = jacobi_tall(&m.adjoint())?;
        SvdResult {
            left_vectors: t.right_vectors,
            singular_values: t.singular_values,
            right_vectors: t.left_vectors,
        }
    };
    fix_phases(&mut out);
    Ok(out)
}

fn jacobi_tall(m: &ComplexMatrix) -> Result<SvdResult> {
    let (rows, n) = (m.rows(), m.cols());
    let mut a: Vec<Vec<C64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = alloc::vec![ZERO; n];
            e[j] = ONE;
            e
        })
        .collect();

    // columns below roundoff of the whole matrix are left alone
    let negligible = (f64::EPSILON * m.frobenius_norm()).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = a[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma = inner(&a[i], &a[j]);
                let g = gamma.norm();
                if g <= ROTATION_TOL * (alpha * beta).sqrt() || g < f64::MIN_POSITIVE || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = phase.conj();
                rotate(&mut a, i, j, c, s, ph);
                rotate(&mut v, i, j, c, s, ph);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure("svd sweep cap exceeded"));
    }

    let mut sigma: Vec<(f64, usize)> = a.iter().enumerate().map(|(j, c)| (norm(c), j)).collect();
    sigma.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let smax = sigma[0].0;

    let mut u = ComplexMatrix::zeros(rows, n);
    let mut vm = ComplexMatrix::zeros(n, n);
    let mut filled = 0;
    let mut values = Vec::with_capacity(n);
    for (k, &(s, j)) in sigma.iter().enumerate() {
        vm.set_column(k, &v[j]);
        if s > 1e-300 && s > 1e-15 * smax {
            let col: Vec<C64> = a[j].iter().map(|z| z / s).collect();
            u.set_column(k, &col);
            filled = k + 1;
            values.push(s);
        } else {
            values.push(if s > 1e-300 { s } else { 0.0 });
        }
    }
    let u = complete_from(&u, filled);
    Ok(SvdResult {
        left_vectors: u,
        singular_values: values,
        right_vectors: vm,
    })
}

// columns (i, j) <- (c a_i - s ph a_j, s a_i + c ph a_j)
fn rotate(cols: &mut [Vec<C64>], i: usize, j: usize, c: f64, s: f64, ph: C64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (ci, cj) = (&mut lo[i], &mut hi[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let yp = *y * ph;
        let xi = *x;
        *x = xi * c - yp * s;
        *y = xi * s + yp * c;
    }
}

fn fix_phases(out: &mut SvdResult) {
    let v = &mut out.right_vectors;
    let u = &mut out.left_vectors;
    for k in 0..v.cols() {
        let first = (0..v.rows()).map(|i| v[(i, k)]).find(|z| z.norm() > 1e-12);
        if let Some(z) = first {
            let ph = (z / z.norm()).conj();
            for i in 0..v.rows() {
                v[(i, k)] *= ph;
            }
            for i in 0..u.rows() {
                u[(i, k)] *= ph;
            }
        }
    }
}

/// Keeps the first `filled` orthonormal columns and fills the remaining ones
/// by Gram-Schmidt against the standard basis.
fn complete_from(m: &ComplexMatrix, filled: usize) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut basis: Vec<Vec<C64>> = (0..filled).map(|j| m.column(j)).collect();
    let mut e = 0;
    while basis.len() < cols && e < rows {
        let mut cand = alloc::vec![ZERO; rows];
        cand[e] = ONE;
        e += 1;
        for _ in 0..2 {
            for b in &basis {
                let p = inner(b, &cand);
                for (x, y) in cand.iter_mut().zip(b) {
                    *x -= p * y;
                }
            }
        }
        let nrm = norm(&cand);
        if nrm > 1e-8 {
            for x in cand.iter_mut() {
                *x /= nrm;
            }
            basis.push(cand);
        }
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Extends orthonormal columns to `n` orthonormal columns (square when
/// `n == rows`).
pub(crate) fn complete_columns(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut wide = ComplexMatrix::zeros(m.rows(), n);
    for j in 0..m.cols().min(n) {
        wide.set_column(j, &m.column(j));
    }
    complete_from(&wide, m.cols().min(n))
}
