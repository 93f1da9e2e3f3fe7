//! Gauge reconstruction from transfer matrices and the triangular normal
//! form of bond dimension two states with a Jordan-type leading eigenvalue.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{eig_general, eigh, inner, norm, svd, ComplexMatrix, C64, ONE, ZERO};

/// Tensors `K_k` with `Σ_k K_k ⊗ conj(K_k) = E`, recovered from the
/// eigen-decomposition of the reshuffled (Choi) matrix.
pub fn kraus_tensors(e: &ComplexMatrix, bond: usize, tol: f64) -> Result<Vec<ComplexMatrix>> {
    let d2 = bond * bond;
    if e.rows() != d2 || e.cols() != d2 {
        return Err(Error::DimensionMismatch {
            expected: d2,
            found: e.rows(),
        });
    }
    // R[(a b),(a' b')] = E[(a a'),(b b')]
    let mut r = ComplexMatrix::zeros(d2, d2);
    for a in 0..bond {
        for ap in 0..bond {
            for b in 0..bond {
                for bp in 0..bond {
                    r[(a * bond + b, ap * bond + bp)] = e[(a * bond + ap, b * bond + bp)];
                }
            }
        }
    }
    let eig = eigh(&r)?;
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Err(Error::ZeroState);
    }
    if eig.values.iter().any(|&v| v < -tol.sqrt() * top) {
        return Err(Error::Domain("transfer matrix is not completely positive".into()));
    }
    let mut out = Vec::new();
    for (k, &mu) in eig.values.iter().enumerate() {
        if mu <= tol * top {
            continue;
        }
        let s = mu.sqrt();
        let data = (0..d2).map(|i| eig.vectors[(i, k)] * s).collect();
        out.push(ComplexMatrix::from_vec(bond, bond, data)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JordanFamily {
    /// Diagonal entries differ by the phase `e^{-iθ}`.
    W { theta: f64 },
    /// Orthogonal diagonal entries; `alpha` is the only gauge invariant.
    DomainWall { alpha: f64 },
}

/// Lower-triangular normal form `X^{-1} A^p X = [[a_p, 0], [c_p, b_p]]`.
///
/// For the W family the coupling `c` is orthogonal to `a` and has the norm
/// of `a`; for domain walls `c` is orthogonal to `b - a`, has the norm of
/// `a`, and its overlap with `a` is real and non-negative.
#[derive(Debug, Clone)]
pub struct JordanStructure {
    pub family: JordanFamily,
    pub gauge: ComplexMatrix,
    pub gauge_inverse: ComplexMatrix,
    pub canonical_tensors: Vec<ComplexMatrix>,
    pub fit_residual: f64,
}

impl JordanStructure {
    /// Canonical tensors projected exactly onto the family: upper entries
    /// zeroed and the second diagonal rescaled to the norm of the first.
    /// Without this, roundoff in the diagonal norms doubles on every
    /// coarse-graining step and eventually drives the flow off the family.
    pub fn projected_tensors(&self) -> Vec<ComplexMatrix> {
        let a: Vec<C64> = self.canonical_tensors.iter().map(|b| b[(0, 0)]).collect();
        let b: Vec<C64> = self.canonical_tensors.iter().map(|b| b[(1, 1)]).collect();
        let ratio = norm(&a) / norm(&b);
        self.canonical_tensors
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t[(0, 1)] = ZERO;
                t[(1, 1)] *= ratio;
                t
            })
            .collect()
    }
}

/// Finds the triangular normal form of bond dimension two tensors, if they
/// have one with a non-removable coupling.
pub fn jordan_structure(tensors: &[ComplexMatrix], tol: f64) -> Option<JordanStructure> {
    if tensors.is_empty() || tensors[0].rows() != 2 {
        return None;
    }
    let scale = tensors.iter().map(ComplexMatrix::frobenius_norm).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let fit = tol.sqrt();
    let adj: Vec<ComplexMatrix> = tensors.iter().map(ComplexMatrix::adjoint).collect();
    let right = common_eigenvectors(tensors, fit * scale);
    let left = common_eigenvectors(&adj, fit * scale);
    for l in &left {
        for r in &right {
            if inner(l, r).norm() > fit {
                continue;
            }
            if let Some(js) = normal_form(tensors, l, r, fit, scale) {
                return Some(js);
            }
        }
    }
    None
}

fn common_eigenvectors(ks: &[ComplexMatrix], tol_abs: f64) -> Vec<Vec<C64>> {
    let n = ks[0].rows();
    let mut m = ComplexMatrix::zeros(n, n);
    for (p, k) in ks.iter().enumerate() {
        let w = C64::new(1.0 + 0.37 * p as f64, 0.61 - 0.23 * p as f64);
        m = &m + &k.scale(w);
    }
    let Ok(spec) = eig_general(&m, 1e-8) else {
        return Vec::new();
    };
    let mut out: Vec<Vec<C64>> = Vec::new();
    for g in &spec.groups {
        if g.geometric > 1 {
            continue;
        }
        for j in 0..g.vectors.cols() {
            let mut v = g.vectors.column(j);
            for _ in 0..2 {
                match refine(ks, &v) {
                    Some(w) => v = w,
                    None => break,
                }
            }
            if residual(ks, &v) <= tol_abs && !out.iter().any(|u| inner(u, &v).norm() > 1.0 - 1e-6) {
                out.push(v);
            }
        }
    }
    out
}

fn residual(ks: &[ComplexMatrix], v: &[C64]) -> f64 {
    ks.iter()
        .map(|k| {
            let kv = k.matvec(v).unwrap_or_default();
            let mu = inner(v, &kv);
            let r: Vec<C64> = kv.iter().zip(v).map(|(x, y)| x - mu * y).collect();
            norm(&r)
        })
        .fold(0.0, f64::max)
}

// smallest right singular vector of the stack [K_p - μ_p]
fn refine(ks: &[ComplexMatrix], v: &[C64]) -> Option<Vec<C64>> {
    let n = v.len();
    let mut stack = ComplexMatrix::zeros(n * ks.len(), n);
    for (p, k) in ks.iter().enumerate() {
        let mu = inner(v, &k.matvec(v).ok()?);
        let shifted = k.shifted(mu);
        for i in 0..n {
            for j in 0..n {
                stack[(p * n + i, j)] = shifted[(i, j)];
            }
        }
    }
    let s = svd(&stack).ok()?;
    Some(s.right_vectors.column(n - 1))
}

fn normal_form(ks: &[ComplexMatrix], l: &[C64], r: &[C64], fit: f64, scale: f64) -> Option<JordanStructure> {
    let mut x0 = ComplexMatrix::zeros(2, 2);
    x0.set_column(0, l);
    x0.set_column(1, r);
    let x0inv = x0.inverse().ok()?;
    let bs: Vec<ComplexMatrix> = ks
        .iter()
        .map(|k| x0inv.matmul(k).and_then(|m| m.matmul(&x0)))
        .collect::<Result<_>>()
        .ok()?;
    let upper = bs.iter().map(|b| b[(0, 1)].norm()).fold(0.0, f64::max);
    if upper > fit * scale {
        return None;
    }
    let a: Vec<C64> = bs.iter().map(|b| b[(0, 0)]).collect();
    let b: Vec<C64> = bs.iter().map(|b| b[(1, 1)]).collect();
    let c: Vec<C64> = bs.iter().map(|b| b[(1, 0)]).collect();
    let (na, nb) = (norm(&a), norm(&b));
    if na <= fit * scale || (na - nb).abs() > fit * na.max(nb) {
        return None;
    }
    let overlap = inner(&a, &b) / (na * nb);
    let g: Vec<C64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
    let ng = norm(&g);

    let (t, family, mut misfit) = if 1.0 - overlap.norm() <= fit {
        let theta = -overlap.arg();
        if ng > fit * na {
            (
                -inner(&a, &c) / inner(&a, &g),
                JordanFamily::W { theta },
                1.0 - overlap.norm(),
            )
        } else {
            // no shift freedom: the coupling must already avoid a
            let along = inner(&a, &c).norm() / (na * norm(&c).max(f64::MIN_POSITIVE));
            if along > fit {
                return None;
            }
            (ZERO, JordanFamily::W { theta }, along.max(1.0 - overlap.norm()))
        }
    } else if overlap.norm() <= fit {
        let t = if ng > 0.0 { -inner(&g, &c) / (ng * ng) } else { ZERO };
        (t, JordanFamily::DomainWall { alpha: 0.0 }, overlap.norm())
    } else {
        return None;
    };
    misfit = misfit.max(upper / scale).max((na - nb).abs() / na);

    let shifted: Vec<C64> = c.iter().zip(&g).map(|(x, y)| x + t * y).collect();
    let ns = norm(&shifted);
    if ns <= fit * na {
        return None;
    }
    let mut xscale = C64::new(ns / na, 0.0);
    let family = match family {
        JordanFamily::DomainWall { .. } => {
            let m = inner(&a, &shifted);
            if m.norm() > 0.0 {
                xscale *= m / m.norm();
            }
            let cosine = (m.norm() / (na * ns) * core::f64::consts::SQRT_2).min(1.0);
            JordanFamily::DomainWall { alpha: cosine.acos() }
        }
        w => w,
    };
    let tmat = ComplexMatrix::from_rows(&[[ONE, ZERO], [t, xscale]]);
    let gauge = x0.matmul(&tmat).ok()?;
    let gauge_inverse = gauge.inverse().ok()?;
    let canonical_tensors = ks
        .iter()
        .map(|k| gauge_inverse.matmul(k).and_then(|m| m.matmul(&gauge)))
        .collect::<Result<Vec<_>>>()
        .ok()?;
    Some(JordanStructure {
        family,
        gauge,
        gauge_inverse,
        canonical_tensors,
        fit_residual: misfit,
    })
}
