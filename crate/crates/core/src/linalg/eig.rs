use alloc::vec::Vec;

use super::{rank_above, spectral_norm, svd, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Grouping tolerance for eigenvalue multiplicities, relative to the
/// magnitude of the leading eigenvalue.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

const ITERS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of a square matrix plus, for every group of (numerically)
/// coincident eigenvalues, the multiplicities and a basis of right
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// All eigenvalues, sorted by descending magnitude.
    pub eigenvalues: Vec<C64>,
    pub groups: Vec<EigenGroup>,
    /// Every group's eigenvectors side by side, in group order.
    pub right_vectors: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct EigenGroup {
    /// Mean of the grouped eigenvalues.
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
    /// Orthonormal basis of the eigenspace, as columns.
    pub vectors: ComplexMatrix,
}

impl EigenGroup {
    pub fn is_defective(&self) -> bool {
        self.geometric < self.algebraic
    }
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn leading_magnitude(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |z| z.norm())
    }

    /// Group whose value lies within `tol` of `z`.
    pub fn group_near(&self, z: C64, tol: f64) -> Option<&EigenGroup> {
        self.groups
            .iter()
            .filter(|g| (g.value - z).norm() <= tol)
            .min_by(|a, b| (a.value - z).norm().total_cmp(&(b.value - z).norm()))
    }
}

/// Eigen-decomposition of a general square matrix.
///
/// Eigenvalues come from Householder reduction to Hessenberg form followed by
/// single-shift complex QR iteration. Eigenvalues closer than
/// `tol * |lambda_max|` are grouped; each group's geometric multiplicity is
/// `dim - rank(M - lambda I)` at threshold `tol * ||M||_2`, and its
/// eigenvectors span the corresponding numerical kernel.
pub fn eig_general(m: &ComplexMatrix, tol: f64) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    if m.rows() == 0 {
        return Err(Error::Domain("eigen-decomposition of an empty matrix".into()));
    }
    let n = m.rows();
    let mut eigenvalues = hessenberg_qr(m)?;
    sort_by_magnitude(&mut eigenvalues);

    let scale = eigenvalues[0].norm();
    let group_tol = if scale > 0.0 { tol * scale } else { tol };
    let clusters = cluster(&eigenvalues, group_tol);

    let mnorm = spectral_norm(m)?;
    let rank_tol = tol * mnorm.max(f64::MIN_POSITIVE);
    let mut groups = Vec::with_capacity(clusters.len());
    let mut all_vectors: Vec<Vec<C64>> = Vec::new();
    for members in clusters {
        let algebraic = members.len();
        let value = members.iter().map(|&k| eigenvalues[k]).sum::<C64>() / algebraic as f64;
        let shifted = m.shifted(value);
        let rank = rank_above(&shifted, rank_tol)?;
        let geometric = (n - rank).clamp(1, algebraic);
        let vectors = smallest_right_vectors(&shifted, geometric)?;
        for j in 0..vectors.cols() {
            all_vectors.push(vectors.column(j));
        }
        groups.push(EigenGroup {
            value,
            algebraic,
            geometric,
            vectors,
        });
    }
    let mut right_vectors = ComplexMatrix::zeros(n, all_vectors.len());
    for (j, v) in all_vectors.iter().enumerate() {
        right_vectors.set_column(j, v);
    }
    Ok(Spectrum {
        eigenvalues,
        groups,
        right_vectors,
    })
}

/// Descending magnitude; ties broken by real then imaginary part so the
/// order is reproducible.
pub(crate) fn sort_by_magnitude(v: &mut [C64]) {
    v.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

// single-linkage clustering of eigenvalues at an absolute distance
fn cluster(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let root = find(&mut label, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.push(i),
            None => groups.push((root, alloc::vec![i])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// The `k` right singular vectors belonging to the smallest singular values.
fn smallest_right_vectors(m: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
    let s = svd(m)?;
    let n = m.cols();
    let v = super::svd::complete_columns(&s.right_vectors, n);
    let mut out = ComplexMatrix::zeros(n, k);
    for c in 0..k {
        out.set_column(c, &v.column(n - k + c));
    }
    Ok(out)
}

fn hessenberg_qr(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = m.rows();
    let mut h = m.clone();
    reduce_to_hessenberg(&mut h);
    let anorm = h.frobenius_norm();
    if anorm == 0.0 {
        return Ok(alloc::vec![ZERO; n]);
    }

    let mut eig = alloc::vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            // relative test, floored so blocks of roundoff-sized entries still deflate
            let s = s.max(f64::EPSILON * anorm);
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > ITERS_PER_EIGENVALUE * n {
            return Err(Error::NumericalFailure("QR iteration cap exceeded"));
        }

        let shift = if iter.is_multiple_of(11) {
            // exceptional shift to break cycles
            let extra = if hi >= 2 { h[(hi - 1, hi - 2)].norm() } else { 0.0 };
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() + extra, 0.0)
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_step(&mut h, lo, hi, shift);
    }
    Ok(eig)
}

fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (l1, l2) = (mid + disc, mid - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

// one explicit shifted QR sweep on the active window [lo, hi]
fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: C64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let (x, y) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        for i in lo..=(k + 1).min(hi) {
            let (x, y) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = x * c + s.conj() * y;
            h[(i, k + 1)] = -s * x + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

// rotation G = [[c, s], [-conj(s), c]] with G [x; y] = [r; 0]
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let r = (ax * ax + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, ONE);
    }
    let c = ax / r;
    let s = (x / ax) * y.conj() / r;
    (c, s)
}

fn reduce_to_hessenberg(h: &mut ComplexMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = super::norm(&x);
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = super::norm(&v);
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2 v v†) H
        for j in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * h[(k + 1 + t, j)]).sum();
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= *vi * dot * 2.0;
            }
        }
        // H <- H (I - 2 v v†)
        for i in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vi)| h[(i, k + 1 + t)] * vi).sum();
            for (t, vi) in v.iter().enumerate() {
                h[(i, k + 1 + t)] -= dot * vi.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Real eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

/// Only the Hermitian part `(M + M†)/2` is used.
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let n = m.rows();
    let mut a = &(m + &m.adjoint()) * &ComplexMatrix::diagonal(&alloc::vec![C64::new(0.5, 0.0); n]);
    let mut v = ComplexMatrix::identity(n);
    let total = a.frobenius_norm();
    let mut converged = total == 0.0;
    for _ in 0..100 {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g <= 1e-300 {
                    continue;
                }
                let ph = (apq / g).conj();
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let theta = (aqq - app) / (2.0 * g);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns: p <- c p - s ph q ; q <- s p + c ph q
                for i in 0..n {
                    let (x, y) = (a[(i, p)], a[(i, q)] * ph);
                    a[(i, p)] = x * c - y * s;
                    a[(i, q)] = x * s + y * c;
                    let (x, y) = (v[(i, p)], v[(i, q)] * ph);
                    v[(i, p)] = x * c - y * s;
                    v[(i, q)] = x * s + y * c;
                }
                // rows: conjugate transform
                for j in 0..n {
                    let (x, y) = (a[(p, j)], a[(q, j)] * ph.conj());
                    a[(p, j)] = x * c - y * s;
                    a[(q, j)] = x * s + y * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure("Jacobi eigen sweep cap exceeded"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &v.column(i));
    }
    Ok(HermitianEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::from_vec(n, n, data).unwrap()
    }

    #[test]
    fn diagonal_spectrum() {
        let m = ComplexMatrix::from_real_rows(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]);
        let s = eig_general(&m, 1e-8).unwrap();
        let re: Vec<f64> = s.eigenvalues.iter().map(|z| z.re).collect();
        assert_eq!(re, [3.0, 2.0, 1.0]);
        assert_eq!(s.groups.len(), 3);
    }

    #[test]
    fn jordan_block_multiplicities() {
        let m = ComplexMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        let s = eig_general(&m, 1e-8).unwrap();
        assert_eq!(s.groups.len(), 1);
        let g = &s.groups[0];
        assert!((g.value - ONE).norm() < 1e-12);
        assert_eq!((g.algebraic, g.geometric), (2, 1));
        let v = g.vectors.column(0);
        assert!(v[1].norm() < 1e-12);
    }

    #[test]
    fn aklt_sigma_transfer_spectrum() {
        // sum_p sigma^p (x) conj(sigma^p); oracle: characteristic polynomial
        // (x - 3)(x + 1)^3 worked out in the Bell basis
        let e = ComplexMatrix::from_real_rows(&[
            [1.0, 0.0, 0.0, 2.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0],
            [2.0, 0.0, 0.0, 1.0],
        ]);
        let s = eig_general(&e, 1e-8).unwrap();
        let expect = [3.0, -1.0, -1.0, -1.0];
        for (z, x) in s.eigenvalues.iter().zip(expect) {
            assert!((z - C64::new(x, 0.0)).norm() < 1e-10, "{z}");
        }
    }

    #[test]
    fn eigenvectors_satisfy_equation() {
        for seed in 0..6 {
            let m = random(6, seed);
            let s = eig_general(&m, 1e-8).unwrap();
            for g in &s.groups {
                for j in 0..g.vectors.cols() {
                    let v = g.vectors.column(j);
                    let mv = m.matvec(&v).unwrap();
                    let res: f64 = mv
                        .iter()
                        .zip(&v)
                        .map(|(a, b)| (a - g.value * b).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    assert!(res < 1e-9, "residual {res}");
                }
            }
        }
    }

    #[test]
    fn product_of_eigenvalues_is_determinant() {
        for n in [1, 2, 5, 9, 16] {
            let m = random(n, 100 + n as u64);
            let prod: C64 = eig_general(&m, 1e-8).unwrap().eigenvalues.iter().product();
            let det = m.determinant().unwrap();
            assert!((prod - det).norm() <= 1e-8 * det.norm(), "n={n}");
        }
    }

    #[test]
    fn hermitian_jacobi() {
        let a = random(7, 42);
        let h = &a + &a.adjoint();
        let e = eigh(&h).unwrap();
        let d = ComplexMatrix::diagonal(&e.values.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
        let rec = &(&e.vectors * &d) * &e.vectors.adjoint();
        assert!(rec.distance(&h) < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_non_square() {
        assert!(eig_general(&ComplexMatrix::zeros(2, 3), 1e-8).is_err());
    }
}
