//! Random states and matrices for tests and sampling.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, C64};
use crate::mps::MatrixProductState;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("finite entries")
}

/// Haar-distributed unitary (Gram-Schmidt on a Ginibre matrix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    loop {
        let g = ginibre(rng, n, n);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut v = g.column(j);
            for _ in 0..2 {
                for b in &cols {
                    let p: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm < 1e-8 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|x| *x /= nrm);
            cols.push(v);
        }
        if ok {
            let mut u = ComplexMatrix::zeros(n, n);
            for (j, c) in cols.iter().enumerate() {
                u.set_column(j, c);
            }
            return u;
        }
    }
}

/// Well-conditioned random invertible matrix `1 + G / (2 sqrt n)`.
pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n).scale_real(0.5 / (n as f64).sqrt());
    &ComplexMatrix::identity(n) + &g
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Positive weights summing to one, each at least `floor / n`.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor / n as f64 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Translationally invariant MPS with Gaussian tensors and periodic boundary.
pub fn random_mps<R: Rng + ?Sized>(rng: &mut R, phys_dim: usize, bond_dim: usize) -> MatrixProductState {
    let tensors = (0..phys_dim).map(|_| ginibre(rng, bond_dim, bond_dim)).collect();
    MatrixProductState::new(tensors).expect("consistent shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..5 {
            let u = random_unitary(&mut rng, n);
            assert!(u.matmul(&u.adjoint()).unwrap().distance(&ComplexMatrix::identity(n)) < 1e-12);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_weights(&mut rng, 5, 0.1);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn seeded_mps_is_reproducible() {
        let a = random_mps(&mut ChaCha8Rng::seed_from_u64(9), 3, 2);
        let b = random_mps(&mut ChaCha8Rng::seed_from_u64(9), 3, 2);
        assert_eq!(a, b);
        assert_eq!((a.phys_dim(), a.bond_dim()), (3, 2));
    }
}
