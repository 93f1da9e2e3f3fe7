//! Translationally invariant matrix product states, their realization as
//! explicit state vectors on short rings, and diagnostics on those vectors.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{svd, ComplexMatrix, C64, ZERO};

/// Largest number of amplitudes `state_vector` will materialize.
pub const MAX_AMPLITUDES: usize = 1 << 22;

/// Schmidt coefficients below this fraction of the largest are treated as zero.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;

/// A translationally invariant MPS: `d` tensors `A^p` of size `D x D` and a
/// boundary operator `B` closing the chain as `Tr(B A^{p1} ... A^{pm})`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProductState {
    tensors: Vec<ComplexMatrix>,
    boundary: ComplexMatrix,
}

impl MatrixProductState {
    /// Periodic closure (identity boundary).
    pub fn new(tensors: Vec<ComplexMatrix>) -> Result<Self> {
        let bond = tensors.first().map_or(0, |t| t.rows());
        Self::with_boundary(tensors, ComplexMatrix::identity(bond))
    }

    pub fn with_boundary(tensors: Vec<ComplexMatrix>, boundary: ComplexMatrix) -> Result<Self> {
        let first = tensors
            .first()
            .ok_or_else(|| Error::InvalidState("no tensors".into()))?;
        let bond = first.rows();
        if bond == 0 {
            return Err(Error::InvalidState("zero bond dimension".into()));
        }
        for (p, t) in tensors.iter().enumerate() {
            if t.rows() != bond || t.cols() != bond {
                return Err(Error::InvalidState(format!(
                    "tensor {p} is {}x{}, expected {bond}x{bond}",
                    t.rows(),
                    t.cols()
                )));
            }
        }
        if tensors.iter().all(ComplexMatrix::is_zero) {
            return Err(Error::InvalidState("all tensors vanish".into()));
        }
        if boundary.rows() != bond || boundary.cols() != bond {
            return Err(Error::InvalidState(format!(
                "boundary is {}x{}, expected {bond}x{bond}",
                boundary.rows(),
                boundary.cols()
            )));
        }
        Ok(Self { tensors, boundary })
    }

    /// Physical dimension `d`.
    pub fn phys_dim(&self) -> usize {
        self.tensors.len()
    }

    /// Bond dimension `D`.
    pub fn bond_dim(&self) -> usize {
        self.boundary.rows()
    }

    pub fn tensors(&self) -> &[ComplexMatrix] {
        &self.tensors
    }

    pub fn boundary(&self) -> &ComplexMatrix {
        &self.boundary
    }

    pub fn has_periodic_boundary(&self) -> bool {
        self.boundary == ComplexMatrix::identity(self.bond_dim())
    }

    /// Same tensors with a different boundary operator.
    pub fn replace_boundary(&self, boundary: ComplexMatrix) -> Result<Self> {
        Self::with_boundary(self.tensors.clone(), boundary)
    }

    /// Every tensor multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            tensors: self.tensors.iter().map(|t| t.scale_real(factor)).collect(),
            boundary: self.boundary.clone(),
        }
    }

    /// Mixes the physical index: `A'^q = Σ_p u[q,p] A^p`.
    pub fn mix_physical(&self, u: &ComplexMatrix) -> Result<Self> {
        let d = self.phys_dim();
        if u.rows() != d || u.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: u.rows(),
            });
        }
        let bond = self.bond_dim();
        let tensors = (0..d)
            .map(|q| {
                let mut acc = ComplexMatrix::zeros(bond, bond);
                for (p, a) in self.tensors.iter().enumerate() {
                    acc = &acc + &a.scale(u[(q, p)]);
                }
                acc
            })
            .collect();
        Self::with_boundary(tensors, self.boundary.clone())
    }

    /// Bond similarity `A^p -> X A^p X^{-1}`, boundary `B -> X B X^{-1}`.
    pub fn gauge_bond(&self, x: &ComplexMatrix) -> Result<Self> {
        let xinv = x.inverse()?;
        let conj = |a: &ComplexMatrix| -> Result<ComplexMatrix> { x.matmul(a)?.matmul(&xinv) };
        let tensors = self.tensors.iter().map(conj).collect::<Result<Vec<_>>>()?;
        Self::with_boundary(tensors, conj(&self.boundary)?)
    }
}

/// Normalized pure state of `sites` sites with `local_dim` levels each.
/// Basis index is big-endian: site 0 is the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVector {
    sites: usize,
    local_dim: usize,
    amplitudes: Vec<C64>,
}

impl PureStateVector {
    /// Validates the length and normalizes.
    pub fn new(sites: usize, local_dim: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let len = checked_len(sites, local_dim)?;
        if amplitudes.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        let amplitudes = amplitudes.into_iter().map(|z| z / norm).collect();
        Ok(Self {
            sites,
            local_dim,
            amplitudes,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        let n: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        (n - 1.0).abs() <= 1e-12
    }

    /// Applies `op` to one site, returning the raw (unnormalized) amplitudes.
    fn apply_local(&self, amps: &[C64], op: &ComplexMatrix, site: usize) -> Result<Vec<C64>> {
        let d = self.local_dim;
        if op.rows() != d || op.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: op.rows(),
            });
        }
        if site >= self.sites {
            return Err(Error::Domain(format!(
                "site {site} out of range for {} sites",
                self.sites
            )));
        }
        let right = d.pow((self.sites - site - 1) as u32);
        let left = amps.len() / (d * right);
        let mut out = alloc::vec![ZERO; amps.len()];
        for l in 0..left {
            for p in 0..d {
                for q in 0..d {
                    let o = op[(p, q)];
                    if o.re == 0.0 && o.im == 0.0 {
                        continue;
                    }
                    let dst = (l * d + p) * right;
                    let src = (l * d + q) * right;
                    for r in 0..right {
                        out[dst + r] += o * amps[src + r];
                    }
                }
            }
        }
        Ok(out)
    }

    fn braket(&self, other: &[C64]) -> C64 {
        self.amplitudes.iter().zip(other).map(|(a, b)| a.conj() * b).sum()
    }
}

fn checked_len(sites: usize, local_dim: usize) -> Result<usize> {
    if sites == 0 || local_dim == 0 {
        return Err(Error::Domain("state needs at least one site and level".into()));
    }
    let mut len = 1usize;
    for _ in 0..sites {
        len = len
            .checked_mul(local_dim)
            .filter(|&l| l <= MAX_AMPLITUDES)
            .ok_or(Error::SizeCap { sites, local_dim })?;
    }
    Ok(len)
}

/// Schmidt coefficients across a cut and the entanglement entropy in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtData {
    /// Nonzero coefficients, descending, with squares summing to one.
    pub coefficients: Vec<f64>,
    pub entropy_bits: f64,
}

impl SchmidtData {
    /// From raw (possibly unnormalized) singular values. Values below
    /// `SCHMIDT_CUTOFF` times the largest are dropped.
    pub fn from_singular_values(values: &[f64]) -> Result<Self> {
        let max = values.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Err(Error::ZeroState);
        }
        let mut kept: Vec<f64> = values.iter().copied().filter(|&c| c > SCHMIDT_CUTOFF * max).collect();
        kept.sort_by(|a, b| b.total_cmp(a));
        let norm = kept.iter().map(|c| c * c).sum::<f64>().sqrt();
        for c in kept.iter_mut() {
            *c /= norm;
        }
        let entropy_bits = kept
            .iter()
            .map(|c| c * c)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum::<f64>()
            .max(0.0);
        Ok(Self {
            coefficients: kept,
            entropy_bits,
        })
    }

    /// From probabilities (squared coefficients).
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        let values: Vec<f64> = probs.iter().map(|p| p.max(0.0).sqrt()).collect();
        Self::from_singular_values(&values)
    }

    /// Squared coefficients: eigenvalues of the reduced density operator.
    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }
}

/// Realizes `|ψ> = Σ Tr(B A^{p1} ... A^{pm}) |p1 ... pm>` and normalizes it.
pub fn state_vector(mps: &MatrixProductState, m: usize) -> Result<PureStateVector> {
    let d = mps.phys_dim();
    let len = checked_len(m, d)?;
    let mut amps = alloc::vec![ZERO; len];
    // depth-first over prefixes, keeping the running product B A^{p1}...A^{pk}
    let mut stack: Vec<(usize, usize, ComplexMatrix)> = alloc::vec![(0, 0, mps.boundary().clone())];
    while let Some((depth, index, prod)) = stack.pop() {
        if depth + 1 == m {
            for (p, a) in mps.tensors().iter().enumerate() {
                amps[index * d + p] = trace_of_product(&prod, a);
            }
            continue;
        }
        for (p, a) in mps.tensors().iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let next = prod.matmul(a)?;
            if next.is_zero() {
                continue;
            }
            stack.push((depth + 1, index * d + p, next));
        }
    }
    PureStateVector::new(m, d, amps)
}

fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut t = ZERO;
    for i in 0..n {
        for k in 0..n {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t
}

/// `<ψ| O_site |ψ>`.
pub fn expectation_local(state: &PureStateVector, op: &ComplexMatrix, site: usize) -> Result<C64> {
    let applied = state.apply_local(&state.amplitudes, op, site)?;
    Ok(state.braket(&applied))
}

/// `<O_i O_j> - <O_i><O_j>`.
pub fn connected_correlator(
    state: &PureStateVector,
    op_a: &ComplexMatrix,
    site_i: usize,
    op_b: &ComplexMatrix,
    site_j: usize,
) -> Result<C64> {
    if site_i == site_j {
        return Err(Error::Domain("correlator needs two distinct sites".into()));
    }
    let b_applied = state.apply_local(&state.amplitudes, op_b, site_j)?;
    let ab_applied = state.apply_local(&b_applied, op_a, site_i)?;
    let joint = state.braket(&ab_applied);
    let ea = expectation_local(state, op_a, site_i)?;
    let eb = state.braket(&b_applied);
    Ok(joint - ea * eb)
}

/// Schmidt decomposition across the cut between sites `cut - 1` and `cut`.
pub fn schmidt_decompose(state: &PureStateVector, cut: usize) -> Result<SchmidtData> {
    if cut == 0 || cut >= state.sites {
        return Err(Error::Domain(format!(
            "cut {cut} must lie strictly inside 0..{}",
            state.sites
        )));
    }
    let left = state.local_dim.pow(cut as u32);
    let right = state.amplitudes.len() / left;
    let m = ComplexMatrix::from_vec(left, right, state.amplitudes.clone())?;
    let s = svd(&m)?;
    SchmidtData::from_singular_values(&s.singular_values)
}

/// Von Neumann entropy (bits) of the block of the first `block_len` sites.
pub fn block_entropy(state: &PureStateVector, block_len: usize) -> Result<f64> {
    Ok(schmidt_decompose(state, block_len)?.entropy_bits)
}

/// Von Neumann entropy (bits) of a contiguous block at an arbitrary offset,
/// via the reduced density matrix of that block.
pub fn block_entropy_at(state: &PureStateVector, start: usize, block_len: usize) -> Result<f64> {
    let (m, d) = (state.sites, state.local_dim);
    if block_len == 0 || start + block_len > m || block_len >= m {
        return Err(Error::Domain(format!(
            "block [{start}, {}) invalid for {m} sites",
            start + block_len
        )));
    }
    let inner = d.pow(block_len as u32);
    let right = d.pow((m - start - block_len) as u32);
    let left = state.amplitudes.len() / (inner * right);
    let mut rho = ComplexMatrix::zeros(inner, inner);
    for l in 0..left {
        for r in 0..right {
            for a in 0..inner {
                let x = state.amplitudes[(l * inner + a) * right + r];
                if x.re == 0.0 && x.im == 0.0 {
                    continue;
                }
                for b in 0..inner {
                    let y = state.amplitudes[(l * inner + b) * right + r];
                    rho[(a, b)] += x * y.conj();
                }
            }
        }
    }
    let eig = crate::linalg::eigh(&rho)?;
    Ok(SchmidtData::from_probabilities(&eig.values)?.entropy_bits)
}
