//! Preset states, dimer entanglement spectra of the transverse Ising and XXZ
//! chains, and an exact-diagonalization reference for the Ising chain.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use crate::classify::FixedPointLabel;
use crate::error::{Error, Result};
use crate::linalg::{eigh, elliptic_k, elliptic_k_complementary, ComplexMatrix, C64, ONE, ZERO};
use crate::mps::{schmidt_decompose, MatrixProductState, PureStateVector, SchmidtData};

pub const DEFAULT_J_MAX: usize = 20;
/// Largest truncation level; the pattern set has `2^(j_max+1)` entries.
pub const MAX_J_MAX: usize = 22;
pub const MAX_ED_SITES: usize = 16;

const ED_TOL: f64 = 1e-10;
const LANCZOS_STEPS: usize = 80;
const LANCZOS_RESTARTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Product,
    Ghz,
    W { theta: f64 },
    Cluster,
    Aklt,
    DomainWall { alpha: f64, beta: f64, theta: f64 },
}

impl Preset {
    pub const NAMES: [&'static str; 6] = ["product", "ghz", "w", "cluster", "aklt", "domain_wall"];

    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::Domain(alloc::format!("non-finite preset parameter {bad}")));
        }
        let need = |expected: usize| -> Result<()> {
            if params.len() == expected {
                Ok(())
            } else {
                Err(Error::ParameterCount {
                    name: Self::canonical_name(name).unwrap_or("preset"),
                    expected,
                    found: params.len(),
                })
            }
        };
        match Self::canonical_name(name) {
            Some("product") => need(0).map(|_| Self::Product),
            Some("ghz") => need(0).map(|_| Self::Ghz),
            Some("cluster") => need(0).map(|_| Self::Cluster),
            Some("aklt") => need(0).map(|_| Self::Aklt),
            Some("w") => need(1).map(|_| Self::W { theta: params[0] }),
            Some("domain_wall") => need(3).map(|_| Self::DomainWall {
                alpha: params[0],
                beta: params[1],
                theta: params[2],
            }),
            _ => Err(Error::UnknownPreset(name.into())),
        }
    }

    fn canonical_name(name: &str) -> Option<&'static str> {
        let lower = name.to_ascii_lowercase().replace('-', "_");
        Self::NAMES.iter().copied().find(|n| *n == lower)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Product => "product",
            Self::Ghz => "ghz",
            Self::W { .. } => "w",
            Self::Cluster => "cluster",
            Self::Aklt => "aklt",
            Self::DomainWall { .. } => "domain_wall",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::W { theta } => alloc::vec![theta],
            Self::DomainWall { alpha, beta, theta } => alloc::vec![alpha, beta, theta],
            _ => Vec::new(),
        }
    }

    /// Class the flow of this preset ends in.
    pub fn expected_label(&self) -> FixedPointLabel {
        match self {
            Self::Product => FixedPointLabel::Product,
            Self::Ghz => FixedPointLabel::Ghz,
            Self::W { .. } => FixedPointLabel::WFamily,
            Self::Cluster | Self::Aklt => FixedPointLabel::GenericDimer,
            Self::DomainWall { .. } => FixedPointLabel::DomainWallFamily,
        }
    }

    pub fn build(&self) -> MatrixProductState {
        let r = |v: f64| C64::new(v, 0.0);
        let m = |rows: [[C64; 2]; 2]| ComplexMatrix::from_rows(&rows);
        let tensors = match *self {
            Self::Product => alloc::vec![ComplexMatrix::from_rows(&[[ONE]]), ComplexMatrix::from_rows(&[[ZERO]])],
            Self::Ghz => alloc::vec![m([[ONE, ZERO], [ZERO, ZERO]]), m([[ZERO, ZERO], [ZERO, ONE]])],
            Self::W { theta } => alloc::vec![
                m([[ONE, ZERO], [ZERO, C64::from_polar(1.0, -theta)]]),
                m([[ZERO, ZERO], [ONE, ZERO]]),
            ],
            Self::Cluster => {
                let s = r(FRAC_1_SQRT_2);
                alloc::vec![m([[s, s], [ZERO, ZERO]]), m([[ZERO, ZERO], [s, -s]])]
            }
            Self::Aklt => {
                let s = 1.0 / 3f64.sqrt();
                alloc::vec![
                    m([[ZERO, r(s)], [r(s), ZERO]]),
                    m([[ZERO, C64::new(0.0, -s)], [C64::new(0.0, s), ZERO]]),
                    m([[r(s), ZERO], [ZERO, r(-s)]]),
                ]
            }
            Self::DomainWall { alpha, beta, theta } => {
                let e = C64::from_polar(1.0, theta);
                alloc::vec![
                    m([[ZERO, ZERO], [r(alpha.cos() * beta.sin()), e]]),
                    m([[ZERO, ZERO], [r(alpha.sin()), ZERO]]),
                    m([[e.conj(), ZERO], [r(alpha.cos() * beta.cos()), ZERO]]),
                ]
            }
        };
        MatrixProductState::new(tensors).expect("preset tensors are consistent")
    }
}

/// Builds a preset by name.
pub fn make_preset(name: &str, params: &[f64]) -> Result<MatrixProductState> {
    Ok(Preset::from_name(name, params)?.build())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Field dominates; every mode costs `2j + 1`.
    Disordered,
    /// Coupling dominates; mode `j` costs `2j`, so the `j = 0` mode is free.
    Ordered,
}

/// Entanglement spectrum `exp(-ε Σ_j c_j n_j)` over occupation patterns
/// `n_j ∈ {0, 1}`, `j = 0..=j_max`, normalized over the truncated set.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    pub epsilon: f64,
    pub branch: Branch,
    pub j_max: usize,
    /// Descending probabilities.
    pub weights: Vec<f64>,
    pub entropy_bits: f64,
}

impl SchmidtSpectrum {
    fn new(epsilon: f64, branch: Branch, j_max: usize) -> Result<Self> {
        if j_max == 0 || j_max > MAX_J_MAX {
            return Err(Error::Domain(alloc::format!(
                "j_max must lie in 1..={MAX_J_MAX}, got {j_max}"
            )));
        }
        let cost = |j: usize| -> f64 {
            match branch {
                Branch::Disordered => (2 * j + 1) as f64,
                Branch::Ordered => (2 * j) as f64,
            }
        };
        let mut costs = alloc::vec![0.0f64];
        costs.reserve((1usize << (j_max + 1)) - 1);
        for j in 0..=j_max {
            let c = cost(j);
            let n = costs.len();
            for k in 0..n {
                costs.push(costs[k] + c);
            }
        }
        // Z = Π_j (1 + e^{-ε c_j})
        let log_z: f64 = (0..=j_max).map(|j| (-epsilon * cost(j)).exp().ln_1p()).sum();
        let mut weights: Vec<f64> = costs.iter().map(|c| (-epsilon * c - log_z).exp()).collect();
        weights.sort_by(|a, b| b.total_cmp(a));
        let entropy_bits = weights.iter().filter(|&&w| w > 0.0).map(|&w| -w * w.log2()).sum();
        Ok(Self {
            epsilon,
            branch,
            j_max,
            weights,
            entropy_bits,
        })
    }

    /// Schmidt data with the numerically negligible weights removed.
    pub fn schmidt_data(&self) -> Result<SchmidtData> {
        SchmidtData::from_probabilities(&self.weights)
    }
}

/// Ising dimer spectrum at transverse coupling `field`: ε = π K(sqrt(1-μ²)) / K(μ)
/// with μ = min(λ, 1/λ).
pub fn ising_dimer_spectrum(field: f64, j_max: usize) -> Result<SchmidtSpectrum> {
    if field <= 0.0 || !field.is_finite() {
        return Err(Error::Domain(alloc::format!("field must be positive, got {field}")));
    }
    if field == 1.0 {
        return Err(Error::Domain("field 1 is the critical point".into()));
    }
    let mu = field.min(1.0 / field);
    let epsilon = core::f64::consts::PI * elliptic_k_complementary(mu)? / elliptic_k(mu)?;
    let branch = if field < 1.0 {
        Branch::Disordered
    } else {
        Branch::Ordered
    };
    SchmidtSpectrum::new(epsilon, branch, j_max)
}

/// XXZ dimer spectrum for anisotropy Δ > 1: ordered branch with ε = arccosh Δ.
pub fn xxz_dimer_spectrum(delta: f64, j_max: usize) -> Result<SchmidtSpectrum> {
    if delta <= 1.0 || !delta.is_finite() {
        return Err(Error::Domain(alloc::format!("anisotropy must exceed 1, got {delta}")));
    }
    SchmidtSpectrum::new(delta.acosh(), Branch::Ordered, j_max)
}

fn apply_ising(field: f64, n: usize, v: &[f64], out: &mut [f64]) {
    for (s, (o, x)) in out.iter_mut().zip(v).enumerate() {
        let down = s.count_ones() as f64;
        *o = -(n as f64 - 2.0 * down) * x;
    }
    for i in 0..n.saturating_sub(1) {
        let mask = 0b11usize << i;
        for (s, x) in v.iter().enumerate() {
            out[s ^ mask] -= field * x;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ground state of `H = -λ Σ σˣσˣ - Σ σᶻ` on an open chain, by restarted
/// Lanczos with full reorthogonalization. The start vector is the uniform
/// superposition restricted to even `Π σᶻ`, the sector holding the ground
/// state; this keeps the quasi-degenerate odd partner of the ordered phase
/// out of the Krylov space.
pub fn ising_ground_state_ed(field: f64, n_sites: usize) -> Result<PureStateVector> {
    if n_sites > MAX_ED_SITES {
        return Err(Error::SizeCap {
            sites: n_sites,
            local_dim: 2,
        });
    }
    if n_sites == 0 || !field.is_finite() {
        return Err(Error::Domain("need at least one site and a finite field".into()));
    }
    let dim = 1usize << n_sites;
    let mut v: Vec<f64> = (0..dim)
        .map(|s: usize| if s.count_ones().is_multiple_of(2) { 1.0 } else { 0.0 })
        .collect();
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);

    let steps = LANCZOS_STEPS.min(dim);
    let mut hv = alloc::vec![0.0; dim];
    for _ in 0..LANCZOS_RESTARTS {
        let mut basis: Vec<Vec<f64>> = alloc::vec![v.clone()];
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        for k in 0..steps {
            let mut w = alloc::vec![0.0; dim];
            apply_ising(field, n_sites, &basis[k], &mut w);
            alphas.push(dot(&w, &basis[k]));
            for _ in 0..2 {
                for b in &basis {
                    let p = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            let beta = dot(&w, &w).sqrt();
            if beta < 1e-12 || k + 1 == steps {
                break;
            }
            w.iter_mut().for_each(|x| *x /= beta);
            betas.push(beta);
            basis.push(w);
        }
        let m = alphas.len();
        let mut t = ComplexMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = C64::new(alphas[i], 0.0);
            if i + 1 < m {
                t[(i, i + 1)] = C64::new(betas[i], 0.0);
                t[(i + 1, i)] = C64::new(betas[i], 0.0);
            }
        }
        let eig = eigh(&t)?;
        let energy = eig.values[m - 1];
        let mut ritz = alloc::vec![0.0; dim];
        for (k, b) in basis.iter().enumerate().take(m) {
            let y = eig.vectors[(k, m - 1)].re;
            ritz.iter_mut().zip(b).for_each(|(x, z)| *x += y * z);
        }
        let nr = dot(&ritz, &ritz).sqrt();
        ritz.iter_mut().for_each(|x| *x /= nr);
        apply_ising(field, n_sites, &ritz, &mut hv);
        let res: f64 = hv
            .iter()
            .zip(&ritz)
            .map(|(h, x)| (h - energy * x).powi(2))
            .sum::<f64>()
            .sqrt();
        v = ritz;
        if res < ED_TOL {
            let amps = v.iter().map(|&x| C64::new(x, 0.0)).collect();
            return PureStateVector::new(n_sites, 2, amps);
        }
    }
    Err(Error::NonConvergent("Lanczos ground state"))
}

/// Schmidt data across the middle cut of an even-length chain.
pub fn half_chain_spectrum(state: &PureStateVector) -> Result<SchmidtData> {
    if !state.sites().is_multiple_of(2) {
        return Err(Error::Domain("half-chain cut needs an even number of sites".into()));
    }
    schmidt_decompose(state, state.sites() / 2)
}
