//! Spectral classification of RG fixed points.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;
use core::fmt;

use crate::error::{Error, Result};
use crate::gauge::{jordan_structure, kraus_tensors, JordanFamily};
use crate::linalg::{
    eig_general, eigh, numeric_rank, rank_above, spectral_norm, ComplexMatrix, Spectrum, C64, ONE, ZERO,
};
use crate::mps::{MatrixProductState, SchmidtData};
use crate::rg::{fixed_point_operator, TransferMatrix};

/// Default tolerance of every classifier decision.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Jordan-form fits with a larger residual are not trusted.
pub const FIT_TOL: f64 = 1e-6;

const MAX_SQUARINGS: usize = 64;
const GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixedPointLabel {
    Product,
    GenericDimer,
    Ghz,
    WFamily,
    DomainWallFamily,
    PeriodicOrUnknown,
}

impl FixedPointLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Product => "Product",
            Self::GenericDimer => "GenericDimer",
            Self::Ghz => "GHZ",
            Self::WFamily => "WFamily",
            Self::DomainWallFamily => "DomainWallFamily",
            Self::PeriodicOrUnknown => "PeriodicOrUnknown",
        }
    }
}

impl fmt::Display for FixedPointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Multiplicities of the leading eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JordanFlags {
    pub algebraic: usize,
    pub geometric: usize,
}

impl JordanFlags {
    pub fn is_defective(&self) -> bool {
        self.geometric < self.algebraic
    }
}

/// Quantities the decision was based on.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    /// Eigenvalues of the normalized transfer matrix on the unit circle.
    pub unit_eigenvalues: usize,
    /// Some unimodular eigenvalue differs from 1.
    pub nontrivial_phase: bool,
    /// The unit eigenspace contains a vector of Schmidt rank at least two.
    pub entangled_fixed_vector: bool,
    /// Whether repeated squaring settled.
    pub limit_exists: bool,
    /// Residual of the triangular normal form, for Jordan-type fits.
    pub fit_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub label: FixedPointLabel,
    /// Weights `λ_i` of `Φ_L = Σ λ_i |ii>`, descending and summing to one.
    pub lambdas: Option<Vec<f64>>,
    /// Bond Schmidt data, coefficients `sqrt(λ_i)`.
    pub schmidt: Option<SchmidtData>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Rank of the limit of `E^n`; when no limit exists, the dimension of the
    /// unimodular spectral subspace.
    pub e_infinity_rank: usize,
    pub jordan: JordanFlags,
    pub evidence: Evidence,
    pub advisory: Option<&'static str>,
}

/// Dominant eigenvectors of a normalized transfer matrix, as `D x D`
/// matrices flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantPair {
    pub bond_dim: usize,
    pub phi_right: Vec<C64>,
    pub phi_left: Vec<C64>,
    pub schmidt_rank_right: usize,
    pub schmidt_rank_left: usize,
    /// Number of unit-magnitude eigenvalues.
    pub degeneracy: usize,
    pub defective: bool,
    /// Canonical weights, present when the pair is nondegenerate.
    pub lambdas: Option<Vec<f64>>,
}

impl DominantPair {
    fn full_rank(&self) -> bool {
        self.schmidt_rank_right == self.bond_dim && self.schmidt_rank_left == self.bond_dim
    }
}

/// `(algebraic, geometric)` multiplicity of `eigenvalue` in `m`.
pub fn detect_jordan(m: &ComplexMatrix, eigenvalue: C64, tol: f64) -> Result<JordanFlags> {
    let spec = eig_general(m, tol)?;
    jordan_at(m, &spec, eigenvalue, tol)
}

// eigenvalues of a size-k Jordan block split by ~eps^{1/k}, so clustering
// uses sqrt(tol) while the kernel dimension uses tol
fn jordan_at(m: &ComplexMatrix, spec: &Spectrum, z: C64, tol: f64) -> Result<JordanFlags> {
    let radius = tol.sqrt() * z.norm().max(1.0);
    let algebraic = spec.eigenvalues.iter().filter(|w| (*w - z).norm() <= radius).count();
    if algebraic == 0 {
        return Ok(JordanFlags {
            algebraic: 0,
            geometric: 0,
        });
    }
    let scale = spectral_norm(m)?.max(f64::MIN_POSITIVE);
    let kernel = m.rows() - rank_above(&m.shifted(z), tol * scale)?;
    Ok(JordanFlags {
        algebraic,
        geometric: kernel.clamp(1, algebraic),
    })
}

fn unvec(v: &[C64], bond: usize) -> ComplexMatrix {
    ComplexMatrix::from_vec(bond, bond, v.to_vec()).expect("length D²")
}

fn schmidt_rank(v: &[C64], bond: usize, tol: f64) -> usize {
    numeric_rank(&unvec(v, bond), tol).unwrap_or(0)
}

fn unit_vectors(spec: &Spectrum, radius: f64) -> Vec<Vec<C64>> {
    let mut out = Vec::new();
    for g in &spec.groups {
        if (g.value.norm() - 1.0).abs() <= radius {
            for j in 0..g.vectors.cols() {
                out.push(g.vectors.column(j));
            }
        }
    }
    out
}

// phase fixed so the trace is real positive, then Hermitian part
fn positive_form(v: &[C64], bond: usize) -> ComplexMatrix {
    let m = unvec(v, bond);
    let tr = m.trace();
    let m = if tr.norm() > 0.0 {
        m.scale(tr.conj() / tr.norm())
    } else {
        m
    };
    (&m + &m.adjoint()).scale_real(0.5)
}

fn psd_sqrt(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>)> {
    let eig = eigh(m)?;
    let vals: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let diag: Vec<C64> = vals.iter().map(|v| C64::new(v.sqrt(), 0.0)).collect();
    let root = eig
        .vectors
        .matmul(&ComplexMatrix::diagonal(&diag))?
        .matmul(&eig.vectors.adjoint())?;
    Ok((root, vals))
}

/// Right and left eigenvectors of the unit-magnitude eigenvalues. A
/// nondegenerate pair is brought to `Φ_R = Σ|ii>`, `Φ_L = Σ λ_i |ii>` when
/// both are of full Schmidt rank; the weights are reported whenever the pair
/// is nondegenerate.
pub fn dominant_eigenvectors(e: &TransferMatrix, tol: f64) -> Result<DominantPair> {
    let en = e.normalized()?;
    let bond = en.bond_dim();
    let radius = tol.sqrt();
    let spec = en.spectrum();
    let degeneracy = spec
        .eigenvalues
        .iter()
        .filter(|z| (z.norm() - 1.0).abs() <= radius)
        .count();
    let lead = spec.eigenvalues[0];
    let jordan = jordan_at(en.matrix(), spec, lead, tol)?;

    let right = unit_vectors(spec, radius);
    let left_spec = eig_general(&en.matrix().adjoint(), tol)?;
    let left = unit_vectors(&left_spec, radius);
    let (Some(r0), Some(l0)) = (right.first(), left.first()) else {
        return Err(Error::NumericalFailure("no unit-magnitude eigenvector"));
    };

    let mut pair = DominantPair {
        bond_dim: bond,
        phi_right: r0.clone(),
        phi_left: l0.clone(),
        schmidt_rank_right: schmidt_rank(r0, bond, tol),
        schmidt_rank_left: schmidt_rank(l0, bond, tol),
        degeneracy,
        defective: jordan.is_defective(),
        lambdas: None,
    };
    if degeneracy != 1 || pair.defective {
        return Ok(pair);
    }

    let r = positive_form(r0, bond);
    let l = positive_form(l0, bond);
    let (r_half, r_vals) = psd_sqrt(&r)?;
    let overlap = l.matmul(&r)?.trace().re;
    if overlap.abs() <= f64::MIN_POSITIVE {
        return Ok(pair);
    }
    let l = l.scale_real(1.0 / overlap);
    let sandwich = r_half.matmul(&l)?.matmul(&r_half)?;
    let sandwich = (&sandwich + &sandwich.adjoint()).scale_real(0.5);
    let mut lambdas: Vec<f64> = eigh(&sandwich)?.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = lambdas.iter().sum();
    for v in lambdas.iter_mut() {
        *v /= total;
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));

    if pair.full_rank() && r_vals.iter().all(|&v| v > 0.0) {
        let mut id = alloc::vec![ZERO; bond * bond];
        let mut diag = alloc::vec![ZERO; bond * bond];
        for i in 0..bond {
            id[i * bond + i] = ONE;
            diag[i * bond + i] = C64::new(lambdas[i], 0.0);
        }
        pair.phi_right = id;
        pair.phi_left = diag;
    }
    pair.lambdas = Some(lambdas);
    Ok(pair)
}

/// Searches the span of `basis` for a vector of Schmidt rank at least two.
fn span_has_entangled(basis: &[Vec<C64>], bond: usize, tol: f64) -> bool {
    if basis.iter().any(|v| schmidt_rank(v, bond, tol) >= 2) {
        return true;
    }
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            for a in 1..GRID {
                let ang = a as f64 * core::f64::consts::FRAC_PI_2 / GRID as f64;
                for p in 0..GRID {
                    let ph = C64::from_polar(ang.sin(), p as f64 * core::f64::consts::TAU / GRID as f64);
                    let v: Vec<C64> = basis[i]
                        .iter()
                        .zip(&basis[j])
                        .map(|(x, y)| x * ang.cos() + y * ph)
                        .collect();
                    if schmidt_rank(&v, bond, tol.sqrt()) >= 2 {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn report(label: FixedPointLabel, rank: usize, jordan: JordanFlags, evidence: Evidence) -> FixedPointReport {
    FixedPointReport {
        label,
        lambdas: None,
        schmidt: None,
        theta: None,
        alpha: None,
        beta: None,
        e_infinity_rank: rank,
        jordan,
        evidence,
        advisory: None,
    }
}

/// Assigns a transfer matrix to the fixed-point taxonomy. The full taxonomy
/// is available for bond dimension two; larger bonds only receive Product,
/// GenericDimer or PeriodicOrUnknown.
pub fn classify(e: &TransferMatrix, tol: f64) -> Result<FixedPointReport> {
    let en = e.normalized()?;
    let bond = en.bond_dim();
    let radius = tol.sqrt();
    let spec = en.spectrum();
    let unit: Vec<C64> = spec
        .eigenvalues
        .iter()
        .copied()
        .filter(|z| (z.norm() - 1.0).abs() <= radius)
        .collect();
    let nontrivial_phase = unit.iter().any(|z| (z - ONE).norm() > radius);
    let at_one = unit.iter().any(|z| (z - ONE).norm() <= radius);
    let lead = if at_one { ONE } else { spec.eigenvalues[0] };
    let jordan = jordan_at(en.matrix(), spec, lead, tol)?;
    let basis = unit_vectors(spec, radius);
    let mut evidence = Evidence {
        unit_eigenvalues: unit.len(),
        nontrivial_phase,
        entangled_fixed_vector: span_has_entangled(&basis, bond, tol),
        limit_exists: false,
        fit_residual: None,
    };

    if jordan.is_defective() {
        let mut out = report(FixedPointLabel::PeriodicOrUnknown, unit.len(), jordan, evidence.clone());
        if bond != 2 || !at_one {
            return Ok(out);
        }
        let Ok(kraus) = kraus_tensors(en.matrix(), bond, tol) else {
            return Ok(out);
        };
        let Some(js) = jordan_structure(&kraus, tol) else {
            return Ok(out);
        };
        evidence.fit_residual = Some(js.fit_residual);
        out.evidence = evidence;
        if js.fit_residual > FIT_TOL {
            return Ok(out);
        }
        match js.family {
            JordanFamily::W { theta } => {
                out.label = FixedPointLabel::WFamily;
                out.theta = Some(theta);
                out.advisory = Some("locally indistinguishable from a product state in the thermodynamic limit");
            }
            JordanFamily::DomainWall { alpha } => {
                out.label = FixedPointLabel::DomainWallFamily;
                out.theta = Some(0.0);
                out.beta = Some(FRAC_PI_4);
                out.alpha = Some(alpha);
                out.advisory = Some(
                    "locally indistinguishable from a GHZ state in the thermodynamic limit; \
                     only alpha is gauge invariant, theta and beta are reported in canonical form",
                );
            }
        }
        return Ok(out);
    }

    if nontrivial_phase {
        let mut out = report(FixedPointLabel::PeriodicOrUnknown, unit.len(), jordan, evidence);
        out.advisory = Some("unimodular eigenvalue other than 1: periodic or non-ergodic component");
        return Ok(out);
    }

    let limit = match fixed_point_operator(en.matrix(), MAX_SQUARINGS, tol) {
        Ok(l) => l,
        Err(_) => return Ok(report(FixedPointLabel::PeriodicOrUnknown, unit.len(), jordan, evidence)),
    };
    let Some(e_inf) = limit.stationary() else {
        return Ok(report(FixedPointLabel::PeriodicOrUnknown, unit.len(), jordan, evidence));
    };
    evidence.limit_exists = true;
    let rank = numeric_rank(e_inf, tol)?;

    if bond == 1 {
        return Ok(report(FixedPointLabel::Product, rank, jordan, evidence));
    }
    if rank == bond * bond {
        return Ok(report(FixedPointLabel::Product, rank, jordan, evidence));
    }
    match rank {
        1 => {
            let pair = dominant_eigenvectors(&en, tol)?;
            let lambdas: Vec<f64> = pair
                .lambdas
                .unwrap_or_default()
                .into_iter()
                .filter(|&v| v > tol)
                .collect();
            if lambdas.len() >= 2 {
                let mut out = report(FixedPointLabel::GenericDimer, rank, jordan, evidence);
                out.schmidt = Some(SchmidtData::from_probabilities(&lambdas)?);
                out.lambdas = Some(lambdas);
                Ok(out)
            } else {
                Ok(report(FixedPointLabel::Product, rank, jordan, evidence))
            }
        }
        2 if bond == 2 && evidence.entangled_fixed_vector => {
            let mut out = report(FixedPointLabel::Ghz, rank, jordan, evidence);
            out.advisory = Some("two ergodic components");
            Ok(out)
        }
        _ => Ok(report(FixedPointLabel::PeriodicOrUnknown, rank, jordan, evidence)),
    }
}

/// Fixed-point representative `A^{(pq)} = sqrt(λ_q) |p><q|` with physical
/// index `p * D + q`.
pub fn fixed_point_mps(pair: &DominantPair) -> Result<MatrixProductState> {
    let Some(lambdas) = &pair.lambdas else {
        return Err(Error::Unsupported(
            "fixed point needs a nondegenerate, diagonalizable pair",
        ));
    };
    if pair.degeneracy != 1 || pair.defective || !pair.full_rank() {
        return Err(Error::Unsupported(
            "fixed point needs a nondegenerate pair of full Schmidt rank",
        ));
    }
    fixed_point_from_weights(lambdas)
}

/// Same as [`fixed_point_mps`] from explicit weights (normalized here).
pub fn fixed_point_from_weights(lambdas: &[f64]) -> Result<MatrixProductState> {
    if lambdas.is_empty() || lambdas.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::Domain("weights must be positive".into()));
    }
    let total: f64 = lambdas.iter().sum();
    let bond = lambdas.len();
    let mut tensors = Vec::with_capacity(bond * bond);
    for p in 0..bond {
        for q in 0..bond {
            let mut a = ComplexMatrix::zeros(bond, bond);
            a[(p, q)] = C64::new((lambdas[q] / total).sqrt(), 0.0);
            tensors.push(a);
        }
    }
    MatrixProductState::new(tensors)
}
