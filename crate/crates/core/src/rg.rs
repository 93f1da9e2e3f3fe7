//! Exact coarse-graining of translationally invariant MPS.
//!
//! One step merges sites `(2j, 2j+1)` into a block spin with basis index
//! `p * d + q`, stacks the products `A^p A^q` as the rows of a `d² x D²`
//! matrix and keeps its SVD: the left singular vectors form the isometry
//! selecting the new representative, `λ_l V^l` become the new tensors. Since
//! the bond space is untouched, the transfer matrix of the coarse state is
//! exactly the square of the old one.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gauge;
use crate::linalg::{eig_general, eigh, kron, svd, ComplexMatrix, Spectrum, C64, DEFAULT_GROUP_TOL, ZERO};
use crate::mps::{MatrixProductState, SchmidtData};

/// Singular values at or below this fraction of the largest are dropped.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

/// Consecutive steps a non-trivial unimodular eigenvalue may survive before a
/// flow is declared periodic. Phases `-1` and `±i` resolve within this window.
pub const PERIOD_PATIENCE: usize = 2;

const UNIT_CIRCLE_TOL: f64 = 1e-8;

/// `E = Σ_p A^p ⊗ conj(A^p)` with its spectrum.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    bond_dim: usize,
    matrix: ComplexMatrix,
    spectrum: Spectrum,
}

impl TransferMatrix {
    fn from_matrix(bond_dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        let spectrum = eig_general(&matrix, DEFAULT_GROUP_TOL)?;
        Ok(Self {
            bond_dim,
            matrix,
            spectrum,
        })
    }

    pub fn from_mps(mps: &MatrixProductState) -> Result<Self> {
        transfer_matrix(mps)
    }

    /// `E²`, the transfer matrix after one exact coarse-graining step.
    pub fn squared(&self) -> Result<Self> {
        Self::from_matrix(self.bond_dim, self.matrix.matmul(&self.matrix)?)
    }

    /// `E / |λ_max|`.
    pub fn normalized(&self) -> Result<Self> {
        let lead = self.leading_magnitude();
        if lead <= f64::MIN_POSITIVE {
            return Err(Error::Domain("transfer matrix has no nonzero eigenvalue".into()));
        }
        let mut spectrum = self.spectrum.clone();
        for z in spectrum.eigenvalues.iter_mut() {
            *z /= lead;
        }
        for g in spectrum.groups.iter_mut() {
            g.value /= lead;
        }
        Ok(Self {
            bond_dim: self.bond_dim,
            matrix: self.matrix.scale_real(1.0 / lead),
            spectrum,
        })
    }

    /// Transfer matrix of the bond-gauged state `X A^p X^{-1}`.
    pub fn in_bond_gauge(&self, x: &ComplexMatrix) -> Result<Self> {
        let xx = kron(x, &x.conj());
        let inv = xx.inverse()?;
        Self::from_matrix(self.bond_dim, xx.matmul(&self.matrix)?.matmul(&inv)?)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// `D²`.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    pub fn leading_magnitude(&self) -> f64 {
        self.spectrum.leading_magnitude()
    }
}

/// `E = Σ_p A^p ⊗ conj(A^p)`.
pub fn transfer_matrix(mps: &MatrixProductState) -> Result<TransferMatrix> {
    let d2 = mps.bond_dim() * mps.bond_dim();
    let mut e = ComplexMatrix::zeros(d2, d2);
    for a in mps.tensors() {
        e = &e + &kron(a, &a.conj());
    }
    TransferMatrix::from_matrix(mps.bond_dim(), e)
}

/// Outcome of one coarse-graining step.
#[derive(Debug, Clone)]
pub struct RgStepResult {
    /// Block-spin state with physical dimension equal to the retained rank.
    pub coarse_state: MatrixProductState,
    /// `d' x d²` with orthonormal rows; row `l` maps the pair basis onto
    /// block-spin level `l`.
    pub isometry: ComplexMatrix,
    /// Retained singular values, descending.
    pub singular_values: Vec<f64>,
    /// Dropped squared singular values over the total.
    pub discarded_weight: f64,
    /// Physical dimension before the step.
    pub fine_phys_dim: usize,
}

/// Merges neighbouring sites and selects the SVD representative.
pub fn coarse_grain_step(mps: &MatrixProductState, drop_tol_rel: f64) -> Result<RgStepResult> {
    let d = mps.phys_dim();
    let bond = mps.bond_dim();
    let mut stacked = ComplexMatrix::zeros(d * d, bond * bond);
    for (p, ap) in mps.tensors().iter().enumerate() {
        for (q, aq) in mps.tensors().iter().enumerate() {
            let prod = ap.matmul(aq)?;
            for (k, &z) in prod.as_slice().iter().enumerate() {
                stacked[(p * d + q, k)] = z;
            }
        }
    }
    if stacked.is_zero() {
        return Err(Error::InvalidState("all pair products vanish".into()));
    }
    let s = svd(&stacked)?;
    let smax = s.singular_values[0];
    let keep = s
        .singular_values
        .iter()
        .take_while(|&&x| x > drop_tol_rel * smax)
        .count();
    let total: f64 = s.singular_values.iter().map(|x| x * x).sum();
    let dropped: f64 = s.singular_values[keep..].iter().map(|x| x * x).sum();

    let mut isometry = ComplexMatrix::zeros(keep, d * d);
    let mut tensors = Vec::with_capacity(keep);
    for l in 0..keep {
        for r in 0..d * d {
            isometry[(l, r)] = s.left_vectors[(r, l)].conj();
        }
        // A'^l = λ_l V^l with (V^l)_{αγ} = conj(v_l[αγ])
        let lam = s.singular_values[l];
        let data = (0..bond * bond).map(|k| s.right_vectors[(k, l)].conj() * lam).collect();
        tensors.push(ComplexMatrix::from_vec(bond, bond, data)?);
    }
    let coarse_state = MatrixProductState::with_boundary(tensors, mps.boundary().clone())?;
    Ok(RgStepResult {
        coarse_state,
        isometry,
        singular_values: s.singular_values[..keep].to_vec(),
        discarded_weight: if total > 0.0 { dropped / total } else { 0.0 },
        fine_phys_dim: d,
    })
}

/// Scales every tensor by `1/sqrt(|λ_max(E)|)`.
pub fn normalize_leading(mps: &MatrixProductState) -> Result<MatrixProductState> {
    let e = transfer_matrix(mps)?;
    let lead = e.leading_magnitude();
    if lead <= 1e-300 {
        return Err(Error::Domain("leading transfer eigenvalue is zero".into()));
    }
    Ok(mps.scaled(1.0 / lead.sqrt()))
}

/// `O' = U (O ⊗ 1) U†` for an observable on the left member of a pair.
pub fn renormalize_observable(op: &ComplexMatrix, step: &RgStepResult) -> Result<ComplexMatrix> {
    renormalize_with(op, step, true)
}

/// `O' = U (1 ⊗ O) U†` for an observable on the right member of a pair.
pub fn renormalize_observable_right(op: &ComplexMatrix, step: &RgStepResult) -> Result<ComplexMatrix> {
    renormalize_with(op, step, false)
}

fn renormalize_with(op: &ComplexMatrix, step: &RgStepResult, left: bool) -> Result<ComplexMatrix> {
    let d = step.fine_phys_dim;
    if op.rows() != d || op.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: op.rows(),
        });
    }
    let id = ComplexMatrix::identity(d);
    let lifted = if left { kron(op, &id) } else { kron(&id, op) };
    step.isometry.matmul(&lifted)?.matmul(&step.isometry.adjoint())
}

/// Limit of repeated squaring.
#[derive(Debug, Clone)]
pub enum FixedPointLimit {
    Stationary(ComplexMatrix),
    /// Squaring alternates between the two matrices.
    PeriodTwo(ComplexMatrix, ComplexMatrix),
}

impl FixedPointLimit {
    pub fn stationary(&self) -> Option<&ComplexMatrix> {
        match self {
            Self::Stationary(m) => Some(m),
            Self::PeriodTwo(..) => None,
        }
    }
}

/// Squares `e` until `||E^{2n} - E^n||_F < tol`, also recognising an orbit
/// of period two.
pub fn fixed_point_operator(e: &ComplexMatrix, max_squarings: usize, tol: f64) -> Result<FixedPointLimit> {
    let mut p = e.clone();
    let mut prev: Option<ComplexMatrix> = None;
    for _ in 0..max_squarings {
        let next = p.matmul(&p)?;
        let nn = next.frobenius_norm();
        if !nn.is_finite() || nn > 1e12 {
            break;
        }
        if next.distance(&p) < tol {
            return Ok(FixedPointLimit::Stationary(next));
        }
        if let Some(before) = &prev {
            if next.distance(before) < tol {
                return Ok(FixedPointLimit::PeriodTwo(p, next));
            }
        }
        prev = Some(p);
        p = next;
    }
    Err(Error::NonConvergent("repeated squaring of the transfer matrix"))
}

/// Entropy (bits) of one site of the `sites`-site ring realized from `mps`,
/// from `ρ_{pp'} ∝ Tr[(B ⊗ conj B)(A^p ⊗ conj A^{p'}) E^{sites-1}]`.
pub fn single_site_entropy(mps: &MatrixProductState, sites: usize) -> Result<f64> {
    if sites < 2 {
        return Err(Error::Domain("single-site entropy needs at least two sites".into()));
    }
    let e = transfer_matrix(mps)?;
    let rest = e.matrix().pow((sites - 1) as u32)?;
    let b = mps.boundary();
    let env = kron(b, &b.conj()).matmul(&rest)?;
    let d = mps.phys_dim();
    let mut rho = ComplexMatrix::zeros(d, d);
    for (p, ap) in mps.tensors().iter().enumerate() {
        for (q, aq) in mps.tensors().iter().enumerate() {
            let k = kron(ap, &aq.conj());
            // Tr(env · k) without forming the product
            let n = k.rows();
            let mut t = ZERO;
            for i in 0..n {
                for j in 0..n {
                    t += env[(i, j)] * k[(j, i)];
                }
            }
            rho[(p, q)] = t;
        }
    }
    let tr = rho.trace().re;
    if tr <= 0.0 || !tr.is_finite() {
        return Err(Error::ZeroState);
    }
    let eig = eigh(&rho.scale_real(1.0 / tr))?;
    Ok(SchmidtData::from_probabilities(&eig.values)?.entropy_bits)
}

/// `-1 / ln|λ₂/λ₁|` from eigenvalues sorted by descending magnitude.
pub fn correlation_length(eigenvalues: &[C64]) -> f64 {
    let l1 = eigenvalues.first().map_or(0.0, |z| z.norm());
    let l2 = eigenvalues.get(1).map_or(0.0, |z| z.norm());
    if l1 == 0.0 || l2 >= l1 * (1.0 - 1e-12) {
        return f64::INFINITY;
    }
    if l2 == 0.0 {
        return 0.0;
    }
    -1.0 / (l2 / l1).ln()
}

/// Flow parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub max_steps: usize,
    /// Stop once the Frobenius distance between consecutive (gauge-fixed)
    /// transfer matrices drops below this.
    pub conv_tol: f64,
    pub drop_tol_rel: f64,
    /// Ring length used for the per-step single-site entropy.
    pub entropy_sites: usize,
    /// Number of leading eigenvalues kept per record (padded with zeros).
    pub top_eigenvalues: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            max_steps: 8,
            conv_tol: 1e-12,
            drop_tol_rel: DEFAULT_DROP_TOL,
            entropy_sites: 8,
            top_eigenvalues: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub step: usize,
    /// Physical dimension of the representative at this step.
    pub d_eff: usize,
    /// Leading eigenvalues of the normalized transfer matrix.
    pub top_eigenvalues: Vec<C64>,
    pub entropy_bits: f64,
    /// Distance to the previous step; infinite for step 0.
    pub residual: f64,
    pub correlation_length: f64,
    pub discarded_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Converged {
        step: usize,
    },
    /// A unimodular eigenvalue other than 1 persisted; the flow does not settle.
    Periodic {
        step: usize,
    },
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub status: FlowStatus,
    pub final_state: MatrixProductState,
    pub final_transfer: TransferMatrix,
}

impl FlowTrace {
    pub fn is_periodic(&self) -> bool {
        matches!(self.status, FlowStatus::Periodic { .. })
    }

    pub fn converged(&self) -> bool {
        matches!(self.status, FlowStatus::Converged { .. })
    }
}

/// Iterates normalization and coarse-graining with default options apart
/// from the step cap and tolerance.
pub fn flow(mps: &MatrixProductState, max_steps: usize, conv_tol: f64) -> Result<FlowTrace> {
    flow_with(
        mps,
        &FlowOptions {
            max_steps,
            conv_tol,
            ..FlowOptions::default()
        },
    )
}

/// Runs the RG flow. Step 0 records the normalized input; each further
/// record follows one coarse-graining step. For bond dimension two states
/// with a Jordan-type leading eigenvalue the representative is re-gauged
/// onto its canonical triangular form after every step and projected onto
/// the family, which keeps the tensors bounded and makes consecutive
/// transfer matrices comparable.
pub fn flow_with(mps: &MatrixProductState, opts: &FlowOptions) -> Result<FlowTrace> {
    if opts.max_steps == 0 {
        return Err(Error::Domain("flow needs at least one step".into()));
    }
    let mut state = canonicalize(normalize_leading(mps)?);
    let mut e = transfer_matrix(&state)?;
    let mut records = alloc::vec![record(0, &state, &e, f64::INFINITY, 0.0, opts)];
    let mut nontrivial_run = usize::from(has_nontrivial_unimodular(&e));
    let mut status = FlowStatus::MaxSteps;

    for step in 1..=opts.max_steps {
        let rs = coarse_grain_step(&state, opts.drop_tol_rel)?;
        let next_state = canonicalize(normalize_leading(&rs.coarse_state)?);
        let next_e = transfer_matrix(&next_state)?;
        let residual = next_e.matrix().distance(e.matrix());
        records.push(record(step, &next_state, &next_e, residual, rs.discarded_weight, opts));
        state = next_state;
        e = next_e;

        if residual < opts.conv_tol {
            status = FlowStatus::Converged { step };
            break;
        }
        if has_nontrivial_unimodular(&e) {
            nontrivial_run += 1;
            if nontrivial_run > PERIOD_PATIENCE {
                status = FlowStatus::Periodic { step };
                break;
            }
        } else {
            nontrivial_run = 0;
        }
    }
    Ok(FlowTrace {
        records,
        status,
        final_state: state,
        final_transfer: e,
    })
}

fn canonicalize(state: MatrixProductState) -> MatrixProductState {
    if state.bond_dim() != 2 {
        return state;
    }
    match gauge::jordan_structure(state.tensors(), DEFAULT_GROUP_TOL) {
        Some(js) => state
            .gauge_bond(&js.gauge_inverse)
            .and_then(|g| MatrixProductState::with_boundary(js.projected_tensors(), g.boundary().clone()))
            .unwrap_or(state),
        None => state,
    }
}

fn has_nontrivial_unimodular(e: &TransferMatrix) -> bool {
    let lead = e.leading_magnitude();
    e.spectrum().eigenvalues.iter().any(|z| {
        let z = z / lead;
        (z.norm() - 1.0).abs() <= UNIT_CIRCLE_TOL && (z - C64::new(1.0, 0.0)).norm() > UNIT_CIRCLE_TOL.sqrt()
    })
}

fn record(
    step: usize,
    state: &MatrixProductState,
    e: &TransferMatrix,
    residual: f64,
    discarded_weight: f64,
    opts: &FlowOptions,
) -> FlowRecord {
    let lead = e.leading_magnitude();
    let mut top: Vec<C64> = e
        .spectrum()
        .eigenvalues
        .iter()
        .take(opts.top_eigenvalues)
        .map(|z| z / lead)
        .collect();
    top.resize(opts.top_eigenvalues.max(top.len()), ZERO);
    let all: Vec<C64> = e.spectrum().eigenvalues.iter().map(|z| z / lead).collect();
    FlowRecord {
        step,
        d_eff: state.phys_dim(),
        top_eigenvalues: top,
        entropy_bits: single_site_entropy(state, opts.entropy_sites).unwrap_or(f64::NAN),
        residual,
        correlation_length: correlation_length(&all),
        discarded_weight,
    }
}
