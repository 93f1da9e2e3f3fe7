//! Serializable views of flow traces and fixed-point reports.

use std::io::Write;

use mps_rg_core::classify::FixedPointReport;
use mps_rg_core::rg::{FlowStatus, FlowTrace};
use serde::Serialize;

use crate::error::CliResult;

/// Column descriptions shown in `flow --help`.
pub const TRACE_COLUMNS: &str = "\
CSV columns (header row always present):
  step            RG step; 0 is the normalized input
  d_eff           physical dimension of the representative after the step
  abs_lambda_1-4  magnitudes of the four leading transfer-matrix eigenvalues,
                  normalized so the largest is 1 (missing ones are 0)
  entropy_bits    single-site entropy on a ring of --entropy-sites sites
                  (NaN if the ring state vanishes)
  residual        Frobenius distance to the previous transfer matrix (inf at step 0)
  xi              correlation length -1/ln|lambda_2/lambda_1| in units of the current
                  block (inf when degenerate, 0 when lambda_2 = 0)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub d_eff: usize,
    pub abs_lambda_1: f64,
    pub abs_lambda_2: f64,
    pub abs_lambda_3: f64,
    pub abs_lambda_4: f64,
    pub entropy_bits: f64,
    pub residual: f64,
    pub xi: f64,
}

pub fn trace_rows(trace: &FlowTrace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| {
            let lam = |k: usize| r.top_eigenvalues.get(k).map_or(0.0, |z| z.norm());
            TraceRow {
                step: r.step,
                d_eff: r.d_eff,
                abs_lambda_1: lam(0),
                abs_lambda_2: lam(1),
                abs_lambda_3: lam(2),
                abs_lambda_4: lam(3),
                entropy_bits: r.entropy_bits,
                residual: r.residual,
                xi: r.correlation_length,
            }
        })
        .collect()
}

pub fn write_trace_csv<W: Write>(out: W, trace: &FlowTrace) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace_rows(trace) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowSummary {
    pub status: &'static str,
    pub periodic: bool,
    /// Number of coarse-graining steps performed.
    pub steps: usize,
    pub final_d_eff: usize,
    pub final_residual: f64,
    pub final_entropy_bits: f64,
    pub final_correlation_length: f64,
    pub max_discarded_weight: f64,
}

impl FlowSummary {
    pub fn new(trace: &FlowTrace) -> Self {
        let last = trace.records.last().expect("a trace has at least one record");
        Self {
            status: match trace.status {
                FlowStatus::Converged { .. } => "converged",
                FlowStatus::Periodic { .. } => "periodic",
                FlowStatus::MaxSteps => "max_steps",
            },
            periodic: trace.is_periodic(),
            steps: last.step,
            final_d_eff: last.d_eff,
            final_residual: last.residual,
            final_entropy_bits: last.entropy_bits,
            final_correlation_length: last.correlation_length,
            max_discarded_weight: trace.records.iter().map(|r| r.discarded_weight).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JordanJson {
    pub algebraic: usize,
    pub geometric: usize,
    pub defective: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvidenceJson {
    pub unit_eigenvalues: usize,
    pub nontrivial_phase: bool,
    pub entangled_fixed_vector: bool,
    pub limit_exists: bool,
    pub fit_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub label: &'static str,
    pub lambdas: Option<Vec<f64>>,
    pub schmidt_coefficients: Option<Vec<f64>>,
    pub entanglement_entropy_bits: Option<f64>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub e_infinity_rank: usize,
    pub jordan: JordanJson,
    pub evidence: EvidenceJson,
    pub advisory: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSummary>,
}

impl ReportJson {
    pub fn new(r: &FixedPointReport, flow: Option<FlowSummary>) -> Self {
        Self {
            label: r.label.as_str(),
            lambdas: r.lambdas.clone(),
            schmidt_coefficients: r.schmidt.as_ref().map(|s| s.coefficients.clone()),
            entanglement_entropy_bits: r.schmidt.as_ref().map(|s| s.entropy_bits),
            theta: r.theta,
            alpha: r.alpha,
            beta: r.beta,
            e_infinity_rank: r.e_infinity_rank,
            jordan: JordanJson {
                algebraic: r.jordan.algebraic,
                geometric: r.jordan.geometric,
                defective: r.jordan.is_defective(),
            },
            evidence: EvidenceJson {
                unit_eigenvalues: r.evidence.unit_eigenvalues,
                nontrivial_phase: r.evidence.nontrivial_phase,
                entangled_fixed_vector: r.evidence.entangled_fixed_vector,
                limit_exists: r.evidence.limit_exists,
                fit_residual: r.evidence.fit_residual,
            },
            advisory: r.advisory,
            flow,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mps_rg_core::models::make_preset;
    use mps_rg_core::rg::flow;

    #[test]
    fn header_and_padding() {
        let t = flow(&make_preset("product", &[]).unwrap(), 3, 1e-12).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,d_eff,abs_lambda_1,abs_lambda_2,abs_lambda_3,abs_lambda_4,entropy_bits,residual,xi"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&first[..6], &["0", "2", "1.0", "0.0", "0.0", "0.0"]);
        assert_eq!(first[7], "inf");
    }
}
