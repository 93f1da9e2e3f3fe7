//! Argument parsing and subcommand drivers.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use mps_rg_core::classify::{classify, DEFAULT_TOL};
use mps_rg_core::linalg::{ComplexMatrix, C64};
use mps_rg_core::models::{
    half_chain_spectrum, ising_dimer_spectrum, ising_ground_state_ed, xxz_dimer_spectrum, Branch, Preset,
    SchmidtSpectrum, DEFAULT_J_MAX,
};
use mps_rg_core::mps::{
    block_entropy, connected_correlator, expectation_local, schmidt_decompose, state_vector, MatrixProductState,
};
use mps_rg_core::random::random_mps;
use mps_rg_core::rg::{flow_with, FlowOptions, FlowTrace, DEFAULT_DROP_TOL};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult, ExitKind};
use crate::format::{
    complex_to_json, matrix_to_json, mps_to_json, parse_mps, square_from_json, JsonComplex, JsonMatrix,
};
use crate::manifest::{manifest_path, sha256_hex, RunManifest};
use crate::report::{write_trace_csv, FlowSummary, ReportJson, TRACE_COLUMNS};

const EXIT_CODES: &str = "\
Exit codes: 0 success, 1 numerical failure, 2 invalid input or flags,
3 non-convergent or periodic flow (results are still written).";

const SPECTRUM_COLUMNS: &str = "\
CSV columns (header row always present):
  index           rank of the Schmidt weight, 0 is the largest
  weight          eigenvalue of the half-chain reduced density operator
  coefficient     Schmidt coefficient, sqrt(weight)
  neg_log_weight  -ln(weight)";

#[derive(Debug, Parser)]
#[command(name = "mps-rg", version, about = "Renormalization-group flows of matrix product states", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Realize a state on a finite ring and write amplitudes, a summary or its tensors.
    State(StateArgs),
    /// Run the RG flow and write a per-step CSV trace.
    #[command(after_help = TRACE_COLUMNS)]
    Flow(FlowArgs),
    /// Flow to convergence and classify the fixed point (JSON).
    Classify(ClassifyArgs),
    /// Expectation values, connected correlators and block entropies on a ring.
    Observe(ObserveArgs),
    /// Analytic half-chain Schmidt spectrum of the Ising or XXZ chain (CSV).
    #[command(after_help = SPECTRUM_COLUMNS)]
    Spectrum(SpectrumArgs),
    /// Compare exact diagonalization of the transverse-field chain with the analytic spectrum.
    EdCrosscheck(EdArgs),
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["preset", "input", "random"])))]
pub struct SourceArgs {
    /// Preset name: product, ghz, w, cluster, aklt, domain_wall.
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma-separated preset parameters (w: theta; domain_wall: alpha,beta,theta).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires = "preset")]
    pub params: Vec<f64>,
    /// MPS JSON file.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Random Gaussian MPS (see --seed, --d, --D).
    #[arg(long)]
    pub random: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Physical dimension of a random state.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Bond dimension of a random state.
    #[arg(long = "D", default_value_t = 2)]
    pub bond_dim: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path (default: <out>.manifest.json; none when writing to stdout).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StateEmit {
    Summary,
    Amplitudes,
    Mps,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Number of sites of the realized ring.
    #[arg(long, default_value_t = 8)]
    pub sites: usize,
    #[arg(long, value_enum, default_value_t = StateEmit::Summary)]
    pub emit: StateEmit,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FlowParams {
    /// Convergence threshold on the transfer-matrix residual.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Relative cutoff below which singular values are dropped.
    #[arg(long, default_value_t = DEFAULT_DROP_TOL)]
    pub drop_tol: f64,
    /// Ring length for the per-step entropy.
    #[arg(long, default_value_t = 8)]
    pub entropy_sites: usize,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Maximum number of coarse-graining steps.
    #[arg(long, default_value_t = 8)]
    pub steps: usize,
    #[command(flatten)]
    pub flow: FlowParams,
    /// JSON flow summary (default: <out>.summary.json when --out is given).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[command(flatten)]
    pub flow: FlowParams,
    /// Classifier tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub class_tol: f64,
    /// Sweep the first preset parameter over START:STOP:COUNT (inclusive).
    #[arg(
        long,
        value_name = "START:STOP:COUNT",
        requires = "preset",
        allow_hyphen_values = true
    )]
    pub sweep: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ObserveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 8)]
    pub sites: usize,
    /// Operator: x, y, z (qubit Paulis), sx, sy, sz (spin one), or proj:K.
    #[arg(long, default_value = "z", conflicts_with = "op_file")]
    pub op: String,
    /// Square operator as a JSON matrix of [re, im] pairs.
    #[arg(long, value_name = "PATH")]
    pub op_file: Option<PathBuf>,
    /// Second correlator operator (defaults to the first).
    #[arg(long)]
    pub op2: Option<String>,
    /// Reference site of the correlator profile.
    #[arg(long, default_value_t = 0)]
    pub site: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Model {
    /// Transverse-field Ising chain, parameter lambda (coupling over field).
    Ising,
    /// XXZ chain, anisotropy Delta > 1.
    Xxz,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// lambda for ising, Delta for xxz.
    #[arg(long)]
    pub value: f64,
    /// Highest mode index kept.
    #[arg(long, default_value_t = DEFAULT_J_MAX)]
    pub j_max: usize,
    /// Number of rows written.
    #[arg(long, default_value_t = 32)]
    pub top: usize,
    /// JSON summary (default: <out>.summary.json when --out is given).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EdArgs {
    /// Coupling over field.
    #[arg(long)]
    pub lambda: f64,
    /// Open-chain length (even, at most 16).
    #[arg(long, default_value_t = 12)]
    pub sites: usize,
    #[arg(long, default_value_t = DEFAULT_J_MAX)]
    pub j_max: usize,
    /// Number of weights listed per method.
    #[arg(long, default_value_t = 8)]
    pub top: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::NotConverged(msg)) => {
            eprintln!("mps-rg: {msg}");
            ExitKind::NonConvergent as i32
        }
        Err(e) => {
            eprintln!("mps-rg: {e}");
            e.code()
        }
    }
}

enum Outcome {
    Done,
    NotConverged(String),
}

fn dispatch(cmd: Command) -> CliResult<Outcome> {
    match cmd {
        Command::State(a) => cmd_state(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Observe(a) => cmd_observe(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::EdCrosscheck(a) => cmd_ed(a),
    }
}

struct Loaded {
    state: MatrixProductState,
    digest: String,
}

fn load_source(src: &SourceArgs, manifest: &mut RunManifest) -> CliResult<Loaded> {
    let loaded = if let Some(name) = &src.preset {
        let preset = Preset::from_name(name, &src.params)?;
        manifest
            .param("preset", preset.name())
            .param("preset_params", preset.params());
        let state = preset.build();
        Loaded {
            digest: sha256_hex(mps_to_json(&state).as_bytes()),
            state,
        }
    } else if let Some(path) = &src.input {
        let bytes = fs::read(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::invalid("parse error: input is not UTF-8"))?;
        let state = parse_mps(text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        manifest.param("input", path.display().to_string());
        Loaded {
            digest: sha256_hex(&bytes),
            state,
        }
    } else {
        if src.d == 0 || src.bond_dim == 0 {
            return Err(CliError::invalid("--d and --D must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(src.seed);
        let state = random_mps(&mut rng, src.d, src.bond_dim);
        manifest
            .param("random", true)
            .param("seed", src.seed)
            .param("d", src.d)
            .param("D", src.bond_dim);
        Loaded {
            digest: sha256_hex(mps_to_json(&state).as_bytes()),
            state,
        }
    };
    manifest.input_digest = loaded.digest.clone();
    Ok(loaded)
}

fn write_output(path: Option<&Path>, bytes: &[u8], manifest: &mut RunManifest) -> CliResult<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes).map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))?;
            manifest.outputs.push(p.display().to_string());
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s.into_bytes()
}

fn finish_manifest(mut manifest: RunManifest, output: &OutputArgs, started: Instant) -> CliResult<()> {
    let path = match (&output.manifest, &output.out) {
        (Some(m), _) => m.clone(),
        (None, Some(o)) => manifest_path(o),
        (None, None) => return Ok(()),
    };
    manifest.finish(started);
    fs::write(&path, json_bytes(&manifest)).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn sidecar(explicit: &Option<PathBuf>, out: &Option<PathBuf>, suffix: &str) -> Option<PathBuf> {
    explicit.clone().or_else(|| {
        out.as_ref().map(|o| {
            let mut name = o.as_os_str().to_owned();
            name.push(suffix);
            PathBuf::from(name)
        })
    })
}

fn complex_list(values: &[C64]) -> Vec<JsonComplex> {
    values.iter().map(|&z| complex_to_json(z)).collect()
}

#[derive(Serialize)]
struct StateSummary {
    sites: usize,
    local_dim: usize,
    bond_dim: usize,
    periodic_boundary: bool,
    half_cut: usize,
    half_chain_schmidt: Vec<f64>,
    half_chain_entropy_bits: f64,
    block_entropy_bits: Vec<f64>,
}

#[derive(Serialize)]
struct Amplitudes {
    sites: usize,
    local_dim: usize,
    normalized: bool,
    amplitudes: Vec<JsonComplex>,
}

fn cmd_state(a: StateArgs) -> CliResult<Outcome> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("state");
    let src = load_source(&a.source, &mut manifest)?;
    manifest
        .param("sites", a.sites)
        .param("emit", format!("{:?}", a.emit).to_lowercase());
    let bytes = match a.emit {
        StateEmit::Mps => {
            let mut s = mps_to_json(&src.state);
            s.push('\n');
            s.into_bytes()
        }
        StateEmit::Amplitudes => {
            let psi = state_vector(&src.state, a.sites)?;
            json_bytes(&Amplitudes {
                sites: psi.sites(),
                local_dim: psi.local_dim(),
                normalized: psi.is_normalized(),
                amplitudes: complex_list(psi.amplitudes()),
            })
        }
        StateEmit::Summary => {
            let psi = state_vector(&src.state, a.sites)?;
            let half = a.sites / 2;
            let schmidt = schmidt_decompose(&psi, half)?;
            let blocks = (1..a.sites)
                .map(|l| block_entropy(&psi, l))
                .collect::<Result<Vec<_>, _>>()?;
            json_bytes(&StateSummary {
                sites: a.sites,
                local_dim: psi.local_dim(),
                bond_dim: src.state.bond_dim(),
                periodic_boundary: src.state.has_periodic_boundary(),
                half_cut: half,
                half_chain_schmidt: schmidt.coefficients,
                half_chain_entropy_bits: schmidt.entropy_bits,
                block_entropy_bits: blocks,
            })
        }
    };
    write_output(a.output.out.as_deref(), &bytes, &mut manifest)?;
    finish_manifest(manifest, &a.output, started)?;
    Ok(Outcome::Done)
}

fn flow_options(steps: usize, p: &FlowParams, manifest: &mut RunManifest) -> CliResult<FlowOptions> {
    if steps == 0 {
        return Err(CliError::invalid("--steps must be at least 1"));
    }
    for (name, v) in [("tol", p.tol), ("drop_tol", p.drop_tol)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CliError::invalid(format!(
                "--{} must be finite and non-negative",
                name.replace('_', "-")
            )));
        }
    }
    if p.entropy_sites == 0 {
        return Err(CliError::invalid("--entropy-sites must be at least 1"));
    }
    manifest.param("steps", steps).param("entropy_sites", p.entropy_sites);
    manifest
        .tolerance("conv_tol", p.tol)
        .tolerance("drop_tol_rel", p.drop_tol);
    Ok(FlowOptions {
        max_steps: steps,
        conv_tol: p.tol,
        drop_tol_rel: p.drop_tol,
        entropy_sites: p.entropy_sites,
        ..FlowOptions::default()
    })
}

fn cmd_flow(a: FlowArgs) -> CliResult<Outcome> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("flow");
    let src = load_source(&a.source, &mut manifest)?;
    let opts = flow_options(a.steps, &a.flow, &mut manifest)?;
    let trace = flow_with(&src.state, &opts)?;

    let mut csv = Vec::new();
    write_trace_csv(&mut csv, &trace)?;
    write_output(a.output.out.as_deref(), &csv, &mut manifest)?;
    if let Some(path) = sidecar(&a.summary, &a.output.out, ".summary.json") {
        write_output(Some(&path), &json_bytes(&FlowSummary::new(&trace)), &mut manifest)?;
    }
    finish_manifest(manifest, &a.output, started)?;
    Ok(if trace.is_periodic() {
        Outcome::NotConverged("flow is periodic".into())
    } else {
        Outcome::Done
    })
}

fn parse_sweep(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::invalid(format!("--sweep expects START:STOP:COUNT, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
        .collect())
}

fn classify_state(state: &MatrixProductState, opts: &FlowOptions, tol: f64) -> CliResult<(ReportJson, FlowTrace)> {
    let trace = flow_with(state, opts)?;
    let report = classify(&trace.final_transfer, tol)?;
    Ok((ReportJson::new(&report, Some(FlowSummary::new(&trace))), trace))
}

#[derive(Serialize)]
struct SweepEntry {
    params: Vec<f64>,
    report: ReportJson,
}

fn cmd_classify(a: ClassifyArgs) -> CliResult<Outcome> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("classify");
    let opts = flow_options(a.steps, &a.flow, &mut manifest)?;
    if !(a.class_tol.is_finite() && a.class_tol > 0.0) {
        return Err(CliError::invalid("--class-tol must be positive"));
    }
    manifest.tolerance("class_tol", a.class_tol);

    let (bytes, unsettled) = match &a.sweep {
        None => {
            let src = load_source(&a.source, &mut manifest)?;
            let (report, trace) = classify_state(&src.state, &opts, a.class_tol)?;
            (json_bytes(&report), usize::from(!trace.converged()))
        }
        Some(grid) => {
            let values = parse_sweep(grid)?;
            let name = a.source.preset.as_deref().expect("clap enforces --preset");
            let template = Preset::from_name(name, &a.source.params)?;
            let base = template.params();
            if base.is_empty() {
                return Err(CliError::invalid(format!(
                    "preset `{}` has no parameter to sweep",
                    template.name()
                )));
            }
            manifest
                .param("preset", template.name())
                .param("preset_params", &base)
                .param("sweep", &values);
            let presets = values
                .iter()
                .map(|&v| {
                    let mut p = base.clone();
                    p[0] = v;
                    Preset::from_name(name, &p).map(|pr| (p, pr))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let digest_src: String = presets.iter().map(|(_, pr)| mps_to_json(&pr.build())).collect();
            manifest.input_digest = sha256_hex(digest_src.as_bytes());
            let results = presets
                .par_iter()
                .map(|(p, pr)| {
                    classify_state(&pr.build(), &opts, a.class_tol).map(|(report, trace)| {
                        (
                            SweepEntry {
                                params: p.clone(),
                                report,
                            },
                            trace.converged(),
                        )
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            let unsettled = results.iter().filter(|(_, ok)| !ok).count();
            let entries: Vec<SweepEntry> = results.into_iter().map(|(e, _)| e).collect();
            (json_bytes(&entries), unsettled)
        }
    };
    write_output(a.output.out.as_deref(), &bytes, &mut manifest)?;
    finish_manifest(manifest, &a.output, started)?;
    Ok(if unsettled > 0 {
        Outcome::NotConverged(format!("{unsettled} flow(s) did not converge"))
    } else {
        Outcome::Done
    })
}

/// Named single-site operators.
pub fn named_operator(name: &str, d: usize) -> CliResult<ComplexMatrix> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let need = |want: usize| {
        if d == want {
            Ok(())
        } else {
            Err(CliError::invalid(format!(
                "operator `{name}` needs local dimension {want}, state has {d}"
            )))
        }
    };
    let op = match name {
        "x" => {
            need(2)?;
            ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
        }
        "y" => {
            need(2)?;
            ComplexMatrix::from_rows(&[[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
        }
        "z" => {
            need(2)?;
            ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]])
        }
        "sx" => {
            need(3)?;
            ComplexMatrix::from_real_rows(&[[0.0, r, 0.0], [r, 0.0, r], [0.0, r, 0.0]])
        }
        "sy" => {
            need(3)?;
            let z = c(0.0, 0.0);
            ComplexMatrix::from_rows(&[[z, c(0.0, -r), z], [c(0.0, r), z, c(0.0, -r)], [z, c(0.0, r), z]])
        }
        "sz" => {
            need(3)?;
            ComplexMatrix::from_real_rows(&[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
        }
        other => {
            let k = other
                .strip_prefix("proj:")
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| CliError::invalid(format!("unknown operator `{other}`")))?;
            if k >= d {
                return Err(CliError::invalid(format!(
                    "proj:{k} out of range for local dimension {d}"
                )));
            }
            let mut m = ComplexMatrix::zeros(d, d);
            m[(k, k)] = c(1.0, 0.0);
            m
        }
    };
    Ok(op)
}

#[derive(Serialize)]
struct CorrelatorEntry {
    i: usize,
    j: usize,
    value: JsonComplex,
}

#[derive(Serialize)]
struct Observation {
    sites: usize,
    local_dim: usize,
    operator: JsonMatrix,
    second_operator: JsonMatrix,
    expectation: Vec<JsonComplex>,
    connected_correlator: Vec<CorrelatorEntry>,
    block_entropy_bits: Vec<f64>,
}

fn cmd_observe(a: ObserveArgs) -> CliResult<Outcome> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("observe");
    let src = load_source(&a.source, &mut manifest)?;
    let d = src.state.phys_dim();
    let op = match &a.op_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
            let m: JsonMatrix =
                serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("parse error: {e}")))?;
            manifest.param("op_file", path.display().to_string());
            square_from_json(&m, "operator")?
        }
        None => {
            manifest.param("op", &a.op);
            named_operator(&a.op, d)?
        }
    };
    if op.rows() != d {
        return Err(CliError::invalid(format!(
            "operator is {}x{}, local dimension is {d}",
            op.rows(),
            op.cols()
        )));
    }
    let op2 = match &a.op2 {
        Some(name) => {
            manifest.param("op2", name);
            named_operator(name, d)?
        }
        None => op.clone(),
    };
    if a.site >= a.sites {
        return Err(CliError::invalid(format!(
            "--site {} outside a ring of {} sites",
            a.site, a.sites
        )));
    }
    manifest.param("sites", a.sites).param("site", a.site);

    let psi = state_vector(&src.state, a.sites)?;
    let expectation = (0..a.sites)
        .map(|i| expectation_local(&psi, &op, i))
        .collect::<Result<Vec<_>, _>>()?;
    let connected_correlator = (0..a.sites)
        .filter(|&j| j != a.site)
        .map(|j| {
            connected_correlator(&psi, &op, a.site, &op2, j).map(|v| CorrelatorEntry {
                i: a.site,
                j,
                value: complex_to_json(v),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let block_entropy_bits = (1..a.sites)
        .map(|l| block_entropy(&psi, l))
        .collect::<Result<Vec<_>, _>>()?;
    let obs = Observation {
        sites: a.sites,
        local_dim: d,
        operator: matrix_to_json(&op),
        second_operator: matrix_to_json(&op2),
        expectation: complex_list(&expectation),
        connected_correlator,
        block_entropy_bits,
    };
    write_output(a.output.out.as_deref(), &json_bytes(&obs), &mut manifest)?;
    finish_manifest(manifest, &a.output, started)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    weight: f64,
    coefficient: f64,
    neg_log_weight: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    model: &'static str,
    value: f64,
    epsilon: f64,
    branch: &'static str,
    j_max: usize,
    entropy_bits: f64,
    leading_degeneracy: usize,
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Disordered => "disordered",
        Branch::Ordered => "ordered",
    }
}

/// Number of weights equal to the largest one up to 1e-12 relative.
fn leading_degeneracy(weights: &[f64]) -> usize {
    let w0 = weights.first().copied().unwrap_or(0.0);
    weights.iter().take_while(|&&w| (w0 - w).abs() <= 1e-12 * w0).count()
}

fn cmd_spectrum(a: SpectrumArgs) -> CliResult<Outcome> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("spectrum");
    let (model, spectrum): (&'static str, SchmidtSpectrum) = match a.model {
        Model::Ising => ("ising", ising_dimer_spectrum(a.value, a.j_max)?),
        Model::Xxz => ("xxz", xxz_dimer_spectrum(a.value, a.j_max)?),
    };
    manifest
        .param("model", model)
        .param("value", a.value)
        .param("j_max", a.j_max)
        .param("top", a.top);
    manifest.input_digest = sha256_hex(format!("{model}:{:?}:{}", a.value, a.j_max).as_bytes());

    let mut w = csv::Writer::from_writer(Vec::new());
    for (index, &weight) in spectrum.weights.iter().take(a.top).enumerate() {
        w.serialize(SpectrumRow {
            index,
            weight,
            coefficient: weight.sqrt(),
            neg_log_weight: -weight.ln(),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::invalid(format!("csv: {e}")))?;
    write_output(a.output.out.as_deref(), &bytes, &mut manifest)?;
    if let Some(path) = sidecar(&a.summary, &a.output.out, ".summary.json") {
        let summary = SpectrumSummary {
            model,
            value: a.value,
            epsilon: spectrum.epsilon,
            branch: branch_name(spectrum.branch),
            j_max: spectrum.j_max,
            entropy_bits: spectrum.entropy_bits,
            leading_degeneracy: leading_degeneracy(&spectrum.weights),
        };
        write_output(Some(&path), &json_bytes(&summary), &mut manifest)?;
    }
    finish_manifest(manifest, &a.output, started)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct SpectrumSide {
    top_weights: Vec<f64>,
    entropy_bits: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct EdComparison {
    lambda: f64,
    sites: usize,
    branch: &'static str,
    epsilon: f64,
    /// Weights compared are w[gap_index] / w[0].
    gap_index: usize,
    predicted_ratio: f64,
    ed: SpectrumSide,
    dimer: SpectrumSide,
    relative_error: f64,
}

fn cmd_ed(a: EdArgs) -> CliResult<Outcome> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("ed-crosscheck");
    manifest
        .param("lambda", a.lambda)
        .param("sites", a.sites)
        .param("j_max", a.j_max)
        .param("top", a.top);
    manifest.tolerance("lanczos_residual", 1e-10);
    manifest.input_digest = sha256_hex(format!("ising:{:?}:{}:{}", a.lambda, a.sites, a.j_max).as_bytes());

    let dimer = ising_dimer_spectrum(a.lambda, a.j_max)?;
    let psi = ising_ground_state_ed(a.lambda, a.sites)?;
    let ed = half_chain_spectrum(&psi)?;
    let ed_w = ed.probabilities();
    let gap_index = match dimer.branch {
        Branch::Disordered => 1,
        Branch::Ordered => 2,
    };
    let ratio = |w: &[f64]| w.get(gap_index).copied().unwrap_or(0.0) / w[0];
    let predicted = (-dimer.epsilon).exp();
    let ed_ratio = ratio(&ed_w);
    let cmp = EdComparison {
        lambda: a.lambda,
        sites: a.sites,
        branch: branch_name(dimer.branch),
        epsilon: dimer.epsilon,
        gap_index,
        predicted_ratio: predicted,
        ed: SpectrumSide {
            top_weights: ed_w.iter().take(a.top).copied().collect(),
            entropy_bits: ed.entropy_bits,
            ratio: ed_ratio,
        },
        dimer: SpectrumSide {
            top_weights: dimer.weights.iter().take(a.top).copied().collect(),
            entropy_bits: dimer.entropy_bits,
            ratio: ratio(&dimer.weights),
        },
        relative_error: (ed_ratio / predicted - 1.0).abs(),
    };
    write_output(a.output.out.as_deref(), &json_bytes(&cmp), &mut manifest)?;
    finish_manifest(manifest, &a.output, started)?;
    Ok(Outcome::Done)
}
