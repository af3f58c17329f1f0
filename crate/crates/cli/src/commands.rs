//! Subcommand implementations. Each writes its primary output to `out`;
//! diagnostics go to standard error through the returned error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Complex;
use qcmdo_core::annealer::{build_ising, sweep_gaps_with, SweepOptions, DEFAULT_QUBIT_CAP};
use qcmdo_core::electrostatics::{
    ensemble_instances, ensemble_stats, gen_poisson, population_mean_min_gaps, write_ensemble_csv, EnsembleOptions,
    InstanceSelection, PoissonSpec,
};
use qcmdo_core::pde::build_qcmdo_from_pde;
use qcmdo_core::solvers::{bottom_states, DEFAULT_EXHAUSTIVE_CAP};
use qcmdo_core::{
    assemble_qubo, bits, maxcut_to_pde_instance, maxcut_to_qubo, reduce, reduce_pde, solve_sa, EncodingPolicy, Error,
    Graph, QcmdoProblem, QuboProblem, SaSchedule,
};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};
use crate::formats::{EncodingFile, ProblemFile, QuboFile};

/// Overrides the qubit cap of `solve`, `gaps` and `ensemble`.
pub const CAP_ENV: &str = "QCMDO_QUBIT_CAP";

/// Largest `p` for which `gen poisson --all-instances` is accepted.
pub const MAX_ENUMERATED_INSTANCES_P: usize = 16;

fn cap_or(default: usize) -> CliResult<usize> {
    match std::env::var(CAP_ENV) {
        Ok(v) => {
            v.trim().parse().map_err(|_| CliError::Usage(format!("{CAP_ENV} must be a nonnegative integer, got {v:?}")))
        }
        Err(_) => Ok(default),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(contents.as_bytes()).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

pub fn sidecar_path(qubo_path: &Path) -> PathBuf {
    qubo_path.with_extension("enc")
}

pub fn load_problem(path: &Path) -> CliResult<QcmdoProblem<f64>> {
    let file = ProblemFile::parse(&read_text(path)?)
        .map_err(|message| CliError::Format { path: path.to_path_buf(), message })?;
    Ok(file.to_problem()?)
}

/// Loads a QUBO file and, when present, its encodings sidecar.
pub fn load_qubo(path: &Path) -> CliResult<QuboProblem<f64>> {
    let file =
        QuboFile::parse(&read_text(path)?).map_err(|message| CliError::Format { path: path.to_path_buf(), message })?;
    let qubo = file.to_qubo()?;
    let enc_path = sidecar_path(path);
    if !enc_path.exists() {
        return Ok(qubo);
    }
    let enc = EncodingFile::parse(&read_text(&enc_path)?)
        .map_err(|message| CliError::Format { path: enc_path.clone(), message })?;
    Ok(enc.attach(qubo)?)
}

/// Writes `path` and, if the QUBO carries decode data, its sidecar.
pub fn write_qubo(path: &Path, qubo: &QuboProblem<f64>, comments: Vec<String>) -> CliResult<()> {
    write_atomic(path, &QuboFile::from_qubo(qubo, comments).to_text())?;
    if !qubo.encodings.is_empty() {
        write_atomic(&sidecar_path(path), &EncodingFile::from_qubo(qubo).to_text())?;
    }
    Ok(())
}

fn fmt_complex(z: Complex<f64>) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

#[derive(Debug, Clone)]
pub struct ReduceArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub policy: EncodingPolicy,
    pub report: Option<PathBuf>,
    pub quiet: bool,
}

#[derive(Serialize)]
struct ReduceReport {
    n1: usize,
    n2: usize,
    m: usize,
    p: usize,
    ising_lambda: Option<f64>,
    penalty_lambda: Option<f64>,
    elapsed_seconds: f64,
}

pub fn reduce_cmd(args: &ReduceArgs, out: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    let problem = load_problem(&args.input)?;
    let qudo = reduce(&problem)?;
    let qubo = assemble_qubo(&qudo, args.policy)?;
    let comments = vec![format!("c reduced: n1={} n2={} m={}", problem.n1(), problem.n2(), problem.m())];
    write_qubo(&args.output, &qubo, comments)?;
    let ising_lambda = if qubo.p() > 0 { Some(build_ising(&qubo)?.lambda) } else { None };
    if let Some(path) = &args.report {
        let report = ReduceReport {
            n1: problem.n1(),
            n2: problem.n2(),
            m: problem.m(),
            p: qubo.p(),
            ising_lambda,
            penalty_lambda: qubo.penalty.as_ref().map(|p| p.lambda),
            elapsed_seconds: started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&report).expect("plain data serializes");
        text.push('\n');
        write_atomic(path, &text)?;
    }
    if !args.quiet {
        emit(out, &format!("p={} n1={} n2={} m={}\n", qubo.p(), problem.n1(), problem.n2(), problem.m()))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Sa,
}

#[derive(Debug, Clone)]
pub struct SolveArgs {
    pub input: PathBuf,
    pub method: Method,
    pub seed: u64,
    pub sweeps: usize,
    pub restarts: usize,
    pub bottom: usize,
}

fn print_state(out: &mut dyn Write, qubo: &QuboProblem<f64>, s: &[bool], value: f64) -> CliResult<()> {
    emit(out, &format!("{} {}\n", bits::to_string(s), value))?;
    if !qubo.encodings.is_empty() {
        let (x1, valid) = qubo.decode(s)?;
        let values: Vec<String> = x1.iter().map(|&z| fmt_complex(z)).collect();
        let note = if valid { "" } else { " (invalid one-hot block)" };
        emit(out, &format!("x1=[{}]{note}\n", values.join(", ")))?;
    }
    Ok(())
}

pub fn solve_cmd(args: &SolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let qubo = load_qubo(&args.input)?;
    match args.method {
        Method::Exhaustive => {
            if args.bottom == 0 {
                return Err(CliError::Usage("--bottom must be at least 1".into()));
            }
            let cap = cap_or(DEFAULT_EXHAUSTIVE_CAP)?;
            for (s, v) in bottom_states(&qubo, args.bottom, cap)? {
                print_state(out, &qubo, &s, v)?;
            }
        }
        Method::Sa => {
            let schedule = SaSchedule::for_problem(&qubo, args.sweeps, args.restarts, args.seed)?;
            let (s, v) = solve_sa(&qubo, &schedule);
            print_state(out, &qubo, &s, v)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GapsArgs {
    pub input: PathBuf,
    pub grid: usize,
    pub refine: bool,
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

pub fn gaps_cmd(args: &GapsArgs, out: &mut dyn Write) -> CliResult<()> {
    let qubo = load_qubo(&args.input)?;
    let prog = build_ising(&qubo)?;
    let opts = SweepOptions {
        n_grid: args.grid,
        refine: args.refine,
        qubit_cap: cap_or(DEFAULT_QUBIT_CAP)?,
        ..Default::default()
    };
    let sweep = sweep_gaps_with(&prog, &opts)?;
    let mut csv = Vec::new();
    sweep.write_csv(&mut csv).expect("writing to memory");
    let csv = String::from_utf8(csv).expect("ASCII output");
    let summary = format!("min_gap={} at w={}, final_gap={}\n", sweep.min_gap, sweep.argmin_w, sweep.final_gap);
    match &args.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            if !args.quiet {
                emit(out, &summary)?;
            }
        }
        None => {
            emit(out, &csv)?;
            if !args.quiet {
                eprint!("{summary}");
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GenPoissonArgs {
    pub n: usize,
    pub all_instances: bool,
    pub seed: Option<u64>,
    pub true_s: Option<String>,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

#[derive(Serialize)]
struct PoissonLabelsFile {
    n: usize,
    instance: u64,
    true_s: String,
    sites: Vec<[f64; 2]>,
    modes: Vec<[usize; 2]>,
    y: Vec<[f64; 2]>,
}

pub fn gen_poisson_cmd(args: &GenPoissonArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = PoissonSpec::new(args.n)?;
    let p = spec.p();
    let instances: Vec<(u64, Vec<bool>)> = match (&args.true_s, args.all_instances) {
        (Some(_), true) => return Err(CliError::Usage("--true-s and --all-instances are exclusive".into())),
        (Some(text), false) => {
            let s = bits::parse(text)
                .ok_or_else(|| CliError::Usage(format!("--true-s must be a 0/1 string, got {text:?}")))?;
            if s.len() != p {
                return Err(CliError::Usage(format!("--true-s needs {p} bits for N = {}, got {}", args.n, s.len())));
            }
            vec![(bits::code(&s), s)]
        }
        (None, true) => {
            if p > MAX_ENUMERATED_INSTANCES_P {
                return Err(Error::QubitCapExceeded { p, cap: MAX_ENUMERATED_INSTANCES_P }.into());
            }
            ensemble_instances(args.n, InstanceSelection::All)?
        }
        (None, false) => {
            ensemble_instances(args.n, InstanceSelection::Sample { count: 1, seed: args.seed.unwrap_or(0) })?
        }
    };
    fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let width = if args.all_instances { p.div_ceil(4).max(1) } else { 1 };
    for (id, s) in &instances {
        let spec = spec.clone().with_true_s(s.clone())?;
        let (inst, labels) = gen_poisson::<f64>(&spec)?;
        let stem = format!("poisson_n{}_{id:0width$x}", args.n);
        let problem = build_qcmdo_from_pde(&inst)?;
        write_atomic(&args.out_dir.join(format!("{stem}.json")), &ProblemFile::from_problem(&problem).to_text())?;
        let qubo = assemble_qubo(&reduce_pde(&inst)?, EncodingPolicy::default())?;
        let comment = vec![format!("c poisson N={} true_s={}", args.n, bits::to_string(s))];
        write_qubo(&args.out_dir.join(format!("{stem}.qubo")), &qubo, comment)?;
        let labels = PoissonLabelsFile {
            n: args.n,
            instance: *id,
            true_s: bits::to_string(s),
            sites: labels.sites.iter().map(|&(a, b)| [a, b]).collect(),
            modes: labels.modes.iter().map(|&(a, b)| [a, b]).collect(),
            y: inst.y.iter().map(|z| [z.re, z.im]).collect(),
        };
        let mut text = serde_json::to_string_pretty(&labels).expect("plain data serializes");
        text.push('\n');
        write_atomic(&args.out_dir.join(format!("{stem}.labels.json")), &text)?;
    }
    if !args.quiet {
        emit(out, &format!("p={} n2a={} n2b={}\n", p, spec.n2a(), spec.n2b()))?;
        emit(out, &format!("wrote {} instance(s) to {}\n", instances.len(), args.out_dir.display()))?;
    }
    Ok(())
}

/// Edge list: a header `n m`, then `m` lines `u v` with 1-based vertices.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_graph(text: &str) -> Result<Graph, String> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line, header) = lines.next().ok_or("empty graph file")?;
    let nums = |line: usize, l: &str| -> Result<Vec<usize>, String> {
        let v: Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
        match v {
            Ok(v) if v.len() == 2 => Ok(v),
            _ => Err(format!("line {line}: expected two nonnegative integers")),
        }
    };
    let h = nums(line, header)?;
    let (n, m) = (h[0], h[1]);
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let e = nums(line, l)?;
        if e[0] == 0 || e[1] == 0 {
            return Err(format!("line {line}: vertices are 1-based"));
        }
        edges.push((e[0] - 1, e[1] - 1));
    }
    if edges.len() != m {
        return Err(format!("header announces {m} edges, found {}", edges.len()));
    }
    Graph::new(n, edges).map_err(|e| e.to_string())
}

#[derive(Debug, Clone)]
pub struct GenMaxcutArgs {
    pub graph: PathBuf,
    pub out_dir: PathBuf,
    pub stem: Option<String>,
    pub quiet: bool,
}

pub fn gen_maxcut_cmd(args: &GenMaxcutArgs, out: &mut dyn Write) -> CliResult<()> {
    let graph = parse_graph(&read_text(&args.graph)?)
        .map_err(|message| CliError::Format { path: args.graph.clone(), message })?;
    let stem = match &args.stem {
        Some(s) => s.clone(),
        None => args.graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "maxcut".into()),
    };
    fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let (qubo, reduction) = maxcut_to_qubo::<f64>(&graph);
    let comment = vec![format!("c maxcut n={} edges={} energy=-cut", graph.vertex_count(), graph.edges().len())];
    write_qubo(&args.out_dir.join(format!("{stem}.qubo")), &qubo, comment)?;
    let problem = build_qcmdo_from_pde(&maxcut_to_pde_instance::<f64>(&graph))?;
    write_atomic(&args.out_dir.join(format!("{stem}.json")), &ProblemFile::from_problem(&problem).to_text())?;
    if !args.quiet {
        emit(out, &format!("p={} edges={} d_max={}\n", graph.vertex_count(), graph.edges().len(), reduction.d_max))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EnsembleArgs {
    pub n: usize,
    pub all: bool,
    pub samples: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub classical_only: bool,
    pub grid: usize,
    pub quiet: bool,
}

pub fn ensemble_cmd(args: &EnsembleArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = PoissonSpec::new(args.n)?;
    let selection = match (args.all, args.samples) {
        (true, None) => InstanceSelection::All,
        (false, Some(count)) => InstanceSelection::Sample { count, seed: args.seed },
        _ => return Err(CliError::Usage("exactly one of --all and --samples is required".into())),
    };
    let cap = if args.classical_only { DEFAULT_EXHAUSTIVE_CAP } else { cap_or(DEFAULT_QUBIT_CAP)? };
    if spec.p() > cap {
        return Err(Error::QubitCapExceeded { p: spec.p(), cap }.into());
    }
    let sweep = SweepOptions { n_grid: args.grid, qubit_cap: cap, ..Default::default() };
    let rows =
        ensemble_stats::<f64>(args.n, selection, &EnsembleOptions { sweep, classical_only: args.classical_only })?;
    let mut csv = Vec::new();
    write_ensemble_csv(&rows, &mut csv).expect("writing to memory");
    let csv = String::from_utf8(csv).expect("ASCII output");
    let far = rows.iter().filter(|r| r.hamming > 1).count();
    let mut summary = format!("instances={} hamming>1={}", rows.len(), far);
    if let (Some(a), Some(b)) = population_mean_min_gaps(&rows) {
        summary.push_str(&format!(" mean_min_gap(hamming>1)={a} mean_min_gap(hamming=1)={b}"));
    }
    summary.push('\n');
    match &args.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            if !args.quiet {
                emit(out, &summary)?;
            }
        }
        None => {
            emit(out, &csv)?;
            if !args.quiet {
                eprint!("{summary}");
            }
        }
    }
    Ok(())
}
