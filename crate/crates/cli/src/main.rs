//! `nodal`: spectra, verification ensembles and eigenvalue sweeps for
//! discrete Schrödinger operators on graphs.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use nodal_core::checks::{run_check, Check, CheckRow, Status, Summary};
use nodal_core::ensemble::{EnsembleConfig, Family, Instance};
use nodal_core::io::{fmt15, round15, GraphFile};
use nodal_core::surgery::{
    d_lambda_d_alpha, eigenvalue_curve_with, find_critical_alpha, interlacing_slack,
    parametrized_hamiltonian, AlphaSign, CriticalKind, ALPHA_MIN,
};
use nodal_core::{Edge, Error, Execution, Hamiltonian};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
/// Instances evaluated per batch before their rows are written.
const BATCH: usize = 64;

#[derive(Parser)]
#[command(name = "nodal", version, about = "Nodal domains and equipartitions of graph Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for generated ensembles and randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file (defaults to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Tree,
    CyclePlusChords,
    ErdosRenyiConnected,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Tree => Family::Tree,
            FamilyArg::CyclePlusChords => Family::CyclePlusChords,
            FamilyArg::ErdosRenyiConnected => Family::ErdosRenyiConnected,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Iru,
    Bounds,
    Interlace,
    Surgery,
    TreeEqui,
    Lagrange,
    Morse,
}

impl From<CheckArg> for Check {
    fn from(c: CheckArg) -> Self {
        match c {
            CheckArg::Iru => Check::Iru,
            CheckArg::Bounds => Check::Bounds,
            CheckArg::Interlace => Check::Interlace,
            CheckArg::Surgery => Check::Surgery,
            CheckArg::TreeEqui => Check::TreeEqui,
            CheckArg::Lagrange => Check::Lagrange,
            CheckArg::Morse => Check::Morse,
        }
    }
}

#[derive(Args, Clone)]
struct EnsembleArgs {
    #[arg(long, value_enum, default_value = "erdos-renyi-connected")]
    family: FamilyArg,
    #[arg(long, default_value_t = 3)]
    v_min: usize,
    #[arg(long, default_value_t = 10)]
    v_max: usize,
    #[arg(long, default_value_t = 4)]
    beta_cap: usize,
    /// Potentials are uniform on [-scale, scale].
    #[arg(long, default_value_t = 1.0)]
    potential_scale: f64,
    #[arg(long, default_value_t = 100)]
    count: usize,
}

impl EnsembleArgs {
    fn config(&self, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            family: self.family.into(),
            v_min: self.v_min,
            v_max: self.v_max,
            beta_cap: self.beta_cap,
            potential_scale: self.potential_scale,
            seed,
            count: self.count,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and non-degeneracy flags of a graph file.
    Spectrum { graph: PathBuf },
    /// Run checks on a graph file or on a generated ensemble.
    Verify {
        /// Graph file; when absent an ensemble is generated.
        graph: Option<PathBuf>,
        #[arg(long = "check", value_enum, required = true)]
        checks: Vec<CheckArg>,
        #[command(flatten)]
        ensemble: EnsembleArgs,
    },
    /// Sample the m-th eigenvalue of H(G) + B(α) along a range of α.
    Sweep {
        graph: PathBuf,
        #[arg(long, num_args = 2, value_names = ["I", "J"], required = true)]
        edge: Vec<usize>,
        #[arg(long)]
        branch: usize,
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, required = true)]
        alpha_range: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Write a seeded ensemble as graph files, one JSON object per line.
    Generate {
        #[command(flatten)]
        ensemble: EnsembleArgs,
    },
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_USAGE
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn output(global: &Global) -> Result<Box<dyn Write>, Failure> {
    Ok(match &global.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn header(command: &str) -> Value {
    json!({"tool": "nodal", "version": env!("CARGO_PKG_VERSION"), "command": command})
}

fn write_json_line(out: &mut dyn Write, value: &impl Serialize) -> Result<(), Failure> {
    serde_json::to_writer(&mut *out, value).map_err(|e| usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match &cli.command {
        Command::Spectrum { graph } => cmd_spectrum(&cli.global, graph),
        Command::Verify {
            graph,
            checks,
            ensemble,
        } => cmd_verify(&cli.global, graph.as_ref(), checks, ensemble),
        Command::Sweep {
            graph,
            edge,
            branch,
            alpha_range,
            points,
        } => cmd_sweep(
            &cli.global,
            graph,
            (edge[0], edge[1]),
            *branch,
            (alpha_range[0], alpha_range[1]),
            *points,
        ),
        Command::Generate { ensemble } => cmd_generate(&cli.global, ensemble),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &PathBuf) -> Result<Hamiltonian, Failure> {
    let (g, q) = GraphFile::read(path)?.build()?;
    Ok(Hamiltonian::new(&g, &q)?)
}

fn cmd_spectrum(global: &Global, path: &PathBuf) -> Result<u8, Failure> {
    let h = load(path)?;
    let s = h.spectrum()?;
    let flags = (1..=s.len())
        .map(|n| s.nondegeneracy(n))
        .collect::<Result<Vec<_>, _>>()?;
    let degenerate_pairs: Vec<Value> = (1..s.len())
        .filter(|&n| s.value(n + 1) - s.value(n) <= nodal_core::operator::GAP_TOL * s.scale())
        .map(|n| json!({"n": n, "lambda": round15(s.value(n))}))
        .collect();
    let body = json!({
        "vertices": h.dim(),
        "eigenvalues": s.values().iter().map(|&x| round15(x)).collect::<Vec<_>>(),
        "nondegeneracy": flags.iter().map(|f| json!({
            "n": f.index,
            "nondegenerate": f.nondegenerate,
            "simple": f.simple,
            "nonvanishing": f.nonvanishing,
            "gap": round15(f.gap),
            "min_component": round15(f.min_component),
        })).collect::<Vec<_>>(),
        "degenerate_pairs": degenerate_pairs,
    });
    let mut out = output(global)?;
    write_json_line(&mut out, &header("spectrum"))?;
    write_json_line(&mut out, &body)?;
    out.flush()?;
    Ok(0)
}

fn row_json(r: &CheckRow) -> Value {
    json!({
        "instance": r.instance,
        "seed": r.seed,
        "check": r.check,
        "n": r.n,
        "status": r.status,
        "metric": r.metric.map(round15),
        "detail": r.detail,
    })
}

fn cmd_verify(
    global: &Global,
    graph: Option<&PathBuf>,
    checks: &[CheckArg],
    ensemble: &EnsembleArgs,
) -> Result<u8, Failure> {
    let checks: Vec<Check> = checks.iter().map(|&c| c.into()).collect();
    let config = ensemble.config(global.seed);
    let (count, single) = match graph {
        Some(path) => {
            let (graph, potential) = GraphFile::read(path)?.build()?;
            let inst = Instance {
                index: 0,
                seed: global.seed,
                graph,
                potential,
            };
            (1, Some(inst))
        }
        None => {
            config.validate()?;
            (config.count, None)
        }
    };
    let format = global.format.unwrap_or(Format::Json);
    let mut out = output(global)?;
    match format {
        Format::Json => write_json_line(&mut out, &header("verify"))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["instance", "seed", "check", "n", "status", "metric", "detail"])
                .map_err(|e| usage(e.to_string()))?;
            w.flush()?;
        }
    }
    let mut all_rows: Vec<CheckRow> = Vec::new();
    let mut start = 0;
    while start < count {
        let end = (start + BATCH).min(count);
        let batch: Vec<Vec<CheckRow>> = (start..end)
            .into_par_iter()
            .map(|k| {
                let inst = match &single {
                    Some(inst) => inst.clone(),
                    None => config.instance(k).expect("validated configuration"),
                };
                checks
                    .iter()
                    .flat_map(|&c| run_check(c, &inst, Execution::Sequential))
                    .collect()
            })
            .collect();
        for rows in batch {
            for r in &rows {
                if format == Format::Csv {
                    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
                    w.write_record([
                        r.instance.to_string(),
                        r.seed.to_string(),
                        r.check.to_string(),
                        r.n.map(|n| n.to_string()).unwrap_or_default(),
                        status_name(r.status).to_string(),
                        r.metric.map(fmt15).unwrap_or_default(),
                        r.detail.clone(),
                    ])
                    .map_err(|e| usage(e.to_string()))?;
                    w.flush()?;
                } else {
                    write_json_line(&mut out, &row_json(r))?;
                }
            }
            all_rows.extend(rows);
        }
        start = end;
    }
    let mut per_check = serde_json::Map::new();
    for &c in &checks {
        let s = Summary::of(all_rows.iter().filter(|r| r.check == c));
        per_check.insert(c.to_string(), serde_json::to_value(s).expect("summary serializes"));
    }
    let total = Summary::of(&all_rows);
    let failures: Vec<Value> = all_rows
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(|r| json!({"instance": r.instance, "seed": r.seed, "check": r.check, "n": r.n}))
        .collect();
    let summary = json!({
        "summary": {
            "instances": count,
            "passed": total.passed(),
            "total": total,
            "checks": per_check,
            "failures": failures,
        }
    });
    match format {
        Format::Json => write_json_line(&mut out, &summary)?,
        Format::Csv => eprintln!("{summary}"),
    }
    out.flush()?;
    Ok(if total.passed() { 0 } else { EXIT_FAIL })
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Skip => "skip",
    }
}

/// Sample points for a sweep: log-spaced when the range has one sign,
/// otherwise uniform with points too close to zero dropped.
fn sweep_alphas(a: f64, b: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![a];
    }
    let t = |k: usize| k as f64 / (points - 1) as f64;
    if a * b > 0.0 {
        let (la, lb) = (a.abs().ln(), b.abs().ln());
        (0..points)
            .map(|k| a.signum() * (la + (lb - la) * t(k)).exp())
            .collect()
    } else {
        (0..points)
            .map(|k| a + (b - a) * t(k))
            .filter(|x| x.abs() > ALPHA_MIN)
            .collect()
    }
}

fn cmd_sweep(
    global: &Global,
    path: &PathBuf,
    edge: (usize, usize),
    branch: usize,
    range: (f64, f64),
    points: usize,
) -> Result<u8, Failure> {
    let (a, b) = range;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(usage(format!("empty alpha range [{a}, {b}]")));
    }
    if points == 0 {
        return Err(usage("--points must be positive"));
    }
    let h = load(path)?;
    let edge = Edge::new(edge.0, edge.1);
    if !h.has_edge(edge) {
        return Err(Error::MissingEdge(edge).into());
    }
    let alphas = sweep_alphas(a, b, points);
    let exec = Execution::default();
    let curve = eigenvalue_curve_with(exec, &h, edge, branch, &alphas)?;
    let spec_g = h.spectrum()?;

    // relevant critical points inside the range, annotated at the nearest row
    let mut critical: Vec<(usize, CriticalKind, f64)> = Vec::new();
    for sign in [AlphaSign::Negative, AlphaSign::Positive] {
        if let Ok(points) = find_critical_alpha(&h, edge, branch, sign) {
            for cp in points.into_iter().filter(|c| a <= c.alpha && c.alpha <= b) {
                let nearest = (0..alphas.len())
                    .min_by(|&x, &y| {
                        (alphas[x] - cp.alpha).abs().total_cmp(&(alphas[y] - cp.alpha).abs())
                    })
                    .expect("non-empty sweep");
                critical.push((nearest, cp.kind, cp.alpha));
            }
        }
    }
    let rows: Vec<(f64, f64, Option<f64>, f64)> = exec
        .map(&curve, |p| {
            let derivative = d_lambda_d_alpha(&h, edge, branch, p.alpha).ok();
            let slack = parametrized_hamiltonian(&h, edge, p.alpha)
                .and_then(|hp| hp.spectrum())
                .map(|sp| interlacing_slack(&spec_g, &sp, p.alpha))
                .unwrap_or(f64::NAN);
            (p.alpha, p.lambda, derivative, slack)
        });

    let mut out = output(global)?;
    match global.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            writeln!(out, "# nodal {}", env!("CARGO_PKG_VERSION"))?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["alpha", "lambda", "dlambda_dalpha", "interlacing_slack", "critical", "alpha_c"])
                .map_err(|e| usage(e.to_string()))?;
            for (k, (alpha, lambda, d, slack)) in rows.iter().enumerate() {
                let mark = critical.iter().find(|c| c.0 == k);
                w.write_record([
                    fmt15(*alpha),
                    fmt15(*lambda),
                    d.map(fmt15).unwrap_or_default(),
                    fmt15(*slack),
                    mark.map(|c| kind_name(c.1).to_string()).unwrap_or_default(),
                    mark.map(|c| fmt15(c.2)).unwrap_or_default(),
                ])
                .map_err(|e| usage(e.to_string()))?;
            }
            w.flush()?;
        }
        Format::Json => {
            write_json_line(&mut out, &header("sweep"))?;
            for (k, (alpha, lambda, d, slack)) in rows.iter().enumerate() {
                let mark = critical.iter().find(|c| c.0 == k);
                write_json_line(
                    &mut out,
                    &json!({
                        "alpha": round15(*alpha),
                        "lambda": round15(*lambda),
                        "dlambda_dalpha": d.map(round15),
                        "interlacing_slack": round15(*slack),
                        "critical": mark.map(|c| kind_name(c.1)),
                        "alpha_c": mark.map(|c| round15(c.2)),
                    }),
                )?;
            }
        }
    }
    out.flush()?;
    Ok(0)
}

fn kind_name(k: CriticalKind) -> &'static str {
    match k {
        CriticalKind::Max => "max",
        CriticalKind::Min => "min",
    }
}

fn cmd_generate(global: &Global, ensemble: &EnsembleArgs) -> Result<u8, Failure> {
    let config = ensemble.config(global.seed);
    let instances = config.instances()?;
    let mut out = output(global)?;
    write_json_line(&mut out, &header("generate"))?;
    for inst in &instances {
        let file = GraphFile::from_graph(&inst.graph, &inst.potential);
        write_json_line(
            &mut out,
            &json!({"instance": inst.index, "seed": inst.seed, "graph": file}),
        )?;
    }
    out.flush()?;
    Ok(0)
}
