mod input;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use degcount::bipartite::count_bipartite;
use degcount::edgeworth::count_graphs;
use degcount::maxent::{
    default_tol, solve_maxent_bipartite_default, solve_maxent_default, tameness_observed,
    tameness_observed_bipartite, DEFAULT_MAX_ITER,
};
use degcount::oracle::{
    exact_count_bipartite, exact_count_graphs, fourier_count_graphs_tilted, ExactCount,
};
use degcount::sampler::{sample_uniform_many, zero_tilt, CountingSampler, DEFAULT_MAX_TRIALS};
use degcount::{
    erdos_gallai, erdos_gallai_raw, gale_ryser, solve_maxent, solve_maxent_bipartite,
    tameness_sufficient, BipartiteMargins, DegreeSequence, Error, FeasibilityReport,
};

use input::Input;

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_EXHAUSTED: u8 = 4;
const EXIT_TOO_LARGE: u8 = 5;

/// Asymptotic and exact counts of graphs with a given degree sequence and
/// of 0-1 matrices with given margins.
///
/// INPUT is a file path, `-` for standard input, or the text itself:
/// whitespace-separated degrees, or JSON {"rows": [...], "cols": [...]}.
#[derive(Parser)]
#[command(name = "degcount", version)]
struct Cli {
    /// Worker threads; overrides DEGCOUNT_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Feasibility, strict feasibility and tameness.
    Check {
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Asymptotic count with all terms of the estimate.
    Count {
        input: String,
        #[arg(long)]
        json: bool,
        /// Solver tolerance on the constraint residual.
        #[arg(long)]
        tol: Option<f64>,
        /// Also compute the exact count and the ratio.
        #[arg(long)]
        exact: bool,
    },
    /// Uniform random graphs, one edge list per line.
    Sample {
        input: String,
        #[arg(short = 'k', default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_TRIALS)]
        max_trials: u64,
        #[arg(long, value_enum, default_value_t = Sampler::Rejection)]
        sampler: Sampler,
    },
    /// Exact count as a decimal integer.
    Exact {
        input: String,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Dual variables and edge probabilities as JSON.
    Maxent {
        input: String,
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Backtrack,
    Dp,
    Fourier,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampler {
    Rejection,
    Counting,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::IndexOutOfRange { .. } => EXIT_USAGE,
            Error::OddParity | Error::Infeasible(_) | Error::NotStrictlyFeasible(_) => {
                EXIT_INFEASIBLE
            }
            Error::DivergedToBoundary(_)
            | Error::MaxIterExceeded { .. }
            | Error::NotPositiveDefinite
            | Error::KernelDimensionNotOne(_)
            | Error::NotAnInteger { .. } => EXIT_DIVERGED,
            Error::TrialsExhausted { .. } => EXIT_EXHAUSTED,
            Error::TooLarge(_) => EXIT_TOO_LARGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

/// Graph input validated against the domain of [`DegreeSequence`].
enum GraphInput {
    Valid(DegreeSequence),
    /// Some degree is at least `n`; the raw Erdős–Gallai report says where.
    OutOfRange(FeasibilityReport),
}

fn graph_input(degrees: Vec<u32>) -> Result<GraphInput, Failure> {
    let n = degrees.len();
    if let Some(pos) = degrees.iter().position(|&d| d == 0) {
        return Err(Failure::usage(format!(
            "degree at position {} is zero; remove isolated vertices",
            pos + 1
        )));
    }
    if degrees.iter().any(|&d| d as usize >= n) {
        return Ok(GraphInput::OutOfRange(erdos_gallai_raw(&degrees)));
    }
    Ok(GraphInput::Valid(DegreeSequence::new(degrees)?))
}

fn require_graph(degrees: Vec<u32>) -> Result<DegreeSequence, Failure> {
    match graph_input(degrees)? {
        GraphInput::Valid(d) => Ok(d),
        GraphInput::OutOfRange(report) => Err(Error::Infeasible(report.first_violated_k).into()),
    }
}

fn margins(rows: Vec<u32>, cols: Vec<u32>) -> Result<BipartiteMargins, Failure> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Failure::usage("rows and cols must be non-empty"));
    }
    if rows.iter().any(|&r| r as usize > cols.len())
        || cols.iter().any(|&c| c as usize > rows.len())
    {
        return Err(Error::Infeasible(Some(1)).into());
    }
    Ok(BipartiteMargins::new(rows, cols)?)
}

fn emit(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).unwrap());
}

fn emit_lines(value: &Value) {
    if let Value::Object(map) = value {
        for (key, v) in map {
            match v {
                Value::Object(inner) => {
                    for (k2, v2) in inner {
                        println!("{key}.{k2}: {v2}");
                    }
                }
                _ => println!("{key}: {v}"),
            }
        }
    }
}

fn exact_value(count: &ExactCount) -> Value {
    let s = count.value.to_string();
    match s.parse::<u64>() {
        Ok(v) => json!(v),
        Err(_) => json!(s),
    }
}

fn cmd_check(inp: Input, as_json: bool) -> CmdResult {
    let (out, feasible, message) = match inp {
        Input::Graph(degrees) => match graph_input(degrees)? {
            GraphInput::OutOfRange(report) => {
                let out = json!({
                    "kind": "graph",
                    "parity_ok": report.parity_ok,
                    "feasible": false,
                    "strictly_feasible": false,
                    "first_violated_k": report.first_violated_k,
                });
                let msg = report
                    .first_violated_k
                    .map(|k| format!("EG violated at k={k}"));
                (out, false, msg)
            }
            GraphInput::Valid(d) => {
                let report = erdos_gallai(&d, false);
                let cert = tameness_sufficient(&d);
                let observed = if erdos_gallai(&d, true).strictly_feasible {
                    solve_maxent_default(&d).ok().map(|s| tameness_observed(&s))
                } else {
                    None
                };
                let out = json!({
                    "kind": "graph",
                    "parity_ok": report.parity_ok,
                    "feasible": report.feasible,
                    "strictly_feasible": report.strictly_feasible,
                    "first_violated_k": report.first_violated_k,
                    "certificate": cert,
                    "delta_observed": observed,
                });
                let msg = if !report.parity_ok {
                    Some("degree sum is odd".to_string())
                } else {
                    report
                        .first_violated_k
                        .map(|k| format!("EG violated at k={k}"))
                };
                (out, report.feasible, msg)
            }
        },
        Input::Bipartite { rows, cols } => {
            let m = match margins(rows, cols) {
                Ok(m) => m,
                Err(f) if f.code == EXIT_INFEASIBLE => {
                    let out =
                        json!({"kind": "bipartite", "feasible": false, "strictly_feasible": false});
                    if as_json {
                        emit(&out);
                    } else {
                        emit_lines(&out);
                    }
                    eprintln!("a margin exceeds the opposite dimension");
                    return Ok(EXIT_INFEASIBLE);
                }
                Err(f) => return Err(f),
            };
            let report = gale_ryser(&m);
            let observed = if report.strictly_feasible {
                solve_maxent_bipartite_default(&m)
                    .ok()
                    .map(|s| tameness_observed_bipartite(&s))
            } else {
                None
            };
            let out = json!({
                "kind": "bipartite",
                "balanced": report.parity_ok,
                "feasible": report.feasible,
                "strictly_feasible": report.strictly_feasible,
                "first_violated_k": report.first_violated_k,
                "delta_observed": observed,
            });
            let msg = if !report.parity_ok {
                Some("row and column sums differ".to_string())
            } else {
                report
                    .first_violated_k
                    .map(|k| format!("GR violated at k={k}"))
            };
            (out, report.feasible, msg)
        }
    };
    if as_json {
        emit(&out);
    } else {
        emit_lines(&out);
    }
    if let Some(msg) = message {
        if !feasible {
            if as_json {
                eprintln!("{msg}");
            } else {
                println!("{msg}");
            }
        }
    }
    Ok(if feasible { 0 } else { EXIT_INFEASIBLE })
}

fn cmd_count(inp: Input, as_json: bool, tol: Option<f64>, exact: bool) -> CmdResult {
    let start = Instant::now();
    let mut out = Map::new();
    let exact_count = match inp {
        Input::Graph(degrees) => {
            let d = require_graph(degrees)?;
            let r = count_graphs(&d, tol.unwrap_or_else(|| default_tol(d.max())))?;
            out.insert("kind".into(), json!("graph"));
            out.insert("ln_count".into(), json!(r.ln_count));
            out.insert("count".into(), json!(r.count));
            out.insert("log2_term".into(), json!(r.log2_term));
            out.insert("entropy".into(), json!(r.entropy_term));
            out.insert("gaussian_term".into(), json!(r.gaussian_term));
            out.insert("log_det".into(), json!(r.log_det_q));
            out.insert("mu".into(), json!(r.mu));
            out.insert("nu".into(), json!(r.nu));
            out.insert("edgeworth_term".into(), json!(r.edgeworth_term));
            out.insert("delta_observed".into(), json!(r.delta_observed));
            out.insert("iterations".into(), json!(r.iterations));
            out.insert("residual_inf".into(), json!(r.residual_inf));
            if exact {
                Some(exact_count_graphs(&d)?)
            } else {
                None
            }
        }
        Input::Bipartite { rows, cols } => {
            let m = margins(rows, cols)?;
            let max_margin = m.rows().iter().chain(m.cols()).copied().max().unwrap_or(0);
            let r = count_bipartite(&m, tol.unwrap_or_else(|| default_tol(max_margin)))?;
            out.insert("kind".into(), json!("bipartite"));
            out.insert("ln_count".into(), json!(r.ln_count));
            out.insert("count".into(), json!(r.count));
            out.insert("log2_term".into(), json!(0.0));
            out.insert("entropy".into(), json!(r.entropy_term));
            out.insert("gaussian_term".into(), json!(r.gaussian_term));
            out.insert("log_det".into(), json!(r.log_pdet));
            out.insert("mu".into(), json!(r.mu));
            out.insert("nu".into(), json!(r.nu));
            out.insert("edgeworth_term".into(), json!(r.edgeworth_term));
            out.insert("delta_observed".into(), json!(r.delta_observed));
            out.insert("iterations".into(), json!(r.iterations));
            out.insert("residual_inf".into(), json!(r.residual_inf));
            out.insert("aspect_ok".into(), json!(r.aspect_ok));
            if exact {
                Some(exact_count_bipartite(&m)?)
            } else {
                None
            }
        }
    };
    if let Some(c) = exact_count {
        let ln = out["ln_count"].as_f64().unwrap();
        out.insert("exact_count".into(), exact_value(&c));
        out.insert("ratio".into(), json!((ln - c.ln()).exp()));
    }
    out.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    let value = Value::Object(out);
    if as_json {
        emit(&value);
    } else {
        emit_lines(&value);
    }
    Ok(0)
}

fn cmd_sample(inp: Input, k: usize, seed: u64, max_trials: u64, sampler: Sampler) -> CmdResult {
    let Input::Graph(degrees) = inp else {
        return Err(Failure::usage(
            "sampling is only available for degree sequences",
        ));
    };
    let d = require_graph(degrees)?;
    if !erdos_gallai(&d, false).feasible {
        let report = erdos_gallai(&d, false);
        return Err(if report.parity_ok {
            Error::Infeasible(report.first_violated_k)
        } else {
            Error::OddParity
        }
        .into());
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let one_based = |g: &degcount::GraphSample| {
        g.edges
            .iter()
            .map(|(j, k)| format!("{}-{}", j + 1, k + 1))
            .collect::<Vec<_>>()
            .join(" ")
    };
    match sampler {
        Sampler::Rejection => {
            let sol = match solve_maxent_default(&d) {
                Ok(sol) => sol,
                Err(Error::DivergedToBoundary(_)) => {
                    eprintln!("no interior point; proposing every edge with probability 1/2");
                    zero_tilt(&d)
                }
                Err(e) => return Err(e.into()),
            };
            let samples = sample_uniform_many(&d, &sol, seed, k, max_trials)?;
            let mut total = 0u64;
            for (i, (g, trials)) in samples.iter().enumerate() {
                writeln!(lock, "{}", one_based(g)).unwrap();
                eprintln!("sample {}: {trials} trials", i + 1);
                total += trials;
            }
            if k > 0 {
                eprintln!(
                    "total trials {total}, acceptance rate {:.3e}",
                    k as f64 / total as f64
                );
            }
        }
        Sampler::Counting => {
            let mut s = CountingSampler::new(&d)?;
            for i in 0..k {
                writeln!(lock, "{}", one_based(&s.sample(seed, i as u64))).unwrap();
            }
        }
    }
    Ok(0)
}

fn cmd_exact(inp: Input, method: Method) -> CmdResult {
    let count = match inp {
        Input::Graph(degrees) => {
            let d = match graph_input(degrees)? {
                GraphInput::Valid(d) => d,
                GraphInput::OutOfRange(_) => {
                    println!("0");
                    return Ok(0);
                }
            };
            match method {
                Method::Auto | Method::Backtrack => exact_count_graphs(&d)?,
                Method::Fourier => {
                    let lambda = if erdos_gallai(&d, true).strictly_feasible {
                        solve_maxent(&d, default_tol(d.max()), DEFAULT_MAX_ITER)
                            .map(|s| s.lambda)
                            .unwrap_or_else(|_| vec![0.0; d.n()])
                    } else {
                        vec![0.0; d.n()]
                    };
                    fourier_count_graphs_tilted(&d, &lambda)?
                }
                Method::Dp => return Err(Failure::usage("method dp applies to bipartite margins")),
            }
        }
        Input::Bipartite { rows, cols } => {
            let m = match margins(rows, cols) {
                Ok(m) => m,
                Err(f) if f.code == EXIT_INFEASIBLE => {
                    println!("0");
                    return Ok(0);
                }
                Err(f) => return Err(f),
            };
            match method {
                Method::Auto | Method::Dp => exact_count_bipartite(&m)?,
                _ => {
                    return Err(Failure::usage(
                        "bipartite margins support methods auto and dp",
                    ))
                }
            }
        }
    };
    println!("{}", count.value);
    Ok(0)
}

fn cmd_maxent(inp: Input, tol: Option<f64>) -> CmdResult {
    let value = match inp {
        Input::Graph(degrees) => {
            let d = require_graph(degrees)?;
            let sol = solve_maxent(
                &d,
                tol.unwrap_or_else(|| default_tol(d.max())),
                DEFAULT_MAX_ITER,
            )?;
            serde_json::to_value(&sol).unwrap()
        }
        Input::Bipartite { rows, cols } => {
            let m = margins(rows, cols)?;
            let sol = match tol {
                Some(t) => solve_maxent_bipartite(&m, t, DEFAULT_MAX_ITER)?,
                None => solve_maxent_bipartite_default(&m)?,
            };
            serde_json::to_value(&sol).unwrap()
        }
    };
    emit(&value);
    Ok(0)
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let threads = match flag {
        Some(0) => return Err(Failure::usage("--threads must be positive")),
        Some(t) => Some(t),
        None => match std::env::var("DEGCOUNT_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(t) if t > 0 => Some(t),
                _ => {
                    return Err(Failure::usage(format!(
                        "DEGCOUNT_THREADS must be a positive integer, got '{v}'"
                    )))
                }
            },
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    configure_threads(cli.threads)?;
    let load = |arg: &str| -> Result<Input, Failure> {
        let text = input::read_source(arg).map_err(Failure::usage)?;
        input::parse(&text).map_err(Failure::usage)
    };
    match cli.command {
        Command::Check { input, json } => cmd_check(load(&input)?, json),
        Command::Count {
            input,
            json,
            tol,
            exact,
        } => cmd_count(load(&input)?, json, tol, exact),
        Command::Sample {
            input,
            k,
            seed,
            max_trials,
            sampler,
        } => cmd_sample(load(&input)?, k, seed, max_trials, sampler),
        Command::Exact { input, method } => cmd_exact(load(&input)?, method),
        Command::Maxent { input, tol } => cmd_maxent(load(&input)?, tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
