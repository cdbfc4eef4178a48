use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hyperdev::decomposition::ClauseStatus;
use hyperdev::io::{load_base, load_graph, load_tensor, to_json_pretty, CertificateJson, DecompositionJson};
use hyperdev::tails::{tail_binomial, TailEstimate};
use hyperdev::tensor::TensorJson;
use hyperdev::variational::{phi_lower_bound_reference, psi_properties_check, Candidate, Method, PsiReport};
use hyperdev::verify::{run_suite, SUITES};
use hyperdev::{
    decompose, dual_norm_exact, dual_norm_heuristic, hom_count, induced_hom, solve, tail_exact_enum, tail_mc,
    tail_tilted, verify_result, Direction, Error, NormMode, SolveOptions, SymTensor, TailProblem,
};

#[derive(Parser)]
#[command(name = "hyperdev", version, about = "Sparse hypergraph regularity, counting and tail toolkit")]
struct Cli {
    /// Worker thread cap
    #[arg(long, global = true, env = "HYPERDEV_THREADS")]
    threads: Option<usize>,
    /// Write JSON here instead of stdout
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    Exact,
    Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum HomKind {
    Plain,
    Induced,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailKind {
    Exact,
    Mc,
    Tilted,
    Binomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Upper,
    Lower,
}

#[derive(Subcommand)]
enum Command {
    /// Δ′(H) with a per-edge dominating-base certificate
    DeltaPrime {
        /// Built-in name (clique:k:r, star:arms:r, sunflower:p:k:r, cycle:len, fano, fig1, ...) or JSON file
        graph: String,
    },
    /// Dual seminorm of a tensor for one weighted base
    Norm {
        #[arg(long)]
        tensor: PathBuf,
        /// Base JSON file or matrix:Δ, star:Δ, maximal:r:d*:d_sub
        #[arg(long)]
        base: String,
        #[arg(long)]
        p: f64,
        /// Subtract p·J before taking the norm
        #[arg(long)]
        centered: bool,
        #[arg(long, value_enum, default_value = "exact")]
        oracle: Oracle,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Decompose A = pJ + Σ α_i T_i + A_rand and verify the result
    Decompose {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        base: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long, value_enum, default_value = "exact")]
        oracle: Oracle,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Homomorphism count and densities of H in a tensor
    Hom {
        graph: String,
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, value_enum, default_value = "plain")]
        kind: HomKind,
        /// Also report t_p
        #[arg(long)]
        p: Option<f64>,
    },
    /// Upper-tail entropic problem Φ (joint when several graphs are given)
    Phi {
        #[arg(long = "graph", required = true)]
        graphs: Vec<String>,
        #[arg(long = "delta", required = true)]
        deltas: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        induced: bool,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        #[arg(long, default_value_t = 600)]
        iters: usize,
    },
    /// Lower-tail entropic problem Ψ, optionally with the clamp and ladder checks
    Psi {
        #[arg(long = "graph", required = true)]
        graphs: Vec<String>,
        #[arg(long = "delta", required = true)]
        deltas: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        /// n values for the scale check (single graph only)
        #[arg(long, num_args = 1..)]
        ladder: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        #[arg(long, default_value_t = 600)]
        iters: usize,
    },
    /// Tail probability P(t_p(H,A) ≥ 1+δ) or P(t_p(H,A) ≤ 1−δ)
    Tail {
        #[arg(long = "graph", required = true)]
        graphs: Vec<String>,
        #[arg(long = "delta", required = true)]
        deltas: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value = "upper")]
        side: Side,
        #[arg(long)]
        induced: bool,
        #[arg(long, value_enum, default_value = "exact")]
        method: TailKind,
        #[arg(long, default_value_t = 10000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Tilting tensor; defaults to the Φ/Ψ solver optimizer
        #[arg(long)]
        q: Option<PathBuf>,
    },
    /// Run a named property suite
    Verify {
        suite: String,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct DeltaPrimeOut {
    value: String,
    per_edge: Vec<EdgeOut>,
    graph: hyperdev::RGraph,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct EdgeOut {
    edge: Vec<usize>,
    members: Vec<Vec<usize>>,
    value: String,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct HomOut {
    kind: String,
    hom: f64,
    t: f64,
    tp: Option<f64>,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct SolutionOut {
    method: Method,
    value: f64,
    block: Option<usize>,
    residuals: Vec<f64>,
    /// n^r p^Δ log(1/p), when Δ(H) ≥ 2
    reference: Option<f64>,
    candidates: Vec<Candidate>,
    q: TensorJson,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct PsiOut {
    solution: SolutionOut,
    properties: Option<PsiReport>,
}

/// Input errors exit with 2; property violations are reported through the `bool` of `Outcome`.
enum Failure {
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ExactInfeasible { .. } => Failure::Input(format!("{e} (rerun with --oracle heuristic --seed N)")),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<(String, bool), Failure>;

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64, Failure> {
    seed.ok_or_else(|| Failure::Input(format!("{what} is randomized: --seed is required")))
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    Ok(to_json_pretty(v)?)
}

fn problem(graphs: &[String], deltas: &[f64], n: usize, p: f64, dir: Direction, induced: bool) -> Result<TailProblem, Failure> {
    let gs = graphs.iter().map(|g| load_graph(g)).collect::<Result<Vec<_>, _>>()?;
    let dirs = vec![dir; gs.len()];
    Ok(TailProblem::new(gs, deltas.to_vec(), dirs, n, p, induced)?)
}

fn solution_out(pr: &TailProblem, s: hyperdev::VariationalSolution) -> SolutionOut {
    let h = &pr.constraints[0].graph;
    SolutionOut {
        method: s.method,
        value: s.value,
        block: s.block,
        residuals: s.residuals,
        reference: phi_lower_bound_reference(h, pr.n, pr.p).ok(),
        candidates: s.candidates,
        q: s.q.to_json(),
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::DeltaPrime { graph } => {
            let g = load_graph(&graph)?;
            let cert = g.delta_prime()?;
            let out = DeltaPrimeOut {
                value: cert.value.to_string(),
                per_edge: cert
                    .per_edge
                    .iter()
                    .map(|e| EdgeOut { edge: e.base.edge.clone(), members: e.base.members.clone(), value: e.value.to_string() })
                    .collect(),
                graph: g,
            };
            Ok((json(&out)?, true))
        }
        Command::Norm { tensor, base, p, centered, oracle, restarts, seed } => {
            let a = load_tensor(&tensor)?;
            let wb = load_base(&base)?;
            let mut z = a.to_dense();
            if centered {
                z.data.iter_mut().enumerate().for_each(|(i, v)| {
                    if is_off_diagonal(i, z.n, z.r) {
                        *v -= p
                    }
                });
            }
            let cert = match oracle {
                Oracle::Exact => dual_norm_exact(&z, &wb, p)?,
                Oracle::Heuristic => dual_norm_heuristic(&z, &wb, p, restarts, need_seed(seed, "the heuristic oracle")?)?,
            };
            Ok((json(&CertificateJson::from_certificate(&cert))?, true))
        }
        Command::Decompose { tensor, base, p, eps, kappa, oracle, restarts, seed } => {
            let a = load_tensor(&tensor)?;
            let wb = load_base(&base)?;
            let mode = match oracle {
                Oracle::Exact => NormMode::Exact,
                Oracle::Heuristic => NormMode::Heuristic { restarts, seed: need_seed(seed, "the heuristic oracle")? },
            };
            let res = decompose(&a, &wb, p, eps, kappa, mode)?;
            let rep = verify_result(&a, &res, &wb, p, eps, kappa, mode)?;
            let ok = rep.all_pass();
            for c in &rep.clauses {
                let tag = match c.status {
                    ClauseStatus::Pass => "pass",
                    ClauseStatus::Fail => "FAIL",
                    ClauseStatus::NotClaimed => "not claimed",
                };
                eprintln!("{:<22} {tag}  {}", c.name, c.detail);
            }
            eprintln!("status {:?}, {} steps, budget {:.4e} of {:.4e}", res.status, res.steps.len(), res.budget_used, res.budget);
            Ok((json(&DecompositionJson::from_result(&res, Some(rep)))?, ok))
        }
        Command::Hom { graph, tensor, kind, p } => {
            let h = load_graph(&graph)?;
            let q: SymTensor = load_tensor(&tensor)?;
            let hom = match kind {
                HomKind::Plain => hom_count(&h, &q)?,
                HomKind::Induced => induced_hom(&h, &q)?,
            };
            let t = hom / (q.n() as f64).powi(h.num_vertices() as i32);
            let tp = match p {
                Some(p) if p > 0.0 => Some(t / p.powi(h.num_edges() as i32)),
                Some(p) => return Err(Failure::Input(format!("p = {p} must be positive"))),
                None => None,
            };
            let kind = match kind {
                HomKind::Plain => "plain",
                HomKind::Induced => "induced",
            };
            Ok((json(&HomOut { kind: kind.into(), hom, t, tp })?, true))
        }
        Command::Phi { graphs, deltas, n, p, induced, seed, restarts, iters } => {
            let pr = problem(&graphs, &deltas, n, p, Direction::Upper, induced)?;
            let opts = SolveOptions { seed, restarts, iters, ..SolveOptions::default() };
            let s = solve(&pr, &opts)?;
            Ok((json(&solution_out(&pr, s))?, true))
        }
        Command::Psi { graphs, deltas, n, p, seed, ladder, restarts, iters } => {
            let pr = problem(&graphs, &deltas, n, p, Direction::Lower, false)?;
            let opts = SolveOptions { seed, restarts, iters, ..SolveOptions::default() };
            let s = solve(&pr, &opts)?;
            let properties = if ladder.is_empty() {
                None
            } else {
                if pr.constraints.len() != 1 {
                    return Err(Failure::Input("--ladder needs a single graph".into()));
                }
                let c = &pr.constraints[0];
                Some(psi_properties_check(&c.graph, n, p, c.delta, &ladder, &opts)?)
            };
            let ok = properties.as_ref().is_none_or(|r| r.passed);
            Ok((json(&PsiOut { solution: solution_out(&pr, s), properties })?, ok))
        }
        Command::Tail { graphs, deltas, n, p, side, induced, method, samples, seed, q } => {
            let dir = match side {
                Side::Upper => Direction::Upper,
                Side::Lower => Direction::Lower,
            };
            let pr = problem(&graphs, &deltas, n, p, dir, induced)?;
            let est: TailEstimate = match method {
                TailKind::Exact => tail_exact_enum(&pr)?,
                TailKind::Binomial => tail_binomial(&pr)?,
                TailKind::Mc => tail_mc(&pr, samples, need_seed(seed, "Monte Carlo")?)?,
                TailKind::Tilted => {
                    let seed = need_seed(seed, "importance sampling")?;
                    let q = match q {
                        Some(path) => load_tensor(&path)?,
                        None => solve(&pr, &SolveOptions { seed, ..SolveOptions::default() })?
                            .q
                            .map(|x| x.clamp(1e-9, 1.0 - 1e-9)),
                    };
                    tail_tilted(&pr, &q, samples, seed)?
                }
            };
            Ok((json(&est)?, true))
        }
        Command::Verify { suite, seed } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(Failure::Input(format!("unknown suite `{suite}`; available: {}", SUITES.join(", "))));
            }
            let rep = run_suite(&suite, seed)?;
            for c in &rep.checks {
                eprintln!("{:<5} {}  {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            let ok = rep.passed;
            Ok((json(&rep)?, ok))
        }
    }
}

fn is_off_diagonal(offset: usize, n: usize, r: usize) -> bool {
    let mut t = Vec::with_capacity(r);
    let mut x = offset;
    for _ in 0..r {
        t.push(x % n);
        x /= n;
    }
    t.sort_unstable();
    t.windows(2).all(|w| w[0] != w[1])
}

fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other,
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok((text, ok)) => {
            if let Err(e) = emit(&text, cli.out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("property violation");
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
