//! `linopt`: batch front end for photonic-state invariants, feasibility
//! checks and heralded bounds.
//!
//! Exit status is 0 on success (including an `undecided` verdict), 2 when a
//! comparison proves the transformation impossible, and 1 on any error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use linopt_core::bounds::{self, CompareConfig, Verdict};
use linopt_core::catalog::StateSpec;
use linopt_core::fock::PhotonicState;
use linopt_core::invariants::{self, Limits, MapKind};
use linopt_core::lie::{self, UnitarySpec, BASIS_ORDER};
use linopt_core::linalg;
use linopt_core::report::{self, Family, InvariantReport};

#[derive(Parser, Debug)]
#[command(name = "linopt", version, about = "Invariants of photonic states under passive linear optics")]
struct Cli {
    /// Comparison tolerance (must be positive).
    #[arg(long, global = true, default_value_t = bounds::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Largest index-tuple sum an invariant may request.
    #[arg(long = "max-terms", global = true)]
    max_terms: Option<u128>,
    /// Seed for any randomness (Haar unitaries without their own seed).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute invariant families of one state.
    Invariants {
        #[arg(long)]
        state: PathBuf,
        /// Comma-separated families: tangent, trace, covariance, higher:k, nested:k, subspaces:<kind>:k.
        #[arg(long, default_value = "tangent,trace,covariance")]
        set: String,
    },
    /// Compare two states; exits with 2 if they cannot be related by passive optics.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "tangent,trace,covariance")]
        set: String,
    },
    /// Upper bound on the heralded success probability from input to target.
    Bound {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Apply a scattering matrix to a state and emit the resulting state.
    Evolve {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        unitary: PathBuf,
    },
    /// Eigenspaces of an Ad-equivariant map on one sector's operator space.
    Decompose {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_kind)]
        kind: MapKind,
        #[arg(long)]
        k: usize,
        /// Include an orthonormal basis of every eigenspace.
        #[arg(long)]
        bases: bool,
    },
}

fn parse_kind(s: &str) -> Result<MapKind, String> {
    s.parse::<MapKind>().map_err(|e| e.to_string())
}

type CliResult<T> = Result<T, String>;

struct Outcome {
    value: Value,
    text: String,
    exit: u8,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn malformed(path: &Path, e: serde_json::Error) -> String {
    format!("malformed JSON in {}: {e}", path.display())
}

fn load_state(path: &Path) -> CliResult<PhotonicState> {
    let spec: StateSpec = serde_json::from_str(&read_text(path)?).map_err(|e| malformed(path, e))?;
    spec.build().map_err(|e| format!("{}: {e}", path.display()))
}

fn load_unitary(path: &Path) -> CliResult<UnitarySpec> {
    serde_json::from_str(&read_text(path)?).map_err(|e| malformed(path, e))
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("[{}]", items.join(", "))
}

fn text_for_reports(reports: &[InvariantReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let what = if r.spectrum.is_some() { "spectrum" } else { "values" };
        out.push_str(&format!("{} {what} {}\n", r.label(), fmt_list(r.numbers())));
    }
    if let Some(first) = reports.first() {
        for w in &first.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
    }
    out
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(format!("--tol must be positive, got {}", cli.tol));
    }
    let mut limits = Limits::default();
    if let Some(t) = cli.max_terms {
        limits.max_terms = t;
    }

    match &cli.command {
        Command::Invariants { state, set } => {
            let families = Family::parse_list(set).map_err(|e| e.to_string())?;
            let state = load_state(state)?;
            let mut reports = Vec::new();
            for f in families {
                reports.extend(report::evaluate(&state, f, &limits).map_err(|e| e.to_string())?);
            }
            let text = text_for_reports(&reports);
            Ok(Outcome { value: json!({ "reports": reports }), text, exit: 0 })
        }
        Command::Compare { a, b, set } => {
            let families = Family::parse_list(set).map_err(|e| e.to_string())?;
            let (a, b) = (load_state(a)?, load_state(b)?);
            let config = CompareConfig { families, tolerance: cli.tol, limits };
            let r = bounds::compare(&a, &b, &config).map_err(|e| e.to_string())?;
            let verdict = match r.verdict {
                Verdict::Impossible => "impossible",
                Verdict::Undecided => "undecided",
            };
            let mut text = format!("verdict: {verdict}\n");
            for c in &r.checks {
                let mark = if c.pass { "pass" } else { "FAIL" };
                text.push_str(&format!(
                    "{mark} {} deviation {:.3e} tolerance {:.3e}\n",
                    c.invariant, c.deviation, c.tolerance
                ));
            }
            for w in &r.warnings {
                text.push_str(&format!("warning: {w}\n"));
            }
            let exit = if r.verdict == Verdict::Impossible { 2 } else { 0 };
            Ok(Outcome { value: serde_json::to_value(&r).map_err(|e| e.to_string())?, text, exit })
        }
        Command::Bound { input, target } => {
            let (input, target) = (load_state(input)?, load_state(target)?);
            let r = bounds::heralded_bound(&input, &target).map_err(|e| e.to_string())?;
            let mut text = format!("p_max {:.10}\nd_T {:.10}\nd_perp {:.10}\n", r.p_max, r.d_t, r.d_perp);
            for s in &r.sectors {
                text.push_str(&format!("sector n={} d_T^2 {:.10} d_perp^2 {:.10}\n", s.n, s.d_t_sq, s.d_perp_sq));
            }
            Ok(Outcome { value: serde_json::to_value(&r).map_err(|e| e.to_string())?, text, exit: 0 })
        }
        Command::Evolve { state, unitary } => {
            let state = load_state(state)?;
            let spec = load_unitary(unitary)?;
            let s = spec.build(cli.seed).map_err(|e| format!("{}: {e}", unitary.display()))?;
            let evolved = lie::evolve(&state, &s).map_err(|e| e.to_string())?;
            let value = serde_json::to_value(StateSpec::from_state(&evolved)).map_err(|e| e.to_string())?;
            let text = serde_json::to_string_pretty(&value).map_err(|e| e.to_string())? + "\n";
            Ok(Outcome { value, text, exit: 0 })
        }
        Command::Decompose { m, n, kind, k, bases } => {
            let d = invariants::equivariant_eigenspaces(*m, *n, *kind, *k, &limits).map_err(|e| e.to_string())?;
            let clusters: Vec<Value> = d
                .clusters
                .iter()
                .map(|c| {
                    let mut v = json!({ "eigenvalue": c.eigenvalue, "dim": c.dim() });
                    if *bases {
                        let ops: Vec<Value> = c
                            .basis
                            .iter()
                            .map(|op| {
                                let (re, im) = linalg::split_parts(op.matrix());
                                json!({ "re": re, "im": im })
                            })
                            .collect();
                        v["basis"] = Value::Array(ops);
                    }
                    v
                })
                .collect();
            let mut value = json!({
                "kind": kind.name(),
                "m": m,
                "n": n,
                "k": k,
                "basis_order": BASIS_ORDER,
                "dimensions": d.dimensions(),
                "clusters": clusters,
            });
            if *bases {
                let fock: Vec<Vec<usize>> = d.sector.basis().iter().map(|o| o.counts().to_vec()).collect();
                value["fock_basis"] = json!(fock);
            }
            let mut text = format!("{} k={} on m={}, n={}\n", kind.name(), k, m, n);
            for c in &d.clusters {
                text.push_str(&format!("eigenvalue {:.10} dim {}\n", c.eigenvalue, c.dim()));
            }
            Ok(Outcome { value, text, exit: 0 })
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> CliResult<()> {
    let body = match cli.format {
        Format::Json => serde_json::to_string_pretty(&outcome.value).map_err(|e| e.to_string())? + "\n",
        Format::Text => outcome.text.clone(),
    };
    match &cli.out {
        Some(path) => fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|o| emit(&cli, &o).map(|_| o.exit)) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
