//! `weakot`: classical and weak optimal transport on the line from the
//! command line.
//!
//! Measures are given as file paths (JSON `{"atoms": [..], "weights": [..]}`
//! or CSV `atom,weight` rows) or as inline JSON objects; vectors as JSON
//! arrays, inline or in a file. Text goes to stdout, or a JSON
//! [`RunReport`] with `--json`. Errors print one `error: kind=.. msg=..`
//! line on stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 verification
//! failure.

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use weakot::inequalities::{diagnose, entropy_inequality_probe, Verdict};
use weakot::io::{load_measure, load_vector, MeasureRecord};
use weakot::oracle::suite::run_suite;
use weakot::{
    classical_cost, convex_order, majorize, optimal_weak_coupling, parse_theta, project, rado_decompose, weak_cost,
    Cost, Measure, Refinement,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Slack below which a probed entropy inequality counts as violated.
const PROBE_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "weakot", version, about = "Classical and weak optimal transport on the real line")]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical cost T_θ(ν, μ) via the quantile coupling.
    Cost {
        #[arg(long)]
        theta: String,
        mu: String,
        nu: String,
    },
    /// Weak cost T̄_θ(ν|μ) and the cost-independent optimizer.
    WeakCost {
        #[arg(long)]
        theta: String,
        /// Common refinement size: `auto` or a positive integer.
        #[arg(long, default_value = "auto")]
        refine: Refinement,
        /// Compute T̄_θ(μ|ν) instead.
        #[arg(long)]
        swap: bool,
        mu: String,
        nu: String,
    },
    /// Euclidean projection of A onto the permutahedron of B.
    Project { a: String, b: String },
    /// Convex order ν₁ ⪯ ν₂, with a witness when it fails.
    Order { nu1: String, nu2: String },
    /// Majorization a ⪯ b, with a witness when it fails.
    Majorize { a: String, b: String },
    /// Doubly stochastic P with A = P·B, as T-transforms.
    Rado { a: String, b: String },
    /// Optimal weak coupling of μ and ν.
    Couple {
        #[arg(long)]
        theta: String,
        #[arg(long, default_value = "auto")]
        refine: Refinement,
        mu: String,
        nu: String,
    },
    /// Transport-entropy diagnostics of μ for a cost quadratic on [0, t0].
    Diagnose {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        t0: f64,
        /// Cost β for the K± functionals (with `--b`).
        #[arg(long, requires = "b")]
        beta: Option<String>,
        #[arg(long, requires = "beta")]
        b: Option<f64>,
        mu: String,
    },
    /// Checks the entropy inequalities on random reweightings of μ.
    Probe {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        t0: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, env = "WEAKOT_SEED", default_value_t = 0)]
        seed: u64,
        mu: String,
    },
    /// Runs the oracle suite; exits 3 on any violation.
    Verify {
        #[arg(long, env = "WEAKOT_SEED", default_value_t = 0)]
        seed: u64,
    },
}

/// Everything a subcommand reports.
#[derive(Debug, Serialize)]
struct RunReport {
    command: &'static str,
    inputs: Value,
    refinement_n: Option<usize>,
    results: Value,
    verdicts: Vec<Verdict>,
    wall_time_ms: f64,
}

struct Outcome {
    inputs: Value,
    refinement_n: Option<usize>,
    results: Value,
    verdicts: Vec<Verdict>,
}

impl Outcome {
    fn new(inputs: Value, results: Value) -> Self {
        Self { inputs, refinement_n: None, results, verdicts: Vec::new() }
    }

    fn verdict(mut self, name: &str, holds: bool, detail: String) -> Self {
        self.verdicts.push(Verdict { name: name.into(), holds, detail });
        self
    }
}

fn to_value<S: Serialize>(x: &S) -> Value {
    serde_json::to_value(x).expect("report types serialize to JSON")
}

fn measure(arg: &str) -> weakot::Result<Measure> {
    load_measure(arg)
}

fn record(mu: &Measure) -> Value {
    to_value(&MeasureRecord::from_measure(mu))
}

fn theta(spec: &str) -> weakot::Result<Cost> {
    parse_theta(spec)
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Cost { .. } => "cost",
        Command::WeakCost { .. } => "weak-cost",
        Command::Project { .. } => "project",
        Command::Order { .. } => "order",
        Command::Majorize { .. } => "majorize",
        Command::Rado { .. } => "rado",
        Command::Couple { .. } => "couple",
        Command::Diagnose { .. } => "diagnose",
        Command::Probe { .. } => "probe",
        Command::Verify { .. } => "verify",
    }
}

fn run(command: &Command) -> weakot::Result<Outcome> {
    Ok(match command {
        Command::Cost { theta: spec, mu, nu } => {
            let (th, mu, nu) = (theta(spec)?, measure(mu)?, measure(nu)?);
            let value = classical_cost(&nu, &mu, &th);
            Outcome::new(json!({"theta": spec, "mu": record(&mu), "nu": record(&nu)}), json!({ "value": value }))
        }
        Command::WeakCost { theta: spec, refine, swap, mu, nu } => {
            let (th, mu, nu) = (theta(spec)?, measure(mu)?, measure(nu)?);
            let r = if *swap { weak_cost(&mu, &nu, &th, *refine)? } else { weak_cost(&nu, &mu, &th, *refine)? };
            let mut out = Outcome::new(
                json!({"theta": spec, "refine": refine.to_string(), "swap": swap, "mu": record(&mu), "nu": record(&nu)}),
                json!({
                    "direction": if *swap { "mu_given_nu" } else { "nu_given_mu" },
                    "value": r.value,
                    "gamma_hat": record(&r.gamma_hat),
                    "monotone_map": r.monotone_map,
                }),
            );
            out.refinement_n = Some(r.refinement_n);
            out
        }
        Command::Project { a, b } => {
            let (av, bv) = (load_vector::<f64>(a)?, load_vector::<f64>(b)?);
            let p = project(&av, &bv)?;
            Outcome::new(json!({"a": av, "b": bv}), to_value(&p))
        }
        Command::Order { nu1, nu2 } => {
            let (n1, n2) = (measure(nu1)?, measure(nu2)?);
            let order = convex_order(&n1, &n2);
            let detail = match &order {
                weakot::ConvexOrder::Dominated => "dominated".to_string(),
                weakot::ConvexOrder::NotDominated { witness } => format!("not dominated: {}", to_value(witness)),
            };
            Outcome::new(json!({"nu1": record(&n1), "nu2": record(&n2)}), to_value(&order)).verdict(
                "convex_order",
                order.holds(),
                detail,
            )
        }
        Command::Majorize { a, b } => {
            let (av, bv) = (load_vector::<f64>(a)?, load_vector::<f64>(b)?);
            let m = majorize(&av, &bv)?;
            let detail = match &m {
                weakot::Majorization::Majorized => "majorized".to_string(),
                weakot::Majorization::NotMajorized { witness } => format!("not majorized: {}", to_value(witness)),
            };
            Outcome::new(json!({"a": av, "b": bv}), to_value(&m)).verdict("majorization", m.holds(), detail)
        }
        Command::Rado { a, b } => {
            let (av, bv) = (load_vector::<f64>(a)?, load_vector::<f64>(b)?);
            let p = rado_decompose(&av, &bv)?;
            let defect = p.stochastic_defect();
            Outcome::new(json!({"a": av, "b": bv}), to_value(&p)).verdict(
                "doubly_stochastic",
                defect <= 1e-10,
                format!("max row/column defect {defect:e}"),
            )
        }
        Command::Couple { theta: spec, refine, mu, nu } => {
            let (th, mu, nu) = (theta(spec)?, measure(mu)?, measure(nu)?);
            let c = optimal_weak_coupling(&nu, &mu, &th, *refine)?;
            let (e1, e2) = (c.first_marginal_error(&mu), c.second_marginal_error(&nu));
            let mut out = Outcome::new(
                json!({"theta": spec, "refine": refine.to_string(), "mu": record(&mu), "nu": record(&nu)}),
                to_value(&c),
            )
            .verdict("marginals", e1.max(e2) <= 1e-10, format!("first {e1:e}, second {e2:e}"));
            out.refinement_n = Some(c.refinement_n);
            out
        }
        Command::Diagnose { theta: spec, t0, beta, b, mu } => {
            let (th, mu) = (theta(spec)?, measure(mu)?);
            let beta_cost = beta.as_deref().map(theta).transpose()?;
            let k_args = beta_cost.as_ref().zip(*b);
            let mut report = diagnose(&mu, &th, *t0, k_args)?;
            let verdicts = std::mem::take(&mut report.verdicts);
            let mut out = Outcome::new(
                json!({"theta": spec, "t0": t0, "beta": beta, "b": b, "mu": record(&mu)}),
                to_value(&report),
            );
            if let Value::Object(map) = &mut out.results {
                map.remove("verdicts");
            }
            out.verdicts = verdicts;
            out
        }
        Command::Probe { theta: spec, t0, trials, seed, mu } => {
            let (th, mu) = (theta(spec)?, measure(mu)?);
            let r = entropy_inequality_probe(&mu, &th, *t0, *trials, *seed)?;
            let holds = r.min_slack >= -PROBE_TOLERANCE;
            let detail = format!("min slack {:e} over {} trials", r.min_slack, r.trials);
            Outcome::new(
                json!({"theta": spec, "t0": t0, "trials": trials, "seed": seed, "mu": record(&mu)}),
                to_value(&r),
            )
            .verdict("entropy_inequality", holds, detail)
        }
        Command::Verify { seed } => {
            let report = run_suite(*seed)?;
            let mut out = Outcome::new(json!({ "seed": seed }), to_value(&report));
            for c in &report.checks {
                out = out.verdict(
                    c.name,
                    c.passed,
                    format!("worst {:e} (tolerance {:e}) over {} instances", c.worst, c.tolerance, c.instances),
                );
            }
            out
        }
    })
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "null".into(),
        other => other.to_string(),
    }
}

fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    if let Some(n) = report.refinement_n {
        out += &format!("refinement_n: {n}\n");
    }
    match &report.results {
        Value::Object(map) => {
            for (k, v) in map {
                out += &format!("{k}: {}\n", scalar_text(v));
            }
        }
        other => out += &format!("{}\n", scalar_text(other)),
    }
    for v in &report.verdicts {
        out += &format!("{} {}: {}\n", if v.holds { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    out
}

fn fail(code: u8, kind: &str, msg: &str) -> ExitCode {
    let msg = msg.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ");
    eprintln!("error: kind={kind} msg={msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return fail(EXIT_USAGE, "usage", &e.kind().to_string());
        }
    };

    let start = Instant::now();
    let outcome = match run(&cli.command) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_INPUT, e.kind(), &e.to_string()),
    };
    let report = RunReport {
        command: command_name(&cli.command),
        inputs: outcome.inputs,
        refinement_n: outcome.refinement_n,
        results: outcome.results,
        verdicts: outcome.verdicts,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };

    let text = if cli.json {
        match serde_json::to_string_pretty(&report) {
            Ok(s) => s + "\n",
            Err(e) => return fail(EXIT_INPUT, "output", &e.to_string()),
        }
    } else {
        render_text(&report)
    };
    // A closed pipe (`weakot ... | head`) is not an error.
    if let Err(e) = std::io::stdout().write_all(text.as_bytes()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return fail(EXIT_INPUT, "output", &e.to_string());
        }
    }

    if matches!(cli.command, Command::Verify { .. }) && !report.verdicts.iter().all(|v| v.holds) {
        return fail(EXIT_VERIFY, "verification", "oracle suite reported violations");
    }
    ExitCode::SUCCESS
}
