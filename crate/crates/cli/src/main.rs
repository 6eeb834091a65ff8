//! `twp`: verification and synthesis for timed window parity objectives.
//!
//! Exit codes: 0 when the objective holds (or player 1 wins, or the trace
//! satisfies it), 1 when it does not, 2 on usage, model or trace errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twp_core::expand::{expand, expand_game};
use twp_core::games::{realize, strategy_wins};
use twp_core::model::{Model, PrioritySpec, TimedAutomaton};
use twp_core::oracle::trace::{format_trace, parse_trace};
use twp_core::oracle::{check_dtw, check_dtw_dim, check_parity, check_tw, check_tw_dim};
use twp_core::par::Exec;
use twp_core::parse::{emit_model, parse_model};
use twp_core::verify::{search, verify_per_dimension, verify_product, Objective};

/// Version of the `--json` report layout.
const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "twp", version, about = "Timed window parity objectives on timed automata and games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the objective on every time-divergent path.
    Verify {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<u32>,
        /// Direct objective (every window good) instead of the eventual one.
        #[arg(long)]
        direct: bool,
        /// One expansion over all dimensions instead of one per dimension.
        #[arg(long)]
        product: bool,
        #[arg(long)]
        json: bool,
        /// Write the region graph of the product to PATH.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
    },
    /// Decide whether player 1 has a winning strategy.
    Realize {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<u32>,
        #[arg(long)]
        direct: bool,
        /// Write the winning strategy to PATH instead of stdout.
        #[arg(long, value_name = "PATH")]
        strategy: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print the expanded model.
    Expand {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<u32>,
        /// Also write the location graph, reachability marked, to PATH.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
    },
    /// Evaluate a lasso trace, one boolean per dimension.
    CheckTrace {
        model: PathBuf,
        trace: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<u32>,
        #[arg(long, value_enum)]
        objective: TraceObjective,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceObjective {
    Dtw,
    Tw,
    Parity,
}

#[derive(Serialize)]
struct Report {
    schema: u32,
    command: &'static str,
    model: String,
    lambda: Vec<u32>,
    objective: &'static str,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    dimension: Option<usize>,
    witness: Option<String>,
    sizes: Sizes,
}

#[derive(Serialize, Default)]
struct Sizes {
    expanded_locations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    region_vertices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    region_edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    game_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    player1_nodes: Option<usize>,
}

fn load(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("parsing {}", path.display()))
}

fn spec_for(ta: &TimedAutomaton, lambda: &[u32]) -> Result<PrioritySpec> {
    Ok(PrioritySpec::new(ta, lambda.to_vec())?)
}

fn objective_name(direct: bool) -> &'static str {
    if direct {
        "dtw"
    } else {
        "tw"
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_json(r: &Report) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(r)?);
    Ok(())
}

fn run_verify(
    model: &Path,
    lambda: &[u32],
    direct: bool,
    product: bool,
    json: bool,
    dot: Option<&Path>,
) -> Result<bool> {
    let start = Instant::now();
    let m = load(model)?;
    let ta = m.automaton();
    let spec = spec_for(ta, lambda)?;
    let obj = if direct { Objective::Direct } else { Objective::Eventual };
    let v = if product {
        verify_product(ta, &spec, obj)?
    } else {
        verify_per_dimension(ta, &spec, obj, Exec::available())?
    };
    if let Some(path) = dot {
        let x = expand(ta, &spec)?;
        let (g, _) = search(&x, obj);
        write_file(path, &g.to_dot(&x.ta))?;
    }
    // fail closed: a witness is printed only if the oracle rejects it
    let witness = match &v.counterexample {
        Some(pi) => {
            pi.validate(ta)?;
            let ok = if direct { check_dtw(pi, &spec)? } else { check_tw(pi, &spec)? };
            if ok {
                bail!("internal error: counterexample satisfies the objective");
            }
            Some(format_trace(ta, pi))
        }
        None => None,
    };
    let report = Report {
        schema: SCHEMA,
        command: "verify",
        model: model.display().to_string(),
        lambda: lambda.to_vec(),
        objective: objective_name(direct),
        verdict: if v.holds { "holds" } else { "violated" },
        dimension: v.dimension.map(|d| d + 1),
        witness,
        sizes: Sizes {
            expanded_locations: v.stats.expanded_locations,
            region_vertices: Some(v.stats.region_vertices),
            region_edges: Some(v.stats.region_edges),
            ..Sizes::default()
        },
    };
    if json {
        print_json(&report)?;
    } else {
        println!("{}", if v.holds { "HOLDS" } else { "VIOLATED" });
        if let Some(d) = v.dimension {
            println!("failing dimension: {}", d + 1);
        }
        match &report.witness {
            Some(w) => print!("counterexample:\n{w}"),
            None if !v.holds => println!("no concrete counterexample could be confirmed"),
            None => {}
        }
        println!(
            "expanded locations: {}, region vertices: {}, region edges: {}, time: {:.2?}",
            v.stats.expanded_locations,
            v.stats.region_vertices,
            v.stats.region_edges,
            start.elapsed()
        );
    }
    Ok(v.holds)
}

fn run_realize(model: &Path, lambda: &[u32], direct: bool, strategy: Option<&Path>, json: bool) -> Result<bool> {
    let start = Instant::now();
    let Model::Game(g) = load(model)? else {
        bail!("{} is an automaton without action owners; realize needs a game", model.display());
    };
    let spec = spec_for(&g.automaton, lambda)?;
    let r = realize(&g, &spec, direct)?;
    let dump = match &r.strategy {
        Some(s) => {
            if !strategy_wins(&r.arena, s) {
                bail!("internal error: extracted strategy is not winning");
            }
            Some(s.dump(&r.arena, &r.game))
        }
        None => None,
    };
    if let (Some(path), Some(d)) = (strategy, &dump) {
        write_file(path, d)?;
    }
    let report = Report {
        schema: SCHEMA,
        command: "realize",
        model: model.display().to_string(),
        lambda: lambda.to_vec(),
        objective: objective_name(direct),
        verdict: if r.wins { "wins" } else { "loses" },
        dimension: None,
        witness: if strategy.is_some() { None } else { dump.clone() },
        sizes: Sizes {
            expanded_locations: r.stats.expanded_locations,
            game_nodes: Some(r.stats.arena_nodes),
            player1_nodes: Some(r.stats.p1_nodes),
            ..Sizes::default()
        },
    };
    if json {
        print_json(&report)?;
    } else {
        println!("{}", if r.wins { "PLAYER 1 WINS" } else { "PLAYER 1 LOSES" });
        match (strategy, &dump) {
            (Some(path), Some(_)) => println!("strategy written to {}", path.display()),
            (None, Some(d)) => print!("strategy:\n{d}"),
            _ => {}
        }
        println!(
            "expanded locations: {}, game nodes: {}, player-1 nodes: {}, time: {:.2?}",
            r.stats.expanded_locations,
            r.stats.arena_nodes,
            r.stats.p1_nodes,
            start.elapsed()
        );
    }
    Ok(r.wins)
}

fn run_expand(model: &Path, lambda: &[u32], dot: Option<&Path>) -> Result<bool> {
    let m = load(model)?;
    let spec = spec_for(m.automaton(), lambda)?;
    let (x, out) = match &m {
        Model::Automaton(ta) => {
            let x = expand(ta, &spec)?;
            let out = Model::Automaton(x.ta.clone());
            (x, out)
        }
        Model::Game(g) => {
            let (x, gx) = expand_game(g, &spec)?;
            (x, Model::Game(gx))
        }
    };
    if let Some(path) = dot {
        write_file(path, &x.to_dot())?;
    }
    print!("{}", emit_model(&out));
    Ok(true)
}

fn run_check_trace(model: &Path, trace: &Path, lambda: &[u32], objective: TraceObjective) -> Result<bool> {
    let m = load(model)?;
    let ta = m.automaton();
    let spec = spec_for(ta, lambda)?;
    let text = std::fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let pi = parse_trace(ta, &text).with_context(|| format!("trace {}", trace.display()))?;
    if !pi.is_divergent() {
        bail!("trace {} is time-convergent", trace.display());
    }
    let mut out = String::new();
    let mut all = true;
    for dim in 0..spec.dimension() {
        let ok = match objective {
            TraceObjective::Dtw => check_dtw_dim(&pi, &spec, dim),
            TraceObjective::Tw => check_tw_dim(&pi, &spec, dim),
            TraceObjective::Parity => check_parity(&pi, &spec, dim),
        };
        all &= ok;
        writeln!(out, "dimension {}: {ok}", dim + 1)?;
    }
    print!("{out}");
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify {
            model,
            lambda,
            direct,
            product,
            json,
            dot,
        } => run_verify(model, lambda, *direct, *product, *json, dot.as_deref()),
        Command::Realize {
            model,
            lambda,
            direct,
            strategy,
            json,
        } => run_realize(model, lambda, *direct, strategy.as_deref(), *json),
        Command::Expand { model, lambda, dot } => run_expand(model, lambda, dot.as_deref()),
        Command::CheckTrace {
            model,
            trace,
            lambda,
            objective,
        } => run_check_trace(model, trace, lambda, *objective),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
