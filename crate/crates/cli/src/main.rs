//! Command line front end: analyze, partition, check, run, render and
//! price dataflow protocol models.
//!
//! Exit codes: 0 on success, 1 when the model is semantically rejected
//! (contradiction, failed assertion, run mismatch, exhausted budget),
//! 2 when the input cannot be read or parsed, 3 on usage errors.

mod render;

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use cordon_core::{
    channel_policy, check_assertions, compute_metrics, domain_label, metrics_table,
    monolithic_metrics, parse_weights, partition_bounded, serialize_annotated, solve_lexmin,
    annotate_conflict, parse_model, run, Assignment, Document, ExecOptions, MergeBound, Network,
    Outcome, Strategy, Weights,
};
use render::{render_dot, RenderOptions};

#[derive(Parser)]
#[command(name = "cordon", version, about = "Analyze, partition and execute dataflow protocol models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the minimal guarantee every port must carry.
    Analyze {
        model: PathBuf,
        /// Write the per-atom assignment to a file.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Write the model back out, annotated with the verdict.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Group instances into protection domains and print the IPC policy.
    Partition {
        model: PathBuf,
        #[arg(long, default_value = "basic")]
        strategy: Strategy,
        /// Per-kind size estimates, one `kind = integer` line each.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Refuse merges that would grow a domain beyond this weight.
        #[arg(long)]
        merge_max_weight: Option<u64>,
        /// Write the model back out with domain annotations.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a model and check its declared assertions.
    Check { model: PathBuf },
    /// Execute the model against its environment bindings.
    Run {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        /// Write the firing trace to a file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Emit a Graphviz view of the model.
    Render {
        model: PathBuf,
        /// Color nodes by their derived guarantees.
        #[arg(long)]
        solved: bool,
        /// Group nodes into protection domain clusters (implies --solved).
        #[arg(long)]
        partitions: bool,
        #[arg(long, default_value = "basic")]
        strategy: Strategy,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Trusted base and process metrics for a partitioning.
    Metrics {
        model: PathBuf,
        #[arg(long, default_value = "basic")]
        strategy: Strategy,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
}

type CliResult = Result<i32, Box<dyn Error>>;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 3 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(2);
        }
    }
}

fn read(path: &Path) -> Result<String, Box<dyn Error>> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write(path: &Path, content: &str) -> Result<(), Box<dyn Error>> {
    fs::write(path, content).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load(path: &Path) -> Result<Document, Box<dyn Error>> {
    let doc = parse_model(&read(path)?)?;
    let report = doc.net.validate();
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    if !report.errors.is_empty() {
        for error in &report.errors {
            eprintln!("error: {error}");
        }
        return Err(format!("{}: model failed validation", path.display()).into());
    }
    Ok(doc)
}

fn load_weights(path: Option<&Path>) -> Result<Weights, Box<dyn Error>> {
    let Some(path) = path else { return Ok(Weights::default()) };
    let (weights, warnings) = parse_weights(&read(path)?)?;
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
    Ok(weights)
}

/// Solve the network; on a contradiction print the minimal core and
/// return `None` so the caller can exit with the semantic failure code.
fn solve_or_report(net: &Network) -> Result<Option<Assignment>, Box<dyn Error>> {
    match solve_lexmin(net)? {
        Outcome::Satisfiable(asg) => Ok(Some(asg)),
        Outcome::Contradiction(conflict) => {
            println!("CONTRADICTION ({} constraints in minimal core)", conflict.core.len());
            print!("{}", conflict.listing());
            Ok(None)
        }
    }
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Analyze { model, dump, out } => analyze(&model, dump.as_deref(), out.as_deref()),
        Command::Partition { model, strategy, weights, merge_max_weight, out } => {
            partition_cmd(&model, strategy, weights.as_deref(), merge_max_weight, out.as_deref())
        }
        Command::Check { model } => check(&model),
        Command::Run { model, seed, max_steps, trace } => run_cmd(&model, seed, max_steps, trace.as_deref()),
        Command::Render { model, solved, partitions, strategy, out } => {
            render_cmd(&model, solved, partitions, strategy, out.as_deref())
        }
        Command::Metrics { model, strategy, weights } => metrics_cmd(&model, strategy, weights.as_deref()),
    }
}

fn analyze(model: &Path, dump: Option<&Path>, out: Option<&Path>) -> CliResult {
    let doc = load(model)?;
    match solve_lexmin(&doc.net)? {
        Outcome::Satisfiable(asg) => {
            println!("SATISFIABLE ({} atoms)", doc.net.atoms().len());
            print!("{}", asg.dump());
            if let Some(path) = dump {
                write(path, &asg.dump())?;
            }
            if let Some(path) = out {
                write(path, &serialize_annotated(&doc, &asg, None))?;
            }
            Ok(0)
        }
        Outcome::Contradiction(conflict) => {
            println!("CONTRADICTION ({} constraints in minimal core)", conflict.core.len());
            print!("{}", conflict.listing());
            if let Some(path) = out {
                write(path, &annotate_conflict(&doc, &conflict))?;
            }
            Ok(1)
        }
    }
}

fn partition_cmd(
    model: &Path,
    strategy: Strategy,
    weights: Option<&Path>,
    merge_max_weight: Option<u64>,
    out: Option<&Path>,
) -> CliResult {
    let doc = load(model)?;
    let weights = load_weights(weights)?;
    let Some(asg) = solve_or_report(&doc.net)? else { return Ok(1) };
    let bound = MergeBound { weights: merge_max_weight.map(|cap| (&weights, cap)) };
    let domains = partition_bounded(&doc.net, &asg, strategy, bound)?;
    for (id, members) in domains.iter() {
        let members: Vec<&str> = members.iter().map(String::as_str).collect();
        println!("{}: {}", domain_label(id), members.join(", "));
    }
    for entry in channel_policy(&doc.net, &asg, &domains)? {
        println!("{entry}");
    }
    if let Some(path) = out {
        write(path, &serialize_annotated(&doc, &asg, Some(&domains)))?;
    }
    Ok(0)
}

fn check(model: &Path) -> CliResult {
    let doc = load(model)?;
    let Some(asg) = solve_or_report(&doc.net)? else { return Ok(1) };
    let violations = check_assertions(&doc.assertions, &asg)?;
    if violations.is_empty() {
        println!("ok: {} assertions hold", doc.assertions.len());
        Ok(0)
    } else {
        for violation in &violations {
            println!("{violation}");
        }
        Ok(1)
    }
}

fn run_cmd(model: &Path, seed: u64, max_steps: u64, trace: Option<&Path>) -> CliResult {
    let doc = load(model)?;
    let outcome = run(&doc.net, &ExecOptions { seed, max_steps })?;
    if let Some(path) = trace {
        let mut text = outcome.trace.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        write(path, &text)?;
    }
    for mismatch in &outcome.mismatches {
        println!("{mismatch}");
    }
    if outcome.budget_exhausted {
        println!("budget exhausted after {} steps", outcome.steps);
    }
    if outcome.ok() {
        println!("ok: {} steps", outcome.steps);
        Ok(0)
    } else {
        Ok(1)
    }
}

fn render_cmd(
    model: &Path,
    solved: bool,
    partitions: bool,
    strategy: Strategy,
    out: Option<&Path>,
) -> CliResult {
    let doc = load(model)?;
    let asg = if solved || partitions {
        match solve_or_report(&doc.net)? {
            Some(asg) => Some(asg),
            None => return Ok(1),
        }
    } else {
        None
    };
    let domains = if partitions {
        let asg = asg.as_ref().expect("partitions implies solved");
        Some(partition_bounded(&doc.net, asg, strategy, MergeBound::default())?)
    } else {
        None
    };
    let dot = render_dot(&doc.net, &RenderOptions { assignment: asg.as_ref(), domains: domains.as_ref() })?;
    match out {
        Some(path) => write(path, &dot)?,
        None => print!("{dot}"),
    }
    Ok(0)
}

fn metrics_cmd(model: &Path, strategy: Strategy, weights: Option<&Path>) -> CliResult {
    let doc = load(model)?;
    let weights = load_weights(weights)?;
    let Some(asg) = solve_or_report(&doc.net)? else { return Ok(1) };
    let domains = partition_bounded(&doc.net, &asg, strategy, MergeBound::default())?;
    let split = compute_metrics(&doc.net, &asg, &domains, &weights)?;
    let mono = monolithic_metrics(&doc.net, &weights);
    print!("{}", split.kv_lines());
    println!();
    print!("{}", metrics_table(&split, &mono));
    Ok(0)
}
