mod cmd_evaluate;
mod cmd_kitti;
mod cmd_merge;
mod cmd_relabel;
mod cmd_saliency;
mod cmd_split;
mod util;

use std::io::Write;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::{json, Map, Value};

use util::Failure;

/// Saliency generation, fusion, open-world relabeling, task splits and
/// evaluation for object-detection datasets.
#[derive(Debug, Parser)]
#[command(name = "owkit", version, arg_required_else_help = true)]
struct Cli {
    /// Worker threads for per-image work (0 uses all cores). Outputs do not
    /// depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Print a JSON description of every command and flag, then exit.
    #[arg(long)]
    help_json: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute spectral-residual saliency maps.
    Saliency(cmd_saliency::SaliencyArgs),
    /// Fuse images with their saliency maps.
    Merge(cmd_merge::MergeArgs),
    /// Add unknown-class annotations from proposals.
    Relabel(cmd_relabel::RelabelArgs),
    /// Build close-set, open-set or open-world views of a manifest.
    Split(cmd_split::SplitArgs),
    /// Score detections against a manifest.
    Evaluate(cmd_evaluate::EvaluateArgs),
    /// Convert KITTI label files into a manifest.
    ImportKitti(cmd_kitti::ImportKittiArgs),
}

fn describe_args(cmd: &clap::Command) -> Value {
    let mut flags = Map::new();
    for a in cmd.get_arguments() {
        let Some(long) = a.get_long() else { continue };
        if long == "help" || long == "version" {
            continue;
        }
        let takes_value = a.get_action().takes_values();
        let mut d = Map::new();
        d.insert("help".into(), json!(a.get_help().map(|h| h.to_string())));
        d.insert("type".into(), json!(if takes_value { "value" } else { "switch" }));
        d.insert("required".into(), json!(a.is_required_set()));
        d.insert("global".into(), json!(a.is_global_set()));
        let defaults: Vec<String> = a.get_default_values().iter().map(|v| v.to_string_lossy().into_owned()).collect();
        if !defaults.is_empty() {
            d.insert("default".into(), json!(defaults.join(",")));
        }
        let choices: Vec<String> = a.get_possible_values().iter().map(|v| v.get_name().to_string()).collect();
        if takes_value && !choices.is_empty() {
            d.insert("choices".into(), json!(choices));
        }
        if a.get_num_args().is_some_and(|n| n.max_values() > 1) {
            d.insert("multiple".into(), json!(true));
        }
        flags.insert(format!("--{long}"), Value::Object(d));
    }
    Value::Object(flags)
}

fn help_json() -> Value {
    let mut cmd = Cli::command();
    cmd.build();
    let subcommands: Map<String, Value> = cmd
        .get_subcommands()
        .filter(|s| s.get_name() != "help")
        .map(|s| {
            let about = s.get_about().map(|h| h.to_string());
            (s.get_name().to_string(), json!({ "about": about, "flags": describe_args(s) }))
        })
        .collect();
    json!({
        "name": cmd.get_name(),
        "version": env!("CARGO_PKG_VERSION"),
        "exit_codes": { "0": "success", "1": "internal error", "2": "invalid input or per-item failures" },
        "flags": describe_args(&cmd),
        "subcommands": subcommands,
    })
}

fn dispatch(command: &Command) -> util::CmdResult {
    match command {
        Command::Saliency(a) => cmd_saliency::run(a),
        Command::Merge(a) => cmd_merge::run(a),
        Command::Relabel(a) => cmd_relabel::run(a),
        Command::Split(a) => cmd_split::run(a),
        Command::Evaluate(a) => cmd_evaluate::run(a),
        Command::ImportKitti(a) => cmd_kitti::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.help_json {
        let text = serde_json::to_string_pretty(&help_json()).expect("static schema");
        let _ = writeln!(std::io::stdout(), "{text}");
        return ExitCode::SUCCESS;
    }
    let Some(command) = &cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(e) | Failure::Internal(e) => eprintln!("error: {e:#}"),
                Failure::Items(items) => eprintln!("error: {} item(s) failed", items.len()),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
