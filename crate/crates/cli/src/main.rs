mod commands;
mod report;
mod run;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "rcm", version, about = "Random cluster model expansions and exact oracles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Describe the host graph, window and graph constants.
    Graph(RunArgs),
    /// Exact brute-force quantities on the window.
    Oracle(RunArgs),
    /// Truncated polymer expansion with tail bound.
    Expand(RunArgs),
    /// Convergence certificates and threshold values.
    Certify(RunArgs),
    /// Decay of connectivities with distance.
    Scan(RunArgs),
    /// Run the identity and bound suites.
    Verify(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    Sub,
    Sup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Bc {
    Free,
    Wired,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Inline template: zd:AxB[:mM], tree:K:DEPTH[:mM], or a JSON spec.
    #[arg(long, conflicts_with = "graph_file")]
    pub template: Option<String>,
    /// JSON template file.
    #[arg(long)]
    pub graph_file: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, default_value = "1")]
    pub q: String,
    #[arg(long, value_enum, default_value = "free")]
    pub bc: Bc,
    /// Comma-separated vertex names; defaults to the window center.
    #[arg(long = "X")]
    pub x: Option<String>,
    /// Truncation order.
    #[arg(long = "K", default_value_t = 6)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "sub")]
    pub regime: Regime,
    /// Exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest vertex set enumerated.
    #[arg(long)]
    pub cap_polymer: Option<usize>,
    /// Largest edge set (dual animal, fence) enumerated.
    #[arg(long)]
    pub cap_edges: Option<usize>,
    /// Largest window edge count for the brute-force oracle.
    #[arg(long)]
    pub cap_oracle: Option<usize>,
    /// Largest cluster passed to the Ursell function.
    #[arg(long)]
    pub cap_ursell: Option<usize>,
    /// Window margin for zd/tree templates.
    #[arg(long)]
    pub margin: Option<usize>,
    #[arg(long = "cutset-R")]
    pub cutset_r: Option<usize>,
    #[arg(long = "cutset-C")]
    pub cutset_c: Option<f64>,
    /// Largest distance (scan).
    #[arg(long, default_value_t = 4)]
    pub max_dist: usize,
    /// Self-avoiding walk lengths to count (graph).
    #[arg(long, default_value_t = 0)]
    pub saw: usize,
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("RCM_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| format!("RCM_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            return Err("RCM_THREADS must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("rcm: {msg}");
        return ExitCode::from(4);
    }
    let (name, args) = match &cli.cmd {
        Cmd::Graph(a) => ("graph", a),
        Cmd::Oracle(a) => ("oracle", a),
        Cmd::Expand(a) => ("expand", a),
        Cmd::Certify(a) => ("certify", a),
        Cmd::Scan(a) => ("scan", a),
        Cmd::Verify(a) => ("verify", a),
    };
    let result = run::Run::new(args).and_then(|r| match name {
        "graph" => commands::graph(&r),
        "oracle" => commands::oracle(&r),
        "expand" => commands::expand(&r),
        "certify" => commands::certify(&r),
        "scan" => commands::scan(&r),
        _ => verify::verify(&r),
    });
    let report = match result {
        Ok(rep) => rep,
        Err(e) => {
            eprintln!("rcm {name}: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let bytes = report.render(args.format);
    let written = match &args.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        eprintln!("rcm {name}: {msg}");
        return ExitCode::from(4);
    }
    match report.failure {
        Some(f) => {
            eprintln!("rcm {name}: {f}");
            ExitCode::from(3)
        }
        None => ExitCode::SUCCESS,
    }
}
