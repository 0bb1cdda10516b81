use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pushpull::graph::{is_strongly_connected, parse_rounds, GraphMetrics};
use pushpull::harness::{self, compare_methods, load_config, HarnessError, Setup};

#[derive(Parser)]
#[command(name = "pushpull", version, about = "Simulate and analyse AB/Push-Pull on time-varying digraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trace.csv, config.toml and report.txt
    Run { config: PathBuf },
    /// Run several configs on the same problem and print aligned residuals
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Write the combined CSV here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the stepsize bound terms and their minimum
    Bound { config: PathBuf },
    /// Print diameter, max edge utility and connectivity per round
    Metrics { graphs: PathBuf },
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(config: &Path) -> Result<ExitCode, HarnessError> {
    let cfg = load_config(config)?;
    let (result, files) = harness::run_experiment(&cfg, &base_dir(config))?;
    println!("alpha = {:e}", result.alpha);
    if let Some(rho) = result.rho_bound {
        println!("rho(M(alpha)) = {rho:e}");
    }
    if let Some(last) = result.records.last() {
        println!("k = {}  relative residual = {:e}", last.k, last.relative_residual);
    }
    println!("trace: {}", files.trace.display());
    match &result.report {
        Some(report) => {
            print!("{report}");
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("verification failed");
                Ok(ExitCode::from(2))
            }
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn bound(config: &Path) -> Result<ExitCode, HarnessError> {
    let cfg = load_config(config)?;
    let setup = Setup::build(&cfg, &base_dir(config))?;
    let (l, mu) = setup.problem.constants();
    let (u, b) = setup.bound(cfg.algorithm.sigma)?;
    println!("L = {l:e}  mu = {mu:e}  n = {}", setup.graphs.node_count());
    println!("c = {:.12}  tau = {:.12}  r = {:e}  varphi = {:e}  sigma = {:e}", u.c, u.tau, u.r, u.varphi, u.sigma);
    let names = ["(1-c)/(L sqrt(n) varphi)", "(1-tau)/(L r)", "n sigma mu (1-tau)(1-c)/eta", "2/(n(L+mu))"];
    for (name, t) in names.iter().zip(b.terms) {
        println!("{name:>30} = {t:e}");
    }
    println!("{:>30} = {:e}", "eta", b.eta);
    println!("{:>30} = {:e}", "alpha", b.alpha);
    Ok(ExitCode::SUCCESS)
}

fn metrics(path: &Path) -> Result<ExitCode, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    let graphs = parse_rounds(&text)?;
    println!("round,strongly_connected,diameter,max_edge_utility");
    for (k, g) in graphs.iter().enumerate() {
        if is_strongly_connected(g) {
            let m = GraphMetrics::compute(g)?;
            println!("{k},true,{},{}", m.diameter, m.max_edge_utility);
        } else {
            println!("{k},false,,");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config } => run(config),
        Command::Compare { configs, output } => (|| {
            let cfgs = configs.iter().map(|c| load_config(c)).collect::<Result<Vec<_>, _>>()?;
            let combined = compare_methods(&cfgs, &base_dir(&configs[0]))?;
            match output {
                Some(path) => harness::write_atomic(path, &combined.to_csv())?,
                None => print!("{}", combined.to_csv()),
            }
            Ok(ExitCode::SUCCESS)
        })(),
        Command::Bound { config } => bound(config),
        Command::Metrics { graphs } => metrics(graphs),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
