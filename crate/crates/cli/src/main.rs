use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use popnet::export::{stats_from_dir, stats_text};
use popnet::pipeline::{self, output_dir, validate_plan, Overrides};
use popnet::plan::GenerationPlan;

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Generate attributed multiplex social networks from a generation plan.
#[derive(Parser)]
#[command(name = "popnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the population, apply the plan's rules and export the result.
    Generate {
        plan: PathBuf,
        /// Override the plan's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the plan's population size.
        #[arg(long)]
        population: Option<usize>,
        /// Output directory (default: the plan's `output`, else `out` beside the plan).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Recompute statistics from files already exported to the output directory.
        #[arg(long)]
        stats_only: bool,
    },
    /// Check a plan and its networks without generating.
    Validate { plan: PathBuf },
    /// Print network statistics of an export directory.
    Stats { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Generate {
            plan,
            seed,
            population,
            out,
            stats_only,
        } => {
            let overrides = Overrides { seed, population, out };
            if stats_only {
                let dir = match GenerationPlan::load(&plan) {
                    Ok(p) => output_dir(&plan, &p, &overrides),
                    Err(e) => {
                        eprintln!("error: plan: {e}");
                        return ExitCode::from(EXIT_INVALID);
                    }
                };
                return print_stats(&dir);
            }
            generate(&plan, &overrides)
        }
        Command::Validate { plan } => {
            let check = validate_plan(&plan);
            for w in &check.warnings {
                eprintln!("warning: {w}");
            }
            for e in &check.errors {
                eprintln!("error: {e}");
            }
            if check.errors.is_empty() {
                println!("{}: ok ({} warnings)", plan.display(), check.warnings.len());
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INVALID)
            }
        }
        Command::Stats { dir } => print_stats(&dir),
    }
}

fn generate(plan: &std::path::Path, overrides: &Overrides) -> ExitCode {
    let mut index = 0;
    let mut progress = |r: &popnet::matching::RuleReport| {
        index += 1;
        eprintln!(
            "rule {index} {} {}: {} links, {} orphans{}",
            r.kind,
            r.link_type,
            r.links_created,
            r.orphans,
            if r.vacuous { " (vacuous)" } else { "" }
        );
    };
    match pipeline::run(plan, overrides, &mut progress) {
        Ok((generation, dir)) => {
            print!("{}", generation.report.to_text());
            eprintln!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() { EXIT_INVALID } else { EXIT_RUNTIME })
        }
    }
}

fn print_stats(dir: &std::path::Path) -> ExitCode {
    match stats_from_dir(dir) {
        Ok(stats) => {
            print!("{}", stats_text(&stats));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
