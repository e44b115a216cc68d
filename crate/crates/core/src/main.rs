use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use citewin::report::{self, AnalysisOptions, NpcOptions};
use citewin::{BaselineRule, ScopeLevel, Year, YearRange};

#[derive(Parser)]
#[command(name = "citewin", version, about = "Field-normalized productivity rankings and citation-window sensitivity")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Analysis {
    /// Publication period, e.g. 2001-2003.
    #[arg(long, default_value = "2001-2003")]
    period: YearRange,
    /// Minimum share of publishing staff for an SDS to be retained.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// National baseline rule: aggregate or mean.
    #[arg(long, default_value = "aggregate")]
    baseline: BaselineRule,
}

impl Analysis {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            period: self.period,
            threshold: self.threshold,
            baseline: self.baseline,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the five input files and their cross references.
    Validate { dir: PathBuf },
    /// Rank universities for one observation year.
    Rankings {
        dir: PathBuf,
        #[command(flatten)]
        analysis: Analysis,
        /// Observation year to rank.
        #[arg(long, default_value_t = 2008)]
        obs_year: Year,
        /// Ranking scope: uda or sds.
        #[arg(long, default_value = "uda")]
        level: ScopeLevel,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Rank shifts, correlations and quartile moves against a benchmark year.
    Sensitivity {
        dir: PathBuf,
        #[command(flatten)]
        analysis: Analysis,
        /// Observation years, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2004,2005,2006,2007,2008")]
        years: Vec<Year>,
        /// Year every other year is compared against.
        #[arg(long, default_value_t = 2008)]
        benchmark: Year,
        /// Ranking scope: uda or sds.
        #[arg(long, default_value = "uda")]
        level: ScopeLevel,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Top-versus-rest permutation tests per UDA and their combination.
    Npc {
        dir: PathBuf,
        #[command(flatten)]
        analysis: Analysis,
        /// Observation years, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2004,2005,2006,2007,2008")]
        years: Vec<Year>,
        /// Year every other year is compared against.
        #[arg(long, default_value_t = 2008)]
        benchmark: Year,
        /// Universities scoring above this percentile of max rank shift form the top group.
        #[arg(long, default_value_t = 80.0)]
        top_percentile: f64,
        /// Monte Carlo iterations.
        #[arg(long, default_value_t = 10_000)]
        permutations: u64,
        /// RNG seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Write a synthetic corpus.
    Synth {
        /// JSON config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the five CSV files.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> Result<(), report::ReportError> {
    let out = match command {
        Command::Validate { dir } => {
            print!("{}", report::cmd_validate(&dir)?.render());
            return Ok(());
        }
        Command::Rankings {
            dir,
            analysis,
            obs_year,
            level,
            out,
        } => report::cmd_rankings(&dir, analysis.options(), obs_year, level, &out)?,
        Command::Sensitivity {
            dir,
            analysis,
            years,
            benchmark,
            level,
            out,
        } => report::cmd_sensitivity(&dir, analysis.options(), &years, benchmark, level, &out)?,
        Command::Npc {
            dir,
            analysis,
            years,
            benchmark,
            top_percentile,
            permutations,
            seed,
            out,
        } => report::cmd_npc(
            &dir,
            analysis.options(),
            &years,
            benchmark,
            NpcOptions {
                top_percentile,
                permutations,
                seed,
            },
            &out,
        )?,
        Command::Synth { config, seed, out } => report::cmd_synth(config.as_deref(), seed, &out)?,
    };
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", out.summary);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
