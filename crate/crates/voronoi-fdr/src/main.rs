//! `voronoi-fdr`: combine p-vectors through Voronoi cell areas and test the
//! disjunction hypothesis at scale.

use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use voronoi_fdr::ordering::OrderingScheme;
use voronoi_fdr::simulate::{self, Method, StudyConfig};
use voronoi_fdr::{geometry, io as vio, periodicity, runtime};

#[derive(Parser)]
#[command(
    name = "voronoi-fdr",
    version,
    about = "Voronoi-area p-value combination for the disjunction hypothesis",
    long_about = "Each gene carries a vector of p-values, one per measured aspect. \
Under the disjunction null at least one component is null, so rejection claims \
that ALL component hypotheses are non-null. P-vectors are ranked by distance \
from the origin, their Voronoi cell areas accumulate into combined values, and \
BH, spacings-BH, or empirical-null left-tail FDR declares significance."
)]
struct Cli {
    /// Cap worker threads (overrides VORONOI_FDR_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Combine a p-vector CSV and decide rejections
    Analyze {
        /// Input CSV with header id,p1,p2[,p3]
        #[arg(long = "in")]
        input: PathBuf,
        /// Report destination
        #[arg(long)]
        out: PathBuf,
        /// P-vector dimension
        #[arg(long, default_value_t = 2)]
        dims: usize,
        /// Ordering scheme (summation recommended)
        #[arg(long, default_value = "summation")]
        ordering: OrderingScheme,
        /// Decision rule
        #[arg(long, default_value = "bh")]
        method: Method,
        /// Nominal FDR level for bh/spacings-bh
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Left-tail FDR cutoff for empirical-null
        #[arg(long = "fdr-cutoff", default_value_t = 0.05)]
        fdr_cutoff: f64,
        /// Mixture components J for empirical-null
        #[arg(long = "null-J", default_value_t = 2)]
        null_j: usize,
        /// Mixture penalty P for empirical-null
        #[arg(long = "null-P", default_value_t = 800.0)]
        null_p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturb exactly coincident points instead of failing
        #[arg(long = "jitter-duplicates")]
        jitter_duplicates: bool,
    },
    /// Run a seeded simulation study from a TOML config
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Plot-ready CSV destination
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump Voronoi cell polygons and areas for a p-vector CSV
    Voronoi {
        #[arg(long = "in")]
        input: PathBuf,
        /// Destination (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "jitter-duplicates")]
        jitter_duplicates: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fisher's exact G test per gene time course
    Gtest {
        /// Input CSV: id column then one column per time point
        #[arg(long = "in")]
        input: PathBuf,
        /// Destination (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render the summary of a saved per-gene report
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn open_out(path: &Option<PathBuf>) -> voronoi_fdr::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(command: Command) -> voronoi_fdr::Result<()> {
    match command {
        Command::Analyze {
            input,
            out,
            dims,
            ordering,
            method,
            alpha,
            fdr_cutoff,
            null_j,
            null_p,
            seed,
            jitter_duplicates,
        } => {
            let opts = vio::AnalyzeOptions {
                dims,
                scheme: ordering,
                method,
                alpha,
                fdr_cutoff,
                null_j,
                null_p,
                seed,
                jitter_duplicates,
            };
            let report = vio::analyze(&input, &opts)?;
            vio::write_report_path(&report, &out)?;
            eprintln!(
                "{} genes, {} rejections ({})",
                report.records.len(),
                report.decision.rejections,
                report.decision.rule
            );
            Ok(())
        }
        Command::Simulate { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = StudyConfig::from_toml(&text)?;
            let result = simulate::run_study(&cfg)?;
            let file = std::fs::File::create(&out)?;
            vio::write_study_csv(&result, std::io::BufWriter::new(file))?;
            eprintln!("{} rows -> {}", result.rows.len(), out.display());
            Ok(())
        }
        Command::Voronoi {
            input,
            out,
            jitter_duplicates,
            seed,
        } => {
            let ps = vio::read_pvectors2(&input)?;
            let tess = geometry::voronoi_tessellate_with(
                &ps,
                geometry::TessellationOptions {
                    jitter_duplicates,
                    jitter_seed: seed,
                },
            )?;
            vio::write_tessellation_csv(&ps, &tess, open_out(&out)?)
        }
        Command::Gtest { input, out } => {
            let series = vio::read_timecourses(&input)?;
            let stats = periodicity::fisher_g_batch(&series)?;
            vio::write_gtest_csv(&series, &stats, open_out(&out)?)
        }
        Command::Report { input } => {
            let report = vio::read_report(&input)?;
            print!("{}", vio::summarize_report(&report));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match runtime::install(cli.threads, || run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
