use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cpdp_core::corpus::summarize;
use cpdp_core::harness::{
    analyze_dpr, emit_boxplot_summary, paired_best_columns, read_best_csv, read_csv_columns,
    read_csv_groups, read_results_csv, run_plan, ExperimentConfig,
};
use cpdp_core::predictors::Method;
use cpdp_core::stats::{wilcoxon_signed_rank_with, WilcoxonMethod, WilcoxonOptions};
use cpdp_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "cpdp", version, about = "Cross-project defect prediction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load every configured dataset and print its summary.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full experiment and write the report directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Recorded in the config hash only.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        log_filter: bool,
    },
    /// Wilcoxon signed-rank test and Cliff's delta on paired columns.
    Compare {
        /// `best_per_target.csv` from a run.
        #[arg(long, conflicts_with = "csv")]
        results: Option<PathBuf>,
        #[arg(long, default_value = "ifs_our")]
        a: Method,
        #[arg(long, default_value = "ifs_min")]
        b: Method,
        /// Any CSV with two numeric columns.
        #[arg(long, requires_all = ["x", "y"])]
        csv: Option<PathBuf>,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long, value_enum, default_value_t = PValue::Auto)]
        method: PValue,
        #[arg(long)]
        no_continuity_correction: bool,
    },
    /// DPR table for a finished run.
    Dpr {
        #[arg(long)]
        config: PathBuf,
        /// `results.csv` from a run.
        #[arg(long)]
        results: PathBuf,
    },
    /// Box-plot numbers for grouped values of a CSV column.
    Box {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "group")]
        group: String,
        #[arg(long, default_value = "value")]
        value: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PValue {
    Auto,
    Exact,
    Asymptotic,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Ingest { config } => {
            let config = ExperimentConfig::load(config)?;
            println!("project\tfamily\tinstances\tdefects\tratio\tmetrics");
            for project in config.load_datasets()? {
                let s = summarize(&project);
                println!(
                    "{}\t{}\t{}\t{}\t{:.4}\t{}",
                    project.name(),
                    project.dataset_family(),
                    s.instance_count,
                    s.defect_count,
                    s.defect_ratio,
                    s.metric_count
                );
            }
            Ok(0)
        }
        Command::Run {
            config,
            out,
            workers,
            seed,
            log_filter,
        } => {
            let mut config = ExperimentConfig::load(config)?;
            if let Some(w) = workers {
                config.workers = w;
            }
            if seed.is_some() {
                config.seed = seed;
            }
            if log_filter {
                config.preprocess.log_filter = true;
            }
            if let Some(out) = out {
                config.output_dir = out;
            }
            config.validate()?;
            let bundle = run_plan(&config)?;
            bundle.write(&config.output_dir)?;
            let m = &bundle.manifest;
            println!(
                "planned {} executed {} skipped {} failed {} -> {}",
                m.planned_pairs,
                m.executed_pairs,
                m.skipped_pairs,
                m.failed_pairs,
                config.output_dir.display()
            );
            for c in &bundle.comparisons {
                println!(
                    "{} vs {}: n={} p={} delta={}",
                    c.method_a,
                    c.method_b,
                    c.n_targets,
                    fmt_opt(c.p_value),
                    fmt_opt(c.cliffs_delta)
                );
            }
            for f in &bundle.failures {
                eprintln!("failed {} {} -> {}: {}", f.method, f.source, f.target, f.reason);
            }
            Ok(if bundle.failures.is_empty() { 0 } else { EXIT_PARTIAL })
        }
        Command::Compare {
            results,
            a,
            b,
            csv,
            x,
            y,
            method,
            no_continuity_correction,
        } => {
            let (xs, ys) = match (results, csv) {
                (Some(path), None) => {
                    let best = read_best_csv(path)?;
                    let (_, xs, ys) = paired_best_columns(&best, a, b);
                    (xs, ys)
                }
                (None, Some(path)) => {
                    read_csv_columns(path, x.as_deref().unwrap_or(""), y.as_deref().unwrap_or(""))?
                }
                _ => return Err(Error::Config("pass either --results or --csv".into())),
            };
            let options = WilcoxonOptions {
                method: match method {
                    PValue::Auto => WilcoxonMethod::Auto,
                    PValue::Exact => WilcoxonMethod::Exact,
                    PValue::Asymptotic => WilcoxonMethod::Asymptotic,
                },
                continuity_correction: !no_continuity_correction,
            };
            let r = wilcoxon_signed_rank_with(&xs, &ys, &options)?;
            println!("n_pairs\t{}", r.n_pairs);
            println!("statistic\t{}", r.statistic);
            println!("p_value\t{:.6}", r.p_value);
            println!("cliffs_delta\t{:.6}", r.cliffs_delta);
            println!("method\t{}", r.method_note);
            Ok(0)
        }
        Command::Dpr { config, results } => {
            let config = ExperimentConfig::load(config)?;
            let summaries: BTreeMap<_, _> = config
                .load_datasets()?
                .iter()
                .map(|p| (p.name().to_string(), summarize(p)))
                .collect();
            let rows = analyze_dpr(&read_results_csv(results)?, &summaries)?;
            println!("target\tpure_source\tdpr\tpure_f\tmix_f\timprovement\tlow_dpr\tpearson_r");
            for r in rows {
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.target,
                    r.pure_source.as_deref().unwrap_or("-"),
                    fmt_opt(r.pure_dpr),
                    fmt_opt(r.pure_f_measure),
                    fmt_opt(r.mix_f_measure),
                    fmt_opt(r.improvement),
                    r.low_dpr,
                    fmt_opt(r.pearson_r)
                );
            }
            Ok(0)
        }
        Command::Box { csv, group, value } => {
            let groups = read_csv_groups(csv, &group, &value)?;
            println!("group\tcount\tmin\tq1\tmedian\tq3\tmax\toutliers");
            for s in emit_boxplot_summary(&groups)? {
                let outliers: Vec<String> = s.outliers.iter().map(|v| v.to_string()).collect();
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    s.group,
                    s.count,
                    s.min,
                    s.q1,
                    s.median,
                    s.q3,
                    s.max,
                    outliers.join(";")
                );
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
