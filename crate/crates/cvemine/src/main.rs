//! `cvemine` command-line interface.
//!
//! Subcommands: `collect` (run the mining pipeline), `report` (emit
//! analytics CSVs), `export-dump` (deterministic SQL dump), `query` (run
//! SQL against the database, CSV to stdout). Flags mirror the config-file
//! keys; precedence is CLI > environment > file > defaults.
//!
//! Exit codes: 0 on full success, 2 when a collect run had to skip
//! repositories, 1 on fatal errors.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use cvemine::analytics::RankBy;
use cvemine::config::{self, Config};
use cvemine::pipeline::{self, ReportSelection};

#[derive(Parser)]
#[command(
    name = "cvemine",
    version,
    about = "Mine CVE records whose fixes reference open-source commits into a relational dataset"
)]
struct Cli {
    /// INI configuration file (keys: database_path, sample_limit, …)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// SQLite database path
    #[arg(long, global = true, value_name = "PATH")]
    database: Option<PathBuf>,

    /// Stop after persisting this many commits (0 = unlimited)
    #[arg(long, global = true, value_name = "N")]
    sample_limit: Option<u64>,

    /// Cache directory for feeds and API responses
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,

    /// Working directory for repository clones
    #[arg(long, global = true, value_name = "DIR")]
    workdir: Option<PathBuf>,

    /// Number of repository workers
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Feed years: a single year (2020) or an inclusive range (2018-2021)
    #[arg(long, global = true, value_name = "RANGE")]
    years: Option<String>,

    /// Never touch the network (cache and mirrors only)
    #[arg(long, global = true)]
    offline: bool,

    /// Local repository mirrors laid out as <host>/<owner>/<repo>
    #[arg(long, global = true, value_name = "DIR")]
    mirror_dir: Option<PathBuf>,

    /// Keep cloned repositories after extraction
    #[arg(long, global = true)]
    keep_clones: bool,

    /// GitHub username for authenticated API access
    #[arg(long, global = true, value_name = "NAME")]
    github_username: Option<String>,

    /// GitHub token for authenticated API access
    #[arg(long, global = true, value_name = "TOKEN")]
    github_token: Option<String>,

    /// CWE catalog snapshot CSV (defaults to the built-in snapshot)
    #[arg(long, global = true, value_name = "FILE")]
    cwe_csv: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full collection pipeline into the database
    Collect,
    /// Emit analytics CSVs from a collected database
    Report {
        /// Which CSVs to write: summary, top-projects, cwe-distribution,
        /// days-to-fix, aggregates, or all
        #[arg(long, default_value = "all")]
        selection: String,
        /// Directory the CSV files are written into
        #[arg(long, default_value = ".", value_name = "DIR")]
        out_dir: PathBuf,
        /// Row limit for ranked outputs
        #[arg(long, default_value_t = 10, value_name = "N")]
        top: usize,
        /// Ranking key for top-projects: cves, commits, files, or methods
        #[arg(long, default_value = "cves")]
        rank_by: String,
    },
    /// Write a deterministic SQL dump of the database (.gz compresses)
    ExportDump {
        /// Output file
        #[arg(long, default_value = "cvemine-dump.sql", value_name = "FILE")]
        output: PathBuf,
    },
    /// Run a read query against the database, CSV on stdout
    Query {
        /// SQL text
        sql: String,
    },
}

fn build_config(cli: &Cli) -> Result<Config, String> {
    let mut config = Config::load(cli.config.as_deref()).map_err(|e| e.to_string())?;
    if let Some(value) = &cli.database {
        config.database_path = value.clone();
    }
    if let Some(value) = cli.sample_limit {
        config.sample_limit = value;
    }
    if let Some(value) = &cli.cache_dir {
        config.cache_dir = value.clone();
    }
    if let Some(value) = &cli.workdir {
        config.workdir = value.clone();
    }
    if let Some(value) = cli.workers {
        if value == 0 {
            return Err("--workers must be at least 1".to_string());
        }
        config.worker_count = value;
    }
    if let Some(value) = &cli.years {
        config.years = config::parse_years(value).map_err(|e| e.to_string())?;
    }
    if cli.offline {
        config.offline = true;
    }
    if let Some(value) = &cli.mirror_dir {
        config.mirror_dir = Some(value.clone());
    }
    if cli.keep_clones {
        config.keep_clones = true;
    }
    if let Some(value) = &cli.github_username {
        config.github_username = Some(value.clone());
    }
    if let Some(value) = &cli.github_token {
        config.github_token = Some(value.clone());
    }
    if let Some(value) = &cli.cwe_csv {
        config.cwe_csv = Some(value.clone());
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<i32, String> {
    let config = build_config(cli)?;
    match &cli.command {
        Command::Collect => {
            let report = pipeline::run_collect(&config).map_err(|e| e.to_string())?;
            println!("{report}");
            Ok(report.exit_code())
        }
        Command::Report {
            selection,
            out_dir,
            top,
            rank_by,
        } => {
            let selection = ReportSelection::parse(selection).ok_or_else(|| {
                format!(
                    "unknown selection {selection:?}; expected one of: {}",
                    ReportSelection::VALUES
                )
            })?;
            let rank_by = RankBy::parse(rank_by).ok_or_else(|| {
                format!("unknown rank key {rank_by:?}; expected cves, commits, files, or methods")
            })?;
            let written = pipeline::run_report(&config, selection, out_dir, rank_by, *top)
                .map_err(|e| e.to_string())?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::ExportDump { output } => {
            let db = pipeline::open_existing(&config).map_err(|e| e.to_string())?;
            db.export_dump(output).map_err(|e| e.to_string())?;
            println!("{}", output.display());
            Ok(0)
        }
        Command::Query { sql } => {
            let db = pipeline::open_existing(&config).map_err(|e| e.to_string())?;
            let (headers, rows) = db.run_query(sql).map_err(|e| e.to_string())?;
            let mut writer = csv::Writer::from_writer(std::io::stdout());
            writer.write_record(&headers).map_err(|e| e.to_string())?;
            for row in rows {
                writer.write_record(&row).map_err(|e| e.to_string())?;
            }
            writer.flush().map_err(|e| e.to_string())?;
            Ok(0)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    };
    std::process::exit(code);
}
