//! The `qos-select` command line tool.
//!
//! Exit codes: 0 success, 1 other failure (including an invalid DataBank),
//! 2 usage error, 3 unreadable or unparsable input, 4 no repository
//! reachable, 5 empty requirement set.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::api::{self, ApiState};
use crate::federation::{CachingProxy, DataBankDocument, DefaultProxy, FederationError};
use crate::model::{RepositoryDescriptor, RepositoryKind, Requirement, RequirementVector};
use crate::monitor::{self, Monitor};
use crate::normalize::NormalizerId;
use crate::pipeline::{rank_for_repositories, SelectionError, SelectionRequest, SelectionResult};
use crate::rank::RankerId;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_UNREACHABLE: i32 = 4;
pub const EXIT_EMPTY_REQUIREMENTS: i32 = 5;

pub const DEFAULT_MONITOR_ADDR: &str = "127.0.0.1:8081";

#[derive(Debug, Parser)]
#[command(
    name = "qos-select",
    version,
    about = "Rank services by QoS against non-functional requirements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank the services of a domain.
    Rank(RankArgs),
    /// DataBank document tools.
    Databank {
        #[command(subcommand)]
        command: DatabankCommand,
    },
    /// Probe endpoints and serve their dynamic QoS as a monitor repository.
    Monitor(MonitorArgs),
    /// Run the HTTP ranking service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Repositories in priority order. `http(s)://` endpoints are monitors,
    /// anything else a DataBank file; force a kind with `monitor=` or
    /// `databank=`.
    #[arg(long = "repos", required = true, num_args = 1..)]
    pub repos: Vec<String>,
    #[arg(long)]
    pub domain: String,
    /// JSON list of {attribute, target, maximize, mandatory}.
    #[arg(long)]
    pub requirements: PathBuf,
    /// 1-4 or max, sum, min-max, euclidean.
    #[arg(long)]
    pub normalizer: NormalizerId,
    /// 1-6 or cosine, jaccard, overlap, euclidean, dice, inverse-euclidean.
    #[arg(long)]
    pub ranker: RankerId,
    /// Print the result document instead of a table.
    #[arg(long, conflicts_with = "table")]
    pub json: bool,
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Subcommand)]
pub enum DatabankCommand {
    /// Check a DataBank file against the schema and its invariants.
    Validate { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// JSON list of {serviceId, probeUrl, domain, periodMs, timeoutMs, windowSize}.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = DEFAULT_MONITOR_ADDR)]
    pub serve: SocketAddr,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Bind address; falls back to $QOS_SELECT_ADDR, then 127.0.0.1:8080.
    #[arg(long)]
    pub addr: Option<SocketAddr>,
    /// JSON list of pre-registered repositories; falls back to
    /// $QOS_SELECT_REPOSITORIES.
    #[arg(long)]
    pub repositories: Option<PathBuf>,
    /// Seconds a repository answer may be reused.
    #[arg(long, default_value_t = 5)]
    pub cache_ttl_secs: u64,
}

/// Turns a `--repos` argument into a descriptor. The endpoint doubles as the
/// repository name.
pub fn parse_repository_arg(arg: &str) -> RepositoryDescriptor {
    let (kind, endpoint) = if let Some(rest) = arg.strip_prefix("monitor=") {
        (RepositoryKind::Monitor, rest)
    } else if let Some(rest) = arg.strip_prefix("databank=") {
        (RepositoryKind::DataBank, rest)
    } else if arg.starts_with("http://") || arg.starts_with("https://") {
        (RepositoryKind::Monitor, arg)
    } else {
        (RepositoryKind::DataBank, arg)
    };
    RepositoryDescriptor::new(endpoint, endpoint, kind)
}

/// Outcome of reading a requirement file.
#[derive(Debug)]
pub enum RequirementsError {
    Unreadable(anyhow::Error),
    Empty,
}

pub fn read_requirements(path: &Path) -> Result<RequirementVector, RequirementsError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(RequirementsError::Unreadable)?;
    let list: Vec<Requirement> = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse {}", path.display()))
        .map_err(RequirementsError::Unreadable)?;
    if list.is_empty() {
        return Err(RequirementsError::Empty);
    }
    RequirementVector::new(list)
        .with_context(|| format!("invalid requirements in {}", path.display()))
        .map_err(RequirementsError::Unreadable)
}

/// Human-readable result table.
pub fn format_table(result: &SelectionResult) -> String {
    let header = ["ID", "Name", "Score", "Ordering", "Mandatory", "Rank"];
    let rows: Vec<[String; 6]> = result
        .entries
        .iter()
        .map(|e| {
            [
                e.service_id.clone(),
                e.display_name.clone(),
                e.score.map_or_else(|| "-".into(), |s| format!("{s:.5}")),
                e.score_rank.map_or_else(|| "-".into(), |r| r.to_string()),
                format!("{}/{}", e.mandatory_fulfilled, e.mandatory_total),
                e.rank.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_owned()
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    for d in &result.diagnostics.services {
        if let Some(e) = &d.error {
            out.push_str(&format!("note: {} not scored: {e}\n", d.service_id));
        }
    }
    for r in &result.diagnostics.repositories {
        if let Some(e) = &r.error {
            out.push_str(&format!("note: repository skipped: {e}\n"));
        }
    }
    out
}

fn rank(args: RankArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let requirements = match read_requirements(&args.requirements) {
        Ok(r) => r,
        Err(RequirementsError::Empty) => {
            let _ = writeln!(err, "error: requirement set is empty");
            return EXIT_EMPTY_REQUIREMENTS;
        }
        Err(RequirementsError::Unreadable(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_PARSE;
        }
    };
    let request = SelectionRequest {
        repositories: args.repos.iter().map(|r| parse_repository_arg(r)).collect(),
        domain: args.domain,
        requirements,
        normalizer: args.normalizer,
        ranker: args.ranker,
        bypass_cache: false,
    };
    match rank_for_repositories(&request, &DefaultProxy::default()) {
        Ok(result) => {
            let text = if args.json {
                crate::render_json(&result)
            } else {
                format_table(&result)
            };
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let SelectionError::Federation(FederationError::NoSourcesAvailable { failures }) = &e
            {
                for f in failures {
                    let _ = writeln!(
                        err,
                        "  {}: {}",
                        f.endpoint,
                        f.error.as_deref().unwrap_or("failed")
                    );
                }
                EXIT_UNREACHABLE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn validate_databank(file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let doc = match DataBankDocument::load(file) {
        Ok(Ok(doc)) => doc,
        Ok(Err(e)) => {
            let _ = writeln!(err, "error: {}: {e}", file.display());
            return EXIT_PARSE;
        }
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", file.display());
            return EXIT_PARSE;
        }
    };
    let violations = doc.validate();
    if violations.is_empty() {
        let services: usize = doc.domains.values().map(Vec::len).sum();
        let _ = writeln!(
            out,
            "{}: valid ({} domains, {services} services)",
            file.display(),
            doc.domains.len()
        );
        EXIT_OK
    } else {
        for v in &violations {
            let _ = writeln!(out, "{}: {v}", file.display());
        }
        EXIT_FAILURE
    }
}

fn runtime() -> std::io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

fn run_monitor(args: MonitorArgs, err: &mut dyn Write) -> i32 {
    let targets = match monitor::load_targets(&args.config) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_PARSE;
        }
    };
    let monitor = match Monitor::new(targets) {
        Ok(m) => Arc::new(m),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_PARSE;
        }
    };
    let result: anyhow::Result<()> = runtime().map_err(Into::into).and_then(|rt| {
        rt.block_on(async {
            let listener = tokio::net::TcpListener::bind(args.serve).await?;
            tracing::info!(addr = %listener.local_addr()?, "monitor repository listening");
            let _probing = monitor.start();
            axum::serve(listener, monitor::router(Arc::clone(&monitor)))
                .with_graceful_shutdown(shutdown_signal())
                .await?;
            Ok(())
        })
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn run_server(args: ServeArgs, err: &mut dyn Write) -> i32 {
    let result: anyhow::Result<()> = (|| {
        let addr: SocketAddr = match args.addr {
            Some(a) => a,
            None => std::env::var(api::ADDR_ENV)
                .unwrap_or_else(|_| api::DEFAULT_ADDR.into())
                .parse()
                .context("invalid bind address")?,
        };
        let repositories = match args
            .repositories
            .or_else(|| std::env::var_os(api::REPOSITORIES_ENV).map(PathBuf::from))
        {
            Some(path) => api::load_repositories(&path)
                .with_context(|| format!("cannot load repositories from {}", path.display()))?,
            None => Vec::new(),
        };
        let proxy = CachingProxy::new(
            DefaultProxy::default(),
            Duration::from_secs(args.cache_ttl_secs),
        );
        let state = ApiState::new(repositories, Arc::new(proxy));
        runtime()?.block_on(async {
            let listener = tokio::net::TcpListener::bind(addr).await?;
            tracing::info!(addr = %listener.local_addr()?, "ranking service listening");
            axum::serve(listener, api::router(state))
                .with_graceful_shutdown(shutdown_signal())
                .await?;
            Ok(())
        })
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match cli.command {
        Command::Rank(args) => rank(args, out, err),
        Command::Databank {
            command: DatabankCommand::Validate { file },
        } => validate_databank(&file, out, err),
        Command::Monitor(args) => run_monitor(args, err),
        Command::Serve(args) => run_server(args, err),
    }
}
