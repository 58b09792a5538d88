//! Subcommand implementations. Each returns the process exit status; payload
//! goes to `out`, messages about the tool itself to `err`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use svsp_core::editor::{Change, ChangeError, EditError, EditSession};
use svsp_core::query::{evaluate, parse_select, Query};
use svsp_core::scenario::{run_script, ScenarioError};
use svsp_core::{check_spec, format_spec, parse_spec, Diagnostic, Specification};

pub const SUCCESS: u8 = 0;
/// Check errors, failed script directives, rejected edits.
pub const FINDINGS: u8 = 1;
/// Bad arguments, syntax errors in any input.
pub const USAGE: u8 = 2;
pub const IO_FAILURE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "svsp",
    version,
    about = "Check, query, edit and simulate .svsp specifications"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a specification for consistency.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Exit 1 on warnings too.
        #[arg(long)]
        strict: bool,
    },
    /// Print the canonical form of a specification.
    Fmt {
        file: PathBuf,
        /// Rewrite the file in place instead of printing.
        #[arg(long)]
        write: bool,
    },
    /// Evaluate a query such as `class.states~GKOP & refs=line_width`.
    Query {
        file: PathBuf,
        query: String,
        /// Comma-separated projection; overrides any `select=` term.
        #[arg(long)]
        select: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run a scenario script.
    Run {
        file: PathBuf,
        script: PathBuf,
        /// Write the call trace as JSON.
        #[arg(long, value_name = "OUT")]
        trace: Option<PathBuf>,
    },
    /// Apply a JSON list of changes through check-gated proposals.
    Edit {
        file: PathBuf,
        #[arg(long, value_name = "CHANGES")]
        apply: PathBuf,
        /// Where to write the edited specification (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the JSON API (and the workbench) for a specification.
    Serve {
        file: PathBuf,
        #[arg(long, env = "SVSP_PORT", default_value_t = 7777)]
        port: u16,
        /// Do not serve workbench assets at `/`.
        #[arg(long)]
        no_ui: bool,
        /// Directory holding built workbench assets.
        #[arg(long, value_name = "DIR")]
        ui_dir: Option<PathBuf>,
    },
}

/// A failure that ends the command with a fixed exit status.
struct Exit(u8);

type Outcome = Result<u8, Exit>;

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Check {
            file,
            format,
            strict,
        } => check(&file, format, strict, out, err),
        Command::Fmt { file, write } => fmt(&file, write, out, err),
        Command::Query {
            file,
            query,
            select,
            format,
        } => run_query(&file, &query, select.as_deref(), format, out, err),
        Command::Run {
            file,
            script,
            trace,
        } => scenario(&file, &script, trace.as_deref(), out, err),
        Command::Edit {
            file,
            apply,
            out: dest,
        } => edit(&file, &apply, dest.as_deref(), out, err),
        Command::Serve {
            file,
            port,
            no_ui,
            ui_dir,
        } => serve(&file, port, !no_ui, ui_dir, err),
    };
    result.unwrap_or_else(|Exit(code)| code)
}

fn read(path: &Path, err: &mut dyn Write) -> Result<String, Exit> {
    std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "svsp: cannot read {}: {e}", path.display());
        Exit(IO_FAILURE)
    })
}

fn write_file(path: &Path, text: &str, err: &mut dyn Write) -> Result<(), Exit> {
    std::fs::write(path, text).map_err(|e| {
        let _ = writeln!(err, "svsp: cannot write {}: {e}", path.display());
        Exit(IO_FAILURE)
    })
}

fn print_diagnostics(diags: &[Diagnostic], w: &mut dyn Write) {
    for d in diags {
        let _ = writeln!(w, "{d}");
    }
}

/// Reads and parses; syntax errors are printed to `err` and exit 2.
fn load(path: &Path, err: &mut dyn Write) -> Result<Specification, Exit> {
    let text = read(path, err)?;
    parse_spec(&text).map_err(|diags| {
        print_diagnostics(&diags, err);
        Exit(USAGE)
    })
}

fn check(
    path: &Path,
    format: Format,
    strict: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let text = read(path, err)?;
    let report = match parse_spec(&text) {
        Ok(spec) => check_spec(&spec),
        Err(diags) => {
            match format {
                Format::Text => print_diagnostics(&diags, out),
                Format::Json => {
                    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&diags).unwrap());
                }
            }
            return Ok(USAGE);
        }
    };
    match format {
        Format::Text => {
            let _ = out.write_all(report.to_text().as_bytes());
        }
        Format::Json => {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&report.diagnostics).unwrap()
            );
        }
    }
    let failed = !report.consistent || (strict && report.warnings().next().is_some());
    Ok(if failed { FINDINGS } else { SUCCESS })
}

fn fmt(path: &Path, write: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let spec = load(path, err)?;
    let text = format_spec(&spec);
    if write {
        write_file(path, &text, err)?;
    } else {
        let _ = out.write_all(text.as_bytes());
    }
    Ok(SUCCESS)
}

fn run_query(
    path: &Path,
    text: &str,
    select: Option<&str>,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let spec = load(path, err)?;
    let parsed = Query::parse(text).and_then(|mut q| {
        if let Some(s) = select {
            q.select = parse_select(s)?;
            q.validate()?;
        }
        Ok(q)
    });
    let q = parsed.map_err(|e| {
        let _ = writeln!(err, "svsp: {e}");
        Exit(USAGE)
    })?;
    let table = evaluate(&spec, &q).map_err(|e| {
        let _ = writeln!(err, "svsp: {e}");
        Exit(USAGE)
    })?;
    match format {
        Format::Text => {
            let _ = out.write_all(table.to_text().as_bytes());
        }
        Format::Json => {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&table.to_json()).unwrap()
            );
        }
    }
    Ok(SUCCESS)
}

fn scenario(
    path: &Path,
    script_path: &Path,
    trace: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let spec = load(path, err)?;
    let script = read(script_path, err)?;
    let result = match run_script(&spec, &script) {
        Ok(r) => r,
        Err(ScenarioError::Script(diags)) => {
            print_diagnostics(&diags, err);
            return Ok(USAGE);
        }
        Err(ScenarioError::InconsistentSpec(report)) => {
            let _ = writeln!(
                err,
                "svsp: refusing to simulate an inconsistent specification"
            );
            let _ = err.write_all(report.to_text().as_bytes());
            return Ok(FINDINGS);
        }
    };
    let _ = out.write_all(result.to_text().as_bytes());
    if let Some(dest) = trace {
        let json = serde_json::to_string_pretty(&result.trace).unwrap();
        write_file(dest, &(json + "\n"), err)?;
    }
    Ok(if result.all_passed() {
        SUCCESS
    } else {
        FINDINGS
    })
}

/// A change file holds one change object or an array of them.
fn parse_changes(text: &str) -> Result<Vec<Result<Change, ChangeError>>, serde_json::Error> {
    let v: Value = serde_json::from_str(text)?;
    let items = match v {
        Value::Array(items) => items,
        other => vec![other],
    };
    Ok(items.iter().map(Change::from_json).collect())
}

fn edit(
    path: &Path,
    changes_path: &Path,
    dest: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let spec = load(path, err)?;
    let changes = parse_changes(&read(changes_path, err)?).map_err(|e| {
        let _ = writeln!(err, "svsp: {}: {e}", changes_path.display());
        Exit(USAGE)
    })?;
    let mut session = match EditSession::new(spec) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "svsp: {e}");
            if let EditError::InconsistentBase(report) = e {
                let _ = err.write_all(report.to_text().as_bytes());
            }
            return Ok(FINDINGS);
        }
    };
    for (n, change) in changes.into_iter().enumerate() {
        let change = match change {
            Ok(c) => c,
            Err(ChangeError::Syntax(diags)) => {
                let _ = writeln!(err, "svsp: change {}: declaration does not parse", n + 1);
                print_diagnostics(&diags, err);
                return Ok(USAGE);
            }
            Err(e) => {
                let _ = writeln!(err, "svsp: change {}: {e}", n + 1);
                return Ok(USAGE);
            }
        };
        let label = format!("{} {} {}", change.op(), change.kind(), change.target());
        let proposal = session.propose(change);
        let id = proposal.id.clone();
        let report = proposal.report.clone();
        match session.commit(&id) {
            Ok(_) => {
                let _ = writeln!(err, "{id} {label}: committed");
            }
            Err(e) => {
                let _ = writeln!(err, "{id} {label}: {e}");
                let _ = err.write_all(report.to_text().as_bytes());
                return Ok(FINDINGS);
            }
        }
    }
    let text = format_spec(session.spec());
    match dest {
        Some(p) => write_file(p, &text, err)?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(SUCCESS)
}

fn serve(
    path: &Path,
    port: u16,
    ui: bool,
    ui_dir: Option<PathBuf>,
    err: &mut dyn Write,
) -> Outcome {
    let spec = load(path, err)?;
    let state = crate::api::AppState::new(spec);
    if state.check_only() {
        let _ = writeln!(
            err,
            "svsp: specification has errors; serving in check-only mode"
        );
    }
    let options = crate::api::ServeOptions { ui, ui_dir };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| {
        let _ = writeln!(err, "svsp: cannot start runtime: {e}");
        Exit(IO_FAILURE)
    })?;
    let listener = runtime
        .block_on(tokio::net::TcpListener::bind(("0.0.0.0", port)))
        .map_err(|e| {
            let _ = writeln!(err, "svsp: cannot listen on port {port}: {e}");
            Exit(IO_FAILURE)
        })?;
    let _ = writeln!(err, "svsp: listening on http://0.0.0.0:{port}");
    let result = runtime.block_on(async move {
        axum::serve(listener, crate::api::router(state, options))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    result.map_err(|e| {
        let _ = writeln!(err, "svsp: {e}");
        Exit(IO_FAILURE)
    })?;
    Ok(SUCCESS)
}
