use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qstiefel_cli::commands::{self, Outcome, Source};
use qstiefel_cli::config::Overrides;
use qstiefel_cli::{bundle, exit, report, CliError};

#[derive(Parser)]
#[command(name = "qstiefel", version, about = "Build, check and classify truncated representations of quantum Stiefel manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the generators for (n, m, a, t) and write an operator bundle to --out.
    Build(Common),
    /// Check every relation family on a bundle or a freshly built representation.
    Check(WithBundle),
    /// Recover (a, t) and the rank/angle tower.
    Classify(WithBundle),
    /// Enumerate all a for (n, m), build each at t = 1 and check the relations.
    Atlas(Common),
}

#[derive(Args)]
struct Common {
    /// Config file: flat key = value lines or a JSON object.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path: the bundle for `build`, the JSON report otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Fock cutoff D.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Window margin.
    #[arg(long)]
    margin: Option<usize>,
}

#[derive(Args)]
struct WithBundle {
    #[command(flatten)]
    common: Common,
    /// Operator bundle to read instead of building from the config.
    #[arg(long)]
    bundle: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            m: self.m,
            q: self.q,
            cutoff: self.cutoff,
            margin: self.margin,
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write report: {e}"))),
    }
}

fn input(args: &WithBundle) -> Result<(qstiefel_cli::config::RunConfig, qstiefel_core::stiefel::StiefelGenerators, Source), CliError> {
    let raw = commands::read_config(args.common.config.as_deref())?;
    let over = args.common.overrides();
    match &args.bundle {
        Some(path) => {
            let (g, info) = commands::read_bundle(path)?;
            let cfg = commands::resolve_for_bundle(raw, &over, &info)?;
            Ok((cfg, g, Source::Bundle(info)))
        }
        None => {
            let cfg = raw.resolve(&over)?;
            let g = commands::generators(&cfg)?;
            Ok((cfg, g, Source::Built))
        }
    }
}

/// Runs the command; the second value is where the report goes.
fn run(cli: &Cli) -> (Result<Outcome, CliError>, &'static str, Option<PathBuf>) {
    match &cli.command {
        Command::Build(c) => {
            let result = (|| {
                let out = c
                    .out
                    .as_deref()
                    .ok_or_else(|| CliError::Config("build needs --out <bundle path>".into()))?;
                let cfg = commands::read_config(c.config.as_deref())?.resolve(&c.overrides())?;
                let (outcome, g) = commands::build(&cfg)?;
                let mut buf = Vec::new();
                bundle::write(&g, bundle::Encoding::choose(&g), &mut buf)
                    .map_err(|e| CliError::Io(format!("cannot encode bundle: {e}")))?;
                write_file(out, &buf)?;
                Ok(outcome)
            })();
            (result, "build", None)
        }
        Command::Check(b) => {
            let result = input(b).and_then(|(cfg, g, src)| commands::check(&cfg, &g, &src));
            (result, "check", b.common.out.clone())
        }
        Command::Classify(b) => {
            let result = input(b).and_then(|(cfg, g, src)| commands::classify_cmd(&cfg, &g, &src));
            (result, "classify", b.common.out.clone())
        }
        Command::Atlas(c) => {
            let result = commands::read_config(c.config.as_deref())
                .and_then(|raw| raw.resolve(&c.overrides()))
                .and_then(|cfg| commands::atlas(&cfg));
            (result, "atlas", c.out.clone())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, name, out) = run(&cli);
    let (text, code) = match result {
        Ok(o) => (report::render(o.report), if o.pass { exit::PASS } else { exit::FAIL }),
        Err(e) => {
            eprintln!("qstiefel {name}: {e}");
            let mut err = json!({"kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code()});
            if let CliError::Truncation { suggested, .. } = &e {
                err["suggested_cutoff"] = json!(suggested);
            }
            let doc = json!({"command": name, "error": err, "verdict": "error"});
            (report::render(doc), e.exit_code())
        }
    };
    if let Err(e) = emit(&text, out.as_deref()) {
        eprintln!("qstiefel {name}: {e}");
        return ExitCode::from(e.exit_code());
    }
    ExitCode::from(code)
}
