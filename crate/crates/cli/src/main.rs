use bose_cert::config::RunConfig;
use bose_cert::report::{emit_report, Format, SuiteReport};
use bose_cert::suite::{run_all, Suite};
use bose_cert::{Error, Result};
use clap::Parser;
use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Numerical certification suites for dilute Bose gas lower bounds.
#[derive(Debug, Parser)]
#[command(name = "bose-cert", version)]
struct Cli {
    /// scatter, localize, kinetic-cert, bogoliubov, potsplit-check, ed or all
    suite: String,
    /// TOML run configuration.
    #[arg(long, env = "BOSE_CERT_CONFIG")]
    config: PathBuf,
    /// Run the suites of `all` concurrently.
    #[arg(long)]
    parallel: bool,
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: &Cli) -> Result<bool> {
    let suite: Suite = cli.suite.parse()?;
    let format: Format = cli.format.parse()?;
    let cfg = RunConfig::load(&cli.config)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let reports = if suite == Suite::All {
        let parts = run_all(&cfg, cli.parallel)?;
        let mut v = vec![SuiteReport::combine("all", cfg.seed, &parts)];
        v.extend(parts);
        v
    } else {
        vec![bose_cert::suite::run_suite(suite, &cfg, cli.parallel)?]
    };
    let head = &reports[0];
    for r in &head.records {
        println!("{} {} residual={:.3e} tol={:.1e}", if r.pass { "PASS" } else { "FAIL" }, r.check_id, r.residual, r.tol);
    }
    for rep in &reports {
        emit_report(rep, format, &out)?;
        println!("{}: {} ({:.2} s)", rep.suite, if rep.pass { "pass" } else { "FAIL" }, rep.meta.wall_time_s);
    }
    Ok(reports[0].pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    match panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(true)) => ExitCode::SUCCESS,
        Ok(Ok(false)) => ExitCode::from(EXIT_FAIL),
        Ok(Err(e @ Error::Config(_))) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INTERNAL)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
