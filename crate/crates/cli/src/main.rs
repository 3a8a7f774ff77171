use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process;
use symflow::error::{CliError, ExitCode};
use symflow::run::{execute, output_dir};
use symflow::verify::{verify_forms, VerifyOptions};
use symflow::{output, probe, resolve};
use symflow_core::diagnostics::KernelProbe;
use symflow_core::Vec6;

#[derive(Parser)]
#[command(name = "symflow", version, about = "Mean curvature flow of surfaces in ℝ⁴ and S²×S²")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow described by a JSON configuration.
    Run {
        config: PathBuf,
        /// Output directory (the SYMFLOW_OUT_DIR variable takes precedence).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the 2-form algebra against a brute-force Grassmannian search.
    VerifyForms {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        batch: usize,
        /// Corrupt ω″ to confirm that the checks can fail.
        #[arg(long)]
        inject_sign_flip: bool,
    },
    /// Gaussian densities of a snapshot file for one kernel.
    Probe {
        snapshots: PathBuf,
        /// Kernel centre, comma separated (N coordinates).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Vec<f64>,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        cutoff: Option<f64>,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run_config(path: PathBuf, out: Option<PathBuf>) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let (config, raw) = resolve(&text)?;
    let dir = match (std::env::var_os("SYMFLOW_OUT_DIR"), out) {
        (None, Some(o)) => o,
        _ => output_dir(&config),
    };
    let sim = execute(&config, &raw, &dir)?;
    for w in &sim.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "stop: {} after {} steps at t = {}",
        sim.outcome.stop.name(),
        sim.outcome.records.len(),
        sim.outcome.final_state.t
    );
    for c in &sim.criteria {
        println!("{} {}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    println!("outputs in {}", dir.display());
    Ok(sim.exit)
}

fn verify(seed: u64, batch: usize, inject_sign_flip: bool) -> ExitCode {
    if batch == 0 {
        eprintln!("warning: empty batch, nothing was checked");
    }
    let report = verify_forms(&VerifyOptions { seed, batch, inject_sign_flip });
    println!(
        "{} cases: comass {:e}, eigen {:e}, adapted {:e}, hodge {:e}",
        report.cases, report.comass_error, report.eigen_error, report.adapted_error, report.hodge_error
    );
    for f in report.failures.iter().take(20) {
        println!("FAIL case {} {}: {}", f.case, f.property, f.detail);
    }
    if report.passed() {
        println!("all checks passed");
        ExitCode::Success
    } else {
        println!("{} failures", report.failures.len());
        ExitCode::CriteriaFailed
    }
}

fn probe_cmd(
    path: PathBuf,
    y0: Vec<f64>,
    t0: f64,
    cutoff: Option<f64>,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    if y0.len() != 4 && y0.len() != 6 {
        return Err(symflow::SchemaError::new("--y0", format!("expected 4 or 6 coordinates, got {}", y0.len())).into());
    }
    let probe = KernelProbe::new(Vec6::from_slice(&y0), t0, cutoff)
        .map_err(|e| symflow::SchemaError::new("--t0", e.to_string()))?;
    let rows = probe::probe_file(&path, &probe)?;
    match out {
        Some(o) => output::write_probe_csv(&o, &rows)?,
        None => {
            println!("t,density,windowed_density,companion_integral");
            for r in rows {
                println!("{},{},{},{}", r.t, r.density, r.windowed_density, r.companion_integral);
            }
        }
    }
    Ok(ExitCode::Success)
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run_config(config, out),
        Command::VerifyForms { seed, batch, inject_sign_flip } => Ok(verify(seed, batch, inject_sign_flip)),
        Command::Probe { snapshots, y0, t0, cutoff, out } => probe_cmd(snapshots, y0, t0, cutoff, out),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    process::exit(code as i32);
}
