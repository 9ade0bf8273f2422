use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use striplab::commands::{self, Claim, MeshArgs, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "striplab", version, about = "Analyze developable Möbius strips and their singularities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a strip, census its singular points and check the counting claims
    Analyze {
        /// Built-in example name or definition file
        target: String,
    },
    /// Sample the singular-set quantities over one period as CSV
    Series {
        target: String,
        /// Output file (stdout if omitted)
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Write a quad mesh of the strip as OBJ
    Mesh {
        target: String,
        #[arg(long, default_value_t = 200)]
        s_steps: usize,
        #[arg(long, default_value_t = 20)]
        u_steps: usize,
        /// Ruling range; defaults to the strip's half-width on both sides
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
        u_range: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
        /// Stretch rulings to reach past the singular curve
        #[arg(long)]
        adaptive: bool,
    },
    /// Check one counting claim and print a one-line verdict
    Verify {
        target: String,
        #[arg(long, value_enum)]
        claim: ClaimArg,
    },
    /// List the built-in examples
    Examples,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClaimArg {
    Proposition,
    Theorem,
}

fn threads() -> Result<(), String> {
    let Ok(v) = std::env::var("STRIPLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("STRIPLAB_THREADS must be a non-negative integer, got `{v}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    if let Err(e) = threads() {
        let _ = writeln!(err, "error: {e}");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    let code = match cli.command {
        Command::Analyze { target } => commands::cmd_analyze(&target, &mut out, &mut err),
        Command::Series { target, csv, samples } => {
            commands::cmd_series(&target, samples, csv.as_deref(), &mut out, &mut err)
        }
        Command::Mesh {
            target,
            s_steps,
            u_steps,
            u_range,
            out: path,
            adaptive,
        } => {
            let args = MeshArgs {
                s_steps,
                u_steps,
                u_range: u_range.map(|v| (v[0], v[1])),
                out: path,
                adaptive,
            };
            commands::cmd_mesh(&target, &args, &mut out, &mut err)
        }
        Command::Verify { target, claim } => {
            let claim = match claim {
                ClaimArg::Proposition => Claim::Proposition,
                ClaimArg::Theorem => Claim::Theorem,
            };
            commands::cmd_verify(&target, claim, &mut out, &mut err)
        }
        Command::Examples => commands::cmd_examples(&mut out),
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
