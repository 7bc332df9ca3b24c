use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diffspace_cli::{parse_program, run, FloatFormat};

#[derive(Parser)]
#[command(name = "diffspace", version, about = "Run differential-space scripts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a script and print one JSON record per command.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the records here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write floats as their IEEE-754 bit patterns.
        #[arg(long)]
        hex_floats: bool,
    },
    /// Parse a script without running it.
    Check { file: PathBuf },
}

fn read(file: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(file).map_err(|e| {
        eprintln!("{}: {e}", file.display());
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (file, src) = match &cli.cmd {
        Cmd::Run { file, .. } | Cmd::Check { file } => match read(file) {
            Ok(src) => (file, src),
            Err(code) => return code,
        },
    };
    let program = match parse_program(&src) {
        Ok(p) => p,
        Err(d) => {
            eprintln!("{}:{d}", file.display());
            return ExitCode::from(2);
        }
    };
    match cli.cmd {
        Cmd::Check { .. } => {
            println!("{}: {} statements", file.display(), program.stmts.len());
            ExitCode::SUCCESS
        }
        Cmd::Run { seed, json, hex_floats, .. } => {
            let report = run(&program, seed);
            let format = if hex_floats { FloatFormat::Hex } else { FloatFormat::Decimal };
            let text = report.to_json_lines(format);
            match json {
                Some(out) => {
                    if let Err(e) = std::fs::write(&out, &text) {
                        eprintln!("{}: {e}", out.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            if report.has_errors() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
