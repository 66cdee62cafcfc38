use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lstaq_cli::{bench, load, oracle_listing, translate_file, Failure, Family, TranslateOptions, EXIT_INTERNAL};
use lstaq_core::oracle::{Valuation, DEFAULT_CAP};
use lstaq_core::parser::{render_file, valuation_from_bindings};

#[derive(Parser)]
#[command(name = "lstaq", version, about = "Translate quantum-state set specifications into tree automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate every assertion of each file into an automaton.
    Translate {
        inputs: Vec<PathBuf>,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
        /// Print the boundary-aligned form.
        #[arg(long)]
        dump_aligned: bool,
        /// Print the slot dependency graph and qubit order.
        #[arg(long)]
        order_report: bool,
        /// Print the per-qubit slices with their valuation amplitudes.
        #[arg(long)]
        dump_slices: bool,
        /// Print the measured size parameters.
        #[arg(long)]
        stats: bool,
        /// Compare each automaton against brute-force enumeration.
        #[arg(long)]
        check_oracle: bool,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        /// `name=value` for a complex variable; repeatable.
        #[arg(long = "theta")]
        theta: Vec<String>,
    },
    /// Print the set of states each assertion denotes.
    Oracle {
        input: PathBuf,
        #[arg(long = "theta")]
        theta: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Translate a benchmark family at the given total qubit counts.
    Bench {
        family: String,
        /// Comma-separated total qubit counts.
        qubits: String,
    },
    /// Pretty-print a specification file.
    Fmt { input: PathBuf },
}

fn valuation(items: &[String]) -> Result<Valuation, Failure> {
    valuation_from_bindings(items).map_err(|e| Failure::Parse("--theta".into(), e))
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Translate {
            inputs,
            out,
            dump_aligned,
            order_report,
            dump_slices,
            stats,
            check_oracle,
            cap,
            theta,
        } => {
            if inputs.is_empty() {
                return Err(Failure::Usage("translate needs at least one input file".into()));
            }
            let theta = valuation(&theta)?;
            let opts = TranslateOptions {
                out_dir: out,
                dump_aligned,
                order_report,
                dump_slices,
                stats,
                check_oracle,
                cap,
                thetas: if theta.is_empty() { Vec::new() } else { vec![theta] },
            };
            let mut s = String::new();
            for p in &inputs {
                s.push_str(&translate_file(p, &opts)?);
            }
            Ok(s)
        }
        Command::Oracle { input, theta, cap } => oracle_listing(&load(&input)?, &valuation(&theta)?, cap),
        Command::Bench { family, qubits } => {
            let f = Family::parse(&family).ok_or_else(|| Failure::Usage(format!("unknown family {family}")))?;
            let mut s = format!(
                "{:<12} {:<10} {:>6} {:>10} {:>10} {:>10}\n",
                "family", "case", "qubits", "pre", "post", "trans_ms"
            );
            for q in qubits.split(',').filter(|x| !x.trim().is_empty()) {
                let q: usize = q.trim().parse().map_err(|_| Failure::Usage(format!("bad qubit count {q}")))?;
                for r in bench(f, q)? {
                    s.push_str(&format!(
                        "{:<12} {:<10} {:>6} {:>10} {:>10} {:>10.3}\n",
                        r.family.to_string(),
                        r.label,
                        r.qubits,
                        r.pre_size,
                        r.post_size,
                        r.translate.as_secs_f64() * 1e3
                    ));
                }
            }
            Ok(s)
        }
        Command::Fmt { input } => Ok(render_file(&load(&input)?)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            let code = f.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(EXIT_INTERNAL as u8))
        }
    }
}
