use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vlcsync::codes::mdl;
use vlcsync::combined::choose_parameters;
use vlcsync::harness::{
    fer_report, run_cost_comparison, run_criteria_table, run_entropy_convergence, Cell,
    ExperimentConfig, Format, Report,
};
use vlcsync::trellis::StateModel;
use vlcsync::Catalog;

#[derive(Parser)]
#[command(name = "vlcsync", version, about = "Resynchronization analysis and soft decoding of variable-length codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output format.
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic criteria (P(dS=0), H(dS), d_eta, MEPL, VEPL) for one or more codes.
    Analyze {
        /// Code identifier; repeat for several. Defaults to every bundled code.
        #[arg(long = "code")]
        codes: Vec<String>,
        #[arg(long, default_value_t = 100)]
        ls: usize,
        #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
        ebn0: f64,
        #[arg(long, default_value_t = 1e-6)]
        eta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Monte-Carlo FER/BER/NLD of Viterbi decoding over AWGN.
    Simulate {
        #[arg(long)]
        code: String,
        #[arg(long, default_value_t = 100)]
        ls: usize,
        /// Eb/N0 in dB; repeat for a sweep.
        #[arg(long, allow_hyphen_values = true)]
        ebn0: Vec<f64>,
        /// Aggregation parameter, or "bit/symbol"; repeat for several.
        #[arg(long = "T")]
        t: Vec<StateModel>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        eta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// H(dS mod T) for T = 1..tmax, followed by H(dS).
    EntropyCurve {
        #[arg(long)]
        code: String,
        #[arg(long, default_value_t = 100)]
        ls: usize,
        #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
        ebn0: f64,
        #[arg(long, default_value_t = 10)]
        tmax: u32,
        #[arg(long, default_value_t = 1e-6)]
        eta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Measured cost of combined decoding with coprime T1, T2.
    CostCurve {
        #[arg(long, default_value = "C7")]
        code: String,
        #[arg(long, default_value_t = 100)]
        ls: usize,
        #[arg(long)]
        t1: Option<u32>,
        #[arg(long)]
        t2: Option<u32>,
        /// Target product T1*T2; split into the closest coprime pair.
        #[arg(long = "T")]
        target: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        ebn0: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// The bundled codes.
    ListCodes {
        #[command(flatten)]
        output: Output,
    },
}

fn emit(report: &Report, output: &Output) -> Result<()> {
    let text = report.render(output.format);
    match &output.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let catalog = Catalog::builtin();
    match cli.command {
        Command::Analyze {
            codes,
            ls,
            ebn0,
            eta,
            output,
        } => {
            let codes = if codes.is_empty() {
                catalog.entries().iter().map(|e| e.id.clone()).collect()
            } else {
                codes
            };
            emit(&run_criteria_table(&catalog, &codes, ls, ebn0, eta)?, &output)
        }
        Command::Simulate {
            code,
            ls,
            ebn0,
            t,
            trials,
            seed,
            eta,
            output,
        } => {
            let defaults = ExperimentConfig::default();
            let config = ExperimentConfig {
                code_id: code,
                num_symbols: ls,
                ebn0_db: if ebn0.is_empty() { defaults.ebn0_db } else { ebn0 },
                models: if t.is_empty() { defaults.models } else { t },
                trials,
                master_seed: seed,
                eta,
            };
            emit(&fer_report(&catalog, &config)?, &output)
        }
        Command::EntropyCurve {
            code,
            ls,
            ebn0,
            tmax,
            eta,
            output,
        } => {
            let curve = run_entropy_convergence(&catalog, &code, ls, ebn0, tmax, eta)?;
            let id = catalog.get(&code)?.id.clone();
            emit(&curve.to_report(&id, ls, ebn0), &output)
        }
        Command::CostCurve {
            code,
            ls,
            t1,
            t2,
            target,
            ebn0,
            trials,
            seed,
            output,
        } => {
            let (t1, t2, caveat) = match (t1, t2, target) {
                (Some(a), Some(b), None) => (a, b, None),
                (None, None, Some(tc)) => {
                    let c = choose_parameters(tc);
                    if c.no_benefit {
                        bail!("T = {tc} has no coprime split into two factors > 1");
                    }
                    (c.t1, c.t2, c.caveat)
                }
                (None, None, None) => (3, 4, None),
                _ => bail!("give either --t1 and --t2, or --T"),
            };
            let ebn0 = if ebn0.is_empty() {
                (1..=7).map(f64::from).collect()
            } else {
                ebn0
            };
            let curve = run_cost_comparison(&catalog, &code, ls, t1, t2, &ebn0, trials, seed)?;
            let id = catalog.get(&code)?.id.clone();
            let mut report = curve.to_report(&id, ls);
            if let Some(c) = caveat {
                report.note(c);
            }
            emit(&report, &output)
        }
        Command::ListCodes { output } => {
            let mut report = Report::new("codes", &["code", "source", "symbols", "mdl", "codewords"]);
            for e in catalog.entries() {
                let words: Vec<String> = e.code.codewords().iter().map(|c| c.to_string()).collect();
                report.push(vec![
                    e.id.clone().into(),
                    e.source_name.clone().into(),
                    e.code.len().into(),
                    mdl(&e.code, &e.source)?.into(),
                    Cell::Text(words.join(" ")),
                ]);
            }
            emit(&report, &output)
        }
    }
}
