use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use memcat_core::{load_model, BuiltinModel, EvalOptions, MachineOptions, RunOptions};

mod commands;
mod record;

use record::{exit_code, from_jsonl, render_table, to_jsonl, Record};

#[derive(Parser)]
#[command(name = "memcat", version, about = "Check litmus tests against relational memory models")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Jsonl,
}

#[derive(Args)]
struct Inputs {
    /// Litmus files, directories or glob patterns.
    tests: Vec<String>,
    /// Also take every bundled litmus test.
    #[arg(long)]
    bundled: bool,
}

#[derive(Args)]
struct PpoFlags {
    /// Reject candidates failing acyclic(po-loc|com) before running the model.
    #[arg(long)]
    prune_sc_per_location: bool,
    /// Zero `rdw` and `detour` in the model.
    #[arg(long)]
    static_ppo: bool,
}

impl PpoFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            eval: if self.static_ppo { EvalOptions::static_ppo() } else { EvalOptions::default() },
            prune_sc_per_location: self.prune_sc_per_location,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run tests against one model and check their expect blocks.
    Run {
        /// Bundled model name or .cat file.
        #[arg(short, long)]
        model: String,
        #[command(flatten)]
        flags: PpoFlags,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// List tests on which two models disagree.
    Compare {
        #[arg(short = 'a', long = "model-a")]
        a: String,
        #[arg(short = 'b', long = "model-b")]
        b: String,
        #[command(flatten)]
        flags: PpoFlags,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Compare the operational machine with the axiomatic model.
    Machine {
        /// Maximum number of memory events; larger tests are skipped.
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
        bound: u64,
        /// Model supplying ppo, fences and prop.
        #[arg(short, long, default_value = "power")]
        model: String,
        /// Print the trace of one accepted path per allowed candidate.
        #[arg(long)]
        trace: bool,
        /// Use the one-sided coRR check on read commits.
        #[arg(long)]
        no_corr: bool,
        /// Use the propagation premises without closing prop.
        #[arg(long)]
        literal_prop: bool,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Mine, name and classify critical cycles of litmus or thread-IR files.
    Cycles {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Render a jsonl report as a table.
    Render {
        /// Report file; stdin when absent.
        file: Option<String>,
    },
}

fn model(spec: &str) -> Result<BuiltinModel, String> {
    load_model(spec).map_err(|e| format!("model {spec}: {e}"))
}

fn execute(cmd: Cmd) -> Result<Vec<Record>, String> {
    const LITMUS: &[&str] = &["litmus"];
    Ok(match cmd {
        Cmd::Run { model: m, flags, inputs } => {
            let m = model(&m)?;
            let (files, errors) = commands::expand_inputs(&inputs.tests, inputs.bundled, LITMUS);
            commands::run(&m, &flags.options(), &files, errors)
        }
        Cmd::Compare { a, b, flags, inputs } => {
            let (a, b) = (model(&a)?, model(&b)?);
            let (files, errors) = commands::expand_inputs(&inputs.tests, inputs.bundled, LITMUS);
            commands::compare(&a, &b, &flags.options(), &files, errors)
        }
        Cmd::Machine { bound, model: m, trace, no_corr, literal_prop, inputs } => {
            let m = model(&m)?;
            let opts = MachineOptions { corr: !no_corr, prop_closure: !literal_prop };
            let (files, errors) = commands::expand_inputs(&inputs.tests, inputs.bundled, LITMUS);
            commands::machine(&m, bound as usize, opts, trace, &files, errors)
        }
        Cmd::Cycles { inputs } => {
            let (files, errors) = commands::expand_inputs(&inputs.tests, inputs.bundled, &["litmus", "ir"]);
            commands::cycles(&files, errors)
        }
        Cmd::Render { file } => {
            let text = match file {
                Some(f) => std::fs::read_to_string(&f).map_err(|e| format!("{f}: {e}"))?,
                None => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
                    s
                }
            };
            from_jsonl(&text)?
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let records = match execute(cli.cmd) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for r in &records {
        if let Record::Error(e) = r {
            eprintln!("error: {}: {}", e.file, e.error);
        }
    }
    match cli.format {
        Format::Table => print!("{}", render_table(&records)),
        Format::Jsonl => print!("{}", to_jsonl(&records)),
    }
    ExitCode::from(exit_code(&records) as u8)
}
