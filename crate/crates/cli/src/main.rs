use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use retrospatial::script::{bench_csv, generate, measure, parse_workload, run, GenSpec, Mode, WorkloadScript};

/// Run retroactive spatial workloads.
#[derive(Parser, Debug)]
#[command(name = "retrospatial", version)]
struct Args {
    /// Workload file; `-` or nothing reads stdin. Ignored with `--gen`.
    file: Option<PathBuf>,
    /// exec prints answers, verify checks them against brute force, bench
    /// prints work counters as CSV.
    #[arg(long, default_value = "exec")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Synthesize a workload instead of reading one, e.g. `n=1000,q=100,d=2`.
    /// In bench mode the sweep doubles n up to the given value.
    #[arg(long)]
    gen: Option<GenSpec>,
}

const INPUT_ERROR: u8 = 2;
const VERIFY_FAILED: u8 = 1;
const SWEEP_STEPS: u32 = 6;

fn load(args: &Args) -> anyhow::Result<WorkloadScript> {
    let text = match args.file.as_deref() {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
            s
        }
    };
    Ok(parse_workload(&text)?)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let (Some(spec), Mode::Bench) = (args.gen, args.mode) {
        let rows: Vec<_> = (0..SWEEP_STEPS)
            .rev()
            .filter_map(|k| {
                let n = spec.n >> k;
                (n >= 16 || k == 0).then(|| measure(&generate(GenSpec { n, ..spec }, args.seed), args.seed))
            })
            .collect();
        print!("{}", bench_csv(&rows));
        return ExitCode::SUCCESS;
    }
    let script = match args.gen {
        Some(spec) => generate(spec, args.seed),
        None => match load(&args) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(INPUT_ERROR);
            }
        },
    };
    let report = run(&script, args.mode, args.seed);
    print!("{}", report.output);
    if report.ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failed");
        ExitCode::from(VERIFY_FAILED)
    }
}
