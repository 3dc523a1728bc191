//! Command-line front end: single solves, sweeps and the oracle check.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swipt_bench::{
    emit_records, oracle_check, oracle_config, prepare_instance, run_sweep, scheme_seed, trace_is_monotone, BenchError,
    SweepSpec,
};
use swipt_core::{
    bnb_solve, build_codebook, run_scheme, sca_solve, sca_trace_csv, trace_csv, Criterion, ScenarioConfig, SchemeId,
};

#[derive(Parser)]
#[command(version, about = "Joint beamforming and IRS mode selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration (camelCase fields); defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mode pre-selection criterion.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    criterion: Option<u8>,
    /// ER weight of criterion 3.
    #[arg(long)]
    omega: Option<f64>,
    /// Largest number of assignments the oracle may enumerate.
    #[arg(long)]
    enum_cap: Option<usize>,
}

impl Common {
    fn load(&self, base: ScenarioConfig) -> Result<ScenarioConfig, BenchError> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => base,
        };
        if let Some(c) = self.criterion {
            cfg.criterion = [Criterion::C1, Criterion::C2, Criterion::C3][usize::from(c) - 1];
        }
        if let Some(w) = self.omega {
            cfg.omega = w;
        }
        if let Some(cap) = self.enum_cap {
            cfg.enum_cap = cap;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with one scheme and print the solution report.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "SCA")]
        scheme: SchemeId,
        /// Instance seed (defaults to the configured seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Write the BnB or SCA iteration trace to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run schemes over seeds and sweep points and write CSV records.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `FIELD=v1,v2,...` with a JSON field name.
        #[arg(long)]
        sweep: Option<String>,
        /// Comma-separated scheme names.
        #[arg(long, value_delimiter = ',', default_value = "SCA,B1,B2,B3")]
        schemes: Vec<SchemeId>,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Output CSV (standard output if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare branch-and-bound with enumeration; exits nonzero on a mismatch.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, BenchError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn solve(common: &Common, scheme: SchemeId, seed: Option<u64>, out: &Option<PathBuf>) -> Result<bool, BenchError> {
    let cfg = common.load(ScenarioConfig::default())?;
    let seed = seed.unwrap_or(cfg.seed);
    let codebook = build_codebook(cfg.reflection_grid_size, &cfg.wavefront_offsets)?;
    let inst = prepare_instance(&cfg, &codebook, seed)?;
    let r = run_scheme(scheme, &inst.offline, &inst.refined, &cfg, scheme_seed(seed, scheme))?;
    println!("scheme {scheme}, seed {seed}");
    match (&r.solution, &r.report) {
        (Some(sol), Some(rep)) => {
            println!("objective {:.4} dBm ({:.6e} mW)", sol.objective_dbm(), sol.objective_mw);
            println!("modes {:?}", r.codebook_modes.as_deref().unwrap_or_default());
            println!("sinr {:?}", sol.sinr);
            println!("harvested uW {:?}", sol.harvested_uw);
            println!("rank ratios {:?}", sol.rank_ratios);
            println!("iterations {}", r.iterations);
            if let Some(g) = r.gap {
                println!("gap {g:.3e}");
            }
            if let Some(b) = r.binarity_residual {
                println!("binarity residual {b:.3e}");
            }
            println!("verified {}", rep.pass);
        }
        _ => println!("infeasible"),
    }
    if let Some(path) = out {
        let text = match scheme {
            SchemeId::BnB => trace_csv(&bnb_solve(&inst.refined, &cfg)?.trace),
            SchemeId::Sca => sca_trace_csv(&sca_solve(&inst.refined, &cfg)?.trace),
            _ => return Err(BenchError::Parse(format!("scheme {scheme} has no trace"))),
        };
        std::fs::write(path, text)?;
    }
    Ok(true)
}

fn sweep(
    common: &Common,
    spec: &Option<String>,
    schemes: &[SchemeId],
    seeds: u64,
    out: &Option<PathBuf>,
) -> Result<bool, BenchError> {
    let cfg = common.load(ScenarioConfig::default())?;
    let spec = spec.as_deref().map(SweepSpec::parse).transpose()?;
    let records = run_sweep(&cfg, spec.as_ref(), schemes, seeds)?;
    emit_records(&records, output(out)?)?;
    Ok(true)
}

fn check(common: &Common, seeds: u64) -> Result<bool, BenchError> {
    let cfg = common.load(oracle_config())?;
    let cases = oracle_check(&cfg, cfg.seed..cfg.seed + seeds)?;
    let mut ok = true;
    for c in &cases {
        let pass = c.passed() && trace_is_monotone(&c.trace, cfg.eps_bnb);
        ok &= pass;
        println!(
            "seed {:3}: oracle {:>12} bnb {:>12} rel.err {:.2e} unique {} {}",
            c.seed,
            c.oracle.as_ref().map_or("infeasible".into(), |o| format!("{:.6e}", o.0)),
            c.bnb.as_ref().map_or("infeasible".into(), |b| format!("{:.6e}", b.0)),
            c.relative_error(),
            c.unique,
            if pass { "ok" } else { "MISMATCH" }
        );
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve {
            common,
            scheme,
            seed,
            out,
        } => solve(common, *scheme, *seed, out),
        Command::Sweep {
            common,
            sweep: spec,
            schemes,
            seeds,
            out,
        } => sweep(common, spec, schemes, *seeds, out),
        Command::OracleCheck { common, seeds } => check(common, *seeds),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
