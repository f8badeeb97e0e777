//! Command-line front end: generate synthetic datasets, run simulations,
//! compute risk measures, and benchmark.
//!
//! Exit codes: 0 on success, 1 on a runtime failure (bad data, i/o), 2
//! on a usage error.

use agrisk::bench::run_bench;
use agrisk::engine::{run_portfolio, AggregateMode, EngineConfig, Precision};
use agrisk::gen::{generate_portfolio, generate_xelts, generate_yet, GenSpec};
use agrisk::io as disk;
use agrisk::measures::risk_measures;
use agrisk::model::build_loss_table;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "agrisk", version, about = "Aggregate risk analysis engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (year event table, XELTs, portfolio).
    Generate(GenerateArgs),
    /// Simulate a portfolio and write the year loss table.
    Run(RunArgs),
    /// Compute PML, VaR and TVaR from a year loss table.
    Measures(MeasuresArgs),
    /// Time the simulation across worker counts with phase attribution.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Directory the dataset files are written into.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Fixed number of events per trial.
    #[arg(long, default_value_t = 1000)]
    events_per_trial: usize,
    #[arg(long, default_value_t = 1_000_000)]
    catalogue_size: u32,
    #[arg(long, default_value_t = 16)]
    num_xelts: usize,
    /// Lower bound of the per-XELT record count range.
    #[arg(long, default_value_t = 10_000)]
    min_records: usize,
    /// Upper bound of the per-XELT record count range.
    #[arg(long, default_value_t = 30_000)]
    max_records: usize,
    /// Also write CSV copies next to the binary files.
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    Single,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateModeArg {
    ClipAsYouGo,
    AtTrialEnd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    LookupOnly,
    ThroughTerms,
    Full,
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 256)]
    chunk_size: usize,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    precision: PrecisionArg,
    #[arg(long, value_enum, default_value_t = AggregateModeArg::ClipAsYouGo)]
    aggregate_mode: AggregateModeArg,
    /// Disable per-XELT retention/limit/share terms.
    #[arg(long)]
    no_xelt_terms: bool,
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            num_workers: self.workers,
            chunk_size: self.chunk_size,
            precision: match self.precision {
                PrecisionArg::Double => Precision::Double,
                PrecisionArg::Single => Precision::Single,
            },
            xelt_terms_enabled: !self.no_xelt_terms,
            aggregate_mode: match self.aggregate_mode {
                AggregateModeArg::ClipAsYouGo => AggregateMode::ClipAsYouGo,
                AggregateModeArg::AtTrialEnd => AggregateMode::AtTrialEnd,
            },
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    yet: PathBuf,
    #[arg(long)]
    xelts: PathBuf,
    #[arg(long)]
    portfolio: PathBuf,
    /// Output path for the portfolio year loss table (binary).
    #[arg(long)]
    out: PathBuf,
    /// Also write a CSV copy of the year loss table here.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct MeasuresArgs {
    /// Year loss table (binary) to analyse.
    #[arg(long)]
    ylt: PathBuf,
    /// Return periods for PML, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,50,100,250,500,1000")]
    return_periods: Vec<f64>,
    /// Tail levels for VaR/TVaR, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.99,0.995")]
    tvar_levels: Vec<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    yet: PathBuf,
    #[arg(long)]
    xelts: PathBuf,
    #[arg(long)]
    portfolio: PathBuf,
    /// Worker counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    workers: Vec<usize>,
    /// Timed repetitions per stage; the minimum is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 256)]
    chunk_size: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Measures(a) => measures(a),
        Command::Bench(a) => bench(a),
    }
}

fn generate(a: GenerateArgs) -> Result<(), Box<dyn std::error::Error>> {
    let spec = GenSpec {
        seed: a.seed,
        num_trials: a.trials,
        events_per_trial: (a.events_per_trial, a.events_per_trial),
        catalogue_size: a.catalogue_size,
        num_xelts: a.num_xelts,
        records_per_xelt: (a.min_records, a.max_records),
        ..Default::default()
    };
    std::fs::create_dir_all(&a.out_dir)?;
    let yet = generate_yet(&spec)?;
    let xelts = generate_xelts(&spec)?;
    let pf = generate_portfolio(&spec)?;
    disk::save_yet(&a.out_dir.join("events.yet"), &yet)?;
    disk::save_xelts(&a.out_dir.join("losses.xelt"), &xelts)?;
    disk::save_portfolio(&a.out_dir.join("portfolio.pf"), &pf)?;
    if a.csv {
        let mut w = std::io::BufWriter::new(std::fs::File::create(a.out_dir.join("events.csv"))?);
        disk::write_yet_csv(&mut w, &yet)?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(a.out_dir.join("losses.csv"))?);
        disk::write_xelts_csv(&mut w, &xelts)?;
    }
    let occs: usize = yet.trials.iter().map(|t| t.occurrences.len()).sum();
    let recs: usize = xelts.iter().map(Vec::len).sum();
    println!(
        "generated {} trials ({occs} occurrences), {} xelts ({recs} records) in {}",
        yet.trials.len(),
        xelts.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn run(a: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let yet = disk::load_yet(&a.yet)?;
    let xelts = disk::load_xelts(&a.xelts)?;
    let pf = disk::load_portfolio(&a.portfolio)?;
    let table = build_loss_table(&xelts, yet.catalogue_size)?;
    let cfg = a.engine.config();

    let start = Instant::now();
    let per_layer = run_portfolio(&pf, &yet, &table, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    let ylt = agrisk::engine::portfolio_rollup(&per_layer);
    disk::save_ylt(&a.out, &ylt)?;
    if let Some(csv_path) = &a.out_csv {
        let mut w = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
        disk::write_ylt_csv(&mut w, &ylt)?;
    }
    println!("trials,layers,workers,wall_time_ms");
    println!("{},{},{},{elapsed:.3}", ylt.losses.len(), per_layer.len(), cfg.num_workers);
    Ok(())
}

fn measures(a: MeasuresArgs) -> Result<(), Box<dyn std::error::Error>> {
    let ylt = disk::load_ylt(&a.ylt)?;
    let first_level = *a.tvar_levels.first().unwrap_or(&0.99);
    let m = risk_measures(&ylt, &a.return_periods, first_level)?;
    let per_level: Vec<_> = a
        .tvar_levels
        .iter()
        .map(|&level| agrisk::measures::tvar(&ylt, level).map(|m| (level, m)))
        .collect::<Result<_, _>>()?;
    println!("measure,parameter,value");
    for (rp, loss) in &m.pml_by_return_period {
        println!("pml,{rp},{loss}");
    }
    for (level, m) in per_level {
        println!("var,{level},{}", m.var);
        println!("tvar,{level},{}", m.tvar);
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Box<dyn std::error::Error>> {
    let yet = disk::load_yet(&a.yet)?;
    let xelts = disk::load_xelts(&a.xelts)?;
    let pf = disk::load_portfolio(&a.portfolio)?;
    let table = build_loss_table(&xelts, yet.catalogue_size)?;
    let cfg = EngineConfig { chunk_size: a.chunk_size, ..EngineConfig::default() };
    let report = run_bench(&pf, &yet, &table, &cfg, &a.workers, a.repeats)?;
    print!("{}", report.to_csv());
    Ok(())
}
