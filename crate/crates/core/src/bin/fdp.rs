use clap::{Args, Parser, Subcommand};
use fdp::analytic::ClaimSpec;
use fdp::harness::{self, OutputFormat, RunConfig, Sweep};
use fdp::ptlr::EtaGrid;
use fdp::{Error, Mechanism, Result};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fdp", version, about = "Estimate and audit f-DP trade-off curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the trade-off curve of a mechanism (CSV: eta,alpha,beta)
    Estimate(Common),
    /// Audit a mechanism against a claimed curve (JSON report)
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        claim: String,
    },
    /// Mean squared uniform error over repetitions for several n1
    Mse {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        n1_grid: Vec<usize>,
    },
    /// Audit verdict counts along a parameter sweep
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        claim: String,
        /// e.g. n2=10000,100000,1000000
        #[arg(long)]
        sweep: String,
    },
    /// Pointwise min/max band of repeated curve estimates
    Envelope(Common),
    /// Mean wall-clock time of the two estimators
    Runtime(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "gauss:sigma=1")]
    mech: String,
    #[arg(long, default_value_t = 10)]
    records: usize,
    #[arg(long, default_value_t = 100_000)]
    n1: usize,
    #[arg(long, default_value_t = 1_000_000)]
    n2: usize,
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    #[arg(long, default_value_t = 15.0)]
    eta_max: f64,
    #[arg(long, default_value_t = 1000)]
    eta_steps: usize,
    /// Repetitions (default 100 for mse and envelope, 1 otherwise)
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// 1000 repetitions and the full n1 grid
    #[arg(long)]
    paper_scale: bool,
}

impl Common {
    fn config(&self, default_reps: usize) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(Mechanism::parse(&self.mech)?);
        if self.paper_scale {
            cfg = cfg.paper_scale();
        } else {
            cfg.repetitions = default_reps;
        }
        if let Some(r) = self.reps {
            cfg.repetitions = r;
        }
        cfg.records = self.records;
        cfg.n1 = self.n1;
        cfg.n2 = self.n2;
        cfg.h = self.h;
        cfg.gamma = self.gamma;
        cfg.grid = EtaGrid::uniform(self.eta_max, self.eta_steps)?;
        cfg.seed = self.seed;
        cfg.output = self.out.clone();
        cfg.format = self.format.parse::<OutputFormat>()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(c) => {
            let cfg = c.config(1)?;
            let est = harness::run_estimate(&cfg)?;
            let mut out = harness::open_output(cfg.output.as_deref())?;
            match cfg.format {
                OutputFormat::Csv => est.write_csv(&mut out)?,
                OutputFormat::Json => harness::write_json(est.points(), &mut out)?,
            }
            out.flush()?;
        }
        Command::Audit { common, claim } => {
            let cfg = common.config(1)?;
            let claim = ClaimSpec::parse(&claim)?;
            let report = harness::run_audit(&cfg, &claim)?;
            let mut out = harness::open_output(cfg.output.as_deref())?;
            harness::write_json(&report, &mut out)?;
            out.flush()?;
        }
        Command::Mse { common, n1_grid } => {
            let mut cfg = common.config(100)?;
            if !common.paper_scale {
                cfg.n1_grid = n1_grid;
            }
            harness::emit_rows(&cfg, &harness::run_mse_experiment(&cfg)?)?;
        }
        Command::Sweep { common, claim, sweep } => {
            let cfg = common.config(1)?;
            let claim = ClaimSpec::parse(&claim)?;
            let sweep: Sweep = sweep.parse()?;
            harness::emit_rows(&cfg, &harness::run_audit_sweep(&cfg, &claim, &sweep)?)?;
        }
        Command::Envelope(c) => {
            let cfg = c.config(100)?;
            harness::emit_rows(&cfg, &harness::run_envelope(&cfg)?.rows)?;
        }
        Command::Runtime(c) => {
            let cfg = c.config(1)?;
            harness::emit_rows(&cfg, &harness::report_runtime(&cfg)?)?;
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("FDP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParameter(format!("FDP_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
