use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnn_extract::harness::{report_from_dir, ExperimentConfig, Harness, Scheme, Table3};
use qnn_extract::{Error, Result};

#[derive(Parser)]
#[command(name = "qnn-extract", about = "Extraction attacks against QNNs served from noisy hardware")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = std::thread::available_parallelism().map_or(1, |n| n.get()))]
    jobs: usize,
    /// Use the reduced 600/200 victim pools.
    #[arg(long, global = true)]
    desk_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train and checkpoint victim QNNs.
    TrainVictim,
    /// Multi-round query the victims and write the query ledgers.
    Query,
    /// Query, derive labels and write variance-cleaning reports.
    Clean,
    /// Contrastively pretrain the quantum encoders.
    Pretrain,
    /// CopyQNN over the remember-ratio grid.
    Attack,
    /// Base and QLeak baselines.
    Baseline,
    /// Every configured scheme over the remember-ratio grid.
    SweepRr,
    /// CopyQNN over the query-round grid.
    SweepRounds,
    /// Victim accuracy across the hours of a day.
    Fluctuation,
    /// Rebuild derived tables from an existing results.csv.
    Report,
}

fn config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seeds = vec![s];
    }
    if let Some(d) = &c.out_dir {
        cfg.out_dir = d.clone();
    }
    if c.desk_scale {
        cfg = cfg.desk_scale();
    }
    if c.jobs == 0 {
        return Err(Error::Argument("--jobs must be at least 1".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summarize(rows: &qnn_extract::harness::ResultTable, cfg: &ExperimentConfig) {
    let t = Table3::from_table(rows, &cfg.rr_grid, cfg.query.rounds);
    println!("{:>8} {}", "", t.columns.join(" "));
    for (task, vals) in &t.rows {
        let cells: Vec<String> = vals.iter().map(|v| v.map_or("-".into(), |a| format!("{a:.3}"))).collect();
        println!("{task:>8} {}", cells.join(" "));
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli.common)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    cfg.save(cfg.out_dir.join("config.json"))?;
    let h = Harness::new(cfg.clone(), cli.common.jobs)?;
    match cli.command {
        Command::TrainVictim => {
            h.train_victims()?;
        }
        Command::Query => {
            h.query()?;
        }
        Command::Clean => {
            h.clean()?;
        }
        Command::Pretrain => {
            h.pretrain()?;
        }
        Command::Attack => summarize(&h.run(&[Scheme::Copyqnn])?.table, &cfg),
        Command::Baseline => summarize(&h.run(&[Scheme::Base, Scheme::Qleak])?.table, &cfg),
        Command::SweepRr => summarize(&h.run(&cfg.schemes)?.table, &cfg),
        Command::SweepRounds => {
            let rep = h.sweep_rounds(&cfg.rounds_grid)?;
            for (m, acc, runs) in qnn_extract::harness::rounds_summary(&rep.table) {
                println!("m={m:<4} accuracy {acc:.3} over {runs} runs");
            }
        }
        Command::Fluctuation => {
            for p in h.fluctuation()? {
                println!("{} seed {} hour {:>5.2}: {:.3}", p.task, p.seed, p.hour, p.accuracy);
            }
        }
        Command::Report => summarize(&report_from_dir(&cfg.out_dir, &cfg.rr_grid, cfg.query.rounds)?, &cfg),
    }
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
