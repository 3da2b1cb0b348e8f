use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsm_afdm::sim::{
    analysis_rows, ber_rows, run_ber_sweep, run_bound_sweep, run_capacity_sweep, run_complexity,
    svg_plot, write_csv, CsvHeader, CsvRow, SimConfig,
};
use gsm_afdm::Error;

#[derive(Parser)]
#[command(name = "gsm-afdm", version, about = "GSM-AFDM link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo bit error rate of the selected detectors.
    Ber(Common),
    /// Union bound on the MLD bit error rate.
    Bound(Common),
    /// DCMC capacity in bits per subcarrier.
    Capacity(Common),
    /// Detector operation counts per group.
    Complexity(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// SNR list in dB, "a,b,c" or "start:step:stop".
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Comma-separated detectors (mld, lmmse-mld, llrd, tc-llrd, grcd:T1, rscd:T2).
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot next to the CSV.
    #[arg(long, requires = "out")]
    plot: bool,
    /// Worker threads, 0 for all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Extra key=value overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load_config(c: &Common) -> Result<SimConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => SimConfig::from_file(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = &c.snr {
        cfg.set("snr_db", s)?;
    }
    if let Some(d) = &c.detector {
        cfg.set("detectors", d)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    for kv in &c.set {
        cfg.set_override(kv)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(c: &Common, header: &CsvHeader, rows: &[CsvRow], y_label: &str, log_y: bool) -> Result<(), Error> {
    match &c.out {
        Some(path) => {
            write_csv(BufWriter::new(File::create(path)?), header, rows)?;
            if c.plot {
                let svg = svg_plot(rows, &format!("{} ({})", header.kind, header.config_hash), y_label, log_y);
                std::fs::write(svg_path(path), svg)?;
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, header, rows)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn svg_path(csv: &Path) -> PathBuf {
    csv.with_extension("svg")
}

fn run(cmd: &Command) -> Result<(), Error> {
    let (c, kind) = match cmd {
        Command::Ber(c) => (c, "ber"),
        Command::Bound(c) => (c, "bound"),
        Command::Capacity(c) => (c, "capacity"),
        Command::Complexity(c) => (c, "complexity"),
    };
    let cfg = load_config(c)?;
    log::info!("config {}:\n{}", cfg.hash_hex(), cfg.canonical_text());
    let header = CsvHeader {
        kind: kind.into(),
        config_hash: cfg.hash_hex(),
        seed: cfg.seed,
    };
    match cmd {
        Command::Ber(_) => {
            let curves = run_ber_sweep(&cfg, c.workers)?;
            emit(c, &header, &ber_rows(&curves, false), "BER", true)
        }
        Command::Complexity(_) => {
            let curves = run_complexity(&cfg, c.workers)?;
            emit(c, &header, &ber_rows(&curves, true), "units per group", false)
        }
        Command::Bound(_) => {
            let pts = run_bound_sweep(&cfg)?;
            emit(c, &header, &analysis_rows("bound", &pts), "BER bound", true)
        }
        Command::Capacity(_) => {
            let pts = run_capacity_sweep(&cfg)?;
            emit(c, &header, &analysis_rows("dcmc", &pts), "bits per subcarrier", false)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
