//! `ris-fas`: outage and delay-outage sweeps from the command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use ris_fas_core::geometry::{validate_correlation_mc, write_matrix_csv};
use ris_fas_core::montecarlo::{dump_gains, GainFormat};
use ris_fas_core::sweep::{
    emit_csv, parse_config, plot_script, preset, run_series, write_csv, CONFIG_KEYS, PRESETS,
};
use ris_fas_core::{McRun, Regularization, SpatialCorrelation, SweepRecord, SweepSpec};

#[derive(Parser)]
#[command(name = "ris-fas", version, about = "Outage analysis of RIS-aided fluid-antenna links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: SweepFlags,
    },
    /// Run a built-in figure preset.
    Preset {
        name: String,
        #[command(flatten)]
        flags: SweepFlags,
    },
    /// Check the port correlation of the config's grid against direct
    /// integration over arrival directions.
    ValidateCorr {
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest acceptable entrywise error.
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
        /// Write the estimated matrix here as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the simulated selected-port gain of every trial.
    DumpGains {
        config: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
        /// Sweep point (0-based) whose configuration is simulated.
        #[arg(long, default_value_t = 0)]
        point: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct SweepFlags {
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Adds Monte Carlo estimates with this many trials per point.
    #[arg(long)]
    mc_trials: Option<u64>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    plot_script: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// Little-endian 64-bit floats.
    Binary,
    Csv,
}

enum Failure {
    /// Bad input: exit code 1.
    Invalid(String),
    /// Failure while running: exit code 2.
    Runtime(String),
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn config_help() -> String {
    let mut s = String::from("Config file keys (`key = value`, `#` starts a comment):\n");
    for (k, unit) in CONFIG_KEYS {
        s.push_str(&format!("  {k:<20} {unit}\n"));
    }
    s
}

fn presets_help() -> String {
    format!("Presets: {}", PRESETS.join(", "))
}

fn main() -> ExitCode {
    let cmd = Cli::command()
        .mut_subcommand("run", |c| c.after_help(config_help()))
        .mut_subcommand("validate-corr", |c| c.after_help(config_help()))
        .mut_subcommand("dump-gains", |c| c.after_help(config_help()))
        .mut_subcommand("preset", |c| c.after_help(presets_help()));
    let cli = match cmd
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, flags } => {
            let spec = parse_config(&config).map_err(invalid)?;
            let out = flags.out.clone().or_else(|| spec.output_path.clone());
            let title = config.display().to_string();
            sweep(vec![spec], &flags, out, &title)
        }
        Command::Preset { name, flags } => {
            let specs = preset(&name).ok_or_else(|| {
                invalid(format!("unknown preset `{name}`; {}", presets_help()))
            })?;
            let out = flags.out.clone();
            sweep(specs, &flags, out, &name)
        }
        Command::ValidateCorr {
            config,
            samples,
            seed,
            tolerance,
            out,
        } => {
            let spec = parse_config(&config).map_err(invalid)?;
            let grid = &spec.base.grid;
            let est = validate_correlation_mc(grid, samples, seed).map_err(invalid)?;
            let err = est.max_abs_error(&grid.correlation_matrix());
            let se = est.std_error.max();
            println!(
                "grid {}x{} over {}x{} wavelengths: max abs error {err:.3e} (max standard error {se:.3e}, {samples} samples)",
                grid.n1(),
                grid.n2(),
                grid.w1(),
                grid.w2()
            );
            if let Some(path) = out {
                let file = create(&path)?;
                write_matrix_csv(&est.real, file).map_err(|e| with_path(&path, e))?;
            }
            if err > tolerance {
                return Err(runtime(format!("max abs error {err:.3e} exceeds {tolerance:.3e}")));
            }
            Ok(())
        }
        Command::DumpGains {
            config,
            trials,
            out,
            format,
            point,
            seed,
        } => {
            let spec = parse_config(&config).map_err(invalid)?;
            let value = *spec.values.get(point).ok_or_else(|| {
                invalid(format!("point {point} is outside 0..{}", spec.values.len()))
            })?;
            let c = spec.axis.apply(&spec.base, value).map_err(invalid)?;
            let run = McRun::new(trials, seed.unwrap_or(spec.rqmc.seed));
            run.validate().map_err(invalid)?;
            let corr = SpatialCorrelation::build(&c.grid, Regularization::default())
                .map_err(runtime)?;
            let format = match format {
                Format::Binary => GainFormat::Binary,
                Format::Csv => GainFormat::Csv,
            };
            let file = create(&out)?;
            let n = dump_gains(&c, &corr, &run, format, file).map_err(|e| with_path(&out, e))?;
            eprintln!("wrote {n} gains to {}", out.display());
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: impl ToString) -> Failure {
    runtime(format!("{}: {}", path.display(), e.to_string()))
}

fn sweep(
    mut specs: Vec<SweepSpec>,
    flags: &SweepFlags,
    out: Option<PathBuf>,
    title: &str,
) -> Result<(), Failure> {
    if flags.plot_script && out.is_none() {
        return Err(invalid("--plot-script needs a CSV file (--out or output_path)"));
    }
    for s in &mut specs {
        if let Some(trials) = flags.mc_trials {
            *s = s.clone().with_mc(trials);
        }
        if let Some(seed) = flags.seed {
            *s = s.clone().with_seed(seed);
        }
        s.validate().map_err(invalid)?;
    }
    let axis = specs[0].axis;
    let records = run_series(&specs).map_err(runtime)?;
    report_failures(&records);
    match &out {
        Some(path) => {
            emit_csv(&records, axis, path).map_err(runtime)?;
            if flags.plot_script {
                let gp = path.with_extension("gp");
                let csv_name = path.file_name().map(|n| n.to_string_lossy().into_owned());
                let script = plot_script(&records, axis, &csv_name.unwrap_or_default(), title);
                std::fs::write(&gp, script).map_err(|e| with_path(&gp, e))?;
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&records, axis, &mut lock).map_err(runtime)?;
            lock.flush().map_err(runtime)?;
        }
    }
    Ok(())
}

fn report_failures(records: &[SweepRecord]) {
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} points failed; see the error column", records.len());
    }
    let flagged = records.iter().filter(|r| r.clt_warning).count();
    if flagged > 0 {
        eprintln!(
            "warning: {flagged} points use too few RIS elements for the Gaussian cascade model"
        );
    }
}
