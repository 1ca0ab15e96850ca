use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bandpilot::allocate::{allocate_group, users_from_csv, Objective};
use bandpilot::baselines::{self, Bandwidth};
use bandpilot::beamform::{solve_mimo, substitute};
use bandpilot::report::{self, optimize, verify_preset};
use bandpilot::scenario::{preset, Scenario, PRESETS};
use bandpilot::sweep::{run_sweep, write_csv};
use bandpilot::{CoherenceBlock, Error, FadingModel};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit code when a preset drifts outside its recorded ranges.
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "bandpilot", version, about = "Bandwidth and pilot optimization for wideband fading links")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Source {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in preset name (see `presets list`).
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> bandpilot::Result<Scenario> {
        match (&self.scenario, &self.preset) {
            (Some(p), _) => Scenario::from_path(p),
            (None, Some(n)) => preset(n)?.scenario(),
            (None, None) => Err(Error::Config("give --scenario FILE or --preset NAME".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimal bandwidth, pilot count and rate of one link.
    Optimize {
        #[command(flatten)]
        source: Source,
        /// Check the result against the preset's recorded ranges.
        #[arg(long, requires = "preset")]
        verify: bool,
    },
    /// Evaluate the scenario's sweep axis, one row per point.
    Sweep {
        #[command(flatten)]
        source: Source,
    },
    /// Joint power and bandwidth allocation across users.
    Allocate {
        /// CSV with columns gain_db, pt_dbm, w0_hz.
        #[arg(long)]
        users: PathBuf,
        #[arg(long, default_value = "max-weak")]
        objective: Objective,
        #[arg(long, default_value_t = 5.0)]
        tc_ms: f64,
        #[arg(long, default_value_t = 10.0)]
        bc_mhz: f64,
        #[arg(long, default_value_t = 9.0)]
        noise_figure_db: f64,
        #[arg(long, default_value = "rayleigh")]
        fading: String,
    },
    /// Reference rates at the scenario's optimum.
    Baselines {
        #[command(flatten)]
        source: Source,
    },
    /// Built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Re-run every preset against its recorded ranges.
    Verify,
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: serde::Serialize>(v: &T, mut out: impl Write) -> bandpilot::Result<()> {
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

enum Failure {
    Lib(Error),
    Verify(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn report_checks(checks: &[report::CheckOutcome]) -> usize {
    let mut failed = 0;
    for c in checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        eprintln!(
            "{tag} {} {:?}: {} in [{}, {}]",
            c.preset, c.expectation.metric, c.value, c.expectation.lo, c.expectation.hi
        );
        failed += usize::from(!c.pass);
    }
    failed
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Optimize { source, verify } => {
            let scn = source.load()?;
            let rep = optimize(&scn)?;
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            let out = output(&cli.out)?;
            match cli.format {
                Format::Csv => report::write_optimize_csv(&rep, out)?,
                Format::Json => write_json(&rep, out)?,
            }
            if verify {
                let p = preset(source.preset.as_deref().unwrap_or_default())?;
                let failed = report_checks(&verify_preset(p)?);
                if failed > 0 {
                    return Err(Failure::Verify(failed));
                }
            }
        }
        Command::Sweep { source } => {
            let scn = source.load()?;
            let spec = scn
                .sweep
                .ok_or_else(|| Error::Config("scenario has no sweep_key".into()))?;
            let rows = run_sweep(&scn, &spec, cli.parallel)?;
            for (i, r) in rows.iter().enumerate() {
                if let Some(e) = &r.error {
                    eprintln!("point {i} (x = {}) failed: {e}", r.x);
                }
            }
            let out = output(&cli.out)?;
            match cli.format {
                Format::Csv => write_csv(&rows, out)?,
                Format::Json => write_json(&rows, out)?,
            }
        }
        Command::Allocate { users, objective, tc_ms, bc_mhz, noise_figure_db, fading } => {
            let fading = match fading.as_str() {
                "rayleigh" => FadingModel::Rayleigh,
                "deterministic" => FadingModel::Deterministic,
                other => return Err(Error::Config(format!("unknown fading {other:?}")).into()),
            };
            let cb = CoherenceBlock::new(tc_ms * 1e-3, bc_mhz * 1e6)?;
            let list = users_from_csv(File::open(&users)?, noise_figure_db, cb, &fading)?;
            let alloc = allocate_group(&list, objective)?;
            for w in &alloc.warnings {
                eprintln!("warning: {w:?}");
            }
            let out = output(&cli.out)?;
            match cli.format {
                Format::Csv => report::write_allocation_csv(&alloc, out)?,
                Format::Json => write_json(&alloc, out)?,
            }
        }
        Command::Baselines { source } => {
            let scn = source.load()?;
            let pb = scn.power_budget()?;
            let sub = substitute(&scn.array, scn.cb.lc())?;
            let op = solve_mimo(pb.pd, &scn.cb, &scn.array, &scn.fading)?;
            let pd_bf = pb.pd.scaled(scn.array.combined_gain())?;
            let (rho, lc) = (sub.rho_tilde(op.rho), sub.lc_tilde.get());
            let rates = vec![
                baselines::csir_rate(pd_bf, Bandwidth::Infinite, &scn.fading)?,
                baselines::csir_rate(pd_bf, Bandwidth::Hz(op.w_hz), &scn.fading)?,
                baselines::peaky_fsk_rate(pd_bf, scn.cb.lc())?,
                baselines::non_peaky_mi_rate(pd_bf, scn.cb.lc(), &scn.fading)?,
                baselines::mi_lower_bound_se(rho, lc)?,
                baselines::pilot_power_boost_se(rho, op.alpha, lc, &scn.fading)?,
            ];
            let out = output(&cli.out)?;
            match cli.format {
                Format::Csv => report::write_baselines_csv(&rates, out)?,
                Format::Json => write_json(&rates, out)?,
            }
        }
        Command::Presets { action: PresetAction::List } => {
            let mut out = output(&cli.out)?;
            for p in PRESETS {
                writeln!(out, "{:<16} {}", p.name, p.summary)?;
            }
        }
        Command::Presets { action: PresetAction::Verify } => {
            let mut failed = 0;
            for p in PRESETS {
                failed += report_checks(&verify_preset(p)?);
            }
            if failed > 0 {
                return Err(Failure::Verify(failed));
            }
            eprintln!("all presets within their recorded ranges");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify(n)) => {
            eprintln!("error: {n} preset check(s) outside their recorded ranges");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver() { 2 } else { 1 })
        }
    }
}
