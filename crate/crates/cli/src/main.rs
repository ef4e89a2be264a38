//! `structrade` command-line interface.
//!
//! Exit codes: 0 on success, 2 for invalid input (including usage errors),
//! 3 when a solver fails to converge.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use structrade::calibration::{calibrate, PpmlSettings};
use structrade::io::{read_fundamentals, write_equilibria, write_fundamentals};
use structrade::scenario::{run_scenario, write_run, Scenario};
use structrade::steady_state::solve_steady_state;
use structrade::transition::{read_checkpoint, solve_transition, write_checkpoint, PathProblem};
use structrade::twocountry::{sweep, write_schedule};
use structrade::{Error, Fundamentals, ModelConfig, PreferenceFamily, Result};

use config::{FileConfig, Synthetic};

#[derive(Parser, Debug)]
#[command(name = "structrade", version, about = "Dynamic multi-sector trade model with tariff counterfactuals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the steady state of one year's fundamentals.
    Steady {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Year whose fundamentals are held fixed (default: the last year).
        #[arg(long)]
        year: Option<i32>,
    },
    /// Solve the perfect-foresight transition path.
    Transition {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Start from the saving rates stored in a checkpoint file.
        #[arg(long, value_name = "FILE")]
        resume: Option<PathBuf>,
    },
    /// Tariff counterfactuals.
    Scenario {
        #[command(subcommand)]
        action: ScenarioCommand,
    },
    /// Two-country analytical model.
    Twocountry {
        #[command(subcommand)]
        action: TwoCountryCommand,
    },
    /// Recover fundamentals from an observed panel.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Directory holding the observed panel.
        #[arg(long, value_name = "DIR")]
        panel: Option<PathBuf>,
        /// Generate the panel from a synthetic world instead (`calibration:SEED:YEARS`).
        #[arg(long, value_name = "SPEC")]
        synthetic: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ScenarioCommand {
    /// Run a scenario file against the baseline.
    Run {
        /// Scenario file.
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
    },
}

#[derive(Subcommand, Debug)]
enum TwoCountryCommand {
    /// Tabulate the equilibrium over a grid of uniform Home tariffs.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Preference family.
    #[arg(long, value_parser = parse_family)]
    family: Option<PreferenceFamily>,
    #[arg(long)]
    tol_price: Option<f64>,
    #[arg(long)]
    tol_spending: Option<f64>,
    #[arg(long)]
    tol_wage: Option<f64>,
    #[arg(long)]
    tol_newton: Option<f64>,
    #[arg(long)]
    tol_euler: Option<f64>,
    #[arg(long)]
    tol_rental: Option<f64>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Directory of fundamentals in long-format CSV.
    #[arg(long, value_name = "DIR")]
    data: Option<PathBuf>,
    /// Built-in synthetic world: `audit:SEED:YEARS`, `twin:YEARS` or `calibration:SEED:YEARS`.
    #[arg(long, value_name = "SPEC")]
    synthetic: Option<String>,
}

fn parse_family(s: &str) -> std::result::Result<PreferenceFamily, String> {
    PreferenceFamily::from_short(s).map_err(|e| e.to_string())
}

impl Common {
    /// Load the configuration file and apply command-line overrides.
    fn load(&self) -> Result<(FileConfig, ModelConfig)> {
        let file = match &self.config {
            Some(p) => FileConfig::read(p)?,
            None => FileConfig::default(),
        };
        let mut m = file.model.clone();
        if let Some(f) = self.family {
            m.preference_family = f;
        }
        let t = &mut m.tol;
        for (slot, v) in [
            (&mut t.price, self.tol_price),
            (&mut t.spending, self.tol_spending),
            (&mut t.wage, self.tol_wage),
            (&mut t.newton, self.tol_newton),
            (&mut t.euler, self.tol_euler),
            (&mut t.rental, self.tol_rental),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        m.validate()?;
        Ok((file, m))
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Io { path: self.out.display().to_string(), source: e })?;
        Ok(&self.out)
    }
}

fn write_config(dir: &Path, cfg: &ModelConfig) -> Result<()> {
    let path = dir.join("config.toml");
    let text = toml::to_string(&config::Wrapped { model: cfg })
        .map_err(|e| Error::validation(format!("cannot serialize configuration: {e}")))?;
    std::fs::write(&path, text).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

fn load_fundamentals(data: &DataArgs, file: &FileConfig) -> Result<Fundamentals> {
    let dir = data.data.clone().or_else(|| file.data.clone());
    let synth = data.synthetic.clone().or_else(|| file.synthetic.clone());
    match (dir, synth) {
        (Some(_), Some(_)) => Err(Error::validation("give either a data directory or a synthetic world, not both")),
        (Some(d), None) => read_fundamentals(&d),
        (None, Some(s)) => Synthetic::parse(&s)?.fundamentals(),
        (None, None) => Err(Error::validation("no input: pass --data <dir> or --synthetic <spec>")),
    }
}

fn cmd_steady(common: &Common, data: &DataArgs, year: Option<i32>) -> Result<()> {
    let (file, cfg) = common.load()?;
    let fund = load_fundamentals(data, &file)?;
    let t = match year {
        None => fund.n_periods() - 1,
        Some(y) => fund
            .periods
            .iter()
            .position(|&p| p == y)
            .ok_or_else(|| Error::validation(format!("year {y} is not in the data")))?,
    };
    let ss = solve_steady_state(&fund.period(t), &cfg)?;
    let out = common.out_dir()?;
    write_equilibria(out, &fund.countries, &fund.sectors, &[None], &[&ss.eq])?;
    write_config(out, &cfg)?;
    eprintln!("steady state for {} written to {}", fund.periods[t], out.display());
    Ok(())
}

fn cmd_transition(common: &Common, data: &DataArgs, resume: Option<&Path>) -> Result<()> {
    let (file, cfg) = common.load()?;
    let fund = load_fundamentals(data, &file)?;
    let problem = PathProblem::new(fund, &cfg)?;
    let rho0 = match resume {
        None => None,
        Some(p) => {
            let (rho, _) = read_checkpoint(p, &problem.fund.countries)?;
            if rho.dim() != (problem.n(), problem.horizon) {
                return Err(Error::validation(format!(
                    "checkpoint holds {} periods, the problem has {}",
                    rho.ncols(),
                    problem.horizon
                )));
            }
            Some(rho)
        }
    };
    let path = solve_transition(&problem, rho0)?;
    let out = common.out_dir()?;
    let years: Vec<Option<i32>> = (0..path.horizon()).map(|t| Some(problem.year(t))).collect();
    let eqs: Vec<_> = path.eqs.iter().collect();
    write_equilibria(&out.join("path"), &problem.fund.countries, &problem.fund.sectors, &years, &eqs)?;
    write_checkpoint(&out.join("checkpoint.csv"), &problem.fund.countries, &path.rho, &path.k)?;
    write_config(out, &cfg)?;
    eprintln!(
        "transition solved in {} iterations, Euler residual {:.2e}; written to {}",
        path.iterations,
        path.max_abs_z(),
        out.display()
    );
    Ok(())
}

fn cmd_scenario(file_path: &Path, common: &Common, data: &DataArgs) -> Result<()> {
    let (file, cfg) = common.load()?;
    let sc = Scenario::read(file_path)?;
    let fund = load_fundamentals(data, &file)?;
    let run = run_scenario(fund, &cfg, &sc)?;
    let out = common.out_dir()?;
    write_run(out, &run.reports)?;
    let copy = out.join("scenario.txt");
    std::fs::write(&copy, sc.render()).map_err(|e| Error::Io { path: copy.display().to_string(), source: e })?;
    write_config(out, &cfg)?;
    for r in &run.reports {
        let cells: Vec<String> =
            r.countries.iter().zip(r.welfare.iter()).map(|(c, v)| format!("{c} {v:+.4}%")).collect();
        eprintln!("{} [{}]: welfare {}", r.scenario, r.family.short_name(), cells.join(", "));
    }
    Ok(())
}

fn cmd_sweep(common: &Common) -> Result<()> {
    let (file, cfg) = common.load()?;
    let spec = &file.twocountry;
    let inst = spec.instance(cfg.preference_family)?;
    let sectors = spec.sweep_indices()?;
    let rows = sweep(&inst, &sectors, &spec.grid()?)?;
    let out = common.out_dir()?;
    write_schedule(&out.join("schedule.csv"), &rows, &spec.sectors)?;
    eprintln!("{} tariff levels written to {}", rows.len(), out.join("schedule.csv").display());
    Ok(())
}

fn cmd_calibrate(common: &Common, panel_dir: Option<&Path>, synthetic: Option<&str>) -> Result<()> {
    let (file, cfg) = common.load()?;
    let out = common.out_dir()?;
    let panel_dir = panel_dir.map(Path::to_path_buf).or_else(|| file.panel.clone());
    let synthetic = synthetic.map(str::to_string).or_else(|| file.synthetic.clone());
    let panel = match (panel_dir, synthetic) {
        (Some(_), Some(_)) => return Err(Error::validation("give either a panel directory or a synthetic world, not both")),
        (Some(d), None) => structrade::calibration::ObservedPanel::read(&d)?,
        (None, Some(s)) => {
            let panel = Synthetic::parse(&s)?.panel(&cfg)?;
            panel.write(&out.join("panel"))?;
            panel
        }
        (None, None) => return Err(Error::validation("no input: pass --panel <dir> or --synthetic <spec>")),
    };
    let cal = calibrate(&panel, &cfg, &PpmlSettings::default())?;
    write_fundamentals(&out.join("fundamentals"), &cal.fund)?;
    config::write_gravity(&out.join("gravity.csv"), &panel, &cal.gravity)?;
    write_config(out, &cfg)?;
    eprintln!("calibrated {} countries over {} years; written to {}", panel.n(), panel.t(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Steady { common, data, year } => cmd_steady(common, data, *year),
        Command::Transition { common, data, resume } => cmd_transition(common, data, resume.as_deref()),
        Command::Scenario { action: ScenarioCommand::Run { file, common, data } } => cmd_scenario(file, common, data),
        Command::Twocountry { action: TwoCountryCommand::Sweep { common } } => cmd_sweep(common),
        Command::Calibrate { common, panel, synthetic } => cmd_calibrate(common, panel.as_deref(), synthetic.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
