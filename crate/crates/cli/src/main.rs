use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use cascade_optomech::bistability::{coupled_roots, rwa_roots, trace_hysteresis, Frame};
use cascade_optomech::entanglement::{entangle, EntanglementOptions};
use cascade_optomech::error::Error;
use cascade_optomech::gain_medium::gain_coefficients;
use cascade_optomech::params::{parse_quantity, preset, ParamBuilder, SystemParams, PRESET_NAMES};
use cascade_optomech::sweep::{self, Axis, Evaluator, Format, RunControl, Scale, SweepSpec};
use clap::{Args, Parser, Subcommand};

mod report;

#[derive(Parser, Debug)]
#[command(name = "cascade", version, about = "Cascade-laser optomechanics: gain coefficients, bistability and mirror entanglement")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Built-in parameter set to start from (see `presets`).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// JSON config file applied on top of the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one parameter, e.g. `cavity.P1=0.6pW` or `cavity.delta01=2pi*1.5MHz`.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Data format. Without it, single-point commands print plain text and sweeps print CSV.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// More diagnostics on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Suppress progress output.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Linear gain and coupling coefficients of the atomic medium.
    Xi,
    /// Steady-state intracavity intensities with their stability.
    Roots {
        #[arg(long, default_value = "rwa")]
        frame: Frame,
        /// Drive ratio for the coupled frame (defaults to `cavity.mu`, else 1).
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Branches and turning points of the coupled steady state versus drive power.
    Hysteresis {
        #[arg(long, default_value = "beyond-rwa")]
        frame: Frame,
        /// Lower end of the power range (W unless a unit is given).
        #[arg(long, default_value = "0")]
        p_min: String,
        #[arg(long)]
        p_max: String,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Detuning; defaults to `cavity.delta01`.
        #[arg(long, allow_hyphen_values = true)]
        delta0: Option<String>,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Logarithmic negativity of the two mirrors.
    Entangle {
        /// Use the diffusion entries exactly as originally printed.
        #[arg(long = "paper-literal-D")]
        paper_literal_d: bool,
    },
    /// Grid sweep with one of the built-in evaluators.
    Sweep {
        #[arg(long, value_parser = ["bistability", "entanglement", "xi-table"])]
        evaluator: String,
        /// `PATH=START..END/COUNT[/log]`, e.g. `P1=0mW..100mW/40`. Repeat for a second axis.
        #[arg(long = "axis", required = true, allow_hyphen_values = true)]
        axes: Vec<String>,
        #[arg(long, default_value = "rwa")]
        frame: Frame,
        #[arg(long)]
        mu: Option<f64>,
        /// Seed-grid points per axis for coupled root finding.
        #[arg(long, default_value_t = 500)]
        scan_points: usize,
        #[arg(long = "paper-literal-D")]
        paper_literal_d: bool,
    },
    /// List the built-in parameter sets.
    Presets,
}

fn load(common: &Common) -> Result<SystemParams, Error> {
    let mut b = match &common.preset {
        Some(name) => ParamBuilder::from_preset(name)?,
        None => ParamBuilder::new(),
    };
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        b.apply_config_text(&text)?;
    }
    for o in &common.overrides {
        b.set_override(o)?;
    }
    Ok(b.build()?)
}

fn quantity(text: &str) -> Result<f64, Error> {
    Ok(parse_quantity(text)?.0)
}

fn parse_axis(text: &str) -> Result<Axis, Error> {
    let bad = |why: &str| Error::Spec(format!("bad axis `{text}`: {why} (expected PATH=START..END/COUNT[/log])"));
    let (path, rest) = text.split_once('=').ok_or_else(|| bad("missing `=`"))?;
    let mut parts = rest.split('/');
    let range = parts.next().ok_or_else(|| bad("missing range"))?;
    let (start, end) = range.split_once("..").ok_or_else(|| bad("missing `..`"))?;
    let count = parts
        .next()
        .ok_or_else(|| bad("missing count"))?
        .parse::<usize>()
        .map_err(|_| bad("count is not an integer"))?;
    let scale = match parts.next() {
        None | Some("lin") | Some("linear") => Scale::Linear,
        Some("log") => Scale::Log,
        Some(other) => return Err(bad(&format!("unknown scale `{other}`"))),
    };
    if parts.next().is_some() {
        return Err(bad("trailing fields"));
    }
    Ok(Axis {
        path: path.trim().to_string(),
        start: quantity(start)?,
        end: quantity(end)?,
        count,
        scale,
    })
}

fn emit(common: &Common, text: &str) -> Result<(), Error> {
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => to_stdout(text),
    }
}

/// A closed pipe (`cascade ... | head`) is not an error worth reporting.
fn to_stdout(text: &str) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = &cli.common;
    if common.jobs == 0 {
        return Err(Error::Spec("--jobs must be at least 1".into()));
    }
    match cli.command {
        Command::Presets => {
            let mut text = String::new();
            for name in PRESET_NAMES {
                let p = preset(name)?;
                text.push_str(&format!("{:<6} {}\n", p.name, p.citation));
            }
            emit(common, &text)
        }
        Command::Xi => {
            let p = load(common)?;
            let xi = gain_coefficients(&p.atom)?;
            emit(common, &report::xi(&xi, common.format))
        }
        Command::Roots { frame, mu } => {
            let p = load(common)?;
            let text = match frame {
                Frame::Rwa => {
                    let mut roots = rwa_roots(&p, 1, p.cavity.p1)?;
                    roots.extend(rwa_roots(&p, 2, p.cavity.p2)?);
                    report::rwa_roots(&roots, common.format)
                }
                Frame::BeyondRwa => {
                    let mu = mu.or(p.cavity.mu).unwrap_or(1.0);
                    let roots = coupled_roots(&p, p.cavity.p1, p.cavity.delta01, mu)?;
                    report::coupled_roots(&roots, common.format)
                }
            };
            emit(common, &text)
        }
        Command::Hysteresis {
            frame,
            p_min,
            p_max,
            steps,
            delta0,
            mu,
        } => {
            if frame != Frame::BeyondRwa {
                return Err(Error::Spec(
                    "hysteresis tracing uses the coupled frame; pass --frame beyond-rwa".into(),
                ));
            }
            let p = load(common)?;
            let delta0 = match delta0 {
                Some(d) => quantity(&d)?,
                None => p.cavity.delta01,
            };
            let mu = mu.or(p.cavity.mu).unwrap_or(1.0);
            let range = (quantity(&p_min)?, quantity(&p_max)?);
            let trace = trace_hysteresis(&p, range, steps, delta0, mu)?;
            if common.verbose > 0 {
                eprintln!(
                    "{} branches, {} turning points, topology {}",
                    trace.branches.len(),
                    trace.turning_points.len(),
                    trace.topology
                );
            }
            emit(common, &report::hysteresis(&trace, common.format))
        }
        Command::Entangle { paper_literal_d } => {
            let p = load(common)?;
            let rep = entangle(&p, &EntanglementOptions { paper_literal_d })?;
            if let Some(w) = rep.covariance.as_ref().and_then(|c| c.warning.as_ref()) {
                eprintln!("warning: {w}");
            }
            emit(common, &report::entanglement(&rep, common.format))
        }
        Command::Sweep {
            evaluator,
            axes,
            frame,
            mu,
            scan_points,
            paper_literal_d,
        } => {
            let p = load(common)?;
            let evaluator = match evaluator.as_str() {
                "bistability" => Evaluator::Bistability { frame, mu, scan_points },
                "entanglement" => Evaluator::Entanglement { paper_literal_d },
                _ => Evaluator::XiTable,
            };
            let spec = SweepSpec {
                axes: axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?,
                evaluator,
                base: p,
                parallelism: common.jobs,
            };
            let control = RunControl {
                checkpoint: common.out.clone(),
                progress: !common.quiet,
                stop_after: None,
            };
            let result = sweep::run_sweep_with(&spec, &control)?;
            if common.verbose > 0 {
                eprintln!("{} cells in {:.2} s", result.cells.len(), result.elapsed_s);
            }
            let format = common.format.unwrap_or(Format::Csv);
            match &common.out {
                Some(path) => sweep::write_result(&result, path, format),
                None => {
                    let text = match format {
                        Format::Csv => sweep::to_csv(&result),
                        Format::Json => sweep::to_json(&result),
                    };
                    to_stdout(&text)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
