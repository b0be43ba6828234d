use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ms_transport::scenarios::{make_plasma, make_scenario, ScenarioName};
use ms_transport::{DtPolicy, ReactionMatrix, ScenarioConfig, Splitting};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "ms-transport",
    version,
    about = "Ternary Maxwell-Stefan transport by operator splitting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write snapshots and a manifest.
    Run(RunArgs),
    /// Measure temporal convergence over a dt ladder.
    Converge(ConvergeArgs),
    /// Randomised audit of the face flux solver.
    FluxCheck(FluxCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplittingArg {
    Lie,
    Strang,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtArg {
    Auto,
    Fixed(f64),
}

fn parse_scenario(s: &str) -> Result<ScenarioName, String> {
    s.parse().map_err(|e: ms_transport::Error| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a nonnegative number, got {s}"))
    }
}

fn parse_dt(s: &str) -> Result<DtArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        Ok(DtArg::Auto)
    } else {
        parse_positive(s).map(DtArg::Fixed)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_parser = parse_scenario, default_value = "semi-degenerate")]
    pub scenario: ScenarioName,
    #[arg(long, value_enum, default_value = "lie")]
    pub splitting: SplittingArg,
    /// Maximum iterations for iterative splitting.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub iters: u64,
    #[arg(long, value_parser = parse_nonnegative, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    /// Override the convection velocity.
    #[arg(long, allow_hyphen_values = true)]
    pub velocity: Option<f64>,
    /// Ionisation rate H2 -> H2+.
    #[arg(long, value_parser = parse_nonnegative, allow_hyphen_values = true)]
    pub lambda1: Option<f64>,
    /// Dissociation rate H2 -> 2H.
    #[arg(long, value_parser = parse_nonnegative, allow_hyphen_values = true)]
    pub lambda2: Option<f64>,
    /// Number of grid cells.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub cells: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Macro time step, or `auto` for the explicit stability bound.
    #[arg(long, value_parser = parse_dt, default_value = "auto", allow_hyphen_values = true)]
    pub dt: DtArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Snapshots written, including t = 0 and t_end.
    #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u64).range(1..))]
    pub snapshots: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Strictly decreasing steps, comma separated, each dividing t_end.
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_positive, allow_hyphen_values = true)]
    pub dt_ladder: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FluxCheckArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

pub fn parse_args<I, T>(argv: I) -> Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv).map(|c| c.command)
}

impl ScenarioArgs {
    pub fn resolve(&self) -> ms_transport::Result<ScenarioConfig> {
        let mut cfg = match self.scenario {
            ScenarioName::PlasmaWithReactions => {
                make_plasma(self.lambda1.unwrap_or(0.0), self.lambda2.unwrap_or(0.0))?.cfg
            }
            other => {
                let mut cfg = make_scenario(other).cfg;
                if self.lambda1.is_some() || self.lambda2.is_some() {
                    cfg.reactions = ReactionMatrix::from_channels(
                        self.lambda1.unwrap_or(0.0),
                        self.lambda2.unwrap_or(0.0),
                    )?;
                }
                cfg
            }
        };
        cfg.splitting = match self.splitting {
            SplittingArg::Lie => Splitting::Lie,
            SplittingArg::Strang => Splitting::Strang,
            SplittingArg::Iterative => Splitting::Iterative {
                iterations: self.iters as usize,
            },
        };
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if let Some(v) = self.velocity {
            cfg.velocity = v;
        }
        if let Some(n) = self.cells {
            cfg.grid =
                ms_transport::Grid1D::new(n as usize, cfg.grid.domain_lo(), cfg.grid.domain_hi())?;
        }
        Ok(cfg)
    }
}

impl RunArgs {
    pub fn resolve(&self) -> ms_transport::Result<ScenarioConfig> {
        let mut cfg = self.scenario.resolve()?;
        if let DtArg::Fixed(dt) = self.dt {
            cfg.dt_policy = DtPolicy::Fixed { dt };
        }
        cfg.output.snapshots = self.snapshots as usize;
        cfg.output.dir = Some(self.out.display().to_string());
        cfg.validate()?;
        Ok(cfg)
    }
}
