use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regimekit::estimate::Level;
use regimekit::select::{LagTarget, RegimeRule, DEFAULT_MAX_LAG};
use regimekit::TransitionMode;

#[derive(Parser, Debug)]
#[command(name = "regimekit", version, about = "Two-regime Markov-switching regressions on quarterly CSV data")]
pub struct Cli {
    /// Worker threads for restarts and replications (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Directory for artifacts. REGIMEKIT_OUT takes precedence when set.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Summary statistics and ADF tests per variable.
    Describe(DescribeArgs),
    /// Estimate one model and write fit.json, table.md, probs.csv, probs.svg.
    Fit(FitArgs),
    /// Surge episodes and durations from a fit.json artifact.
    Regimes(RegimesArgs),
    /// Draw one dataset from a DGP file.
    Simulate(SimulateArgs),
    /// Repeated simulate-and-fit parameter recovery study.
    Recover(RecoverArgs),
    /// Lag selection for one variable.
    Lagsearch(LagsearchArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    #[arg(long)]
    pub csv: PathBuf,

    #[arg(long, default_value = "period")]
    pub date_column: String,
}

#[derive(Args, Debug)]
pub struct FitControl {
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Comma-separated variables; all numeric columns when omitted.
    #[arg(long, value_delimiter = ',')]
    pub vars: Vec<String>,

    /// Largest ADF augmentation lag considered.
    #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
    pub max_lag: usize,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Model specification JSON.
    #[arg(long)]
    pub spec: PathBuf,

    /// Dependent variable column.
    #[arg(long, default_value = "pd")]
    pub dep: String,

    /// Override the transition mode in the spec file.
    #[arg(long)]
    pub mode: Option<Mode>,

    /// Column heading in table.md (default: spec file stem).
    #[arg(long)]
    pub name: Option<String>,

    #[command(flatten)]
    pub control: FitControl,
}

#[derive(Args, Debug)]
pub struct RegimesArgs {
    /// A fit.json written by `fit`.
    pub fit: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// DGP description JSON.
    #[arg(long)]
    pub dgp: PathBuf,

    /// Overrides the seed in the DGP file.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value = "period")]
    pub date_column: String,

    /// Output file stem.
    #[arg(long, default_value = "simulated")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct RecoverArgs {
    #[arg(long)]
    pub dgp: PathBuf,

    #[arg(long)]
    pub reps: usize,

    /// Overrides the seed in the DGP file.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
}

#[derive(Args, Debug)]
pub struct LagsearchArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Base model the candidate lag is added to.
    #[arg(long)]
    pub spec: PathBuf,

    #[arg(long, default_value = "pd")]
    pub dep: String,

    #[arg(long)]
    pub var: String,

    #[arg(long, value_enum, default_value_t = Rule::Significance)]
    pub rule: Rule,

    /// Where the variable enters (aic rule only).
    #[arg(long, value_enum, default_value_t = Target::Regression)]
    pub target: Target,

    /// Regimes that must be significant (significance rule only).
    #[arg(long, value_enum, default_value_t = Regimes::Either)]
    pub regimes: Regimes,

    #[arg(long, value_enum, default_value_t = LevelArg::Ten)]
    pub level: LevelArg,

    #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
    pub max_lag: usize,

    #[command(flatten)]
    pub control: FitControl,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Mode {
    Ftp,
    Tvtp,
}

impl From<Mode> for TransitionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Ftp => TransitionMode::Fixed,
            Mode::Tvtp => TransitionMode::TimeVarying,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Smallest significant lag.
    Significance,
    /// AIC-minimising lag.
    Aic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Target {
    Regression,
    Transition,
    Both,
}

impl From<Target> for LagTarget {
    fn from(t: Target) -> Self {
        match t {
            Target::Regression => LagTarget::Regression,
            Target::Transition => LagTarget::Transition,
            Target::Both => LagTarget::Both,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Regimes {
    Either,
    Both,
}

impl From<Regimes> for RegimeRule {
    fn from(r: Regimes) -> Self {
        match r {
            Regimes::Either => RegimeRule::Either,
            Regimes::Both => RegimeRule::Both,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum LevelArg {
    #[value(name = "10")]
    Ten,
    #[value(name = "5")]
    Five,
    #[value(name = "1")]
    One,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Ten => Level::Ten,
            LevelArg::Five => Level::Five,
            LevelArg::One => Level::One,
        }
    }
}
