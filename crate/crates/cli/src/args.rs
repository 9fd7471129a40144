//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use ppgl_core::envs::EnvName;
use ppgl_core::learn::Algo;
use ppgl_core::nets::PolicyKind;

#[derive(Parser)]
#[command(
    name = "ppgl",
    version,
    about = "Train and evaluate PPO/PPG policies (MLP or LSTM) on lightweight control tasks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train a policy; writes resolved.cfg, metrics.csv, checkpoints, eval.json
    Train(TrainArgs),
    /// Evaluate a checkpoint over full episodes
    Eval(EvalArgs),
    /// Render a reward curve SVG from a metrics CSV
    Plot(PlotArgs),
    /// Tabulate final eval rewards across run directories
    Report(ReportArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Environment: cartpole, reach, feeding, bathing, scratching
    #[arg(long)]
    pub env: Option<EnvName>,
    /// Algorithm: ppo, ppg
    #[arg(long)]
    pub algo: Option<Algo>,
    /// Policy architecture: mlp, lstm
    #[arg(long)]
    pub policy: Option<PolicyKind>,
    /// Total environment timesteps
    #[arg(long = "timesteps")]
    pub timesteps: Option<u64>,
    /// Run seed (falls back to config file, then $PPGL_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flat key=value config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: runs/<env>_<algo>_<policy>_s<seed>)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep collection-time recurrent states across epochs (staleness repro)
    #[arg(long)]
    pub stale_hidden: bool,
    /// Resume from a checkpoint written by the same resolved config
    #[arg(long)]
    pub resume: Option<PathBuf>,

    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lam: Option<f64>,
    #[arg(long)]
    pub clip_eps: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "minibatch")]
    pub minibatch_size: Option<usize>,
    #[arg(long)]
    pub value_coef: Option<f64>,
    #[arg(long)]
    pub entropy_coef: Option<f64>,
    #[arg(long)]
    pub max_grad_norm: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub chunk_len: Option<usize>,
    #[arg(long = "n-envs")]
    pub parallel_envs: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    #[arg(long)]
    pub lstm_hidden: Option<usize>,
    #[arg(long)]
    pub eval_episodes: Option<usize>,
    /// Collect sequentially even with multiple envs
    #[arg(long)]
    pub no_parallel_collect: bool,
    #[arg(long)]
    pub n_pi: Option<usize>,
    #[arg(long)]
    pub aux_epochs: Option<usize>,
    #[arg(long)]
    pub beta_clone: Option<f64>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Checkpoint file to load parameters from
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Environment: cartpole, reach, feeding, bathing, scratching
    #[arg(long)]
    pub env: EnvName,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    /// Act with the distribution mean instead of sampling
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report as JSON to this path
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlotArgs {
    /// metrics.csv produced by a train run
    #[arg(long)]
    pub log: PathBuf,
    /// Output SVG path
    #[arg(long)]
    pub out: PathBuf,
    /// Rolling-mean window over updates
    #[arg(long, default_value_t = 10)]
    pub window: usize,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Run directories holding final eval.json reports
    pub runs: Vec<PathBuf>,
}
