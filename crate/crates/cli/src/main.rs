//! `tnt`: terrain generation, data collection, training, traversability
//! maps, planning and benchmarking from the command line.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tnt::bench::PlannerVariant;
use tnt::config::Config;
use tnt::dynamics::RecordKind;
use tnt::error::{Result, TntError};

use commands::{parse_point, Ctx};

#[derive(Parser, Debug)]
#[command(name = "tnt", version, about = "Traversability maps and planning on vertically challenging terrain")]
struct Cli {
    /// Plain-text `key = value` settings.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for all products; created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate elevation maps: terrain_NNN.emap, terrain_NNN.pgm.
    GenTerrain,
    /// Drive the simulator over maps: velocity.tntd, pose.tntd, collect.txt.
    /// Without maps, generates the training set from the seed.
    Collect {
        maps: Vec<PathBuf>,
    },
    /// Train the velocity regressor: velocity.tntm, velocity_loss.csv.
    TrainVel {
        #[arg(long)]
        data: PathBuf,
    },
    /// Train the pose regressor: pose.tntm, pose_loss.csv.
    TrainPose {
        #[arg(long)]
        data: PathBuf,
    },
    /// Label maps by per-patch evaluation: labels_NNN.tmap, labels_NNN.ppm
    /// (and labels_NNN.emap when the maps are generated from the seed).
    BuildLabels {
        #[arg(long)]
        vel: PathBuf,
        #[arg(long)]
        pose: PathBuf,
        maps: Vec<PathBuf>,
    },
    /// Train the map encoder on (map, labels) pairs: encoder.tntm, encoder_loss.csv.
    TrainEncoder {
        #[arg(long, num_args = 1.., required = true)]
        maps: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        labels: Vec<PathBuf>,
    },
    /// Reconstruct a traversability map: tm.tmap, tm.ppm.
    InferMap {
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Scale channel weights by this velocity regressor (with --pose).
        #[arg(long)]
        vel: Option<PathBuf>,
        #[arg(long)]
        pose: Option<PathBuf>,
    },
    /// A* on the pooled traversability grid: path.csv, path.ppm.
    PlanAstar {
        #[arg(long)]
        tmap: PathBuf,
        /// Elevation map used to fill in z, roll and pitch of the waypoints.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_name = "X,Y")]
        start: String,
        #[arg(long, value_name = "X,Y")]
        goal: String,
    },
    /// Closed-loop MPPI run: trajectory.csv, trajectory.ppm, run.txt.
    PlanMppi {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_name = "X,Y[,YAW]")]
        start: String,
        #[arg(long, value_name = "X,Y")]
        goal: String,
        /// tnt, tal_like, wmvct_like or astar.
        #[arg(long, default_value = "tnt")]
        planner: String,
        #[arg(long)]
        encoder: Option<PathBuf>,
        #[arg(long)]
        vel: Option<PathBuf>,
        #[arg(long)]
        pose: Option<PathBuf>,
    },
    /// Planner benchmark: summary.csv, summary.txt, runs.csv,
    /// trajectory_000_<planner>.csv, bench.ppm. Without --encoder the whole
    /// pipeline is trained from the seed first and its models are saved too.
    Bench {
        #[arg(long)]
        encoder: Option<PathBuf>,
        #[arg(long)]
        vel: Option<PathBuf>,
        #[arg(long)]
        pose: Option<PathBuf>,
    },
    /// Heatmap of an elevation or traversability map with an optional
    /// trajectory CSV overlay: render.ppm.
    Render {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        tmap: Option<PathBuf>,
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let settings = settings::load(&config)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| TntError::spec(format!("cannot create output directory {}: {e}", cli.out.display())))?;
    let ctx = Ctx {
        settings,
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::GenTerrain => commands::gen_terrain(&ctx),
        Command::Collect { maps } => commands::collect(&ctx, &maps),
        Command::TrainVel { data } => commands::train_regressor(&ctx, &data, RecordKind::Velocity),
        Command::TrainPose { data } => commands::train_regressor(&ctx, &data, RecordKind::Pose),
        Command::BuildLabels { vel, pose, maps } => commands::build_labels(&ctx, &vel, &pose, &maps),
        Command::TrainEncoder { maps, labels } => commands::train_encoder_cmd(&ctx, &maps, &labels),
        Command::InferMap { encoder, map, vel, pose } => {
            commands::infer(&ctx, &encoder, &map, vel.as_deref(), pose.as_deref())
        }
        Command::PlanAstar { tmap, map, start, goal } => {
            commands::plan_astar(&ctx, &tmap, map.as_deref(), parse_point(&start)?, parse_point(&goal)?)
        }
        Command::PlanMppi {
            map,
            start,
            goal,
            planner,
            encoder,
            vel,
            pose,
        } => commands::plan_mppi(
            &ctx,
            &map,
            planner.parse::<PlannerVariant>()?,
            encoder.as_deref(),
            vel.as_deref(),
            pose.as_deref(),
            parse_point(&start)?,
            parse_point(&goal)?,
        ),
        Command::Bench { encoder, vel, pose } => {
            commands::bench(&ctx, encoder.as_deref(), vel.as_deref(), pose.as_deref())
        }
        Command::Render { map, tmap, path } => {
            commands::render(&ctx, map.as_deref(), tmap.as_deref(), path.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_spec() { 2 } else { 3 })
        }
    }
}
