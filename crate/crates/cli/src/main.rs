use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use graspfit::fixtures;
use graspfit::io::{
    export_posed_gripper, load_gripper, load_object, save_cloud, save_gripper, write_result, ResultFile,
};
use graspfit::isf::write_trace_csv;
use graspfit::planner::{plan, write_log_csv, PlanError, PlannerConfig};

const THREADS_VAR: &str = "GRASPFIT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "graspfit", version, about = "Grasp planning by iterative surface fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan grasps for an object cloud and write a result file.
    Plan(PlanArgs),
    /// Write an analytic test cloud with exact normals.
    Fixture(FixtureArgs),
    /// Write the bundled parallel-jaw gripper model into a directory.
    Gripper {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
struct PlanArgs {
    /// Object cloud (.ply or .obj).
    #[arg(long)]
    object: PathBuf,
    /// Gripper model file (.json).
    #[arg(long)]
    gripper: PathBuf,
    /// Result file to write (.json).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of ISF samples.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    /// Number of k-means centers.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    centers: Option<u64>,
    /// Weight of the normal-alignment term.
    #[arg(long)]
    alpha: Option<f64>,
    /// Collision penalty on the regret.
    #[arg(long)]
    gamma: Option<f64>,
    /// Pyramid depth.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=30))]
    levels: Option<u64>,
    /// Allowed box penetration before a pose collides (m).
    #[arg(long)]
    penetration: Option<f64>,
    /// Evaluate this many samples per regret snapshot, in parallel.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    batch: Option<u64>,
    /// Write posed-gripper PLYs of the best collision-free grasps here.
    #[arg(long)]
    export_poses: Option<PathBuf>,
    /// Number of grasps to export.
    #[arg(long, default_value_t = 5)]
    top: usize,
    /// Write the ISF error trace of the best grasp as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the per-sample planning log as CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Include wall-clock timing in the result file.
    #[arg(long)]
    timing: bool,
    /// Include rotation matrices next to quaternions.
    #[arg(long)]
    rotation_matrix: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FixtureKind {
    Cylinder,
    PlanePair,
    Sphere,
    BlobScene,
}

#[derive(clap::Args, Debug)]
struct FixtureArgs {
    kind: FixtureKind,
    /// Output cloud (.ply).
    #[arg(long)]
    out: PathBuf,
    /// Cylinder or sphere radius (m).
    #[arg(long)]
    radius: Option<f64>,
    /// Cylinder height (m).
    #[arg(long)]
    height: Option<f64>,
    /// Point count (per face for plane-pair, per object for blob-scene).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    points: Option<u64>,
    /// Plane-pair separation (m).
    #[arg(long)]
    gap: Option<f64>,
    /// Plane-pair face side length (m).
    #[arg(long)]
    side: Option<f64>,
    /// Number of cylinders in the blob scene.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: Option<u64>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn error(message: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::error(format!("{}: {e}", path.display())))
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Failure::error(format!(
                "{THREADS_VAR} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn run_plan(args: &PlanArgs) -> Result<(), Failure> {
    let object = load_object(&args.object).map_err(Failure::error)?;
    let gripper = load_gripper(&args.gripper).map_err(Failure::error)?;
    let mut cfg = PlannerConfig::default();
    if let Some(v) = args.samples {
        cfg.samples = v as usize;
    }
    if let Some(v) = args.centers {
        cfg.centers = v as usize;
    }
    if let Some(v) = args.alpha {
        cfg.isf.ipfo.alpha = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.levels {
        cfg.isf.levels = v as usize;
    }
    if let Some(v) = args.penetration {
        cfg.penetration = v;
    }
    if let Some(v) = args.batch {
        cfg.batch_size = v as usize;
    }
    cfg.threads = threads_from_env()?;

    log::info!(
        "planning on {} points with K = {}, K_s = {}, seed {}",
        object.len(),
        cfg.centers,
        cfg.samples,
        args.seed
    );
    let report = plan(&object, &gripper, &cfg, args.seed).map_err(Failure::error)?;
    write_result(
        &args.out,
        &ResultFile::from_report(&report, &cfg, args.seed, args.rotation_matrix, args.timing),
    )
    .map_err(Failure::error)?;

    if let Some(path) = &args.log {
        write_log_csv(&report.log, create(path)?).map_err(|e| Failure::error(format!("{}: {e}", path.display())))?;
    }
    if let (Some(path), Some(best)) = (&args.trace, report.candidates().first()) {
        write_trace_csv(&best.trace, create(path)?).map_err(|e| Failure::error(format!("{}: {e}", path.display())))?;
    }
    if let Some(dir) = &args.export_poses {
        fs::create_dir_all(dir).map_err(|e| Failure::error(format!("{}: {e}", dir.display())))?;
        for (rank, c) in report
            .candidates()
            .iter()
            .filter(|c| c.collision_free)
            .take(args.top)
            .enumerate()
        {
            export_posed_gripper(&dir.join(format!("grasp_{rank}.ply")), &gripper, &c.motion, c.width)
                .map_err(Failure::error)?;
        }
    }

    let free = report.collision_free_count();
    eprintln!("{free} of {} samples collision-free", report.log.len());
    match report.best() {
        Ok(best) => {
            eprintln!("best fitting error {:e} at width {} m", best.fitting_error, best.width);
            Ok(())
        }
        Err(e @ PlanError::NoFeasibleGrasp { .. }) => Err(Failure {
            code: 2,
            message: e.to_string(),
        }),
        Err(e) => Err(Failure::error(e)),
    }
}

fn run_fixture(args: &FixtureArgs) -> Result<(), Failure> {
    let points = args.points.map(|v| v as usize);
    let cloud = match args.kind {
        FixtureKind::Cylinder => fixtures::cylinder(
            args.radius.unwrap_or(0.01),
            args.height.unwrap_or(0.06),
            points.unwrap_or(2000),
        ),
        FixtureKind::PlanePair => fixtures::plane_pair(
            args.gap.unwrap_or(0.02),
            args.side.unwrap_or(0.05),
            points.unwrap_or(400),
        ),
        FixtureKind::Sphere => fixtures::sphere(args.radius.unwrap_or(0.02), points.unwrap_or(2000)),
        FixtureKind::BlobScene => fixtures::blob_scene(args.count.map_or(3, |v| v as usize), points.unwrap_or(700)),
    };
    save_cloud(&args.out, &cloud).map_err(Failure::error)?;
    eprintln!("wrote {} points to {}", cloud.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Plan(args) => run_plan(args),
        Command::Fixture(args) => run_fixture(args),
        Command::Gripper { out } => save_gripper(out, &fixtures::parallel_jaw_gripper(), "1.0")
            .map(|p| eprintln!("wrote {}", p.display()))
            .map_err(Failure::error),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
