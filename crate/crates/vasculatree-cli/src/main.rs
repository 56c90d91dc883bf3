//! vasculatree: point-cloud to segment-tree pipelines from the shell.
//!
//! Subcommands: `stats` summarizes a point cloud, `prune` runs a
//! configured filter/rewrite pipeline, `render` plots a tree file, and
//! `export` writes the solver vessel table. The `VASCULATREE_LOG`
//! environment variable sets the log level.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error,
//! 3 empty-result pipeline.

mod commands;
mod errors;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vasculatree::geometry::Axis;
use vasculatree::pipeline::{ProjectionKind, StyleKind};
use vasculatree::project::Plane;

use crate::errors::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "vasculatree",
    version,
    about = "Convert vascular point clouds into simplified, connected segment trees"
)]
struct Cli {
    /// Worker threads for per-segment computation (0 = automatic).
    /// Results are independent of the thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summarize a point cloud: node kinds, segments, generations,
    /// Strahler order, radius range, and the generation profile.
    Stats {
        /// Point-cloud file (.csv or .json).
        input: PathBuf,
        /// Input format; inferred from the extension when omitted.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Axis for the default root policy (terminal with maximal
        /// coordinate).
        #[arg(long, value_enum, default_value_t = AxisArg::Z)]
        root_axis: AxisArg,
        /// Use this terminal node as the root instead of the axis rule.
        #[arg(long)]
        root_node: Option<u64>,
    },
    /// Run a configured pipeline: ingest, decompose, filter/rewrite,
    /// and write the requested outputs with an audit report.
    Prune {
        /// Pipeline config JSON.
        #[arg(long)]
        config: PathBuf,
    },
    /// Project a tree file to 2D and render SVG and/or CSV plots.
    Render {
        /// Tree JSON file.
        tree: PathBuf,
        #[arg(long, value_enum, default_value_t = ProjectionArg::Mercator)]
        projection: ProjectionArg,
        #[arg(long, value_enum, default_value_t = StyleArg::Generation)]
        style: StyleArg,
        /// SVG output path.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// CSV output path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Plane for the lateral projection.
        #[arg(long, value_enum, default_value_t = PlaneArg::Xz)]
        plane: PlaneArg,
        /// Mercator center as `x,y,z` (default: node centroid).
        #[arg(long)]
        center: Option<String>,
        /// Mercator pole axis.
        #[arg(long, value_enum, default_value_t = AxisArg::Z)]
        pole: AxisArg,
        /// Mercator latitude clamp in degrees.
        #[arg(long, default_value_t = 85.0)]
        lat_clamp: f64,
    },
    /// Export a tree file as a vessel table for 1D flow solvers.
    Export {
        /// Tree JSON file.
        tree: PathBuf,
        /// Export format; only `solver` is defined.
        #[arg(long, value_enum, default_value_t = ExportFormatArg::Solver)]
        format: ExportFormatArg,
        /// Output path.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProjectionArg {
    Lateral,
    Mercator,
}

impl From<ProjectionArg> for ProjectionKind {
    fn from(p: ProjectionArg) -> Self {
        match p {
            ProjectionArg::Lateral => ProjectionKind::Lateral,
            ProjectionArg::Mercator => ProjectionKind::Mercator,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StyleArg {
    Generation,
    Strahler,
}

impl From<StyleArg> for StyleKind {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Generation => StyleKind::Generation,
            StyleArg::Strahler => StyleKind::Strahler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlaneArg {
    Xy,
    Xz,
    Yz,
}

impl From<PlaneArg> for Plane {
    fn from(p: PlaneArg) -> Self {
        match p {
            PlaneArg::Xy => Plane::Xy,
            PlaneArg::Xz => Plane::Xz,
            PlaneArg::Yz => Plane::Yz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportFormatArg {
    Solver,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, not usage errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    env_logger::Builder::from_env(env_logger::Env::new().filter("VASCULATREE_LOG")).init();

    if cli.threads > 0 {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: could not configure {} threads: {err}", cli.threads);
            return ExitCode::from(1);
        }
    }

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Stats {
            input,
            format,
            root_axis,
            root_node,
        } => commands::stats(&input, format, root_axis.into(), root_node),
        Command::Prune { config } => commands::prune(&config),
        Command::Render {
            tree,
            projection,
            style,
            output,
            csv,
            plane,
            center,
            pole,
            lat_clamp,
        } => commands::render(&commands::RenderArgs {
            tree,
            projection: projection.into(),
            style: style.into(),
            output,
            csv,
            plane: plane.into(),
            center,
            pole: pole.into(),
            lat_clamp,
        }),
        Command::Export {
            tree,
            format: ExportFormatArg::Solver,
            output,
        } => commands::export_solver(&tree, &output),
    }
}
