//! `crvolume`: dilogarithms, cross-ratio structures, CR configurations and
//! triangulation volumes from the command line. Every command prints one
//! JSON document with a `"status"` field matching the exit code.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Outcome;

#[derive(Debug, Parser)]
#[command(
    name = "crvolume",
    version,
    about = "Volumes of tetrahedra with cross-ratio structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bloch-Wigner dilogarithm D(z) or the Lobachevsky function.
    #[command(allow_negative_numbers = true)]
    Dilog(DilogArgs),
    /// Volume, branch and angles of one tetrahedron from (z12, z21, z34, z43).
    #[command(allow_negative_numbers = true)]
    Simplex(SimplexArgs),
    /// Invariants and identities of four or five points on S^3.
    Config(ConfigArgs),
    /// Five-point coordinates: derived values, columns and the five-term relation.
    Coords(CoordsArgs),
    /// Triangulation files: validation, volume and Pachner moves.
    #[command(subcommand)]
    Tri(TriCommand),
    /// Seeded sample input files.
    #[command(subcommand)]
    Sample(SampleCommand),
}

#[derive(Debug, Args)]
struct DilogArgs {
    /// Real part of z.
    #[arg(required_unless_present = "lobachevsky")]
    re: Option<f64>,
    /// Imaginary part of z.
    #[arg(required_unless_present = "lobachevsky")]
    im: Option<f64>,
    /// Evaluate the Lobachevsky function at this angle instead.
    #[arg(long, value_name = "THETA", conflicts_with_all = ["re", "im"])]
    lobachevsky: Option<f64>,
}

#[derive(Debug, Args)]
struct SimplexArgs {
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], required = true)]
    z12: Vec<f64>,
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], required = true)]
    z21: Vec<f64>,
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], required = true)]
    z34: Vec<f64>,
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], required = true)]
    z43: Vec<f64>,
    /// Report D(z12) + D(z21) + D(z34) + D(z43).
    #[arg(long)]
    volume: bool,
    /// Report the branch of the hyperbolic variety.
    #[arg(long)]
    classify: bool,
    /// Report arguments and moduli of the twelve invariants.
    #[arg(long)]
    angles: bool,
    #[arg(long, default_value_t = crvolume_core::DEFAULT_TOLERANCE)]
    tol: f64,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Points file: {"points": [{"at": "infinity"} | {"z": [re, im], "t": t}, ...]}.
    #[arg(required_unless_present = "random", conflicts_with = "random")]
    file: Option<PathBuf>,
    /// The twelve invariants (4 points).
    #[arg(long)]
    invariants: bool,
    /// Cartan invariants of the four faces (4 points).
    #[arg(long)]
    cartan: bool,
    /// Volume D(z12) + D(z21) + D(z34) + D(z43) (4 points).
    #[arg(long)]
    volume: bool,
    /// CR equations, angle and modulus equations (4 points).
    #[arg(long)]
    check_cr: bool,
    /// Coboundary identity for the volume (4 points).
    #[arg(long)]
    check_coboundary: bool,
    /// Five-term relation and compatibility (5 points).
    #[arg(long)]
    five_term: bool,
    #[arg(long, default_value_t = crvolume_core::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Check N random configurations instead of a file.
    #[arg(long, value_name = "N")]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CoordsArgs {
    /// Coordinates file: {"x": [[re, im] x4], "y1": [re, im], "y2": .., "y4": ..}.
    #[arg(required_unless_present = "random", conflicts_with = "random")]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = crvolume_core::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Check N random coordinate tuples instead of a file.
    #[arg(long, value_name = "N")]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum TriCommand {
    /// Edge and face compatibility.
    Validate(TriArgs),
    /// Signed total volume.
    Volume(TriArgs),
    /// Replace the two tetrahedra on a face by three.
    Pachner23 {
        #[command(flatten)]
        common: TriArgs,
        /// The shared face, as three comma-separated labels.
        #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
        face: Vec<String>,
    },
    /// Replace the three tetrahedra around an edge by two.
    Pachner32 {
        #[command(flatten)]
        common: TriArgs,
        /// The edge, as two comma-separated labels.
        #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
        edge: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct TriArgs {
    file: PathBuf,
    #[arg(long, default_value_t = crvolume_core::DEFAULT_TOLERANCE)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
enum SampleCommand {
    /// Random generic points on S^3.
    Points {
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(3..=5))]
        count: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Two tetrahedra [1234], [2345] sharing a face.
    Pair {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use random five-point coordinates instead of points on S^3.
        #[arg(long = "abstract")]
        abstract_: bool,
    },
    /// A tetrahedron glued to its mirror image along all four faces.
    Double {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.render().to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return Outcome::input_error(first.to_string()).emit();
        }
    };
    run(cli.command).emit()
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Dilog(a) => commands::dilog(a.re, a.im, a.lobachevsky),
        Command::Simplex(a) => commands::simplex(&commands::SimplexRequest {
            params: [a.z12, a.z21, a.z34, a.z43],
            volume: a.volume,
            classify: a.classify,
            angles: a.angles,
            tol: a.tol,
        }),
        Command::Config(a) => {
            let checks = commands::ConfigChecks {
                invariants: a.invariants,
                cartan: a.cartan,
                volume: a.volume,
                check_cr: a.check_cr,
                check_coboundary: a.check_coboundary,
                five_term: a.five_term,
                tol: a.tol,
            };
            match (a.file, a.random) {
                (Some(path), _) => commands::config_file(&path, checks),
                (None, Some(n)) => commands::config_random(n, a.seed, checks),
                (None, None) => Outcome::input_error("a points file or --random is required"),
            }
        }
        Command::Coords(a) => match (a.file, a.random) {
            (Some(path), _) => commands::coords_file(&path, a.tol),
            (None, Some(n)) => commands::coords_random(n, a.seed, a.tol),
            (None, None) => Outcome::input_error("a coordinates file or --random is required"),
        },
        Command::Tri(t) => match t {
            TriCommand::Validate(a) => commands::tri_validate(&a.file, a.tol),
            TriCommand::Volume(a) => commands::tri_volume(&a.file),
            TriCommand::Pachner23 { common, face } => {
                commands::tri_pachner23(&common.file, &face, common.tol)
            }
            TriCommand::Pachner32 { common, edge } => {
                commands::tri_pachner32(&common.file, &edge, common.tol)
            }
        },
        Command::Sample(s) => match s {
            SampleCommand::Points { count, seed } => commands::sample_points(count as usize, seed),
            SampleCommand::Pair { seed, abstract_ } => commands::sample_pair(seed, abstract_),
            SampleCommand::Double { seed } => commands::sample_double(seed),
        },
    }
}
