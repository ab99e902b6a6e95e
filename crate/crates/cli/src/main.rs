mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::{parse_ivec, parse_mesh, parse_vec, Mesh};

#[derive(Parser, Debug)]
#[command(name = "gerbe", version, about = "Cocycles, Fock-space anomalies, monopole curvature and gerbe integrals on tori")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 20240)]
    pub seed: u64,
    /// Momentum cutoff Λ (each command has its own default).
    #[arg(long, global = true)]
    pub cutoff: Option<i64>,
    /// Fock-space margin below the cutoff.
    #[arg(long, global = true)]
    pub margin: Option<i64>,
    /// Quadrature or plaquette mesh, as NxM.
    #[arg(long, global = true, value_parser = parse_mesh)]
    pub mesh: Option<Mesh>,
    /// Write the JSON report here (timings go to <out>.meta.json).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Groupoid 2-cocycles on ℝ³ × ℤ³.
    #[command(subcommand)]
    Cocycle(CocycleCmd),
    /// Projective Fock representation of large gauge transformations.
    #[command(subcommand)]
    Fock(FockCmd),
    /// Spectral data of Dirac operators and vacuum curvature.
    #[command(subcommand)]
    Dirac(DiracCmd),
    /// Exact index forms.
    #[command(subcommand)]
    Forms(FormsCmd),
    /// The SU(2) gerbe 2-form.
    #[command(subcommand)]
    Lie(LieCmd),
    /// Run the acceptance criteria.
    VerifyAll {
        /// Reduced sample counts and cutoffs.
        #[arg(long)]
        quick: bool,
        /// Run only these criteria (id or name).
        #[arg(long = "only")]
        only: Vec<String>,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct SourceArgs {
    /// Cocycle source: coboundary, fock, levi-civita, model-rep, tensor.
    #[arg(long)]
    pub source: Option<String>,
    /// Tensor file: JSON array of 27 integers, row-major (j,k,l).
    #[arg(long)]
    pub tensor: Option<PathBuf>,
    #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
    pub alpha: Option<[i64; 3]>,
    #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
    pub beta: Option<[i64; 3]>,
    #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
    pub p: Option<[i64; 3]>,
    #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
    pub q: Option<[i64; 3]>,
    /// Multiple of the generator for the levi-civita source.
    #[arg(long, allow_hyphen_values = true)]
    pub scale: Option<i64>,
}

#[derive(Subcommand, Debug)]
pub enum CocycleCmd {
    /// Dixmier–Douady class of a cocycle.
    Classify(SourceArgs),
    /// Randomized check of the cocycle identity.
    Check {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Cocycle of the l2 model representation for (p, q).
    ModelRep {
        #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
        p: [i64; 3],
        #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
        q: [i64; 3],
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true, default_value = "0.3,0.1,0.7")]
        a: [f64; 3],
    },
}

#[derive(Subcommand, Debug)]
pub enum FockCmd {
    /// Extract the cocycle of g(n) for a twist (alpha, beta).
    Extension {
        #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
        alpha: [i64; 3],
        #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
        beta: [i64; 3],
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true, default_value = "0.3,0.1,0.7")]
        a: [f64; 3],
    },
}

#[derive(Subcommand, Debug)]
pub enum DiracCmd {
    /// Spectral flow of the 1D operators along a straight path.
    SpectralFlow {
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        from: [f64; 3],
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        to: [f64; 3],
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        level: f64,
    },
    /// 1D cocycle from the conditional trace.
    CondTrace {
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
    },
    /// Berry curvature of b·σ against the monopole form.
    Monopole {
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true, default_value = "0.4,-0.3,0.8")]
        b: [f64; 3],
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
    },
    /// Plaquette Chern number of a band field on a sphere.
    SphereChern {
        /// monopole-band or lattice-vacuum.
        #[arg(long, default_value = "monopole-band")]
        field: String,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true, default_value = "0,0,0")]
        center: [f64; 3],
        #[arg(long, default_value_t = 0.4)]
        radius: f64,
        #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true, default_value = "0,0,0")]
        momentum: [i64; 3],
        /// Cube radius of the lattice-vacuum field.
        #[arg(long, default_value_t = 1)]
        lattice_radius: i64,
    },
    /// Bare and renormalized curvature partial sums.
    RenormSum {
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true, default_value = "0.3,0.4,0.5")]
        a: [f64; 3],
        /// Comma-separated increasing cutoffs.
        #[arg(long, default_value = "6,8,10,12,14,16")]
        cutoffs: String,
        /// Component jk, e.g. 12.
        #[arg(long, default_value = "12")]
        component: String,
        /// Write the series as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum FormsCmd {
    /// Fiber integral of the degree-6 index form over T³.
    DdClass {
        /// index-form or bare.
        #[arg(long, default_value = "index-form")]
        normalization: String,
    },
    /// Character of a circle-bundle family of 1D operators.
    #[command(name = "chern-1d")]
    Chern1d {
        #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
        alpha: Option<[i64; 3]>,
        #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
        beta: Option<[i64; 3]>,
    },
    /// Whether a class is realized by 1D families.
    GcdCheck {
        #[arg(long, value_parser = parse_ivec, allow_hyphen_values = true)]
        f: [i64; 3],
    },
}

#[derive(Subcommand, Debug)]
pub enum LieCmd {
    /// Integral of θ over the orbit of 2πh.
    OrbitIntegral {
        #[arg(long, allow_hyphen_values = true)]
        level: i64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
