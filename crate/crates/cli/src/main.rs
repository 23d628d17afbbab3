//! Batch front end: builds the geometric objects, runs the determining
//! analysis and the classification certificates, and emits deterministic
//! text or JSON artifacts. Exit code 0 means every requested check passed,
//! 1 means a check failed, 2 means the invocation was invalid.

mod artifacts;
mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "einsym", version, about = "Exact symmetry analysis of the vacuum field equations in N dimensions")]
struct Cli {
    /// Worker threads for per-component construction (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LambdaFlag {
    /// keep the cosmological parameter symbolic
    Sym,
    /// set the cosmological parameter to zero
    #[value(name = "0")]
    Zero,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldKind {
    Generic,
    Gct,
    Scaling,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConstraintClass {
    Dgddg,
    Ddg,
    Dg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DeduceStep {
    #[value(name = "h-indep")]
    HIndep,
    #[value(name = "phi-structure")]
    PhiStructure,
    Dg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleTarget {
    Ricci,
    #[value(name = "prolong-gct")]
    ProlongGct,
    #[value(name = "prolong-scaling")]
    ProlongScaling,
    Dricci,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; relative paths resolve against EINSYM_OUT_DIR when set.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print Ricci tensor components over jet atoms.
    Ricci {
        #[arg(long)]
        dim: u8,
        #[arg(long)]
        alpha: Option<u8>,
        #[arg(long)]
        beta: Option<u8>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check that the absent second-derivative families never occur.
    CheckAbsent {
        #[arg(long)]
        dim: u8,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Apply the second prolongation of a field to the system.
    Prolong {
        #[arg(long)]
        dim: u8,
        #[arg(long, value_enum)]
        field: FieldKind,
        #[arg(long)]
        alpha: Option<u8>,
        #[arg(long)]
        beta: Option<u8>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Extract a determining-constraint family.
    Determining {
        #[arg(long)]
        dim: u8,
        #[arg(long, value_enum)]
        class: ConstraintClass,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run one deduction step and emit its proof report.
    Deduce {
        #[arg(long)]
        dim: u8,
        #[arg(long, value_enum)]
        step: DeduceStep,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Verify a classification ingredient.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Run the whole chain and emit the classification certificate.
    Certify {
        #[arg(long)]
        dim: u8,
        #[arg(long, value_enum)]
        lambda: LambdaFlag,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate certified identities at random rational points.
    Oracle {
        #[arg(long)]
        dim: u8,
        #[arg(long, value_enum)]
        target: OracleTarget,
        #[arg(long, default_value_t = 100)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand)]
enum VerifyTarget {
    /// Coordinate-change fields generate symmetries.
    Gct {
        #[arg(long)]
        dim: u8,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Rescaling acts through the cosmological term alone.
    Scaling {
        #[arg(long)]
        dim: u8,
        #[arg(long, value_enum, default_value_t = LambdaFlag::Sym)]
        lambda: LambdaFlag,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Membership collapses the shifted components.
    Ansatz {
        #[arg(long)]
        dim: u8,
        #[command(flatten)]
        out: OutArgs,
    },
    /// The two-dimensional closed-form branch.
    TwoDim {
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = cli.jobs {
            b = b.num_threads(j.max(1));
        }
        b.build().expect("thread pool")
    };
    let code = pool.install(|| match run(cli.command) {
        Ok(passed) => {
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    });
    std::process::exit(code);
}

fn run(cmd: Command) -> anyhow::Result<bool> {
    match cmd {
        Command::Ricci { dim, alpha, beta, format, out } => {
            commands::ricci(dim, alpha, beta, format, out)
        }
        Command::CheckAbsent { dim, format, out } => commands::check_absent(dim, format, out),
        Command::Prolong { dim, field, alpha, beta, format, out } => {
            commands::prolong(dim, field, alpha, beta, format, out)
        }
        Command::Determining { dim, class, format, out } => {
            commands::determining(dim, class, format, out)
        }
        Command::Deduce { dim, step, out } => commands::deduce(dim, step, out),
        Command::Verify { target } => match target {
            VerifyTarget::Gct { dim, out } => commands::verify_gct(dim, out),
            VerifyTarget::Scaling { dim, lambda, out } => {
                commands::verify_scaling(dim, lambda, out)
            }
            VerifyTarget::Ansatz { dim, out } => commands::verify_ansatz(dim, out),
            VerifyTarget::TwoDim { out } => commands::verify_two_dim(out),
        },
        Command::Certify { dim, lambda, out } => commands::certify(dim, lambda, out),
        Command::Oracle { dim, target, samples, seed, out } => {
            commands::oracle(dim, target, samples, seed, out)
        }
    }
}
