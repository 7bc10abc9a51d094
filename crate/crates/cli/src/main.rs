use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use delos::criteria;
use delos::report::Report;
use delos::system::{parse_system, print_system};
use delos::workflows::{self, GeomArgs, Options};
use delos_core::duality::Stages;
use delos_core::involution::COORDINATE_SEED;

#[derive(Parser)]
#[command(name = "delos", version, about = "Compatibility conditions, involution and parametrizability of linear PDE systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the JSON report to this path.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Largest derivation order allowed in basis computations.
    #[arg(long, global = true)]
    bound: Option<usize>,
    /// Seed for the random coordinates of Cartan's test.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageArg {
    Ext1,
    Ext2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Parametrizable,
    NotParametrizable,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeomKind {
    Killing,
    Conformal,
    Riemann,
    Einstein,
    Contact,
    ContactParam,
    Hj,
    WeylSplit,
}

impl GeomKind {
    fn name(self) -> &'static str {
        match self {
            GeomKind::Killing => "killing",
            GeomKind::Conformal => "conformal",
            GeomKind::Riemann => "riemann",
            GeomKind::Einstein => "einstein",
            GeomKind::Contact => "contact",
            GeomKind::ContactParam => "contact-param",
            GeomKind::Hj => "hj",
            GeomKind::WeylSplit => "weyl-split",
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Formal adjoint of the operator.
    Adjoint { file: PathBuf },
    /// Generating compatibility conditions.
    Cc { file: PathBuf },
    /// Symbol dimensions, delta-cohomology and the involution test.
    Involution { file: PathBuf },
    /// Complete to a formally integrable system with a 2-acyclic symbol.
    Complete { file: PathBuf },
    /// Decide whether the operator is parametrizable.
    Partest {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = StageArg::Ext1)]
        stages: StageArg,
        /// Exit with status 2 when the verdict differs.
        #[arg(long, value_enum)]
        expect: Option<Expect>,
    },
    /// Systems and operators of classical geometry.
    Geom {
        #[arg(value_enum)]
        kind: GeomKind,
        /// euclidean or minkowski.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Components of a 1-form, comma separated.
        #[arg(long)]
        omega: Option<String>,
        /// Placement of the distinguished contact coordinate: trailing or leading.
        #[arg(long)]
        layout: Option<String>,
        /// Tensor file for weyl-split.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Write the generated system as a system file.
        #[arg(long)]
        emit_sys: Option<PathBuf>,
    },
    /// Dimension counts: symbols, CC probe, Janet and Spencer bundles.
    Dims { file: PathBuf },
    /// Run the built-in checks and the example corpus.
    Selftest,
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: &Cli) -> Result<(Report, ExitCode), String> {
    let opts = Options {
        bound: cli.bound,
        seed: cli.seed.unwrap_or(COORDINATE_SEED),
        stages: match &cli.cmd {
            Cmd::Partest { stages: StageArg::Ext2, .. } => Stages::Ext2,
            _ => Stages::Ext1,
        },
    };
    let on_file = |path: &Path, f: fn(&delos::system::SystemFile, &str, &Options) -> delos_core::Result<Report>| {
        let text = read(path)?;
        let sf = parse_system(&text).map_err(|e| match e {
            // These carry a position, rendered as `line:col: ...`.
            delos_core::Error::Syntax { .. } | delos_core::Error::UnknownIdentifier { .. } => format!("{}:{e}", path.display()),
            _ => format!("{}: {e}", path.display()),
        })?;
        f(&sf, &text, &opts).map_err(|e| format!("{}: {e}", path.display()))
    };
    let mut code = ExitCode::SUCCESS;
    let report = match &cli.cmd {
        Cmd::Adjoint { file } => on_file(file, workflows::adjoint)?,
        Cmd::Cc { file } => on_file(file, workflows::cc)?,
        Cmd::Involution { file } => on_file(file, workflows::involution)?,
        Cmd::Complete { file } => on_file(file, workflows::complete)?,
        Cmd::Dims { file } => on_file(file, workflows::dims)?,
        Cmd::Partest { file, expect, .. } => {
            let r = on_file(file, workflows::partest)?;
            let want = expect.map(|e| e == Expect::Parametrizable);
            if let (Some(w), Some(got)) = (want, r.parametrizable) {
                if w != got {
                    code = ExitCode::from(2);
                }
            }
            r
        }
        Cmd::Geom { kind, metric, n, omega, layout, input, emit_sys } => {
            let tensor = input.as_deref().map(read).transpose()?;
            let args = GeomArgs { metric: metric.clone(), n: *n, omega: omega.clone(), layout: layout.clone(), tensor };
            let (r, emitted) = workflows::geom(kind.name(), &args, &opts).map_err(|e| e.to_string())?;
            if let Some(path) = emit_sys {
                let sf = emitted.ok_or_else(|| format!("`geom {}` produces no system", kind.name()))?;
                std::fs::write(path, print_system(&sf)).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            r
        }
        Cmd::Selftest => {
            let (r, ok) = criteria::selftest();
            if !ok {
                code = ExitCode::FAILURE;
            }
            r
        }
    };
    Ok((report, code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let t = Instant::now();
    match run(&cli) {
        Ok((mut report, code)) => {
            report.elapsed_ms = t.elapsed().as_millis();
            let out = match cli.format {
                Format::Text => report.render_text(),
                Format::Json => serde_json::to_string_pretty(&report.to_json(true)).unwrap() + "\n",
            };
            // A closed pipe is not an error worth reporting.
            let _ = std::io::stdout().write_all(out.as_bytes());
            if let Some(path) = &cli.report {
                let body = serde_json::to_string_pretty(&report.to_json(true)).unwrap();
                if let Err(e) = std::fs::write(path, body + "\n") {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
