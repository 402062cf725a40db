//! `qpoisson`: verification and sweep front end for `qpoisson-core`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use qpoisson_core::qdiff::ExtensionClass;

use config::{
    parse_complex, parse_vector, random_coords, CliResult, Coords, Format, InputFile, Overrides,
    RunConfig,
};

#[derive(Parser)]
#[command(
    name = "qpoisson",
    version,
    about = "Theta cohomology, moduli brackets and leaf labels on a Tate curve"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Nome, "re,im" or a real number [default: 0.1]
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    q: Option<Complex64>,
    /// Multiplier parameter η [default: 0.8]
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    eta: Option<Complex64>,
    /// Degree k of ξ₀ [default: 2]
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Truncation window, at least 4k [default: automatic]
    #[arg(long, global = true)]
    window: Option<i64>,
    /// Relative tolerance in (0, 1e-3] [default: 1e-12]
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for sampled classes [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Class coordinates x_0..x_{2k-1} as "re,im;re,im;..."
    #[arg(long, global = true, value_parser = parse_vector, allow_hyphen_values = true)]
    x: Option<Coords>,
    /// JSON file with `x` (and optionally `config`), e.g. an earlier report
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Theta basis function ϑ_n of (η^k, k) and its residual
    Theta {
        #[arg(long, default_value_t = 0)]
        n: i64,
    },
    /// Duality table ⟨ϑ_{-n}, [z^m]⟩ and θ_n([z^m])
    Pair,
    /// Extension, dual and endomorphism multipliers of x
    Qdiff,
    /// Bracket matrix Π at x
    Bracket,
    /// Jacobiator of Π at x, for one triple or all triples
    Jacobi {
        /// Index triple "m,n,s"; sampled x has these coordinates zeroed
        #[arg(long, value_delimiter = ',')]
        triple: Option<Vec<usize>>,
    },
    /// Instability index and leaf dimension of x
    Leaf {
        /// Sample this many classes instead of a single x
        #[arg(long)]
        sweep: Option<usize>,
        /// Plant a sub-bundle of this degree into the sampled class
        #[arg(long)]
        plant: Option<i64>,
        /// Multiplier of the planted sub-bundle, "re,im"
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        c: Option<Complex64>,
    },
    /// Leaf labels over sampled classes (CSV or JSON)
    Sweep {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        plant: Option<i64>,
    },
    /// Ratio between the reduced loop bracket and Π
    LoopCompare {
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

fn given_x(g: &GlobalArgs, input: Option<&InputFile>) -> Option<Vec<Complex64>> {
    g.x.clone()
        .map(|c| c.0)
        .or_else(|| input.and_then(|i| i.x.clone()))
}

fn single_x(
    cfg: &RunConfig,
    g: &GlobalArgs,
    input: Option<&InputFile>,
    zeroed: &[usize],
) -> CliResult<ExtensionClass> {
    let coords = match given_x(g, input) {
        Some(v) => v,
        None => {
            let mut v = random_coords(&mut cfg.rng(), 2 * cfg.k);
            for &i in zeroed {
                if let Some(c) = v.get_mut(i) {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
            v
        }
    };
    cfg.class(coords)
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    let input = g.input.as_deref().map(InputFile::read).transpose()?;
    let cfg = RunConfig::resolve(
        Overrides {
            q: g.q,
            eta: g.eta,
            k: g.k,
            window: g.window,
            tol: g.tol,
            seed: g.seed,
            output: g.output.clone(),
            format: g.format,
        },
        input.as_ref(),
    )?;
    let input = input.as_ref();
    match cli.command {
        Command::Theta { n } => commands::theta(&cfg, n),
        Command::Pair => commands::pair(&cfg),
        Command::Qdiff => commands::qdiff(&cfg, &single_x(&cfg, g, input, &[])?),
        Command::Bracket => commands::bracket(&cfg, &single_x(&cfg, g, input, &[])?),
        Command::Jacobi { triple } => {
            let triple = match triple.as_deref() {
                None => None,
                Some(&[m, n, s]) => Some([m, n, s]),
                Some(_) => {
                    return Err(config::CliError::Input(
                        "--triple takes three indices m,n,s".into(),
                    ))
                }
            };
            let zeroed = triple.map(Vec::from).unwrap_or_default();
            commands::jacobi(&cfg, &single_x(&cfg, g, input, &zeroed)?, triple)
        }
        Command::Leaf {
            sweep: Some(n),
            plant,
            ..
        } => commands::sweep(&cfg, n, plant),
        Command::Leaf {
            sweep: None,
            plant,
            c,
        } => {
            let x = match (plant, given_x(g, input)) {
                (Some(j), None) => commands::planted(&cfg, j, c, &mut cfg.rng())?,
                (Some(_), Some(_)) => {
                    return Err(config::CliError::Input(
                        "--plant conflicts with an explicit x".into(),
                    ))
                }
                (None, _) => single_x(&cfg, g, input, &[])?,
            };
            commands::leaf(&cfg, &x)
        }
        Command::Sweep { samples, plant } => commands::sweep(&cfg, samples, plant),
        Command::LoopCompare { samples } => {
            let xs = match given_x(g, input) {
                Some(v) => vec![cfg.class(v)?],
                None => {
                    let mut rng = cfg.rng();
                    (0..samples)
                        .map(|_| cfg.class(random_coords(&mut rng, 2 * cfg.k)))
                        .collect::<CliResult<_>>()?
                }
            };
            commands::loop_compare(&cfg, xs)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qpoisson: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
