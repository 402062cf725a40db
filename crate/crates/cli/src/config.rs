use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qpoisson_core::laurent::NumericContext;
use qpoisson_core::qdiff::ExtensionClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_Q: Complex64 = Complex64::new(0.1, 0.0);
pub const DEFAULT_ETA: Complex64 = Complex64::new(0.8, 0.0);
pub const DEFAULT_K: usize = 2;
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or parameters. Exit code 2.
    Input(String),
    /// Non-convergence or failed internal consistency. Exit code 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<qpoisson_core::Error> for CliError {
    fn from(e: qpoisson_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub q: Complex64,
    pub eta: Complex64,
    pub k: usize,
    pub window: i64,
    pub tol: f64,
    pub seed: u64,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub format: Format,
}

/// Values given on the command line; unset fields fall back to the config
/// embedded in `--input`, then to the defaults.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub q: Option<Complex64>,
    pub eta: Option<Complex64>,
    pub k: Option<usize>,
    pub window: Option<i64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
struct PartialConfig {
    q: Option<Complex64>,
    eta: Option<Complex64>,
    k: Option<usize>,
    window: Option<i64>,
    tol: Option<f64>,
    seed: Option<u64>,
}

/// Contents of an `--input` file: a bare `x`, or any report emitted by
/// this tool (which carries `config` and `x`).
#[derive(Debug, Default, Deserialize)]
pub struct InputFile {
    #[serde(default)]
    config: Option<PartialConfig>,
    #[serde(default)]
    pub x: Option<Vec<Complex64>>,
}

impl InputFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    pub fn resolve(o: Overrides, input: Option<&InputFile>) -> CliResult<Self> {
        let base = input.and_then(|i| i.config.as_ref());
        let q = o.q.or(base.and_then(|b| b.q)).unwrap_or(DEFAULT_Q);
        let tol = o.tol.or(base.and_then(|b| b.tol)).unwrap_or(DEFAULT_TOL);
        let k = o.k.or(base.and_then(|b| b.k)).unwrap_or(DEFAULT_K);
        let window = match o.window.or(base.and_then(|b| b.window)) {
            Some(w) => w,
            None if q.norm() > 0.0 && q.norm() < 1.0 && tol > 0.0 => {
                NumericContext::auto_window(q, tol).max(4 * k as i64)
            }
            None => 4 * k as i64,
        };
        let cfg = RunConfig {
            q,
            eta: o.eta.or(base.and_then(|b| b.eta)).unwrap_or(DEFAULT_ETA),
            k,
            window,
            tol,
            seed: o.seed.or(base.and_then(|b| b.seed)).unwrap_or(0),
            output: o.output,
            format: o.format.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let r = self.q.norm();
        if !(r > 0.0 && r < 1.0) {
            return Err(CliError::Input(format!("need 0 < |q| < 1, got |q| = {r}")));
        }
        if self.k == 0 {
            return Err(CliError::Input("k must be at least 1".into()));
        }
        if self.window < 4 * self.k as i64 {
            return Err(CliError::Input(format!(
                "window must be at least 4k = {}, got {}",
                4 * self.k,
                self.window
            )));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return Err(CliError::Input(format!(
                "tol must lie in (0, 1e-3], got {}",
                self.tol
            )));
        }
        if !(self.eta.norm() > 0.0 && self.eta.norm().is_finite()) {
            return Err(CliError::Input(
                "eta must be a nonzero finite number".into(),
            ));
        }
        Ok(())
    }

    pub fn context(&self) -> CliResult<NumericContext> {
        Ok(NumericContext::with_window(self.q, self.tol, self.window)?)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn class(&self, coords: Vec<Complex64>) -> CliResult<ExtensionClass> {
        if coords.len() != 2 * self.k {
            return Err(CliError::Input(format!(
                "x needs 2k = {} coordinates, got {}",
                2 * self.k,
                coords.len()
            )));
        }
        Ok(ExtensionClass::new(self.k, self.eta, coords)?)
    }
}

pub fn random_coords<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// `"re,im"` or a bare real `"re"`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|e| format!("bad number {t:?}: {e}"))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected \"re,im\", got {s:?}")),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coords(pub Vec<Complex64>);

/// Semicolon-separated complex numbers.
pub fn parse_vector(s: &str) -> Result<Coords, String> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(parse_complex)
        .collect::<Result<_, _>>()
        .map(Coords)
}
