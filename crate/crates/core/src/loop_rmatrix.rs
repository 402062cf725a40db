//! The SL₂ loop-group r-matrix bracket and its reduction to the orbit
//! `μ^{-1}(O_{ξ₀})` of lower-triangular loops
//!
//! ```text
//! ( a_{-k} z^{-k}          0         )
//! (    x(z)         a_{-k}^{-1} z^k  )
//! ```
//!
//! with coordinates `c_i` (coefficients of `x(z)`) and `a_{-k}`.
//!
//! The `LN₋` action `x ↦ x + a_{-k}^{-1} z^{l+k} - q^l a_{-k} z^{l-k}` leaves
//! the functionals
//!
//! ```text
//! θ_n = Σ_L q^{nL} q^{kL²} a_{-k}^{2L} c_{2kL+n}
//! ```
//!
//! invariant; these coincide with the theta functionals of the line bundle
//! `(q^k a_{-k}^{-2}, 2k)`.
//!
//! To compare with the moduli bracket, a class `x` is placed on the orbit
//! exactly as in the extension multiplier: the corner is `(ηz)^k x(z)`, so
//! `c_{i+k} = η^k x_i` and `a_{-k} = η^{-k}`. Under this lift
//! `θ_{m+k} = η^k ⟨ϑ_{-m}, [x]⟩`, and the reduced bracket entry
//! `η^{-2k} R[m+k][n+k]` is compared with `Π[m][n]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bracket::{bracket_matrix, bracket_truncation};
use crate::error::{Error, Result};
use crate::laurent::{complex_powi, LaurentSeries, NumericContext};
use crate::qdiff::ExtensionClass;
use crate::theta::{theta_functional, LineBundle};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance for the constancy of the bracket ratio.
pub const COMPARISON_TOL: f64 = 1e-8;

/// Entries with `|Π[m][n]|` below this fraction of `max |Π|` are not
/// used as ratio denominators.
pub const RATIO_FLOOR: f64 = 1e-6;

/// `φ_l = 1/(1 - q^l)` for `l ≠ 0`, `φ_0 = 1/2`.
pub fn phi_coeff(ctx: &NumericContext, l: i64) -> Complex64 {
    if l == 0 {
        Complex64::new(0.5, 0.0)
    } else {
        ONE / (ONE - ctx.q_pow(l))
    }
}

/// `τ_l = (1 + q^l)/(1 - q^l)` for `l ≠ 0`, `τ_0 = 0`.
pub fn tau_coeff(ctx: &NumericContext, l: i64) -> Complex64 {
    if l == 0 {
        ZERO
    } else {
        let ql = ctx.q_pow(l);
        (ONE + ql) / (ONE - ql)
    }
}

/// `φ(z)` and `τ(z) = φ(z) - φ(1/z)` on the window `[-W, W]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RKernels {
    pub rphi: LaurentSeries,
    pub tau: LaurentSeries,
}

impl RKernels {
    pub fn new(ctx: &NumericContext) -> Result<Self> {
        let w = ctx.default_window();
        let rphi = LaurentSeries::from_terms((-w..=w).map(|l| (l, phi_coeff(ctx, l))), -w, w)?;
        let tau = LaurentSeries::from_terms((-w..=w).map(|l| (l, tau_coeff(ctx, l))), -w, w)?;
        Ok(RKernels { rphi, tau })
    }
}

/// A point of the orbit lift: finitely many nonzero `c_i` and `a_{-k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopOrbitPoint {
    pub k: usize,
    pub eta: Complex64,
    pub xcoeffs: BTreeMap<i64, Complex64>,
    pub a_minus_k: Complex64,
}

impl LoopOrbitPoint {
    pub fn new(
        k: usize,
        eta: Complex64,
        xcoeffs: BTreeMap<i64, Complex64>,
        a_minus_k: Complex64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(a_minus_k.norm() > 0.0) || !a_minus_k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "a_-k must be finite and nonzero, got {a_minus_k}"
            )));
        }
        Ok(LoopOrbitPoint {
            k,
            eta,
            xcoeffs,
            a_minus_k,
        })
    }

    /// `c_i = x_i` on `{0, …, 2k-1}`, `a_{-k} = η^{-k}`.
    pub fn from_class(x: &ExtensionClass) -> Self {
        LoopOrbitPoint {
            k: x.k,
            eta: x.eta,
            xcoeffs: x
                .coords
                .iter()
                .enumerate()
                .map(|(i, c)| (i as i64, *c))
                .collect(),
            a_minus_k: complex_powi(x.eta, -x.ki()),
        }
    }

    /// Corner `(ηz)^k x(z)`: `c_{i+k} = η^k x_i`, `a_{-k} = η^{-k}`.
    pub fn lift(x: &ExtensionClass) -> Self {
        let ek = x.eta_k();
        LoopOrbitPoint {
            k: x.k,
            eta: x.eta,
            xcoeffs: x
                .coords
                .iter()
                .enumerate()
                .map(|(i, c)| (i as i64 + x.ki(), c * ek))
                .collect(),
            a_minus_k: ek.inv(),
        }
    }

    pub fn ki(&self) -> i64 {
        self.k as i64
    }

    pub fn c(&self, i: i64) -> Complex64 {
        self.xcoeffs.get(&i).copied().unwrap_or(ZERO)
    }

    /// `a_m`: only `a_{-k}` is nonzero on the orbit.
    pub fn a(&self, m: i64) -> Complex64 {
        if m == -self.ki() {
            self.a_minus_k
        } else {
            ZERO
        }
    }

    pub fn series(&self) -> LaurentSeries {
        LaurentSeries::polynomial(self.xcoeffs.iter().map(|(e, c)| (*e, *c)))
    }

    /// Applies the `LN₋` generator with exponent `l` scaled by `t`.
    pub fn apply_ln_minus(&self, l: i64, t: Complex64, ctx: &NumericContext) -> LoopOrbitPoint {
        let k = self.ki();
        let mut out = self.clone();
        *out.xcoeffs.entry(l + k).or_insert(ZERO) += t / self.a_minus_k;
        *out.xcoeffs.entry(l - k).or_insert(ZERO) -= t * ctx.q_pow(l) * self.a_minus_k;
        out
    }

    fn support(&self) -> (i64, i64) {
        let lo = self.xcoeffs.keys().next().copied().unwrap_or(0);
        let hi = self.xcoeffs.keys().next_back().copied().unwrap_or(0);
        (lo, hi)
    }
}

/// `{c_m, c_n} = 2 Σ_{l≠0} τ_l c_{m-l} c_{n+l}`.
pub fn coeff_bracket_cc(pt: &LoopOrbitPoint, m: i64, n: i64, ctx: &NumericContext) -> Complex64 {
    let mut acc = ZERO;
    for (&i, &ci) in &pt.xcoeffs {
        let l = m - i;
        if l == 0 {
            continue;
        }
        acc += tau_coeff(ctx, l) * ci * pt.c(n + l);
    }
    2.0 * acc
}

/// `{a_m, c_n} = (3/2) a_m c_n - (1/2) Σ_{l≠0} a_{m-l} c_{n+l}`.
pub fn coeff_bracket_ac(pt: &LoopOrbitPoint, m: i64, n: i64, _ctx: &NumericContext) -> Complex64 {
    let k = pt.ki();
    let mut acc = 1.5 * pt.a(m) * pt.c(n);
    // a_{m-l} ≠ 0 only for l = m + k
    let l = m + k;
    if l != 0 {
        acc -= 0.5 * pt.a_minus_k * pt.c(n + l);
    }
    acc
}

/// `{a_m, a_n} = 0`.
pub fn coeff_bracket_aa(
    _pt: &LoopOrbitPoint,
    _m: i64,
    _n: i64,
    _ctx: &NumericContext,
) -> Complex64 {
    ZERO
}

/// Radius of the `L` sums: `|q|^{k L²} < tol · 1e-3`, scaled with the window.
pub fn loop_truncation(k: usize, ctx: &NumericContext) -> i64 {
    let target = ctx.truncation_threshold().ln() / ctx.q().norm().ln();
    let mut l = 1i64;
    while (k as i64 * l * l) as f64 <= target {
        l += 1;
    }
    ctx.scale_radius(l)
}

/// `θ_n` for any integer `n`.
pub fn invariant_functional_at(pt: &LoopOrbitPoint, n: i64, ctx: &NumericContext) -> Complex64 {
    let k = pt.ki();
    let (lo, hi) = pt.support();
    let a2 = pt.a_minus_k * pt.a_minus_k;
    let mut acc = ZERO;
    let big_l = loop_truncation(pt.k, ctx);
    let l_lo = (lo - n).div_euclid(2 * k).max(-big_l);
    let l_hi = (hi - n).div_euclid(2 * k).min(big_l);
    for l in l_lo..=l_hi {
        let c = pt.c(2 * k * l + n);
        if c != ZERO {
            acc += ctx.q_pow(n * l + k * l * l) * complex_powi(a2, l) * c;
        }
    }
    acc
}

pub fn invariant_functional(
    pt: &LoopOrbitPoint,
    n: i64,
    ctx: &NumericContext,
) -> Result<Complex64> {
    if n < 0 || n >= 2 * pt.ki() {
        return Err(Error::InvalidParameter(format!(
            "functional index {n} out of range 0..{}",
            2 * pt.k
        )));
    }
    Ok(invariant_functional_at(pt, n, ctx))
}

/// The line bundle whose theta functionals are the invariant functionals.
pub fn functional_bundle(pt: &LoopOrbitPoint, ctx: &NumericContext) -> Result<LineBundle> {
    let k = pt.ki();
    LineBundle::new(ctx.q_pow(k) / (pt.a_minus_k * pt.a_minus_k), 2 * k, ctx)
}

/// Same value through `theta_functional`.
pub fn invariant_functional_via_theta(
    pt: &LoopOrbitPoint,
    n: i64,
    ctx: &NumericContext,
) -> Result<Complex64> {
    theta_functional(&functional_bundle(pt, ctx)?, n, &pt.series(), ctx)
}

/// `2 Σ_{s≠0} Σ_{l,j} τ_s q^{nl+mj} q^{k(l²+j²)} a_{-k}^{2(l+j)} c_{2kj+m-s} c_{2kl+n+s}`.
pub fn reduced_bracket(pt: &LoopOrbitPoint, m: i64, n: i64, ctx: &NumericContext) -> Complex64 {
    let k = pt.ki();
    let k2 = 2 * k;
    let big_l = loop_truncation(pt.k, ctx);
    let a2 = pt.a_minus_k * pt.a_minus_k;
    let w = |idx: i64, l: i64| ctx.q_pow(idx * l + k * l * l) * complex_powi(a2, l);
    let mut acc = ZERO;
    for j in -big_l..=big_l {
        let wj = w(m, j);
        for (&i1, &c1) in &pt.xcoeffs {
            // i1 = 2kj + m - s
            let s = k2 * j + m - i1;
            if s == 0 {
                continue;
            }
            let tau = tau_coeff(ctx, s);
            for l in -big_l..=big_l {
                let c2 = pt.c(k2 * l + n + s);
                if c2 != ZERO {
                    acc += tau * wj * w(n, l) * c1 * c2;
                }
            }
        }
    }
    2.0 * acc
}

/// Kernel form `{θ_m(z), θ_n(w)} = 2 τ(w/z) θ_m(z) θ_n(w)`: the coefficient
/// extraction `2 Σ_s τ_s θ_m(c z^s) θ_n(c z^{-s})` with `τ` read from the
/// windowed kernel series.
pub fn reduced_bracket_kernel(
    pt: &LoopOrbitPoint,
    m: i64,
    n: i64,
    kernels: &RKernels,
    ctx: &NumericContext,
) -> Result<Complex64> {
    let (lo, hi) = kernels.tau.window();
    let x = pt.series();
    let mut acc = ZERO;
    for (s, tau) in kernels.tau.terms() {
        if s < lo || s > hi {
            continue;
        }
        let mut shifted_m = pt.clone();
        shifted_m.xcoeffs = x.mul_monomial(ONE, s)?.terms().collect();
        let mut shifted_n = pt.clone();
        shifted_n.xcoeffs = x.mul_monomial(ONE, -s)?.terms().collect();
        acc += tau
            * invariant_functional_at(&shifted_m, m, ctx)
            * invariant_functional_at(&shifted_n, n, ctx);
    }
    Ok(2.0 * acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketComparison {
    /// Common value of `η^{-2k} R[m+k][n+k] / Π[m][n]`.
    pub ratio: Complex64,
    /// Largest `|ratio_mn - ratio| / |ratio|`.
    pub max_residual: f64,
    pub entries_compared: usize,
    /// Per-entry ratios; `None` where `Π[m][n]` is below the floor.
    pub ratio_table: Vec<Vec<Option<Complex64>>>,
    pub truncation_l: i64,
}

fn format_table(t: &[Vec<Option<Complex64>>]) -> String {
    let mut s = String::new();
    for row in t {
        for v in row {
            match v {
                Some(c) => {
                    let _ = write!(s, " {:>+.10e}{:+.10e}i", c.re, c.im);
                }
                None => s.push_str("                 -                  "),
            }
        }
        s.push('\n');
    }
    s
}

/// Compares the reduced loop bracket with the moduli bracket at `x`.
/// Returns `None` when `x = 0` (both brackets vanish).
pub fn compare_brackets(
    x: &ExtensionClass,
    ctx: &NumericContext,
) -> Result<Option<BracketComparison>> {
    if x.max_abs() == 0.0 {
        return Ok(None);
    }
    let pi = bracket_matrix(x, ctx)?;
    let pt = LoopOrbitPoint::lift(x);
    let k = x.ki();
    let d = x.dim();
    let norm = complex_powi(x.eta, -2 * k);
    let floor = RATIO_FLOOR * pi.max_abs();
    let mut table = vec![vec![None; d]; d];
    let mut ratios = Vec::new();
    for m in 0..d {
        for n in 0..d {
            let p = pi.entries[m][n];
            if m == n || p.norm() <= floor {
                continue;
            }
            let r = norm * reduced_bracket(&pt, m as i64 + k, n as i64 + k, ctx) / p;
            table[m][n] = Some(r);
            ratios.push(r);
        }
    }
    if ratios.is_empty() {
        return Ok(None);
    }
    let ratio = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    let max_residual = ratios
        .iter()
        .map(|r| (r - ratio).norm() / ratio.norm())
        .fold(0.0, f64::max);
    if !(max_residual <= COMPARISON_TOL) {
        return Err(Error::ComparisonFailure {
            max_deviation: max_residual,
            ratio_table: format_table(&table),
        });
    }
    Ok(Some(BracketComparison {
        ratio,
        max_residual,
        entries_compared: ratios.len(),
        ratio_table: table,
        truncation_l: bracket_truncation(x.k, ctx).max(loop_truncation(x.k, ctx)),
    }))
}
