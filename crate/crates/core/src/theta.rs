//! Rank-one q-difference modules: theta bases for H⁰, canonical
//! representatives for H¹, and the Serre pairing between them.
//!
//! A [`LineBundle`] `(c, d)` is the module whose shift acts on its generator
//! by `c z^d`. For `d > 0` the global sections are spanned by
//!
//! ```text
//! ϑ_n(z) = Σ_l q^{ln} q^{d l (l-1)/2} c^l z^{dl+n},    0 <= n < d,
//! ```
//!
//! each solving `c z^d f(qz) = f(z)`. For `d < 0` the first cohomology is
//! the cokernel of `g ↦ c z^d g(qz) - g`, with basis `[1], …, [z^{|d|-1}]`.
//!
//! Index convention: [`theta_basis_at`] evaluates the formula above for any
//! integer `n`, so `ϑ_{-n}` is the literal series with exponents `dl - n`.
//! It is proportional to the reduced basis element:
//! `ϑ_{-n} = c q^{-n} ϑ_{d-n}` for `0 < n < d`. With this convention the
//! pairing satisfies `⟨ϑ_{-n}, [z^m]⟩ = δ_{mn}` without further scaling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{complex_powi, LaurentSeries, NumericContext};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineBundle {
    c: Complex64,
    d: i64,
}

impl LineBundle {
    /// Rejects `c = 0` and, for `d != 0`, any `|c|` outside the annulus
    /// `(|q|^{|d|+1}, |q|^{-|d|-1})`.
    pub fn new(c: Complex64, d: i64, ctx: &NumericContext) -> Result<Self> {
        if !(c.norm() > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "multiplier scalar must be finite and nonzero, got {c}"
            )));
        }
        if d != 0 {
            let lq = ctx.q().norm().ln();
            let bound = (d.abs() + 1) as f64 * lq;
            let lc = c.norm().ln();
            if !(lc > bound && lc < -bound) {
                return Err(Error::InvalidParameter(format!(
                    "|c| = {} lies outside the conditioning annulus for degree {d}; \
                     normalize c by powers of q first",
                    c.norm()
                )));
            }
        }
        Ok(LineBundle { c, d })
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    pub fn degree(&self) -> i64 {
        self.d
    }

    pub fn dual(&self) -> LineBundle {
        LineBundle {
            c: self.c.inv(),
            d: -self.d,
        }
    }

    pub fn tensor(&self, other: &LineBundle, ctx: &NumericContext) -> Result<LineBundle> {
        LineBundle::new(self.c * other.c, self.d + other.d, ctx)
    }

    /// `true` when the multiplier scalars multiply to 1 (to `tol`) and the
    /// degrees are opposite.
    pub fn is_dual_to(&self, other: &LineBundle, tol: f64) -> bool {
        self.d == -other.d && (self.c * other.c - 1.0).norm() < tol
    }

    /// Max coefficient of `c z^d f(qz) - f`, relative to the largest
    /// coefficient of `f`, on the common window.
    pub fn functional_residual(&self, f: &LaurentSeries, ctx: &NumericContext) -> Result<f64> {
        let lhs = f.q_shift(ctx, 1).mul_monomial(self.c, self.d)?;
        let scale = f.max_abs();
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(lhs.max_abs_diff(f) / scale)
    }
}

/// A cohomology class in `H¹` of a negative-degree line bundle, stored in
/// the basis `[1], …, [z^{|d|-1}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Class {
    pub bundle: LineBundle,
    pub coords: Vec<Complex64>,
}

impl H1Class {
    pub fn new(bundle: LineBundle, coords: Vec<Complex64>) -> Result<Self> {
        if bundle.d >= 0 {
            return Err(Error::Domain(format!(
                "H1 classes need negative degree, got {}",
                bundle.d
            )));
        }
        if coords.len() != bundle.d.unsigned_abs() as usize {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                bundle.d.abs(),
                coords.len()
            )));
        }
        Ok(H1Class { bundle, coords })
    }

    pub fn zero(bundle: LineBundle) -> Result<Self> {
        let n = bundle.d.unsigned_abs() as usize;
        Self::new(bundle, vec![Complex64::new(0.0, 0.0); n])
    }

    /// The polynomial `Σ coords_m z^m`.
    pub fn representative(&self) -> LaurentSeries {
        LaurentSeries::polynomial(self.coords.iter().enumerate().map(|(m, c)| (m as i64, *c)))
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// A global section of a positive-degree line bundle in the theta basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub bundle: LineBundle,
    pub coords: Vec<Complex64>,
}

impl ThetaVector {
    pub fn new(bundle: LineBundle, coords: Vec<Complex64>) -> Result<Self> {
        if bundle.d <= 0 {
            return Err(Error::Domain(format!(
                "theta vectors need positive degree, got {}",
                bundle.d
            )));
        }
        if coords.len() != bundle.d as usize {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                bundle.d,
                coords.len()
            )));
        }
        Ok(ThetaVector { bundle, coords })
    }

    pub fn basis_vector(bundle: LineBundle, n: usize) -> Result<Self> {
        let mut coords = vec![Complex64::new(0.0, 0.0); bundle.d.max(0) as usize];
        if n >= coords.len() {
            return Err(Error::InvalidParameter(format!(
                "basis index {n} out of range for degree {}",
                bundle.d
            )));
        }
        coords[n] = Complex64::new(1.0, 0.0);
        Self::new(bundle, coords)
    }

    pub fn realize(&self, ctx: &NumericContext) -> Result<LaurentSeries> {
        let mut acc: Option<LaurentSeries> = None;
        for (n, a) in self.coords.iter().enumerate() {
            let term = theta_basis(&self.bundle, n as i64, ctx)?.scale(*a);
            acc = Some(match acc {
                None => term,
                Some(s) => s.add(&term),
            });
        }
        Ok(acc.expect("positive degree has at least one basis element"))
    }
}

/// Range `[lo, hi]` of integers where the concave quadratic
/// `log_w(l) = -α l² + β l` stays within `log_thr` of its maximum.
pub(crate) fn significant_l_range(
    log_w: impl Fn(i64) -> f64,
    alpha: f64,
    beta: f64,
    log_thr: f64,
) -> (i64, i64, i64) {
    let centre = (beta / (2.0 * alpha)).round() as i64;
    let peak = log_w(centre).max(log_w(centre - 1)).max(log_w(centre + 1));
    let mut hi = centre;
    while log_w(hi + 1) >= peak + log_thr {
        hi += 1;
    }
    let mut lo = centre;
    while log_w(lo - 1) >= peak + log_thr {
        lo -= 1;
    }
    (lo, hi, centre)
}

/// Literal theta series `Σ_l q^{ln} q^{d l (l-1)/2} c^l z^{dl+n}` for any
/// integer `n`.
pub fn theta_basis_at(bundle: &LineBundle, n: i64, ctx: &NumericContext) -> Result<LaurentSeries> {
    let d = bundle.d;
    if d <= 0 {
        return Err(Error::Domain(format!(
            "theta basis needs positive degree, got {d}"
        )));
    }
    let lq = ctx.q().norm().ln();
    let lc = bundle.c.norm().ln();
    // log|term_l| = lq (n l + d l (l-1)/2) + l lc
    let log_w = |l: i64| lq * (n * l) as f64 + lq * (d * l * (l - 1)) as f64 / 2.0 + lc * l as f64;
    let alpha = -lq * d as f64 / 2.0;
    let beta = -lq * (n as f64 - d as f64 / 2.0) + lc;
    let (lo, hi, centre) = significant_l_range(log_w, alpha, beta, ctx.truncation_threshold().ln());
    let half = (centre - lo).max(hi - centre);
    let radius = ctx.scale_radius(2 * half + 1);
    let mut l_lo = centre - radius;
    let mut l_hi = centre + radius;
    while d * l_lo + n > 0 {
        l_lo -= 1;
    }
    while d * l_hi + n < 0 {
        l_hi += 1;
    }
    let q = ctx.q();
    let terms = (l_lo..=l_hi).map(|l| {
        let e = l * n + d * l * (l - 1) / 2;
        (d * l + n, complex_powi(q, e) * complex_powi(bundle.c, l))
    });
    LaurentSeries::from_terms(terms, d * l_lo + n - (d - 1), d * l_hi + n + (d - 1))
}

/// Basis element `ϑ_n` for `0 <= n < d`.
pub fn theta_basis(bundle: &LineBundle, n: i64, ctx: &NumericContext) -> Result<LaurentSeries> {
    if bundle.d <= 0 {
        return Err(Error::Domain(format!(
            "theta basis needs positive degree, got {}",
            bundle.d
        )));
    }
    if n < 0 || n >= bundle.d {
        return Err(Error::InvalidParameter(format!(
            "basis index {n} out of range 0..{}",
            bundle.d
        )));
    }
    theta_basis_at(bundle, n, ctx)
}

/// Global sections of a line bundle.
pub fn h0_basis(bundle: &LineBundle, ctx: &NumericContext) -> Result<Vec<LaurentSeries>> {
    match bundle.d {
        d if d > 0 => (0..d).map(|n| theta_basis(bundle, n, ctx)).collect(),
        0 => {
            let w = ctx.default_window();
            let mut best: Option<(i64, f64)> = None;
            for m in -w..=w {
                let target = ctx.q_pow(-m);
                let rel = (bundle.c - target).norm() / target.norm();
                if best.is_none_or(|(_, r)| rel < r) {
                    best = Some((m, rel));
                }
            }
            match best {
                Some((m, rel)) if rel < ctx.tol() => {
                    Ok(vec![LaurentSeries::monomial(Complex64::new(1.0, 0.0), m)])
                }
                Some((m, rel)) => {
                    if rel < ctx.tol().sqrt() {
                        log::warn!(
                            "c = {} is within {rel:.3e} of q^{} but above tolerance; reporting no sections",
                            bundle.c,
                            -m
                        );
                    }
                    Ok(Vec::new())
                }
                None => Ok(Vec::new()),
            }
        }
        _ => Ok(Vec::new()),
    }
}

/// Canonical coordinates of `[f]` in `H¹` of a negative-degree bundle.
///
/// Each term is moved toward `{0, …, K-1}` (`K = |d|`) one step at a time
/// using `[z^m] = c q^m [z^{m-K}]`.
pub fn h1_reduce(bundle: &LineBundle, f: &LaurentSeries, ctx: &NumericContext) -> Result<H1Class> {
    if bundle.d >= 0 {
        return Err(Error::Domain(format!(
            "H1 reduction needs negative degree, got {}",
            bundle.d
        )));
    }
    let k = -bundle.d;
    let c = bundle.c;
    let c_inv = c.inv();
    let mut coords = vec![Complex64::new(0.0, 0.0); k as usize];
    for (e0, a0) in f.terms() {
        let mut e = e0;
        let mut a = a0;
        while e >= k {
            a *= c * ctx.q_pow(e);
            e -= k;
        }
        while e < 0 {
            a *= c_inv * ctx.q_pow(-(e + k));
            e += k;
        }
        coords[e as usize] += a;
    }
    H1Class::new(*bundle, coords)
}

/// Constant term of `theta · f`.
pub fn pair_series(theta: &LaurentSeries, f: &LaurentSeries) -> Result<Complex64> {
    theta.mul(f)?.constant_term()
}

/// Serre pairing `⟨theta, cls⟩` between `H⁰(c, d)` and `H¹(1/c, -d)`.
pub fn serre_pair(theta: &ThetaVector, cls: &H1Class, ctx: &NumericContext) -> Result<Complex64> {
    if !theta.bundle.is_dual_to(&cls.bundle, ctx.tol().max(1e-12)) {
        return Err(Error::Domain(format!(
            "bundles ({}, {}) and ({}, {}) are not dual",
            theta.bundle.c, theta.bundle.d, cls.bundle.c, cls.bundle.d
        )));
    }
    pair_series(&theta.realize(ctx)?, &cls.representative())
}

/// Dual functional `θ_n(f) = Σ_l q^{nl} q^{d l (l+1)/2} c^{-l} f_{dl+n}`.
pub fn theta_functional(
    bundle: &LineBundle,
    n: i64,
    f: &LaurentSeries,
    ctx: &NumericContext,
) -> Result<Complex64> {
    let d = bundle.d;
    if d <= 0 {
        return Err(Error::Domain(format!(
            "theta functional needs positive degree, got {d}"
        )));
    }
    let c_inv = bundle.c.inv();
    let q = ctx.q();
    let mut acc = Complex64::new(0.0, 0.0);
    for (e, a) in f.terms() {
        if (e - n).rem_euclid(d) != 0 {
            continue;
        }
        let l = (e - n).div_euclid(d);
        let w = complex_powi(q, n * l + d * l * (l + 1) / 2) * complex_powi(c_inv, l);
        acc += w * a;
    }
    Ok(acc)
}
