//! Matrix multipliers for rank-two extensions `0 → ξ₀* → V → ξ₀ → 0` with
//! `ξ₀ = L(ηz)^k`, their duals and endomorphism bundles.
//!
//! Conventions: a multiplier `M` acts on sections by `s(qz) = M(z) s(z)`.
//! The extension with class `x` has multiplier
//!
//! ```text
//! ( (ηz)^{-k}       0      )
//! ( (ηz)^k x(z)  (ηz)^k    )
//! ```
//!
//! so the stored corner carries `(ηz)^k x` while the class coordinates are
//! those of the plain polynomial `x(z) = Σ_{j<2k} x_j z^j`, an element of
//! `H¹` of the line bundle `(η^{-2k}, -2k)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{complex_powi, LaurentSeries, NumericContext};
use crate::linalg;
use crate::theta::{h1_reduce, H1Class, LineBundle, ThetaVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multiplier {
    entries: Vec<Vec<LaurentSeries>>,
}

impl Multiplier {
    pub fn new(entries: Vec<Vec<LaurentSeries>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(
                "multiplier must be a nonempty square matrix".into(),
            ));
        }
        Ok(Multiplier { entries })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal((0..n).map(|_| LaurentSeries::one()).collect())
    }

    pub fn diagonal(diag: Vec<LaurentSeries>) -> Self {
        let n = diag.len();
        let entries = diag
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            d.clone()
                        } else {
                            LaurentSeries::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Multiplier { entries }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<LaurentSeries>] {
        &self.entries
    }

    pub fn transpose(&self) -> Multiplier {
        let n = self.size();
        Multiplier {
            entries: (0..n)
                .map(|i| (0..n).map(|j| self.entries[j][i].clone()).collect())
                .collect(),
        }
    }

    pub fn mul(&self, other: &Multiplier) -> Result<Multiplier> {
        let n = self.size();
        if other.size() != n {
            return Err(Error::InvalidParameter("multiplier sizes differ".into()));
        }
        let mut entries = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut acc = LaurentSeries::zero();
                for l in 0..n {
                    acc = acc.add(&self.entries[i][l].mul(&other.entries[l][j])?);
                }
                row.push(acc);
            }
            entries.push(row);
        }
        Ok(Multiplier { entries })
    }

    /// Applies the matrix to a column of series.
    pub fn apply(&self, v: &[LaurentSeries]) -> Result<Vec<LaurentSeries>> {
        if v.len() != self.size() {
            return Err(Error::InvalidParameter(
                "vector length differs from multiplier size".into(),
            ));
        }
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .try_fold(LaurentSeries::zero(), |acc, (m, s)| Ok(acc.add(&m.mul(s)?)))
            })
            .collect()
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Multiplier {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip_row)
            .map(|(_, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip_col)
                    .map(|(_, s)| s.clone())
                    .collect()
            })
            .collect();
        Multiplier { entries }
    }

    /// Cofactor expansion along the first row.
    pub fn determinant(&self) -> Result<LaurentSeries> {
        let n = self.size();
        if n == 1 {
            return Ok(self.entries[0][0].clone());
        }
        let mut det = LaurentSeries::zero();
        for j in 0..n {
            if self.entries[0][j].num_terms() == 0 && self.entries[0][j].is_exact() {
                continue;
            }
            let term = self.entries[0][j].mul(&self.minor(0, j).determinant()?)?;
            det = if j % 2 == 0 {
                det.add(&term)
            } else {
                det.sub(&term)
            };
        }
        Ok(det)
    }

    /// Max coefficient distance to another multiplier of the same size.
    pub fn max_abs_diff(&self, other: &Multiplier) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Inverse transpose, via cofactors over the determinant.
pub fn dual_multiplier(m: &Multiplier, ctx: &NumericContext) -> Result<Multiplier> {
    let n = m.size();
    let det_inv = m.determinant()?.inverse(ctx)?;
    if n == 1 {
        return Multiplier::new(vec![vec![det_inv]]);
    }
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let cof = m.minor(i, j).determinant()?;
            let cof = if (i + j) % 2 == 0 {
                cof
            } else {
                cof.scale(-ONE)
            };
            row.push(cof.mul(&det_inv)?);
        }
        entries.push(row);
    }
    Multiplier::new(entries)
}

/// Kronecker product, row index `(i, k) ↦ n_b i + k`.
pub fn kronecker(a: &Multiplier, b: &Multiplier) -> Result<Multiplier> {
    let (na, nb) = (a.size(), b.size());
    let n = na * nb;
    let mut entries = vec![Vec::with_capacity(n); n];
    for (r, row) in entries.iter_mut().enumerate() {
        for c in 0..n {
            row.push(a.entries[r / nb][c / nb].mul(&b.entries[r % nb][c % nb])?);
        }
    }
    Multiplier::new(entries)
}

/// An extension class `[x] ∈ Ext¹(ξ₀, ξ₀*)` in the basis `[1], …, [z^{2k-1}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionClass {
    pub k: usize,
    pub eta: Complex64,
    pub coords: Vec<Complex64>,
}

impl ExtensionClass {
    pub fn new(k: usize, eta: Complex64, coords: Vec<Complex64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(eta.norm() > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eta must be finite and nonzero, got {eta}"
            )));
        }
        if coords.len() != 2 * k {
            return Err(Error::InvalidParameter(format!(
                "extension class needs {} coordinates, got {}",
                2 * k,
                coords.len()
            )));
        }
        Ok(ExtensionClass { k, eta, coords })
    }

    pub fn zero(k: usize, eta: Complex64) -> Result<Self> {
        Self::new(k, eta, vec![ZERO; 2 * k])
    }

    pub fn dim(&self) -> usize {
        2 * self.k
    }

    pub fn ki(&self) -> i64 {
        self.k as i64
    }

    /// `η^k`, the multiplier scalar of `ξ₀`.
    pub fn eta_k(&self) -> Complex64 {
        complex_powi(self.eta, self.ki())
    }

    /// `x(z) = Σ x_j z^j`.
    pub fn polynomial(&self) -> LaurentSeries {
        LaurentSeries::polynomial(self.coords.iter().enumerate().map(|(j, c)| (j as i64, *c)))
    }

    /// `x_j`, zero outside `0..2k`.
    pub fn coord(&self, j: i64) -> Complex64 {
        if j < 0 || j >= self.dim() as i64 {
            ZERO
        } else {
            self.coords[j as usize]
        }
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        ExtensionClass {
            coords: self.coords.iter().map(|c| c * s).collect(),
            ..self.clone()
        }
    }

    /// `ξ₀ = (η^k, k)`.
    pub fn xi0(&self, ctx: &NumericContext) -> Result<LineBundle> {
        LineBundle::new(self.eta_k(), self.ki(), ctx)
    }

    /// `(ξ₀*)^{⊗2} = (η^{-2k}, -2k)`, whose `H¹` holds the class.
    pub fn bundle(&self, ctx: &NumericContext) -> Result<LineBundle> {
        LineBundle::new(complex_powi(self.eta, -2 * self.ki()), -2 * self.ki(), ctx)
    }

    pub fn as_h1(&self, ctx: &NumericContext) -> Result<H1Class> {
        H1Class::new(self.bundle(ctx)?, self.coords.clone())
    }
}

/// A section of `End(V)` written as `[[a, b], [c, d]]`; `b` maps the
/// quotient generator into the sub-bundle, so `b = 0` preserves the flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicSection {
    pub a: LaurentSeries,
    pub b: LaurentSeries,
    pub c: LaurentSeries,
    pub d: LaurentSeries,
}

impl ParabolicSection {
    pub fn is_trace_free(&self, tol: f64) -> bool {
        self.a.add(&self.d).is_numerically_zero(tol)
    }

    pub fn is_parabolic(&self, tol: f64) -> bool {
        self.b.is_numerically_zero(tol)
    }

    /// Components in the order `e₁*⊗e₁, e₁*⊗e₂, e₂*⊗e₁, e₂*⊗e₂`.
    pub fn as_vector(&self) -> [LaurentSeries; 4] {
        [
            self.a.clone(),
            self.c.clone(),
            self.b.clone(),
            self.d.clone(),
        ]
    }
}

/// `((ηz)^{-k}, 0; (ηz)^k x, (ηz)^k)`.
pub fn extension_multiplier(x: &ExtensionClass, _ctx: &NumericContext) -> Result<Multiplier> {
    let k = x.ki();
    let ek = x.eta_k();
    let corner = x.polynomial().mul_monomial(ek, k)?;
    Multiplier::new(vec![
        vec![LaurentSeries::monomial(ek.inv(), -k), LaurentSeries::zero()],
        vec![corner, LaurentSeries::monomial(ek, k)],
    ])
}

/// Multiplier of `End(V) = V* ⊗ V` in the basis
/// `e₁*⊗e₁, e₁*⊗e₂, e₂*⊗e₁, e₂*⊗e₂`.
pub fn end_multiplier(x: &ExtensionClass, ctx: &NumericContext) -> Result<Multiplier> {
    let m = extension_multiplier(x, ctx)?;
    kronecker(&dual_multiplier(&m, ctx)?, &m)
}

/// Max relative residual of `s(qz) = M(z) s(z)` for a section of `End(V)`.
pub fn section_residual(
    x: &ExtensionClass,
    s: &ParabolicSection,
    ctx: &NumericContext,
) -> Result<f64> {
    let m = end_multiplier(x, ctx)?;
    let v = s.as_vector();
    let lhs: Vec<LaurentSeries> = v.iter().map(|f| f.q_shift(ctx, 1)).collect();
    let rhs = m.apply(&v)?;
    let scale = v.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| a.max_abs_diff(b))
        .fold(0.0, f64::max)
        / scale)
}

/// Connecting map `H⁰(ξ₀) → H¹(ξ₀*)`, `b ↦ [b x]`.
pub fn coboundary(x: &ExtensionClass, b: &ThetaVector, ctx: &NumericContext) -> Result<H1Class> {
    let xi0 = x.xi0(ctx)?;
    if b.bundle.degree() != xi0.degree()
        || (b.bundle.c() - xi0.c()).norm() > ctx.tol() * xi0.c().norm()
    {
        return Err(Error::Domain(format!(
            "section lives on ({}, {}), expected ({}, {})",
            b.bundle.c(),
            b.bundle.degree(),
            xi0.c(),
            xi0.degree()
        )));
    }
    let series = b.realize(ctx)?;
    let residual = xi0.functional_residual(&series, ctx)?;
    if residual > ctx.tol() {
        return Err(Error::InvalidSection {
            residual,
            tol: ctx.tol(),
        });
    }
    h1_reduce(&xi0.dual(), &series.mul(&x.polynomial())?, ctx)
}

/// Reads the class off a lower-triangular multiplier of the extension shape.
/// Only `η^k` is recoverable; the returned `eta` is its principal k-th root.
pub fn extension_class(m: &Multiplier, ctx: &NumericContext) -> Result<ExtensionClass> {
    if m.size() != 2 {
        return Err(Error::Domain(format!(
            "expected a 2x2 multiplier, got {}x{}",
            m.size(),
            m.size()
        )));
    }
    let upper = m.entry(0, 1);
    let scale = m.entry(1, 1).max_abs().max(1.0);
    if !upper.is_numerically_zero(ctx.tol() * scale) {
        return Err(Error::Domain("multiplier is not lower triangular".into()));
    }
    let monomial = |s: &LaurentSeries| -> Option<(i64, Complex64)> {
        let (lo, hi) = s.significant_support()?;
        let c = s.coeff(lo);
        let rest = s
            .terms()
            .filter(|(e, _)| *e != lo)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        (lo == hi || rest < ctx.tol() * c.norm()).then_some((lo, c))
    };
    let (k, ek) = monomial(m.entry(1, 1))
        .filter(|(k, _)| *k >= 1)
        .ok_or_else(|| Error::Domain("lower-right entry is not (ηz)^k with k >= 1".into()))?;
    let (kk, ek_inv) = monomial(m.entry(0, 0))
        .ok_or_else(|| Error::Domain("upper-left entry is not a monomial".into()))?;
    if kk != -k || (ek * ek_inv - ONE).norm() > ctx.tol().max(1e-12) {
        return Err(Error::Domain(
            "diagonal entries are not (ηz)^{-k} and (ηz)^k".into(),
        ));
    }
    let eta = ek.powf(1.0 / k as f64);
    let bundle = LineBundle::new(ek.powi(-2), -2 * k, ctx)?;
    let normalized = m.entry(1, 0).mul_monomial(ek.inv(), -k)?;
    let cls = h1_reduce(&bundle, &normalized, ctx)?;
    ExtensionClass::new(k as usize, eta, cls.coords)
}

/// Solutions of the section equations with `b = 0`, i.e. flag-preserving
/// infinitesimal automorphisms of `V` (the full `gl₂` parabolic, scalars
/// included), found as the numerical null space of the coefficient system
/// truncated to exponents `[-W, W]`.
pub fn parabolic_sections(
    x: &ExtensionClass,
    ctx: &NumericContext,
) -> Result<Vec<ParabolicSection>> {
    let k = x.ki();
    let w = ctx.default_window();
    let span = 2 * w + 1;
    let nun = 3 * span as usize;
    let ia = |e: i64| (e + w) as usize;
    let id = |e: i64| span as usize + (e + w) as usize;
    let ic = |e: i64| 2 * span as usize + (e + w) as usize;
    let inside = |e: i64| (-w..=w).contains(&e);
    let eta2k_inv = complex_powi(x.eta, -2 * k);

    let mut rows: Vec<Vec<(usize, Complex64)>> = Vec::new();
    for e in -w..=w {
        let f = ctx.q_pow(e) - ONE;
        rows.push(vec![(ia(e), f)]);
        rows.push(vec![(id(e), f)]);
    }
    // coefficient of z^e in η^{-2k} z^{-2k} c(qz) - c - (a - d) x
    for e in (-w - 2 * k)..=w {
        let mut row = Vec::new();
        if inside(e + 2 * k) {
            row.push((ic(e + 2 * k), eta2k_inv * ctx.q_pow(e + 2 * k)));
        }
        if inside(e) {
            row.push((ic(e), -ONE));
        }
        for (j, xj) in x.coords.iter().enumerate() {
            let t = e - j as i64;
            if inside(t) && *xj != ZERO {
                row.push((ia(t), -xj));
                row.push((id(t), *xj));
            }
        }
        if !row.is_empty() {
            rows.push(row);
        }
    }
    let mut mat = DMatrix::<Complex64>::zeros(rows.len(), nun);
    for (r, row) in rows.iter().enumerate() {
        let norm = row.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
        if norm == 0.0 {
            continue;
        }
        for (col, v) in row {
            mat[(r, *col)] += v / norm;
        }
    }
    let null = linalg::null_space(&mat, ctx.tol());
    // drop rounding noise: it would be amplified by q^{-e} at negative e
    let series = |v: &linalg::CVector, off: usize| {
        let cut = 1e-9 * v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        LaurentSeries::from_terms(
            (-w..=w)
                .map(|e| (e, v[off + (e + w) as usize]))
                .filter(|(_, c)| c.norm() > cut),
            -w,
            w,
        )
    };
    null.iter()
        .map(|v| {
            Ok(ParabolicSection {
                a: series(v, 0)?,
                b: LaurentSeries::zero(),
                c: series(v, 2 * span as usize)?,
                d: series(v, span as usize)?,
            })
        })
        .collect()
}

pub fn parabolic_aut_dim(x: &ExtensionClass, ctx: &NumericContext) -> Result<usize> {
    Ok(parabolic_sections(x, ctx)?.len())
}
