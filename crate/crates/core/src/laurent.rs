//! Truncated Laurent series over the complex numbers.
//!
//! A [`LaurentSeries`] stores a sparse set of coefficients together with an
//! accuracy window `[lo, hi]` (always containing 0). Coefficients inside the
//! window are trusted; whatever lies outside is not represented. Series that
//! are genuinely finite (monomials, the polynomial representative of an
//! extension class) carry the "exact" window `[-EXACT_RADIUS, EXACT_RADIUS]`,
//! meaning every unrepresented coefficient is known to be zero.
//!
//! Multiplication shrinks windows: the coefficient of `z^e` in `f * g` is
//! trusted only when no unrepresented coefficient of one factor can meet a
//! significant coefficient of the other.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window half-width used for series that are exactly finite.
pub const EXACT_RADIUS: i64 = 1 << 40;

/// Coefficients below this fraction of the largest one are treated as
/// insignificant when propagating windows.
const SIGNIFICANT_REL: f64 = f64::EPSILON;

/// Numeric parameters shared by every computation: the nome `q`, the
/// default relative tolerance and the default truncation window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericContext {
    q: Complex64,
    tol: f64,
    default_window: i64,
    #[serde(skip, default)]
    base_window: i64,
}

impl NumericContext {
    /// Context with the automatically chosen window for `(q, tol)`.
    pub fn new(q: Complex64, tol: f64) -> Result<Self> {
        Self::validate(q, tol)?;
        let w = Self::auto_window(q, tol);
        Self::with_window(q, tol, w)
    }

    pub fn with_window(q: Complex64, tol: f64, default_window: i64) -> Result<Self> {
        Self::validate(q, tol)?;
        if default_window < 4 {
            return Err(Error::InvalidParameter(format!(
                "default window must be at least 4, got {default_window}"
            )));
        }
        Ok(NumericContext {
            q,
            tol,
            default_window,
            base_window: Self::auto_window(q, tol),
        })
    }

    fn validate(q: Complex64, tol: f64) -> Result<()> {
        let r = q.norm();
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "|q| must satisfy 0 < |q| < 1, got {r}"
            )));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        Ok(())
    }

    /// Smallest `W >= 4` with `|q|^W < tol * 1e-3`.
    pub fn auto_window(q: Complex64, tol: f64) -> i64 {
        let target = (tol * 1e-3).ln();
        let lq = q.norm().ln();
        let w = (target / lq).floor() as i64 + 1;
        w.max(4)
    }

    /// Same parameters, window multiplied by `factor`. Every truncation
    /// radius derived from the context scales with it.
    pub fn scaled_window(&self, factor: i64) -> Result<Self> {
        Self::with_window(self.q, self.tol, self.default_window * factor)
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn default_window(&self) -> i64 {
        self.default_window
    }

    /// Ratio of the configured window to the automatic one.
    pub fn truncation_scale(&self) -> f64 {
        let base = if self.base_window > 0 {
            self.base_window
        } else {
            Self::auto_window(self.q, self.tol)
        };
        self.default_window as f64 / base as f64
    }

    /// Truncation threshold for discarded series terms.
    pub fn truncation_threshold(&self) -> f64 {
        self.tol * 1e-3
    }

    pub fn q_pow(&self, e: i64) -> Complex64 {
        complex_powi(self.q, e)
    }

    /// Smallest `L >= 1` with `|q|^(a * L * (L - 1)) < tol * 1e-3`, scaled
    /// by the window ratio.
    pub fn gaussian_radius(&self, a: f64) -> i64 {
        let target = self.truncation_threshold().ln() / self.q.norm().ln();
        let mut l = 1i64;
        while a * (l * (l - 1)) as f64 <= target {
            l += 1;
        }
        self.scale_radius(l)
    }

    pub(crate) fn scale_radius(&self, l: i64) -> i64 {
        ((l as f64) * self.truncation_scale()).ceil().max(1.0) as i64
    }
}

/// Integer power of a complex number, exact for exponent 0.
pub fn complex_powi(z: Complex64, e: i64) -> Complex64 {
    if e == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let e32 = i32::try_from(e).unwrap_or(if e > 0 { i32::MAX } else { i32::MIN });
    z.powi(e32)
}

#[derive(Clone, PartialEq)]
pub struct LaurentSeries {
    coeffs: BTreeMap<i64, Complex64>,
    lo: i64,
    hi: i64,
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let window = if self.is_exact() {
            "exact".to_string()
        } else {
            format!("[{}, {}]", self.lo, self.hi)
        };
        f.debug_struct("LaurentSeries")
            .field("window", &window)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

fn clamp_exact(lo: i64, hi: i64) -> (i64, i64) {
    let lo = if lo <= -EXACT_RADIUS / 2 {
        -EXACT_RADIUS
    } else {
        lo
    };
    let hi = if hi >= EXACT_RADIUS / 2 {
        EXACT_RADIUS
    } else {
        hi
    };
    (lo, hi)
}

impl LaurentSeries {
    /// Builds a series from `(exponent, coefficient)` terms on the window
    /// `[lo, hi]`. Repeated exponents are summed; terms outside the window
    /// are an error.
    pub fn from_terms<I>(terms: I, lo: i64, hi: i64) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        if lo > 0 || hi < 0 {
            return Err(Error::WindowUnderflow {
                op: "from_terms",
                lo,
                hi,
            });
        }
        let mut coeffs = BTreeMap::new();
        for (e, c) in terms {
            if e < lo || e > hi {
                return Err(Error::Domain(format!(
                    "exponent {e} lies outside the window [{lo}, {hi}]"
                )));
            }
            *coeffs.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        let (lo, hi) = clamp_exact(lo, hi);
        Ok(LaurentSeries { coeffs, lo, hi })
    }

    /// An exactly finite Laurent polynomial.
    pub fn polynomial<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        Self::from_terms(terms, -EXACT_RADIUS, EXACT_RADIUS)
            .expect("exact window always contains every finite exponent")
    }

    pub fn monomial(c: Complex64, e: i64) -> Self {
        Self::polynomial([(e, c)])
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(c, 0)
    }

    pub fn zero() -> Self {
        Self::polynomial([])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn is_exact(&self) -> bool {
        self.lo == -EXACT_RADIUS && self.hi == EXACT_RADIUS
    }

    pub fn coeff(&self, e: i64) -> Complex64 {
        self.coeffs.get(&e).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(e, c)| (*e, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Smallest and largest exponents carrying a significant coefficient.
    pub fn significant_support(&self) -> Option<(i64, i64)> {
        let cut = self.max_abs() * SIGNIFICANT_REL;
        let mut it = self.coeffs.iter().filter(|(_, c)| c.norm() > cut);
        let first = *it.next()?.0;
        let last = it.next_back().map(|(e, _)| *e).unwrap_or(first);
        Some((first, last))
    }

    /// Every coefficient in the window has magnitude below `tol`.
    pub fn is_numerically_zero(&self, tol: f64) -> bool {
        self.coeffs.values().all(|c| c.norm() < tol)
    }

    /// Largest coefficient difference on the intersection of both windows.
    pub fn max_abs_diff(&self, other: &LaurentSeries) -> f64 {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        let mut worst: f64 = 0.0;
        for (e, c) in self.coeffs.range(lo..=hi) {
            worst = worst.max((c - other.coeff(*e)).norm());
        }
        for (e, c) in other.coeffs.range(lo..=hi) {
            if !self.coeffs.contains_key(e) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// Exact convolution of the represented coefficients, restricted to the
    /// window on which it is trustworthy.
    pub fn mul(&self, other: &LaurentSeries) -> Result<LaurentSeries> {
        let (fmin, fmax) = self.significant_support().unwrap_or((0, 0));
        let (gmin, gmax) = other.significant_support().unwrap_or((0, 0));
        let lo = (self.lo.saturating_add(gmax)).max(other.lo.saturating_add(fmax));
        let hi = (self.hi.saturating_add(gmin)).min(other.hi.saturating_add(fmin));
        let (lo, hi) = clamp_exact(lo, hi);
        if lo > 0 || hi < 0 {
            return Err(Error::WindowUnderflow {
                op: "series_mul",
                lo,
                hi,
            });
        }
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Ok(LaurentSeries {
                coeffs: BTreeMap::new(),
                lo,
                hi,
            });
        }
        let f: Vec<(i64, Complex64)> = self.terms().collect();
        let g: Vec<(i64, Complex64)> = other.terms().collect();
        let base = f[0].0 + g[0].0;
        let top = f[f.len() - 1].0 + g[g.len() - 1].0;
        let mut acc = vec![Complex64::new(0.0, 0.0); (top - base + 1) as usize];
        for &(ef, cf) in &f {
            for &(eg, cg) in &g {
                acc[(ef + eg - base) as usize] += cf * cg;
            }
        }
        let coeffs = acc
            .into_iter()
            .enumerate()
            .map(|(i, c)| (base + i as i64, c))
            .filter(|(e, c)| *e >= lo && *e <= hi && *c != Complex64::new(0.0, 0.0))
            .collect();
        Ok(LaurentSeries { coeffs, lo, hi })
    }

    /// Multiplication by `c * z^e`.
    pub fn mul_monomial(&self, c: Complex64, e: i64) -> Result<LaurentSeries> {
        let (lo, hi) = clamp_exact(self.lo.saturating_add(e), self.hi.saturating_add(e));
        if lo > 0 || hi < 0 {
            return Err(Error::WindowUnderflow {
                op: "mul_monomial",
                lo,
                hi,
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, v)| (k + e, v * c))
            .filter(|(k, v)| *k >= lo && *k <= hi && *v != Complex64::new(0.0, 0.0))
            .collect();
        Ok(LaurentSeries { coeffs, lo, hi })
    }

    fn combine(&self, other: &LaurentSeries, sign: f64) -> LaurentSeries {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        let mut coeffs: BTreeMap<i64, Complex64> =
            self.coeffs.range(lo..=hi).map(|(e, c)| (*e, *c)).collect();
        for (e, c) in other.coeffs.range(lo..=hi) {
            *coeffs.entry(*e).or_default() += c * sign;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        LaurentSeries { coeffs, lo, hi }
    }

    pub fn add(&self, other: &LaurentSeries) -> LaurentSeries {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &LaurentSeries) -> LaurentSeries {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, s: Complex64) -> LaurentSeries {
        self.map_coeffs(|_, c| c * s)
    }

    /// Applies `f(exponent, coefficient)` to every stored coefficient.
    pub fn map_coeffs(&self, f: impl Fn(i64, Complex64) -> Complex64) -> LaurentSeries {
        let mut coeffs: BTreeMap<i64, Complex64> =
            self.coeffs.iter().map(|(e, c)| (*e, f(*e, *c))).collect();
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        LaurentSeries {
            coeffs,
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// `f(z) -> f(q^j z)`: the coefficient of `z^l` is multiplied by `q^(j l)`.
    pub fn q_shift(&self, ctx: &NumericContext, j: i64) -> LaurentSeries {
        let qj = ctx.q_pow(j);
        self.map_coeffs(|e, c| c * complex_powi(qj, e))
    }

    /// `f(z) -> f(1/z)`.
    pub fn reflect(&self) -> LaurentSeries {
        LaurentSeries {
            coeffs: self.coeffs.iter().map(|(e, c)| (-e, *c)).collect(),
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn constant_term(&self) -> Result<Complex64> {
        if self.lo > 0 || self.hi < 0 {
            return Err(Error::WindowUnderflow {
                op: "constant_term",
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(self.coeff(0))
    }

    /// Reciprocal of a unit, expanded in ascending powers from its lowest
    /// significant term. Exactly finite inputs are expanded to
    /// `ctx.default_window` terms past that leading term.
    pub fn inverse(&self, ctx: &NumericContext) -> Result<LaurentSeries> {
        let (v, _) = self
            .significant_support()
            .ok_or_else(|| Error::SingularMultiplier("zero series has no inverse".into()))?;
        let lead = self.coeff(v);
        if lead.norm() < ctx.tol() * self.max_abs().max(1.0) {
            return Err(Error::SingularMultiplier(format!(
                "leading coefficient {lead} is not bounded away from zero"
            )));
        }
        let tail: Vec<(i64, Complex64)> = self
            .coeffs
            .range(v + 1..)
            .map(|(e, c)| (e - v, c / lead))
            .collect();
        let inv_lead = lead.inv();
        if tail.is_empty() && self.is_exact() {
            return Ok(LaurentSeries::monomial(inv_lead, -v));
        }
        let n_terms = if self.hi == EXACT_RADIUS {
            ctx.default_window
        } else {
            self.hi - v
        };
        let mut w = vec![Complex64::new(0.0, 0.0); (n_terms + 1) as usize];
        w[0] = Complex64::new(1.0, 0.0);
        for n in 1..=n_terms as usize {
            let mut s = Complex64::new(0.0, 0.0);
            for &(i, ui) in &tail {
                let i = i as usize;
                if i > n {
                    break;
                }
                s += ui * w[n - i];
            }
            w[n] = -s;
        }
        let lo = if self.lo == -EXACT_RADIUS {
            -EXACT_RADIUS
        } else {
            self.lo - 2 * v
        };
        let hi = n_terms - v;
        if lo > 0 || hi < 0 {
            return Err(Error::WindowUnderflow {
                op: "series_inverse",
                lo,
                hi,
            });
        }
        let coeffs = w
            .into_iter()
            .enumerate()
            .map(|(i, c)| (i as i64 - v, c * inv_lead))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        Ok(LaurentSeries { coeffs, lo, hi })
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    coeffs: BTreeMap<String, Complex64>,
    window: (i64, i64),
}

impl Serialize for LaurentSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("LaurentSeries", 2)?;
        let coeffs: BTreeMap<String, Complex64> = self
            .coeffs
            .iter()
            .map(|(e, c)| (e.to_string(), *c))
            .collect();
        st.serialize_field("coeffs", &coeffs)?;
        st.serialize_field("window", &(self.lo, self.hi))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for LaurentSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SeriesRepr::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(repr.coeffs.len());
        for (k, c) in repr.coeffs {
            let e: i64 = k.parse().map_err(de::Error::custom)?;
            terms.push((e, c));
        }
        LaurentSeries::from_terms(terms, repr.window.0, repr.window.1).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ctx() -> NumericContext {
        NumericContext::new(c(0.1), 1e-12).unwrap()
    }

    #[test]
    fn auto_window_meets_bound() {
        let ctx = ctx();
        let w = ctx.default_window();
        assert!(0.1f64.powi(w as i32) < 1e-15);
        assert!(0.1f64.powi(w as i32 - 1) >= 1e-15);
        assert!(NumericContext::new(c(1.0), 1e-12).is_err());
        assert!(NumericContext::new(c(0.5), 0.0).is_err());
        assert!(NumericContext::with_window(c(0.5), 1e-9, 3).is_err());
    }

    #[test]
    fn difference_of_squares() {
        let a = LaurentSeries::polynomial([(0, c(1.0)), (1, c(1.0))]);
        let b = LaurentSeries::polynomial([(0, c(1.0)), (1, c(-1.0))]);
        let p = a.mul(&b).unwrap();
        let want = LaurentSeries::polynomial([(0, c(1.0)), (2, c(-1.0))]);
        assert_eq!(p, want);
        assert!(p.is_exact());
    }

    #[test]
    fn exponent_cancellation() {
        let p = LaurentSeries::monomial(c(1.0), -1)
            .mul(&LaurentSeries::monomial(c(1.0), 1))
            .unwrap();
        assert_eq!(p, LaurentSeries::one());
    }

    #[test]
    fn product_window_shrinks_by_significant_support() {
        let f = LaurentSeries::from_terms([(-2, c(1.0)), (3, c(2.0))], -10, 10).unwrap();
        let g = LaurentSeries::polynomial([(1, c(1.0)), (2, c(1.0))]);
        let p = f.mul(&g).unwrap();
        // lower: max(-10 + 2, -R + 3); upper: min(10 + 1, R - 2)
        assert_eq!(p.window(), (-8, 11));
    }

    #[test]
    fn window_underflow_is_reported() {
        let f = LaurentSeries::from_terms((-3..=3).map(|e| (e, c(1.0))), -3, 3).unwrap();
        let g = LaurentSeries::from_terms([(-2, c(1.0)), (2, c(1.0))], -3, 3).unwrap();
        // lo = max(-3 + 2, -3 + 3) = 0, hi = min(3 - 2, 3 - 3) = 0: fine
        assert_eq!(f.mul(&g).unwrap().window(), (0, 0));
        let h = LaurentSeries::from_terms([(-2, c(1.0)), (3, c(1.0))], -2, 3).unwrap();
        let k = LaurentSeries::from_terms([(-3, c(1.0)), (3, c(1.0))], -3, 3).unwrap();
        assert!(matches!(
            h.mul(&k),
            Err(Error::WindowUnderflow {
                op: "series_mul",
                ..
            })
        ));
        assert!(LaurentSeries::from_terms([], 1, 4).is_err());
    }

    #[test]
    fn q_shift_of_monomials() {
        let ctx = ctx();
        let z = LaurentSeries::monomial(c(1.0), 1);
        assert!((z.q_shift(&ctx, 1).coeff(1) - c(0.1)).norm() < 1e-16);
        let k = LaurentSeries::constant(Complex64::new(2.0, -1.0));
        assert_eq!(k.q_shift(&ctx, 1), k);
        let back = z.q_shift(&ctx, 3).q_shift(&ctx, -3);
        assert!((back.coeff(1) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn constant_term_examples() {
        let f = LaurentSeries::polynomial([(0, c(3.0)), (1, c(2.0))]);
        assert_eq!(f.constant_term().unwrap(), c(3.0));
        let g = LaurentSeries::polynomial([(-1, c(1.0)), (1, c(1.0))]);
        assert_eq!(g.constant_term().unwrap(), c(0.0));
    }

    #[test]
    fn inverse_of_unit() {
        let ctx = ctx();
        let m = LaurentSeries::monomial(Complex64::new(0.5, 0.5), -3);
        let inv = m.inverse(&ctx).unwrap();
        assert!(inv.is_exact());
        assert!(m.mul(&inv).unwrap().max_abs_diff(&LaurentSeries::one()) < 1e-15);

        // 1 - z/2 has the ascending inverse 1 + z/2 + z^2/4 + ...
        let u = LaurentSeries::polynomial([(0, c(1.0)), (1, c(-0.5))]);
        let inv = u.inverse(&ctx).unwrap();
        assert_eq!(inv.window().1, ctx.default_window());
        let prod = u.mul(&inv).unwrap();
        assert!(prod.max_abs_diff(&LaurentSeries::one()) < 1e-14);
        assert!(LaurentSeries::zero().inverse(&ctx).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let f = LaurentSeries::from_terms([(-2, Complex64::new(1.0, -2.0)), (5, c(0.25))], -4, 9)
            .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"coeffs":{"-2":[1.0,-2.0],"5":[0.25,0.0]},"window":[-4,9]}"#
        );
        let back: LaurentSeries = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    fn dense(lo: i64, hi: i64) -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), (hi - lo + 1) as usize)
    }

    fn series(v: &[(f64, f64)], lo: i64, wlo: i64, whi: i64) -> LaurentSeries {
        LaurentSeries::from_terms(
            v.iter()
                .enumerate()
                .map(|(i, (a, b))| (lo + i as i64, Complex64::new(*a, *b))),
            wlo,
            whi,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(a in dense(-3, 3), b in dense(-2, 4), d in dense(-1, 2)) {
            let f = series(&a, -3, -20, 20);
            let g = series(&b, -2, -20, 20);
            let h = series(&d, -1, -20, 20);
            let fg = f.mul(&g).unwrap();
            let gf = g.mul(&f).unwrap();
            prop_assert_eq!(fg.window(), gf.window());
            prop_assert!(fg.max_abs_diff(&gf) < 1e-14);
            let left = fg.mul(&h).unwrap();
            let right = f.mul(&g.mul(&h).unwrap()).unwrap();
            prop_assert_eq!(left.window(), right.window());
            prop_assert!(left.max_abs_diff(&right) <= 1e-13 * left.max_abs().max(1.0));
        }

        #[test]
        fn q_shift_inverts(a in dense(-6, 6), re in 0.05f64..0.3, im in -0.1f64..0.1) {
            let ctx = NumericContext::new(Complex64::new(re, im), 1e-12).unwrap();
            let f = series(&a, -6, -6, 6);
            let back = f.q_shift(&ctx, 1).q_shift(&ctx, -1);
            prop_assert_eq!(back.window(), f.window());
            prop_assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs().max(1.0));
        }
    }
}
