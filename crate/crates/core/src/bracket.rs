//! The quadratic Poisson bracket on `Ext¹(ξ₀, ξ₀*) ≅ ℂ^{2k}`.
//!
//! `Π[m][n]` pairs the covectors `dϑ_{-m}` and `dϑ_{-n}`, where `ϑ` is the
//! theta basis of `ξ₀^{⊗2} = (η^{2k}, 2k)` and `θ_m = ⟨ϑ_{-m}, ·⟩` the dual
//! functionals. Three evaluations are provided:
//!
//! * [`bracket_entry_closed`]: the explicit sum
//!   `Σ_{u≠0} Σ_{l,t} f(u) q^{ml+nt} q^{k[l(l+1)+t(t+1)]} η^{-2k(l+t)} x_{2kl+m+u} x_{2kt+n-u}`
//!   with `f(u) = (q^u+1)/(q^u-1)`;
//! * [`bracket_entry_succinct`]: `Σ_{u≠0} f(u) ⟨ϑ_{-m}, [x z^{-u}]⟩ ⟨ϑ_{-n}, [x z^u]⟩`
//!   through `h1_reduce` and `serre_pair`;
//! * [`bivector_apply_series`]: the class `[(b'x - 2a) x]` built from series.
//!
//! The closed form is a polynomial in `x` and is evaluated everywhere, but it
//! only has geometric meaning on the admissible locus `x_m = x_n = 0` where
//! `dϑ_{-m}`, `dϑ_{-n}` are genuine covectors.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{complex_powi, LaurentSeries, NumericContext};
use crate::qdiff::ExtensionClass;
use crate::theta::{h1_reduce, serre_pair, theta_basis_at, H1Class, LineBundle, ThetaVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(q^u + 1)/(q^u - 1)`.
pub fn bracket_kernel(ctx: &NumericContext, u: i64) -> Complex64 {
    let qu = ctx.q_pow(u);
    (qu + 1.0) / (qu - 1.0)
}

/// Summation radius `L` for the `l, t` sums.
pub fn bracket_truncation(k: usize, ctx: &NumericContext) -> i64 {
    ctx.gaussian_radius(k as f64)
}

/// `ξ₀^{⊗2} = (η^{2k}, 2k)`.
pub fn square_bundle(x: &ExtensionClass, ctx: &NumericContext) -> Result<LineBundle> {
    LineBundle::new(complex_powi(x.eta, 2 * x.ki()), 2 * x.ki(), ctx)
}

fn check_index(x: &ExtensionClass, i: usize) -> Result<()> {
    if i >= x.dim() {
        return Err(Error::InvalidParameter(format!(
            "index {i} out of range 0..{}",
            x.dim()
        )));
    }
    Ok(())
}

fn check_admissible(x: &ExtensionClass, idx: &[usize], ctx: &NumericContext) -> Result<()> {
    let tol = ctx.tol() * x.max_abs().max(1.0);
    for &i in idx {
        let v = x.coords[i].norm();
        if v > tol {
            return Err(Error::InvalidCovector {
                index: i,
                value: v,
                tol,
            });
        }
    }
    Ok(())
}

pub fn bracket_entry_closed(
    x: &ExtensionClass,
    m: usize,
    n: usize,
    ctx: &NumericContext,
) -> Result<Complex64> {
    check_index(x, m)?;
    check_index(x, n)?;
    let weights = BracketWeights::new(x, ctx);
    Ok(weights.entry(x, m as i64, n as i64))
}

struct BracketWeights {
    k2: i64,
    big_l: i64,
    // w[m][l + L] = q^{ml} q^{k l (l+1)} η^{-2kl}
    w: Vec<Vec<Complex64>>,
    kernel: Vec<Complex64>,
    umax: i64,
}

impl BracketWeights {
    fn new(x: &ExtensionClass, ctx: &NumericContext) -> Self {
        let k = x.ki();
        let k2 = 2 * k;
        let big_l = bracket_truncation(x.k, ctx);
        let eta_inv = complex_powi(x.eta, -k2);
        let w = (0..k2)
            .map(|m| {
                (-big_l..=big_l)
                    .map(|l| ctx.q_pow(m * l + k * l * (l + 1)) * complex_powi(eta_inv, l))
                    .collect()
            })
            .collect();
        let umax = k2 * (big_l + 1) + k2;
        let kernel = (-umax..=umax)
            .map(|u| if u == 0 { ZERO } else { bracket_kernel(ctx, u) })
            .collect();
        BracketWeights {
            k2,
            big_l,
            w,
            kernel,
            umax,
        }
    }

    fn entry(&self, x: &ExtensionClass, m: i64, n: i64) -> Complex64 {
        let k2 = self.k2;
        let big_l = self.big_l;
        let mut acc = ZERO;
        for l in -big_l..=big_l {
            let wl = self.w[m as usize][(l + big_l) as usize];
            for j in 0..k2 {
                let xj = x.coords[j as usize];
                if xj == ZERO {
                    continue;
                }
                // x_{2kl+m+u} = x_j
                let u = j - k2 * l - m;
                if u == 0 {
                    continue;
                }
                let f = self.kernel[(u + self.umax) as usize];
                for t in -big_l..=big_l {
                    let s = k2 * t + n - u;
                    if s < 0 || s >= k2 {
                        continue;
                    }
                    let xs = x.coords[s as usize];
                    acc += f * wl * self.w[n as usize][(t + big_l) as usize] * xj * xs;
                }
            }
        }
        acc
    }
}

/// `ϑ_{-m}` written in the reduced basis: `ϑ_0`, or `c q^{-m} ϑ_{2k-m}`.
fn shifted_theta_vector(bundle: LineBundle, m: usize, ctx: &NumericContext) -> Result<ThetaVector> {
    let d = bundle.degree() as usize;
    let mut coords = vec![ZERO; d];
    if m == 0 {
        coords[0] = ONE;
    } else {
        coords[d - m] = bundle.c() * ctx.q_pow(-(m as i64));
    }
    ThetaVector::new(bundle, coords)
}

pub fn bracket_entry_succinct(
    x: &ExtensionClass,
    m: usize,
    n: usize,
    ctx: &NumericContext,
) -> Result<Complex64> {
    check_index(x, m)?;
    check_index(x, n)?;
    let sq = square_bundle(x, ctx)?;
    let h1 = x.bundle(ctx)?;
    let tm = shifted_theta_vector(sq, m, ctx)?;
    let tn = shifted_theta_vector(sq, n, ctx)?;
    let xp = x.polynomial();
    let umax = 2 * x.ki() * (bracket_truncation(x.k, ctx) + 2);
    let mut acc = ZERO;
    for u in 1..=umax {
        for u in [u, -u] {
            let minus: H1Class = h1_reduce(&h1, &xp.mul_monomial(ONE, -u)?, ctx)?;
            let plus: H1Class = h1_reduce(&h1, &xp.mul_monomial(ONE, u)?, ctx)?;
            acc += bracket_kernel(ctx, u)
                * serre_pair(&tm, &minus, ctx)?
                * serre_pair(&tn, &plus, ctx)?;
        }
    }
    Ok(acc)
}

/// `B^#(dϑ_{-m})` as a class in `H¹(η^{-2k}, -2k)`.
pub fn bivector_apply_series(
    x: &ExtensionClass,
    m: usize,
    ctx: &NumericContext,
) -> Result<H1Class> {
    check_index(x, m)?;
    check_admissible(x, &[m], ctx)?;
    let sq = square_bundle(x, ctx)?;
    let b_prime = theta_basis_at(&sq, -(m as i64), ctx)?;
    let beta = b_prime.mul(&x.polynomial())?;
    let (lo, hi) = beta.window();
    let a = LaurentSeries::from_terms(
        beta.terms()
            .filter(|(l, _)| *l != 0)
            .map(|(l, c)| (l, c / (ONE - ctx.q_pow(l)))),
        lo,
        hi,
    )?;
    let inner = beta.sub(&a.scale(Complex64::new(2.0, 0.0)));
    h1_reduce(&x.bundle(ctx)?, &inner.mul(&x.polynomial())?, ctx)
}

/// `Π[m][n]` via [`bivector_apply_series`] (requires `x_m = 0`).
pub fn bracket_entry_series(
    x: &ExtensionClass,
    m: usize,
    n: usize,
    ctx: &NumericContext,
) -> Result<Complex64> {
    check_index(x, n)?;
    Ok(bivector_apply_series(x, m, ctx)?.coords[n])
}

fn closed_entries(x: &ExtensionClass, ctx: &NumericContext) -> Vec<Vec<Complex64>> {
    let weights = BracketWeights::new(x, ctx);
    let d = x.dim() as i64;
    (0..d)
        .map(|m| (0..d).map(|n| weights.entry(x, m, n)).collect())
        .collect()
}

fn max_abs(m: &[Vec<Complex64>]) -> f64 {
    m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

fn skew_residual(m: &[Vec<Complex64>]) -> f64 {
    let d = m.len();
    let mut r: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            r = r.max((m[i][j] + m[j][i]).norm());
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketMatrix {
    pub k: usize,
    pub eta: Complex64,
    pub x: ExtensionClass,
    pub entries: Vec<Vec<Complex64>>,
    /// `max |Π + Πᵀ|`.
    pub skew_residual: f64,
    /// Radius `L` of the `l, t` sums.
    pub truncation_l: i64,
}

impl BracketMatrix {
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn to_matrix(&self) -> crate::linalg::CMatrix {
        let d = self.entries.len();
        crate::linalg::CMatrix::from_fn(d, d, |i, j| self.entries[i][j])
    }
}

/// Assembles `Π(x)` from the closed form and checks skew-symmetry.
pub fn bracket_matrix(x: &ExtensionClass, ctx: &NumericContext) -> Result<BracketMatrix> {
    let entries = closed_entries(x, ctx);
    let skew = skew_residual(&entries);
    let scale = max_abs(&entries).max(1.0);
    if skew > ctx.tol().max(1e-12) * scale {
        return Err(Error::InternalConsistency {
            what: "bracket skew-symmetry",
            residual: skew / scale,
        });
    }
    Ok(BracketMatrix {
        k: x.k,
        eta: x.eta,
        x: x.clone(),
        entries,
        skew_residual: skew,
        truncation_l: bracket_truncation(x.k, ctx),
    })
}

/// `Π[m][n](x) = Σ_{j,s} K[m][n][j][s] x_j x_s` with `K` symmetric in `(j, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketTensor {
    pub k: usize,
    pub eta: Complex64,
    pub coeffs: Vec<Vec<Vec<Vec<Complex64>>>>,
}

impl BracketTensor {
    pub fn dim(&self) -> usize {
        2 * self.k
    }

    pub fn eval(&self, x: &ExtensionClass) -> Vec<Vec<Complex64>> {
        let d = self.dim();
        (0..d)
            .map(|m| {
                (0..d)
                    .map(|n| {
                        let mut acc = ZERO;
                        for j in 0..d {
                            for s in 0..d {
                                acc += self.coeffs[m][n][j][s] * x.coords[j] * x.coords[s];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// `∂Π[a][b] / ∂x_p` at `x`.
    pub fn derivative(&self, a: usize, b: usize, p: usize, x: &ExtensionClass) -> Complex64 {
        let row = &self.coeffs[a][b][p];
        2.0 * row
            .iter()
            .zip(&x.coords)
            .map(|(k, v)| k * v)
            .sum::<Complex64>()
    }
}

/// Extracts `K` by evaluating `Π` on `e_j` and `e_j + e_s` (polarization).
pub fn bracket_tensor(k: usize, eta: Complex64, ctx: &NumericContext) -> Result<BracketTensor> {
    let d = 2 * k;
    let unit = |idx: &[usize]| -> Result<ExtensionClass> {
        let mut v = vec![ZERO; d];
        for &i in idx {
            v[i] = ONE;
        }
        ExtensionClass::new(k, eta, v)
    };
    let diag: Vec<Vec<Vec<Complex64>>> = (0..d)
        .into_par_iter()
        .map(|j| unit(&[j]).map(|x| closed_entries(&x, ctx)))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j + 1..d).map(move |s| (j, s)))
        .collect();
    let mixed: Vec<Vec<Vec<Complex64>>> = pairs
        .par_iter()
        .map(|&(j, s)| unit(&[j, s]).map(|x| closed_entries(&x, ctx)))
        .collect::<Result<_>>()?;
    let mut coeffs = vec![vec![vec![vec![ZERO; d]; d]; d]; d];
    for m in 0..d {
        for n in 0..d {
            for j in 0..d {
                coeffs[m][n][j][j] = diag[j][m][n];
            }
            for (idx, &(j, s)) in pairs.iter().enumerate() {
                let v = (mixed[idx][m][n] - diag[j][m][n] - diag[s][m][n]) * 0.5;
                coeffs[m][n][j][s] = v;
                coeffs[m][n][s][j] = v;
            }
        }
    }
    Ok(BracketTensor { k, eta, coeffs })
}

/// Jacobiator without the admissibility check. Diagnostic only: off the
/// admissible locus the quadratic extension of `Π` need not satisfy Jacobi.
pub fn jacobiator_unchecked(
    tensor: &BracketTensor,
    x: &ExtensionClass,
    m: usize,
    n: usize,
    s: usize,
) -> Complex64 {
    let pi = tensor.eval(x);
    let d = tensor.dim();
    let mut acc = ZERO;
    for p in 0..d {
        acc += pi[p][m] * tensor.derivative(n, s, p, x)
            + pi[p][n] * tensor.derivative(s, m, p, x)
            + pi[p][s] * tensor.derivative(m, n, p, x);
    }
    acc
}

/// Scale `max|Π| · max|∂Π|` against which Jacobiator values are judged.
pub fn jacobi_scale(tensor: &BracketTensor, x: &ExtensionClass) -> f64 {
    let d = tensor.dim();
    let pi = max_abs(&tensor.eval(x));
    let mut dpi: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            for p in 0..d {
                dpi = dpi.max(tensor.derivative(a, b, p, x).norm());
            }
        }
    }
    pi * dpi
}

pub fn jacobiator_with(
    tensor: &BracketTensor,
    x: &ExtensionClass,
    m: usize,
    n: usize,
    s: usize,
    ctx: &NumericContext,
) -> Result<Complex64> {
    for i in [m, n, s] {
        check_index(x, i)?;
    }
    check_admissible(x, &[m, n, s], ctx)?;
    Ok(jacobiator_unchecked(tensor, x, m, n, s))
}

pub fn jacobiator(
    x: &ExtensionClass,
    m: usize,
    n: usize,
    s: usize,
    ctx: &NumericContext,
) -> Result<Complex64> {
    for i in [m, n, s] {
        check_index(x, i)?;
    }
    check_admissible(x, &[m, n, s], ctx)?;
    let tensor = bracket_tensor(x.k, x.eta, ctx)?;
    Ok(jacobiator_unchecked(&tensor, x, m, n, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(q: f64) -> NumericContext {
        NumericContext::new(cx(q, 0.0), 1e-12).unwrap()
    }

    fn random_x(
        rng: &mut ChaCha8Rng,
        k: usize,
        eta: Complex64,
        zeroed: &[usize],
    ) -> ExtensionClass {
        let mut v: Vec<Complex64> = (0..2 * k)
            .map(|_| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        for &i in zeroed {
            v[i] = ZERO;
        }
        ExtensionClass::new(k, eta, v).unwrap()
    }

    /// Independent oracle: the succinct form written with the functional
    /// `θ_m(g) = Σ_l q^{ml} q^{kl(l+1)} η^{-2kl} g_{2kl+m}` applied to the
    /// shifted polynomials directly.
    fn oracle_entry(x: &ExtensionClass, m: i64, n: i64, q: Complex64) -> Complex64 {
        let k = x.ki();
        let theta = |mm: i64, shift: i64| -> Complex64 {
            let mut acc = ZERO;
            for l in -12i64..=12 {
                let idx = 2 * k * l + mm - shift;
                let w = complex_powi(q, mm * l + k * l * (l + 1)) * complex_powi(x.eta, -2 * k * l);
                acc += w * x.coord(idx);
            }
            acc
        };
        let mut acc = ZERO;
        for u in -60i64..=60 {
            if u == 0 {
                continue;
            }
            let qu = complex_powi(q, u);
            acc += (qu + 1.0) / (qu - 1.0) * theta(m, -u) * theta(n, u);
        }
        acc
    }

    #[test]
    fn zero_class_gives_zero_bracket() {
        let ctx = ctx(0.1);
        for k in 1..=3 {
            let x = ExtensionClass::zero(k, cx(0.8, 0.0)).unwrap();
            let b = bracket_matrix(&x, &ctx).unwrap();
            assert_eq!(b.max_abs(), 0.0);
            assert_eq!(bivector_apply_series(&x, 0, &ctx).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn closed_form_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for q in [0.1, 0.3] {
            let ctx = ctx(q);
            for k in 1..=3 {
                for eta in [cx(0.8, 0.0), cx(0.6, 0.3)] {
                    let x = random_x(&mut rng, k, eta, &[]);
                    for m in 0..2 * k {
                        for n in 0..2 * k {
                            let a = bracket_entry_closed(&x, m, n, &ctx).unwrap();
                            let b = oracle_entry(&x, m as i64, n as i64, ctx.q());
                            assert!((a - b).norm() <= 1e-11 * b.norm().max(1.0), "{a} vs {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn succinct_matches_closed() {
        let ctx = ctx(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for k in 1..=2 {
            let x = random_x(&mut rng, k, cx(0.6, 0.3), &[]);
            for m in 0..2 * k {
                for n in 0..2 * k {
                    let a = bracket_entry_closed(&x, m, n, &ctx).unwrap();
                    let b = bracket_entry_succinct(&x, m, n, &ctx).unwrap();
                    assert!((a - b).norm() <= 1e-11 * a.norm().max(1.0), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn series_path_matches_closed() {
        let ctx = ctx(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for k in 1..=3 {
            for m in 0..2 * k {
                for n in 0..2 * k {
                    let x = random_x(&mut rng, k, cx(0.8, 0.0), &[m, n]);
                    let a = bracket_entry_closed(&x, m, n, &ctx).unwrap();
                    let b = bracket_entry_series(&x, m, n, &ctx).unwrap();
                    let scale = a.norm().max(x.max_abs().powi(2));
                    assert!((a - b).norm() <= 1e-10 * scale, "k={k} {m},{n}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn series_path_diagonal_vanishes() {
        let ctx = ctx(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for k in 1..=3 {
            for m in 0..2 * k {
                let x = random_x(&mut rng, k, cx(0.7, -0.2), &[m]);
                let cls = bivector_apply_series(&x, m, &ctx).unwrap();
                assert!(cls.coords[m].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn series_path_rejects_inadmissible() {
        let ctx = ctx(0.1);
        let x = ExtensionClass::new(1, cx(0.8, 0.0), vec![ONE, ONE]).unwrap();
        assert!(matches!(
            bivector_apply_series(&x, 0, &ctx),
            Err(Error::InvalidCovector { index: 0, .. })
        ));
    }

    #[test]
    fn k1_matrix_has_one_free_entry() {
        let ctx = ctx(0.1);
        let x = ExtensionClass::new(1, cx(0.8, 0.0), vec![cx(0.3, 0.1), cx(-0.7, 0.4)]).unwrap();
        let b = bracket_matrix(&x, &ctx).unwrap();
        assert_eq!(b.entries.len(), 2);
        assert!(b.entries[0][0].norm() < 1e-14);
        assert!(b.entries[1][1].norm() < 1e-14);
        assert!((b.entries[0][1] + b.entries[1][0]).norm() < 1e-14);
        assert!(b.entries[0][1].norm() > 1e-3);
    }

    #[test]
    fn tensor_reproduces_matrix_and_support() {
        let ctx = ctx(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for k in 1..=3 {
            let eta = cx(0.8, 0.0);
            let t = bracket_tensor(k, eta, &ctx).unwrap();
            let d = 2 * k;
            let kmax = t
                .coeffs
                .iter()
                .flatten()
                .flatten()
                .flatten()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            for m in 0..d {
                for n in 0..d {
                    for j in 0..d {
                        for s in 0..d {
                            let a = t.coeffs[m][n][j][s];
                            assert!((a + t.coeffs[n][m][j][s]).norm() < 1e-13 * kmax);
                            if (j + s + 2 * d - m - n) % d != 0 {
                                assert!(a.norm() < 1e-14 * kmax, "K[{m}][{n}][{j}][{s}] = {a}");
                            }
                        }
                    }
                }
            }
            for _ in 0..5 {
                let x = random_x(&mut rng, k, eta, &[]);
                let direct = bracket_matrix(&x, &ctx).unwrap().entries;
                let via = t.eval(&x);
                let scale = max_abs(&direct).max(1.0);
                for m in 0..d {
                    for n in 0..d {
                        assert!((direct[m][n] - via[m][n]).norm() < 1e-12 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn jacobiator_trivial_cases() {
        let ctx = ctx(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let t = bracket_tensor(1, cx(0.8, 0.0), &ctx).unwrap();
        for _ in 0..10 {
            let x = random_x(&mut rng, 1, cx(0.8, 0.0), &[]);
            for m in 0..2 {
                for n in 0..2 {
                    for s in 0..2 {
                        assert!(jacobiator_unchecked(&t, &x, m, n, s).norm() < 1e-13);
                    }
                }
            }
        }
        let zero = ExtensionClass::zero(2, cx(0.8, 0.0)).unwrap();
        assert_eq!(jacobiator(&zero, 0, 1, 2, &ctx).unwrap(), ZERO);
        let x = random_x(&mut rng, 2, cx(0.8, 0.0), &[]);
        assert!(matches!(
            jacobiator(&x, 0, 1, 2, &ctx),
            Err(Error::InvalidCovector { .. })
        ));
    }

    #[test]
    fn jacobiator_on_admissible_k2() {
        let ctx = ctx(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let eta = cx(0.8, 0.0);
        let t = bracket_tensor(2, eta, &ctx).unwrap();
        for _ in 0..10 {
            let x = random_x(&mut rng, 2, eta, &[0, 1, 3]);
            let j = jacobiator_with(&t, &x, 0, 1, 3, &ctx).unwrap();
            assert!(j.norm() <= 1e-8 * jacobi_scale(&t, &x).max(1e-300));
        }
    }

    proptest! {
        #[test]
        fn skew_and_homogeneous(seed in 0u64..10_000, k in 1usize..4, lam_re in -2.0f64..2.0, lam_im in -2.0f64..2.0) {
            let ctx = ctx(0.1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_x(&mut rng, k, cx(0.6, 0.3), &[]);
            let b = bracket_matrix(&x, &ctx).unwrap();
            prop_assert!(b.skew_residual < 1e-9 * b.max_abs().max(1.0));
            let lam = cx(lam_re, lam_im);
            let bl = bracket_matrix(&x.scaled(lam), &ctx).unwrap();
            for m in 0..2 * k {
                for n in 0..2 * k {
                    let want = b.entries[m][n] * lam * lam;
                    let scale = b.max_abs() * lam.norm_sqr();
                    prop_assert!((bl.entries[m][n] - want).norm() <= 1e-13 * scale.max(1e-300));
                }
            }
        }
    }
}
