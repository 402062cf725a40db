//! Instability index and symplectic-leaf labels for extension classes.
//!
//! A line bundle `L = (c, j)` of degree `j` maps nontrivially to `V` iff
//! `[x]` lies in the image of `ev_a^*` for some nonzero `a ∈ Hom(L, ξ₀)`.
//! With bases `a_r` of `Hom(L, ξ₀) = H⁰(η^k/c, k-j)` and `s_s` of
//! `H⁰(L ⊗ ξ₀) = H⁰(c η^k, k+j)` this is the left-kernel condition
//! `vᵀ M = 0` for the pairing matrix `M_{rs} = ⟨a_r s_s, [x]⟩`.
//!
//! The scalar `c` is searched on a log-polar grid over the fundamental
//! annulus `|q| < |c| <= 1`, and the best local minima of the normalized
//! smallest singular value are polished by a damped Gauss–Newton iteration
//! in `c` (the entries of `M` are holomorphic in `c`).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bracket::bracket_matrix;
use crate::error::{Error, Result};
use crate::laurent::{complex_powi, NumericContext};
use crate::linalg::{self, CMatrix};
use crate::qdiff::ExtensionClass;
use crate::theta::{h0_basis, LineBundle};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative cutoff for the numerical rank of `Π(x)`.
pub const PI_RANK_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubBundleProbe {
    pub j: i64,
    pub c_param: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Multiplier scalar of `L`, normalized to `|q| < |c| <= 1`.
    pub c_param: Complex64,
    /// Coefficients of `a = Σ v_r a_r`.
    pub kernel: Vec<Complex64>,
    /// `σ_min / ‖x‖` of the row-normalized pairing matrix.
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StratumKind {
    /// `x = 0`, `V = ξ₀ ⊕ ξ₀*`.
    Split,
    /// Index `j >= 1`.
    Unstable,
    /// Index 0.
    Semistable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub index_j: i64,
    pub witness: Option<Witness>,
    pub leaf_dim: i64,
    pub pi_rank: usize,
    pub stratum: StratumKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Samples of `log|c| / log|q|` in `[0, 1)`.
    pub radial: usize,
    /// Samples of `arg c`.
    pub angular: usize,
    /// Local minima handed to the refinement.
    pub candidates: usize,
    pub max_iter: usize,
    /// Witness accepted below this normalized singular value.
    pub accept_rho: f64,
    /// Between `accept_rho` and this value the search is inconclusive.
    pub ambiguous_rho: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            radial: 64,
            angular: 64,
            candidates: 4,
            max_iter: 60,
            accept_rho: 1e-7,
            ambiguous_rho: 1e-6,
        }
    }
}

/// `c q^{-n}` with `|q| < |c q^{-n}| <= 1`.
pub fn normalize_mod_q(c: Complex64, ctx: &NumericContext) -> Complex64 {
    let t = c.norm().ln() / ctx.q().norm().ln();
    let n = t.floor() as i64;
    let mut out = c * ctx.q_pow(-n);
    // guard the boundary against rounding
    if out.norm() > 1.0 {
        out *= ctx.q();
    } else if out.norm() <= ctx.q().norm() {
        out /= ctx.q();
    }
    out
}

/// `T_{rs,i}`: coefficient of `z^{-i}` in `a_r s_s`, so that
/// `M_{rs} = Σ_i T_{rs,i} x_i`.
#[derive(Clone, Debug)]
pub struct PairingTensor {
    rows: usize,
    cols: usize,
    dim: usize,
    t: Vec<Complex64>,
    row_norms: Vec<f64>,
}

impl PairingTensor {
    pub fn new(
        k: usize,
        eta: Complex64,
        probe: SubBundleProbe,
        ctx: &NumericContext,
    ) -> Result<Self> {
        let ki = k as i64;
        let j = probe.j;
        if j < 0 || j >= ki {
            return Err(Error::InvalidParameter(format!(
                "pairing matrix needs 0 <= j < k, got j = {j}, k = {k}"
            )));
        }
        let ek = complex_powi(eta, ki);
        let hom = LineBundle::new(ek / probe.c_param, ki - j, ctx)?;
        let twist = LineBundle::new(probe.c_param * ek, ki + j, ctx)?;
        let dim = 2 * k;
        let mut factor = 1;
        let (t, rows, cols) = loop {
            match Self::products(&hom, &twist, dim, &ctx.scaled_window(factor)?) {
                Err(Error::WindowUnderflow { .. }) if factor < 8 => factor *= 2,
                other => break other?,
            }
        };
        let row_norms = (0..rows)
            .map(|r| {
                t[r * cols * dim..(r + 1) * cols * dim]
                    .iter()
                    .map(|v| v.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Ok(PairingTensor {
            rows,
            cols,
            dim,
            t,
            row_norms,
        })
    }

    fn products(
        hom: &LineBundle,
        twist: &LineBundle,
        dim: usize,
        ctx: &NumericContext,
    ) -> Result<(Vec<Complex64>, usize, usize)> {
        let a = h0_basis(hom, ctx)?;
        let s = h0_basis(twist, ctx)?;
        if a.is_empty() || s.is_empty() {
            return Err(Error::Domain("empty H0 basis for the probe".into()));
        }
        let mut t = Vec::with_capacity(a.len() * s.len() * dim);
        for ar in &a {
            for ss in &s {
                let p = ar.mul(ss)?;
                let (lo, hi) = p.window();
                if lo > -(dim as i64 - 1) || hi < 0 {
                    return Err(Error::WindowUnderflow {
                        op: "pairing_tensor",
                        lo,
                        hi,
                    });
                }
                t.extend((0..dim).map(|i| p.coeff(-(i as i64))));
            }
        }
        Ok((t, a.len(), s.len()))
    }

    pub fn contract(&self, x: &[Complex64]) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |r, s| {
            let base = (r * self.cols + s) * self.dim;
            self.t[base..base + self.dim]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum()
        })
    }

    fn normalized(&self, x: &[Complex64]) -> CMatrix {
        let mut m = self.contract(x);
        for r in 0..self.rows {
            let n = self.row_norms[r];
            if n > 0.0 {
                m.row_mut(r).iter_mut().for_each(|v| *v /= n);
            }
        }
        m
    }

    /// `σ_min / ‖x‖` and the left singular vector of the normalized matrix,
    /// mapped back to coefficients for the unnormalized rows.
    fn rho(&self, x: &[Complex64], xnorm: f64) -> (f64, Vec<Complex64>) {
        let m = self.normalized(x);
        let (s, u) = linalg::min_left_singular(&m);
        let v = u
            .iter()
            .zip(&self.row_norms)
            .map(|(a, n)| if *n > 0.0 { a / n } else { *a })
            .collect();
        (s / xnorm, v)
    }
}

/// `M_{rs} = ⟨a_r s_s, [x]⟩`, size `(k-j) × (k+j)`.
pub fn pairing_matrix(
    x: &ExtensionClass,
    probe: SubBundleProbe,
    ctx: &NumericContext,
) -> Result<CMatrix> {
    Ok(PairingTensor::new(x.k, x.eta, probe, ctx)?.contract(&x.coords))
}

/// Grid of pairing tensors for every degree `0 <= j < k`, reusable across
/// classes with the same `(k, η, q)`.
pub struct LeafScanner {
    k: usize,
    eta: Complex64,
    ctx: NumericContext,
    config: SearchConfig,
    grids: Vec<Vec<(Complex64, PairingTensor)>>,
}

impl LeafScanner {
    pub fn new(
        k: usize,
        eta: Complex64,
        ctx: &NumericContext,
        config: SearchConfig,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if config.radial == 0 || config.angular == 0 {
            return Err(Error::InvalidParameter(
                "search grid must be nonempty".into(),
            ));
        }
        let lq = ctx.q().norm().ln();
        let points: Vec<Complex64> = (0..config.radial)
            .flat_map(|i| {
                let r = (lq * i as f64 / config.radial as f64).exp();
                (0..config.angular).map(move |a| {
                    Complex64::from_polar(
                        r,
                        std::f64::consts::TAU * a as f64 / config.angular as f64,
                    )
                })
            })
            .collect();
        let grids = (0..k as i64)
            .map(|j| {
                points
                    .par_iter()
                    .map(|&c| {
                        PairingTensor::new(k, eta, SubBundleProbe { j, c_param: c }, ctx)
                            .map(|t| (c, t))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LeafScanner {
            k,
            eta,
            ctx: *ctx,
            config,
            grids,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    fn check_class(&self, x: &ExtensionClass) -> Result<()> {
        if x.k != self.k
            || (x.eta_k() - complex_powi(self.eta, self.k as i64)).norm() > 1e-12 * x.eta_k().norm()
        {
            return Err(Error::InvalidParameter(
                "class does not match the scanner's (k, eta)".into(),
            ));
        }
        Ok(())
    }

    fn local_minima(&self, vals: &[f64]) -> Vec<usize> {
        let (nr, na) = (self.config.radial, self.config.angular);
        let mut idx: Vec<usize> = (0..vals.len())
            .filter(|&p| {
                let (i, a) = (p / na, p % na);
                let mut is_min = true;
                for di in [-1i64, 0, 1] {
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= nr as i64 {
                        continue;
                    }
                    for da in [-1i64, 0, 1] {
                        if di == 0 && da == 0 {
                            continue;
                        }
                        let aa = (a as i64 + da).rem_euclid(na as i64) as usize;
                        if vals[ii as usize * na + aa] < vals[p] {
                            is_min = false;
                        }
                    }
                }
                is_min
            })
            .collect();
        idx.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
        idx.truncate(self.config.candidates.max(1));
        idx
    }

    fn refine(
        &self,
        x: &ExtensionClass,
        j: i64,
        c0: Complex64,
        xnorm: f64,
    ) -> Result<(Complex64, f64, Vec<Complex64>)> {
        let ctx = &self.ctx;
        let eval = |c: Complex64| -> Result<(f64, Vec<Complex64>, PairingTensor)> {
            let t = PairingTensor::new(self.k, self.eta, SubBundleProbe { j, c_param: c }, ctx)?;
            let (rho, v) = t.rho(&x.coords, xnorm);
            Ok((rho, v, t))
        };
        let mut c = normalize_mod_q(c0, ctx);
        let (mut rho, mut v, mut t) = eval(c)?;
        for _ in 0..self.config.max_iter {
            if rho < 1e-15 {
                break;
            }
            // g(c) = vᵀ M(c), holomorphic in c for fixed v
            let g = |t: &PairingTensor| -> Vec<Complex64> {
                let m = t.contract(&x.coords);
                (0..m.ncols())
                    .map(|s| (0..m.nrows()).map(|r| v[r] * m[(r, s)]).sum())
                    .collect()
            };
            let h = 1e-6 * c.norm();
            let tp =
                PairingTensor::new(self.k, self.eta, SubBundleProbe { j, c_param: c + h }, ctx)?;
            let tm =
                PairingTensor::new(self.k, self.eta, SubBundleProbe { j, c_param: c - h }, ctx)?;
            let g0 = g(&t);
            let (gp, gm) = (g(&tp), g(&tm));
            let dg: Vec<Complex64> = gp
                .iter()
                .zip(&gm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            let den: f64 = dg.iter().map(|d| d.norm_sqr()).sum();
            if den == 0.0 {
                break;
            }
            let num: Complex64 = dg.iter().zip(&g0).map(|(d, g)| d.conj() * g).sum();
            let delta = -num / den;
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..12 {
                let trial = normalize_mod_q(c + delta * lambda, ctx);
                if let Ok((r2, v2, t2)) = eval(trial) {
                    if r2 < rho {
                        c = trial;
                        rho = r2;
                        v = v2;
                        t = t2;
                        improved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !improved || (delta * lambda).norm() < 1e-15 * c.norm() {
                break;
            }
        }
        Ok((c, rho, v))
    }

    /// Sub-bundle of degree `j` mapping into `V`, if any.
    pub fn detect_at_degree(&self, x: &ExtensionClass, j: i64) -> Result<Option<Witness>> {
        self.check_class(x)?;
        let k = self.k as i64;
        if j < 0 || j > k {
            return Err(Error::InvalidParameter(format!(
                "degree {j} out of range 0..={k}"
            )));
        }
        if j == k {
            // L ≅ ξ₀ maps to V iff the extension splits
            return Ok((x.max_abs() == 0.0).then(|| Witness {
                c_param: normalize_mod_q(x.eta_k(), &self.ctx),
                kernel: vec![Complex64::new(1.0, 0.0)],
                rho: 0.0,
            }));
        }
        let xnorm = x.norm();
        if xnorm == 0.0 {
            // every probe pairs to zero
            return Ok(Some(Witness {
                c_param: self.grids[j as usize][0].0,
                kernel: vec![ZERO; (k - j) as usize],
                rho: 0.0,
            }));
        }
        let grid = &self.grids[j as usize];
        let vals: Vec<f64> = grid
            .par_iter()
            .map(|(_, t)| t.rho(&x.coords, xnorm).0)
            .collect();
        let starts = self.local_minima(&vals);
        let refined: Vec<(Complex64, f64, Vec<Complex64>)> = starts
            .par_iter()
            .map(|&p| self.refine(x, j, grid[p].0, xnorm))
            .collect::<Result<_>>()?;
        let best = refined
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one candidate");
        let (c, rho, v) = best;
        if rho < self.config.accept_rho {
            let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            Ok(Some(Witness {
                c_param: c,
                kernel: v.iter().map(|a| a / n).collect(),
                rho,
            }))
        } else if rho < self.config.ambiguous_rho {
            Err(Error::NonConvergence {
                degree: j,
                best_c: c,
                best_rho: rho,
            })
        } else {
            Ok(None)
        }
    }

    pub fn instability_index(&self, x: &ExtensionClass) -> Result<StratumReport> {
        self.check_class(x)?;
        let k = self.k as i64;
        let pi = bracket_matrix(x, &self.ctx)?;
        let pi_rank = linalg::numerical_rank(&pi.to_matrix(), PI_RANK_TOL);
        if x.max_abs() == 0.0 {
            return Ok(StratumReport {
                index_j: k,
                witness: self.detect_at_degree(x, k)?,
                leaf_dim: 0,
                pi_rank,
                stratum: StratumKind::Split,
            });
        }
        for j in (1..k).rev() {
            if let Some(w) = self.detect_at_degree(x, j)? {
                return Ok(StratumReport {
                    index_j: j,
                    witness: Some(w),
                    leaf_dim: 2 * (k - j - 1),
                    pi_rank,
                    stratum: StratumKind::Unstable,
                });
            }
        }
        let witness = match self.detect_at_degree(x, 0) {
            Ok(w) => w,
            Err(Error::NonConvergence { best_rho, .. }) => {
                log::debug!("degree-0 witness not polished (rho = {best_rho:e})");
                None
            }
            Err(e) => return Err(e),
        };
        Ok(StratumReport {
            index_j: 0,
            witness,
            leaf_dim: 2 * (k - 1),
            pi_rank,
            stratum: StratumKind::Semistable,
        })
    }
}

pub fn detect_at_degree(
    x: &ExtensionClass,
    j: i64,
    ctx: &NumericContext,
    search: &SearchConfig,
) -> Result<Option<Witness>> {
    LeafScanner::new(x.k, x.eta, ctx, *search)?.detect_at_degree(x, j)
}

pub fn instability_index(
    x: &ExtensionClass,
    ctx: &NumericContext,
    search: &SearchConfig,
) -> Result<StratumReport> {
    LeafScanner::new(x.k, x.eta, ctx, *search)?.instability_index(x)
}

fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// A class annihilating `a · H⁰(L ⊗ ξ₀)` for `a = Σ v_r a_r` (random `v`
/// when `v` is `None`), so that `L = (c, j)` maps into the extension.
/// Returns the class and the coefficients `v`.
pub fn plant_unstable<R: Rng + ?Sized>(
    k: usize,
    eta: Complex64,
    probe: SubBundleProbe,
    v: Option<Vec<Complex64>>,
    ctx: &NumericContext,
    rng: &mut R,
) -> Result<(ExtensionClass, Vec<Complex64>)> {
    let t = PairingTensor::new(k, eta, probe, ctx)?;
    let v = match v {
        Some(v) if v.len() == t.rows => v,
        Some(v) => {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients for a, got {}",
                t.rows,
                v.len()
            )))
        }
        None => (0..t.rows).map(|_| random_complex(rng)).collect(),
    };
    // N_{s,i} = Σ_r v_r T_{rs,i}; x must lie in its null space
    let dim = 2 * k;
    let n = CMatrix::from_fn(t.cols, dim, |s, i| {
        (0..t.rows)
            .map(|r| v[r] * t.t[(r * t.cols + s) * dim + i])
            .sum()
    });
    let null = linalg::null_space(&n, 1e-10);
    if null.is_empty() {
        return Err(Error::Domain("probe admits no planted class".into()));
    }
    let mut x = vec![ZERO; dim];
    for b in &null {
        let w = random_complex(rng);
        for i in 0..dim {
            x[i] += w * b[i];
        }
    }
    let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    x.iter_mut().for_each(|c| *c /= norm);
    Ok((ExtensionClass::new(k, eta, x)?, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx() -> NumericContext {
        NumericContext::new(cx(0.1, 0.0), 1e-12).unwrap()
    }

    fn small() -> SearchConfig {
        SearchConfig {
            radial: 24,
            angular: 24,
            ..SearchConfig::default()
        }
    }

    fn random_x(rng: &mut ChaCha8Rng, k: usize, eta: Complex64) -> ExtensionClass {
        ExtensionClass::new(k, eta, (0..2 * k).map(|_| random_complex(rng)).collect()).unwrap()
    }

    fn same_mod_q(a: Complex64, b: Complex64, ctx: &NumericContext) -> bool {
        let (a, b) = (normalize_mod_q(a, ctx), normalize_mod_q(b, ctx));
        (a - b).norm() < 1e-6 || (a * ctx.q() - b).norm() < 1e-6 || (a - b * ctx.q()).norm() < 1e-6
    }

    #[test]
    fn normalization_lands_in_annulus() {
        let ctx = ctx();
        for c in [
            cx(3.0, 1.0),
            cx(0.001, 0.0),
            cx(0.5, -0.5),
            cx(1.0, 0.0),
            cx(0.1, 0.0),
        ] {
            let n = normalize_mod_q(c, &ctx);
            assert!(n.norm() <= 1.0 && n.norm() > 0.1, "{c} -> {n}");
        }
    }

    #[test]
    fn zero_class_pairs_to_zero() {
        let ctx = ctx();
        let x = ExtensionClass::zero(2, cx(0.8, 0.0)).unwrap();
        let m = pairing_matrix(
            &x,
            SubBundleProbe {
                j: 1,
                c_param: cx(0.5, 0.2),
            },
            &ctx,
        )
        .unwrap();
        assert_eq!((m.nrows(), m.ncols()), (1, 3));
        assert_eq!(m.norm(), 0.0);
        assert!(pairing_matrix(
            &x,
            SubBundleProbe {
                j: 2,
                c_param: cx(0.5, 0.2)
            },
            &ctx
        )
        .is_err());
    }

    #[test]
    fn pairing_matrix_matches_serre_pairing() {
        let ctx = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let x = random_x(&mut rng, 2, cx(0.8, 0.0));
        let probe = SubBundleProbe {
            j: 1,
            c_param: cx(0.4, 0.3),
        };
        let m = pairing_matrix(&x, probe, &ctx).unwrap();
        let ek = x.eta_k();
        let a = h0_basis(&LineBundle::new(ek / probe.c_param, 1, &ctx).unwrap(), &ctx).unwrap();
        let s = h0_basis(&LineBundle::new(ek * probe.c_param, 3, &ctx).unwrap(), &ctx).unwrap();
        for sj in 0..3 {
            let prod = a[0].mul(&s[sj]).unwrap();
            let want = crate::theta::pair_series(&prod, &x.polynomial()).unwrap();
            assert!((m[(0, sj)] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn planted_class_is_annihilated() {
        let ctx = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for (k, j) in [(2usize, 1i64), (2, 0), (3, 2), (3, 1)] {
            let probe = SubBundleProbe {
                j,
                c_param: cx(0.3, 0.4),
            };
            let (x, v) = plant_unstable(k, cx(0.8, 0.0), probe, None, &ctx, &mut rng).unwrap();
            let m = pairing_matrix(&x, probe, &ctx).unwrap();
            let vm: f64 = (0..m.ncols())
                .map(|s| {
                    (0..m.nrows())
                        .map(|r| v[r] * m[(r, s)])
                        .sum::<Complex64>()
                        .norm()
                })
                .fold(0.0, f64::max);
            assert!(vm < 1e-12, "k={k} j={j}: {vm}");
        }
    }

    #[test]
    fn generic_row_has_no_kernel() {
        let ctx = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let x = random_x(&mut rng, 2, cx(0.8, 0.0));
        for _ in 0..5 {
            let c = normalize_mod_q(random_complex(&mut rng), &ctx);
            let m = pairing_matrix(&x, SubBundleProbe { j: 1, c_param: c }, &ctx).unwrap();
            assert!(m.norm() > 1e-6);
        }
    }

    #[test]
    fn split_class_index() {
        let ctx = ctx();
        let eta = cx(0.8, 0.0);
        let scanner = LeafScanner::new(2, eta, &ctx, small()).unwrap();
        let x = ExtensionClass::zero(2, eta).unwrap();
        let r = scanner.instability_index(&x).unwrap();
        assert_eq!(r.index_j, 2);
        assert_eq!(r.leaf_dim, 0);
        assert_eq!(r.pi_rank, 0);
        let w = r.witness.unwrap();
        assert!(same_mod_q(w.c_param, cx(0.64, 0.0), &ctx));
        let nonzero = random_x(&mut ChaCha8Rng::seed_from_u64(1), 2, eta);
        assert!(scanner.detect_at_degree(&nonzero, 2).unwrap().is_none());
    }

    #[test]
    fn planted_recovered_with_matching_parameter() {
        let ctx = ctx();
        let eta = cx(0.8, 0.0);
        let scanner = LeafScanner::new(2, eta, &ctx, small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for c in [cx(0.35, 0.2), cx(-0.6, 0.1), cx(0.15, -0.1)] {
            let probe = SubBundleProbe { j: 1, c_param: c };
            let (x, _) = plant_unstable(2, eta, probe, None, &ctx, &mut rng).unwrap();
            let w = scanner
                .detect_at_degree(&x, 1)
                .unwrap()
                .expect("planted witness");
            assert!(same_mod_q(w.c_param, c, &ctx), "{} vs {c}", w.c_param);
            let r = scanner.instability_index(&x.scaled(cx(-3.0, 2.0))).unwrap();
            assert_eq!((r.index_j, r.leaf_dim), (1, 0));
        }
    }

    #[test]
    fn generic_class_is_semistable() {
        let ctx = ctx();
        let eta = cx(0.8, 0.0);
        let scanner = LeafScanner::new(2, eta, &ctx, small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for _ in 0..5 {
            let x = random_x(&mut rng, 2, eta);
            let r = scanner.instability_index(&x).unwrap();
            assert_eq!((r.index_j, r.leaf_dim), (0, 2));
            let scaled = scanner.instability_index(&x.scaled(cx(1e-4, 0.0))).unwrap();
            assert_eq!(scaled.index_j, 0);
        }
    }

    #[test]
    fn k1_classes() {
        let ctx = ctx();
        let eta = cx(0.8, 0.0);
        let scanner = LeafScanner::new(1, eta, &ctx, small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let x = random_x(&mut rng, 1, eta);
        let r = scanner.instability_index(&x).unwrap();
        assert_eq!(r.index_j, 0);
        assert_eq!(r.leaf_dim, 0);
        let r0 = scanner
            .instability_index(&ExtensionClass::zero(1, eta).unwrap())
            .unwrap();
        assert_eq!(r0.index_j, 1);
    }

    #[test]
    fn k3_strata() {
        let ctx = ctx();
        let eta = cx(0.9, 0.1);
        let scanner = LeafScanner::new(3, eta, &ctx, small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for (j, c) in [(2i64, cx(0.5, 0.4)), (1, cx(-0.3, 0.6))] {
            let (x, _) = plant_unstable(
                3,
                eta,
                SubBundleProbe { j, c_param: c },
                None,
                &ctx,
                &mut rng,
            )
            .unwrap();
            let r = scanner.instability_index(&x).unwrap();
            assert_eq!(r.index_j, j);
            assert_eq!(r.leaf_dim, 2 * (2 - j));
            assert!(same_mod_q(r.witness.unwrap().c_param, c, &ctx));
        }
    }
}
