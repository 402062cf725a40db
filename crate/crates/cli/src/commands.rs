use std::io::Write;

use num_complex::Complex64;
use qpoisson_core::bracket::{
    bracket_matrix, bracket_tensor, jacobi_scale, jacobiator_unchecked, jacobiator_with,
};
use qpoisson_core::laurent::complex_powi;
use qpoisson_core::leaf::{
    plant_unstable, LeafScanner, SearchConfig, StratumReport, SubBundleProbe,
};
use qpoisson_core::loop_rmatrix::compare_brackets;
use qpoisson_core::qdiff::{
    dual_multiplier, end_multiplier, extension_class, extension_multiplier, parabolic_aut_dim,
    ExtensionClass,
};
use qpoisson_core::theta::{
    pair_series, theta_basis, theta_basis_at, theta_functional, LineBundle,
};
use qpoisson_core::LaurentSeries;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{random_coords, CliError, CliResult, Format, RunConfig};

pub const SWEEP_HEADER: &str = "# qpoisson-sweep v1";

fn sink(cfg: &RunConfig) -> CliResult<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(
            |e| CliError::Input(format!("cannot write {}: {e}", p.display())),
        )?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn emit_json(cfg: &RunConfig, mut report: Value) -> CliResult<()> {
    if cfg.format == Format::Csv {
        return Err(CliError::Input(
            "csv output is only available for sweeps".into(),
        ));
    }
    report["config"] = serde_json::to_value(cfg).expect("config serializes");
    let mut w = sink(cfg)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn xi0(cfg: &RunConfig, ctx: &qpoisson_core::NumericContext) -> CliResult<LineBundle> {
    Ok(LineBundle::new(
        complex_powi(cfg.eta, cfg.k as i64),
        cfg.k as i64,
        ctx,
    )?)
}

pub fn theta(cfg: &RunConfig, n: i64) -> CliResult<()> {
    let ctx = cfg.context()?;
    if n < 0 || n >= cfg.k as i64 {
        return Err(CliError::Input(format!(
            "basis index must satisfy 0 <= n < k = {}, got {n}",
            cfg.k
        )));
    }
    let bundle = xi0(cfg, &ctx)?;
    let series = theta_basis(&bundle, n, &ctx)?;
    let residual = bundle.functional_residual(&series, &ctx)?;
    emit_json(
        cfg,
        json!({
            "bundle": { "c": bundle.c(), "degree": bundle.degree() },
            "n": n,
            "series": series,
            "residual": residual,
        }),
    )
}

pub fn pair(cfg: &RunConfig) -> CliResult<()> {
    let ctx = cfg.context()?;
    let bundle = xi0(cfg, &ctx)?;
    let k = cfg.k as i64;
    let mut pairing = Vec::new();
    let mut functional = Vec::new();
    let mut deviation: f64 = 0.0;
    for n in 0..k {
        let t = theta_basis_at(&bundle, -n, &ctx)?;
        let mut prow = Vec::new();
        let mut frow = Vec::new();
        for m in 0..k {
            let zm = LaurentSeries::monomial(Complex64::new(1.0, 0.0), m);
            let p = pair_series(&t, &zm)?;
            let f = theta_functional(&bundle, n, &zm, &ctx)?;
            let want = if m == n { 1.0 } else { 0.0 };
            deviation = deviation.max((p - want).norm()).max((f - want).norm());
            prow.push(p);
            frow.push(f);
        }
        pairing.push(prow);
        functional.push(frow);
    }
    emit_json(
        cfg,
        json!({
            "pairing": pairing,
            "functional": functional,
            "max_deviation": deviation,
        }),
    )
}

pub fn qdiff(cfg: &RunConfig, x: &ExtensionClass) -> CliResult<()> {
    let ctx = cfg.context()?;
    let ext = extension_multiplier(x, &ctx)?;
    let dual = dual_multiplier(&ext, &ctx)?;
    let end = end_multiplier(x, &ctx)?;
    let back = extension_class(&ext, &ctx)?;
    let round_trip = back
        .coords
        .iter()
        .zip(&x.coords)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    emit_json(
        cfg,
        json!({
            "x": x.coords,
            "extension_multiplier": ext,
            "dual_multiplier": dual,
            "end_multiplier": end,
            "class_round_trip": round_trip,
            "parabolic_aut_dim": parabolic_aut_dim(x, &ctx)?,
        }),
    )
}

pub fn bracket(cfg: &RunConfig, x: &ExtensionClass) -> CliResult<()> {
    let ctx = cfg.context()?;
    let pi = bracket_matrix(x, &ctx)?;
    emit_json(
        cfg,
        json!({
            "x": x.coords,
            "entries": pi.entries,
            "skew_residual": pi.skew_residual,
            "truncation_l": pi.truncation_l,
        }),
    )
}

#[derive(Serialize)]
struct JacobiRow {
    triple: [usize; 3],
    value: Complex64,
    relative: f64,
    admissible: bool,
}

pub fn jacobi(cfg: &RunConfig, x: &ExtensionClass, triple: Option<[usize; 3]>) -> CliResult<()> {
    let ctx = cfg.context()?;
    let tensor = bracket_tensor(x.k, x.eta, &ctx)?;
    let scale = jacobi_scale(&tensor, x);
    let rel = |v: Complex64| {
        if scale > 0.0 {
            v.norm() / scale
        } else {
            v.norm()
        }
    };
    let d = x.dim();
    let rows: Vec<JacobiRow> = match triple {
        Some([m, n, s]) => {
            let v = jacobiator_with(&tensor, x, m, n, s, &ctx)?;
            vec![JacobiRow {
                triple: [m, n, s],
                value: v,
                relative: rel(v),
                admissible: true,
            }]
        }
        None => {
            let floor = ctx.tol() * x.max_abs().max(1.0);
            let mut out = Vec::new();
            for m in 0..d {
                for n in m + 1..d {
                    for s in n + 1..d {
                        let v = jacobiator_unchecked(&tensor, x, m, n, s);
                        out.push(JacobiRow {
                            triple: [m, n, s],
                            value: v,
                            relative: rel(v),
                            admissible: [m, n, s].iter().all(|&i| x.coords[i].norm() <= floor),
                        });
                    }
                }
            }
            out
        }
    };
    let max_admissible = rows
        .iter()
        .filter(|r| r.admissible)
        .map(|r| r.relative)
        .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))));
    emit_json(
        cfg,
        json!({
            "x": x.coords,
            "scale": scale,
            "jacobiator": rows,
            "max_relative_admissible": max_admissible,
        }),
    )
}

fn scanner(cfg: &RunConfig) -> CliResult<LeafScanner> {
    Ok(LeafScanner::new(
        cfg.k,
        cfg.eta,
        &cfg.context()?,
        SearchConfig::default(),
    )?)
}

pub fn leaf(cfg: &RunConfig, x: &ExtensionClass) -> CliResult<()> {
    let report = scanner(cfg)?.instability_index(x)?;
    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["x"] = serde_json::to_value(&x.coords).expect("coords serialize");
    emit_json(cfg, v)
}

/// Class with a planted sub-bundle of degree `j`; `c` is drawn in the
/// fundamental annulus when not given.
pub fn planted(
    cfg: &RunConfig,
    j: i64,
    c: Option<Complex64>,
    rng: &mut impl Rng,
) -> CliResult<ExtensionClass> {
    let ctx = cfg.context()?;
    let c = c.unwrap_or_else(|| {
        let r = (ctx.q().norm().ln() * rng.random_range(0.05..0.95)).exp();
        Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
    });
    let (x, _) = plant_unstable(
        cfg.k,
        cfg.eta,
        SubBundleProbe { j, c_param: c },
        None,
        &ctx,
        rng,
    )?;
    Ok(x)
}

pub fn sweep(cfg: &RunConfig, samples: usize, plant: Option<i64>) -> CliResult<()> {
    let scanner = scanner(cfg)?;
    let mut rng = cfg.rng();
    let xs: Vec<ExtensionClass> = (0..samples)
        .map(|_| match plant {
            Some(j) => planted(cfg, j, None, &mut rng),
            None => cfg.class(random_coords(&mut rng, 2 * cfg.k)),
        })
        .collect::<CliResult<_>>()?;
    let reports: Vec<StratumReport> = xs
        .par_iter()
        .map(|x| scanner.instability_index(x))
        .collect::<Result<_, _>>()?;
    match cfg.format {
        Format::Json => {
            let rows: Vec<Value> = xs
                .iter()
                .zip(&reports)
                .map(|(x, r)| {
                    let mut v = serde_json::to_value(r).expect("report serializes");
                    v["x"] = serde_json::to_value(&x.coords).expect("coords serialize");
                    v
                })
                .collect();
            emit_json(cfg, json!({ "samples": rows }))
        }
        Format::Csv => write_csv(cfg, &xs, &reports),
    }
}

fn write_csv(cfg: &RunConfig, xs: &[ExtensionClass], reports: &[StratumReport]) -> CliResult<()> {
    let mut out = sink(cfg)?;
    writeln!(out, "{SWEEP_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..2 * cfg.k)
        .flat_map(|i| [format!("x{i}_re"), format!("x{i}_im")])
        .collect();
    header.extend(
        [
            "index_j",
            "leaf_dim",
            "pi_rank",
            "witness_c_re",
            "witness_c_im",
        ]
        .map(String::from),
    );
    let csv_err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (x, r) in xs.iter().zip(reports) {
        let mut row: Vec<String> = x
            .coords
            .iter()
            .flat_map(|c| [c.re.to_string(), c.im.to_string()])
            .collect();
        row.push(r.index_j.to_string());
        row.push(r.leaf_dim.to_string());
        row.push(r.pi_rank.to_string());
        match &r.witness {
            Some(wt) => {
                row.push(wt.c_param.re.to_string());
                row.push(wt.c_param.im.to_string());
            }
            None => row.extend([String::new(), String::new()]),
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    x: Vec<Complex64>,
    ratio: Option<Complex64>,
    max_residual: Option<f64>,
    entries_compared: usize,
}

pub fn loop_compare(cfg: &RunConfig, xs: Vec<ExtensionClass>) -> CliResult<()> {
    let ctx = cfg.context()?;
    let mut rows = Vec::new();
    for x in &xs {
        match compare_brackets(x, &ctx)? {
            Some(c) => rows.push(CompareRow {
                x: x.coords.clone(),
                ratio: Some(c.ratio),
                max_residual: Some(c.max_residual),
                entries_compared: c.entries_compared,
            }),
            None => {
                log::warn!("x = 0: both brackets vanish, sample skipped");
                rows.push(CompareRow {
                    x: x.coords.clone(),
                    ratio: None,
                    max_residual: None,
                    entries_compared: 0,
                });
            }
        }
    }
    let ratios: Vec<Complex64> = rows.iter().filter_map(|r| r.ratio).collect();
    let Some(&first) = ratios.first() else {
        return emit_json(cfg, json!({ "skipped": true, "samples": rows }));
    };
    let spread = ratios
        .iter()
        .map(|r| (r - first).norm() / first.norm())
        .fold(0.0, f64::max);
    let max_residual = rows
        .iter()
        .filter_map(|r| r.max_residual)
        .fold(0.0, f64::max);
    let entries: usize = rows.iter().map(|r| r.entries_compared).sum();
    emit_json(
        cfg,
        json!({
            "ratio": first,
            "max_residual": max_residual,
            "entries_compared": entries,
            "sample_spread": spread,
            "orientation": "reduced/closed",
            "samples": rows,
        }),
    )
}
