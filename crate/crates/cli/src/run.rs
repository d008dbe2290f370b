use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;

use semiclassical::geometry::Observable;
use semiclassical::oracle::{Eigensystem, OracleError};
use semiclassical::semiclassics::{
    bohr_sommerfeld_levels, closed_fiber, compose_kernels, cyclic_amplitude, gluing_index, overlap,
    probability_from_terms, shoelace_area, ComposeOptions, OverlapOptions, SystemLevel, Warning,
};
use semiclassical::star::{
    associativity_defect, moyal_product, series_operator, FormalSeries, PolynomialObservable, StarError,
};
use semiclassical::Execution;

use crate::config::{CaseSpec, ExperimentConfig, ScenarioKind};
use crate::pipelines::{
    bridge_weight, interference_free_position, oracle_eigensystem, oracle_modulus, oracle_state, position_probability,
    q_extent, resolve_level, PipelineError, ResolvedLevel, Setup,
};
use crate::regression::{regress_error_slope, RegressionError};
use crate::report::{CaseRecord, Check, FiberDump, Regression, Report, REPORT_VERSION};

/// Everything a run produces before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub fibers: Vec<FiberDump>,
}

struct Collector {
    records: Vec<CaseRecord>,
    checks: Vec<Check>,
    warnings: Vec<Warning>,
    fibers: Vec<FiberDump>,
}

fn setup(cfg: &ExperimentConfig, exec: Execution) -> Result<Setup, PipelineError> {
    let mut s = Setup {
        lambda: cfg.reference.lagrangian(),
        alpha: cfg
            .prequantum_form()
            .map_err(|e| PipelineError::Unsupported(e.to_string()))?,
        overlap: OverlapOptions::default().with_hessian(cfg.hessian.into()).with_exec(exec),
        grid: cfg.grid().map_err(|e| PipelineError::Unsupported(e.to_string()))?,
        exec,
        ..Setup::default()
    };
    s.bs.exec = exec;
    Ok(s)
}

fn observable(cfg: &ExperimentConfig, name: &str) -> Result<Observable, PipelineError> {
    cfg.observable(name).map_err(|e| PipelineError::Unsupported(e.to_string()))
}

fn case_label(case: &CaseSpec, i: usize) -> String {
    case.label.clone().unwrap_or_else(|| format!("{}#{i}", case.systems.join("-")))
}

/// Runs the configured scenario. Nothing is written to disk.
pub fn run(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput, PipelineError> {
    let setup = setup(cfg, exec)?;
    let mut out = Collector {
        records: Vec::new(),
        checks: Vec::new(),
        warnings: Vec::new(),
        fibers: Vec::new(),
    };
    match cfg.scenario {
        ScenarioKind::Spectrum => spectrum(cfg, &setup, &mut out)?,
        ScenarioKind::Overlap => pairwise(cfg, &setup, &mut out, false)?,
        ScenarioKind::Probability => pairwise(cfg, &setup, &mut out, true)?,
        ScenarioKind::Cyclic => cyclic(cfg, &setup, &mut out)?,
        ScenarioKind::StarCheck => star_check(cfg, &setup, &mut out)?,
        ScenarioKind::GlueCheck => glue_check(cfg, &setup, &mut out)?,
        ScenarioKind::Sweep => sweep(cfg, &setup, &mut out)?,
    }
    let regression = fit_regression(&out.records);
    if cfg.scenario == ScenarioKind::Sweep {
        for (i, case) in cfg.cases.iter().enumerate() {
            if let Some([lo, hi]) = case.slope_range {
                let slope = match &regression {
                    Some(Regression::Fitted(fit)) => fit.slope,
                    _ => f64::NAN,
                };
                out.checks.push(Check {
                    name: format!("{}: error slope", case_label(case, i)),
                    value: slope,
                    tolerance: hi,
                    passed: slope >= lo && slope <= hi,
                });
            }
        }
    }
    Ok(RunOutput {
        report: Report {
            version: REPORT_VERSION,
            scenario: cfg.scenario.name().to_string(),
            name: cfg.name.clone(),
            seed: cfg.seed,
            cases: out.records,
            checks: out.checks,
            regression,
            warnings: out.warnings,
        },
        fibers: out.fibers,
    })
}

/// Fits the largest relative error at each `h` when at least three `h`
/// values carry oracle comparisons.
fn fit_regression(records: &[CaseRecord]) -> Option<Regression> {
    let mut worst: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for r in records {
        if let (Some(h), Some(e)) = (r.h, r.rel_error) {
            let slot = worst.entry(h.to_bits()).or_insert((h, 0.0));
            slot.1 = slot.1.max(e);
        }
    }
    let points: Vec<(f64, f64)> = worst.into_values().collect();
    match regress_error_slope(&points) {
        Ok(fit) => Some(Regression::Fitted(fit)),
        Err(RegressionError::DegenerateFit { max_error }) => Some(Regression::Exact { max_error }),
        Err(e) => {
            log::debug!("no regression: {e}");
            None
        }
    }
}

fn spectrum(cfg: &ExperimentConfig, setup: &Setup, out: &mut Collector) -> Result<(), PipelineError> {
    for (ci, case) in cfg.cases.iter().enumerate() {
        let label = case_label(case, ci);
        let obs = observable(cfg, &case.systems[0])?;
        let mut worst: f64 = 0.0;
        for (hi, &h) in cfg.h.iter().enumerate() {
            let ladder = bohr_sommerfeld_levels(&obs, h, (case.level_range[0], case.level_range[1]), &setup.bs)?;
            out.warnings.extend(ladder.warnings.iter().cloned());
            let levels: Vec<_> = ladder
                .levels
                .iter()
                .filter(|l| case.max_level.map_or(true, |m| l.n <= m))
                .copied()
                .collect();
            let es = oracle_eigensystem(&obs, &setup.grid, h)?;
            let matches = match &es {
                Some(es) => Some(semiclassical::oracle::match_levels(es, &levels)?),
                None => None,
            };
            for (k, l) in levels.iter().enumerate() {
                let mut rec = CaseRecord::new(ci, &label, Some(h), format!("level {}", l.n), l.b)
                    .detail("n", l.n)
                    .detail("loop_maslov", l.loop_maslov)
                    .detail("period", l.period);
                if let Some(m) = &matches {
                    rec = rec.with_oracle(m[k].oracle);
                    worst = worst.max(m[k].deviation);
                }
                out.records.push(rec);
                if cfg.output.fibers && hi == 0 {
                    let curve = closed_fiber(&obs, l.b, &setup.bs)?;
                    out.fibers.push(FiberDump {
                        stem: format!("c{ci}_{}_n{}", case.systems[0], l.n),
                        curve,
                    });
                }
            }
        }
        if let Some(tol) = case.tolerance {
            out.checks.push(Check::at_most(format!("{label}: max level deviation"), worst, tol));
        }
    }
    Ok(())
}

struct Side {
    obs: Observable,
    level: ResolvedLevel,
}

fn resolve_sides(
    cfg: &ExperimentConfig,
    case: &CaseSpec,
    h: f64,
    setup: &Setup,
) -> Result<Vec<Side>, PipelineError> {
    case.systems
        .iter()
        .zip(&case.levels)
        .map(|(name, sel)| {
            let obs = observable(cfg, name)?;
            let level = resolve_level(&obs, *sel, h, (case.level_range[0], case.level_range[1]), setup)?;
            Ok(Side { obs, level })
        })
        .collect()
}

fn eigensystems(sides: &[Side], setup: &Setup, h: f64) -> Result<Vec<Option<Eigensystem>>, PipelineError> {
    setup.exec.try_map(sides, |s| {
        if s.level.n.is_some() {
            oracle_eigensystem(&s.obs, &setup.grid, h)
        } else {
            Ok(None)
        }
    })
}

fn dump_fibers(
    cfg: &ExperimentConfig,
    ci: usize,
    hi: usize,
    case: &CaseSpec,
    systems: &[SystemLevel],
    setup: &Setup,
    out: &mut Collector,
) -> Result<(), PipelineError> {
    if !cfg.output.fibers {
        return Ok(());
    }
    for (name, sys) in case.systems.iter().zip(systems) {
        out.fibers.push(FiberDump {
            stem: format!("c{ci}_{name}_h{hi}"),
            curve: sys.trace(&setup.overlap.trace)?,
        });
    }
    Ok(())
}

fn pairwise(cfg: &ExperimentConfig, setup: &Setup, out: &mut Collector, probability: bool) -> Result<(), PipelineError> {
    for (ci, case) in cfg.cases.iter().enumerate() {
        let label = case_label(case, ci);
        let mut worst: f64 = 0.0;
        for (hi, &h) in cfg.h.iter().enumerate() {
            let sides = resolve_sides(cfg, case, h, setup)?;
            let systems: Vec<SystemLevel> = sides.iter().map(|s| SystemLevel::new(s.obs.clone(), s.level.b)).collect();
            let amp = overlap(&systems[0], &systems[1], &setup.lambda, &setup.alpha, h, &setup.overlap)?;
            out.warnings.extend(amp.warnings.iter().cloned());
            let weight = match (&sides[0].level.data, &sides[1].level.data) {
                (Some(a), Some(b)) => Some(bridge_weight(a, b, h)),
                _ => None,
            };
            let raw = if probability { probability_from_terms(&amp) } else { amp.value.norm() };
            let bridged = match weight {
                Some(w) if probability => raw * w,
                Some(w) => raw * w.sqrt(),
                None => raw,
            };
            let mut rec = CaseRecord::new(ci, &label, Some(h), if probability { "probability" } else { "modulus" }, bridged)
                .detail("b1", sides[0].level.b)
                .detail("b2", sides[1].level.b)
                .detail("terms", amp.terms.len())
                .detail("re", amp.value.re)
                .detail("im", amp.value.im)
                .detail("bridged", weight.is_some());
            let states: Vec<_> = sides.iter().map(|s| oracle_state(&s.obs, &s.level)).collect();
            if let (Some(a), Some(b), Some(_)) = (states[0], states[1], weight) {
                let es = eigensystems(&sides, setup, h)?;
                if let Some(m) = oracle_modulus(a, b, es[0].as_ref(), es[1].as_ref(), h) {
                    rec = rec.with_oracle(if probability { m * m } else { m });
                    worst = worst.max(rec.rel_error.unwrap_or(0.0));
                }
            }
            out.records.push(rec);
            dump_fibers(cfg, ci, hi, case, &systems, setup, out)?;
        }
        if let Some(tol) = case.tolerance {
            out.checks.push(Check::at_most(format!("{label}: max relative error"), worst, tol));
        }
    }
    Ok(())
}

fn wrap_angle(x: f64) -> f64 {
    let t = std::f64::consts::TAU;
    x - t * (x / t).round()
}

fn cyclic(cfg: &ExperimentConfig, setup: &Setup, out: &mut Collector) -> Result<(), PipelineError> {
    for (ci, case) in cfg.cases.iter().enumerate() {
        let label = case_label(case, ci);
        let mut worst: f64 = 0.0;
        for (hi, &h) in cfg.h.iter().enumerate() {
            let sides = resolve_sides(cfg, case, h, setup)?;
            let systems: Vec<SystemLevel> = sides.iter().map(|s| SystemLevel::new(s.obs.clone(), s.level.b)).collect();
            let cyc = cyclic_amplitude(&systems, None, &setup.lambda, &setup.alpha, h, &setup.overlap)?;
            out.warnings.extend(cyc.warnings.iter().cloned());
            for (ti, term) in cyc.terms.iter().enumerate() {
                let mut rec = CaseRecord::new(ci, &label, Some(h), format!("action {ti}"), term.action)
                    .detail("maslov", term.maslov)
                    .detail("modulus", cyc.value.norm())
                    .detail("phase", cyc.value.arg());
                if sides.iter().all(|s| s.obs.is_linear()) && term.chain.len() >= 3 {
                    let area = shoelace_area(&term.chain);
                    rec = rec.with_oracle(area).detail(
                        "phase_error",
                        wrap_angle(term.action / h - area / h),
                    );
                    worst = worst.max(rec.abs_error.unwrap_or(0.0));
                }
                out.records.push(rec);
            }
            dump_fibers(cfg, ci, hi, case, &systems, setup, out)?;
        }
        if let Some(tol) = case.tolerance {
            out.checks.push(Check::at_most(format!("{label}: max area deviation"), worst, tol));
        }
    }
    Ok(())
}

fn glue_check(cfg: &ExperimentConfig, setup: &Setup, out: &mut Collector) -> Result<(), PipelineError> {
    for (ci, case) in cfg.cases.iter().enumerate() {
        let label = case_label(case, ci);
        let [lo, hi] = case.interval.expect("validated");
        let mid = observable(cfg, &case.systems[1])?;
        let mut indices = Vec::new();
        let mut worst_residual: f64 = 0.0;
        let mut worst_modulus: f64 = 0.0;
        for &h in &cfg.h {
            let range = (case.level_range[0], case.level_range[1]);
            let o1 = observable(cfg, &case.systems[0])?;
            let o2 = observable(cfg, &case.systems[2])?;
            let l1 = resolve_level(&o1, case.levels[0], h, range, setup)?;
            let l2 = resolve_level(&o2, case.levels[1], h, range, setup)?;
            let s1 = SystemLevel::new(o1, l1.b);
            let s2 = SystemLevel::new(o2, l2.b);
            let u01 = |b: f64| overlap(&s1, &SystemLevel::new(mid.clone(), b), &setup.lambda, &setup.alpha, h, &setup.overlap);
            let u20 = |b: f64| overlap(&SystemLevel::new(mid.clone(), b), &s2, &setup.lambda, &setup.alpha, h, &setup.overlap);
            let opts = ComposeOptions {
                exec: setup.exec,
                ..ComposeOptions::default()
            };
            let comp = compose_kernels(&u20, &u01, (lo, hi), h, &opts)?;
            let direct = overlap(&s1, &s2, &setup.lambda, &setup.alpha, h, &setup.overlap)?;
            out.warnings.extend(direct.warnings.iter().cloned());
            let (mu, residual) = gluing_index(comp.value, direct.value);
            indices.push(mu);
            worst_residual = worst_residual.max(residual.abs());
            let rec = CaseRecord::new(ci, &label, Some(h), "modulus", comp.value.norm())
                .with_oracle(direct.value.norm())
                .detail("gluing_index", mu)
                .detail("phase_residual", residual)
                .detail("stationary_points", comp.points.iter().map(|p| p.b).collect::<Vec<_>>());
            worst_modulus = worst_modulus.max(rec.rel_error.unwrap_or(0.0));
            out.records.push(rec);
        }
        let constant = indices.windows(2).all(|w| w[0] == w[1]);
        out.checks.push(Check::flag(format!("{label}: gluing index constant across h"), constant));
        out.checks.push(Check::at_most(format!("{label}: gluing phase residual"), worst_residual, 1e-6));
        if let Some(tol) = case.tolerance {
            out.checks.push(Check::at_most(format!("{label}: modulus relative error"), worst_modulus, tol));
        }
    }
    Ok(())
}

/// Coherent state of width `√h` centered at `(0.3, 0.2)`.
pub fn coherent_state(setup: &Setup, h: f64) -> DVector<Complex64> {
    let (q0, p0) = (0.3, 0.2);
    DVector::from_iterator(
        setup.grid.points,
        setup
            .grid
            .coordinates()
            .map(|q| Complex64::from_polar((-(q - q0) * (q - q0) / (2.0 * h)).exp(), p0 * q / h)),
    )
}

fn star_check(cfg: &ExperimentConfig, setup: &Setup, out: &mut Collector) -> Result<(), PipelineError> {
    let spec = cfg.star.as_ref().expect("validated");
    let polys: Vec<PolynomialObservable> = spec
        .expressions
        .iter()
        .map(|e| e.parse())
        .collect::<Result<_, StarError>>()?;
    let series: Vec<FormalSeries> = polys.iter().map(|p| FormalSeries::constant(p.clone(), 0)).collect();
    let n = series.len();
    let triples: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
        .collect();
    let defects = setup.exec.try_map(&triples, |&(i, j, k)| {
        associativity_defect(&series[i], &series[j], &series[k], spec.order).map(|d| d.is_zero())
    })?;
    let failures = defects.iter().filter(|ok| !**ok).count();
    out.records.push(
        CaseRecord::new(0, "associativity", None, "nonzero defects", failures as f64)
            .detail("triples", triples.len())
            .detail("order", spec.order)
            .with_check(failures == 0),
    );
    out.checks.push(Check::flag("associativity defect is the zero series", failures == 0));

    let mut conj_ok = true;
    for i in 0..n {
        for j in 0..n {
            let fg = moyal_product(&series[i], &series[j], spec.order)?;
            let reversed = moyal_product(&series[j].conj(), &series[i].conj(), spec.order)?;
            let ok = fg.conj() == reversed;
            conj_ok &= ok;
            out.records.push(
                CaseRecord::new(out.records.len(), format!("({}) * ({})", polys[i], polys[j]), None, "terms", {
                    fg.coefficients().iter().map(|c| c.len()).sum::<usize>() as f64
                })
                .detail("product", fg.to_string())
                .with_check(ok),
            );
        }
    }
    out.checks.push(Check::flag("star conjugation reverses products", conj_ok));

    if spec.operators {
        let mut worst: f64 = 0.0;
        for &h in &cfg.h {
            let v = coherent_state(setup, h);
            for i in 0..n {
                for j in 0..n {
                    let fg = moyal_product(&series[i], &series[j], spec.order)?;
                    let lhs = match series_operator(&fg, &setup.grid, h) {
                        Ok(m) => m,
                        Err(StarError::Oracle(OracleError::UnsupportedOrdering { .. })) => continue,
                        Err(e) => return Err(e.into()),
                    };
                    let a = series_operator(&series[i], &setup.grid, h)?;
                    let b = series_operator(&series[j], &setup.grid, h)?;
                    let left = &lhs * &v;
                    let right = &a * (&b * &v);
                    let err = (&left - &right).norm() / right.norm().max(f64::MIN_POSITIVE);
                    worst = worst.max(err);
                    out.records.push(
                        CaseRecord::new(
                            out.records.len(),
                            format!("Op(({}) * ({}))", polys[i], polys[j]),
                            Some(h),
                            "operator norm",
                            left.norm(),
                        )
                        .with_oracle(right.norm())
                        .detail("relative_defect", err),
                    );
                }
            }
        }
        out.checks.push(Check::at_most("Op(f*g) = Op(f)Op(g) on a coherent state", worst, 1e-8));
    }
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, setup: &Setup, out: &mut Collector) -> Result<(), PipelineError> {
    for (ci, case) in cfg.cases.iter().enumerate() {
        let label = case_label(case, ci);
        if observable(cfg, &case.systems[0])? != Observable::position() {
            return Err(PipelineError::Unsupported("a sweep pairs the position system with a closed system".into()));
        }
        let closed = observable(cfg, &case.systems[1])?;
        let range = (case.level_range[0], case.level_range[1]);
        let mut smallest_h_error: f64 = 0.0;
        let h_min = cfg.h.iter().copied().fold(f64::INFINITY, f64::min);
        for &h in &cfg.h {
            let es = oracle_eigensystem(&closed, &setup.grid, h)?
                .ok_or_else(|| PipelineError::Unsupported("sweep needs a quantizable closed system".into()))?;
            for sel in &case.levels {
                let level = resolve_level(&closed, *sel, h, range, setup)?;
                let (Some(n), Some(data)) = (level.n, level.data) else {
                    return Err(PipelineError::Unsupported("sweep levels must be Bohr-Sommerfeld selectors".into()));
                };
                let sys = SystemLevel::new(closed.clone(), level.b);
                let curve = sys.trace(&setup.overlap.trace)?;
                let (center, half) = q_extent(&curve);
                let jobs: Vec<f64> = case.positions.clone();
                let rows = setup.exec.try_map(&jobs, |&s| {
                    let q0 = center + s * half;
                    let q = if case.snap {
                        interference_free_position(&sys, q0, h, setup)?
                    } else {
                        q0
                    };
                    let (semi, exact) = position_probability(&sys, &data, q, &es, n as usize, h, setup)?;
                    Ok::<_, PipelineError>((s, q, semi, exact))
                })?;
                for (s, q, semi, exact) in rows {
                    let rec = CaseRecord::new(ci, &label, Some(h), "density", semi)
                        .with_oracle(exact)
                        .detail("n", n)
                        .detail("b", level.b)
                        .detail("fraction", s)
                        .detail("q", q);
                    if h == h_min {
                        smallest_h_error = smallest_h_error.max(rec.rel_error.unwrap_or(0.0));
                    }
                    out.records.push(rec);
                }
            }
        }
        if let Some(tol) = case.tolerance {
            out.checks.push(Check::at_most(
                format!("{label}: max relative error at h = {h_min}"),
                smallest_h_error,
                tol,
            ));
        }
    }
    Ok(())
}
