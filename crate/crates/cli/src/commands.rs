use std::fs::File;
use std::io::BufWriter;

use anyhow::{bail, Context, Result};
use biyb_core::algebra::{r_operator_registry, LieContext};
use biyb_core::ladder::{dynamics_ladder, fit_order, residuals_at, LadderReport, LadderSpec};
use biyb_core::lax::{curvature_from_samples, lax_field, lax_registry, LaxPair, LaxSample, SpectralValue};
use biyb_core::model::snapshot::Snapshot;
use biyb_core::model::{History, ModelParams, SigmaModel, Worldsheet};
use biyb_core::spectral::{
    conserved_trace_drift, run_cascade, CascadeOptions, CascadeParams, CascadeReport,
    MonodromyOptions, Patch,
};
use biyb_core::verify::{algebra_defects, iwasawa_defects, lax_chain_defects, offshell_defect, Measurement};
use log::info;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::report::{Check, Output};

/// Settings shared by every subcommand after flag overrides.
pub struct Run {
    pub cfg: ScenarioConfig,
    /// `--level k`: restrict to one rung of the ladder.
    pub level: Option<usize>,
}

impl Run {
    pub fn ctx(&self) -> Result<LieContext> {
        let base = LieContext::su(self.cfg.n)?;
        let registry = r_operator_registry();
        let r = (registry.get(&self.cfg.r_operator)?)(&base.basis);
        Ok(LieContext::with_r(base.basis, r)?)
    }

    fn seed(&self) -> u64 {
        self.cfg.initial.seed
    }

    /// Ladder levels to run, honoring `--level`.
    fn levels(&self) -> Result<Vec<usize>> {
        match self.level {
            Some(k) => match self.cfg.ladder.get(k) {
                Some(&n) => Ok(vec![n]),
                None => bail!("--level {k} outside ladder {:?}", self.cfg.ladder),
            },
            None => Ok(self.cfg.ladder.clone()),
        }
    }

    /// Resolution for single-run subcommands.
    fn single_n(&self, default: usize) -> Result<usize> {
        match self.level {
            Some(_) => Ok(self.levels()?[0]),
            None => Ok(default),
        }
    }

    fn model(&self, params: ModelParams, n: usize) -> Result<SigmaModel> {
        let ws = &self.cfg.worldsheet;
        let dt = ws.courant * ws.length / n as f64;
        Ok(SigmaModel::new(self.ctx()?, params, Worldsheet::new(n, ws.length, dt)?))
    }

    fn evolve(&self, model: &SigmaModel, t_final: f64) -> Result<History> {
        let initial = model.make_initial_data(&self.cfg.initial)?;
        Ok(model.evolve(initial, t_final)?)
    }

    fn lax_pair(&self, name: &str, params: ModelParams) -> Result<Box<dyn LaxPair>> {
        let registry = lax_registry();
        Ok((registry.get(name)?)(params))
    }
}

fn checks_at_most(ms: &[Measurement], tol: f64) -> Vec<Check> {
    ms.iter().map(|m| Check::at_most(&m.name, m.value, tol)).collect()
}

#[derive(Serialize)]
struct AlgebraData {
    n: usize,
    dim: usize,
    r_operator: String,
    measurements: Vec<Measurement>,
}

pub fn verify_algebra(run: &Run, out: &mut Output) -> Result<Vec<Check>> {
    let ctx = run.ctx()?;
    let a = &run.cfg.algebra;
    let tol = &run.cfg.tolerances;
    let mut ms = algebra_defects(&ctx, &ctx.r, a.samples, a.dressed_samples, run.seed())?;
    let mut checks = checks_at_most(&ms, tol.algebra);
    let iw = iwasawa_defects(ctx.n(), a.iwasawa_samples, &a.iwasawa, run.seed())?;
    checks.extend(checks_at_most(&iw, tol.iwasawa));
    ms.extend(iw);
    let data = AlgebraData {
        n: ctx.n(),
        dim: ctx.dim(),
        r_operator: run.cfg.r_operator.clone(),
        measurements: ms,
    };
    out.report("algebra.json", &checks, &data)?;
    Ok(checks)
}

#[derive(Serialize)]
struct SeriesRow {
    tau: f64,
    eom: f64,
    bianchi: f64,
    curvature: f64,
    constraint_drift: f64,
}

#[derive(Serialize)]
struct LadderRow {
    n_sigma: usize,
    dt: f64,
    eom: f64,
    bianchi: f64,
    curvature: f64,
    constraint_drift: f64,
    reprojections: usize,
}

#[derive(Serialize)]
struct SimulateData {
    n_sigma: usize,
    dt: f64,
    levels: usize,
    reprojections: usize,
    max_unitarity_defect: f64,
    max_det_defect: f64,
    ladder: Option<LadderReport>,
}

/// Residuals that are zero up to round-off carry no order information.
const EXACT_FLOOR: f64 = 1e-13;

fn order_check(name: &str, ns: &[usize], values: &[f64], min_order: f64) -> Result<Check> {
    if values.iter().all(|v| *v <= EXACT_FLOOR) {
        let worst = values.iter().copied().fold(0.0, f64::max);
        return Ok(Check::at_most(format!("{name}_exact"), worst, EXACT_FLOOR));
    }
    let order = fit_order(ns, values).unwrap_or(f64::NAN);
    Ok(Check::at_least(format!("{name}_order"), order, min_order))
}

pub fn simulate(run: &Run, out: &mut Output) -> Result<Vec<Check>> {
    let cfg = &run.cfg;
    let tol = &cfg.tolerances;
    let n = run.single_n(cfg.worldsheet.n_sigma)?;
    let model = run.model(cfg.params(), n)?;
    let history = run.evolve(&model, cfg.worldsheet.t_final)?;
    let zetas: Vec<SpectralValue> = vec![SpectralValue::new(0.5, 0.0), SpectralValue::new(0.0, 2.0)];

    let mut series = Vec::new();
    let stride = ((cfg.simulate.report_every / history.dt).round() as usize).max(1);
    for k in (0..history.len()).step_by(stride) {
        let tau = history.states[k].tau;
        if history.window(k, cfg.stencil.g_window()).is_none() {
            continue;
        }
        let (eom, bianchi, curvature) = residuals_at(&model, &history, tau, cfg.stencil, &zetas)?;
        series.push(SeriesRow {
            tau,
            eom,
            bianchi,
            curvature,
            constraint_drift: model.constraint_drift(&history.states[k])?,
        });
    }
    out.csv("residuals.csv", &series)?;

    for (label, state) in [("initial", &history.states[0]), ("final", history.last())] {
        let snap = Snapshot {
            length: model.sheet.length,
            state: state.clone(),
        };
        let name = format!("snapshot_{label}.json");
        out.json_text(&name, &snap.to_json()?)?;
        if cfg.simulate.binary_snapshots {
            let path = out.path(&format!("snapshot_{label}.bin"));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            snap.write_binary(BufWriter::new(file))?;
        }
    }

    let drift = model.constraint_drift(history.last())?;
    let mut checks = vec![Check::at_most("constraint_drift", drift, tol.constraint_drift)];

    let levels = run.levels()?;
    let ladder = if run.level.is_none() && levels.len() >= 2 {
        let spec = LadderSpec {
            levels: levels.clone(),
            length: cfg.worldsheet.length,
            courant: cfg.worldsheet.courant,
            t_final: cfg.worldsheet.t_final,
            initial: cfg.initial.clone(),
            stencil: cfg.stencil,
            zetas: zetas.iter().map(|z| z.finite().map(|c| (c.re, c.im)).expect("finite")).collect(),
        };
        let report = dynamics_ladder(&run.ctx()?, cfg.params(), &spec)?;
        let rows: Vec<LadderRow> = report
            .rungs
            .iter()
            .map(|r| LadderRow {
                n_sigma: r.n_sigma,
                dt: r.dt,
                eom: r.eom,
                bianchi: r.bianchi,
                curvature: r.curvature,
                constraint_drift: r.constraint_drift,
                reprojections: r.reprojections,
            })
            .collect();
        out.csv("ladder.csv", &rows)?;
        let ns: Vec<usize> = report.rungs.iter().map(|r| r.n_sigma).collect();
        let col = |f: fn(&biyb_core::ladder::Rung) -> f64| -> Vec<f64> { report.rungs.iter().map(f).collect() };
        checks.push(order_check("eom", &ns, &col(|r| r.eom), tol.min_order)?);
        checks.push(order_check("bianchi", &ns, &col(|r| r.bianchi), tol.min_order)?);
        checks.push(order_check("curvature", &ns, &col(|r| r.curvature), tol.min_order)?);
        Some(report)
    } else {
        None
    };

    let data = SimulateData {
        n_sigma: n,
        dt: history.dt,
        levels: history.len(),
        reprojections: history.stats.reprojections,
        max_unitarity_defect: history.stats.max_unitarity_defect,
        max_det_defect: history.stats.max_det_defect,
        ladder,
    };
    out.report("simulate.json", &checks, &data)?;
    Ok(checks)
}

#[derive(Serialize)]
struct SweepRow {
    re_zeta: f64,
    im_zeta: f64,
    alpha: f64,
    beta: f64,
    n_sigma: usize,
    max_residual: f64,
    l2_residual: f64,
}

#[derive(Serialize)]
struct LaxData {
    pair: String,
    zeta_count: usize,
    offshell: f64,
    chain: Vec<Measurement>,
    onshell_tau: f64,
    onshell_max: f64,
}

pub fn verify_lax(run: &Run, out: &mut Output) -> Result<Vec<Check>> {
    let cfg = &run.cfg;
    let tol = &cfg.tolerances;
    let ctx = run.ctx()?;
    let zetas = cfg.zeta.samples();

    let params: Vec<ModelParams> = cfg
        .lax
        .offshell_params
        .iter()
        .map(|&(a, b)| ModelParams::new(a, b))
        .collect::<biyb_core::Result<_>>()?;
    let offshell = offshell_defect(&ctx, &params, &zetas, cfg.lax.offshell_trials, run.seed())?;
    let mut checks = vec![Check::at_most("offshell_identity", offshell, tol.offshell)];

    let chain = lax_chain_defects(&ctx, cfg.alpha, cfg.beta, &zetas, cfg.lax.chain_points, run.seed())?;
    for m in &chain {
        let t = if m.name.starts_with("limit") { tol.limits } else { tol.gauge };
        checks.push(Check::at_most(&m.name, m.value, t));
    }

    // on-shell sweep at mid-run
    let n = run.single_n(cfg.worldsheet.n_sigma)?;
    let model = run.model(cfg.params(), n)?;
    let history = run.evolve(&model, cfg.worldsheet.t_final)?;
    let pair = run.lax_pair(&cfg.lax.pair, cfg.params())?;
    let h = cfg.stencil.half_width();
    let k = history.level_at(0.5 * cfg.worldsheet.t_final);
    let window = history
        .window(k, 2 * h + 1)
        .context("run too short for the curvature stencil")?;
    let points: Vec<_> = window.iter().map(|s| model.field_points(s)).collect();
    let ds = model.sheet.dsigma();
    let rows: Vec<SweepRow> = zetas
        .iter()
        .map(|&z| {
            let samples = points
                .iter()
                .map(|p| lax_field(pair.as_ref(), &ctx, p, z))
                .collect::<biyb_core::Result<Vec<LaxSample>>>()?;
            let f = curvature_from_samples(&ctx, &model.grid, &samples, history.dt, cfg.stencil)?;
            let c = z.finite().expect("sampled values are finite");
            Ok(SweepRow {
                re_zeta: c.re,
                im_zeta: c.im,
                alpha: cfg.alpha,
                beta: cfg.beta,
                n_sigma: n,
                max_residual: f.iter().map(|v| v.norm()).fold(0.0, f64::max),
                l2_residual: (f.iter().map(|v| v.norm_sqr()).sum::<f64>() * ds).sqrt(),
            })
        })
        .collect::<Result<_>>()?;
    out.csv("lax_sweep.csv", &rows)?;
    let onshell_max = rows.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    checks.push(Check::at_most("onshell_curvature", onshell_max, tol.curvature_onshell));

    let data = LaxData {
        pair: pair.name().to_string(),
        zeta_count: zetas.len(),
        offshell,
        chain,
        onshell_tau: history.states[k].tau,
        onshell_max,
    };
    out.report("lax.json", &checks, &data)?;
    Ok(checks)
}

#[derive(Serialize)]
struct CascadeData {
    #[serde(flatten)]
    finest: CascadeReport,
    levels: Vec<CascadeReport>,
}

fn stage_checks(rep: &CascadeReport, run: &Run) -> Vec<Check> {
    let tol = &run.cfg.tolerances;
    let n = rep.grid.n_sigma;
    let mut checks = Vec::new();
    let ids = &rep.identity_residuals;
    for (name, v) in [("por", ids.por), ("final", ids.final_)] {
        if let Some(v) = v {
            checks.push(Check::at_most(format!("{name}_exact_n{n}"), v, tol.identity_exact));
        }
    }
    for (name, v) in [("dd_vs_inversion", ids.dd_vs_inversion), ("ddd_vs_inversion", ids.ddd_vs_inversion)] {
        if let Some(v) = v {
            checks.push(Check::at_most(format!("{name}_n{n}"), v, tol.k_vs_inversion));
        }
    }
    for (i, st) in rep.stages.iter().enumerate() {
        checks.push(Check::at_most(format!("membership_stage{}_n{n}", i + 1), st.membership, tol.membership));
    }
    if run.cfg.cascade.seed_lax == biyb_core::spectral::SeedLax::Undressed {
        // output residuals stay in the class of the input run
        let floor = rep.eom_residuals.input.max(EXACT_FLOOR);
        let e = &rep.eom_residuals;
        checks.push(Check::at_most(format!("eom_ratio_stage1_n{n}"), e.intermediate / floor, tol.eom_ratio));
        checks.push(Check::at_most(format!("eom_ratio_stage2_n{n}"), e.output / floor, tol.eom_ratio));
    }
    checks
}

pub fn cascade(run: &Run, out: &mut Output) -> Result<Vec<Check>> {
    let cfg = &run.cfg;
    let c = &cfg.cascade;
    let params = CascadeParams::new(c.epsilon, c.eta)?;
    let opts = CascadeOptions {
        stencil: cfg.stencil,
        probes: c.probes.iter().map(|&(a, b)| SpectralValue::new(a, b)).collect(),
        iwasawa: c.iwasawa.clone(),
        check_flatness: c.check_flatness,
        seed_lax: c.seed_lax,
        ..Default::default()
    };
    let ctx = run.ctx()?;
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    for n in run.levels()? {
        let model = run.model(ModelParams::pcm(), n)?;
        let history = run.evolve(&model, c.patch_tau)?;
        let patch = Patch::from_history(&model, &history, 0..history.len())?;
        let (rep, _, _) = run_cascade(&ctx, &patch, params, &opts)
            .with_context(|| format!("cascade at n_sigma={n}"))?;
        info!("cascade n_sigma={n}: final_fd={:?}", rep.identity_residuals.final_fd);
        checks.extend(stage_checks(&rep, run));
        reports.push(rep);
    }
    if reports.len() >= 2 && c.seed_lax == biyb_core::spectral::SeedLax::Undressed {
        let ns: Vec<usize> = reports.iter().map(|r| r.grid.n_sigma).collect();
        let col = |f: &dyn Fn(&CascadeReport) -> Option<f64>| -> Vec<f64> {
            reports.iter().map(|r| f(r).unwrap_or(0.0)).collect()
        };
        let tol = cfg.tolerances.min_order;
        checks.push(order_check("por_fd", &ns, &col(&|r| r.identity_residuals.por_fd), tol)?);
        checks.push(order_check("final_fd", &ns, &col(&|r| r.identity_residuals.final_fd), tol)?);
        checks.push(order_check("eom_output", &ns, &col(&|r| Some(r.eom_residuals.output)), tol)?);
    }
    let data = CascadeData {
        finest: reports.last().expect("at least one level").clone(),
        levels: reports,
    };
    out.report("cascade.json", &checks, &data)?;
    Ok(checks)
}

#[derive(Serialize)]
struct TraceRow {
    tau: f64,
    re_zeta: f64,
    im_zeta: f64,
    re_trace: f64,
    im_trace: f64,
}

#[derive(Serialize)]
struct MonodromyData {
    pair: String,
    n_sigma: usize,
    zetas: Vec<String>,
    drift: Vec<f64>,
    max_drift: f64,
    max_substeps: usize,
}

pub fn monodromy(run: &Run, out: &mut Output) -> Result<Vec<Check>> {
    let cfg = &run.cfg;
    let m = &cfg.monodromy;
    let n = run.single_n(*cfg.ladder.last().expect("validated ladder"))?;
    let model = run.model(cfg.params(), n)?;
    let history = run.evolve(&model, cfg.worldsheet.t_final)?;
    let pair = run.lax_pair(&m.pair, cfg.params())?;
    let zetas = biyb_core::verify::zeta_samples(&cfg.zeta.radii, m.points_per_circle, cfg.zeta.exclusion);
    let opts = MonodromyOptions {
        tolerance: m.tolerance,
        max_substeps: m.max_substeps,
        stride: m.stride,
        ..Default::default()
    };
    let drift = conserved_trace_drift(&model, &history, pair.as_ref(), &zetas, &opts)?;
    let mut rows = Vec::new();
    for (z, series) in zetas.iter().zip(&drift.traces) {
        let c = z.finite().expect("sampled values are finite");
        for (tau, tr) in drift.taus.iter().zip(series) {
            rows.push(TraceRow {
                tau: *tau,
                re_zeta: c.re,
                im_zeta: c.im,
                re_trace: tr[0],
                im_trace: tr[1],
            });
        }
    }
    out.csv("monodromy.csv", &rows)?;
    let checks = vec![Check::at_most("trace_drift", drift.max_drift(), cfg.tolerances.trace_drift)];
    let data = MonodromyData {
        pair: drift.pair.clone(),
        n_sigma: n,
        zetas: drift.zetas.clone(),
        max_drift: drift.max_drift(),
        drift: drift.drift,
        max_substeps: drift.max_substeps,
    };
    out.report("monodromy.json", &checks, &data)?;
    Ok(checks)
}
