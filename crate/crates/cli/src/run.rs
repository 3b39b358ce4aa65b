//! Experiment runners. Each turns a validated configuration into a verdict, a
//! JSON result block and tables; nothing here touches the filesystem.

use std::sync::Arc;

use levymax::calculus::{zoo_function, HolderClass, Polynomial, SmoothFunction};
use levymax::clarke::{clarke_sample, minmax_represent, SampleMode};
use levymax::discrete_diff::FrameMode;
use levymax::experiments::{run_criterion, Table, CRITERIA};
use levymax::grid::{separation_ratio, Grid};
use levymax::levy::{default_eps_list, extract_levy, extremal_inequalities, weighted_measure};
use levymax::operators::{gcp_check, GridOperator};
use levymax::point::sample_lattice;
use levymax::stats::loglog_fit;
use levymax::whitney::{approximation_rate, corrector, restrict, WhitneyExtension};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{ConfigError, CriterionSel, Experiment, ExperimentConfig};

pub enum Failure {
    /// Bad configuration discovered while setting up; no artifacts are written.
    Config(ConfigError),
    /// The experiment itself errored; a report is still written.
    Experiment(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<levymax::Error> for Failure {
    fn from(e: levymax::Error) -> Self {
        Failure::Experiment(e.to_string())
    }
}

pub struct Artifacts {
    pub passed: bool,
    pub results: Value,
    pub tables: Vec<Table>,
    /// Extra JSON files written next to the report.
    pub files: Vec<(String, Value)>,
}

impl Artifacts {
    fn new(passed: bool, results: Value, tables: Vec<Table>) -> Self {
        Artifacts { passed, results, tables, files: Vec::new() }
    }
}

pub fn run(exp: Experiment, cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    match exp {
        Experiment::Grid => grid(cfg),
        Experiment::Extend => extend(cfg),
        Experiment::Rates => rates(cfg),
        Experiment::Gcp => gcp(cfg),
        Experiment::Minmax => minmax(cfg),
        Experiment::Levy => levy(cfg),
        Experiment::Corrector => corrector_run(cfg),
        Experiment::Extremal => extremal(cfg),
        Experiment::Study => study(cfg),
    }
}

fn seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed.unwrap_or(0)
}

fn function(cfg: &ExperimentConfig, default: &str, cls: &HolderClass) -> Result<Box<dyn SmoothFunction>, Failure> {
    let name = cfg.function.as_deref().unwrap_or(default);
    zoo_function(name, cfg.dim(), Some(cls.beta)).map_err(|e| Failure::Config(ConfigError(e.to_string())))
}

fn grid(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let g = cfg.grid_at(cfg.level(3))?;
    let ext = WhitneyExtension::for_grid(g.clone(), HolderClass::holder(0.5)?)?;
    let lambda = separation_ratio(&g)?;
    let cover = ext.cover();
    let results = json!({
        "dim": g.dim(), "level": g.level(), "points": g.len(), "spacing": g.spacing(), "gauge": g.gauge(),
        "separation_ratio": lambda, "cubes": cover.len(), "overlap_bound": cover.overlap_bound(),
    });
    let mut a = Artifacts::new(true, results, vec![]);
    a.files.push(("grid.json".into(), serde_json::to_value(g.to_file()).expect("grid serializes")));
    a.files.push(("cover.json".into(), serde_json::to_value(cover.dump()).expect("cover serializes")));
    Ok(a)
}

fn extend(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let cls = cfg.holder_class(0.5)?;
    let g = cfg.grid_at(cfg.level(3))?;
    let u = function(cfg, "gaussian_bump", &cls)?;
    let ext = WhitneyExtension::for_grid(g.clone(), cls)?;
    let e = ext.extend(&restrict(g.clone(), u.as_ref()))?;
    let pitch = g.spacing() / if g.dim() == 1 { 8.0 } else { 4.0 };
    let pts = sample_lattice(g.domain(), pitch);
    let header: &[&str] =
        if g.dim() == 1 { &["x", "extension", "function"] } else { &["x", "y", "extension", "function"] };
    let mut t = Table::new("extension", header);
    let mut err = 0.0f64;
    for p in &pts {
        let (ev, uv) = (e.value(p), u.value(p));
        err = err.max((ev - uv).abs());
        let mut row = p.coords().to_vec();
        row.extend([ev, uv]);
        t.rows.push(row);
    }
    let results =
        json!({"function": u.name(), "beta": cls.beta, "level": g.level(), "samples": pts.len(), "sup_error": err});
    Ok(Artifacts::new(true, results, vec![t]))
}

fn rates(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let cls = cfg.holder_class(0.5)?;
    let u = function(cfg, "sine", &cls)?;
    let grids: Vec<Arc<Grid>> =
        cfg.levels(&[2, 3, 4, 5, 6]).into_iter().map(|n| cfg.grid_at(n)).collect::<Result<_, _>>()?;
    let mode = cfg.frame_mode.unwrap_or(FrameMode::Stencil);
    let r = approximation_rate(u.as_ref(), &cls, &grids, mode)?;
    let band = cfg.tolerances.rate_band.unwrap_or(0.3);
    let slope = r.table.slope();
    let passed = slope.is_some_and(|s| (s - r.gamma).abs() <= band);
    let mut t = Table::new("rates", &["level", "h", "error", "sup0", "sup1", "sup2", "seminorm"]);
    for row in &r.rows {
        let e = &row.error;
        t.rows.push(vec![row.level as f64, row.h, e.total, e.sup[0], e.sup[1], e.sup[2], e.seminorm]);
    }
    let results = json!({"function": r.function, "beta": r.beta, "gamma": r.gamma, "slope": slope, "band": band,
                         "exact": r.table.exact});
    Ok(Artifacts::new(passed, results, vec![t]))
}

fn gcp(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let g = cfg.grid_at(cfg.level(3))?;
    let op = cfg.operator_on(g, "discrete_laplacian")?;
    let v = gcp_check(&op, cfg.tolerances.trials.unwrap_or(200), seed(cfg));
    let results = json!({"operator": op.kind(), "verdict": v});
    Ok(Artifacts::new(v.passed, results, vec![]))
}

fn random_inputs(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn minmax(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let g = cfg.grid_at(cfg.level(2))?;
    let op = cfg.operator_on(g.clone(), "isaacs")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed(cfg));
    let validation = random_inputs(g.len(), 100, &mut rng);
    let mut bases = random_inputs(g.len(), 30, &mut rng);
    bases.extend(validation.iter().cloned());
    let mode = if matches!(op, GridOperator::BlackBox(_)) { SampleMode::Numeric } else { SampleMode::ExactStructured };
    let rep = minmax_represent(&op, &bases, 2, mode, &validation, seed(cfg))?;
    let tol = cfg.tolerances.residual.unwrap_or(1e-8);
    let mut t = Table::new("minmax_residuals", &["validation_index", "residual"]);
    t.rows = rep.residuals.iter().enumerate().map(|(i, r)| vec![i as f64, *r]).collect();
    let results = json!({"operator": op.kind(), "points": g.len(), "elements": rep.elements.len(),
                         "residual": rep.residual, "tolerance": tol});
    let mut a = Artifacts::new(rep.residual <= tol, results, vec![t]);
    a.files.push(("minmax.json".into(), serde_json::to_value(rep.dump()).expect("representation serializes")));
    Ok(a)
}

fn levy(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let cls = cfg.holder_class(2.0)?;
    let g = cfg.grid_at(cfg.level(3))?;
    let op = cfg.operator_on(g.clone(), "discrete_laplacian")?;
    let x = cfg.base_point(&g)?;
    // nonlinear operators contribute their Clarke elements at u = 0
    let elements = match &op {
        GridOperator::Linear(l) => vec![l.clone()],
        other => clarke_sample(other, &vec![0.0; g.len()], 8, SampleMode::ExactStructured, seed(cfg))?.elements,
    };
    let eps = default_eps_list(&g);
    let mut t = Table::new("levy", &["element", "eps", "A00", "B0", "C", "negative_mass", "weighted_tv"]);
    let mut triples = Vec::new();
    let mut negative = 0.0f64;
    for (k, l) in elements.iter().enumerate() {
        for &e in &eps {
            let tr = extract_levy(l, &x, e, &cls)?;
            let tv = weighted_measure(&tr, 0.5).total_variation;
            negative = negative.min(tr.mu.negative_mass());
            t.rows.push(vec![k as f64, e, tr.a[(0, 0)], tr.b[0], tr.c, tr.mu.negative_mass(), tv]);
            triples.push(tr.dump());
        }
    }
    let results = json!({"operator": op.kind(), "x": x, "eps": eps, "elements": elements.len(),
                         "negative_mass": negative});
    let mut a = Artifacts::new(negative == 0.0, results, vec![t]);
    a.files.push(("triples.json".into(), serde_json::to_value(&triples).expect("triples serialize")));
    Ok(a)
}

fn corrector_run(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let cls = cfg.holder_class(1.5)?;
    let mut t = Table::new("corrector", &["level", "h", "constant", "norm", "min_before", "min_after"]);
    for n in cfg.levels(&[2, 3, 4, 5]) {
        let g = cfg.grid_at(n)?;
        let x0 = cfg.base_point(&g)?;
        let w = Polynomial::squared_distance(&x0);
        let ext = WhitneyExtension::for_grid(g.clone(), cls)?;
        let r = corrector(&ext, &w, &x0)?;
        t.rows.push(vec![n as f64, g.gauge(), r.constant, r.norm_estimate.total, r.min_before, r.min_after]);
    }
    let h: Vec<f64> = t.rows.iter().map(|r| r[1]).collect();
    let norms: Vec<f64> = t.rows.iter().map(|r| r[3]).collect();
    let slope = loglog_fit(&h, &norms).map(|f| f.slope);
    let target = cls.gamma() - cfg.tolerances.rate_band.unwrap_or(0.3);
    let positive = t.rows.iter().all(|r| r[5] >= -1e-12);
    let results = json!({"beta": cls.beta, "norm_slope": slope, "required_slope": target, "positive": positive});
    Ok(Artifacts::new(positive && slope.is_some_and(|s| s >= target), results, vec![t]))
}

fn extremal(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let g = cfg.grid_at(cfg.level(3))?;
    let op = cfg.operator_on(g, "isaacs")?;
    let GridOperator::MinMax(m) = &op else {
        return Err(Failure::Config(ConfigError(format!(
            "extremal needs a min-max operator with its own family, got {}",
            op.kind()
        ))));
    };
    let tol = cfg.tolerances.extremal.unwrap_or(1e-10);
    let r = extremal_inequalities(&op, &m.linear_family(), cfg.tolerances.trials.unwrap_or(500), tol, seed(cfg))?;
    let results = json!({"operator": op.kind(), "tolerance": tol, "report": r});
    Ok(Artifacts::new(r.violations == 0, results, vec![]))
}

fn study(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let ids: Vec<u8> = match &cfg.criterion {
        Some(CriterionSel::One(k)) => vec![*k],
        _ => CRITERIA.iter().map(|c| c.0).collect(),
    };
    let mut outcomes = Vec::new();
    let mut tables = Vec::new();
    let mut passed = true;
    for id in ids {
        let o = run_criterion(id, seed(cfg))?;
        passed &= o.passed;
        for t in &o.tables {
            let mut t = t.clone();
            t.name = format!("ac{:02}_{}", id, t.name);
            tables.push(t);
        }
        outcomes.push(o);
    }
    Ok(Artifacts::new(passed, json!({"criteria": outcomes}), tables))
}
