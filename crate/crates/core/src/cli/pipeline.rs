//! Marginal fits, pseudo-samples, copula fits with fitting errors, and risk reports.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{target_weights, CopulaChoice, LevelSpec, PipelineConfig};
use super::ingest::{IngestStats, LossData};
use crate::copulas::{Copula, CopulaModel};
use crate::error::{CoriskError, Result};
use crate::estimation::{
    clip_pseudo, fit_copula, fitting_errors, EmpiricalCopula, Family, FitConfig, FitResult, Region,
};
use crate::marginals::{pseudo_samples, MarginalModel, SemiparametricGpdTail};
use crate::measures::{contributions, MeasureRequest, MedianPolicy, RiskReport};
use crate::models::JointModel;
use crate::rng::splitmix64;

pub const FAMILIES: [Family; 4] = [Family::Gaussian, Family::Gumbel, Family::Clayton, Family::Mixture];
const PSEUDO_CLIP: f64 = 1e-10;
const FIT_ERROR_STREAM: u64 = 0x6669_745f_6572_72;
/// Uniform draws per region for the fitting-error table.
pub const PIPELINE_FIT_MC: usize = 1 << 14;

/// Region bounds of the fitting-error table, applied to every coordinate.
pub const FIT_REGIONS: [(f64, f64); 5] = [(0.0, 1.0), (0.0, 0.2), (0.0, 0.5), (0.5, 1.0), (0.8, 1.0)];

/// Everything `measure` needs, serialized as `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub assets: Vec<String>,
    pub threshold_level: f64,
    pub copula_family: Family,
    pub joint: JointModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaFitSummary {
    pub family: Family,
    pub params: Vec<(String, f64, f64)>,
    pub loglik: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub min_information_eigenvalue: f64,
    pub vanishing_components: Vec<String>,
}

impl From<&FitResult> for CopulaFitSummary {
    fn from(f: &FitResult) -> Self {
        CopulaFitSummary {
            family: f.family,
            params: f
                .param_names
                .iter()
                .zip(&f.params)
                .zip(&f.std_errors)
                .map(|((n, p), s)| (n.clone(), *p, *s))
                .collect(),
            loglik: f.loglik,
            aic: f.aic(),
            converged: f.converged,
            iterations: f.iterations,
            grad_norm: f.grad_norm,
            min_information_eigenvalue: f.min_information_eigenvalue,
            vanishing_components: f.vanishing_components.clone(),
        }
    }
}

/// Fitting error per family in one region; `None` where the family failed to fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitErrorRow {
    pub region: String,
    pub errors: Vec<Option<(f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct FitStage {
    pub model: FittedModel,
    pub marginals: Vec<SemiparametricGpdTail>,
    pub fits: Vec<(Family, std::result::Result<FitResult, CoriskError>)>,
    pub fit_errors: Vec<FitErrorRow>,
    pub fit_error_seed: u64,
    pub warnings: Vec<String>,
}

fn family_for(choice: CopulaChoice) -> Option<Family> {
    match choice {
        CopulaChoice::Gaussian => Some(Family::Gaussian),
        CopulaChoice::Gumbel => Some(Family::Gumbel),
        CopulaChoice::Clayton => Some(Family::Clayton),
        CopulaChoice::Mixed => Some(Family::Mixture),
        CopulaChoice::Auto => None,
    }
}

pub fn fit_error_seed(seed: u64) -> u64 {
    splitmix64(seed ^ FIT_ERROR_STREAM)
}

/// Marginal fits, pseudo-samples, every candidate copula family, and the fitting-error table.
pub fn fit_stage(data: &LossData, cfg: &PipelineConfig) -> Result<FitStage> {
    let n = data.assets.len();
    let marginals = (0..n)
        .into_par_iter()
        .map(|j| SemiparametricGpdTail::fit(&data.losses.column(j), cfg.threshold_level))
        .collect::<Result<Vec<_>>>()?;
    let models: Vec<MarginalModel> = marginals.iter().cloned().map(MarginalModel::Semiparametric).collect();
    let pseudo = clip_pseudo(&pseudo_samples(&models, &data.losses)?, PSEUDO_CLIP);

    let fit_cfg = FitConfig::default();
    let fits: Vec<(Family, std::result::Result<FitResult, CoriskError>)> =
        FAMILIES.iter().map(|&f| (f, fit_copula(&pseudo, f, &fit_cfg))).collect();

    let mut warnings = Vec::new();
    for (f, r) in &fits {
        match r {
            Err(e) => warnings.push(format!("{} fit failed: {e}", f.name())),
            Ok(r) => {
                for c in &r.vanishing_components {
                    warnings.push(format!("{} fit: component {c} vanishes at the weight floor", f.name()));
                }
            }
        }
    }
    for (m, name) in marginals.iter().zip(&data.assets) {
        if m.gpd().xi_is_zero {
            warnings.push(format!("asset {name}: xi not significant, exponential tail used"));
        }
    }

    let emp = EmpiricalCopula::new(pseudo)?;
    let seed = fit_error_seed(cfg.seed);
    let fitted: Vec<&CopulaModel> = fits.iter().filter_map(|(_, r)| r.as_ref().ok().map(|r| &r.model)).collect();
    let dyns: Vec<&dyn Copula> = fitted.iter().map(|c| *c as &dyn Copula).collect();
    let mut fit_errors = Vec::new();
    for (k, &(lo, hi)) in FIT_REGIONS.iter().enumerate() {
        let region = Region::cube(lo, hi, n)?;
        let errs = fitting_errors(&dyns, &emp, &region, PIPELINE_FIT_MC, seed.wrapping_add(k as u64))?;
        let mut it = errs.into_iter();
        let errors = fits.iter().map(|(_, r)| r.as_ref().ok().map(|_| it.next().map(|e| (e.value, e.std_error)).unwrap())).collect();
        fit_errors.push(FitErrorRow { region: region.label(), errors });
    }

    let family = match family_for(cfg.copula_choice) {
        Some(f) => f,
        None => {
            let overall = &fit_errors[0].errors;
            let best = FAMILIES
                .iter()
                .zip(overall)
                .filter_map(|(f, e)| e.map(|e| (*f, e.0)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| CoriskError::NonConvergence("no copula family could be fitted".into()))?;
            best.0
        }
    };
    let chosen = fits
        .iter()
        .find(|(f, _)| *f == family)
        .map(|(_, r)| r.clone())
        .expect("family is one of FAMILIES")?;
    let joint = JointModel::from_copula(chosen.model, models)?;
    Ok(FitStage {
        model: FittedModel { assets: data.assets.clone(), threshold_level: cfg.threshold_level, copula_family: family, joint },
        marginals,
        fits,
        fit_errors,
        fit_error_seed: seed,
        warnings,
    })
}

/// Reports for every target at one level specification.
pub fn measure_level(model: &FittedModel, level: &LevelSpec, weights: Option<&Vec<Vec<f64>>>) -> Result<Vec<RiskReport>> {
    let n = model.assets.len();
    let (p1, p_tail) = level.resolve(n)?;
    (0..n)
        .into_par_iter()
        .map(|t| {
            let req = MeasureRequest::new(t, p1, p_tail.clone(), target_weights(weights, t, n)?)?;
            contributions(&model.joint, &req, MedianPolicy::Skip)
        })
        .collect()
}

pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CoriskError + '_ {
    move |e| CoriskError::Input(format!("cannot write {}: {e}", path.display()))
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(header).map_err(&err)?;
    for r in rows {
        w.write_record(r).map_err(&err)?;
    }
    w.flush().map_err(|e| CoriskError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Row labels of a measures file, in order.
pub const MEASURE_ROWS: [&str; 19] = [
    "var",
    "mcovar",
    "delta_mcovar",
    "delta_r_mcovar",
    "median_mcovar",
    "delta_med_mcovar",
    "delta_r_med_mcovar",
    "es",
    "mcoes",
    "delta_mcoes",
    "delta_r_mcoes",
    "median_mcoes",
    "delta_med_mcoes",
    "delta_r_med_mcoes",
    "mmme_threshold",
    "stop_loss",
    "mmme",
    "delta_mmme",
    "delta_r_mmme",
];

fn measure_row(r: &RiskReport, row: &str) -> Option<f64> {
    Some(match row {
        "var" => r.var,
        "mcovar" => r.mcovar,
        "delta_mcovar" => r.delta_mcovar,
        "delta_r_mcovar" => r.delta_r_mcovar,
        "median_mcovar" => r.mcovar - r.delta_med_mcovar?,
        "delta_med_mcovar" => r.delta_med_mcovar?,
        "delta_r_med_mcovar" => r.delta_r_med_mcovar?,
        "es" => r.es,
        "mcoes" => r.mcoes,
        "delta_mcoes" => r.delta_mcoes,
        "delta_r_mcoes" => r.delta_r_mcoes,
        "median_mcoes" => r.mcoes - r.delta_med_mcoes?,
        "delta_med_mcoes" => r.delta_med_mcoes?,
        "delta_r_med_mcoes" => r.delta_r_med_mcoes?,
        "mmme_threshold" => r.mmme_threshold,
        "stop_loss" => r.stop_loss,
        "mmme" => r.mmme,
        "delta_mmme" => r.delta_mmme,
        "delta_r_mmme" => r.delta_r_mmme,
        _ => return None,
    })
}

pub fn measures_file_name(level: &LevelSpec) -> String {
    format!("measures_{}.csv", level.label())
}

pub fn write_measures(path: &Path, assets: &[String], reports: &[RiskReport]) -> Result<()> {
    let mut header = vec!["measure".to_string()];
    header.extend(assets.iter().cloned());
    let rows: Vec<Vec<String>> = MEASURE_ROWS
        .iter()
        .map(|row| {
            let mut rec = vec![row.to_string()];
            rec.extend(reports.iter().map(|r| fmt_opt(measure_row(r, row))));
            rec
        })
        .collect();
    write_rows(path, &header, &rows)
}

pub fn write_marginals(path: &Path, assets: &[String], marginals: &[SemiparametricGpdTail]) -> Result<()> {
    let header: Vec<String> =
        ["asset", "parameter", "estimate", "std_error", "threshold_level", "threshold_value", "n_excesses", "xi_is_zero"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    let mut rows = Vec::new();
    for (a, m) in assets.iter().zip(marginals) {
        let g = m.gpd();
        for (name, est, se) in [("xi", g.xi, g.se_xi), ("beta", g.beta, g.se_beta)] {
            rows.push(vec![
                a.clone(),
                name.to_string(),
                fmt_num(est),
                fmt_num(se),
                fmt_num(m.threshold_level()),
                fmt_num(m.threshold_value()),
                g.n_excesses.to_string(),
                g.xi_is_zero.to_string(),
            ]);
        }
    }
    write_rows(path, &header, &rows)
}

/// Fitting errors in percent, one row per region; empty cells for families that failed.
pub fn write_fit_errors(path: &Path, rows: &[FitErrorRow]) -> Result<()> {
    let mut header = vec!["region".to_string()];
    header.extend(FAMILIES.iter().map(|f| format!("{}_pct", f.name())));
    header.extend(FAMILIES.iter().map(|f| format!("{}_se_pct", f.name())));
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut rec = vec![r.region.clone()];
            rec.extend(r.errors.iter().map(|e| fmt_opt(e.map(|e| 100.0 * e.0))));
            rec.extend(r.errors.iter().map(|e| fmt_opt(e.map(|e| 100.0 * e.1))));
            rec
        })
        .collect();
    write_rows(path, &header, &out)
}

pub fn write_copula_fits(path: &Path, fits: &[(Family, std::result::Result<FitResult, CoriskError>)]) -> Result<()> {
    let header: Vec<String> = ["family", "parameter", "estimate", "std_error", "loglik", "aic", "converged"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for (_, r) in fits {
        let Ok(r) = r else { continue };
        for ((name, p), se) in r.param_names.iter().zip(&r.params).zip(&r.std_errors) {
            rows.push(vec![
                r.family.name().to_string(),
                name.clone(),
                fmt_num(*p),
                fmt_num(*se),
                fmt_num(r.loglik),
                fmt_num(r.aic()),
                r.converged.to_string(),
            ]);
        }
    }
    write_rows(path, &header, &rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CoriskError::NumericFailure(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CoriskError::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<FittedModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoriskError::Input(format!("cannot read model {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CoriskError::Input(format!("model {}: {e}", path.display())))
}

/// Provenance record written as `run.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: PipelineConfig,
    pub seeds: Seeds,
    pub tolerances: Tolerances,
    pub started_at: String,
    pub finished_at: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copula_family: Option<Family>,
    pub fits: Vec<CopulaFitSummary>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seeds {
    pub config: u64,
    pub fit_error: u64,
    pub fit_error_draws: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    pub fit_gradient: f64,
    pub weight_floor: f64,
    pub information_floor: f64,
    pub pseudo_clip: f64,
    pub median_policy: MedianPolicy,
}

impl Tolerances {
    pub fn current() -> Self {
        Tolerances {
            fit_gradient: FitConfig::default().polish.grad_tol,
            weight_floor: crate::estimation::WEIGHT_FLOOR,
            information_floor: 1e-10,
            pseudo_clip: PSEUDO_CLIP,
            median_policy: MedianPolicy::Skip,
        }
    }
}

impl RunRecord {
    pub fn new(command: &str, config: &PipelineConfig, started_at: String) -> Self {
        RunRecord {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            seeds: Seeds { config: config.seed, fit_error: fit_error_seed(config.seed), fit_error_draws: PIPELINE_FIT_MC },
            tolerances: Tolerances::current(),
            started_at: started_at.clone(),
            finished_at: started_at,
            ingest: None,
            copula_family: None,
            fits: Vec::new(),
            warnings: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Writes the fit-stage reports into `dir` and returns the file names.
pub fn write_fit_outputs(dir: &Path, stage: &FitStage) -> Result<Vec<String>> {
    let m = &stage.model;
    write_marginals(&dir.join("marginals.csv"), &m.assets, &stage.marginals)?;
    write_fit_errors(&dir.join("fit_errors.csv"), &stage.fit_errors)?;
    write_copula_fits(&dir.join("copula_fits.csv"), &stage.fits)?;
    write_json(&dir.join("model.json"), m)?;
    Ok(vec!["marginals.csv".into(), "fit_errors.csv".into(), "copula_fits.csv".into(), "model.json".into()])
}

/// Computes and writes one measures file per level; returns file names and warnings.
pub fn write_measure_outputs(
    dir: &Path,
    model: &FittedModel,
    levels: &[LevelSpec],
    weights: Option<&Vec<Vec<f64>>>,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut names = Vec::new();
    let mut warnings = Vec::new();
    for level in levels {
        let reports = measure_level(model, level, weights)?;
        let name = measures_file_name(level);
        write_measures(&dir.join(&name), &model.assets, &reports)?;
        for r in &reports {
            for w in &r.warnings {
                warnings.push(format!("{name} {}: {w}", model.assets[r.target]));
            }
        }
        names.push(name);
    }
    Ok((names, warnings))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CoriskError::Input(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

/// Parses a measures file back into `(row label, per-asset values)`.
pub fn read_measures(path: &Path) -> Result<(Vec<String>, Vec<(String, Vec<Option<f64>>)>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CoriskError::Input(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CoriskError::Input(e.to_string()))?.clone();
    let assets = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CoriskError::Input(e.to_string()))?;
        let label = rec.get(0).unwrap_or("").to_string();
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| if s.is_empty() { Ok(None) } else { s.parse::<f64>().map(Some) })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CoriskError::Input(format!("{}: {e}", path.display())))?;
        rows.push((label, vals));
    }
    Ok((assets, rows))
}
