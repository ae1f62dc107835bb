//! Reproducible experiment pipeline: config, per-degree records, fitted
//! constants, CSV/JSON output and an on-disk cache of maps and sequences.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bergman::{boundary_sup, orthonormalize, sup_norm, InnerProductEngine, OrthoSequence, Weight};
use crate::classical::{
    chebyshev, faber, sharpness_capacity, sharpness_check, sharpness_instance, ClassicalError,
    FaberSequence,
};
use crate::conformal::{ExteriorMap, InteriorMap, MapError, MapOptions};
use crate::geometry::{ConvexDomain, DomainSpec, Location};
use crate::measures::{
    balayage_measure, discrepancy, equilibrium_boundary_measure, offset_curve, potential_gap,
    BoundaryGrid, OffsetCurve,
};
use crate::zeros::{zeros_of, ZeroSet};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("insufficient data: {0} degree points, at least 8 needed")]
    InsufficientData(usize),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::InsufficientData(_) => 2,
            ExperimentError::Stage { .. } => 3,
        }
    }
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> ExperimentError {
    move |e| ExperimentError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Orthopoly,
    #[default]
    DiscrepancySweep,
    Theorem2Check,
    Example1,
    FaberSuite,
    ChebyshevSuite,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Orthopoly => "orthopoly",
            ExperimentKind::DiscrepancySweep => "discrepancy-sweep",
            ExperimentKind::Theorem2Check => "theorem2-check",
            ExperimentKind::Example1 => "example1",
            ExperimentKind::FaberSuite => "faber-suite",
            ExperimentKind::ChebyshevSuite => "chebyshev-suite",
        }
    }
}

/// Numerical resolution knobs; all have defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOptions {
    /// points on the offset curve used for ε_n
    pub offset_points: usize,
    pub max_dtheta: f64,
    pub per_side: usize,
    /// degree the area quadrature is exact for; defaults to n_max
    pub quadrature_n_max: Option<usize>,
}

impl Default for GridOptions {
    fn default() -> Self {
        let m = MapOptions::default();
        GridOptions {
            offset_points: 4096,
            max_dtheta: m.max_dtheta,
            per_side: m.per_side,
            quadrature_n_max: None,
        }
    }
}

impl GridOptions {
    fn map_options(&self) -> MapOptions {
        MapOptions {
            max_dtheta: self.max_dtheta,
            per_side: self.per_side,
        }
    }
}

/// JSON experiment description. Either `domain` or `domains` (or both) may
/// be given; they are concatenated in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub domains: Vec<DomainSpec>,
    #[serde(default)]
    pub weight: Weight,
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_cache")]
    pub cache: bool,
    /// δ values for example1
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
}

fn default_n_min() -> usize {
    1
}

fn default_n_max() -> usize {
    20
}

fn default_cache() -> bool {
    true
}

fn default_deltas() -> Vec<f64> {
    vec![0.1, 0.2, 0.5]
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, domains: Vec<DomainSpec>, n_min: usize, n_max: usize) -> Self {
        ExperimentConfig {
            domain: None,
            domains,
            weight: Weight::Unit,
            n_min,
            n_max,
            experiment: kind,
            grid: GridOptions::default(),
            output_dir: None,
            cache: false,
            deltas: default_deltas(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn all_domains(&self) -> Vec<DomainSpec> {
        self.domain.iter().cloned().chain(self.domains.iter().cloned()).collect()
    }

    pub fn quadrature_n_max(&self) -> usize {
        self.grid.quadrature_n_max.unwrap_or(self.n_max)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad(format!("empty degree range {}..{}", self.n_min, self.n_max));
        }
        if self.n_max > self.quadrature_n_max() {
            return bad(format!(
                "n_max = {} exceeds the quadrature N_max = {}",
                self.n_max,
                self.quadrature_n_max()
            ));
        }
        if let Weight::DistPower { m, c } = self.weight {
            if !(m >= 0.0 && m.is_finite() && c > 0.0 && c.is_finite()) {
                return bad(format!("weight needs m ≥ 0 and c > 0, got m = {m}, c = {c}"));
            }
        }
        let g = &self.grid;
        if g.offset_points < 16 || !(g.max_dtheta > 0.0 && g.max_dtheta < 1.0) || g.per_side < 2 {
            return bad("grid options out of range".into());
        }
        if self.experiment == ExperimentKind::Example1 {
            if self.deltas.is_empty() {
                return bad("example1 needs at least one δ".into());
            }
            if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
                return bad(format!("δ = {d} outside (0, 1]"));
            }
        } else {
            let specs = self.all_domains();
            if specs.is_empty() {
                return bad("no domain given".into());
            }
            for s in &specs {
                ConvexDomain::new(s.clone()).map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_string(self).expect("config serializes")))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Execution settings that do not change results.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    /// where cached maps and sequences live; `None` disables the cache
    pub cache_dir: Option<PathBuf>,
}

impl RunOptions {
    /// Cache under `<out>/cache` when the config enables it.
    pub fn for_config(cfg: &ExperimentConfig, jobs: Option<usize>, no_cache: bool) -> Self {
        let cache_dir = match (&cfg.output_dir, cfg.cache && !no_cache) {
            (Some(dir), true) => Some(dir.join("cache")),
            _ => None,
        };
        RunOptions { jobs, cache_dir }
    }
}

struct Cache<'a> {
    dir: Option<&'a Path>,
}

impl Cache<'_> {
    fn key(label: &str, parts: &[String]) -> String {
        let mut h = Sha256::new();
        h.update(VERSION.as_bytes());
        h.update(label.as_bytes());
        for p in parts {
            h.update([0u8]);
            h.update(p.as_bytes());
        }
        format!("{label}-{}", &hex(&h.finalize())[..24])
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let text = fs::read_to_string(self.dir?.join(format!("{key}.json"))).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn put<T: Serialize>(&self, key: &str, value: &T) {
        if let Some(dir) = self.dir {
            // the cache is an accelerator; write failures only cost time
            if fs::create_dir_all(dir).is_ok() {
                if let Ok(text) = serde_json::to_string(value) {
                    let tmp = dir.join(format!("{key}.json.tmp"));
                    if fs::write(&tmp, text).is_ok() {
                        let _ = fs::rename(&tmp, dir.join(format!("{key}.json")));
                    }
                }
            }
        }
    }

    fn get_or<T, F>(&self, key: String, build: F) -> Result<T, ExperimentError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, ExperimentError>,
    {
        if let Some(v) = self.get(&key) {
            return Ok(v);
        }
        let v = build()?;
        self.put(&key, &v);
        Ok(v)
    }
}

/// Everything computed once per domain and shared by all degrees.
pub struct DomainContext {
    pub label: String,
    pub domain: ConvexDomain,
    pub emap: ExteriorMap,
    pub imap: Option<InteriorMap>,
    pub grid: BoundaryGrid,
}

fn domain_labels(specs: &[DomainSpec]) -> Vec<String> {
    let base: Vec<String> = specs
        .iter()
        .map(|s| match s {
            DomainSpec::Polygon { vertices } => format!("polygon{}", vertices.len()),
            DomainSpec::Disk { .. } => "disk".into(),
            DomainSpec::Ellipse { .. } => "ellipse".into(),
        })
        .collect();
    base.iter()
        .enumerate()
        .map(|(i, b)| {
            if base.iter().filter(|x| *x == b).count() > 1 {
                format!("{b}-{i}")
            } else {
                b.clone()
            }
        })
        .collect()
}

fn build_context(
    label: String,
    spec: &DomainSpec,
    grid: &GridOptions,
    cache: &Cache,
) -> Result<DomainContext, ExperimentError> {
    let domain = ConvexDomain::new(spec.clone()).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let opts = grid.map_options();
    let parts = [
        serde_json::to_string(spec).unwrap_or_default(),
        serde_json::to_string(&opts).unwrap_or_default(),
    ];
    let emap_json: String = cache.get_or(Cache::key("exterior", &parts), || {
        ExteriorMap::new(&domain, &opts).map(|m| m.to_json()).map_err(stage("map"))
    })?;
    let emap = ExteriorMap::from_json(&emap_json).map_err(stage("map"))?;
    let imap_json: Option<String> = cache.get_or(Cache::key("interior", &parts), || {
        match InteriorMap::new(&domain, &opts) {
            Ok(m) => Ok(Some(m.to_json())),
            Err(MapError::Unsupported(_)) => Ok(None),
            Err(e) => Err(stage("map")(e)),
        }
    })?;
    let imap = imap_json
        .map(|j| InteriorMap::from_json(&j))
        .transpose()
        .map_err(stage("map"))?;
    let grid = BoundaryGrid::from_maps(&emap, imap.as_ref());
    Ok(DomainContext {
        label,
        domain,
        emap,
        imap,
        grid,
    })
}

fn build_sequence(
    ctx: &DomainContext,
    cfg: &ExperimentConfig,
    cache: &Cache,
) -> Result<OrthoSequence, ExperimentError> {
    let nq = cfg.quadrature_n_max();
    let parts = [
        serde_json::to_string(ctx.domain.spec()).unwrap_or_default(),
        serde_json::to_string(&cfg.weight).unwrap_or_default(),
        nq.to_string(),
        cfg.n_max.to_string(),
    ];
    cache.get_or(Cache::key("sequence", &parts), || {
        let engine = InnerProductEngine::new(&ctx.domain, cfg.weight, nq).map_err(stage("orthopoly"))?;
        orthonormalize(&engine, cfg.n_max).map_err(stage("orthopoly"))
    })
}

/// One degree n on one domain. Stage-dependent fields are `None` when the
/// experiment does not compute them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeRecord {
    pub domain: String,
    pub n: usize,
    pub lambda: f64,
    /// λ_n capⁿ
    pub lambda_cap: f64,
    pub n2_lambda_cap: f64,
    /// ‖Q_n‖ on Ḡ
    pub sup_norm: f64,
    pub d: Option<f64>,
    pub eps: Option<f64>,
    pub zeros_interior: Option<usize>,
    pub zeros_boundary: Option<usize>,
    pub zeros_exterior: Option<usize>,
    pub backward_error: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub points: usize,
    /// least squares of D_n against √(log n / n) through the origin
    pub rate_c: Option<f64>,
    /// ‖D - c x‖ / ‖D‖
    pub rate_residual: Option<f64>,
    /// max D_n / √max(ε_n, 1e-12)
    pub gap_c: Option<f64>,
    /// log ‖Q_n‖ ≈ c1 + c2 log n
    pub c1: f64,
    pub c2: f64,
    /// RMS residual of that fit
    pub c2_residual: f64,
    /// min n² λ_n capⁿ
    pub c3: f64,
}

pub const EPS_FLOOR: f64 = 1e-12;

/// Fits over all records with n ≥ 2.
pub fn fit_constants(records: &[DegreeRecord]) -> Result<FittedConstants, ExperimentError> {
    let recs: Vec<&DegreeRecord> = records.iter().filter(|r| r.n >= 2).collect();
    if recs.len() < 8 {
        return Err(ExperimentError::InsufficientData(recs.len()));
    }
    let xs = |r: &DegreeRecord| ((r.n as f64).ln() / r.n as f64).sqrt();
    let (rate_c, rate_residual) = if recs.iter().all(|r| r.d.is_some()) {
        let sxy: f64 = recs.iter().map(|r| xs(r) * r.d.unwrap()).sum();
        let sxx: f64 = recs.iter().map(|r| xs(r) * xs(r)).sum();
        let c = sxy / sxx;
        let res: f64 = recs.iter().map(|r| (r.d.unwrap() - c * xs(r)).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = recs.iter().map(|r| r.d.unwrap().powi(2)).sum::<f64>().sqrt();
        (Some(c), Some(if norm > 0.0 { res / norm } else { 0.0 }))
    } else {
        (None, None)
    };
    let gap_c = if recs.iter().all(|r| r.d.is_some() && r.eps.is_some()) {
        Some(
            recs.iter()
                .map(|r| r.d.unwrap() / r.eps.unwrap().max(EPS_FLOOR).sqrt())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    let pts: Vec<(f64, f64)> = recs.iter().map(|r| ((r.n as f64).ln(), r.sup_norm.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let c2 = sxy / sxx;
    let c1 = my - c2 * mx;
    let c2_residual = (pts.iter().map(|p| (p.1 - c1 - c2 * p.0).powi(2)).sum::<f64>() / m).sqrt();
    let c3 = recs.iter().map(|r| r.n2_lambda_cap).fold(f64::INFINITY, f64::min);
    Ok(FittedConstants {
        points: recs.len(),
        rate_c,
        rate_residual,
        gap_c,
        c1,
        c2,
        c2_residual,
        c3,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSummary {
    pub label: String,
    pub spec: DomainSpec,
    pub capacity: f64,
    /// ‖Gram - I‖_max at n_max under the engine quadrature
    pub gram_residual: Option<f64>,
    /// same against an independent, finer quadrature
    pub gram_residual_refined: Option<f64>,
    pub constants: Option<FittedConstants>,
    /// why constants are missing, if they are
    pub fit_note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub delta: f64,
    pub capacity: f64,
    pub capacity_closed_form: f64,
    pub interval_mass: f64,
    /// δ/(3π)
    pub mass_bound: f64,
    pub d: f64,
    pub eps: f64,
    /// (2/3π)√ε
    pub d_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaberRecord {
    pub domain: String,
    pub n: usize,
    /// ‖F_n‖ on Ḡ
    pub norm: f64,
    /// ‖F'_{n+1}‖ on Ḡ
    pub deriv_norm: f64,
    /// ‖F'_{n+1}‖ / (n+1)²
    pub deriv_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevRecord {
    pub domain: String,
    pub n: usize,
    pub norm: f64,
    pub cap_n: f64,
    /// ‖T_n‖ / capⁿ
    pub ratio: f64,
    /// weighted least-squares lower bound / capⁿ
    pub lower_ratio: f64,
    pub spread: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub domains: Vec<DomainSummary>,
    #[serde(default)]
    pub records: Vec<DegreeRecord>,
    #[serde(default)]
    pub example1: Vec<SharpnessRow>,
    #[serde(default)]
    pub faber: Vec<FaberRecord>,
    #[serde(default)]
    pub chebyshev: Vec<ChebyshevRecord>,
    /// max over all domains of D_n / √max(ε_n, 1e-12)
    pub gap_c: Option<f64>,
    pub provenance: Provenance,
}

fn with_pool<T: Send, F: FnOnce() -> T + Send>(jobs: Option<usize>, f: F) -> Result<T, ExperimentError> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = with_pool(opts.jobs, || run_inner(cfg, opts))??;
    report.provenance.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn contexts(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<DomainContext>, ExperimentError> {
    let cache = Cache {
        dir: opts.cache_dir.as_deref(),
    };
    let specs = cfg.all_domains();
    domain_labels(&specs)
        .into_iter()
        .zip(&specs)
        .map(|(l, s)| build_context(l, s, &cfg.grid, &cache))
        .collect()
}

fn run_inner(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport, ExperimentError> {
    let cache = Cache {
        dir: opts.cache_dir.as_deref(),
    };
    let mut report = ExperimentReport {
        experiment: cfg.experiment,
        config: cfg.clone(),
        domains: vec![],
        records: vec![],
        example1: vec![],
        faber: vec![],
        chebyshev: vec![],
        gap_c: None,
        provenance: Provenance {
            config_hash: cfg.hash(),
            version: VERSION.into(),
            wall_time_s: 0.0,
        },
    };
    if cfg.experiment == ExperimentKind::Example1 {
        report.example1 = cfg
            .deltas
            .par_iter()
            .map(|&delta| example1_record(delta))
            .collect::<Result<_, _>>()?;
        return Ok(report);
    }
    for ctx in contexts(cfg, opts)? {
        let mut summary = DomainSummary {
            label: ctx.label.clone(),
            spec: ctx.domain.spec().clone(),
            capacity: ctx.emap.capacity(),
            gram_residual: None,
            gram_residual_refined: None,
            constants: None,
            fit_note: None,
        };
        match cfg.experiment {
            ExperimentKind::Orthopoly | ExperimentKind::DiscrepancySweep | ExperimentKind::Theorem2Check => {
                let seq = build_sequence(&ctx, cfg, &cache)?;
                if cfg.experiment == ExperimentKind::Orthopoly {
                    let engine = InnerProductEngine::new(&ctx.domain, cfg.weight, cfg.quadrature_n_max())
                        .map_err(stage("orthopoly"))?;
                    summary.gram_residual = Some(seq.gram_residual(&engine, cfg.n_max));
                    summary.gram_residual_refined = Some(
                        seq.gram_residual_refined(&ctx.domain, cfg.n_max)
                            .map_err(stage("orthopoly"))?,
                    );
                }
                let full = cfg.experiment != ExperimentKind::Orthopoly;
                let curve = if full {
                    Some(offset_curve(&ctx.emap, cfg.grid.offset_points).map_err(stage("measures"))?)
                } else {
                    None
                };
                let recs: Vec<DegreeRecord> = (cfg.n_min..=cfg.n_max)
                    .into_par_iter()
                    .map(|n| degree_record(&ctx, &seq, n, curve.as_ref()))
                    .collect::<Result<_, _>>()?;
                match fit_constants(&recs) {
                    Ok(c) => summary.constants = Some(c),
                    Err(e) => summary.fit_note = Some(e.to_string()),
                }
                report.records.extend(recs);
            }
            ExperimentKind::FaberSuite => {
                let fs = faber(&ctx.emap, cfg.n_max + 1).map_err(stage("faber"))?;
                report.faber.extend(faber_records(&ctx, &fs, cfg.n_min, cfg.n_max));
            }
            ExperimentKind::ChebyshevSuite => {
                let fs = faber(&ctx.emap, cfg.n_max).map_err(stage("chebyshev"))?;
                let recs: Vec<ChebyshevRecord> = (cfg.n_min..=cfg.n_max)
                    .into_par_iter()
                    .map(|n| chebyshev_record(&ctx, &fs, n))
                    .collect::<Result<_, _>>()?;
                report.chebyshev.extend(recs);
            }
            ExperimentKind::Example1 => unreachable!(),
        }
        report.domains.push(summary);
    }
    if matches!(
        cfg.experiment,
        ExperimentKind::DiscrepancySweep | ExperimentKind::Theorem2Check
    ) {
        report.gap_c = gap_constant(&report.records);
    }
    Ok(report)
}

/// Global `C = max D_n / √max(ε_n, 1e-12)` over all records with both values.
pub fn gap_constant(records: &[DegreeRecord]) -> Option<f64> {
    records
        .iter()
        .filter_map(|r| Some(r.d? / r.eps?.max(EPS_FLOOR).sqrt()))
        .reduce(f64::max)
}

pub fn degree_record(
    ctx: &DomainContext,
    seq: &OrthoSequence,
    n: usize,
    curve: Option<&OffsetCurve>,
) -> Result<DegreeRecord, ExperimentError> {
    let cap = ctx.emap.capacity();
    let lambda_cap = (seq.log_lambda[n] + n as f64 * cap.ln()).exp();
    let mut rec = DegreeRecord {
        domain: ctx.label.clone(),
        n,
        lambda: seq.lambda(n),
        lambda_cap,
        n2_lambda_cap: (n * n) as f64 * lambda_cap,
        sup_norm: sup_norm(seq, &ctx.domain, n),
        d: None,
        eps: None,
        zeros_interior: None,
        zeros_boundary: None,
        zeros_exterior: None,
        backward_error: None,
        residual: None,
    };
    let Some(curve) = curve else {
        return Ok(rec);
    };
    let zs = zeros_of(seq, &ctx.domain, n).map_err(stage("zeros"))?;
    rec.zeros_interior = Some(zs.count(Location::Interior));
    rec.zeros_boundary = Some(zs.count(Location::Boundary));
    rec.zeros_exterior = Some(zs.count(Location::Exterior));
    rec.backward_error = Some(zs.backward_error);
    rec.residual = Some(zs.residual);
    rec.eps = Some(potential_gap(seq, n, &ctx.emap, curve).map_err(stage("measures"))?.epsilon);
    if let Some(imap) = &ctx.imap {
        rec.d = Some(zero_discrepancy(ctx, imap, &zs)?);
    }
    Ok(rec)
}

fn zero_discrepancy(ctx: &DomainContext, imap: &InteriorMap, zs: &ZeroSet) -> Result<f64, ExperimentError> {
    let grid = ctx.grid.for_zeros(&ctx.emap, imap, zs).map_err(stage("measures"))?;
    let mu = equilibrium_boundary_measure(&grid);
    let tau = balayage_measure(imap, zs, &grid).map_err(stage("measures"))?;
    Ok(discrepancy(&mu, &tau).map_err(stage("measures"))?.d)
}

fn example1_record(delta: f64) -> Result<SharpnessRow, ExperimentError> {
    let inst = sharpness_instance(delta);
    let rec = sharpness_check(&inst).map_err(stage("example1"))?;
    Ok(SharpnessRow {
        delta,
        capacity: inst.capacity,
        capacity_closed_form: sharpness_capacity(delta),
        interval_mass: inst.interval_mass,
        mass_bound: delta / (3.0 * std::f64::consts::PI),
        d: rec.d,
        eps: rec.eps,
        d_bound: 2.0 / (3.0 * std::f64::consts::PI) * rec.eps.sqrt(),
    })
}

fn faber_records(ctx: &DomainContext, fs: &FaberSequence, n_lo: usize, n_hi: usize) -> Vec<FaberRecord> {
    (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| {
            let deriv = boundary_sup(&ctx.domain, |z| fs.eval_derivatives(n + 1, z)[n + 1].norm(), 4096);
            FaberRecord {
                domain: ctx.label.clone(),
                n,
                norm: fs.sup_norm(&ctx.domain, n),
                deriv_norm: deriv,
                deriv_ratio: deriv / ((n + 1) * (n + 1)) as f64,
            }
        })
        .collect()
}

fn chebyshev_record(ctx: &DomainContext, fs: &FaberSequence, n: usize) -> Result<ChebyshevRecord, ExperimentError> {
    let (r, converged) = match chebyshev(&ctx.domain, &ctx.emap, fs, n) {
        Ok(r) => (r, true),
        Err(ClassicalError::LawsonStall(r)) => (*r, false),
        Err(e) => return Err(stage("chebyshev")(e)),
    };
    let cap_n = fs.cap.powi(n as i32);
    Ok(ChebyshevRecord {
        domain: ctx.label.clone(),
        n,
        norm: r.norm,
        cap_n,
        ratio: r.norm / cap_n,
        lower_ratio: r.lower_bound / cap_n,
        spread: r.spread,
        iterations: r.iterations,
        converged,
    })
}

/// Capacity and boundary table of each configured domain.
pub struct MapSummary {
    pub label: String,
    pub capacity: f64,
    pub exterior_nodes: usize,
    pub interior_nodes: Option<usize>,
    pub table: Vec<(f64, f64)>,
}

pub fn run_maps(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<MapSummary>, ExperimentError> {
    cfg.validate()?;
    Ok(contexts(cfg, opts)?
        .into_iter()
        .map(|c| MapSummary {
            label: c.label.clone(),
            capacity: c.emap.capacity(),
            exterior_nodes: c.emap.table().s.len(),
            interior_nodes: c.imap.as_ref().map(|m| m.table().s.len()),
            table: c.emap.table().s.iter().copied().zip(c.emap.table().theta.iter().copied()).collect(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroRow {
    pub domain: String,
    pub n: usize,
    pub z: C64,
    pub location: Location,
}

/// All zeros of Q_n for n in the configured range.
pub fn run_zeros(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<ZeroRow>, ExperimentError> {
    cfg.validate()?;
    with_pool(opts.jobs, || -> Result<Vec<ZeroRow>, ExperimentError> {
        let cache = Cache {
            dir: opts.cache_dir.as_deref(),
        };
        let mut rows = Vec::new();
        for ctx in contexts(cfg, opts)? {
            let seq = build_sequence(&ctx, cfg, &cache)?;
            let sets: Vec<ZeroSet> = (cfg.n_min..=cfg.n_max)
                .into_par_iter()
                .map(|n| zeros_of(&seq, &ctx.domain, n).map_err(stage("zeros")))
                .collect::<Result<_, _>>()?;
            for zs in sets {
                for (z, loc) in zs.zeros.iter().zip(&zs.flags) {
                    rows.push(ZeroRow {
                        domain: ctx.label.clone(),
                        n: zs.degree,
                        z: *z,
                        location: *loc,
                    });
                }
            }
        }
        Ok(rows)
    })?
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl ExperimentReport {
    /// The plot-ready CSV for this experiment kind. Contains no timing data.
    pub fn csv(&self) -> String {
        let mut out = String::new();
        match self.experiment {
            ExperimentKind::Orthopoly | ExperimentKind::DiscrepancySweep | ExperimentKind::Theorem2Check => {
                out.push_str(
                    "domain,n,lambda,lambda_cap,n2_lambda_cap,sup_norm,d,eps,zeros_interior,zeros_boundary,zeros_exterior,backward_error,residual\n",
                );
                for r in &self.records {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.domain,
                        r.n,
                        num(r.lambda),
                        num(r.lambda_cap),
                        num(r.n2_lambda_cap),
                        num(r.sup_norm),
                        opt_num(r.d),
                        opt_num(r.eps),
                        opt(r.zeros_interior),
                        opt(r.zeros_boundary),
                        opt(r.zeros_exterior),
                        opt_num(r.backward_error),
                        opt_num(r.residual),
                    );
                }
            }
            ExperimentKind::Example1 => {
                out.push_str("delta,capacity,capacity_closed_form,interval_mass,mass_bound,d,eps,d_bound\n");
                for r in &self.example1 {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        num(r.delta),
                        num(r.capacity),
                        num(r.capacity_closed_form),
                        num(r.interval_mass),
                        num(r.mass_bound),
                        num(r.d),
                        num(r.eps),
                        num(r.d_bound)
                    );
                }
            }
            ExperimentKind::FaberSuite => {
                out.push_str("domain,n,norm,deriv_norm,deriv_ratio\n");
                for r in &self.faber {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.domain,
                        r.n,
                        num(r.norm),
                        num(r.deriv_norm),
                        num(r.deriv_ratio)
                    );
                }
            }
            ExperimentKind::ChebyshevSuite => {
                out.push_str("domain,n,norm,cap_n,ratio,lower_ratio,spread,iterations,converged\n");
                for r in &self.chebyshev {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        r.domain,
                        r.n,
                        num(r.norm),
                        num(r.cap_n),
                        num(r.ratio),
                        num(r.lower_ratio),
                        num(r.spread),
                        r.iterations,
                        r.converged
                    );
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Writes `<kind>.csv` and `<kind>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), ExperimentError> {
        let io = stage("output");
        fs::create_dir_all(dir).map_err(&io)?;
        let csv = dir.join(format!("{}.csv", self.experiment.name()));
        let json = dir.join(format!("{}.json", self.experiment.name()));
        fs::write(&csv, self.csv()).map_err(&io)?;
        fs::write(&json, self.to_json()).map_err(&io)?;
        Ok((csv, json))
    }
}

pub fn maps_csv(maps: &[MapSummary]) -> String {
    let mut out = String::from("domain,capacity,exterior_nodes,interior_nodes\n");
    for m in maps {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            m.label,
            num(m.capacity),
            m.exterior_nodes,
            opt(m.interior_nodes)
        );
    }
    out
}

pub fn map_table_csv(m: &MapSummary) -> String {
    let mut out = String::from("s,theta\n");
    for (s, t) in &m.table {
        let _ = writeln!(out, "{},{}", num(*s), num(*t));
    }
    out
}

pub fn zeros_csv(rows: &[ZeroRow]) -> String {
    let mut out = String::from("domain,n,re,im,location\n");
    for r in rows {
        let loc = match r.location {
            Location::Interior => "interior",
            Location::Boundary => "boundary",
            Location::Exterior => "exterior",
        };
        let _ = writeln!(out, "{},{},{},{},{}", r.domain, r.n, num(r.z.re), num(r.z.im), loc);
    }
    out
}
