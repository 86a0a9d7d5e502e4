//! Error metric and experiment harness.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::graph::{apply_noise, generate_rgg, Point};
use crate::mds::procrustes_align;
use crate::registration::pipeline::{localize_network, PipelineOptions};
use crate::registration::{AdmmOptions, HUpdateSign};
use crate::rigidity::{build_correspondence_graph, is_quasi_k_connected, Configuration, PairSchedule};

/// Average normalized error after optimal rigid alignment of `est` onto
/// `truth`, normalized by the spread of `truth` about its centroid.
pub fn ane(est: &[Point], truth: &[Point]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(SnlError::InvalidInput(format!(
            "{} estimates for {} true positions",
            est.len(),
            truth.len()
        )));
    }
    if truth.len() < 2 {
        return Err(SnlError::InvalidInput("ANE needs at least two sensors".into()));
    }
    let x = DMatrix::from_columns(est);
    let t = DMatrix::from_columns(truth);
    if x.nrows() != t.nrows() {
        return Err(SnlError::DimensionMismatch("estimate and truth dimensions differ".into()));
    }
    let aligned = procrustes_align(&x, &t)?.apply_columns(&x);
    let centroid = t.column_mean();
    let num = (aligned - &t).norm_squared();
    let den: f64 = t.column_iter().map(|c| (c - &centroid).norm_squared()).sum();
    if den == 0.0 {
        return Err(SnlError::InvalidInput("true sensor positions coincide".into()));
    }
    Ok((num / den).sqrt())
}

/// Pipeline settings as read from a grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub rho: f64,
    pub lambda: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub augment: bool,
    pub exhaustive_rigidity: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        let a = AdmmOptions::default();
        Self {
            rho: a.rho,
            lambda: 1.0,
            eps_abs: a.eps_abs,
            eps_rel: a.eps_rel,
            max_iter: a.max_iter,
            augment: true,
            exhaustive_rigidity: false,
        }
    }
}

impl PipelineSettings {
    pub fn to_options(&self) -> PipelineOptions {
        PipelineOptions {
            lambda: self.lambda,
            admm: AdmmOptions {
                rho: self.rho,
                eps_abs: self.eps_abs,
                eps_rel: self.eps_rel,
                max_iter: self.max_iter,
                sign: HUpdateSign::Minus,
                ..AdmmOptions::default()
            },
            augment: self.augment,
            schedule: if self.exhaustive_rigidity {
                PairSchedule::Exhaustive
            } else {
                PairSchedule::Anchored
            },
            ..PipelineOptions::default()
        }
    }
}

/// A grid of random-graph experiments; every combination of `n`, `k`, `r`
/// and `eta` is one cell, run once per seed.
///
/// ```json
/// { "n": [500], "k": [50], "r": [0.15, 0.18],
///   "eta": [0.02, 0.04], "seeds": [0, 1, 2],
///   "corner_anchors": false, "timings": true,
///   "pipeline": { "rho": 0.01, "lambda": 1.0 } }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    /// Anchor counts, corner anchors included.
    pub k: Vec<usize>,
    pub r: Vec<f64>,
    pub eta: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub corner_anchors: bool,
    /// Record wall times. Off makes the CSV byte-reproducible.
    #[serde(default = "default_true")]
    pub timings: bool,
    #[serde(default)]
    pub pipeline: PipelineSettings,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(SnlError::InvalidInput(format!("grid: {what}")));
        if self.seeds.is_empty() || self.n.is_empty() || self.k.is_empty() || self.r.is_empty() || self.eta.is_empty() {
            return bad("every parameter list must be nonempty");
        }
        if self.n.contains(&0) || self.k.contains(&0) {
            return bad("sensor and anchor counts must be positive");
        }
        if self.r.iter().any(|&r| !(r > 0.0)) || self.eta.iter().any(|&e| !(e >= 0.0)) {
            return bad("radio ranges must be positive and noise levels nonnegative");
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &k in &self.k {
                for &r in &self.r {
                    for &eta in &self.eta {
                        out.push(Cell { n, k, r, eta });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub k: usize,
    pub r: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub cell: Cell,
    pub seed: u64,
    /// `ok`, or the error that ended the run.
    pub status: String,
    pub ane: Option<f64>,
    /// Partition, localization and registration seconds.
    pub times: Option<[f64; 3]>,
    pub iters: Option<usize>,
}

/// Runs one seeded instance: random graph, noise, pipeline.
pub fn run_instance(cell: Cell, seed: u64, corner_anchors: bool, opts: &PipelineOptions) -> Result<crate::LocalizationReport> {
    let g = generate_rgg(cell.n, cell.k, cell.r, seed, corner_anchors)?;
    let g = apply_noise(&g, cell.eta, seed)?;
    localize_network(&g, opts)
}

pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<GridRow>> {
    cfg.validate()?;
    let opts = cfg.pipeline.to_options();
    let jobs: Vec<(Cell, u64)> = cfg
        .cells()
        .into_iter()
        .flat_map(|c| cfg.seeds.iter().map(move |&s| (c, s)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(cell, seed)| match run_instance(cell, seed, cfg.corner_anchors, &opts) {
            Ok(rep) => GridRow {
                cell,
                seed,
                status: "ok".into(),
                ane: rep.ane,
                times: cfg.timings.then_some([rep.t_partition_s, rep.t_localize_s, rep.t_register_s]),
                iters: Some(rep.admm_iters),
            },
            Err(e) => GridRow {
                cell,
                seed,
                status: e.to_string().replace([',', '\n'], ";"),
                ane: None,
                times: None,
                iters: None,
            },
        })
        .collect())
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub runs: usize,
    pub ok: usize,
    pub ane_mean: Option<f64>,
    pub ane_std: Option<f64>,
    pub times_mean: Option<[f64; 3]>,
    pub iters_mean: Option<f64>,
}

/// Arithmetic means over the successful seeds of each cell, in first-seen
/// cell order.
pub fn summarize(rows: &[GridRow]) -> Vec<CellSummary> {
    let mut cells: Vec<Cell> = Vec::new();
    for r in rows {
        if !cells.contains(&r.cell) {
            cells.push(r.cell);
        }
    }
    cells
        .into_iter()
        .map(|cell| {
            let mine: Vec<&GridRow> = rows.iter().filter(|r| r.cell == cell).collect();
            let anes: Vec<f64> = mine.iter().filter_map(|r| r.ane).collect();
            let times: Vec<[f64; 3]> = mine.iter().filter_map(|r| r.times).collect();
            let iters: Vec<f64> = mine.iter().filter_map(|r| r.iters.map(|i| i as f64)).collect();
            let (ane_mean, ane_std) = if anes.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&anes);
                (Some(m), Some(s))
            };
            CellSummary {
                cell,
                runs: mine.len(),
                ok: mine.iter().filter(|r| r.status == "ok").count(),
                ane_mean,
                ane_std,
                times_mean: (!times.is_empty()).then(|| {
                    let mut t = [0.0; 3];
                    for k in 0..3 {
                        t[k] = times.iter().map(|x| x[k]).sum::<f64>() / times.len() as f64;
                    }
                    t
                }),
                iters_mean: (!iters.is_empty()).then(|| mean_std(&iters).0),
            }
        })
        .collect()
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const CSV_HEADER: &str = "n,k,r,eta,seed,status,ane,ane_std,t1,t2,t3,iters";

/// Data rows followed by one `mean` row per cell.
pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    for row in rows {
        let c = row.cell;
        let t = row.times.map(|t| t.map(|x| format!("{x:.6}")));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},,{},{},{},{}",
            c.n,
            c.k,
            c.r,
            c.eta,
            row.seed,
            row.status,
            opt(row.ane.map(|a| format!("{a:e}"))),
            opt(t.as_ref().map(|t| t[0].clone())),
            opt(t.as_ref().map(|t| t[1].clone())),
            opt(t.as_ref().map(|t| t[2].clone())),
            opt(row.iters),
        );
    }
    for s in summarize(rows) {
        let c = s.cell;
        let t = s.times_mean.map(|t| t.map(|x| format!("{x:.6}")));
        let _ = writeln!(
            out,
            "{},{},{},{},mean,{}/{} ok,{},{},{},{},{},{}",
            c.n,
            c.k,
            c.r,
            c.eta,
            s.ok,
            s.runs,
            opt(s.ane_mean.map(|a| format!("{a:e}"))),
            opt(s.ane_std.map(|a| format!("{a:e}"))),
            opt(t.as_ref().map(|t| t[0].clone())),
            opt(t.as_ref().map(|t| t[1].clone())),
            opt(t.as_ref().map(|t| t[2].clone())),
            opt(s.iters_mean.map(|i| format!("{i:.1}"))),
        );
    }
    out
}

/// Writes gnuplot-readable `.dat` files: one ANE-versus-η series per
/// `(n, k, r)` and one table of mean phase times per `(n, k, eta)`.
/// Returns the paths written.
pub fn emit_plots(rows: &[GridRow], dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let summary = summarize(rows);
    let mut written = Vec::new();

    let mut series: Vec<(usize, usize, f64)> = Vec::new();
    for s in &summary {
        let key = (s.cell.n, s.cell.k, s.cell.r);
        if !series.contains(&key) {
            series.push(key);
        }
    }
    for (n, k, r) in series {
        let mut pts: Vec<&CellSummary> = summary
            .iter()
            .filter(|s| (s.cell.n, s.cell.k, s.cell.r) == (n, k, r))
            .collect();
        pts.sort_by(|a, b| a.cell.eta.total_cmp(&b.cell.eta));
        let mut text = format!("# N={n} K={k} r={r}\n# eta ane_mean ane_std\n");
        for s in pts {
            if let (Some(m), Some(sd)) = (s.ane_mean, s.ane_std) {
                let _ = writeln!(text, "{} {m:e} {sd:e}", s.cell.eta);
            }
        }
        let path = dir.join(format!("ane_vs_eta_N{n}_K{k}_r{r}.dat"));
        std::fs::write(&path, text)?;
        written.push(path);
    }

    if summary.iter().any(|s| s.times_mean.is_some()) {
        let mut text = String::from("# N K r eta t_partition t_localize t_register\n");
        for s in &summary {
            if let Some(t) = s.times_mean {
                let c = s.cell;
                let _ = writeln!(text, "{} {} {} {} {:.6} {:.6} {:.6}", c.n, c.k, c.r, c.eta, t[0], t[1], t[2]);
            }
        }
        let path = dir.join("timings.dat");
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationArm {
    pub eta: f64,
    pub ane_unaugmented: Option<f64>,
    pub ane_augmented: Option<f64>,
    pub augmentations: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "result")]
pub enum AblationReport {
    Found { seed: u64, arms: Vec<AblationArm> },
    NotFound { seeds_tried: u64 },
}

/// Searches seeds `0..seed_hunt_limit` for a random graph whose clique
/// configuration is not quasi `(d+1)`-connected, then runs the pipeline on
/// it with and without augmentation at each noise level.
pub fn rigidity_ablation(
    n: usize,
    k: usize,
    r: f64,
    eta_list: &[f64],
    seed_hunt_limit: u64,
    opts: &PipelineOptions,
) -> Result<AblationReport> {
    let Some(seed) = find_flexible_seed(n, k, r, seed_hunt_limit, opts)? else {
        return Ok(AblationReport::NotFound {
            seeds_tried: seed_hunt_limit,
        });
    };
    let mut arms = Vec::new();
    for &eta in eta_list {
        let cell = Cell { n, k, r, eta };
        let plain = run_instance(cell, seed, false, &PipelineOptions { augment: false, ..opts.clone() });
        let aug = run_instance(cell, seed, false, &PipelineOptions { augment: true, ..opts.clone() });
        arms.push(AblationArm {
            eta,
            ane_unaugmented: plain.ok().and_then(|r| r.ane),
            augmentations: aug.as_ref().map(|r| r.augmentations.len()).unwrap_or(0),
            ane_augmented: aug.ok().and_then(|r| r.ane),
        });
    }
    Ok(AblationReport::Found { seed, arms })
}

/// First seed below `limit` whose clique cover fails the rigidity test.
pub fn find_flexible_seed(n: usize, k: usize, r: f64, limit: u64, opts: &PipelineOptions) -> Result<Option<u64>> {
    for seed in 0..limit {
        let g = generate_rgg(n, k, r, seed, false)?;
        let cover = crate::cliques::build_clique_cover(&g, &opts.pgd);
        let cfg = Configuration::from_cover(&cover, &g);
        let q = is_quasi_k_connected(&build_correspondence_graph(&cfg), g.dim() + 1, opts.schedule);
        if !q.connected {
            return Ok(Some(seed));
        }
    }
    Ok(None)
}
