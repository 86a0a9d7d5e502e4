//! End-to-end localization: cover, rigidity, patch localization,
//! registration and refinement.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{admm_solve, assemble_operator, global_stress_refine, round_and_recover, spectral_init, AdmmOptions};
use crate::cliques::{build_clique_cover, Clique, PgdParams};
use crate::error::Result;
use crate::eval::ane;
use crate::graph::{MeasurementGraph, Point};
use crate::mds::{localize_patch, Patch};
use crate::rigidity::{
    augment_configuration, build_correspondence_graph, is_quasi_k_connected, AugmentOptions, AugmentationRecord,
    Configuration, PairSchedule, RigidityReport, RigidityStatus,
};

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub pgd: PgdParams,
    /// Weight of the anchor terms in the registration objective.
    pub lambda: f64,
    pub admm: AdmmOptions,
    pub augment: bool,
    pub schedule: PairSchedule,
    pub max_augmentations: Option<usize>,
    pub refine: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            pgd: PgdParams::default(),
            lambda: 1.0,
            admm: AdmmOptions::default(),
            augment: true,
            schedule: PairSchedule::Anchored,
            max_augmentations: None,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationReport {
    /// Estimated sensor positions, indexed by sensor id.
    #[serde(skip)]
    pub positions: Vec<Point>,
    /// Cliques registered, augmentation cliques last.
    #[serde(skip)]
    pub cliques: Vec<Clique>,
    pub ane: Option<f64>,
    /// ANE of the registered positions before strain refinement.
    pub ane_unrefined: Option<f64>,
    pub t_partition_s: f64,
    pub t_localize_s: f64,
    pub t_register_s: f64,
    pub admm_iters: usize,
    pub admm_converged: bool,
    pub quasi_k: usize,
    pub pairs_checked: usize,
    pub augmentations: Vec<AugmentationRecord>,
    pub status: RigidityStatus,
    pub n_patches: usize,
    pub n_undersized: usize,
    pub strain_before_refine: f64,
    pub strain_after_refine: f64,
    pub warnings: Vec<String>,
}

impl LocalizationReport {
    pub fn rigidity(&self) -> RigidityReport {
        RigidityReport {
            quasi_k: self.quasi_k,
            pairs_checked: self.pairs_checked,
            augmentations: self.augmentations.clone(),
            status: self.status,
        }
    }
}

pub fn localize_network(g: &MeasurementGraph, opts: &PipelineOptions) -> Result<LocalizationReport> {
    let d = g.dim();
    let mut warnings = Vec::new();

    let start = Instant::now();
    let cover = build_clique_cover(g, &opts.pgd);
    let cfg = Configuration::from_cover(&cover, g);
    let (cfg, rigidity) = if opts.augment {
        let out = augment_configuration(
            &cfg,
            g,
            d,
            &AugmentOptions {
                schedule: opts.schedule,
                pgd: opts.pgd.clone(),
                max_rounds: opts.max_augmentations,
            },
        )?;
        let report = RigidityReport::from(&out);
        (out.cfg, report)
    } else {
        let q = is_quasi_k_connected(&build_correspondence_graph(&cfg), d + 1, opts.schedule);
        let status = if q.connected { RigidityStatus::Rigid } else { RigidityStatus::Flexible };
        let report = RigidityReport {
            quasi_k: q.min_flow,
            pairs_checked: q.pairs_checked,
            augmentations: Vec::new(),
            status,
        };
        (cfg, report)
    };
    match rigidity.status {
        RigidityStatus::Rigid => {}
        RigidityStatus::Stalled => warnings.push(format!(
            "rigidity augmentation stalled; configuration is only quasi {}-connected",
            rigidity.quasi_k
        )),
        RigidityStatus::Flexible => warnings.push(format!(
            "configuration is only quasi {}-connected and augmentation is off",
            rigidity.quasi_k
        )),
    }
    let n_undersized = cfg.patches.iter().filter(|c| c.len() < d + 1).count();
    if n_undersized > 0 {
        warnings.push(format!("{n_undersized} cliques have fewer than {} members", d + 1));
    }
    let t_partition_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let patches: Vec<Patch> = cfg
        .patches
        .par_iter()
        .map(|c| localize_patch(c, g, d))
        .collect::<Result<_>>()?;
    let t_localize_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let op = assemble_operator(&patches, g, opts.lambda)?;
    let h0 = spectral_init(&op.c, d)?;
    let sol = admm_solve(&op.c, h0, d, &opts.admm)?;
    if !sol.converged {
        warnings.push(format!("ADMM reached {} iterations without converging", sol.iters));
    }
    let rec = round_and_recover(&sol.g, &op, g)?;
    if rec.degenerate_gram {
        warnings.push("Gram matrix has rank below d".into());
    }
    let mut positions = rec.positions;
    let ane_unrefined = match g.true_sensor_positions() {
        Some(truth) => Some(ane(&positions[..g.n_sensors()], truth)?),
        None => None,
    };
    let (strain_before_refine, strain_after_refine) = if opts.refine {
        let tr = global_stress_refine(&mut positions, g);
        (tr.initial, tr.last)
    } else {
        let x = nalgebra::DMatrix::from_columns(&positions);
        let edges: Vec<_> = g.edges().collect();
        let s = crate::mds::strain(&x, &edges);
        (s, s)
    };
    positions.truncate(g.n_sensors());
    let t_register_s = start.elapsed().as_secs_f64();

    let ane = match g.true_sensor_positions() {
        Some(truth) => Some(ane(&positions, truth)?),
        None => None,
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(LocalizationReport {
        positions,
        cliques: cfg.patches,
        ane,
        ane_unrefined,
        t_partition_s,
        t_localize_s,
        t_register_s,
        admm_iters: sol.iters,
        admm_converged: sol.converged,
        quasi_k: rigidity.quasi_k,
        pairs_checked: rigidity.pairs_checked,
        augmentations: rigidity.augmentations,
        status: rigidity.status,
        n_patches: patches.len(),
        n_undersized,
        strain_before_refine,
        strain_after_refine,
        warnings,
    })
}
