//! Per-frame-pair optimization: recover the motion field that carries the
//! reference mesh and volume to a target frame by minimizing the combined
//! objective with Adam over the control-grid parameters.
//!
//! Parameters start at the zero field (identity motion). Runs are
//! deterministic for a given configuration: all accumulation happens in
//! fixed index order, and sequence-level parallelism only spans independent
//! frames.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImagePlane, ImageVolume, TriMesh};
use crate::losses::{mesh_predict, LossReport, LossWeights, Objective};
use crate::motion::{sample_at_vertices, ControlGrid, MotionField};
use crate::optim::Adam;
use crate::view::View;

/// Relative total-loss change over the trailing window below which a run is
/// flagged as converged.
pub const CONVERGENCE_RTOL: f64 = 1e-6;
const CONVERGENCE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub weights: LossWeights,
    /// Control-point spacing in voxels; 1 means a free voxel field.
    pub control_spacing: usize,
    pub iters: usize,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Views whose boundaries drive the shape term; must include `sa`.
    pub views: BTreeSet<View>,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            weights: LossWeights::default(),
            control_spacing: 4,
            iters: 500,
            lr: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            views: View::ALL.into_iter().collect(),
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.iters < 1 {
            return Err(Error::InvalidArgument(
                "iters must be at least 1".into(),
            ));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if self.control_spacing < 1 {
            return Err(Error::InvalidArgument(
                "control spacing must be at least 1".into(),
            ));
        }
        if self.views.is_empty() {
            return Err(Error::InvalidArgument("view set is empty".into()));
        }
        if !self.views.contains(&View::Sa) {
            return Err(Error::InvalidArgument(
                "view set must include sa (the similarity term needs the short-axis volume)"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Reference-frame inputs: the short-axis intensity volume of the frame the
/// mesh belongs to.
#[derive(Debug, Clone)]
pub struct EdInputs {
    pub sa: ImageVolume,
}

/// Target-frame inputs: intensity volume plus one binary boundary map per
/// available view.
#[derive(Debug, Clone)]
pub struct FrameInputs {
    pub sa: ImageVolume,
    pub boundaries: BTreeMap<View, ImagePlane>,
}

#[derive(Debug, Clone)]
pub struct TrackResult {
    pub field: MotionField,
    pub dv: Vec<Vector3<f64>>,
    pub mesh_t: TriMesh,
    /// One report per iteration plus a final evaluation.
    pub loss_history: Vec<LossReport>,
    pub converged: bool,
}

fn converged(history: &[LossReport]) -> bool {
    if history.len() < CONVERGENCE_WINDOW + 1 {
        return false;
    }
    let last = history[history.len() - 1].total;
    let past = history[history.len() - 1 - CONVERGENCE_WINDOW].total;
    (last - past).abs() <= CONVERGENCE_RTOL * past.abs().max(f64::MIN_POSITIVE)
}

fn run(
    mesh0: &TriMesh,
    ed: &EdInputs,
    target: &FrameInputs,
    cfg: &TrackConfig,
    init: Option<&ControlGrid>,
) -> Result<(TrackResult, ControlGrid)> {
    cfg.validate()?;
    let mut active = BTreeMap::new();
    for view in &cfg.views {
        let plane = target.boundaries.get(view).ok_or_else(|| {
            Error::InvalidArgument(format!("no boundary map for requested view {view}"))
        })?;
        active.insert(*view, plane.clone());
    }
    let objective = Objective::new(mesh0, &ed.sa, &target.sa, &active, cfg.weights)?;

    let mut ctrl = match init {
        Some(c) => c.clone(),
        None => ControlGrid::zeros(ed.sa.geom.clone(), cfg.control_spacing)?,
    };
    let mut adam = Adam::new(
        cfg.lr,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_eps,
        ctrl.n_params(),
    );
    let mut history = Vec::with_capacity(cfg.iters + 1);
    for iter in 0..cfg.iters {
        let (report, grad) = objective.evaluate(&ctrl)?;
        if !report.total.is_finite() {
            return Err(Error::Diverged {
                iter,
                last: history.last().cloned().map(Box::new),
            });
        }
        history.push(report);
        adam.step(ctrl.params_mut(), &grad);
    }
    let field = ctrl.upsample();
    let final_report = objective.loss_at_field(&field)?;
    if !final_report.total.is_finite() {
        return Err(Error::Diverged {
            iter: cfg.iters,
            last: history.last().cloned().map(Box::new),
        });
    }
    history.push(final_report);
    let flag = converged(&history);
    let dv = sample_at_vertices(&field, mesh0);
    let mesh_t = mesh_predict(mesh0, &dv)?;
    Ok((
        TrackResult {
            field,
            dv,
            mesh_t,
            loss_history: history,
            converged: flag,
        },
        ctrl,
    ))
}

/// Track one frame pair: optimize the motion field from zero initialization.
pub fn track_pair(
    mesh0: &TriMesh,
    ed: &EdInputs,
    target: &FrameInputs,
    cfg: &TrackConfig,
) -> Result<TrackResult> {
    run(mesh0, ed, target, cfg, None).map(|(res, _)| res)
}

#[derive(Debug, Clone, Default)]
pub struct SequenceOptions {
    /// Initialize each frame from the previous frame's parameters instead of
    /// zero. Forces sequential execution.
    pub warm_start: bool,
    /// Frame-level parallelism; values above 1 track independent frames
    /// concurrently (results keep frame order).
    pub jobs: usize,
}

/// Track a sequence of frames against the same reference. Frames are
/// independent unless warm-started; per-frame failures are reported in place
/// and do not stop the remaining frames.
pub fn track_sequence(
    mesh0: &TriMesh,
    ed: &EdInputs,
    frames: &[FrameInputs],
    cfg: &TrackConfig,
    opts: &SequenceOptions,
) -> Vec<Result<TrackResult>> {
    if opts.warm_start {
        let mut results = Vec::with_capacity(frames.len());
        let mut prev: Option<ControlGrid> = None;
        for target in frames {
            match run(mesh0, ed, target, cfg, prev.as_ref()) {
                Ok((res, ctrl)) => {
                    prev = Some(ctrl);
                    results.push(Ok(res));
                }
                Err(e) => {
                    // Next frame falls back to zero initialization.
                    prev = None;
                    results.push(Err(e));
                }
            }
        }
        return results;
    }
    if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build();
        match pool {
            Ok(pool) => pool.install(|| {
                frames
                    .par_iter()
                    .map(|target| run(mesh0, ed, target, cfg, None).map(|(res, _)| res))
                    .collect()
            }),
            Err(_) => frames
                .iter()
                .map(|target| run(mesh0, ed, target, cfg, None).map(|(res, _)| res))
                .collect(),
        }
    } else {
        frames
            .iter()
            .map(|target| run(mesh0, ed, target, cfg, None).map(|(res, _)| res))
            .collect()
    }
}
