//! Differentiable mesh-to-image rasterization.
//!
//! A mesh is sliced against a plane vertex by vertex: each vertex inside the
//! selection band (|z − slice_coord| < 1 pixel equivalent) receives the
//! probability `exp(-tau * (z - slice_coord)^2)` of lying on the plane, and
//! the selected vertices are splatted bilinearly into a 2D probability map.
//! Both steps have analytic gradients with respect to vertex positions, so
//! image-space losses can drive 3D motion.
//!
//! Faces are not used: slicing is vertex-only, which requires mesh density
//! high enough that vertex splats trace out the intersection contour.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{ImagePlane, PlaneFrame, TriMesh};

/// Vertices closer to the plane than this (in pixel equivalents) count as
/// lying exactly on it for hard slicing.
pub const HARD_SLICE_TOL: f64 = 1e-6;

/// Half-width of the selection band in pixel equivalents; strict inequality,
/// so a vertex at exactly distance 1 is excluded.
pub const SELECTION_BAND: f64 = 1.0;

/// One selected vertex: its index, in-plane position in pixels and the
/// probability of lying on the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexProb {
    pub vertex: usize,
    pub x: f64,
    pub y: f64,
    pub p: f64,
}

/// Output of slicing one mesh against one plane. Entries are ordered by
/// vertex index and reference distinct vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexProbSet {
    pub entries: Vec<VertexProb>,
    pub tau: f64,
}

/// A 2D probability map produced by splatting; pixel values are in [0, 1]
/// and zero outside the splat footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    pub plane: ImagePlane,
}

/// Soft slice: select vertices within the band and assign
/// `p = exp(-tau * d^2)` with `d = z - slice_coord`.
pub fn soft_slice(mesh: &TriMesh, frame: &PlaneFrame, tau: f64) -> Result<VertexProbSet> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let mut entries = Vec::new();
    for (i, v) in mesh.vertices().iter().enumerate() {
        let c = frame.world_to_plane(*v);
        let d = c.z - frame.slice_coord;
        if d.abs() < SELECTION_BAND {
            entries.push(VertexProb {
                vertex: i,
                x: c.x,
                y: c.y,
                p: (-tau * d * d).exp(),
            });
        }
    }
    Ok(VertexProbSet { entries, tau })
}

/// Hard slice: vertices within `HARD_SLICE_TOL` of the plane, probability 1.
/// This is the sharpness limit of `soft_slice` as tau grows.
pub fn hard_slice(mesh: &TriMesh, frame: &PlaneFrame) -> VertexProbSet {
    let mut entries = Vec::new();
    for (i, v) in mesh.vertices().iter().enumerate() {
        let c = frame.world_to_plane(*v);
        if (c.z - frame.slice_coord).abs() < HARD_SLICE_TOL {
            entries.push(VertexProb {
                vertex: i,
                x: c.x,
                y: c.y,
                p: 1.0,
            });
        }
    }
    VertexProbSet {
        entries,
        tau: f64::INFINITY,
    }
}

/// Splat result kept for the backward pass: clamped pixel values, raw
/// (pre-clamp) sums, and which pixels received any deposit.
pub(crate) struct SplatData {
    pub data: Vec<f64>,
    pub raw: Vec<f64>,
    pub deposited: Vec<bool>,
}

impl SplatData {
    /// Pixels that received at least one deposit (even at zero weight);
    /// gradients flow only through these.
    pub fn footprint(&self) -> Vec<usize> {
        self.deposited
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.then_some(i))
            .collect()
    }
}

const CORNERS: [(i64, i64); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

pub(crate) fn splat_data(probs: &VertexProbSet, dims: [usize; 2]) -> SplatData {
    let npix = dims[0] * dims[1];
    let mut raw = vec![0.0; npix];
    let mut deposited = vec![false; npix];
    for entry in &probs.entries {
        let x0 = entry.x.floor();
        let y0 = entry.y.floor();
        let fx = entry.x - x0;
        let fy = entry.y - y0;
        for (dx, dy) in CORNERS {
            let px = x0 as i64 + dx;
            let py = y0 as i64 + dy;
            if px < 0 || py < 0 || px >= dims[0] as i64 || py >= dims[1] as i64 {
                continue;
            }
            let wx = if dx == 0 { 1.0 - fx } else { fx };
            let wy = if dy == 0 { 1.0 - fy } else { fy };
            let idx = px as usize + dims[0] * py as usize;
            raw[idx] += entry.p * wx * wy;
            deposited[idx] = true;
        }
    }
    let data = raw.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
    SplatData {
        data,
        raw,
        deposited,
    }
}

/// Splat selected vertices into a probability map: each entry deposits
/// `p * w` onto the four pixels around its position with bilinear weights;
/// overlapping deposits accumulate and the result is clamped to [0, 1], so
/// pixels covered by a dense contour saturate at probability one. Entries
/// whose whole footprint falls outside the grid are dropped.
pub fn splat(probs: &VertexProbSet, frame: &PlaneFrame, dims: [usize; 2]) -> Result<ProbMap> {
    let sd = splat_data(probs, dims);
    Ok(ProbMap {
        plane: ImagePlane::new(frame.clone(), dims, sd.data)?,
    })
}

/// Backward pass of `splat`: distribute per-pixel upstream gradients to all
/// contributing entries. Pixels sitting above the clamp pass no gradient.
/// Returns per-entry (dL/dp, dL/dx, dL/dy).
pub fn splat_grad(
    probs: &VertexProbSet,
    dims: [usize; 2],
    upstream: &[f64],
) -> Result<Vec<[f64; 3]>> {
    if upstream.len() != dims[0] * dims[1] {
        return Err(Error::ShapeMismatch(format!(
            "upstream has {} pixels, expected {}",
            upstream.len(),
            dims[0] * dims[1]
        )));
    }
    let sd = splat_data(probs, dims);
    let mut grads = vec![[0.0f64; 3]; probs.entries.len()];
    for (e, entry) in probs.entries.iter().enumerate() {
        let x0 = entry.x.floor();
        let y0 = entry.y.floor();
        let fx = entry.x - x0;
        let fy = entry.y - y0;
        for (dx, dy) in CORNERS {
            let px = x0 as i64 + dx;
            let py = y0 as i64 + dy;
            if px < 0 || py < 0 || px >= dims[0] as i64 || py >= dims[1] as i64 {
                continue;
            }
            let idx = px as usize + dims[0] * py as usize;
            if sd.raw[idx] > 1.0 {
                continue; // saturated
            }
            let g = upstream[idx];
            if g == 0.0 {
                continue;
            }
            let (wx, dwx) = if dx == 0 { (1.0 - fx, -1.0) } else { (fx, 1.0) };
            let (wy, dwy) = if dy == 0 { (1.0 - fy, -1.0) } else { (fy, 1.0) };
            let ge = &mut grads[e];
            ge[0] += g * wx * wy;
            ge[1] += g * entry.p * dwx * wy;
            ge[2] += g * entry.p * wx * dwy;
        }
    }
    Ok(grads)
}

/// Backward pass of `soft_slice`: combine upstream probability and in-plane
/// position gradients into world-space per-vertex gradients. Vertices outside
/// the selection band receive zero; the band indicator itself is treated as
/// constant.
pub fn soft_slice_grad(
    mesh: &TriMesh,
    frame: &PlaneFrame,
    tau: f64,
    upstream: &[[f64; 3]],
) -> Result<Vec<Vector3<f64>>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let mut grads = vec![Vector3::zeros(); mesh.n_vertices()];
    let zu = frame.z_unit();
    let mut k = 0usize;
    for (i, v) in mesh.vertices().iter().enumerate() {
        let c = frame.world_to_plane(*v);
        let d = c.z - frame.slice_coord;
        if d.abs() >= SELECTION_BAND {
            continue;
        }
        if k >= upstream.len() {
            return Err(Error::ShapeMismatch(format!(
                "upstream has {} entries but the slice selects more vertices",
                upstream.len()
            )));
        }
        let [dp, dx, dy] = upstream[k];
        k += 1;
        let p = (-tau * d * d).exp();
        let dp_dz = -2.0 * tau * d * p;
        let dz = dp * dp_dz;
        grads[i] = frame.row_dir * (dx / frame.spacing[0])
            + frame.col_dir * (dy / frame.spacing[1])
            + frame.normal * (dz / zu);
    }
    if k != upstream.len() {
        return Err(Error::ShapeMismatch(format!(
            "upstream has {} entries, slice selected {k}",
            upstream.len()
        )));
    }
    Ok(grads)
}
