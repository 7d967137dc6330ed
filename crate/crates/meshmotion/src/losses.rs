//! The three loss terms and their combination.
//!
//! * image similarity: mean squared difference between the reference volume
//!   and the warped moving volume;
//! * mesh smoothness: mean L2 norm of the per-vertex uniform Laplacian;
//! * shape: weighted Hausdorff distance between each splatted probability
//!   map and its binary boundary map.
//!
//! Every term comes with an analytic gradient so the total objective can be
//! differentiated all the way to the control-grid parameters.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImagePlane, ImageVolume, TriMesh};
use crate::motion::{
    sample_at_vertices, sample_grad, warp_grad, warp_volume, ControlGrid, MotionField,
};
use crate::rasterizer::{soft_slice, soft_slice_grad, splat_data, splat_grad, ProbMap};
use crate::view::View;

/// Generalized-mean exponent of the weighted Hausdorff distance. Negative
/// values approximate a minimum while keeping gradients usable.
pub const WHD_ALPHA: f64 = -3.0;

/// Stabilizer added to the probability mass in the first WHD term.
pub const WHD_EPS: f64 = 1e-6;

/// Floor applied to the per-pair WHD integrand so a perfect hit (p = 1 on a
/// boundary pixel) cannot produce infinities in the negative powers.
const WHD_F_FLOOR: f64 = 1e-12;

/// Weights of the combined objective plus the rasterizer sharpness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda: f64,
    pub beta: f64,
    pub tau: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda: 300.0,
            beta: 200.0,
            tau: 3.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.beta >= 0.0) {
            return Err(Error::InvalidArgument(
                "loss weights must be non-negative".into(),
            ));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidArgument("tau must be positive".into()));
        }
        Ok(())
    }
}

/// One evaluation of the combined objective:
/// `total = shape + lambda * sim + beta * smooth`, with the unweighted terms
/// and the per-view shape breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    pub shape: f64,
    pub sim: f64,
    pub smooth: f64,
    pub shape_per_view: BTreeMap<View, f64>,
}

/// Mean squared difference between `fixed` and the warped `moving` volume.
pub fn loss_sim_value(
    fixed: &ImageVolume,
    moving: &ImageVolume,
    field: &MotionField,
) -> Result<f64> {
    check_sim_inputs(fixed, moving)?;
    let warped = warp_volume(moving, field)?;
    let n = fixed.geom.n_voxels() as f64;
    let mut acc = 0.0;
    for (w, f) in warped.data().iter().zip(fixed.data()) {
        let r = w - f;
        acc += r * r;
    }
    Ok(acc / n)
}

/// Similarity loss with its gradient with respect to the displacement field.
pub fn loss_sim(
    fixed: &ImageVolume,
    moving: &ImageVolume,
    field: &MotionField,
) -> Result<(f64, Vec<f64>)> {
    check_sim_inputs(fixed, moving)?;
    let warped = warp_volume(moving, field)?;
    let n = fixed.geom.n_voxels() as f64;
    let mut acc = 0.0;
    let mut upstream = vec![0.0f64; fixed.geom.n_voxels()];
    for (i, (w, f)) in warped.data().iter().zip(fixed.data()).enumerate() {
        let r = w - f;
        acc += r * r;
        upstream[i] = 2.0 * r / n;
    }
    let ddisp = warp_grad(moving, field, &upstream)?;
    Ok((acc / n, ddisp))
}

fn check_sim_inputs(fixed: &ImageVolume, moving: &ImageVolume) -> Result<()> {
    if fixed.geom != moving.geom {
        return Err(Error::ShapeMismatch(
            "fixed and moving volumes have different geometries".into(),
        ));
    }
    if fixed.channels != 1 || moving.channels != 1 {
        return Err(Error::ShapeMismatch(
            "similarity loss expects single-channel volumes".into(),
        ));
    }
    Ok(())
}

/// Apply per-vertex displacements: same faces, vertices moved by `dv`.
pub fn mesh_predict(mesh: &TriMesh, dv: &[Vector3<f64>]) -> Result<TriMesh> {
    if dv.len() != mesh.n_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "displacement has {} rows, mesh has {} vertices",
            dv.len(),
            mesh.n_vertices()
        )));
    }
    let verts = mesh
        .vertices()
        .iter()
        .zip(dv)
        .map(|(v, d)| v + d)
        .collect();
    mesh.with_vertices(verts)
}

/// Uniform Laplacian of every vertex: the offset from the mean of its edge
/// neighbors. Errors on isolated vertices.
pub fn vertex_laplacians(mesh: &TriMesh) -> Result<Vec<Vector3<f64>>> {
    let verts = mesh.vertices();
    let mut out = Vec::with_capacity(verts.len());
    for (i, v) in verts.iter().enumerate() {
        let nbrs = mesh.neighbors(i);
        if nbrs.is_empty() {
            return Err(Error::InvalidMesh(format!(
                "vertex {i} has no neighbors; smoothness is undefined"
            )));
        }
        let mut acc = Vector3::zeros();
        for &j in nbrs {
            acc += v - verts[j];
        }
        out.push(acc / nbrs.len() as f64);
    }
    Ok(out)
}

/// Smoothness loss: mean over vertices of the Laplacian's L2 norm, with its
/// analytic gradient. The norm's subgradient at zero is taken as zero.
pub fn loss_smooth(mesh: &TriMesh) -> Result<(f64, Vec<Vector3<f64>>)> {
    let lap = vertex_laplacians(mesh)?;
    let n = lap.len() as f64;
    let mut value = 0.0;
    let units: Vec<Vector3<f64>> = lap
        .iter()
        .map(|l| {
            let norm = l.norm();
            value += norm;
            if norm > 0.0 {
                l / norm
            } else {
                Vector3::zeros()
            }
        })
        .collect();
    value /= n;
    let mut grad = Vec::with_capacity(lap.len());
    for k in 0..lap.len() {
        let mut g = units[k];
        for &j in mesh.neighbors(k) {
            g -= units[j] / mesh.neighbors(j).len() as f64;
        }
        grad.push(g / n);
    }
    Ok((value, grad))
}

/// Foreground pixel coordinates (value >= 0.5) of a boundary map.
pub(crate) fn boundary_pixels(plane: &ImagePlane) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for v in 0..plane.dims[1] {
        for u in 0..plane.dims[0] {
            if plane.at(u, v) >= 0.5 {
                pts.push((u as f64, v as f64));
            }
        }
    }
    pts
}

/// Weighted Hausdorff distance between a probability map and a boundary
/// point set, evaluated in pixel units.
///
/// With `S` the probability mass, `Y` the boundary pixels, `d_max` the grid
/// diagonal and `M_a` the generalized mean with exponent `WHD_ALPHA`:
///
/// ```text
/// WHD = 1/(S+eps) * sum_x p_x * min_y |x-y|
///     + 1/|Y| * sum_y M_a over x of [ p_x |x-y| + (1-p_x) d_max ]
/// ```
pub(crate) fn whd_core(
    prob: &[f64],
    dims: [usize; 2],
    ypts: &[(f64, f64)],
    grad_at: Option<&[usize]>,
) -> (f64, Vec<f64>) {
    let npix = dims[0] * dims[1];
    debug_assert_eq!(prob.len(), npix);
    let d_max = (((dims[0] - 1) * (dims[0] - 1) + (dims[1] - 1) * (dims[1] - 1)) as f64).sqrt();
    let ny = ypts.len() as f64;
    let alpha = WHD_ALPHA;

    let coords = |idx: usize| ((idx % dims[0]) as f64, (idx / dims[0]) as f64);
    let dist = |x: (f64, f64), y: &(f64, f64)| ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt();
    let min_dist = |x: (f64, f64)| {
        ypts.iter()
            .map(|y| dist(x, y))
            .fold(f64::INFINITY, f64::min)
    };

    // Pixels with zero probability all contribute d_max^alpha to every
    // generalized mean; only positive pixels need per-pair work.
    let positive: Vec<(usize, f64)> = prob
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != 0.0)
        .map(|(i, &p)| (i, p))
        .collect();
    let n_zero = (npix - positive.len()) as f64;

    // First term: probability-weighted distance to the nearest boundary pixel.
    let mut mass = 0.0;
    let mut weighted = 0.0;
    for &(idx, p) in &positive {
        mass += p;
        weighted += p * min_dist(coords(idx));
    }
    let term1 = weighted / (mass + WHD_EPS);

    // Second term: generalized mean per boundary pixel.
    let zero_contrib = n_zero * d_max.powf(alpha);
    let mut means = Vec::with_capacity(ypts.len());
    let mut term2 = 0.0;
    for y in ypts {
        let mut acc = zero_contrib;
        for &(idx, p) in &positive {
            let d = dist(coords(idx), y);
            let f = (p * d + (1.0 - p) * d_max).max(WHD_F_FLOOR);
            acc += f.powf(alpha);
        }
        let a = acc / npix as f64;
        means.push(a);
        term2 += a.powf(1.0 / alpha);
    }
    term2 /= ny;
    let value = term1 + term2;

    let Some(req) = grad_at else {
        return (value, Vec::new());
    };

    // coeff_y = A_y^{1/alpha - 1} / (|Y| * npix)
    let coeff: Vec<f64> = means
        .iter()
        .map(|a| a.powf(1.0 / alpha - 1.0) / (ny * npix as f64))
        .collect();
    let mut grads = Vec::with_capacity(req.len());
    for &idx in req {
        let x = coords(idx);
        let p = prob[idx];
        let mut g = (min_dist(x) - term1) / (mass + WHD_EPS);
        for (y, cy) in ypts.iter().zip(&coeff) {
            let d = dist(x, y);
            let f_raw = p * d + (1.0 - p) * d_max;
            if f_raw < WHD_F_FLOOR {
                continue; // clamped flat region
            }
            g += cy * f_raw.powf(alpha - 1.0) * (d - d_max);
        }
        grads.push(g);
    }
    (value, grads)
}

fn whd_inputs(prob: &ProbMap, boundary: &ImagePlane) -> Result<Vec<(f64, f64)>> {
    if prob.plane.dims != boundary.dims {
        return Err(Error::ShapeMismatch(format!(
            "probability map dims {:?} differ from boundary dims {:?}",
            prob.plane.dims, boundary.dims
        )));
    }
    let ypts = boundary_pixels(boundary);
    if ypts.is_empty() {
        return Err(Error::EmptyBoundary(
            "boundary map has no foreground pixels".into(),
        ));
    }
    Ok(ypts)
}

/// Weighted Hausdorff distance between a probability map and a binary
/// boundary map.
pub fn whd(prob: &ProbMap, boundary: &ImagePlane) -> Result<f64> {
    let ypts = whd_inputs(prob, boundary)?;
    Ok(whd_core(prob.plane.data(), prob.plane.dims, &ypts, None).0)
}

/// WHD value plus its dense gradient with respect to every map pixel.
pub fn whd_with_grad(prob: &ProbMap, boundary: &ImagePlane) -> Result<(f64, Vec<f64>)> {
    let ypts = whd_inputs(prob, boundary)?;
    let all: Vec<usize> = (0..prob.plane.n_pixels()).collect();
    let (v, g) = whd_core(prob.plane.data(), prob.plane.dims, &ypts, Some(&all));
    Ok((v, g))
}

/// Shape loss over several views: sum of per-view WHD terms in fixed view
/// order. Returns the total, the per-view values and per-view dense pixel
/// gradients.
pub fn loss_shape(
    prob_maps: &BTreeMap<View, ProbMap>,
    boundaries: &BTreeMap<View, ImagePlane>,
) -> Result<(f64, BTreeMap<View, f64>, BTreeMap<View, Vec<f64>>)> {
    let mut total = 0.0;
    let mut per_view = BTreeMap::new();
    let mut grads = BTreeMap::new();
    for (view, prob) in prob_maps {
        let boundary = boundaries.get(view).ok_or_else(|| {
            Error::InvalidArgument(format!("no boundary map for view {view}"))
        })?;
        let (v, g) = whd_with_grad(prob, boundary)?;
        total += v;
        per_view.insert(*view, v);
        grads.insert(*view, g);
    }
    if per_view.is_empty() {
        return Err(Error::InvalidArgument("no views in shape loss".into()));
    }
    Ok((total, per_view, grads))
}

/// The combined objective for one frame pair, bound to its inputs.
///
/// `evaluate` runs the full forward pass and composes gradients back to the
/// control-grid parameters through every path:
/// params -> field -> { warp (sim), vertex displacement -> predicted mesh ->
/// (smoothness, slicing -> splatting -> shape) }.
pub struct Objective<'a> {
    pub mesh0: &'a TriMesh,
    pub fixed_sa: &'a ImageVolume,
    pub moving_sa: &'a ImageVolume,
    views: Vec<(View, &'a ImagePlane)>,
    boundary_pts: Vec<Vec<(f64, f64)>>,
    pub weights: LossWeights,
}

impl<'a> Objective<'a> {
    pub fn new(
        mesh0: &'a TriMesh,
        fixed_sa: &'a ImageVolume,
        moving_sa: &'a ImageVolume,
        boundaries: &'a BTreeMap<View, ImagePlane>,
        weights: LossWeights,
    ) -> Result<Self> {
        weights.validate()?;
        check_sim_inputs(fixed_sa, moving_sa)?;
        if boundaries.is_empty() {
            return Err(Error::InvalidArgument(
                "objective needs at least one boundary view".into(),
            ));
        }
        let mut views = Vec::new();
        let mut boundary_pts = Vec::new();
        for (view, plane) in boundaries {
            let ypts = boundary_pixels(plane);
            if ypts.is_empty() {
                return Err(Error::EmptyBoundary(format!(
                    "boundary map for view {view} has no foreground pixels"
                )));
            }
            views.push((*view, plane));
            boundary_pts.push(ypts);
        }
        Ok(Objective {
            mesh0,
            fixed_sa,
            moving_sa,
            views,
            boundary_pts,
            weights,
        })
    }

    fn check_field(&self, geom: &crate::geometry::VolumeGeometry) -> Result<()> {
        if *geom != self.fixed_sa.geom {
            return Err(Error::ShapeMismatch(
                "motion field geometry differs from the reference volume".into(),
            ));
        }
        Ok(())
    }

    /// Forward pass only, at an explicit motion field.
    pub fn loss_at_field(&self, field: &MotionField) -> Result<LossReport> {
        self.check_field(&field.geom)?;
        let sim = loss_sim_value(self.fixed_sa, self.moving_sa, field)?;
        let dv = sample_at_vertices(field, self.mesh0);
        let mesh_t = mesh_predict(self.mesh0, &dv)?;
        let (smooth, _) = loss_smooth(&mesh_t)?;
        let mut shape = 0.0;
        let mut shape_per_view = BTreeMap::new();
        for ((view, plane), ypts) in self.views.iter().zip(&self.boundary_pts) {
            let probs = soft_slice(&mesh_t, &plane.frame, self.weights.tau)?;
            let sd = splat_data(&probs, plane.dims);
            let (v, _) = whd_core(&sd.data, plane.dims, ypts, None);
            shape += v;
            shape_per_view.insert(*view, v);
        }
        Ok(self.report(shape, sim, smooth, shape_per_view))
    }

    /// Full forward and backward pass at the given control grid. Returns the
    /// loss report and the gradient with respect to the control parameters.
    pub fn evaluate(&self, ctrl: &ControlGrid) -> Result<(LossReport, Vec<f64>)> {
        self.check_field(ctrl.field_geom())?;
        let field = ctrl.upsample();
        let n_vox = field.geom.n_voxels();

        // Similarity term (gradient only needed when weighted).
        let (sim, sim_ddisp) = if self.weights.lambda > 0.0 {
            loss_sim(self.fixed_sa, self.moving_sa, &field)?
        } else {
            (loss_sim_value(self.fixed_sa, self.moving_sa, &field)?, Vec::new())
        };

        // Mesh path forward.
        let dv = sample_at_vertices(&field, self.mesh0);
        let mesh_t = mesh_predict(self.mesh0, &dv)?;
        let (smooth, smooth_dverts) = loss_smooth(&mesh_t)?;

        // Shape terms, backpropagated to predicted-vertex gradients.
        let mut shape = 0.0;
        let mut shape_per_view = BTreeMap::new();
        let mut dverts = vec![Vector3::zeros(); self.mesh0.n_vertices()];
        for ((view, plane), ypts) in self.views.iter().zip(&self.boundary_pts) {
            let probs = soft_slice(&mesh_t, &plane.frame, self.weights.tau)?;
            let sd = splat_data(&probs, plane.dims);
            let footprint = sd.footprint();
            let (v, g) = whd_core(&sd.data, plane.dims, ypts, Some(&footprint));
            shape += v;
            shape_per_view.insert(*view, v);

            let mut upstream = vec![0.0f64; plane.n_pixels()];
            for (idx, gv) in footprint.iter().zip(&g) {
                upstream[*idx] = *gv;
            }
            let entry_grads = splat_grad(&probs, plane.dims, &upstream)?;
            let vg = soft_slice_grad(&mesh_t, &plane.frame, self.weights.tau, &entry_grads)?;
            for (acc, g) in dverts.iter_mut().zip(vg) {
                *acc += g;
            }
        }

        // Combine vertex gradients: shape has unit weight, smoothness beta.
        for (acc, sg) in dverts.iter_mut().zip(smooth_dverts) {
            *acc += sg * self.weights.beta;
        }

        // Back to the field, then to the control grid.
        let (mut dfield, _) = sample_grad(&field, self.mesh0, &dverts)?;
        if self.weights.lambda > 0.0 {
            for i in 0..3 * n_vox {
                dfield[i] += self.weights.lambda * sim_ddisp[i];
            }
        }
        let dparams = ctrl.downsample_grad(&dfield)?;
        Ok((self.report(shape, sim, smooth, shape_per_view), dparams))
    }

    fn report(
        &self,
        shape: f64,
        sim: f64,
        smooth: f64,
        shape_per_view: BTreeMap<View, f64>,
    ) -> LossReport {
        LossReport {
            total: shape + self.weights.lambda * sim + self.weights.beta * smooth,
            shape,
            sim,
            smooth,
            shape_per_view,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PlaneFrame, VolumeGeometry};
    use crate::rasterizer::splat;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Point3};

    fn geom(dims: [usize; 3]) -> VolumeGeometry {
        VolumeGeometry::new(
            dims,
            nalgebra::Vector3::new(1.0, 1.0, 1.0),
            Point3::origin(),
            Matrix3::identity(),
        )
        .unwrap()
    }

    fn frame() -> PlaneFrame {
        PlaneFrame::new(
            [1.0, 1.0],
            Point3::origin(),
            nalgebra::Vector3::x(),
            nalgebra::Vector3::y(),
            nalgebra::Vector3::z(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn sim_zero_for_identical_inputs() {
        let g = geom([5, 5, 5]);
        let data: Vec<f64> = (0..125).map(|i| (i as f64).sin()).collect();
        let a = ImageVolume::new(g.clone(), 1, data).unwrap();
        let f = MotionField::zeros(g);
        assert_eq!(loss_sim_value(&a, &a, &f).unwrap(), 0.0);
    }

    #[test]
    fn sim_one_for_unit_difference() {
        let g = geom([5, 5, 5]);
        let zeros = ImageVolume::zeros(g.clone(), 1).unwrap();
        let ones = ImageVolume::new(g.clone(), 1, vec![1.0; 125]).unwrap();
        let f = MotionField::zeros(g);
        assert_relative_eq!(
            loss_sim_value(&zeros, &ones, &f).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn sim_rejects_geometry_mismatch() {
        let a = ImageVolume::zeros(geom([5, 5, 5]), 1).unwrap();
        let b = ImageVolume::zeros(geom([5, 5, 4]), 1).unwrap();
        let f = MotionField::zeros(geom([5, 5, 5]));
        assert!(loss_sim_value(&a, &b, &f).is_err());
    }

    fn tetra() -> TriMesh {
        // Regular tetrahedron with edge length sqrt(8).
        let verts = vec![
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(1.0, -1.0, -1.0),
            Point3::new(-1.0, 1.0, -1.0),
            Point3::new(-1.0, -1.0, 1.0),
        ];
        let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
        TriMesh::new(verts, faces).unwrap()
    }

    #[test]
    fn mesh_predict_zero_and_translation() {
        let m = tetra();
        let zero = vec![Vector3::zeros(); 4];
        assert_eq!(mesh_predict(&m, &zero).unwrap().vertices(), m.vertices());
        let c = Vector3::new(0.5, -1.0, 2.0);
        let shifted = mesh_predict(&m, &vec![c; 4]).unwrap();
        for (a, b) in shifted.vertices().iter().zip(m.vertices()) {
            assert_eq!(a - b, c);
        }
        assert!(mesh_predict(&m, &zero[..2].to_vec()).is_err());
    }

    #[test]
    fn mesh_predict_radial_scaling() {
        let m = tetra();
        let dv: Vec<Vector3<f64>> = m.vertices().iter().map(|v| v.coords * 0.1).collect();
        let scaled = mesh_predict(&m, &dv).unwrap();
        for (a, b) in scaled.vertices().iter().zip(m.vertices()) {
            assert_relative_eq!(a.coords.norm(), 1.1 * b.coords.norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn laplacian_zero_at_centroid() {
        // A vertex at the centroid of its neighbors has zero Laplacian:
        // regular planar patch around the origin.
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, -1.0, 0.0),
        ];
        let faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
        let m = TriMesh::new(verts, faces).unwrap();
        let lap = vertex_laplacians(&m).unwrap();
        assert!(lap[0].norm() < 1e-15);
    }

    #[test]
    fn tetra_smoothness_matches_direct_evaluation() {
        // Independent evaluation of the same definition on explicit
        // coordinates, aggregated by hand.
        let m = tetra();
        let verts = m.vertices();
        let mut expect = 0.0;
        for i in 0..4 {
            let mut acc = Vector3::zeros();
            for &j in m.neighbors(i) {
                acc += verts[i] - verts[j];
            }
            expect += (acc / m.neighbors(i).len() as f64).norm();
        }
        expect /= 4.0;
        let (value, _) = loss_smooth(&m).unwrap();
        assert_relative_eq!(value, expect, max_relative = 1e-14);
        assert!(value > 0.0);
    }

    #[test]
    fn smoothness_rejects_isolated_vertex() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(5.0, 5.0, 5.0), // not referenced by any face
        ];
        let m = TriMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        assert!(loss_smooth(&m).is_err());
    }

    fn binary_plane(dims: [usize; 2], fg: &[(usize, usize)]) -> ImagePlane {
        let mut plane = ImagePlane::zeros(frame(), dims).unwrap();
        for &(u, v) in fg {
            let idx = plane.index(u, v);
            plane.data_mut()[idx] = 1.0;
        }
        plane
    }

    fn prob_map_from(dims: [usize; 2], px: &[(usize, usize, f64)]) -> ProbMap {
        let mut plane = ImagePlane::zeros(frame(), dims).unwrap();
        for &(u, v, p) in px {
            let idx = plane.index(u, v);
            plane.data_mut()[idx] = p;
        }
        ProbMap { plane }
    }

    #[test]
    fn whd_near_zero_for_perfect_match() {
        let fg = [(3usize, 4usize), (4, 4), (5, 5)];
        let boundary = binary_plane([10, 10], &fg);
        let prob = prob_map_from(
            [10, 10],
            &fg.iter().map(|&(u, v)| (u, v, 1.0)).collect::<Vec<_>>(),
        );
        let d_max = ((81.0 + 81.0) as f64).sqrt();
        let v = whd(&prob, &boundary).unwrap();
        assert!(v <= 1e-6 * d_max, "whd = {v}");
    }

    #[test]
    fn whd_all_zero_map_gives_dmax() {
        let boundary = binary_plane([10, 8], &[(2, 3), (7, 1)]);
        let prob = prob_map_from([10, 8], &[]);
        let d_max = ((81.0 + 49.0) as f64).sqrt();
        let v = whd(&prob, &boundary).unwrap();
        assert_relative_eq!(v, d_max, max_relative = 1e-12);
    }

    #[test]
    fn whd_rejects_empty_boundary_and_dim_mismatch() {
        let boundary = binary_plane([10, 8], &[]);
        let prob = prob_map_from([10, 8], &[(1, 1, 0.5)]);
        assert!(matches!(
            whd(&prob, &boundary),
            Err(Error::EmptyBoundary(_))
        ));
        let boundary = binary_plane([9, 8], &[(2, 3)]);
        assert!(whd(&prob, &boundary).is_err());
    }

    #[test]
    fn whd_decreases_when_covering_an_unmatched_boundary_point() {
        // B has one pixel and is otherwise uncovered; raising a pixel at
        // distance 1 toward probability 1 adds at most distance 1 to the
        // first term but collapses the second, so the total must fall.
        let boundary = binary_plane([12, 12], &[(6, 6)]);
        let empty = prob_map_from([12, 12], &[]);
        let near = prob_map_from([12, 12], &[(5, 6, 0.9)]);
        let v0 = whd(&empty, &boundary).unwrap();
        let v1 = whd(&near, &boundary).unwrap();
        assert!(v1 < v0, "raising a nearby pixel should reduce whd: {v1} vs {v0}");
    }

    #[test]
    fn whd_is_nonnegative_and_permutation_invariant() {
        // Permutation invariance is structural (sums over Y), checked by
        // evaluating with a reordered foreground.
        let a = binary_plane([10, 10], &[(1, 1), (8, 2), (4, 7)]);
        let b = binary_plane([10, 10], &[(4, 7), (1, 1), (8, 2)]);
        let prob = prob_map_from([10, 10], &[(2, 2, 0.7), (6, 6, 0.2)]);
        let va = whd(&prob, &a).unwrap();
        let vb = whd(&prob, &b).unwrap();
        assert!(va >= 0.0);
        assert_relative_eq!(va, vb, max_relative = 1e-12);
    }

    #[test]
    fn report_identity_holds() {
        let w = LossWeights::default();
        let report = LossReport {
            total: 1.5 + w.lambda * 0.25 + w.beta * 0.125,
            shape: 1.5,
            sim: 0.25,
            smooth: 0.125,
            shape_per_view: BTreeMap::new(),
        };
        let lhs = report.total;
        let rhs = report.shape + w.lambda * report.sim + w.beta * report.smooth;
        assert!(((lhs - rhs) / rhs).abs() < 1e-10);
    }

    #[test]
    fn splat_then_whd_runs_end_to_end() {
        // Smoke test wiring rasterizer output into the shape loss.
        let verts = vec![
            Point3::new(3.0, 3.0, 0.0),
            Point3::new(5.0, 3.0, 0.2),
            Point3::new(4.0, 5.0, -0.1),
        ];
        let mesh = TriMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        let probs = soft_slice(&mesh, &frame(), 3.0).unwrap();
        let pm = splat(&probs, &frame(), [10, 10]).unwrap();
        let boundary = binary_plane([10, 10], &[(3, 3), (5, 3), (4, 5)]);
        let v = whd(&pm, &boundary).unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }
}
