//! The voxel-grid motion field, its trilinear sampling onto mesh vertices,
//! spatial-transformer warping of volumes, and the coarse control-grid
//! parameterization that serves as the optimization variable.
//!
//! Displacements are stored in millimetres in the world frame so a single
//! field drives both vertex motion and volume warping regardless of voxel
//! anisotropy. Out-of-bounds samples use border clamping everywhere, which
//! keeps every operation total; clamped coordinates contribute zero spatial
//! derivative.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{ImageVolume, TriMesh, VolumeGeometry};

/// Dense displacement field over a volume grid, channel-planar like
/// `ImageVolume` (component c of voxel i at `disp[c * n_voxels + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    pub geom: VolumeGeometry,
    disp: Vec<f64>,
}

impl MotionField {
    pub fn new(geom: VolumeGeometry, disp: Vec<f64>) -> Result<Self> {
        if disp.len() != 3 * geom.n_voxels() {
            return Err(Error::ShapeMismatch(format!(
                "displacement data has {} values, geometry expects {}",
                disp.len(),
                3 * geom.n_voxels()
            )));
        }
        if !disp.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "displacement field contains non-finite values".into(),
            ));
        }
        Ok(MotionField { geom, disp })
    }

    pub fn zeros(geom: VolumeGeometry) -> Self {
        let n = 3 * geom.n_voxels();
        MotionField {
            geom,
            disp: vec![0.0; n],
        }
    }

    pub fn disp(&self) -> &[f64] {
        &self.disp
    }

    pub fn disp_mut(&mut self) -> &mut [f64] {
        &mut self.disp
    }

    /// Displacement vector at voxel flat index `i`.
    #[inline]
    pub fn vector_at(&self, i: usize) -> Vector3<f64> {
        let n = self.geom.n_voxels();
        Vector3::new(self.disp[i], self.disp[n + i], self.disp[2 * n + i])
    }

    pub fn to_volume(&self) -> ImageVolume {
        ImageVolume::new(self.geom.clone(), 3, self.disp.clone()).expect("consistent by invariant")
    }

    pub fn from_volume(vol: &ImageVolume) -> Result<Self> {
        if vol.channels != 3 {
            return Err(Error::ShapeMismatch(format!(
                "motion field needs a 3-channel volume, got {}",
                vol.channels
            )));
        }
        MotionField::new(vol.geom.clone(), vol.data().to_vec())
    }
}

/// One interpolation cell: lower corner, fractional weights and whether each
/// axis lies strictly inside the grid (derivatives vanish on clamped axes).
#[derive(Debug, Clone, Copy)]
struct Cell {
    i0: [usize; 3],
    f: [f64; 3],
    active: [bool; 3],
}

fn cell(dims: [usize; 3], g: Vector3<f64>) -> Cell {
    let mut i0 = [0usize; 3];
    let mut f = [0.0f64; 3];
    let mut active = [false; 3];
    for ax in 0..3 {
        let n = dims[ax];
        let top = (n - 1) as f64;
        let gc = g[ax].clamp(0.0, top);
        let x0 = (gc.floor() as usize).min(n - 2);
        i0[ax] = x0;
        f[ax] = gc - x0 as f64;
        active[ax] = g[ax] > 0.0 && g[ax] < top;
    }
    Cell { i0, f, active }
}

#[inline]
fn corner_weight(c: &Cell, dx: usize, dy: usize, dz: usize) -> f64 {
    let wx = if dx == 0 { 1.0 - c.f[0] } else { c.f[0] };
    let wy = if dy == 0 { 1.0 - c.f[1] } else { c.f[1] };
    let wz = if dz == 0 { 1.0 - c.f[2] } else { c.f[2] };
    wx * wy * wz
}

fn trilerp(data: &[f64], dims: [usize; 3], c: &Cell) -> f64 {
    let mut acc = 0.0;
    for dz in 0..2 {
        for dy in 0..2 {
            for dx in 0..2 {
                let idx = (c.i0[0] + dx) + dims[0] * ((c.i0[1] + dy) + dims[1] * (c.i0[2] + dz));
                acc += corner_weight(c, dx, dy, dz) * data[idx];
            }
        }
    }
    acc
}

/// Value and derivative with respect to the (unclamped) grid coordinates.
fn trilerp_grad(data: &[f64], dims: [usize; 3], c: &Cell) -> (f64, [f64; 3]) {
    let mut val = 0.0;
    let mut grad = [0.0f64; 3];
    for dz in 0..2 {
        for dy in 0..2 {
            for dx in 0..2 {
                let idx = (c.i0[0] + dx) + dims[0] * ((c.i0[1] + dy) + dims[1] * (c.i0[2] + dz));
                let v = data[idx];
                let wx = if dx == 0 { 1.0 - c.f[0] } else { c.f[0] };
                let wy = if dy == 0 { 1.0 - c.f[1] } else { c.f[1] };
                let wz = if dz == 0 { 1.0 - c.f[2] } else { c.f[2] };
                let sx = if dx == 0 { -1.0 } else { 1.0 };
                let sy = if dy == 0 { -1.0 } else { 1.0 };
                let sz = if dz == 0 { -1.0 } else { 1.0 };
                val += wx * wy * wz * v;
                grad[0] += sx * wy * wz * v;
                grad[1] += wx * sy * wz * v;
                grad[2] += wx * wy * sz * v;
            }
        }
    }
    for ax in 0..3 {
        if !c.active[ax] {
            grad[ax] = 0.0;
        }
    }
    (val, grad)
}

/// Sample the field at each mesh vertex: trilinear interpolation of the
/// displacement grid at the vertex's continuous voxel coordinates, border
/// clamped. Returns per-vertex displacements in millimetres.
pub fn sample_at_vertices(field: &MotionField, mesh: &TriMesh) -> Vec<Vector3<f64>> {
    let n = field.geom.n_voxels();
    let dims = field.geom.dims;
    let mut out = Vec::with_capacity(mesh.n_vertices());
    for v in mesh.vertices() {
        let c = cell(dims, field.geom.world_to_voxel(*v));
        out.push(Vector3::new(
            trilerp(&field.disp[..n], dims, &c),
            trilerp(&field.disp[n..2 * n], dims, &c),
            trilerp(&field.disp[2 * n..], dims, &c),
        ));
    }
    out
}

/// Reverse mode of `sample_at_vertices`: scatter-add of the interpolation
/// weights into a field-shaped gradient (vertex-index order, deterministic),
/// plus the gradient with respect to vertex positions through the field's
/// spatial derivative.
pub fn sample_grad(
    field: &MotionField,
    mesh: &TriMesh,
    upstream: &[Vector3<f64>],
) -> Result<(Vec<f64>, Vec<Vector3<f64>>)> {
    if upstream.len() != mesh.n_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "upstream has {} rows, mesh has {} vertices",
            upstream.len(),
            mesh.n_vertices()
        )));
    }
    let n = field.geom.n_voxels();
    let dims = field.geom.dims;
    let g = &field.geom;
    let mut dfield = vec![0.0f64; 3 * n];
    let mut dverts = Vec::with_capacity(upstream.len());
    for (v, up) in mesh.vertices().iter().zip(upstream) {
        let c = cell(dims, g.world_to_voxel(*v));
        // Scatter into the field gradient.
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let w = corner_weight(&c, dx, dy, dz);
                    if w == 0.0 {
                        continue;
                    }
                    let idx = (c.i0[0] + dx) + dims[0] * ((c.i0[1] + dy) + dims[1] * (c.i0[2] + dz));
                    for ch in 0..3 {
                        dfield[ch * n + idx] += w * up[ch];
                    }
                }
            }
        }
        // d(sample)/d(vertex) via the field's spatial derivative:
        // dL/dp = sum_ax (sum_ch up_ch * dI_ch/dg_ax) * dg_ax/dp,
        // with dg_ax/dp = direction column ax / spacing_ax.
        let mut dv = Vector3::zeros();
        for ch in 0..3 {
            let (_, gr) = trilerp_grad(&field.disp[ch * n..(ch + 1) * n], dims, &c);
            for ax in 0..3 {
                dv += g.direction.column(ax) * (up[ch] * gr[ax] / g.spacing[ax]);
            }
        }
        dverts.push(dv);
    }
    Ok((dfield, dverts))
}

/// Warp `moving` by the field: each output voxel is sampled at its own world
/// position plus the local displacement. Moving image and field must share
/// geometry exactly.
///
/// A voxel whose displacement is exactly zero copies its own value, so the
/// zero field is the identity bit for bit regardless of how the affine
/// transforms round in floating point.
pub fn warp_volume(moving: &ImageVolume, field: &MotionField) -> Result<ImageVolume> {
    if moving.geom != field.geom {
        return Err(Error::ShapeMismatch(
            "moving volume and motion field geometries differ".into(),
        ));
    }
    if moving.channels != 1 {
        return Err(Error::ShapeMismatch(
            "warp expects a single-channel volume".into(),
        ));
    }
    let g = &moving.geom;
    let dims = g.dims;
    let data = moving.channel(0);
    let mut out = vec![0.0f64; g.n_voxels()];
    let mut i = 0usize;
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let d = field.vector_at(i);
                if d == Vector3::zeros() {
                    out[i] = data[i];
                } else {
                    let p = g.voxel_to_world(Vector3::new(x as f64, y as f64, z as f64));
                    let c = cell(dims, g.world_to_voxel(p + d));
                    out[i] = trilerp(data, dims, &c);
                }
                i += 1;
            }
        }
    }
    ImageVolume::new(g.clone(), 1, out)
}

/// Reverse mode of `warp_volume` with respect to the displacement field:
/// the image's interpolated spatial derivative at each sample point times the
/// upstream gradient.
pub fn warp_grad(
    moving: &ImageVolume,
    field: &MotionField,
    upstream: &[f64],
) -> Result<Vec<f64>> {
    if moving.geom != field.geom {
        return Err(Error::ShapeMismatch(
            "moving volume and motion field geometries differ".into(),
        ));
    }
    let g = &moving.geom;
    let n = g.n_voxels();
    if upstream.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "upstream has {} voxels, expected {n}",
            upstream.len()
        )));
    }
    let dims = g.dims;
    let data = moving.channel(0);
    let mut dd = vec![0.0f64; 3 * n];
    let mut i = 0usize;
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let up = upstream[i];
                if up != 0.0 {
                    let p = g.voxel_to_world(Vector3::new(x as f64, y as f64, z as f64));
                    let q = p + field.vector_at(i);
                    let c = cell(dims, g.world_to_voxel(q));
                    let (_, gr) = trilerp_grad(data, dims, &c);
                    // dg/dd = diag(1/spacing) * D^T, so dL/dd = sum_ax
                    // up * gr[ax] / spacing_ax * direction column ax.
                    let mut dv = Vector3::zeros();
                    for ax in 0..3 {
                        dv += g.direction.column(ax) * (up * gr[ax] / g.spacing[ax]);
                    }
                    dd[i] = dv.x;
                    dd[n + i] = dv.y;
                    dd[2 * n + i] = dv.z;
                }
                i += 1;
            }
        }
    }
    Ok(dd)
}

/// Coarse control grid: the optimization variable. Control points sit every
/// `spacing_vox` voxels and are upsampled trilinearly to the full field;
/// spacing 1 degenerates to a free voxel field (upsampling is the identity).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    field_geom: VolumeGeometry,
    pub spacing_vox: usize,
    pub cdims: [usize; 3],
    data: Vec<f64>,
}

impl ControlGrid {
    pub fn zeros(field_geom: VolumeGeometry, spacing_vox: usize) -> Result<Self> {
        if spacing_vox < 1 {
            return Err(Error::InvalidArgument(
                "control spacing must be at least 1 voxel".into(),
            ));
        }
        let mut cdims = [0usize; 3];
        for ax in 0..3 {
            // Enough control cells to cover [0, dim-1] in units of spacing.
            cdims[ax] = (field_geom.dims[ax] - 1).div_ceil(spacing_vox) + 1;
        }
        let n = 3 * cdims[0] * cdims[1] * cdims[2];
        Ok(ControlGrid {
            field_geom,
            spacing_vox,
            cdims,
            data: vec![0.0; n],
        })
    }

    pub fn field_geom(&self) -> &VolumeGeometry {
        &self.field_geom
    }

    pub fn n_params(&self) -> usize {
        self.data.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.data
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn n_control(&self) -> usize {
        self.cdims[0] * self.cdims[1] * self.cdims[2]
    }

    /// Trilinear upsampling of the control grid to the full field.
    pub fn upsample(&self) -> MotionField {
        let g = &self.field_geom;
        let n = g.n_voxels();
        let nc = self.n_control();
        let s = self.spacing_vox as f64;
        let mut disp = vec![0.0f64; 3 * n];
        let mut i = 0usize;
        for z in 0..g.dims[2] {
            for y in 0..g.dims[1] {
                for x in 0..g.dims[0] {
                    let gc = Vector3::new(x as f64 / s, y as f64 / s, z as f64 / s);
                    let c = cell(self.cdims, gc);
                    for ch in 0..3 {
                        disp[ch * n + i] =
                            trilerp(&self.data[ch * nc..(ch + 1) * nc], self.cdims, &c);
                    }
                    i += 1;
                }
            }
        }
        MotionField {
            geom: g.clone(),
            disp,
        }
    }

    /// Transpose of `upsample`: accumulate a full-field gradient onto the
    /// control points (fixed voxel order, deterministic).
    pub fn downsample_grad(&self, field_grad: &[f64]) -> Result<Vec<f64>> {
        let g = &self.field_geom;
        let n = g.n_voxels();
        if field_grad.len() != 3 * n {
            return Err(Error::ShapeMismatch(format!(
                "field gradient has {} values, expected {}",
                field_grad.len(),
                3 * n
            )));
        }
        let nc = self.n_control();
        let s = self.spacing_vox as f64;
        let mut out = vec![0.0f64; 3 * nc];
        let mut i = 0usize;
        for z in 0..g.dims[2] {
            for y in 0..g.dims[1] {
                for x in 0..g.dims[0] {
                    let gc = Vector3::new(x as f64 / s, y as f64 / s, z as f64 / s);
                    let c = cell(self.cdims, gc);
                    for dz in 0..2 {
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let w = corner_weight(&c, dx, dy, dz);
                                if w == 0.0 {
                                    continue;
                                }
                                let idx = (c.i0[0] + dx)
                                    + self.cdims[0] * ((c.i0[1] + dy) + self.cdims[1] * (c.i0[2] + dz));
                                for ch in 0..3 {
                                    out[ch * nc + idx] += w * field_grad[ch * n + i];
                                }
                            }
                        }
                    }
                    i += 1;
                }
            }
        }
        Ok(out)
    }
}
