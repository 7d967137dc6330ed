//! Coordinate frames and the mesh/image containers everything else builds on.
//!
//! All positions are stored in a fixed right-handed world frame in
//! millimetres and converted into image coordinates on demand. Geometry
//! values are immutable after construction and safe to share across threads.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};

/// Tolerance for unit-length and orthogonality checks on direction vectors.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// Triangle mesh: world-frame vertex positions plus faces as index triples.
///
/// Per-vertex edge adjacency is derived once at construction and cached;
/// neighbor lists are sorted ascending so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    adjacency: Vec<Vec<usize>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidMesh("mesh has no vertices".into()));
        }
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        let adjacency = build_adjacency(&faces, vertices.len())?;
        Ok(TriMesh {
            vertices,
            faces,
            adjacency,
        })
    }

    /// Same topology with new vertex positions. Adjacency is reused, the
    /// vertex count must match.
    pub fn with_vertices(&self, vertices: Vec<Point3<f64>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::ShapeMismatch(format!(
                "vertex count {} does not match mesh ({})",
                vertices.len(),
                self.vertices.len()
            )));
        }
        Ok(TriMesh {
            vertices,
            faces: self.faces.clone(),
            adjacency: self.adjacency.clone(),
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Indices of vertices sharing an edge with `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
}

/// Edge adjacency from a face list: `N_i` holds every vertex sharing an edge
/// with `i`. Rejects out-of-range indices and degenerate faces.
pub fn build_adjacency(faces: &[[usize; 3]], n_vertices: usize) -> Result<Vec<Vec<usize>>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for (fi, f) in faces.iter().enumerate() {
        for &v in f {
            if v >= n_vertices {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex {v} (mesh has {n_vertices})"
                )));
            }
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(Error::InvalidMesh(format!(
                "face {fi} is degenerate: [{}, {}, {}]",
                f[0], f[1], f[2]
            )));
        }
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    Ok(adj)
}

/// Voxel-grid placement in world space: counts, spacing (mm/voxel), origin of
/// voxel (0,0,0) and a 3x3 orthonormal direction matrix whose column `j` is
/// the world direction of voxel axis `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGeometry {
    pub dims: [usize; 3],
    pub spacing: Vector3<f64>,
    pub origin: Point3<f64>,
    pub direction: Matrix3<f64>,
}

impl VolumeGeometry {
    pub fn new(
        dims: [usize; 3],
        spacing: Vector3<f64>,
        origin: Point3<f64>,
        direction: Matrix3<f64>,
    ) -> Result<Self> {
        for (ax, &d) in dims.iter().enumerate() {
            if d < 2 {
                return Err(Error::InvalidGeometry(format!(
                    "dims[{ax}] = {d}, need at least 2 voxels per axis"
                )));
            }
        }
        for ax in 0..3 {
            if !(spacing[ax] > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "spacing[{ax}] = {} must be positive",
                    spacing[ax]
                )));
            }
        }
        check_orthonormal_rows(&direction)?;
        Ok(VolumeGeometry {
            dims,
            spacing,
            origin,
            direction,
        })
    }

    pub fn n_voxels(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Flat index of voxel (x, y, z); x varies fastest.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    /// World position of continuous voxel coordinates.
    #[inline]
    pub fn voxel_to_world(&self, v: Vector3<f64>) -> Point3<f64> {
        self.origin + self.direction * self.spacing.component_mul(&v)
    }

    /// Continuous voxel coordinates of a world point. Exact inverse of
    /// `voxel_to_world` (the direction matrix is orthonormal).
    #[inline]
    pub fn world_to_voxel(&self, p: Point3<f64>) -> Vector3<f64> {
        (self.direction.transpose() * (p - self.origin)).component_div(&self.spacing)
    }
}

fn check_orthonormal_rows(m: &Matrix3<f64>) -> Result<()> {
    for i in 0..3 {
        let ri = m.row(i);
        if (ri.norm() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidGeometry(format!(
                "direction row {i} has norm {} (must be unit)",
                ri.norm()
            )));
        }
        for j in (i + 1)..3 {
            let d = ri.dot(&m.row(j));
            if d.abs() > ORTHONORMAL_TOL {
                return Err(Error::InvalidGeometry(format!(
                    "direction rows {i} and {j} are not orthogonal (dot = {d})"
                )));
            }
        }
    }
    Ok(())
}

fn check_unit(v: &Vector3<f64>, name: &str) -> Result<()> {
    if (v.norm() - 1.0).abs() > ORTHONORMAL_TOL {
        return Err(Error::InvalidGeometry(format!(
            "{name} has norm {} (must be unit)",
            v.norm()
        )));
    }
    Ok(())
}

/// 3D scalar (or 3-channel vector) grid with world geometry.
///
/// Data is stored channel-planar: channel `c` of voxel index `i` lives at
/// `data[c * n_voxels + i]`, with `i = x + nx*(y + ny*z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVolume {
    pub geom: VolumeGeometry,
    pub channels: usize,
    data: Vec<f64>,
}

impl ImageVolume {
    pub fn new(geom: VolumeGeometry, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidGeometry(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let expect = geom.n_voxels() * channels;
        if data.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "volume data has {} values, geometry expects {expect}",
                data.len()
            )));
        }
        Ok(ImageVolume {
            geom,
            channels,
            data,
        })
    }

    pub fn zeros(geom: VolumeGeometry, channels: usize) -> Result<Self> {
        let n = geom.n_voxels() * channels;
        ImageVolume::new(geom, channels, vec![0.0; n])
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Channel `c` as a contiguous slice.
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.geom.n_voxels();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, c: usize, x: usize, y: usize, z: usize) -> f64 {
        self.data[c * self.geom.n_voxels() + self.geom.index(x, y, z)]
    }
}

/// Placement of a 2D image plane in world space, plus the slice coordinate
/// used by the slicing rule.
///
/// Plane coordinates of a world point `p` are
/// `x = (p-origin)·row_dir / spacing_u`, `y = (p-origin)·col_dir / spacing_v`
/// and `z = (p-origin)·normal / min(spacing_u, spacing_v)`, so all three are
/// measured in pixels; the out-of-plane unit is one in-plane pixel, which
/// makes the slicing threshold and sharpness dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFrame {
    pub spacing: [f64; 2],
    pub origin: Point3<f64>,
    pub row_dir: Vector3<f64>,
    pub col_dir: Vector3<f64>,
    pub normal: Vector3<f64>,
    /// The plane's own position along its normal, in the same
    /// pixel-equivalent unit as the `z` plane coordinate.
    pub slice_coord: f64,
}

/// Plane coordinates in pixels; `z` is the signed out-of-plane coordinate in
/// pixel equivalents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCoords {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PlaneFrame {
    pub fn new(
        spacing: [f64; 2],
        origin: Point3<f64>,
        row_dir: Vector3<f64>,
        col_dir: Vector3<f64>,
        normal: Vector3<f64>,
        slice_coord: f64,
    ) -> Result<Self> {
        if !(spacing[0] > 0.0 && spacing[1] > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "plane spacing must be positive, got [{}, {}]",
                spacing[0], spacing[1]
            )));
        }
        check_unit(&row_dir, "row_dir")?;
        check_unit(&col_dir, "col_dir")?;
        check_unit(&normal, "normal")?;
        for (a, b, n) in [
            (&row_dir, &col_dir, "row_dir/col_dir"),
            (&row_dir, &normal, "row_dir/normal"),
            (&col_dir, &normal, "col_dir/normal"),
        ] {
            let d = a.dot(b);
            if d.abs() > ORTHONORMAL_TOL {
                return Err(Error::InvalidGeometry(format!(
                    "{n} are not orthogonal (dot = {d})"
                )));
            }
        }
        Ok(PlaneFrame {
            spacing,
            origin,
            row_dir,
            col_dir,
            normal,
            slice_coord,
        })
    }

    /// Unit of the out-of-plane coordinate: the smaller in-plane spacing.
    #[inline]
    pub fn z_unit(&self) -> f64 {
        self.spacing[0].min(self.spacing[1])
    }

    #[inline]
    pub fn world_to_plane(&self, p: Point3<f64>) -> PlaneCoords {
        let d = p - self.origin;
        PlaneCoords {
            x: d.dot(&self.row_dir) / self.spacing[0],
            y: d.dot(&self.col_dir) / self.spacing[1],
            z: d.dot(&self.normal) / self.z_unit(),
        }
    }

    #[inline]
    pub fn plane_to_world(&self, c: PlaneCoords) -> Point3<f64> {
        self.origin
            + self.row_dir * (c.x * self.spacing[0])
            + self.col_dir * (c.y * self.spacing[1])
            + self.normal * (c.z * self.z_unit())
    }

    /// World position of pixel (u, v) on the plane itself.
    #[inline]
    pub fn pixel_to_world(&self, u: f64, v: f64) -> Point3<f64> {
        self.origin + self.row_dir * (u * self.spacing[0]) + self.col_dir * (v * self.spacing[1])
    }
}

/// 2D scalar grid with world geometry. Pixel (u, v) lives at `u + nu * v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    pub frame: PlaneFrame,
    pub dims: [usize; 2],
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(frame: PlaneFrame, dims: [usize; 2], data: Vec<f64>) -> Result<Self> {
        if dims[0] < 2 || dims[1] < 2 {
            return Err(Error::InvalidGeometry(format!(
                "plane dims [{}, {}] must be at least 2 per axis",
                dims[0], dims[1]
            )));
        }
        if data.len() != dims[0] * dims[1] {
            return Err(Error::ShapeMismatch(format!(
                "plane data has {} values, dims expect {}",
                data.len(),
                dims[0] * dims[1]
            )));
        }
        Ok(ImagePlane { frame, dims, data })
    }

    pub fn zeros(frame: PlaneFrame, dims: [usize; 2]) -> Result<Self> {
        ImagePlane::new(frame, dims, vec![0.0; dims[0] * dims[1]])
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        u + self.dims[0] * v
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.data[self.index(u, v)]
    }

    pub fn n_pixels(&self) -> usize {
        self.dims[0] * self.dims[1]
    }
}
