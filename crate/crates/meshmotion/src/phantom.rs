//! Synthetic ground truth: an LV-like myocardial shell with an analytic
//! deformation, rendered into multi-view intensity images and boundary maps.
//!
//! The shell is the region between two truncated half-ellipsoids sharing the
//! long axis (world z). The deformation scales radial coordinates by
//! `1 - a(t) * c_r` and longitudinal ones by `1 - a(t) * c_z`, where the
//! amplitude profile satisfies `a(0) = 0`; it has an exact inverse, which
//! both the renderer and the test oracles rely on.
//!
//! Mesh parameterization places one vertex ring exactly on the z = 0
//! mid-plane and four meridians exactly on the x = 0 / y = 0 long-axis
//! planes. Those are precisely the fixed planes of the deformation, so
//! hard-sliced boundary maps exist at every frame.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;

use nalgebra::{Matrix3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImagePlane, ImageVolume, PlaneFrame, TriMesh, VolumeGeometry};
use crate::io;
use crate::manifest::{FrameRecord, Manifest};
use crate::motion::MotionField;
use crate::rasterizer::{hard_slice, splat_data};

/// Splat deposits at or above this value count as foreground when a map is
/// binarized or compared as a pixel set; below it they are treated as
/// never-selected numerical dust.
pub const FOOTPRINT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    /// Endocardial semi-axes (x, y, long axis), mm.
    pub endo_radii: [f64; 3],
    /// Epicardial semi-axes (x, y, long axis), mm.
    pub epi_radii: [f64; 3],
    /// Basal truncation plane as a fraction of the epicardial long axis.
    pub base_cut: f64,
    /// Mesh density doubles per level.
    pub subdivision: u32,
    pub sax_dims: [usize; 3],
    pub sax_spacing: [f64; 3],
    pub lax_dims: [usize; 2],
    pub lax_spacing: [f64; 2],
    /// Peak radial contraction fraction.
    pub radial_contraction: f64,
    /// Peak longitudinal shortening fraction.
    pub longitudinal_contraction: f64,
    /// Frames in the cycle; frame 0 is the reference.
    pub frames: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            // Elliptical cross-section: tangential motion must be
            // observable in images and contours, which a circularly
            // symmetric shell cannot provide.
            endo_radii: [24.0, 20.0, 38.0],
            epi_radii: [32.0, 27.0, 45.0],
            base_cut: 0.35,
            subdivision: 2,
            sax_dims: [64, 64, 64],
            sax_spacing: [1.25, 1.25, 2.0],
            lax_dims: [64, 96],
            lax_spacing: [1.25, 1.25],
            radial_contraction: 0.10,
            longitudinal_contraction: 0.05,
            frames: 10,
            noise_sigma: 0.02,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        for ax in 0..3 {
            if !(self.endo_radii[ax] > 0.0) || !(self.epi_radii[ax] > self.endo_radii[ax]) {
                return Err(Error::InvalidArgument(format!(
                    "epi radii must exceed endo radii (axis {ax}: endo {}, epi {})",
                    self.endo_radii[ax], self.epi_radii[ax]
                )));
            }
        }
        if !(0.0..0.5).contains(&self.radial_contraction)
            || !(0.0..0.5).contains(&self.longitudinal_contraction)
        {
            return Err(Error::InvalidArgument(
                "contraction fractions must lie in [0, 0.5)".into(),
            ));
        }
        if !(0.0..=0.8).contains(&self.base_cut) {
            return Err(Error::InvalidArgument(
                "base_cut must lie in [0, 0.8]".into(),
            ));
        }
        if self.base_cut * self.epi_radii[2] >= self.endo_radii[2] {
            return Err(Error::InvalidArgument(
                "basal plane must cut both surfaces (base_cut * epi_z < endo_z)".into(),
            ));
        }
        for (name, dims) in [("sax", &self.sax_dims[..]), ("lax", &self.lax_dims[..])] {
            for &d in dims {
                if d < 16 {
                    return Err(Error::InvalidArgument(format!(
                        "{name} dims must be at least 16 per axis"
                    )));
                }
            }
        }
        if self.frames < 1 {
            return Err(Error::InvalidArgument("frames must be at least 1".into()));
        }
        if self.subdivision > 4 {
            return Err(Error::InvalidArgument(
                "subdivision above 4 is unreasonably dense".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument(
                "noise sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Contraction amplitude profile: zero at the reference frame, a half-sine
/// over the cycle (peak mid-cycle, back near zero at the end).
pub fn amplitude(spec: &PhantomSpec, t: usize) -> f64 {
    assert!(t < spec.frames, "frame index {t} out of range");
    if spec.frames == 1 {
        return 0.0;
    }
    (PI * t as f64 / (spec.frames - 1) as f64).sin()
}

fn scales(spec: &PhantomSpec, t: usize) -> (f64, f64) {
    let a = amplitude(spec, t);
    (
        1.0 - a * spec.radial_contraction,
        1.0 - a * spec.longitudinal_contraction,
    )
}

/// Analytic deformation of a world point at frame `t`.
pub fn deform_point(spec: &PhantomSpec, t: usize, p: &Point3<f64>) -> Point3<f64> {
    let (kr, kz) = scales(spec, t);
    Point3::new(p.x * kr, p.y * kr, p.z * kz)
}

/// Exact inverse of `deform_point`.
pub fn deform_point_inverse(spec: &PhantomSpec, t: usize, p: &Point3<f64>) -> Point3<f64> {
    let (kr, kz) = scales(spec, t);
    Point3::new(p.x / kr, p.y / kr, p.z / kz)
}

/// Deform a mesh to frame `t`, returning the deformed mesh and the exact
/// per-vertex displacement.
pub fn deform(mesh: &TriMesh, spec: &PhantomSpec, t: usize) -> (TriMesh, Vec<Vector3<f64>>) {
    let mut verts = Vec::with_capacity(mesh.n_vertices());
    let mut dv = Vec::with_capacity(mesh.n_vertices());
    for v in mesh.vertices() {
        let q = deform_point(spec, t, v);
        dv.push(q - v);
        verts.push(q);
    }
    let deformed = mesh
        .with_vertices(verts)
        .expect("same vertex count by construction");
    (deformed, dv)
}

/// The dense ground-truth motion field of frame `t` on the SAX grid.
pub fn ground_truth_field(spec: &PhantomSpec, t: usize) -> MotionField {
    let geom = sax_geometry(spec);
    let n = geom.n_voxels();
    let mut disp = vec![0.0f64; 3 * n];
    let mut i = 0usize;
    for z in 0..geom.dims[2] {
        for y in 0..geom.dims[1] {
            for x in 0..geom.dims[0] {
                let p = geom.voxel_to_world(Vector3::new(x as f64, y as f64, z as f64));
                let d = deform_point(spec, t, &p) - p;
                disp[i] = d.x;
                disp[n + i] = d.y;
                disp[2 * n + i] = d.z;
                i += 1;
            }
        }
    }
    MotionField::new(geom, disp).expect("finite by construction")
}

/// SAX stack geometry, centered on the origin.
pub fn sax_geometry(spec: &PhantomSpec) -> VolumeGeometry {
    let sp = Vector3::from(spec.sax_spacing);
    let origin = Point3::new(
        -0.5 * (spec.sax_dims[0] - 1) as f64 * sp.x,
        -0.5 * (spec.sax_dims[1] - 1) as f64 * sp.y,
        -0.5 * (spec.sax_dims[2] - 1) as f64 * sp.z,
    );
    VolumeGeometry::new(spec.sax_dims, sp, origin, Matrix3::identity())
        .expect("validated spec produces a valid geometry")
}

/// Mid-SAX plane (z = 0) frame and dims.
pub fn sax_mid_frame(spec: &PhantomSpec) -> (PlaneFrame, [usize; 2]) {
    let g = sax_geometry(spec);
    let frame = PlaneFrame::new(
        [spec.sax_spacing[0], spec.sax_spacing[1]],
        Point3::new(g.origin.x, g.origin.y, 0.0),
        Vector3::x(),
        Vector3::y(),
        Vector3::z(),
        0.0,
    )
    .expect("axis-aligned frame is orthonormal");
    (frame, [spec.sax_dims[0], spec.sax_dims[1]])
}

/// The two long-axis planes: x = 0 and y = 0, both through the long axis.
pub fn lax_frames(spec: &PhantomSpec) -> [(PlaneFrame, [usize; 2]); 2] {
    let [su, sv] = spec.lax_spacing;
    let [nu, nv] = spec.lax_dims;
    let u0 = -0.5 * (nu - 1) as f64 * su;
    let v0 = -0.5 * (nv - 1) as f64 * sv;
    let lax1 = PlaneFrame::new(
        [su, sv],
        Point3::new(0.0, u0, v0),
        Vector3::y(),
        Vector3::z(),
        Vector3::x(),
        0.0,
    )
    .expect("orthonormal");
    let lax2 = PlaneFrame::new(
        [su, sv],
        Point3::new(u0, 0.0, v0),
        Vector3::x(),
        Vector3::z(),
        -Vector3::y(),
        0.0,
    )
    .expect("orthonormal");
    [(lax1, spec.lax_dims), (lax2, spec.lax_dims)]
}

/// Surface point of an ellipsoid at polar angle theta (from +z) and azimuth.
fn ellipsoid_point(radii: [f64; 3], theta: f64, phi: f64) -> Point3<f64> {
    let st = theta.sin();
    Point3::new(
        radii[0] * st * phi.cos(),
        radii[1] * st * phi.sin(),
        radii[2] * theta.cos(),
    )
}

/// Latitude levels from the basal cut down to the apex, with one level
/// pinned at exactly pi/2 so a vertex ring lies on the mid-plane. The final
/// level (theta = pi) is the apex pole.
fn theta_levels(theta_base: f64, rings: usize) -> Vec<f64> {
    let span_upper = FRAC_PI_2 - theta_base;
    let span_lower = FRAC_PI_2;
    let total = span_upper + span_lower;
    let upper = ((rings as f64 * span_upper / total).round() as usize).clamp(1, rings - 1);
    let lower = rings - upper;
    let mut levels = Vec::with_capacity(rings + 1);
    for i in 0..upper {
        levels.push(theta_base + span_upper * i as f64 / upper as f64);
    }
    levels.push(FRAC_PI_2);
    for i in 1..=lower {
        levels.push(FRAC_PI_2 + span_lower * i as f64 / lower as f64);
    }
    levels
}

/// Closed myocardial shell: truncated endo and epi half-ellipsoids joined by
/// a basal rim. Segment count is divisible by 4 so four meridians lie
/// exactly on the two long-axis planes.
pub fn make_mesh(spec: &PhantomSpec) -> Result<TriMesh> {
    spec.validate()?;
    let segments = 64usize << spec.subdivision;
    let rings = 16usize << spec.subdivision;
    let zb = spec.base_cut * spec.epi_radii[2];
    let theta_base_endo = (zb / spec.endo_radii[2]).acos();
    let theta_base_epi = (zb / spec.epi_radii[2]).acos();

    let mut verts: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    // One open surface: rings of `segments` vertices plus an apex pole.
    // Returns (first ring start index, pole index).
    let mut add_surface = |radii: [f64; 3], theta_base: f64, outward: bool| {
        let base = verts.len();
        let levels = theta_levels(theta_base, rings);
        for theta in &levels {
            for s in 0..segments {
                let phi = TAU * s as f64 / segments as f64;
                verts.push(ellipsoid_point(radii, *theta, phi));
            }
        }
        let pole = verts.len();
        verts.push(Point3::new(0.0, 0.0, -radii[2]));
        let n_ring_levels = levels.len();
        for r in 0..n_ring_levels - 1 {
            for s in 0..segments {
                let s1 = (s + 1) % segments;
                let v00 = base + r * segments + s;
                let v01 = base + r * segments + s1;
                let v10 = base + (r + 1) * segments + s;
                let v11 = base + (r + 1) * segments + s1;
                if outward {
                    faces.push([v00, v10, v11]);
                    faces.push([v00, v11, v01]);
                } else {
                    faces.push([v00, v11, v10]);
                    faces.push([v00, v01, v11]);
                }
            }
        }
        let last = base + (n_ring_levels - 1) * segments;
        for s in 0..segments {
            let s1 = (s + 1) % segments;
            if outward {
                faces.push([last + s, pole, last + s1]);
            } else {
                faces.push([last + s, last + s1, pole]);
            }
        }
        base
    };

    let endo_base = add_surface(spec.endo_radii, theta_base_endo, false);
    let epi_base = add_surface(spec.epi_radii, theta_base_epi, true);

    // Basal rim: interpolated rings bridging the two base rings at z = zb.
    let endo_ring: Vec<Point3<f64>> = (0..segments)
        .map(|s| verts[endo_base + s])
        .collect();
    let epi_ring: Vec<Point3<f64>> = (0..segments).map(|s| verts[epi_base + s]).collect();
    let gap = (epi_ring[0] - endo_ring[0]).norm();
    let target_edge = TAU * spec.epi_radii[0].max(spec.epi_radii[1]) / segments as f64;
    let rim_strips = ((gap / target_edge).round() as usize).max(1);
    // Level k of the rim: 0 = endo base ring, rim_strips = epi base ring.
    let rim_level_index = |k: usize, s: usize, verts: &mut Vec<Point3<f64>>| -> usize {
        if k == 0 {
            endo_base + s
        } else if k == rim_strips {
            epi_base + s
        } else {
            let f = k as f64 / rim_strips as f64;
            let p = endo_ring[s] + (epi_ring[s] - endo_ring[s]) * f;
            verts.push(p);
            verts.len() - 1
        }
    };
    // Materialize intermediate rim vertices once, in (level, segment) order.
    let mut rim_index = vec![vec![0usize; segments]; rim_strips + 1];
    for (k, row) in rim_index.iter_mut().enumerate() {
        for (s, slot) in row.iter_mut().enumerate() {
            *slot = rim_level_index(k, s, &mut verts);
        }
    }
    for k in 0..rim_strips {
        for s in 0..segments {
            let s1 = (s + 1) % segments;
            let v00 = rim_index[k][s];
            let v01 = rim_index[k][s1];
            let v10 = rim_index[k + 1][s];
            let v11 = rim_index[k + 1][s1];
            // Rim faces point along +z, out of the solid.
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }

    TriMesh::new(verts, faces)
}

fn shell_contains(spec: &PhantomSpec, p: &Point3<f64>) -> bool {
    let zb = spec.base_cut * spec.epi_radii[2];
    if p.z > zb {
        return false;
    }
    let implicit = |r: [f64; 3]| {
        (p.x / r[0]).powi(2) + (p.y / r[1]).powi(2) + (p.z / r[2]).powi(2)
    };
    implicit(spec.endo_radii) >= 1.0 && implicit(spec.epi_radii) <= 1.0
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 bounded away from zero to keep ln finite.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

fn blur3_volume(data: &mut Vec<f64>, dims: [usize; 3]) {
    let idx = |x: usize, y: usize, z: usize| x + dims[0] * (y + dims[1] * z);
    let mut tmp = data.clone();
    // x, then y, then z; borders replicate.
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let xm = x.saturating_sub(1);
                let xp = (x + 1).min(dims[0] - 1);
                tmp[idx(x, y, z)] =
                    0.25 * data[idx(xm, y, z)] + 0.5 * data[idx(x, y, z)] + 0.25 * data[idx(xp, y, z)];
            }
        }
    }
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            let ym = y.saturating_sub(1);
            let yp = (y + 1).min(dims[1] - 1);
            for x in 0..dims[0] {
                data[idx(x, y, z)] =
                    0.25 * tmp[idx(x, ym, z)] + 0.5 * tmp[idx(x, y, z)] + 0.25 * tmp[idx(x, yp, z)];
            }
        }
    }
    for z in 0..dims[2] {
        let zm = z.saturating_sub(1);
        let zp = (z + 1).min(dims[2] - 1);
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                tmp[idx(x, y, z)] =
                    0.25 * data[idx(x, y, zm)] + 0.5 * data[idx(x, y, z)] + 0.25 * data[idx(x, y, zp)];
            }
        }
    }
    *data = tmp;
}

fn blur3_plane(data: &mut Vec<f64>, dims: [usize; 2]) {
    let idx = |u: usize, v: usize| u + dims[0] * v;
    let mut tmp = data.clone();
    for v in 0..dims[1] {
        for u in 0..dims[0] {
            let um = u.saturating_sub(1);
            let up = (u + 1).min(dims[0] - 1);
            tmp[idx(u, v)] = 0.25 * data[idx(um, v)] + 0.5 * data[idx(u, v)] + 0.25 * data[idx(up, v)];
        }
    }
    for v in 0..dims[1] {
        let vm = v.saturating_sub(1);
        let vp = (v + 1).min(dims[1] - 1);
        for u in 0..dims[0] {
            data[idx(u, v)] = 0.25 * tmp[idx(u, vm)] + 0.5 * tmp[idx(u, v)] + 0.25 * tmp[idx(u, vp)];
        }
    }
    *data = tmp;
}

/// All rendered artifacts of one frame.
#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub sa: ImageVolume,
    pub lax1: ImagePlane,
    pub lax2: ImagePlane,
    pub b_sa: ImagePlane,
    pub b_lax1: ImagePlane,
    pub b_lax2: ImagePlane,
}

fn check_coverage(mesh: &TriMesh, spec: &PhantomSpec) -> Result<()> {
    let g = sax_geometry(spec);
    for v in mesh.vertices() {
        let c = g.world_to_voxel(*v);
        for ax in 0..3 {
            if c[ax] < 0.0 || c[ax] > (g.dims[ax] - 1) as f64 {
                return Err(Error::InvalidGeometry(
                    "phantom volume geometry does not cover the mesh".into(),
                ));
            }
        }
    }
    for (frame, dims) in lax_frames(spec) {
        for v in mesh.vertices() {
            let c = frame.world_to_plane(*v);
            if c.x < 0.0 || c.x > (dims[0] - 1) as f64 || c.y < 0.0 || c.y > (dims[1] - 1) as f64 {
                return Err(Error::InvalidGeometry(
                    "phantom plane geometry does not cover the mesh".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Hard-sliced, binarized boundary map of the mesh on a plane. Contains only
/// the contour pixels ("anatomy boundary"), not a filled mask.
pub fn render_boundary(mesh: &TriMesh, frame: &PlaneFrame, dims: [usize; 2]) -> Result<ImagePlane> {
    let probs = hard_slice(mesh, frame);
    let sd = splat_data(&probs, dims);
    let data: Vec<f64> = sd
        .data
        .iter()
        .map(|&v| if v >= FOOTPRINT_EPS { 1.0 } else { 0.0 })
        .collect();
    ImagePlane::new(frame.clone(), dims, data)
}

/// Render frame `t`: smooth filled-myocardium intensities (inside 1,
/// background 0, one blur pass, seeded Gaussian noise) plus hard-sliced
/// boundary maps of the given deformed mesh.
pub fn render(mesh_t: &TriMesh, spec: &PhantomSpec, t: usize) -> Result<RenderedFrame> {
    spec.validate()?;
    check_coverage(mesh_t, spec)?;
    // One noise stream per frame; consumed in a fixed order (SAX volume,
    // then lax1, then lax2).
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(t as u64));

    let g = sax_geometry(spec);
    let mut vol = vec![0.0f64; g.n_voxels()];
    let mut i = 0usize;
    for z in 0..g.dims[2] {
        for y in 0..g.dims[1] {
            for x in 0..g.dims[0] {
                let p = g.voxel_to_world(Vector3::new(x as f64, y as f64, z as f64));
                let p0 = deform_point_inverse(spec, t, &p);
                vol[i] = if shell_contains(spec, &p0) { 1.0 } else { 0.0 };
                i += 1;
            }
        }
    }
    blur3_volume(&mut vol, g.dims);
    if spec.noise_sigma > 0.0 {
        for v in vol.iter_mut() {
            *v += spec.noise_sigma * gauss(&mut rng);
        }
    }
    let sa = ImageVolume::new(g, 1, vol)?;

    let mut lax_planes = Vec::new();
    for (frame, dims) in lax_frames(spec) {
        let mut data = vec![0.0f64; dims[0] * dims[1]];
        for v in 0..dims[1] {
            for u in 0..dims[0] {
                let p = frame.pixel_to_world(u as f64, v as f64);
                let p0 = deform_point_inverse(spec, t, &p);
                data[u + dims[0] * v] = if shell_contains(spec, &p0) { 1.0 } else { 0.0 };
            }
        }
        blur3_plane(&mut data, dims);
        if spec.noise_sigma > 0.0 {
            for val in data.iter_mut() {
                *val += spec.noise_sigma * gauss(&mut rng);
            }
        }
        lax_planes.push(ImagePlane::new(frame, dims, data)?);
    }
    let lax2 = lax_planes.pop().expect("two lax planes");
    let lax1 = lax_planes.pop().expect("two lax planes");

    let (mid_frame, mid_dims) = sax_mid_frame(spec);
    let b_sa = render_boundary(mesh_t, &mid_frame, mid_dims)?;
    let [(f1, d1), (f2, d2)] = lax_frames(spec);
    let b_lax1 = render_boundary(mesh_t, &f1, d1)?;
    let b_lax2 = render_boundary(mesh_t, &f2, d2)?;

    Ok(RenderedFrame {
        sa,
        lax1,
        lax2,
        b_sa,
        b_lax1,
        b_lax2,
    })
}

/// Generate and write the full corpus: per-frame meshes, displacements,
/// intensity images, boundary maps and the manifest. Returns the manifest.
pub fn generate_corpus(spec: &PhantomSpec, out_dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    serde_json::to_writer_pretty(
        std::io::BufWriter::new(std::fs::File::create(out_dir.join("spec.json"))?),
        spec,
    )?;
    let mesh0 = make_mesh(spec)?;
    let mut records = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let (mesh_t, dv) = deform(&mesh0, spec, t);
        let rendered = render(&mesh_t, spec, t)?;
        let name = |stem: &str, ext: &str| format!("{stem}_{t:03}.{ext}");
        io::write_obj(&out_dir.join(name("mesh", "obj")), &mesh_t)?;
        let dv_rows: Vec<[f64; 3]> = dv.iter().map(|d| [d.x, d.y, d.z]).collect();
        serde_json::to_writer(
            std::io::BufWriter::new(std::fs::File::create(out_dir.join(name("dv", "json")))?),
            &dv_rows,
        )?;
        io::write_volume(&out_dir.join(name("sa", "raw")), &rendered.sa)?;
        io::write_plane(&out_dir.join(name("lax1", "raw")), &rendered.lax1)?;
        io::write_plane(&out_dir.join(name("lax2", "raw")), &rendered.lax2)?;
        io::write_plane(&out_dir.join(name("b_sa", "raw")), &rendered.b_sa)?;
        io::write_plane(&out_dir.join(name("b_lax1", "raw")), &rendered.b_lax1)?;
        io::write_plane(&out_dir.join(name("b_lax2", "raw")), &rendered.b_lax2)?;
        records.push(FrameRecord {
            t,
            mesh: name("mesh", "obj"),
            dv: name("dv", "json"),
            sa: name("sa", "raw"),
            lax1: name("lax1", "raw"),
            lax2: name("lax2", "raw"),
            b_sa: name("b_sa", "raw"),
            b_lax1: name("b_lax1", "raw"),
            b_lax2: name("b_lax2", "raw"),
        });
    }
    let manifest = Manifest {
        version: Manifest::VERSION.to_string(),
        root: ".".to_string(),
        frames: records,
    };
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}
