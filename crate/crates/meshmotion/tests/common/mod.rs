//! Shared test support: seeded generators and independent oracle
//! implementations. Oracles are deliberate re-derivations of the definitions
//! (naive loops, no shared code with the accelerated paths they check).

#![allow(dead_code)]

use meshmotion::geometry::{ImageVolume, PlaneFrame, TriMesh, VolumeGeometry};
use meshmotion::motion::MotionField;
use nalgebra::{Matrix3, Point3, Rotation3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let axis = loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if v.norm() > 1e-3 {
            break v.normalize();
        }
    };
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    *Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix()
}

pub fn random_frame(rng: &mut ChaCha8Rng) -> PlaneFrame {
    let rot = random_rotation(rng);
    PlaneFrame::new(
        [rng.gen_range(0.8..2.0), rng.gen_range(0.8..2.0)],
        Point3::new(
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        ),
        rot.column(0).into(),
        rot.column(1).into(),
        rot.column(2).into(),
        rng.gen_range(-3.0..3.0),
    )
    .unwrap()
}

pub fn random_geometry(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> VolumeGeometry {
    VolumeGeometry::new(
        dims,
        Vector3::new(
            rng.gen_range(0.8..2.0),
            rng.gen_range(0.8..2.0),
            rng.gen_range(0.8..2.0),
        ),
        Point3::new(
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        ),
        random_rotation(rng),
    )
    .unwrap()
}

/// Smooth random volume: a few random low-frequency sinusoids, so trilinear
/// cell-boundary slope jumps stay small for finite-difference checks.
pub fn smooth_volume(rng: &mut ChaCha8Rng, geom: VolumeGeometry) -> ImageVolume {
    let mut waves = Vec::new();
    for _ in 0..4 {
        waves.push((
            Vector3::new(
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
            ),
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.2..0.5),
        ));
    }
    let mut data = vec![0.0f64; geom.n_voxels()];
    let mut i = 0;
    for z in 0..geom.dims[2] {
        for y in 0..geom.dims[1] {
            for x in 0..geom.dims[0] {
                let v = Vector3::new(x as f64, y as f64, z as f64);
                data[i] = waves
                    .iter()
                    .map(|(k, phase, amp)| amp * (k.dot(&v) + phase).sin())
                    .sum::<f64>();
                i += 1;
            }
        }
    }
    ImageVolume::new(geom, 1, data).unwrap()
}

pub fn smooth_field(rng: &mut ChaCha8Rng, geom: VolumeGeometry) -> MotionField {
    let n = geom.n_voxels();
    let mut disp = vec![0.0f64; 3 * n];
    for ch in 0..3 {
        let vol = smooth_volume(rng, geom.clone());
        disp[ch * n..(ch + 1) * n].copy_from_slice(vol.channel(0));
    }
    MotionField::new(geom, disp).unwrap()
}

/// Icosphere: icosahedron subdivided `level` times, scaled to `radius`.
pub fn icosphere(level: u32, radius: f64) -> TriMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3<f64>> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Point3::from(Vector3::from(*c).normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: std::collections::BTreeMap<(usize, usize), usize> =
            std::collections::BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for (k, (a, b)) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])].into_iter().enumerate() {
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoints.entry(key).or_insert_with(|| {
                    let m = (verts[a].coords + verts[b].coords).normalize();
                    verts.push(Point3::from(m));
                    verts.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }
    for v in &mut verts {
        *v = Point3::from(v.coords * radius);
    }
    TriMesh::new(verts, faces).unwrap()
}

/// Random jittered icosphere centered at `center` (all vertices used by
/// faces, no degenerate adjacency).
pub fn random_mesh(rng: &mut ChaCha8Rng, center: Point3<f64>, radius: f64) -> TriMesh {
    let base = icosphere(1, radius);
    let verts: Vec<Point3<f64>> = base
        .vertices()
        .iter()
        .map(|v| {
            center
                + v.coords
                + Vector3::new(
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                ) * radius
        })
        .collect();
    TriMesh::new(verts, base.faces().to_vec()).unwrap()
}

// ---------------------------------------------------------------------------
// Oracles: straight-line textbook implementations of the definitions.
// ---------------------------------------------------------------------------

/// Naive weighted Hausdorff distance: literal double loop over all pixels
/// and all boundary points, using the library's documented constants.
pub fn naive_whd(prob: &[f64], dims: [usize; 2], ypts: &[(f64, f64)]) -> f64 {
    let alpha = meshmotion::losses::WHD_ALPHA;
    let eps = meshmotion::losses::WHD_EPS;
    let floor = 1e-12;
    let npix = dims[0] * dims[1];
    let d_max = (((dims[0] - 1).pow(2) + (dims[1] - 1).pow(2)) as f64).sqrt();
    let coord = |i: usize| ((i % dims[0]) as f64, (i / dims[0]) as f64);
    let dist =
        |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();

    let s: f64 = prob.iter().sum();
    let mut term1 = 0.0;
    for i in 0..npix {
        if prob[i] != 0.0 {
            let dmin = ypts
                .iter()
                .map(|y| dist(coord(i), *y))
                .fold(f64::INFINITY, f64::min);
            term1 += prob[i] * dmin;
        }
    }
    term1 /= s + eps;

    let mut term2 = 0.0;
    for y in ypts {
        let mut acc = 0.0;
        for i in 0..npix {
            let d = dist(coord(i), *y);
            let f = (prob[i] * d + (1.0 - prob[i]) * d_max).max(floor);
            acc += f.powf(alpha);
        }
        term2 += (acc / npix as f64).powf(1.0 / alpha);
    }
    term2 /= ypts.len() as f64;
    term1 + term2
}

/// Naive symmetric Hausdorff distance over mm-scaled points.
pub fn naive_hausdorff(
    a: &[[f64; 2]],
    sa: [f64; 2],
    b: &[[f64; 2]],
    sb: [f64; 2],
) -> f64 {
    let scale = |pts: &[[f64; 2]], s: [f64; 2]| -> Vec<[f64; 2]> {
        pts.iter().map(|p| [p[0] * s[0], p[1] * s[1]]).collect()
    };
    let am = scale(a, sa);
    let bm = scale(b, sb);
    let mut h = 0.0f64;
    for p in &am {
        let mut dmin = f64::INFINITY;
        for q in &bm {
            dmin = dmin.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
        h = h.max(dmin);
    }
    for q in &bm {
        let mut dmin = f64::INFINITY;
        for p in &am {
            dmin = dmin.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
        h = h.max(dmin);
    }
    h
}

/// Naive symmetric mean surface distance: exhaustive all-triangles nearest
/// search per vertex.
pub fn naive_msd(a: &TriMesh, b: &TriMesh) -> f64 {
    use meshmotion::metrics::point_triangle_distance_sq;
    let one_sided = |from: &TriMesh, to: &TriMesh| {
        let mut acc = 0.0;
        for p in from.vertices() {
            let mut best = f64::INFINITY;
            for f in to.faces() {
                let v = to.vertices();
                best = best.min(point_triangle_distance_sq(p, &v[f[0]], &v[f[1]], &v[f[2]]));
            }
            acc += best.sqrt();
        }
        acc / from.n_vertices() as f64
    };
    0.5 * (one_sided(a, b) + one_sided(b, a))
}

/// Naive spatial-transformer resample, written independently: world-space
/// sample point per voxel, manual border clamp, manual trilinear weights.
/// Exactly zero displacement copies the voxel's own value (part of the warp
/// definition).
pub fn naive_warp(moving: &ImageVolume, field: &MotionField) -> ImageVolume {
    let g = &moving.geom;
    let dims = g.dims;
    let n = g.n_voxels();
    let data = moving.channel(0);
    let mut out = vec![0.0f64; n];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let i = x + dims[0] * (y + dims[1] * z);
                let p = g.voxel_to_world(Vector3::new(x as f64, y as f64, z as f64));
                let d = Vector3::new(
                    field.disp()[i],
                    field.disp()[n + i],
                    field.disp()[2 * n + i],
                );
                if d == Vector3::zeros() {
                    out[i] = data[i];
                    continue;
                }
                let gc = g.world_to_voxel(p + d);
                let mut c = [0.0f64; 3];
                for ax in 0..3 {
                    c[ax] = gc[ax].clamp(0.0, (dims[ax] - 1) as f64);
                }
                let x0 = (c[0].floor() as usize).min(dims[0] - 2);
                let y0 = (c[1].floor() as usize).min(dims[1] - 2);
                let z0 = (c[2].floor() as usize).min(dims[2] - 2);
                let fx = c[0] - x0 as f64;
                let fy = c[1] - y0 as f64;
                let fz = c[2] - z0 as f64;
                let at = |xx: usize, yy: usize, zz: usize| data[xx + dims[0] * (yy + dims[1] * zz)];
                let mut acc = 0.0;
                for (dz, wz) in [(0, 1.0 - fz), (1, fz)] {
                    for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
                        for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                            acc += wx * wy * wz * at(x0 + dx, y0 + dy, z0 + dz);
                        }
                    }
                }
                out[i] = acc;
            }
        }
    }
    ImageVolume::new(g.clone(), 1, out).unwrap()
}

// ---------------------------------------------------------------------------
// Finite-difference comparison.
// ---------------------------------------------------------------------------

/// Assert `analytic` and `fd` agree to `rtol`: each component must satisfy
/// |a - f| <= rtol * max(|a|, |f|, scale) where scale is the gradient's
/// infinity norm (guards genuinely-zero components against roundoff noise).
pub fn assert_grad_close(analytic: &[f64], fd: &[f64], rtol: f64, label: &str) {
    assert_eq!(analytic.len(), fd.len(), "{label}: length mismatch");
    let scale = analytic
        .iter()
        .chain(fd.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    for (i, (a, f)) in analytic.iter().zip(fd).enumerate() {
        let tol = rtol * a.abs().max(f.abs()).max(scale);
        assert!(
            (a - f).abs() <= tol,
            "{label}: component {i}: analytic {a:e} vs fd {f:e} (tol {tol:e})"
        );
    }
}
