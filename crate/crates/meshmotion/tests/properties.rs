//! Invariant and property tests across modules.

mod common;

use std::collections::BTreeMap;

use common::*;
use meshmotion::geometry::{build_adjacency, ImagePlane, TriMesh};
use meshmotion::losses::{loss_smooth, LossWeights, Objective};
use meshmotion::metrics::{boundf, extract_contour, hausdorff_2d, mean_surface_distance};
use meshmotion::motion::{warp_volume, ControlGrid, MotionField};
use meshmotion::rasterizer::{soft_slice, splat};
use meshmotion::{PlaneFrame, View};
use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn prob_map_is_translation_equivariant_along_rows() {
    // Shifting every vertex by one pixel along row_dir shifts the map by one
    // pixel (up to the cropped border column).
    let mut rng = seeded_rng(41);
    for _ in 0..10 {
        let frame = random_frame(&mut rng);
        let dims = [14usize, 12];
        let mut verts = Vec::new();
        for _ in 0..20 {
            verts.push(frame.plane_to_world(meshmotion::PlaneCoords {
                x: rng.gen_range(1.2..(dims[0] - 3) as f64),
                y: rng.gen_range(1.2..(dims[1] - 2) as f64),
                z: frame.slice_coord + rng.gen_range(-0.9..0.9),
            }));
        }
        let base = verts.len();
        let far = frame.plane_to_world(meshmotion::PlaneCoords {
            x: 0.0,
            y: 0.0,
            z: frame.slice_coord + 50.0,
        });
        verts.extend([far, far + frame.row_dir, far + frame.col_dir]);
        let mesh = TriMesh::new(verts.clone(), vec![[base, base + 1, base + 2]]).unwrap();
        let shifted_verts: Vec<Point3<f64>> = verts
            .iter()
            .map(|v| v + frame.row_dir * frame.spacing[0])
            .collect();
        let shifted = TriMesh::new(shifted_verts, vec![[base, base + 1, base + 2]]).unwrap();

        let map = splat(&soft_slice(&mesh, &frame, 3.0).unwrap(), &frame, dims).unwrap();
        let map_shifted =
            splat(&soft_slice(&shifted, &frame, 3.0).unwrap(), &frame, dims).unwrap();
        for v in 0..dims[1] {
            for u in 0..dims[0] - 1 {
                let a = map.plane.at(u, v);
                let b = map_shifted.plane.at(u + 1, v);
                assert!(
                    (a - b).abs() < 1e-12,
                    "pixel ({u},{v}): {a} vs shifted {b}"
                );
            }
        }
    }
}

#[test]
fn smoothness_is_translation_invariant_and_scales_linearly() {
    let mut rng = seeded_rng(42);
    for _ in 0..10 {
        let mesh = random_mesh(&mut rng, Point3::origin(), 4.0);
        let (v0, _) = loss_smooth(&mesh).unwrap();

        let t = Vector3::new(
            rng.gen_range(-30.0..30.0),
            rng.gen_range(-30.0..30.0),
            rng.gen_range(-30.0..30.0),
        );
        let translated = mesh
            .with_vertices(mesh.vertices().iter().map(|v| v + t).collect())
            .unwrap();
        let (v1, _) = loss_smooth(&translated).unwrap();
        assert!((v0 - v1).abs() < 1e-12 * v0.max(1.0), "translation changed smoothness");

        let centroid: Vector3<f64> =
            mesh.vertices().iter().map(|v| v.coords).sum::<Vector3<f64>>()
                / mesh.n_vertices() as f64;
        let s = rng.gen_range(0.5..3.0);
        let scaled = mesh
            .with_vertices(
                mesh.vertices()
                    .iter()
                    .map(|v| Point3::from(centroid + (v.coords - centroid) * s))
                    .collect(),
            )
            .unwrap();
        let (v2, _) = loss_smooth(&scaled).unwrap();
        assert!(
            (v2 - s * v0).abs() < 1e-9 * (s * v0),
            "uniform scaling must scale the loss linearly: {v2} vs {}",
            s * v0
        );
    }
}

#[test]
fn warp_with_zero_field_is_identity_for_any_geometry() {
    let mut rng = seeded_rng(43);
    for _ in 0..10 {
        let geom = random_geometry(&mut rng, [6, 9, 7]);
        let vol = smooth_volume(&mut rng, geom.clone());
        let out = warp_volume(&vol, &MotionField::zeros(geom)).unwrap();
        assert_eq!(out.data(), vol.data());
    }
}

#[test]
fn metrics_are_symmetric_and_rigid_invariant() {
    let mut rng = seeded_rng(44);
    for _ in 0..10 {
        let a = random_mesh(&mut rng, Point3::origin(), 4.0);
        let b = random_mesh(&mut rng, Point3::new(1.0, -0.5, 0.7), 3.5);
        let msd_ab = mean_surface_distance(&a, &b);
        let msd_ba = mean_surface_distance(&b, &a);
        assert!((msd_ab - msd_ba).abs() < 1e-12);

        // Common rigid transform leaves the metric unchanged.
        let rot = random_rotation(&mut rng);
        let t = Vector3::new(
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-20.0..20.0),
        );
        let apply = |m: &TriMesh| {
            m.with_vertices(
                m.vertices()
                    .iter()
                    .map(|v| Point3::from(rot * v.coords + t))
                    .collect(),
            )
            .unwrap()
        };
        let msd_moved = mean_surface_distance(&apply(&a), &apply(&b));
        assert!(
            (msd_ab - msd_moved).abs() < 1e-9,
            "rigid motion changed msd: {msd_ab} vs {msd_moved}"
        );

        // 2D: symmetry and max >= mean of one-sided minima.
        let mk = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| -> Vec<[f64; 2]> {
            (0..k)
                .map(|_| [rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0)])
                .collect()
        };
        let (na, nb) = (rng.gen_range(2..20), rng.gen_range(2..20));
        let pa = mk(&mut rng, na);
        let pb = mk(&mut rng, nb);
        let s = [1.0, 1.0];
        let hd = hausdorff_2d(&pa, s, &pb, s).unwrap();
        let hd_rev = hausdorff_2d(&pb, s, &pa, s).unwrap();
        assert_eq!(hd, hd_rev);
        let mean_min = |from: &[[f64; 2]], to: &[[f64; 2]]| {
            from.iter()
                .map(|p| {
                    to.iter()
                        .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                        .fold(f64::INFINITY, f64::min)
                })
                .sum::<f64>()
                / from.len() as f64
        };
        let avg = 0.5 * (mean_min(&pa, &pb) + mean_min(&pb, &pa));
        assert!(hd >= avg - 1e-12, "hd {hd} below symmetric mean {avg}");
    }
}

#[test]
fn boundf_symmetry_condition() {
    // boundf is symmetric exactly when precision and recall swap roles
    // cleanly; with equal point counts fully matched both directions it is
    // symmetric, with asymmetric coverage it need not be.
    let gt = vec![[0.0, 0.0], [1.0, 0.0]];
    let pred = vec![[0.0, 0.0], [1.0, 0.0], [50.0, 50.0]];
    let f_ab = boundf(&pred, &gt, 1.0).unwrap();
    let f_ba = boundf(&gt, &pred, 1.0).unwrap();
    assert_eq!(f_ab, f_ba); // P and R swap, harmonic mean unchanged
}

#[test]
fn loss_report_identity_on_real_evaluations() {
    let mut rng = seeded_rng(45);
    for _ in 0..5 {
        let geom = random_geometry(&mut rng, [8, 8, 8]);
        let fixed = smooth_volume(&mut rng, geom.clone());
        let moving = smooth_volume(&mut rng, geom.clone());
        let center = geom.voxel_to_world(Vector3::new(3.5, 3.5, 3.5));
        let mesh = random_mesh(&mut rng, center, 2.5);
        let mut boundaries = BTreeMap::new();
        let rot = random_rotation(&mut rng);
        let frame = PlaneFrame::new(
            [1.0, 1.0],
            center + Vector3::new(-6.0, -6.0, 0.0),
            rot.column(0).into(),
            rot.column(1).into(),
            rot.column(2).into(),
            0.0,
        )
        .unwrap();
        let dims = [16usize, 16];
        let mut b = ImagePlane::zeros(frame, dims).unwrap();
        for _ in 0..8 {
            let u = rng.gen_range(0..dims[0]);
            let v = rng.gen_range(0..dims[1]);
            b.data_mut()[u + dims[0] * v] = 1.0;
        }
        boundaries.insert(View::Sa, b);
        let weights = LossWeights {
            lambda: rng.gen_range(0.0..400.0),
            beta: rng.gen_range(0.0..300.0),
            tau: 3.0,
        };
        let objective = Objective::new(&mesh, &fixed, &moving, &boundaries, weights).unwrap();
        let mut ctrl = ControlGrid::zeros(geom.clone(), 2).unwrap();
        for p in ctrl.params_mut() {
            *p = rng.gen_range(-0.5..0.5);
        }
        let (report, _) = objective.evaluate(&ctrl).unwrap();
        let recomputed = report.shape + weights.lambda * report.sim + weights.beta * report.smooth;
        assert!(
            (report.total - recomputed).abs() <= 1e-10 * report.total.abs(),
            "report identity violated: {} vs {}",
            report.total,
            recomputed
        );
        let per_view_sum: f64 = report.shape_per_view.values().sum();
        assert!((report.shape - per_view_sum).abs() <= 1e-12 * report.shape.abs());
    }
}

#[test]
fn extract_contour_of_binary_map_is_exact() {
    let mut rng = seeded_rng(46);
    let frame = random_frame(&mut rng);
    let dims = [9usize, 7];
    let mut plane = ImagePlane::zeros(frame, dims).unwrap();
    let mut expect = Vec::new();
    for v in 0..dims[1] {
        for u in 0..dims[0] {
            if rng.gen_bool(0.3) {
                plane.data_mut()[u + dims[0] * v] = 1.0;
                expect.push([u as f64, v as f64]);
            }
        }
    }
    assert_eq!(extract_contour(&plane, 0.5), expect);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_matches_edge_list_on_arbitrary_face_soups(
        faces in prop::collection::vec((0usize..12, 0usize..12, 0usize..12), 1..40)
    ) {
        let faces: Vec<[usize; 3]> = faces.into_iter().map(|(a, b, c)| [a, b, c]).collect();
        let degenerate = faces
            .iter()
            .any(|f| f[0] == f[1] || f[1] == f[2] || f[0] == f[2]);
        match build_adjacency(&faces, 12) {
            Err(_) => prop_assert!(degenerate),
            Ok(adj) => {
                prop_assert!(!degenerate);
                let mut expect = vec![std::collections::BTreeSet::new(); 12];
                for f in &faces {
                    for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                        expect[a].insert(b);
                        expect[b].insert(a);
                    }
                }
                for i in 0..12 {
                    let got: std::collections::BTreeSet<usize> = adj[i].iter().copied().collect();
                    prop_assert_eq!(&got, &expect[i]);
                    // Sorted and deduplicated.
                    let mut sorted = adj[i].clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    prop_assert_eq!(&sorted, &adj[i]);
                }
            }
        }
    }

    #[test]
    fn obj_io_round_trips_arbitrary_coordinates(
        coords in prop::collection::vec(-1e6f64..1e6, 9..30)
    ) {
        let n = coords.len() / 3;
        let verts: Vec<Point3<f64>> = (0..n)
            .map(|i| Point3::new(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]))
            .collect();
        let faces = vec![[0, 1, 2]];
        let mesh = TriMesh::new(verts, faces).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        meshmotion::io::write_obj(&path, &mesh).unwrap();
        let back = meshmotion::io::read_obj(&path).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.faces(), mesh.faces());
    }
}
