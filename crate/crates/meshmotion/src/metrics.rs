//! Evaluation metrics: symmetric mean surface distance between meshes, 2D
//! contour Hausdorff distance, and the boundary F-score.
//!
//! Surface distance uses exact closest-point-on-triangle queries behind an
//! AABB tree; the tree only prunes provably farther boxes, so results are
//! identical to the naive all-triangles search.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImagePlane, PlaneFrame, TriMesh};
use crate::view::View;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub msd_mm: f64,
    pub hd_mm: BTreeMap<View, f64>,
    pub boundf_pct: BTreeMap<View, f64>,
}

/// Exact distance from a point to a triangle (closest point anywhere on the
/// triangle, including edges and vertices).
pub fn point_triangle_distance(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    point_triangle_distance_sq(p, a, b, c).sqrt()
}

/// Squared point-triangle distance via region classification on the
/// parameterized plane (Eberly's method), with an edge fallback for
/// geometrically degenerate triangles.
pub fn point_triangle_distance_sq(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    let e0 = b - a;
    let e1 = c - a;
    let d = a - p;
    let a00 = e0.norm_squared();
    let a01 = e0.dot(&e1);
    let a11 = e1.norm_squared();
    let b0 = e0.dot(&d);
    let b1 = e1.dot(&d);
    let det = a00 * a11 - a01 * a01;

    if det <= f64::EPSILON * a00 * a11 {
        // Degenerate: closest point lies on one of the edges.
        return point_segment_distance_sq(p, a, b)
            .min(point_segment_distance_sq(p, a, c))
            .min(point_segment_distance_sq(p, b, c));
    }

    let mut s = a01 * b1 - a11 * b0;
    let mut t = a01 * b0 - a00 * b1;

    if s + t <= det {
        if s < 0.0 {
            if t < 0.0 {
                // region 4
                if b0 < 0.0 {
                    t = 0.0;
                    s = if -b0 >= a00 { 1.0 } else { -b0 / a00 };
                } else {
                    s = 0.0;
                    t = if b1 >= 0.0 {
                        0.0
                    } else if -b1 >= a11 {
                        1.0
                    } else {
                        -b1 / a11
                    };
                }
            } else {
                // region 3
                s = 0.0;
                t = if b1 >= 0.0 {
                    0.0
                } else if -b1 >= a11 {
                    1.0
                } else {
                    -b1 / a11
                };
            }
        } else if t < 0.0 {
            // region 5
            t = 0.0;
            s = if b0 >= 0.0 {
                0.0
            } else if -b0 >= a00 {
                1.0
            } else {
                -b0 / a00
            };
        } else {
            // region 0
            s /= det;
            t /= det;
        }
    } else if s < 0.0 {
        // region 2
        let tmp0 = a01 + b0;
        let tmp1 = a11 + b1;
        if tmp1 > tmp0 {
            let numer = tmp1 - tmp0;
            let denom = a00 - 2.0 * a01 + a11;
            s = if numer >= denom { 1.0 } else { numer / denom };
            t = 1.0 - s;
        } else {
            s = 0.0;
            t = if tmp1 <= 0.0 {
                1.0
            } else if b1 >= 0.0 {
                0.0
            } else {
                -b1 / a11
            };
        }
    } else if t < 0.0 {
        // region 6
        let tmp0 = a01 + b1;
        let tmp1 = a00 + b0;
        if tmp1 > tmp0 {
            let numer = tmp1 - tmp0;
            let denom = a00 - 2.0 * a01 + a11;
            t = if numer >= denom { 1.0 } else { numer / denom };
            s = 1.0 - t;
        } else {
            t = 0.0;
            s = if tmp1 <= 0.0 {
                1.0
            } else if b0 >= 0.0 {
                0.0
            } else {
                -b0 / a00
            };
        }
    } else {
        // region 1
        let numer = (a11 + b1) - (a01 + b0);
        if numer <= 0.0 {
            s = 0.0;
        } else {
            let denom = a00 - 2.0 * a01 + a11;
            s = if numer >= denom { 1.0 } else { numer / denom };
        }
        t = 1.0 - s;
    }

    let closest = a + e0 * s + e1 * t;
    (closest - p).norm_squared()
}

fn point_segment_distance_sq(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    if len_sq == 0.0 {
        return (p - a).norm_squared();
    }
    let t = ((p - a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    (a + ab * t - p).norm_squared()
}

struct Aabb {
    lo: Vector3<f64>,
    hi: Vector3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            lo: Vector3::repeat(f64::INFINITY),
            hi: Vector3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point3<f64>) {
        for ax in 0..3 {
            self.lo[ax] = self.lo[ax].min(p[ax]);
            self.hi[ax] = self.hi[ax].max(p[ax]);
        }
    }

    fn dist_sq(&self, p: &Point3<f64>) -> f64 {
        let mut acc = 0.0;
        for ax in 0..3 {
            let d = if p[ax] < self.lo[ax] {
                self.lo[ax] - p[ax]
            } else if p[ax] > self.hi[ax] {
                p[ax] - self.hi[ax]
            } else {
                0.0
            };
            acc += d * d;
        }
        acc
    }
}

enum Node {
    Leaf {
        bbox: Aabb,
        tris: Vec<usize>,
    },
    Inner {
        bbox: Aabb,
        left: usize,
        right: usize,
    },
}

/// AABB tree over a mesh's triangles for exact nearest-surface queries.
pub struct SurfaceIndex<'a> {
    mesh: &'a TriMesh,
    nodes: Vec<Node>,
    root: usize,
}

const LEAF_SIZE: usize = 8;

impl<'a> SurfaceIndex<'a> {
    pub fn build(mesh: &'a TriMesh) -> Self {
        let mut centroids: Vec<(usize, Point3<f64>)> = mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let v = mesh.vertices();
                let c = (v[f[0]].coords + v[f[1]].coords + v[f[2]].coords) / 3.0;
                (i, Point3::from(c))
            })
            .collect();
        let mut nodes = Vec::new();
        let root = Self::build_node(mesh, &mut centroids[..], &mut nodes);
        SurfaceIndex { mesh, nodes, root }
    }

    fn tri_bbox(mesh: &TriMesh, tris: &[(usize, Point3<f64>)]) -> Aabb {
        let mut bbox = Aabb::empty();
        for (t, _) in tris {
            for &vi in &mesh.faces()[*t] {
                bbox.grow(&mesh.vertices()[vi]);
            }
        }
        bbox
    }

    fn build_node(
        mesh: &TriMesh,
        tris: &mut [(usize, Point3<f64>)],
        nodes: &mut Vec<Node>,
    ) -> usize {
        let bbox = Self::tri_bbox(mesh, tris);
        if tris.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                bbox,
                tris: tris.iter().map(|(t, _)| *t).collect(),
            });
            return nodes.len() - 1;
        }
        // Split on the longest centroid axis at the median.
        let mut cb = Aabb::empty();
        for (_, c) in tris.iter() {
            cb.grow(c);
        }
        let ext = cb.hi - cb.lo;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = tris.len() / 2;
        tris.select_nth_unstable_by(mid, |a, b| {
            a.1[axis].partial_cmp(&b.1[axis]).unwrap_or(std::cmp::Ordering::Equal)
        });
        let (lo, hi) = tris.split_at_mut(mid);
        let left = Self::build_node(mesh, lo, nodes);
        let right = Self::build_node(mesh, hi, nodes);
        nodes.push(Node::Inner { bbox, left, right });
        nodes.len() - 1
    }

    /// Exact distance from a point to the mesh surface.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = vec![self.root];
        while let Some(ni) = stack.pop() {
            match &self.nodes[ni] {
                Node::Leaf { bbox, tris } => {
                    if bbox.dist_sq(p) >= best {
                        continue;
                    }
                    for &t in tris {
                        let f = &self.mesh.faces()[t];
                        let v = self.mesh.vertices();
                        let d = point_triangle_distance_sq(p, &v[f[0]], &v[f[1]], &v[f[2]]);
                        best = best.min(d);
                    }
                }
                Node::Inner { bbox, left, right } => {
                    if bbox.dist_sq(p) >= best {
                        continue;
                    }
                    // Visit the nearer child first for tighter pruning.
                    let (dl, dr) = match (&self.nodes[*left], &self.nodes[*right]) {
                        (
                            Node::Leaf { bbox: bl, .. } | Node::Inner { bbox: bl, .. },
                            Node::Leaf { bbox: br, .. } | Node::Inner { bbox: br, .. },
                        ) => (bl.dist_sq(p), br.dist_sq(p)),
                    };
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best.sqrt()
    }
}

/// Symmetric mean surface distance: the average of the two one-sided means
/// of vertex-to-surface distances.
pub fn mean_surface_distance(a: &TriMesh, b: &TriMesh) -> f64 {
    let one_sided = |from: &TriMesh, to: &TriMesh| {
        let index = SurfaceIndex::build(to);
        let sum: f64 = from.vertices().iter().map(|v| index.distance(v)).sum();
        sum / from.n_vertices() as f64
    };
    0.5 * (one_sided(a, b) + one_sided(b, a))
}

/// Symmetric Hausdorff distance between two pixel-coordinate point sets, in
/// millimetres. Anisotropic spacing is applied per axis before measuring.
pub fn hausdorff_2d(
    a: &[[f64; 2]],
    spacing_a: [f64; 2],
    b: &[[f64; 2]],
    spacing_b: [f64; 2],
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyBoundary(
            "hausdorff distance needs non-empty point sets".into(),
        ));
    }
    let to_mm = |pts: &[[f64; 2]], s: [f64; 2]| -> Vec<[f64; 2]> {
        pts.iter().map(|p| [p[0] * s[0], p[1] * s[1]]).collect()
    };
    let am = to_mm(a, spacing_a);
    let bm = to_mm(b, spacing_b);
    let directed = |from: &[[f64; 2]], to: &[[f64; 2]]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(&am, &bm).max(directed(&bm, &am)))
}

/// Boundary F-score in percent: harmonic mean of the fraction of predicted
/// points within `theta` pixels of the ground truth and vice versa. Zero when
/// neither side matches.
pub fn boundf(pred: &[[f64; 2]], gt: &[[f64; 2]], theta: f64) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyBoundary(
            "boundary F-score needs non-empty point sets".into(),
        ));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument("theta must be positive".into()));
    }
    let within = |from: &[[f64; 2]], to: &[[f64; 2]]| {
        let hits = from
            .iter()
            .filter(|p| {
                to.iter().any(|q| {
                    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() <= theta
                })
            })
            .count();
        hits as f64 / from.len() as f64
    };
    let precision = within(pred, gt);
    let recall = within(gt, pred);
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(100.0 * 2.0 * precision * recall / (precision + recall))
}

/// Pixel coordinates with value at or above the threshold, in scan order.
pub fn extract_contour(plane: &ImagePlane, threshold: f64) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for v in 0..plane.dims[1] {
        for u in 0..plane.dims[0] {
            if plane.at(u, v) >= threshold {
                pts.push([u as f64, v as f64]);
            }
        }
    }
    pts
}

/// Exact intersection contour of a mesh with a plane, as in-plane pixel
/// coordinates: one point per mesh edge crossing the plane (plus vertices
/// lying on it). Unlike vertex splatting this is independent of where the
/// vertices sit relative to the plane.
pub fn plane_contour(mesh: &TriMesh, frame: &PlaneFrame) -> Vec<[f64; 2]> {
    let coords: Vec<_> = mesh
        .vertices()
        .iter()
        .map(|v| frame.world_to_plane(*v))
        .collect();
    let mut edges = BTreeSet::new();
    for f in mesh.faces() {
        for (i, j) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let zk = frame.slice_coord;
    let mut pts = Vec::new();
    let mut on_plane = BTreeSet::new();
    for (i, j) in edges {
        let zi = coords[i].z - zk;
        let zj = coords[j].z - zk;
        if zi.abs() < 1e-12 {
            on_plane.insert(i);
        }
        if zj.abs() < 1e-12 {
            on_plane.insert(j);
        }
        if zi * zj < 0.0 {
            let s = zi / (zi - zj);
            pts.push([
                coords[i].x + s * (coords[j].x - coords[i].x),
                coords[i].y + s * (coords[j].y - coords[i].y),
            ]);
        }
    }
    for i in on_plane {
        pts.push([coords[i].x, coords[i].y]);
    }
    pts
}
