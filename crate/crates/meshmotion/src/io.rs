//! File formats: OBJ meshes and raw+JSON volumes/planes.
//!
//! The raw format is a little-endian 32-bit float array in x-fastest order
//! (channel-planar for 3-channel data) next to a JSON sidecar describing the
//! geometry. A volume `foo.raw` pairs with `foo.json`; readers and writers
//! accept either path and derive the other by swapping the extension.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImagePlane, ImageVolume, PlaneFrame, TriMesh, VolumeGeometry};

/// OBJ subset: only `v x y z` and `f i j k` (1-based) lines, plus blank
/// lines and `#` comments. Other line types and face arities are rejected.
pub fn read_obj(path: &Path) -> Result<TriMesh> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let kind = tok.next().unwrap();
        let rest: Vec<&str> = tok.collect();
        match kind {
            "v" => {
                if rest.len() != 3 {
                    return Err(Error::Format(format!(
                        "{}:{}: vertex line needs 3 coordinates",
                        path.display(),
                        ln + 1
                    )));
                }
                let mut c = [0.0f64; 3];
                for (i, t) in rest.iter().enumerate() {
                    c[i] = t.parse::<f64>().map_err(|_| {
                        Error::Format(format!(
                            "{}:{}: bad coordinate '{t}'",
                            path.display(),
                            ln + 1
                        ))
                    })?;
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            "f" => {
                if rest.len() != 3 {
                    return Err(Error::Format(format!(
                        "{}:{}: only triangular faces are supported (got {} indices)",
                        path.display(),
                        ln + 1,
                        rest.len()
                    )));
                }
                let mut idx = [0usize; 3];
                for (i, t) in rest.iter().enumerate() {
                    let v: usize = t.parse().map_err(|_| {
                        Error::Format(format!(
                            "{}:{}: bad face index '{t}' (plain 1-based integers only)",
                            path.display(),
                            ln + 1
                        ))
                    })?;
                    if v == 0 {
                        return Err(Error::Format(format!(
                            "{}:{}: face indices are 1-based",
                            path.display(),
                            ln + 1
                        )));
                    }
                    idx[i] = v - 1;
                }
                faces.push(idx);
            }
            other => {
                return Err(Error::Format(format!(
                    "{}:{}: unsupported line type '{other}'",
                    path.display(),
                    ln + 1
                )));
            }
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn write_obj(path: &Path, mesh: &TriMesh) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct VolumeSidecar {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    /// Row-major 3x3; column j is the world direction of voxel axis j.
    direction: [[f64; 3]; 3],
    channels: usize,
}

#[derive(Serialize, Deserialize)]
struct PlaneSidecar {
    dims: [usize; 2],
    spacing: [f64; 2],
    origin: [f64; 3],
    row_dir: [f64; 3],
    col_dir: [f64; 3],
    normal: [f64; 3],
    slice_coord: f64,
}

fn raw_and_json(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("raw"), path.with_extension("json"))
}

fn write_raw_f32(path: &Path, data: &[f64]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for &v in data {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_raw_f32(path: &Path, expect: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != expect * 4 {
        return Err(Error::Format(format!(
            "{}: expected {} bytes ({expect} f32 values), found {}",
            path.display(),
            expect * 4,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn write_volume(path: &Path, vol: &ImageVolume) -> Result<()> {
    let (raw, json) = raw_and_json(path);
    let g = &vol.geom;
    let sidecar = VolumeSidecar {
        dims: g.dims,
        spacing: [g.spacing.x, g.spacing.y, g.spacing.z],
        origin: [g.origin.x, g.origin.y, g.origin.z],
        direction: [
            [g.direction[(0, 0)], g.direction[(0, 1)], g.direction[(0, 2)]],
            [g.direction[(1, 0)], g.direction[(1, 1)], g.direction[(1, 2)]],
            [g.direction[(2, 0)], g.direction[(2, 1)], g.direction[(2, 2)]],
        ],
        channels: vol.channels,
    };
    let file = File::create(&json)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &sidecar)?;
    write_raw_f32(&raw, vol.data())
}

pub fn read_volume(path: &Path) -> Result<ImageVolume> {
    let (raw, json) = raw_and_json(path);
    let sidecar: VolumeSidecar = serde_json::from_reader(BufReader::new(File::open(&json)?))?;
    let direction = Matrix3::from_rows(&[
        Vector3::from(sidecar.direction[0]).transpose(),
        Vector3::from(sidecar.direction[1]).transpose(),
        Vector3::from(sidecar.direction[2]).transpose(),
    ]);
    let geom = VolumeGeometry::new(
        sidecar.dims,
        Vector3::from(sidecar.spacing),
        Point3::from(Vector3::from(sidecar.origin)),
        direction,
    )?;
    let data = read_raw_f32(&raw, geom.n_voxels() * sidecar.channels)?;
    ImageVolume::new(geom, sidecar.channels, data)
}

pub fn write_plane(path: &Path, plane: &ImagePlane) -> Result<()> {
    let (raw, json) = raw_and_json(path);
    let f = &plane.frame;
    let sidecar = PlaneSidecar {
        dims: plane.dims,
        spacing: f.spacing,
        origin: [f.origin.x, f.origin.y, f.origin.z],
        row_dir: [f.row_dir.x, f.row_dir.y, f.row_dir.z],
        col_dir: [f.col_dir.x, f.col_dir.y, f.col_dir.z],
        normal: [f.normal.x, f.normal.y, f.normal.z],
        slice_coord: f.slice_coord,
    };
    let file = File::create(&json)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &sidecar)?;
    write_raw_f32(&raw, plane.data())
}

pub fn read_plane(path: &Path) -> Result<ImagePlane> {
    let (raw, json) = raw_and_json(path);
    let sidecar: PlaneSidecar = serde_json::from_reader(BufReader::new(File::open(&json)?))?;
    let frame = PlaneFrame::new(
        sidecar.spacing,
        Point3::from(Vector3::from(sidecar.origin)),
        Vector3::from(sidecar.row_dir),
        Vector3::from(sidecar.col_dir),
        Vector3::from(sidecar.normal),
        sidecar.slice_coord,
    )?;
    let data = read_raw_f32(&raw, sidecar.dims[0] * sidecar.dims[1])?;
    ImagePlane::new(frame, sidecar.dims, data)
}
