//! Command-line front end: phantom generation, tracking, slicing,
//! evaluation and batch reporting.
//!
//! Machine-readable results go to stdout as JSON or CSV; progress and
//! diagnostics go to stderr. Exit codes: 0 ok, 2 usage/validation,
//! 3 i/o, 4 numerical failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use meshmotion::error::Error;
use meshmotion::losses::LossWeights;
use meshmotion::manifest::Manifest;
use meshmotion::metrics::{boundf, hausdorff_2d, mean_surface_distance, plane_contour, MetricReport};
use meshmotion::tracker::{track_sequence, EdInputs, FrameInputs, SequenceOptions, TrackConfig, TrackResult};
use meshmotion::{io, phantom, rasterizer, ImagePlane, PhantomSpec, View};

#[derive(Parser)]
#[command(name = "meshmotion", version, about = "Mesh motion tracking from multi-view images")]
struct Cli {
    /// Override the random seed used by the subcommand.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Frame-level parallelism for `track`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic phantom corpus with ground truth.
    Phantom(PhantomArgs),
    /// Track motion from a reference frame to target frames.
    Track(TrackArgs),
    /// Slice a mesh against a plane into a probability map.
    Slice(SliceArgs),
    /// Compare a predicted mesh and contours against ground truth.
    Evaluate(EvaluateArgs),
    /// Evaluate every tracked frame of a corpus into a CSV table.
    Report(ReportArgs),
}

#[derive(Args)]
struct PhantomArgs {
    /// Phantom spec JSON; defaults to the standard phantom.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrackArgs {
    /// Corpus manifest; frame 0 is the reference.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated frame indices to track (manifest mode; default all > 0).
    #[arg(long, value_delimiter = ',')]
    frames: Option<Vec<usize>>,
    /// Reference mesh (explicit mode).
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long = "ed-sa")]
    ed_sa: Option<PathBuf>,
    #[arg(long = "ed-2ch")]
    ed_2ch: Option<PathBuf>,
    #[arg(long = "ed-4ch")]
    ed_4ch: Option<PathBuf>,
    #[arg(long = "t-sa")]
    t_sa: Option<PathBuf>,
    #[arg(long = "t-2ch")]
    t_2ch: Option<PathBuf>,
    #[arg(long = "t-4ch")]
    t_4ch: Option<PathBuf>,
    #[arg(long = "b-sa")]
    b_sa: Option<PathBuf>,
    #[arg(long = "b-2ch")]
    b_2ch: Option<PathBuf>,
    #[arg(long = "b-4ch")]
    b_4ch: Option<PathBuf>,
    /// Views to use (sa, 2ch/lax1, 4ch/lax2).
    #[arg(long, value_delimiter = ',')]
    views: Option<Vec<String>>,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 300.0)]
    lambda: f64,
    #[arg(long, default_value_t = 200.0)]
    beta: f64,
    #[arg(long, default_value_t = 3.0)]
    tau: f64,
    #[arg(long = "control-spacing", default_value_t = 4)]
    control_spacing: usize,
    /// Initialize each frame from the previous frame's parameters.
    #[arg(long = "warm-start")]
    warm_start: bool,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SliceArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Plane file providing geometry, dims and slice coordinate.
    #[arg(long)]
    plane: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long = "pred-mesh")]
    pred_mesh: PathBuf,
    #[arg(long = "gt-mesh")]
    gt_mesh: PathBuf,
    /// Predicted contour maps as view=path pairs (comma separated).
    #[arg(long = "pred-contours", value_delimiter = ',')]
    pred_contours: Vec<String>,
    /// Ground-truth contour maps as view=path pairs.
    #[arg(long = "gt-contours", value_delimiter = ',')]
    gt_contours: Vec<String>,
    /// Boundary F-score tolerance in pixels.
    #[arg(long, default_value_t = 2.0)]
    theta: f64,
    /// Also print a CSV row (with header) for batch assembly.
    #[arg(long)]
    csv: bool,
    /// Frame index used in the CSV row.
    #[arg(long, default_value_t = 0)]
    frame: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory holding `frame_XXX/` outputs from `track`.
    #[arg(long = "track-dir")]
    track_dir: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    theta: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

const CSV_HEADER: &str = "frame,msd_mm,hd_sa,hd_lax1,hd_lax2,boundf_sa,boundf_lax1,boundf_lax2";

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn log(quiet: bool, msg: &str) {
    if !quiet {
        eprintln!("{msg}");
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Phantom(args) => cmd_phantom(args, cli.seed, cli.quiet),
        Cmd::Track(args) => cmd_track(args, cli.seed, cli.jobs, cli.quiet),
        Cmd::Slice(args) => cmd_slice(args),
        Cmd::Evaluate(args) => cmd_evaluate(args),
        Cmd::Report(args) => cmd_report(args),
    }
}

fn cmd_phantom(args: PhantomArgs, seed: Option<u64>, quiet: bool) -> Result<(), Error> {
    let mut spec: PhantomSpec = match &args.spec {
        Some(path) => {
            let file = std::fs::File::open(path)?;
            serde_json::from_reader(std::io::BufReader::new(file))?
        }
        None => PhantomSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    log(quiet, &format!("generating {} frames into {}", spec.frames, args.out_dir.display()));
    let manifest = phantom::generate_corpus(&spec, &args.out_dir)?;
    println!(
        "{}",
        serde_json::json!({
            "out_dir": args.out_dir.display().to_string(),
            "frames": manifest.frames.len(),
        })
    );
    Ok(())
}

fn parse_views(views: &Option<Vec<String>>) -> Result<std::collections::BTreeSet<View>, Error> {
    match views {
        None => Ok(View::ALL.into_iter().collect()),
        Some(names) => names.iter().map(|s| View::from_str(s)).collect(),
    }
}

fn track_config(args: &TrackArgs, seed: Option<u64>) -> Result<TrackConfig, Error> {
    let cfg = TrackConfig {
        weights: LossWeights {
            lambda: args.lambda,
            beta: args.beta,
            tau: args.tau,
        },
        control_spacing: args.control_spacing,
        iters: args.iters,
        lr: args.lr,
        seed: seed.unwrap_or(0),
        views: parse_views(&args.views)?,
        ..TrackConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

struct TrackJob {
    t: usize,
    inputs: FrameInputs,
}

fn load_boundary_triplet(
    sa: Option<&Path>,
    lax1: Option<&Path>,
    lax2: Option<&Path>,
) -> Result<BTreeMap<View, ImagePlane>, Error> {
    let mut boundaries = BTreeMap::new();
    if let Some(p) = sa {
        boundaries.insert(View::Sa, io::read_plane(p)?);
    }
    if let Some(p) = lax1 {
        boundaries.insert(View::Lax1, io::read_plane(p)?);
    }
    if let Some(p) = lax2 {
        boundaries.insert(View::Lax2, io::read_plane(p)?);
    }
    Ok(boundaries)
}

fn cmd_track(args: TrackArgs, seed: Option<u64>, jobs: usize, quiet: bool) -> Result<(), Error> {
    let cfg = track_config(&args, seed)?;
    let (mesh0, ed, jobs_list) = if let Some(manifest_path) = &args.manifest {
        let (manifest, root) = Manifest::load(manifest_path)?;
        if manifest.frames.is_empty() {
            return Err(Error::InvalidArgument("manifest has no frames".into()));
        }
        let ed_rec = &manifest.frames[0];
        let mesh0 = io::read_obj(&root.join(&ed_rec.mesh))?;
        let ed = EdInputs {
            sa: io::read_volume(&root.join(&ed_rec.sa))?,
        };
        let wanted: Vec<usize> = match &args.frames {
            Some(list) => list.clone(),
            None => manifest.frames.iter().skip(1).map(|r| r.t).collect(),
        };
        let mut jobs_list = Vec::new();
        for t in wanted {
            let rec = manifest
                .frames
                .iter()
                .find(|r| r.t == t)
                .ok_or_else(|| Error::InvalidArgument(format!("frame {t} not in manifest")))?;
            let inputs = FrameInputs {
                sa: io::read_volume(&root.join(&rec.sa))?,
                boundaries: load_boundary_triplet(
                    Some(&root.join(&rec.b_sa)),
                    Some(&root.join(&rec.b_lax1)),
                    Some(&root.join(&rec.b_lax2)),
                )?,
            };
            jobs_list.push(TrackJob { t, inputs });
        }
        (mesh0, ed, jobs_list)
    } else {
        let need = |opt: &Option<PathBuf>, name: &str| -> Result<PathBuf, Error> {
            opt.clone().ok_or_else(|| {
                Error::InvalidArgument(format!("--{name} is required without --manifest"))
            })
        };
        let mesh0 = io::read_obj(&need(&args.mesh, "mesh")?)?;
        let ed = EdInputs {
            sa: io::read_volume(&need(&args.ed_sa, "ed-sa")?)?,
        };
        // Long-axis intensity images are accepted for interface completeness
        // and validated if given; the objective reads intensity only from
        // the short-axis volume.
        for p in [&args.ed_2ch, &args.ed_4ch, &args.t_2ch, &args.t_4ch]
            .into_iter()
            .flatten()
        {
            io::read_plane(p)?;
        }
        let inputs = FrameInputs {
            sa: io::read_volume(&need(&args.t_sa, "t-sa")?)?,
            boundaries: load_boundary_triplet(
                args.b_sa.as_deref(),
                args.b_2ch.as_deref(),
                args.b_4ch.as_deref(),
            )?,
        };
        (mesh0, ed, vec![TrackJob { t: 1, inputs }])
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let frames: Vec<FrameInputs> = jobs_list.iter().map(|j| j.inputs.clone()).collect();
    let opts = SequenceOptions {
        warm_start: args.warm_start,
        jobs,
    };
    log(quiet, &format!("tracking {} frame(s)", frames.len()));
    let results = track_sequence(&mesh0, &ed, &frames, &cfg, &opts);

    let single = args.manifest.is_none();
    let mut summaries = Vec::new();
    let mut first_err: Option<Error> = None;
    for (job, result) in jobs_list.iter().zip(results) {
        match result {
            Ok(res) => {
                let dir = if single {
                    args.out_dir.clone()
                } else {
                    let d = args.out_dir.join(format!("frame_{:03}", job.t));
                    std::fs::create_dir_all(&d)?;
                    d
                };
                write_result(&dir, &res)?;
                log(
                    quiet,
                    &format!(
                        "frame {}: total {:.6} -> {:.6}{}",
                        job.t,
                        res.loss_history.first().map(|r| r.total).unwrap_or(f64::NAN),
                        res.loss_history.last().map(|r| r.total).unwrap_or(f64::NAN),
                        if res.converged { " (converged)" } else { "" }
                    ),
                );
                summaries.push(serde_json::json!({
                    "t": job.t,
                    "final": res.loss_history.last(),
                    "converged": res.converged,
                }));
            }
            Err(e) => {
                log(quiet, &format!("frame {} failed: {e}", job.t));
                if let Error::Diverged { iter, last } = &e {
                    summaries.push(serde_json::json!({
                        "t": job.t,
                        "diverged_at": iter,
                        "last": last,
                    }));
                }
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if single {
        match (&first_err, summaries.first()) {
            (None, Some(s)) => println!("{}", serde_json::to_string(&s["final"])?),
            (Some(_), Some(s)) => println!("{}", serde_json::to_string(s)?),
            _ => {}
        }
    } else {
        println!("{}", serde_json::to_string(&summaries)?);
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn write_result(dir: &Path, res: &TrackResult) -> Result<(), Error> {
    io::write_obj(&dir.join("mesh_t.obj"), &res.mesh_t)?;
    let dv_rows: Vec<[f64; 3]> = res.dv.iter().map(|d| [d.x, d.y, d.z]).collect();
    serde_json::to_writer(
        std::io::BufWriter::new(std::fs::File::create(dir.join("dv.json"))?),
        &dv_rows,
    )?;
    io::write_volume(&dir.join("field.raw"), &res.field.to_volume())?;
    serde_json::to_writer(
        std::io::BufWriter::new(std::fs::File::create(dir.join("losses.json"))?),
        &res.loss_history,
    )?;
    Ok(())
}

fn cmd_slice(args: SliceArgs) -> Result<(), Error> {
    let mesh = io::read_obj(&args.mesh)?;
    let plane = io::read_plane(&args.plane)?;
    let probs = rasterizer::soft_slice(&mesh, &plane.frame, args.tau)?;
    let map = rasterizer::splat(&probs, &plane.frame, plane.dims)?;
    io::write_plane(&args.out, &map.plane)?;
    println!(
        "{}",
        serde_json::json!({
            "selected_vertices": probs.entries.len(),
            "out": args.out.display().to_string(),
        })
    );
    Ok(())
}

fn parse_view_paths(pairs: &[String]) -> Result<BTreeMap<View, PathBuf>, Error> {
    let mut out = BTreeMap::new();
    for pair in pairs {
        let (view, path) = pair.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("expected view=path, got '{pair}'"))
        })?;
        out.insert(View::from_str(view)?, PathBuf::from(path));
    }
    Ok(out)
}

fn contour_points(plane: &ImagePlane) -> Vec<[f64; 2]> {
    meshmotion::metrics::extract_contour(plane, 0.5)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let pred_mesh = io::read_obj(&args.pred_mesh)?;
    let gt_mesh = io::read_obj(&args.gt_mesh)?;
    let msd = mean_surface_distance(&pred_mesh, &gt_mesh);

    let pred_maps = parse_view_paths(&args.pred_contours)?;
    let gt_maps = parse_view_paths(&args.gt_contours)?;
    let mut hd_mm = BTreeMap::new();
    let mut boundf_pct = BTreeMap::new();
    for (view, pred_path) in &pred_maps {
        let Some(gt_path) = gt_maps.get(view) else {
            continue;
        };
        let pred = io::read_plane(pred_path)?;
        let gt = io::read_plane(gt_path)?;
        let p_pts = contour_points(&pred);
        let g_pts = contour_points(&gt);
        hd_mm.insert(
            *view,
            hausdorff_2d(&p_pts, pred.frame.spacing, &g_pts, gt.frame.spacing)?,
        );
        boundf_pct.insert(*view, boundf(&p_pts, &g_pts, args.theta)?);
    }
    let report = MetricReport {
        msd_mm: msd,
        hd_mm,
        boundf_pct,
    };
    println!("{}", serde_json::to_string(&report)?);
    if args.csv {
        println!("{CSV_HEADER}");
        println!("{}", csv_row(args.frame, &report));
    }
    Ok(())
}

fn csv_cell(v: Option<&f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => String::new(),
    }
}

fn csv_row(frame: usize, r: &MetricReport) -> String {
    format!(
        "{},{:.6},{},{},{},{},{},{}",
        frame,
        r.msd_mm,
        csv_cell(r.hd_mm.get(&View::Sa)),
        csv_cell(r.hd_mm.get(&View::Lax1)),
        csv_cell(r.hd_mm.get(&View::Lax2)),
        csv_cell(r.boundf_pct.get(&View::Sa)),
        csv_cell(r.boundf_pct.get(&View::Lax1)),
        csv_cell(r.boundf_pct.get(&View::Lax2)),
    )
}

fn cmd_report(args: ReportArgs) -> Result<(), Error> {
    let (manifest, root) = Manifest::load(&args.manifest)?;
    let mut rows = vec![CSV_HEADER.to_string()];
    for rec in manifest.frames.iter().skip(1) {
        let frame_dir = args.track_dir.join(format!("frame_{:03}", rec.t));
        let pred_path = frame_dir.join("mesh_t.obj");
        if !pred_path.exists() {
            continue;
        }
        let pred = io::read_obj(&pred_path)?;
        let gt = io::read_obj(&root.join(&rec.mesh))?;
        let msd = mean_surface_distance(&pred, &gt);
        let mut hd_mm = BTreeMap::new();
        let mut boundf_pct = BTreeMap::new();
        for (view, bpath) in [
            (View::Sa, &rec.b_sa),
            (View::Lax1, &rec.b_lax1),
            (View::Lax2, &rec.b_lax2),
        ] {
            let bplane = io::read_plane(&root.join(bpath))?;
            let p_pts = plane_contour(&pred, &bplane.frame);
            let g_pts = plane_contour(&gt, &bplane.frame);
            hd_mm.insert(
                view,
                hausdorff_2d(&p_pts, bplane.frame.spacing, &g_pts, bplane.frame.spacing)?,
            );
            boundf_pct.insert(view, boundf(&p_pts, &g_pts, args.theta)?);
        }
        let report = MetricReport {
            msd_mm: msd,
            hd_mm,
            boundf_pct,
        };
        rows.push(csv_row(rec.t, &report));
    }
    let csv = rows.join("\n") + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
