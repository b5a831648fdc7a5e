use std::fs;
use std::path::{Path, PathBuf};

use lidar_odometry::analysis::{evaluate, loss_landscape, EvalOptions};
use lidar_odometry::geom::{relative_pose, Pose};
use lidar_odometry::imaging::{
    write_normal_csv, write_normal_ppm, write_vertex_csv, write_vertex_ppm, Frame, ProjectionConfig,
};
use lidar_odometry::ingest::{
    encode_kitti_bin, load_cloud, load_trajectory, write_kitti_poses, write_trajectory, write_tum, IngestError,
    PointCloud, Trajectory,
};
use lidar_odometry::solver::{pair_stats_csv, Odometer, SolverError};

use crate::config::{reference_pose, RunConfig};
use crate::synth::{generate, SynthSpec};
use crate::CliError;

/// Where a command's scans come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanSource {
    /// A directory of scans, or a single scan file.
    Directory(PathBuf),
    Pair(PathBuf, PathBuf),
    Synthetic(SynthSpec),
}

fn ingest_error(e: IngestError) -> CliError {
    match e {
        IngestError::Format { .. } => CliError::Format(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

fn scan_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if dir.is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot read scan directory {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|x| x.to_str()), Some("bin" | "csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("no .bin or .csv scans in {}", dir.display())));
    }
    Ok(files)
}

fn load_scans(files: &[PathBuf]) -> Result<Vec<PointCloud>, CliError> {
    files.iter().map(|f| load_cloud(f).map_err(ingest_error)).collect()
}

/// Scans of `source`, plus ground truth when synthetic.
fn scans_of(
    cfg: &RunConfig,
    source: &ScanSource,
    proj: &ProjectionConfig,
) -> Result<(Vec<PointCloud>, Option<Trajectory>), CliError> {
    match source {
        ScanSource::Directory(dir) => Ok((load_scans(&scan_files(dir)?)?, None)),
        ScanSource::Pair(a, b) => Ok((load_scans(&[a.clone(), b.clone()])?, None)),
        ScanSource::Synthetic(spec) => {
            let seq = generate(spec, cfg.seed, proj);
            Ok((seq.scans, Some(seq.ground_truth)))
        }
    }
}

/// Writes every file under `dir` or none of them: contents go to
/// `.partial` siblings first and are renamed once all writes succeeded.
fn commit(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    let fail = |what: &Path, e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", what.display()));
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(files.len());
    let result = (|| {
        for (name, bytes) in files {
            let target = dir.join(name);
            let parent = target.parent().unwrap_or(dir);
            fs::create_dir_all(parent).map_err(|e| fail(parent, e))?;
            let tmp = target.with_file_name(format!(
                ".{}.partial",
                target.file_name().and_then(|n| n.to_str()).unwrap_or("out")
            ));
            fs::write(&tmp, bytes).map_err(|e| fail(&tmp, e))?;
            staged.push((tmp, target));
        }
        for (tmp, target) in &staged {
            fs::rename(tmp, target).map_err(|e| fail(target, e))?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::InvalidOptions(_) | SolverError::ConfigMismatch => CliError::Config(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

fn dump_maps(frame: &Frame, tag: &str, csv: bool, files: &mut Vec<(String, Vec<u8>)>) {
    let mut buf = Vec::new();
    write_vertex_ppm(frame.vertex_map(), &mut buf).expect("writing to memory");
    files.push((format!("vertex{tag}.ppm"), buf));
    let mut buf = Vec::new();
    write_normal_ppm(frame.normal_map(), &mut buf).expect("writing to memory");
    files.push((format!("normal{tag}.ppm"), buf));
    if csv {
        let mut buf = Vec::new();
        write_vertex_csv(frame.vertex_map(), &mut buf).expect("writing to memory");
        files.push((format!("vertex{tag}.csv"), buf));
        let mut buf = Vec::new();
        write_normal_csv(frame.normal_map(), &mut buf).expect("writing to memory");
        files.push((format!("normal{tag}.csv"), buf));
    }
}

/// Writes `trajectory_kitti.txt`, `trajectory_tum.txt`, `pair_stats.csv`,
/// `run_config.txt` and, for synthetic input, `groundtruth.txt`.
pub fn cmd_odometry(cfg: &RunConfig, source: &ScanSource) -> Result<String, CliError> {
    let proj = cfg.projection()?;
    let mut odometer = Odometer::new(cfg.solver.clone()).map_err(solver_error)?;
    let mut gt = None;
    match source {
        ScanSource::Directory(dir) => {
            for file in scan_files(dir)? {
                let scan = load_cloud(&file).map_err(ingest_error)?;
                odometer.push(Frame::from_cloud(&scan, &proj, cfg.gap_threshold));
            }
        }
        other => {
            let (scans, truth) = scans_of(cfg, other, &proj)?;
            for scan in &scans {
                odometer.push(Frame::from_cloud(scan, &proj, cfg.gap_threshold));
            }
            gt = truth;
        }
    }
    let odo = odometer.finish().map_err(solver_error)?;
    let failed = odo.pairs.iter().filter(|p| p.failure.is_some()).count();

    let mut files = vec![
        (
            "trajectory_kitti.txt".to_string(),
            write_kitti_poses(&odo.trajectory).into_bytes(),
        ),
        (
            "trajectory_tum.txt".to_string(),
            write_tum(&odo.trajectory).into_bytes(),
        ),
        ("pair_stats.csv".to_string(), pair_stats_csv(&odo.pairs).into_bytes()),
        ("run_config.txt".to_string(), cfg.to_text().into_bytes()),
    ];
    if let Some(gt) = &gt {
        files.push((
            "groundtruth.txt".to_string(),
            write_trajectory(gt, cfg.format).into_bytes(),
        ));
    }
    commit(&cfg.out, &files)?;
    Ok(format!(
        "odometry: {} poses, {failed} failed pairs -> {}\n",
        odo.trajectory.len(),
        cfg.out.display()
    ))
}

/// Writes `landscape.csv`, PPM dumps of both frames and `run_config.txt`;
/// reports the minimum cell as an offset from the reference motion.
pub fn cmd_landscape(cfg: &RunConfig, source: &ScanSource) -> Result<String, CliError> {
    let proj = cfg.projection()?;
    let source = match source {
        ScanSource::Synthetic(spec) => ScanSource::Synthetic(SynthSpec {
            frames: 2,
            ..spec.clone()
        }),
        ScanSource::Directory(dir) => {
            let files = scan_files(dir)?;
            if files.len() < 2 {
                return Err(CliError::Data(format!(
                    "landscape needs two scans in {}",
                    dir.display()
                )));
            }
            ScanSource::Pair(files[0].clone(), files[1].clone())
        }
        other => other.clone(),
    };
    let (scans, gt) = scans_of(cfg, &source, &proj)?;
    let reference = match (&cfg.reference, &gt) {
        (Some(r), _) => reference_pose(r),
        (None, Some(gt)) => relative_pose(&gt.poses()[0], &gt.poses()[1]),
        (None, None) => Pose::identity(),
    };
    let f0 = Frame::from_cloud(&scans[0], &proj, cfg.gap_threshold);
    let f1 = Frame::from_cloud(&scans[1], &proj, cfg.gap_threshold);
    let grid = loss_landscape(&f0, &f1, &reference, [cfg.axis1, cfg.axis2], &cfg.scales)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut files = vec![("landscape.csv".to_string(), grid.to_csv().into_bytes())];
    dump_maps(&f0, "_t", false, &mut files);
    dump_maps(&f1, "_next", false, &mut files);
    files.push(("run_config.txt".to_string(), cfg.to_text().into_bytes()));
    commit(&cfg.out, &files)?;
    let (a, b) = grid.min_offset();
    let (i, j) = grid.argmin();
    Ok(format!(
        "minimum offset: {}={a} {}={b} (L_uns={})\n",
        cfg.axis1.axis,
        cfg.axis2.axis,
        grid.get(i, j).l_uns
    ))
}

/// Writes `report.txt` and `report.csv`.
pub fn cmd_eval(cfg: &RunConfig, est: &Path, gt: &Path) -> Result<String, CliError> {
    let (est, _) = load_trajectory(est).map_err(ingest_error)?;
    let (gt, _) = load_trajectory(gt).map_err(ingest_error)?;
    let opts = EvalOptions {
        lengths: cfg.lengths.clone(),
        distances: cfg.distances.clone(),
        align: cfg.align,
    };
    let report = evaluate(&est, &gt, &opts).map_err(|e| CliError::Data(e.to_string()))?;
    let text = report.to_text();
    commit(
        &cfg.out,
        &[
            ("report.txt".to_string(), text.clone().into_bytes()),
            ("report.csv".to_string(), report.to_csv().into_bytes()),
        ],
    )?;
    Ok(text)
}

/// Writes `scans/NNNNNN.bin`, `groundtruth.txt` and `run_config.txt`.
pub fn cmd_synth(cfg: &RunConfig, spec: &SynthSpec) -> Result<String, CliError> {
    let proj = cfg.projection()?;
    let seq = generate(spec, cfg.seed, &proj);
    let mut files: Vec<(String, Vec<u8>)> = seq
        .scans
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("scans/{i:06}.bin"), encode_kitti_bin(s)))
        .collect();
    files.push((
        "groundtruth.txt".to_string(),
        write_trajectory(&seq.ground_truth, cfg.format).into_bytes(),
    ));
    files.push(("run_config.txt".to_string(), cfg.to_text().into_bytes()));
    commit(&cfg.out, &files)?;
    Ok(format!("synth: {} scans -> {}\n", seq.scans.len(), cfg.out.display()))
}

/// Writes `vertex.ppm`, `normal.ppm`, `vertex.csv` and `normal.csv` for the
/// first scan of `source`.
pub fn cmd_project(cfg: &RunConfig, source: &ScanSource) -> Result<String, CliError> {
    let proj = cfg.projection()?;
    let source = match source {
        ScanSource::Synthetic(spec) => ScanSource::Synthetic(SynthSpec {
            frames: 1,
            ..spec.clone()
        }),
        ScanSource::Directory(dir) => ScanSource::Directory(scan_files(dir)?.swap_remove(0)),
        other => other.clone(),
    };
    let (scans, _) = scans_of(cfg, &source, &proj)?;
    let frame = Frame::from_cloud(&scans[0], &proj, cfg.gap_threshold);
    let mut files = Vec::new();
    dump_maps(&frame, "", true, &mut files);
    commit(&cfg.out, &files)?;
    Ok(format!(
        "project: {}x{} image, {} of {} points kept, {} normals\n",
        proj.width(),
        proj.height(),
        frame.vertex_map().valid_count(),
        scans[0].len(),
        frame.normal_map().valid_count()
    ))
}
