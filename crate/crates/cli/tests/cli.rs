use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lidar-odometry"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

fn straight_kitti(n: usize, spacing: f64) -> String {
    (0..n)
        .map(|i| format!("1 0 0 {} 0 1 0 0 0 0 1 0\n", i as f64 * spacing))
        .collect()
}

#[test]
fn synthetic_odometry_writes_one_pose_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let stdout = ok(&[
        "--synth",
        "corridor:frames=5",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
        "odometry",
    ]);
    assert!(stdout.contains("5 poses, 0 failed pairs"), "{stdout}");
    assert_eq!(lines(&out.join("trajectory_kitti.txt")).len(), 5);
    assert_eq!(lines(&out.join("trajectory_tum.txt")).len(), 5);
    assert_eq!(lines(&out.join("groundtruth.txt")).len(), 5);
    assert_eq!(lines(&out.join("pair_stats.csv")).len(), 5);
    assert!(out.join("run_config.txt").is_file());

    // The estimate matches the synthetic ground truth closely.
    let eval_out = dir.path().join("eval");
    ok(&[
        "--out",
        eval_out.to_str().unwrap(),
        "eval",
        out.join("trajectory_kitti.txt").to_str().unwrap(),
        out.join("groundtruth.txt").to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(eval_out.join("report.csv")).unwrap();
    let ate: f64 = csv
        .lines()
        .find(|l| l.starts_with("ate,"))
        .and_then(|l| l.rsplit(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(ate < 0.02, "{csv}");
}

#[test]
fn scan_directory_gives_one_line_per_scan() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    ok(&[
        "--synth",
        "room:frames=3,step=0.5",
        "--format",
        "tum",
        "--out",
        seq.to_str().unwrap(),
        "synth",
    ]);
    let gt = lines(&seq.join("groundtruth.txt"));
    assert_eq!(gt.len(), 3);
    assert_eq!(gt[0].split_whitespace().count(), 8, "TUM rows have 8 fields");

    let out = dir.path().join("odo");
    ok(&[
        "--out",
        out.to_str().unwrap(),
        "odometry",
        seq.join("scans").to_str().unwrap(),
    ]);
    let traj = lines(&out.join("trajectory_kitti.txt"));
    assert_eq!(traj.len(), 3);
    assert!(traj.iter().all(|l| l.split_whitespace().count() == 12));
    assert!(!out.join("groundtruth.txt").exists());
}

#[test]
fn missing_directory_is_a_data_error_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let res = bin(&[
        "--out",
        out.to_str().unwrap(),
        "odometry",
        dir.path().join("nope").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
    assert!(!out.exists());
}

#[test]
fn landscape_of_self_pair_has_minimum_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    ok(&["--synth", "room:frames=1", "--out", seq.to_str().unwrap(), "synth"]);
    let scan = seq.join("scans/000000.bin");
    let out = dir.path().join("land");
    let stdout = ok(&[
        "--out",
        out.to_str().unwrap(),
        "landscape",
        scan.to_str().unwrap(),
        scan.to_str().unwrap(),
    ]);
    assert!(stdout.starts_with("minimum offset: x=0 y=0"), "{stdout}");
    let csv = lines(&out.join("landscape.csv"));
    assert_eq!(csv[0], "axis1,axis2,L_icp,L_fov,L_uns");
    assert_eq!(csv.len(), 442);
    for name in ["vertex_t.ppm", "normal_t.ppm", "vertex_next.ppm", "normal_next.ppm"] {
        assert!(
            fs::read(out.join(name)).unwrap().starts_with(b"P6\n720 52\n255\n"),
            "{name}"
        );
    }
}

#[test]
fn landscape_axes_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("land");
    let stdout = ok(&[
        "--synth",
        "corridor:frames=2,step=0.6",
        "--out",
        out.to_str().unwrap(),
        "landscape",
        "--axis1",
        "roll:-2:2:1",
        "--axis2",
        "yaw:-3:3:1",
    ]);
    assert!(stdout.starts_with("minimum offset: roll=0 yaw=0"), "{stdout}");
    assert_eq!(lines(&out.join("landscape.csv")).len(), 1 + 5 * 7);
}

#[test]
fn eval_identical_and_drifting() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.txt");
    fs::write(&gt, straight_kitti(1001, 1.0)).unwrap();
    let out = dir.path().join("same");
    let text = ok(&[
        "--out",
        out.to_str().unwrap(),
        "eval",
        gt.to_str().unwrap(),
        gt.to_str().unwrap(),
    ]);
    assert!(text.contains("1001"), "{text}");
    for line in fs::read_to_string(out.join("report.csv")).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] != "summary" && f[2] != "segments" && f[2] != "count" {
            assert_eq!(f[3].parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }

    let est = dir.path().join("est.txt");
    fs::write(&est, straight_kitti(1001, 1.01)).unwrap();
    let out = dir.path().join("drift");
    ok(&[
        "--out",
        out.to_str().unwrap(),
        "eval",
        "--no-align",
        est.to_str().unwrap(),
        gt.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let t_rel: f64 = csv
        .lines()
        .find(|l| l.starts_with("drift,mean,t_rel"))
        .and_then(|l| l.rsplit(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((t_rel - 1.0).abs() < 0.05, "{csv}");
}

#[test]
fn eval_accepts_mixed_kitti_and_tum() {
    let dir = tempfile::tempdir().unwrap();
    let kitti = dir.path().join("a.txt");
    let tum = dir.path().join("b.txt");
    fs::write(&kitti, straight_kitti(40, 1.0)).unwrap();
    let tum_rows: String = (0..40).map(|i| format!("{i}.0 {i} 0 0 0 0 0 1\n")).collect();
    fs::write(&tum, tum_rows).unwrap();
    let out = dir.path().join("mix");
    ok(&[
        "--out",
        out.to_str().unwrap(),
        "eval",
        kitti.to_str().unwrap(),
        tum.to_str().unwrap(),
    ]);
    assert!(out.join("report.txt").is_file());
}

#[test]
fn malformed_trajectory_exits_2_naming_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.txt");
    let bad = dir.path().join("bad.txt");
    fs::write(&good, straight_kitti(3, 1.0)).unwrap();
    fs::write(&bad, "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 oops 0 1 0 0 0 0 1 0\n").unwrap();
    let res = bin(&[
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "eval",
        bad.to_str().unwrap(),
        good.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("bad.txt:2"), "{err}");
}

#[test]
fn truncated_scan_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scans = dir.path().join("scans");
    fs::create_dir(&scans).unwrap();
    fs::write(scans.join("000000.bin"), [0u8; 17]).unwrap();
    let res = bin(&[
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "project",
        scans.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# settings\nres_h = 0.5\nwarp_factor = 9\n").unwrap();
    let res = bin(&["--config", cfg.to_str().unwrap(), "--synth", "room", "odometry"]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("run.cfg:3"), "{err}");

    assert_eq!(bin(&["--synth", "lake", "odometry"]).status.code(), Some(2));
    assert_eq!(bin(&["odometry"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_drives_projection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("proj");
    fs::write(
        &cfg,
        format!("res_h = 1.0\nres_v = 1.0\nsynth = urban\nout = {}\n", out.display()),
    )
    .unwrap();
    let stdout = ok(&["--config", cfg.to_str().unwrap(), "project"]);
    assert!(stdout.starts_with("project: 360x26 image"), "{stdout}");
    let csv = lines(&out.join("vertex.csv"));
    assert!(!csv.is_empty());
    assert!(fs::read(out.join("normal.ppm"))
        .unwrap()
        .starts_with(b"P6\n360 26\n255\n"));
}
