use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ringpot::morph::{hausdorff_distance, read_contours_csv};
use serde_json::Value;

fn ring(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../rings").join(name)
}

fn ringpot(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ringpot")).args(args).output().expect("run ringpot");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const H64: &str = "0.015625";

#[test]
fn solve_writes_the_field_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let disk = ring("disk_point.json");
    let (code, err) = ringpot(&["solve", "--ring", path_str(&disk), "--p", "inf", "--h", "0.0078125", "--out", path_str(dir.path())]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    let stats = json(&dir.path().join("stats.json"));
    assert_eq!(stats["p"], "inf");
    assert!(stats["iterations"].as_u64().unwrap() > 0);
}

#[test]
fn usage_and_validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    let disk = ring("disk_point.json");
    let touching = ring("touching.json");
    let (code, _) = ringpot(&["solve", "--ring", path_str(&disk), "--p", "1.5", "--h", "0.01", "--out", out]);
    assert_eq!(code, 1);
    let (code, err) = ringpot(&["solve", "--ring", path_str(&touching), "--h", H64, "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("compact_containment"), "{err}");
    assert!(!err.contains("nonempty"), "{err}");
    assert_eq!(ringpot(&["solve", "--h", H64]).0, 1);
    assert_eq!(ringpot(&["solve", "--ring", path_str(&disk), "--bogus"]).0, 1);
    assert_eq!(ringpot(&["verify", "--ring", path_str(&disk), "--checks", "", "--out", out]).0, 1);
    assert_eq!(ringpot(&["verify", "--ring", path_str(&disk), "--checks", "nope", "--out", out]).0, 1);
    assert_eq!(ringpot(&["morph", "--ring", path_str(&disk), "--levels", "0.5,1.2", "--out", out]).0, 1);
    assert_eq!(ringpot(&["--help"]).0, 0);
    assert_eq!(ringpot(&["--version"]).0, 0);
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let disk = ring("disk_point.json");
    let (code, _) = ringpot(&["solve", "--ring", path_str(&disk), "--h", H64, "--out", path_str(&blocker)]);
    assert_eq!(code, 2);
}

#[test]
fn morph_writes_svg_csv_and_obj() {
    let dir = tempfile::tempdir().unwrap();
    let square = ring("square_point.json");
    let (code, err) = ringpot(&[
        "morph", "--ring", path_str(&square), "--levels", "0.25,0.5,0.75", "--p", "inf", "--h", H64, "--out", path_str(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let svg = fs::read_to_string(dir.path().join("contours.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), 3);
    let obj = fs::read_to_string(dir.path().join("surface.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("f ")));
    assert_eq!(json(&dir.path().join("morph.json"))["pass"], true);
}

#[test]
fn annulus_contours_of_p8_and_inf_are_close() {
    let h = 1.0 / 128.0;
    let annulus = ring("annulus.json");
    let mut contours = Vec::new();
    for p in ["8", "inf"] {
        let dir = tempfile::tempdir().unwrap();
        let (code, err) = ringpot(&["morph", "--ring", path_str(&annulus), "--levels", "0.5", "--p", p, "--out", path_str(dir.path())]);
        assert_eq!(code, 0, "{err}");
        assert!(!dir.path().join("surface.obj").exists());
        let file = fs::File::open(dir.path().join("contours.csv")).unwrap();
        let mut read = read_contours_csv(std::io::BufReader::new(file)).unwrap();
        assert_eq!(read.len(), 1);
        contours.push(read.remove(0));
    }
    let d = hausdorff_distance(&contours[0], &contours[1]);
    assert!(d <= 4.0 * h, "{d}");
}

#[test]
fn radial_starts_on_the_disk_trace_straight_rays() {
    let dir = tempfile::tempdir().unwrap();
    let disk = ring("disk_point.json");
    let starts = ring("radial_starts.csv");
    let (code, err) = ringpot(&[
        "streamlines", "--ring", path_str(&disk), "--starts", path_str(&starts), "--h", H64, "--out", path_str(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let bundle = json(&dir.path().join("streamlines.json"));
    assert_eq!(bundle["total"], 8);
    assert_eq!(bundle["reached_inner"], 8);
    assert_eq!(bundle["properties_pass"], 8);
    for entry in bundle["entries"].as_array().unwrap() {
        let start = entry["start"].as_array().unwrap();
        let (sx, sy) = (start[0].as_f64().unwrap(), start[1].as_f64().unwrap());
        let csv = fs::read_to_string(dir.path().join(entry["file"].as_str().unwrap())).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x,y,u,speed"));
        for line in lines {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            let cross = v[1] * sy - v[2] * sx;
            assert!(cross.abs() < 1e-3, "{line}");
            assert!(v[1] * sx + v[2] * sy > 0.0);
        }
    }
}

#[test]
fn a_start_outside_the_ring_errors_without_stopping_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let starts = dir.path().join("starts.csv");
    fs::write(&starts, "x,y\n0.5,0.0\n1.5,0.0\n0.0,-0.5\n").unwrap();
    let disk = ring("disk_point.json");
    let out = dir.path().join("out");
    let (code, err) = ringpot(&["streamlines", "--ring", path_str(&disk), "--starts", path_str(&starts), "--h", H64, "--out", path_str(&out)]);
    assert_eq!(code, 0, "{err}");
    let bundle = json(&out.join("streamlines.json"));
    assert_eq!(bundle["errors"], 1);
    assert_eq!(bundle["reached_inner"], 2);
    assert!(bundle["entries"][1]["error"].is_string());
    assert!(out.join("streamline_002.csv").exists());
    assert!(!out.join("streamline_001.csv").exists());
}

#[test]
fn square_lattice_starts_reach_the_center() {
    let dir = tempfile::tempdir().unwrap();
    let square = ring("square_point.json");
    let (code, err) = ringpot(&["streamlines", "--ring", path_str(&square), "--count", "50", "--out", path_str(dir.path())]);
    assert_eq!(code, 0, "{err}");
    let bundle = json(&dir.path().join("streamlines.json"));
    assert_eq!(bundle["total"], 50);
    assert!(bundle["reached_inner"].as_u64().unwrap() >= 48, "{}", bundle["reached_inner"]);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(ring("disk_point.json"), dir.path().join("disk.json")).unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "ring = \"disk.json\"\np = 8\nh = 0.03125\nout = \"from-config\"\n").unwrap();
    let (code, err) = ringpot(&["solve", "--config", path_str(&config)]);
    assert_eq!(code, 0, "{err}");
    let stats = json(&dir.path().join("from-config/stats.json"));
    assert_eq!(stats["p"], "8");
    assert_eq!(stats["h"], 0.03125);
    let flagged = dir.path().join("flagged");
    let (code, err) = ringpot(&["solve", "--config", path_str(&config), "--p", "inf", "--h", H64, "--out", path_str(&flagged)]);
    assert_eq!(code, 0, "{err}");
    let stats = json(&flagged.join("stats.json"));
    assert_eq!(stats["p"], "inf");
    assert_eq!(stats["h"], 0.015625);
    fs::write(&config, "ring = \"disk.json\"\nbogus = 1\n").unwrap();
    assert_eq!(ringpot(&["solve", "--config", path_str(&config)]).0, 1);
}

#[test]
fn verify_runs_are_byte_identical_and_honor_expected_failures() {
    let disk = ring("disk_point.json");
    let square = ring("square_point.json");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let (code, err) = ringpot(&[
            "verify", "--ring", path_str(&disk), "--ring", path_str(&square), "--h", "0.03125",
            "--checks", "max_principle,quasiconcavity,comparison_with_cones", "--seed", "7", "--out", path_str(dir.path()),
        ]);
        assert_eq!(code, 0, "{err}");
        reports.push(fs::read(dir.path().join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = ringpot(&[
        "verify", "--ring", path_str(&disk), "--h", "0.03125", "--checks", "max_principle",
        "--expected-fail", "max_principle", "--out", path_str(dir.path()),
    ]);
    assert_eq!(code, 1);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["rings"][0]["entries"]["max_principle"]["outcome"], "unexpected_pass");
}
