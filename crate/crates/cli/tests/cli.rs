//! End-to-end tests driving the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::Vector3;
use nearnet_core::grid::Lattice;
use nearnet_core::{io, IndicatorGrid};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nearnet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "nearnet-cli-{tag}-{}",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn lat2d(nx: usize, ny: usize) -> Lattice<f64> {
    Lattice::new([nx, ny, 1], 1.0, Vector3::new(0.5, 0.5, 0.0)).unwrap()
}

/// Overhanging plate with a wall on the right: support under the plate is
/// reachable only from the left.
fn write_scene(dir: &Path) -> PathBuf {
    let part = IndicatorGrid::from_fn(lat2d(20, 10), |[i, j, _]| {
        ((2..12).contains(&i) && j == 6) || (12..14).contains(&i)
    });
    io::write_indicator(dir.join("part.vol"), &part).unwrap();

    let tool_lat = Lattice::new([2, 8, 1], 1.0, Vector3::new(0.0, 0.0, 0.0)).unwrap();
    let cutter = IndicatorGrid::from_fn(tool_lat.clone(), |[_, j, _]| j < 2);
    let holder = IndicatorGrid::from_fn(tool_lat, |[_, j, _]| j >= 2);
    io::write_indicator(dir.join("cutter.vol"), &cutter).unwrap();
    io::write_indicator(dir.join("holder.vol"), &holder).unwrap();

    let config = r#"
spacing = 1.0

[part]
volume = "part.vol"

[platform]
layers = 2

[[fixtures]]
name = "open"

[[tools]]
name = "side-bar"
holder = "holder.vol"
cutter = "cutter.vol"
sharp_points = 2
rotations = "uniform2d:4"

[params]
alpha_deg = 90.0
lambda = 0.01
w_acc = 0.5
samples = 8
keep = 3
sampling = "circle_uniform"
halt_fraction = 0.005
"#;
    let path = dir.join("setup.toml");
    std::fs::write(&path, config).unwrap();
    path
}

fn cube_stl(dir: &Path) -> PathBuf {
    let path = dir.join("cube.stl");
    let quads: [([f64; 3], [f64; 3], [f64; 3], [f64; 3]); 6] = [
        ([0., 0., 0.], [0., 10., 0.], [10., 10., 0.], [10., 0., 0.]),
        (
            [0., 0., 10.],
            [10., 0., 10.],
            [10., 10., 10.],
            [0., 10., 10.],
        ),
        ([0., 0., 0.], [10., 0., 0.], [10., 0., 10.], [0., 0., 10.]),
        (
            [0., 10., 0.],
            [0., 10., 10.],
            [10., 10., 10.],
            [10., 10., 0.],
        ),
        ([0., 0., 0.], [0., 0., 10.], [0., 10., 10.], [0., 10., 0.]),
        (
            [10., 0., 0.],
            [10., 10., 0.],
            [10., 10., 10.],
            [10., 0., 10.],
        ),
    ];
    let mut s = String::from("solid cube\n");
    for (a, b, c, d) in quads {
        for tri in [[a, b, c], [a, c, d]] {
            s.push_str("facet normal 0 0 0\nouter loop\n");
            for v in tri {
                s.push_str(&format!("vertex {} {} {}\n", v[0], v[1], v[2]));
            }
            s.push_str("endloop\nendfacet\n");
        }
    }
    s.push_str("endsolid cube\n");
    std::fs::write(&path, s).unwrap();
    path
}

#[test]
fn voxelize_cube_smoke() {
    let dir = temp_dir("vox");
    let stl = cube_stl(&dir);
    let out = dir.join("cube.vol");
    let res = run(&[
        "voxelize",
        "--mesh",
        stl.to_str().unwrap(),
        "--spacing",
        "1.0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let grid = io::read_indicator::<f64>(&out).unwrap();
    assert_eq!(grid.count_set(), 1000);
}

#[test]
fn voxelize_missing_file_is_input_error() {
    let res = run(&[
        "voxelize",
        "--mesh",
        "/nonexistent/x.stl",
        "--spacing",
        "1",
        "--out",
        "/tmp/x.vol",
    ]);
    assert_eq!(res.status.code(), Some(3));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("/nonexistent/x.stl"), "{err}");
}

#[test]
fn voxelize_nonpositive_spacing_is_usage_error() {
    let res = run(&[
        "voxelize",
        "--mesh",
        "x.stl",
        "--spacing",
        "0",
        "--out",
        "/tmp/x.vol",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn imf_writes_outputs_and_lambda_monotone() {
    let dir = temp_dir("imf");
    let config = write_scene(&dir);
    let parse_secluded = |out: &Output| -> f64 {
        let text = String::from_utf8_lossy(&out.stdout).to_string();
        let tag = "secluded_mm3=";
        let at = text
            .find(tag)
            .unwrap_or_else(|| panic!("no summary in {text}"));
        text[at + tag.len()..]
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };

    let prefix = dir.join("low");
    let res = run(&[
        "imf",
        "--config",
        config.to_str().unwrap(),
        "--build-dir",
        "0,1,0",
        "--lambda",
        "0.01",
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let secl_low = parse_secluded(&res);

    for suffix in ["_field.vol", "_accessible.vol", "_secluded.vol"] {
        let p = dir.join(format!("low{suffix}"));
        assert!(p.exists(), "missing {}", p.display());
    }
    let field = io::read_field::<f64>(dir.join("low_field.vol")).unwrap();
    assert!(field.values().iter().all(|v| (0.0..=1.0).contains(v)));

    // a larger threshold never increases the secluded volume
    let res = run(&[
        "imf",
        "--config",
        config.to_str().unwrap(),
        "--build-dir",
        "0,1,0",
        "--lambda",
        "0.5",
        "--out-prefix",
        dir.join("high").to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let secl_high = parse_secluded(&res);
    assert!(secl_high <= secl_low, "{secl_high} > {secl_low}");
}

#[test]
fn imf_oracle_check_passes_on_small_scene() {
    let dir = temp_dir("oracle");
    let config = write_scene(&dir);
    let res = run(&[
        "imf",
        "--config",
        config.to_str().unwrap(),
        "--build-dir",
        "0,1,0",
        "--oracle-check",
        "--out-prefix",
        dir.join("o").to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(String::from_utf8_lossy(&res.stdout).contains("oracle check passed"));
}

#[test]
fn optimize_csv_is_deterministic_and_weight_consistent() {
    let dir = temp_dir("opt");
    let config = write_scene(&dir);
    let out1 = dir.join("rank1.csv");
    let out2 = dir.join("rank2.csv");
    for out in [&out1, &out2] {
        let res = run(&[
            "optimize",
            "--config",
            config.to_str().unwrap(),
            "--w-acc",
            "0",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            res.status.success(),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "identical invocations must produce identical files");

    // with w_acc = 0 the score column is proportional to the support column
    let text = String::from_utf8(a).unwrap();
    let mut rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
            (f[3], f[5]) // V_S, xi
        })
        .collect();
    assert_eq!(rows.len(), 8);
    rows.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
    for w in rows.windows(2) {
        assert!(w[0].0 <= w[1].0, "xi order must follow V_S at w_acc = 0");
    }
}

#[test]
fn optimize_worker_count_does_not_change_results() {
    let dir = temp_dir("workers");
    let config = write_scene(&dir);
    let single = dir.join("w1.csv");
    let multi = dir.join("wN.csv");
    let res = run(&[
        "--workers",
        "1",
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        single.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let res = run(&[
        "--workers",
        "4",
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        multi.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert_eq!(
        std::fs::read(&single).unwrap(),
        std::fs::read(&multi).unwrap()
    );
}

#[test]
fn plan_fractions_non_increasing_and_halt_boundary() {
    let dir = temp_dir("plan");
    let config = write_scene(&dir);
    let out = dir.join("plan.csv");
    let res = run(&[
        "plan",
        "--config",
        config.to_str().unwrap(),
        "--build-dir",
        "0,1,0",
        "--out",
        out.to_str().unwrap(),
        "--export-steps",
        dir.join("steps").to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let fracs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!fracs.is_empty(), "scene has removable support:\n{text}");
    for w in fracs.windows(2) {
        assert!(w[0] >= w[1], "fractions must be non-increasing: {fracs:?}");
    }
    assert!(dir.join("steps_step01.vol").exists());
    assert!(dir.join("steps_remaining.vol").exists());

    // halting at 100% admits only a full single-step removal
    let res = run(&[
        "plan",
        "--config",
        config.to_str().unwrap(),
        "--build-dir",
        "0,1,0",
        "--halt-fraction",
        "1.0",
        "--out",
        dir.join("plan100.csv").to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(dir.join("plan100.csv")).unwrap();
    let rows = text.lines().count() - 1;
    if rows == 1 {
        let frac: f64 = text
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert!((frac - 100.0).abs() < 1e-9);
    } else {
        assert_eq!(rows, 0);
    }
}

#[test]
fn optimize_accepts_protocol_scale_flags() {
    // 100 samples, keep 5, threshold 1e-3 taken verbatim
    let dir = temp_dir("protocol");
    let config = write_scene(&dir);
    let out = dir.join("rank.csv");
    let res = run(&[
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--samples",
        "100",
        "--keep",
        "5",
        "--lambda",
        "0.001",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 101, "header plus one row per sample");
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(
        stdout.matches("\n  ").count(),
        6,
        "top-5 table plus header:\n{stdout}"
    );
}

#[test]
fn imf_vtk_exports() {
    let dir = temp_dir("vtk");
    let config = write_scene(&dir);
    let res = run(&[
        "imf",
        "--config",
        config.to_str().unwrap(),
        "--build-dir",
        "0,1,0",
        "--out-prefix",
        dir.join("v").to_str().unwrap(),
        "--vtk",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    for name in ["v_field.vtk", "v_secluded.vtk"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(text.starts_with("# vtk DataFile"), "{name}");
    }
}

#[test]
fn missing_volume_names_the_path() {
    let dir = temp_dir("missingvol");
    let config = dir.join("setup.toml");
    std::fs::write(
        &config,
        "spacing = 1.0\n[part]\nvolume = \"absent.vol\"\n[platform]\nlayers = 1\n\
         [[tools]]\nname = \"t\"\nholder = \"h.vol\"\ncutter = \"c.vol\"\nrotations = \"uniform2d:4\"\n",
    )
    .unwrap();
    let res = run(&[
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("o.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("absent.vol"));
}

#[test]
fn bad_config_is_input_error() {
    let dir = temp_dir("badcfg");
    let config = dir.join("broken.toml");
    std::fs::write(&config, "spacing = -2.0\n").unwrap();
    let res = run(&[
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
}
