use std::path::PathBuf;
use std::process::{Command, Output};

fn hotspot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hotspot")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hotspot-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn presets_list_names_every_preset() {
    let o = hotspot(&["presets", "list"]);
    assert!(o.status.success());
    for name in ["linear_trimer", "triangle_trio", "tetra_plus_center", "single_sphere_pair"] {
        assert!(stdout(&o).contains(name), "{name} missing");
    }
}

#[test]
fn preset_show_writes_a_valid_scene() {
    let path = scratch("trimer.json");
    let o = hotspot(&["presets", "show", "linear_trimer", "--gap-nm", "2", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = hotspot(&["validate", "--scene", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("3 spheres, 2 emitters, lmax 45"), "{}", stdout(&o));
}

#[test]
fn unknown_preset_is_an_error() {
    let o = hotspot(&["presets", "show", "dimer"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown preset"));
}

#[test]
fn malformed_scene_reports_position() {
    let path = scratch("bad.json");
    std::fs::write(&path, "{\n  \"spheres\": [\n}").unwrap();
    let o = hotspot(&["validate", "--scene", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn overlapping_spheres_are_rejected() {
    let path = scratch("overlap.json");
    let scene = r#"{"spheres":[{"center_nm":[0,0,0],"R_nm":10},{"center_nm":[15,0,0],"R_nm":10}],
        "emitters":[{"position_nm":[0,0,30],"direction":[0,0,1]}]}"#;
    std::fs::write(&path, scene).unwrap();
    let o = hotspot(&["validate", "--scene", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_grid_is_a_usage_error() {
    let o = hotspot(&["sweep", "--scene", "x.json", "--out", "x.csv", "--omega-thz", "5000:4000:3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_sidecar() {
    let scene = scratch("sweep_scene.json");
    let csv = scratch("sweep.csv");
    assert!(hotspot(&["presets", "show", "linear_trimer", "--gap-nm", "2", "--out", scene.to_str().unwrap()]).status.success());
    let o = hotspot(&[
        "sweep",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--omega-thz",
        "4500:5000:3",
        "--lmax",
        "8",
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("omega_rad_s,gamma_over_gamma0,gamma_ab_over_gamma"));
    assert_eq!(lines.count(), 3);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    assert_eq!(meta["l_max"], 8);
}

#[test]
fn weak_coupling_dynamics_is_refused() {
    let scene = scratch("weak.json");
    let out = scratch("weak.csv");
    assert!(hotspot(&["presets", "show", "linear_trimer", "--gap-nm", "4", "--out", scene.to_str().unwrap()]).status.success());
    let o = hotspot(&[
        "dynamics",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--omega-thz",
        "4800:5200:21",
        "--lmax",
        "12",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), stderr(&o));
    assert!(stderr(&o).starts_with("refused: weak coupling"), "{}", stderr(&o));
    assert!(!out.exists());
}
