use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/golden.toml")
}

fn pilotwave(args: &[&str], out: &Path, config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotwave"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("PILOTWAVE_CONFIG")
        .env_remove("PILOTWAVE_SEED")
        .env_remove("PILOTWAVE_OUT")
        .env_remove("PILOTWAVE_THREADS")
        .env_remove("PILOTWAVE_SNAPSHOT_EVERY")
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

fn edited_golden(dir: &Path, from: &str, to: &str) -> PathBuf {
    let text = std::fs::read_to_string(golden()).unwrap();
    assert!(text.contains(from));
    let path = dir.join("edited.toml");
    std::fs::write(&path, text.replacen(from, to, 1)).unwrap();
    path
}

#[test]
fn afshar_all_stages_on_golden_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = pilotwave(&["afshar", "--stage", "all"], dir.path(), &golden());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    let stages = s["results"]["stages"].as_object().unwrap();
    assert_eq!(stages.len(), 3);
    let iii = stages["iii"]["interception"].as_f64().unwrap();
    let ii = stages["ii"]["interception"].as_f64().unwrap();
    assert!(iii <= 0.02, "stage iii interception {iii}");
    assert!(ii >= 3.0 * iii);
    assert_eq!(stages["i"]["interception"].as_f64().unwrap(), 0.0);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);

    // Every file in the manifest exists with the recorded digest.
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "afshar_stage_iii_trajectories.csv"));
    for f in files {
        let bytes = std::fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(bytes.len() as u64, f["bytes"].as_u64().unwrap());
    }
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn missing_field_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_golden(dir.path(), "pinhole_separation = 10.0\n", "");
    let o = pilotwave(&["afshar", "--stage", "iii"], &dir.path().join("out"), &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pinhole_separation"));
    assert!(!dir.path().join("out").join("summary.json").exists());
}

#[test]
fn unknown_command_prints_usage() {
    let o = Command::new(env!("CARGO_BIN_EXE_pilotwave")).arg("teleport").output().unwrap();
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn summaries_do_not_depend_on_thread_count() {
    let runs: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|threads| {
            let dir = tempfile::tempdir().unwrap();
            let o = pilotwave(&["doubleslit", "--trajectories", "200", "--threads", threads], dir.path(), &golden());
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            let mut bytes = std::fs::read(dir.path().join("summary.json")).unwrap();
            bytes.extend(std::fs::read(dir.path().join("doubleslit_trajectories.csv")).unwrap());
            bytes
        })
        .collect();
    assert!(runs[0] == runs[1]);
}

#[test]
fn seed_flag_and_environment_agree() {
    let dir = tempfile::tempdir().unwrap();
    let flag = pilotwave(&["grw", "--seed", "99"], &dir.path().join("flag"), &golden());
    assert!(flag.status.success());
    let env = Command::new(env!("CARGO_BIN_EXE_pilotwave"))
        .arg("grw")
        .env("PILOTWAVE_CONFIG", golden())
        .env("PILOTWAVE_OUT", dir.path().join("env"))
        .env("PILOTWAVE_SEED", "99")
        .output()
        .unwrap();
    assert!(env.status.success(), "{}", String::from_utf8_lossy(&env.stderr));
    let (a, b) = (summary(&dir.path().join("flag")), summary(&dir.path().join("env")));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 99);
}

#[test]
fn validate_reports_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let clean = pilotwave(&["validate"], &out, &golden());
    assert_eq!(clean.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&clean.stdout).contains("error"));
    assert!(!out.exists());

    let wide = edited_golden(dir.path(), "wire_width_fraction = 0.1", "wire_width_fraction = 1.2");
    let o = pilotwave(&["validate"], &out, &wide);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("fringe spacing"));

    let extra = edited_golden(dir.path(), "[packet]\n", "[packet]\nlaser_colour = \"red\"\n");
    let o = pilotwave(&["validate"], &out, &extra);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("warning: unknown key packet.laser_colour"));
}

#[test]
fn small_commands_write_their_artifacts() {
    for (cmd, file) in [
        ("packet-demo", "packet_spectrum.csv"),
        ("duality-table", "duality_contrast.csv"),
        ("grw", "grw_run_000_jumps.csv"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = pilotwave(&[cmd], dir.path(), &golden());
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(file).exists(), "{cmd}");
        assert_eq!(summary(dir.path())["command"], cmd);
    }
}
