use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use roomsynth::cdf::RoomType;
use roomsynth::Config;

fn roomsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roomsynth"))
        .args(args)
        .env_remove("CSSG_RULES")
        .output()
        .expect("binary runs")
}

fn bedroom(dir: &Path) -> PathBuf {
    let p = dir.join("bedroom.cdf.json");
    std::fs::write(&p, Config::default_cdf_text(RoomType::Bedroom)).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_one_scene() {
    let tmp = tempfile::tempdir().unwrap();
    let cdf = bedroom(tmp.path());
    let out = tmp.path().join("scenes");
    let r = roomsynth(&["generate", s(&cdf), "--count", "1", "--seed", "0", "--out", s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.join("scene_000000.json").is_file());
    assert!(out.join("manifest.json").is_file());
    assert!(!out.join("scene_000000.svg").exists());
}

#[test]
fn rerun_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cdf = bedroom(tmp.path());
    let mut manifests = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "4")] {
        let out = tmp.path().join(name);
        let r = roomsynth(&["--jobs", jobs, "generate", s(&cdf), "--count", "3", "--seed", "9", "--render", "--out", s(&out)]);
        assert!(r.status.success());
        manifests.push(std::fs::read(out.join("manifest.json")).unwrap());
    }
    assert_eq!(manifests[0], manifests[1]);
}

#[test]
fn bad_cdf_reports_file_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cdf = tmp.path().join("broken.json");
    std::fs::write(&cdf, "{\n\"scene\": }").unwrap();
    let r = roomsynth(&["generate", s(&cdf), "--out", s(&tmp.path().join("o"))]);
    assert!(!r.status.success());
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("broken.json:2:"), "{err}");
    assert!(r.stdout.is_empty());
}

#[test]
fn rules_fall_back_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cdf = bedroom(tmp.path());
    let r = Command::new(env!("CARGO_BIN_EXE_roomsynth"))
        .args(["generate", s(&cdf), "--out", s(&tmp.path().join("o"))])
        .env("CSSG_RULES", tmp.path().join("missing.toml"))
        .output()
        .unwrap();
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.toml"));
}

#[test]
fn tasks_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let cdf = bedroom(tmp.path());
    let scenes = tmp.path().join("scenes");
    assert!(roomsynth(&["generate", s(&cdf), "--count", "2", "--out", s(&scenes)]).status.success());

    let r = roomsynth(&["tasks", s(&scenes), "--types", "pick_and_place,examine_in_light", "--per-type", "2", "--seed", "3"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let table = String::from_utf8(r.stdout).unwrap();
    assert!(table.contains("Pick & Place"));
    assert!(scenes.join("tasks/scene_000001_examine_in_light_001.jsonl").is_file());

    let r = roomsynth(&["eval", s(&scenes), "--per-type", "1"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let printed = String::from_utf8(r.stdout).unwrap();
    assert_eq!(std::fs::read_to_string(scenes.join("eval/metrics.txt")).unwrap(), printed);

    let r = roomsynth(&["tasks", s(&scenes), "--types", "juggle"]);
    assert!(!r.status.success());
}

#[test]
fn eval_of_empty_dir_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let r = roomsynth(&["eval", s(tmp.path())]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("no scene files"));
}

#[test]
fn merge_prints_to_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let cdf = bedroom(tmp.path());
    let r = roomsynth(&["merge", s(&cdf), s(&cdf)]);
    assert!(r.status.success());
    let out = String::from_utf8(r.stdout).unwrap();
    let doc = roomsynth::cdf::parse_cdf(Config::builtin(), &out).unwrap();
    assert_eq!(doc.scene.room_type, RoomType::Bedroom);
}
