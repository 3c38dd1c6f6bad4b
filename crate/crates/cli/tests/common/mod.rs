#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Writes the bundled scenario into `dir` after applying `edit`.
pub fn scenario(dir: &Path, edit: impl FnOnce(&mut toml::Table)) -> PathBuf {
    let text = std::fs::read_to_string(fixture("scenario.toml")).unwrap();
    let mut t: toml::Table = text.parse().unwrap();
    t.insert("buildings_path".into(), fixture("two_buildings.geojson").to_string_lossy().into_owned().into());
    edit(&mut t);
    let path = dir.join("config.toml");
    std::fs::write(&path, toml::to_string(&t).unwrap()).unwrap();
    path
}

/// Shrinks the reduced-model settings for quick runs.
pub fn small_rom(t: &mut toml::Table) {
    let rom = t["rom"].as_table_mut().unwrap();
    rom.insert("n_snapshots".into(), 8.into());
    rom.insert("n_test".into(), 3.into());
    rom.insert("n_r".into(), 4.into());
    rom.insert("n_m".into(), 6.into());
    rom.insert("repetitions".into(), 1.into());
}

pub fn set(t: &mut toml::Table, section: &str, key: &str, value: impl Into<toml::Value>) {
    t[section].as_table_mut().unwrap().insert(key.into(), value.into());
}

pub fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urbanflow"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--output")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}
