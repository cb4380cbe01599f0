#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use maskpost::cli::RunConfig;
use maskpost::LabelMap;

pub fn config(workers: usize) -> RunConfig {
    RunConfig {
        worker_count: workers,
        ..RunConfig::default()
    }
}

/// Every file under `root` keyed by its relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(base, &p, acc);
            } else {
                acc.insert(p.strip_prefix(base).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

pub fn write_tree(root: &Path, seqs: &[(&str, Vec<LabelMap>)]) {
    for (name, frames) in seqs {
        for (i, f) in frames.iter().enumerate() {
            maskpost::write_mask_file(f, root.join(name).join(maskpost::maskio::frame_file_name(i))).unwrap();
        }
    }
}

pub fn run(cmd: impl FnOnce(&mut Vec<u8>) -> Result<(), maskpost::cli::CliError>) -> (Result<(), maskpost::cli::CliError>, String) {
    let mut out = Vec::new();
    let r = cmd(&mut out);
    (r, String::from_utf8(out).unwrap())
}
