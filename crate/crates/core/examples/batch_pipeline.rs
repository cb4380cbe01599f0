//! The full batch pipeline on generated fixtures: make fixtures, gap-fill
//! every fusion member, vote, evaluate.
//!
//! cargo run --release --example batch_pipeline [output-dir]

use std::fs;
use std::io;
use std::path::PathBuf;

use maskpost::cli::manifest::read_manifest;
use maskpost::cli::{cmd_evaluate, cmd_fuse, cmd_make_fixtures, cmd_postprocess, CliError, FixtureOptions, RunConfig};

fn main() -> Result<(), CliError> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("maskpost-pipeline"));
    let mut out = io::stdout();
    let base = RunConfig {
        seed: 7,
        ..RunConfig::default()
    };

    let fx = root.join("fixtures");
    let cfg = RunConfig {
        output_root: Some(fx.clone()),
        ..base.clone()
    };
    cmd_make_fixtures(&cfg, &FixtureOptions::default(), &mut out)?;

    let members = read_manifest(&fx.join("manifest.txt"))?;
    let mut manifest = String::new();
    for (k, m) in members.iter().enumerate() {
        let cfg = RunConfig {
            input_roots: vec![m.root.clone()],
            output_root: Some(root.join(format!("post/{k}"))),
            ..base.clone()
        };
        cmd_postprocess(&cfg, &mut out)?;
        manifest.push_str(&format!("{} post/{k}\n", m.transform));
    }
    let manifest_path = root.join("manifest.txt");
    fs::write(&manifest_path, manifest).map_err(|e| CliError::internal(e.to_string()))?;

    let cfg = RunConfig {
        manifest: Some(manifest_path),
        output_root: Some(root.join("fused")),
        ..base.clone()
    };
    cmd_fuse(&cfg, &mut out)?;

    for (label, pred) in [
        ("raw prediction", fx.join("pred")),
        ("gap-filled canonical member", root.join("post/0")),
        ("fused", root.join("fused")),
    ] {
        println!("== {label}");
        let cfg = RunConfig {
            input_roots: vec![pred],
            gt_root: Some(fx.join("gt")),
            report: Some(root.join(format!("{}.json", label.replace(' ', "_")))),
            ..base.clone()
        };
        cmd_evaluate(&cfg, &mut out)?;
    }
    Ok(())
}
