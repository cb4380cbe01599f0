use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::Error;
use crate::fusion::{apply_transform, invert_transform, restore_member, vote_fuse, PredictionStack, StackMember, TtaTransform};
use crate::maskio::{list_frames, list_sequences, read_mask_file, write_mask_file};
use crate::metrics::{aggregate, evaluate_sequence, SequenceScores};
use crate::postprocess::{gap_fill_with_summary, GapFillSummary};
use crate::raster::LabelMap;

use super::config::require_dir;
use super::manifest::read_manifest;
use super::{out_err, read_error, write_error, CliError, ExitStatus, RunConfig};

/// Sequence names with their frame file names, in lexicographic order.
type Listing = Vec<(String, Vec<String>)>;

fn list_tree(root: &Path) -> Result<Listing, CliError> {
    list_sequences(root)
        .map_err(read_error)?
        .into_iter()
        .map(|s| {
            let frames = list_frames(root.join(&s)).map_err(read_error)?;
            Ok((s, frames))
        })
        .collect()
}

fn frame_jobs(listing: &Listing) -> Vec<(usize, &str)> {
    listing
        .iter()
        .enumerate()
        .flat_map(|(i, (_, frames))| frames.iter().map(move |f| (i, f.as_str())))
        .collect()
}

fn ensure_dir(p: &Path) -> Result<(), CliError> {
    fs::create_dir_all(p).map_err(|e| write_error(Error::io(p, e)))
}

/// Worst status among failures, or success.
fn finish(failures: Vec<CliError>, total: usize, what: &str) -> Result<(), CliError> {
    match failures.iter().map(|f| f.status.code()).max() {
        None => Ok(()),
        Some(code) => {
            let status = match code {
                3 => ExitStatus::MalformedData,
                2 => ExitStatus::BadArguments,
                _ => ExitStatus::Internal,
            };
            Err(CliError::new(
                status,
                format!("{} of {total} {what} failed", failures.len()),
            ))
        }
    }
}

#[derive(Default)]
struct SeqTally {
    frames: usize,
    changed: usize,
    objects: BTreeSet<u8>,
    pairs: BTreeSet<(u8, u8)>,
    failure: Option<CliError>,
}

pub fn cmd_postprocess(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let input = cfg.require_input()?;
    let output = cfg.require_output()?;
    let listing = list_tree(input)?;
    let gap = cfg.gap_fill();
    let pool = cfg.pool()?;
    for (seq, _) in &listing {
        ensure_dir(&output.join(seq))?;
    }

    let jobs = frame_jobs(&listing);
    let results: Vec<Result<GapFillSummary, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(si, frame)| {
                let seq = &listing[si].0;
                let map = read_mask_file(input.join(seq).join(frame)).map_err(read_error)?;
                let (filled, summary) = gap_fill_with_summary(&map, &gap);
                write_mask_file(&filled, output.join(seq).join(frame)).map_err(write_error)?;
                Ok(summary)
            })
            .collect()
    });

    let mut per_seq: Vec<SeqTally> = listing.iter().map(|_| SeqTally::default()).collect();
    for (&(si, _), r) in jobs.iter().zip(results) {
        let acc = &mut per_seq[si];
        match r {
            Ok(s) => {
                acc.frames += 1;
                acc.changed += s.pixels_changed;
                acc.objects.extend(s.object_ids);
                acc.pairs.extend(s.adjacent_pairs);
            }
            Err(e) => {
                acc.failure.get_or_insert(e);
            }
        }
    }

    writeln!(out, "gap fill with {} ({} sequences)", gap.se, listing.len()).map_err(out_err)?;
    let mut failures = Vec::new();
    for ((seq, _), tally) in listing.iter().zip(per_seq) {
        match tally.failure {
            None => writeln!(
                out,
                "{seq}: {} frames, {} objects, {} adjacent pairs, {} pixels changed",
                tally.frames,
                tally.objects.len(),
                tally.pairs.len(),
                tally.changed
            ),
            Some(e) => {
                let line = writeln!(out, "{seq}: FAILED: {e}");
                eprintln!("{seq}: {e}");
                failures.push(e);
                line
            }
        }
        .map_err(out_err)?;
    }
    finish(failures, listing.len(), "sequences")
}

pub fn cmd_fuse(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let manifest_path = cfg
        .manifest
        .as_deref()
        .ok_or_else(|| CliError::bad_args("--manifest is required"))?;
    if !manifest_path.is_file() {
        return Err(CliError::bad_args(format!(
            "{}: no such manifest",
            manifest_path.display()
        )));
    }
    let output = cfg.require_output()?;
    let members = read_manifest(manifest_path).map_err(|e| CliError::bad_args(e.to_string()))?;
    for m in &members {
        require_dir(&m.root)
            .map_err(|_| CliError::bad_args(format!("{}: member directory does not exist", m.root.display())))?;
    }

    let canonical = list_tree(&members[0].root)?;
    let mut problems = Vec::new();
    for (k, m) in members.iter().enumerate().skip(1) {
        let theirs: BTreeMap<String, Vec<String>> = list_tree(&m.root)?.into_iter().collect();
        for (seq, frames) in &canonical {
            let Some(other) = theirs.get(seq) else {
                problems.push(format!("member {k} ({}): missing sequence {seq}", m.root.display()));
                continue;
            };
            let missing: Vec<&str> = frames
                .iter()
                .filter(|f| !other.contains(f))
                .map(String::as_str)
                .collect();
            let extra: Vec<&str> = other
                .iter()
                .filter(|f| !frames.contains(f))
                .map(String::as_str)
                .collect();
            if !missing.is_empty() {
                problems.push(format!(
                    "member {k} ({}): {seq} is missing frames {}",
                    m.root.display(),
                    missing.join(", ")
                ));
            }
            if !extra.is_empty() {
                problems.push(format!(
                    "member {k} ({}): {seq} has unexpected frames {}",
                    m.root.display(),
                    extra.join(", ")
                ));
            }
        }
    }
    if !problems.is_empty() {
        return Err(CliError::bad_data(format!(
            "member frame sets differ:\n  {}",
            problems.join("\n  ")
        )));
    }

    let pool = cfg.pool()?;
    for (seq, _) in &canonical {
        ensure_dir(&output.join(seq))?;
    }
    let jobs = frame_jobs(&canonical);
    let results: Vec<Result<usize, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(si, frame)| {
                let seq = &canonical[si].0;
                let mut stack = Vec::with_capacity(members.len());
                let mut dims = (0, 0);
                for (k, m) in members.iter().enumerate() {
                    let path = m.root.join(seq).join(frame);
                    let map = read_mask_file(&path).map_err(read_error)?;
                    if k == 0 {
                        dims = map.dims();
                    }
                    let restored = restore_member(&map, &m.transform, dims).map_err(|e| {
                        CliError::bad_data(format!("{}: cannot undo {}: {e}", path.display(), m.transform))
                    })?;
                    stack.push(StackMember {
                        transform: m.transform,
                        map: restored,
                    });
                }
                let stack = PredictionStack::new(format!("{seq}/{frame}"), stack)?;
                let fused = vote_fuse(&stack);
                let changed = fused
                    .labels()
                    .iter()
                    .zip(stack.members()[0].map.labels())
                    .filter(|(a, b)| a != b)
                    .count();
                write_mask_file(&fused, output.join(seq).join(frame)).map_err(write_error)?;
                Ok(changed)
            })
            .collect()
    });

    writeln!(out, "fusing {} members ({} sequences)", members.len(), canonical.len()).map_err(out_err)?;
    let mut per_seq: Vec<(usize, usize, Option<CliError>)> = canonical.iter().map(|_| (0, 0, None)).collect();
    for (&(si, _), r) in jobs.iter().zip(results) {
        match r {
            Ok(c) => {
                per_seq[si].0 += 1;
                per_seq[si].1 += c;
            }
            Err(e) => {
                per_seq[si].2.get_or_insert(e);
            }
        }
    }
    let mut failures = Vec::new();
    for ((seq, _), (frames, changed, failure)) in canonical.iter().zip(per_seq) {
        match failure {
            None => writeln!(out, "{seq}: {frames} frames, {changed} pixels differ from the canonical member"),
            Some(e) => {
                let line = writeln!(out, "{seq}: FAILED: {e}");
                eprintln!("{seq}: {e}");
                failures.push(e);
                line
            }
        }
        .map_err(out_err)?;
    }
    finish(failures, canonical.len(), "sequences")
}

pub fn cmd_evaluate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let pred_root = cfg.require_input()?;
    let gt_root = cfg.require_gt()?;
    let gt_listing = list_tree(gt_root)?;
    let pred_seqs: BTreeSet<String> = list_sequences(pred_root).map_err(read_error)?.into_iter().collect();

    let mut problems = Vec::new();
    for (seq, frames) in &gt_listing {
        if !pred_seqs.contains(seq) {
            continue;
        }
        let have: BTreeSet<String> = list_frames(pred_root.join(seq)).map_err(read_error)?.into_iter().collect();
        let missing: Vec<&str> = frames
            .iter()
            .filter(|f| !have.contains(*f))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            problems.push(format!("{seq}: no prediction for frames {}", missing.join(", ")));
        }
    }
    if !problems.is_empty() {
        return Err(CliError::bad_data(format!(
            "predictions do not cover the ground truth:\n  {}",
            problems.join("\n  ")
        )));
    }

    let pool = cfg.pool()?;
    let sequences: Vec<SequenceScores> = pool.install(|| {
        gt_listing
            .iter()
            .map(|(seq, frames)| {
                let missing_prediction = !pred_seqs.contains(seq);
                let pairs: Vec<(LabelMap, LabelMap)> = frames
                    .par_iter()
                    .map(|f| {
                        let gt = read_mask_file(gt_root.join(seq).join(f)).map_err(read_error)?;
                        let pred = if missing_prediction {
                            LabelMap::zeros(gt.width(), gt.height()).expect("dims of a decoded mask")
                        } else {
                            read_mask_file(pred_root.join(seq).join(f)).map_err(read_error)?
                        };
                        Ok((pred, gt))
                    })
                    .collect::<Result<_, CliError>>()?;
                let (pred, gt): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
                let mut ids = BTreeSet::new();
                for g in &gt {
                    ids.extend(g.object_ids());
                }
                let ids: Vec<u8> = ids.into_iter().collect();
                let scores = evaluate_sequence(&pred, &gt, &ids, &cfg.boundary, &cfg.exclusion)
                    .map_err(|e| CliError::bad_data(format!("{seq}: {e}")))?;
                Ok(SequenceScores {
                    name: seq.clone(),
                    scores,
                    excluded_frames: cfg.exclusion.excluded(gt.len()),
                    missing_prediction,
                })
            })
            .collect::<Result<_, CliError>>()
    })?;

    for s in sequences.iter().filter(|s| s.missing_prediction) {
        eprintln!("warning: no predictions for sequence {}; scored as empty", s.name);
    }
    let report = aggregate(&sequences, cfg.aggregation)
        .map_err(|_| CliError::bad_data("nothing to score: no objects on any evaluated frame"))?;

    let report_path: Option<PathBuf> = cfg
        .report
        .clone()
        .or_else(|| cfg.output_root.as_ref().map(|o| o.join("scores.json")));
    let json = report.to_json();
    match &report_path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                ensure_dir(parent)?;
            }
            fs::write(p, format!("{json}\n")).map_err(|e| write_error(Error::io(p, e)))?;
        }
        None => writeln!(out, "{json}").map_err(out_err)?,
    }
    write!(out, "{}", report.to_table()).map_err(out_err)?;
    if let Some(p) = report_path {
        writeln!(out, "report written to {}", p.display()).map_err(out_err)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformOptions {
    pub transform: TtaTransform,
    pub inverse: bool,
    pub original_size: Option<(usize, usize)>,
    pub rgb: bool,
}

impl TransformOptions {
    pub fn parse(
        transform: &str,
        inverse: bool,
        original_size: Option<&str>,
        rgb: bool,
    ) -> Result<Self, CliError> {
        let transform = transform
            .parse()
            .map_err(|e: Error| CliError::bad_args(e.to_string()))?;
        let original_size = original_size
            .map(|s| {
                s.split_once('x')
                    .and_then(|(w, h)| Some((w.trim().parse().ok()?, h.trim().parse().ok()?)))
                    .filter(|&(w, h): &(usize, usize)| w > 0 && h > 0)
                    .ok_or_else(|| CliError::bad_args(format!("--original-size: expected WIDTHxHEIGHT, got `{s}`")))
            })
            .transpose()?;
        Ok(TransformOptions {
            transform,
            inverse,
            original_size,
            rgb,
        })
    }

    /// Dimensions the inverse should restore a `dims`-sized input to.
    fn inverse_dims(&self, (w, h): (usize, usize)) -> (usize, usize) {
        if let Some(d) = self.original_size {
            return d;
        }
        match self.transform {
            TtaTransform::Rotate90 | TtaTransform::Rotate270 => (h, w),
            TtaTransform::Rescale(s) => {
                let back = |n: usize| ((n as f64 / s.get()).round() as usize).max(1);
                (back(w), back(h))
            }
            _ => (w, h),
        }
    }
}

fn is_image_file(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    [".png", ".jpg", ".jpeg"].iter().any(|ext| lower.ends_with(ext))
}

fn transform_rgb(img: image::DynamicImage, opts: &TransformOptions) -> image::DynamicImage {
    use image::imageops::FilterType;
    let dims = (img.width() as usize, img.height() as usize);
    let geometric = if opts.inverse {
        opts.transform.inverse()
    } else {
        Some(opts.transform)
    };
    match geometric {
        Some(TtaTransform::Identity) => img,
        Some(TtaTransform::Rotate90) => img.rotate90(),
        Some(TtaTransform::Rotate180) => img.rotate180(),
        Some(TtaTransform::Rotate270) => img.rotate270(),
        Some(TtaTransform::HFlip) => img.fliph(),
        Some(TtaTransform::Rescale(s)) => {
            let (w, h) = (s.scale_len(dims.0), s.scale_len(dims.1));
            img.resize_exact(w as u32, h as u32, FilterType::Triangle)
        }
        None => {
            let (w, h) = opts.inverse_dims(dims);
            img.resize_exact(w as u32, h as u32, FilterType::Triangle)
        }
    }
}

pub fn cmd_transform(cfg: &RunConfig, opts: &TransformOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let input = cfg.require_input()?;
    let output = cfg.require_output()?;
    let listing: Listing = if opts.rgb {
        list_sequences(input)
            .map_err(read_error)?
            .into_iter()
            .map(|s| {
                let dir = input.join(&s);
                let mut names: Vec<String> = fs::read_dir(&dir)
                    .map_err(|e| read_error(Error::io(&dir, e)))?
                    .filter_map(|e| e.ok())
                    .map(|e| e.file_name().to_string_lossy().into_owned())
                    .filter(|n| is_image_file(n))
                    .collect();
                names.sort();
                Ok((s, names))
            })
            .collect::<Result<_, CliError>>()?
    } else {
        list_tree(input)?
    };
    for (seq, _) in &listing {
        ensure_dir(&output.join(seq))?;
    }
    let pool = cfg.pool()?;
    let jobs = frame_jobs(&listing);
    let results: Vec<Result<(), CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(si, frame)| {
                let seq = &listing[si].0;
                let src = input.join(seq).join(frame);
                let dst = output.join(seq).join(frame);
                if opts.rgb {
                    let img = image::open(&src)
                        .map_err(|e| CliError::bad_data(format!("{}: {e}", src.display())))?;
                    transform_rgb(img, opts)
                        .save(&dst)
                        .map_err(|e| CliError::internal(format!("{}: {e}", dst.display())))?;
                    return Ok(());
                }
                let map = read_mask_file(&src).map_err(read_error)?;
                let result = if opts.inverse {
                    let dims = opts.inverse_dims(map.dims());
                    invert_transform(&map, &opts.transform, dims)
                        .map_err(|e| CliError::bad_data(format!("{}: {e}", src.display())))?
                } else {
                    apply_transform(&map, &opts.transform)
                };
                write_mask_file(&result, &dst).map_err(write_error)
            })
            .collect()
    });
    let mut failures = Vec::new();
    for r in results {
        if let Err(e) = r {
            eprintln!("{e}");
            failures.push(e);
        }
    }
    writeln!(
        out,
        "{}{} applied to {} frames in {} sequences",
        if opts.inverse { "inverse of " } else { "" },
        opts.transform,
        jobs.len() - failures.len(),
        listing.len()
    )
    .map_err(out_err)?;
    finish(failures, jobs.len(), "frames")
}
