//! Seeded synthetic sequences for exercising the pipeline without a model.
//!
//! `make-fixtures` writes:
//!
//! ```text
//! <out>/gt/<seq>/<frame>.png                ground truth
//! <out>/pred/<seq>/<frame>.png              "single model" prediction
//! <out>/members/scale_<s>/<seq>/...         per-scale predictions at scaled size
//! <out>/manifest.txt                        fusion manifest over the members
//! ```
//!
//! Predictions lose a one-pixel rim wherever two objects touch, which opens
//! the two-pixel channels that gap filling is meant to close, and carry a
//! little seeded noise. Sequences cover touching objects, occlusion, and an
//! object that leaves and comes back.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fusion::{apply_transform, ScaleSchedule, TtaTransform};
use crate::maskio::{frame_file_name, write_sequence, MaskSequence};
use crate::raster::LabelMap;

use super::manifest::format_manifest;
use super::{out_err, write_error, CliError, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixtureOptions {
    pub sequences: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions {
            sequences: 4,
            frames: 8,
            width: 96,
            height: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureSet {
    pub gt: Vec<MaskSequence>,
    pub pred: Vec<MaskSequence>,
    /// One entry per scale; the maps are at scaled resolution.
    pub members: Vec<(TtaTransform, Vec<MaskSequence>)>,
}

/// Two rectangles side by side, `gap` background columns apart.
///
/// Object 1 spans columns `[2, mid)`, object 2 `[mid + gap, width - 2)`,
/// both over rows `[2, height - 2)`, with `mid = (width - gap) / 2`.
pub fn two_blob_gap(width: usize, height: usize, gap: usize) -> LabelMap {
    assert!(width >= gap + 8 && height >= 5, "frame too small for the gap");
    let mid = (width - gap) / 2;
    let mut map = LabelMap::zeros(width, height).unwrap();
    for y in 2..height - 2 {
        for x in 2..mid {
            map.set(x, y, 1);
        }
        for x in mid + gap..width - 2 {
            map.set(x, y, 2);
        }
    }
    map
}

/// Background pixels in the channel between the blobs of [`two_blob_gap`].
pub fn channel_gap_pixels(map: &LabelMap, gap: usize) -> usize {
    let (width, height) = map.dims();
    let mid = (width - gap) / 2;
    (2..height - 2)
        .flat_map(|y| (mid..mid + gap).map(move |x| (x, y)))
        .filter(|&(x, y)| map.get(x, y) == 0)
        .count()
}

#[derive(Clone, Copy, Debug)]
struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    vx: f64,
    vy: f64,
}

impl Ellipse {
    fn random(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Self {
        let (wf, hf) = (w as f64, h as f64);
        Ellipse {
            cx: rng.random_range(0.25 * wf..0.75 * wf),
            cy: rng.random_range(0.25 * hf..0.75 * hf),
            rx: rng.random_range(0.08 * wf..0.2 * wf),
            ry: rng.random_range(0.08 * hf..0.25 * hf),
            vx: rng.random_range(-1.5..1.5),
            vy: rng.random_range(-1.0..1.0),
        }
    }

    fn paint(&self, map: &mut LabelMap, t: usize, label: u8) {
        let (cx, cy) = (self.cx + self.vx * t as f64, self.cy + self.vy * t as f64);
        for y in 0..map.height() {
            for x in 0..map.width() {
                let dx = (x as f64 + 0.5 - cx) / self.rx;
                let dy = (y as f64 + 0.5 - cy) / self.ry;
                if dx * dx + dy * dy <= 1.0 {
                    map.set(x, y, label);
                }
            }
        }
    }
}

/// Clears every object pixel that 4-touches a different object.
fn open_contact_gaps(gt: &LabelMap) -> LabelMap {
    let (w, h) = gt.dims();
    let mut out = gt.clone();
    for y in 0..h {
        for x in 0..w {
            let l = gt.get(x, y);
            if l == 0 {
                continue;
            }
            let touches = [(0isize, -1isize), (0, 1), (-1, 0), (1, 0)].iter().any(|&(dx, dy)| {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    return false;
                }
                let m = gt.get(nx as usize, ny as usize);
                m != 0 && m != l
            });
            if touches {
                out.set(x, y, 0);
            }
        }
    }
    out
}

/// Overwrites a few 3x3 patches with labels drawn from `palette`.
fn add_noise(map: &mut LabelMap, rng: &mut ChaCha8Rng, patches: usize, palette: &[u8]) {
    let (w, h) = map.dims();
    for _ in 0..patches {
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let label = palette[rng.random_range(0..palette.len())];
        for y in y0..(y0 + 3).min(h) {
            for x in x0..(x0 + 3).min(w) {
                map.set(x, y, label);
            }
        }
    }
}

fn sequence_gt(kind: usize, opts: &FixtureOptions, rng: &mut ChaCha8Rng) -> (String, Vec<LabelMap>) {
    let (w, h) = (opts.width, opts.height);
    match kind {
        0 => {
            // Touching rectangles drifting right together.
            let frames = (0..opts.frames)
                .map(|t| {
                    let mut map = LabelMap::zeros(w, h).unwrap();
                    let shift = t % (w / 8).max(1);
                    let (x0, mid, x1) = (w / 8 + shift, w / 2 + shift, (7 * w / 8 + shift).min(w));
                    for y in h / 4..3 * h / 4 {
                        for x in x0..mid.min(w) {
                            map.set(x, y, 1);
                        }
                        for x in mid.min(w)..x1 {
                            map.set(x, y, 2);
                        }
                    }
                    map
                })
                .collect();
            ("gap-channel".into(), frames)
        }
        1 => {
            // Object 2 is gone for the middle third of the sequence.
            let mover = Ellipse::random(rng, w, h);
            let stayer = Ellipse {
                cx: 0.8 * w as f64,
                cy: 0.5 * h as f64,
                rx: 0.1 * w as f64,
                ry: 0.2 * h as f64,
                vx: 0.0,
                vy: 0.0,
            };
            let n = opts.frames;
            let frames = (0..n)
                .map(|t| {
                    let mut map = LabelMap::zeros(w, h).unwrap();
                    mover.paint(&mut map, t, 1);
                    if !(n / 3..n - n / 3).contains(&t) || n < 3 {
                        stayer.paint(&mut map, t, 2);
                    }
                    map
                })
                .collect();
            ("disappear".into(), frames)
        }
        k => {
            let objects = rng.random_range(2..=4usize);
            let blobs: Vec<Ellipse> = (0..objects).map(|_| Ellipse::random(rng, w, h)).collect();
            let frames = (0..opts.frames)
                .map(|t| {
                    let mut map = LabelMap::zeros(w, h).unwrap();
                    // Higher ids are painted last and occlude lower ones.
                    for (i, b) in blobs.iter().enumerate() {
                        b.paint(&mut map, t, i as u8 + 1);
                    }
                    map
                })
                .collect();
            (format!("blobs-{:02}", k - 2), frames)
        }
    }
}

fn named(name: &str, frames: Vec<LabelMap>) -> MaskSequence {
    MaskSequence {
        name: name.to_string(),
        frame_names: (0..frames.len()).map(frame_file_name).collect(),
        frames,
    }
}

fn child_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Builds the fixture set in memory. Same seed, same bytes.
pub fn generate_fixtures(opts: &FixtureOptions, scales: &ScaleSchedule, seed: u64) -> FixtureSet {
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for kind in 0..opts.sequences {
        let mut rng = child_rng(seed, kind as u64);
        let (name, frames) = sequence_gt(kind, opts, &mut rng);
        let predicted: Vec<LabelMap> = frames
            .iter()
            .map(|g| {
                let mut p = open_contact_gaps(g);
                if kind >= 2 {
                    let mut palette = g.object_ids();
                    palette.push(0);
                    add_noise(&mut p, &mut rng, 2, &palette);
                }
                p
            })
            .collect();
        gt.push(named(&name, frames));
        pred.push(named(&name, predicted));
    }

    let members = scales
        .transforms()
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let seqs = pred
                .iter()
                .enumerate()
                .map(|(si, seq)| {
                    let mut rng = child_rng(seed ^ 0x5ca1e, (i * 1000 + si) as u64);
                    let frames = seq
                        .frames
                        .iter()
                        .map(|p| {
                            let mut m = apply_transform(p, &t);
                            if i > 0 {
                                let mut palette = p.object_ids();
                                palette.push(0);
                                let patches = (m.labels().len() / 800).max(1);
                                add_noise(&mut m, &mut rng, patches, &palette);
                            }
                            m
                        })
                        .collect();
                    named(&seq.name, frames)
                })
                .collect();
            (t, seqs)
        })
        .collect();

    FixtureSet { gt, pred, members }
}

pub fn member_dir_name(t: &TtaTransform) -> String {
    match t {
        TtaTransform::Rescale(s) => format!("scale_{}", s.get()),
        other => other.to_string(),
    }
}

pub fn write_fixtures(set: &FixtureSet, root: &Path) -> crate::Result<()> {
    for seq in &set.gt {
        write_sequence(root.join("gt"), seq)?;
    }
    for seq in &set.pred {
        write_sequence(root.join("pred"), seq)?;
    }
    let mut lines = Vec::new();
    for (t, seqs) in &set.members {
        let dir = format!("members/{}", member_dir_name(t));
        for seq in seqs {
            write_sequence(root.join(&dir), seq)?;
        }
        lines.push((*t, dir));
    }
    let entries: Vec<(TtaTransform, &str)> = lines.iter().map(|(t, d)| (*t, d.as_str())).collect();
    let path = root.join("manifest.txt");
    std::fs::write(&path, format_manifest(&entries)).map_err(|e| crate::Error::io(&path, e))
}

pub fn cmd_make_fixtures(cfg: &RunConfig, opts: &FixtureOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let root = cfg.require_output()?;
    if opts.frames == 0 || opts.width < 16 || opts.height < 16 {
        return Err(CliError::bad_args("fixtures need at least 1 frame and 16x16 pixels"));
    }
    let set = generate_fixtures(opts, &cfg.scales, cfg.seed);
    write_fixtures(&set, root).map_err(write_error)?;
    writeln!(
        out,
        "wrote {} sequences x {} frames ({}x{}), {} fusion members, seed {} to {}",
        set.gt.len(),
        opts.frames,
        opts.width,
        opts.height,
        set.members.len(),
        cfg.seed,
        root.display()
    )
    .map_err(out_err)?;
    for seq in &set.gt {
        let ids: std::collections::BTreeSet<u8> = seq.frames.iter().flat_map(|f| f.object_ids()).collect();
        writeln!(out, "  {}: objects {:?}", seq.name, ids).map_err(out_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::StructuringElement;
    use crate::postprocess::{gap_fill, GapFillConfig};

    #[test]
    fn same_seed_same_fixtures() {
        let opts = FixtureOptions::default();
        let s = ScaleSchedule::default();
        assert_eq!(generate_fixtures(&opts, &s, 7), generate_fixtures(&opts, &s, 7));
        assert_ne!(generate_fixtures(&opts, &s, 7), generate_fixtures(&opts, &s, 8));
    }

    #[test]
    fn contact_gaps_are_two_pixels_wide() {
        let gt = LabelMap::new(6, 1, vec![1, 1, 1, 2, 2, 2]).unwrap();
        assert_eq!(open_contact_gaps(&gt).labels(), &[1, 1, 0, 0, 2, 2]);
    }

    #[test]
    fn channel_closes_at_radius_two_only() {
        let set = generate_fixtures(&FixtureOptions::default(), &ScaleSchedule::default(), 1);
        let pred = &set.pred[0].frames[0];
        let gt = &set.gt[0].frames[0];
        assert_ne!(pred, gt);
        let r0 = gap_fill(pred, &GapFillConfig::with_se(StructuringElement::square(0)));
        assert_eq!(&r0, pred);
        let r2 = gap_fill(pred, &GapFillConfig::with_se(StructuringElement::square(2)));
        assert!(gt.foreground().is_subset_of(&r2.foreground()).unwrap());
    }

    #[test]
    fn disappearing_object_is_absent_mid_sequence() {
        let set = generate_fixtures(&FixtureOptions::default(), &ScaleSchedule::default(), 3);
        let seq = &set.gt[1];
        assert_eq!(seq.name, "disappear");
        let present: Vec<bool> = seq.frames.iter().map(|f| f.object_ids().contains(&2)).collect();
        assert_eq!(present, vec![true, true, false, false, false, false, true, true]);
    }

    #[test]
    fn member_sizes_follow_scales() {
        let set = generate_fixtures(&FixtureOptions::default(), &ScaleSchedule::default(), 0);
        assert_eq!(set.members.len(), 7);
        assert_eq!(set.members[0].1[0].frames[0], set.pred[0].frames[0]);
        assert_eq!(set.members[6].1[0].frames[0].dims(), (168, 112));
    }

    #[test]
    fn blob_gap_helper() {
        let m = two_blob_gap(30, 10, 3);
        assert_eq!(channel_gap_pixels(&m, 3), 18);
        assert_eq!(m.object_ids(), vec![1, 2]);
    }
}
