//! Region similarity J, boundary accuracy F and their aggregation into J&F.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{dilate, StructuringElement};
use crate::raster::{BinaryMask, LabelMap};

/// Tolerance band used when matching boundary pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    /// Band radius as a fraction of the image diagonal.
    pub tolerance_fraction: f64,
    pub min_tolerance_px: usize,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        BoundaryParams {
            tolerance_fraction: 0.008,
            min_tolerance_px: 1,
        }
    }
}

impl BoundaryParams {
    pub fn new(tolerance_fraction: f64, min_tolerance_px: usize) -> Result<Self> {
        if !(tolerance_fraction.is_finite() && tolerance_fraction > 0.0) {
            return Err(Error::Config(format!(
                "boundary tolerance fraction must be positive, got {tolerance_fraction}"
            )));
        }
        if min_tolerance_px == 0 {
            return Err(Error::Config("minimum boundary tolerance must be at least 1 pixel".into()));
        }
        Ok(BoundaryParams {
            tolerance_fraction,
            min_tolerance_px,
        })
    }

    /// `max(min_tolerance_px, round(fraction * diagonal))`.
    pub fn radius_for(&self, width: usize, height: usize) -> usize {
        let diag = ((width * width + height * height) as f64).sqrt();
        let r = (self.tolerance_fraction * diag).round() as usize;
        r.max(self.min_tolerance_px)
    }
}

/// `|pred ∩ gt| / |pred ∪ gt|`, and 1 when both masks are empty.
pub fn jaccard(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    Error::check_dims(gt.dims(), pred.dims())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        inter += (p && g) as usize;
        union += (p || g) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Foreground pixels with a 4-neighbour that is background or off-frame.
pub fn extract_boundary(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut out = BinaryMask::empty(w, h).expect("dims from a valid mask");
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !mask.get(x - 1, y)
                || !mask.get(x + 1, y)
                || !mask.get(x, y - 1)
                || !mask.get(x, y + 1);
            out.set(x, y, edge);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryMatch {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Boundary precision, recall and F with an explicit band radius.
///
/// A predicted boundary pixel counts as matched when it lies within a disk
/// of `radius` of the ground-truth boundary, and vice versa for recall.
pub fn boundary_match(pred: &BinaryMask, gt: &BinaryMask, radius: usize) -> Result<BoundaryMatch> {
    Error::check_dims(gt.dims(), pred.dims())?;
    let bp = extract_boundary(pred);
    let bg = extract_boundary(gt);
    let (np, ng) = (bp.count(), bg.count());
    match (np, ng) {
        (0, 0) => {
            return Ok(BoundaryMatch {
                precision: 1.0,
                recall: 1.0,
                f: 1.0,
            })
        }
        (0, _) | (_, 0) => {
            return Ok(BoundaryMatch {
                precision: 0.0,
                recall: 0.0,
                f: 0.0,
            })
        }
        _ => {}
    }
    let se = StructuringElement::disk(radius);
    let precision = bp.intersection_count(&dilate(&bg, &se))? as f64 / np as f64;
    let recall = bg.intersection_count(&dilate(&bp, &se))? as f64 / ng as f64;
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BoundaryMatch {
        precision,
        recall,
        f,
    })
}

pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, params: &BoundaryParams) -> Result<f64> {
    let radius = params.radius_for(gt.width(), gt.height());
    Ok(boundary_match(pred, gt, radius)?.f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub object_id: u8,
    pub frame_index: usize,
    pub j: f64,
    pub f: f64,
}

/// Which frames of a sequence are left out of scoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameExclusion {
    /// The first frame is the given annotation in semi-supervised VOS.
    pub first: bool,
    pub last: bool,
}

impl Default for FrameExclusion {
    fn default() -> Self {
        FrameExclusion {
            first: true,
            last: false,
        }
    }
}

impl FrameExclusion {
    pub fn excluded(&self, frame_count: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if frame_count == 0 {
            return out;
        }
        if self.first {
            out.push(0);
        }
        if self.last && !(self.first && frame_count == 1) {
            out.push(frame_count - 1);
        }
        out
    }
}

/// J and F for every object on every scored frame, object-major.
pub fn evaluate_sequence(
    pred_frames: &[LabelMap],
    gt_frames: &[LabelMap],
    object_ids: &[u8],
    params: &BoundaryParams,
    exclusion: &FrameExclusion,
) -> Result<Vec<FrameScore>> {
    if pred_frames.len() != gt_frames.len() {
        return Err(Error::FrameCountMismatch {
            pred: pred_frames.len(),
            gt: gt_frames.len(),
        });
    }
    for (p, g) in pred_frames.iter().zip(gt_frames) {
        Error::check_dims(g.dims(), p.dims())?;
    }
    let mut present = [false; 256];
    for g in gt_frames {
        for id in g.object_ids() {
            present[id as usize] = true;
        }
    }
    if let Some(&missing) = object_ids.iter().find(|&&id| id == 0 || !present[id as usize]) {
        return Err(Error::MissingGroundTruth(missing));
    }

    let excluded = exclusion.excluded(gt_frames.len());
    let frames: Vec<usize> = (0..gt_frames.len()).filter(|i| !excluded.contains(i)).collect();
    let per_frame: Vec<Vec<FrameScore>> = frames
        .par_iter()
        .map(|&t| {
            object_ids
                .iter()
                .map(|&id| {
                    let p = pred_frames[t].mask_of(id);
                    let g = gt_frames[t].mask_of(id);
                    Ok(FrameScore {
                        object_id: id,
                        frame_index: t,
                        j: jaccard(&p, &g)?,
                        f: boundary_f(&p, &g, params)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut scores: Vec<FrameScore> = per_frame.into_iter().flatten().collect();
    scores.sort_by_key(|s| (s.object_id, s.frame_index));
    Ok(scores)
}

/// Frame scores of one sequence, ready for aggregation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequenceScores {
    pub name: String,
    pub scores: Vec<FrameScore>,
    pub excluded_frames: Vec<usize>,
    /// The prediction tree had no directory for this sequence; it was scored
    /// against empty predictions.
    pub missing_prediction: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationOrder {
    /// Frames into objects, objects into sequences, sequences into the total.
    #[default]
    Hierarchical,
    /// Every (object, frame) score weighted equally at every level.
    Pooled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub j: f64,
    pub f: f64,
    pub jf: f64,
}

impl Summary {
    fn new(j: f64, f: f64) -> Self {
        Summary {
            j,
            f,
            jf: (j + f) / 2.0,
        }
    }

    fn mean_of(items: impl IntoIterator<Item = (f64, f64)>) -> Option<Self> {
        let (mut sj, mut sf, mut n) = (0.0, 0.0, 0usize);
        for (j, f) in items {
            sj += j;
            sf += f;
            n += 1;
        }
        (n > 0).then(|| Summary::new(sj / n as f64, sf / n as f64))
    }

    fn rounded(self) -> Self {
        Summary {
            j: round_half_even(self.j, 4),
            f: round_half_even(self.f, 4),
            jf: round_half_even(self.jf, 4),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSummary {
    pub sequence: String,
    pub object_id: u8,
    pub frames: usize,
    #[serde(flatten)]
    pub score: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSummary {
    pub name: String,
    pub objects: usize,
    pub frames: usize,
    pub missing_prediction: bool,
    #[serde(flatten)]
    pub score: Summary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub sequences: usize,
    pub objects: usize,
    /// Scored (object, frame) pairs.
    pub frames: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedFrame {
    pub sequence: String,
    pub frame_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub aggregation: AggregationOrder,
    pub global: Summary,
    pub per_sequence: Vec<SequenceSummary>,
    pub per_object: Vec<ObjectSummary>,
    pub counts: Counts,
    pub excluded_frames: Vec<ExcludedFrame>,
    pub missing_sequences: Vec<String>,
}

/// Rounds to `decimals` places, ties to even.
///
/// Values within 1e-9 (in units of the last kept place) of a tie are treated
/// as ties, so decimal inputs like `0.83925` round the way they read.
pub fn round_half_even(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let s = x * scale;
    let floor = s.floor();
    let diff = s - floor;
    let r = if (diff - 0.5).abs() < 1e-9 {
        if floor.rem_euclid(2.0) == 0.0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        s.round()
    };
    r / scale
}

/// Means per object, per sequence and overall, with `jf = (j + f) / 2`.
///
/// Sequences or objects whose frames were all excluded carry no scores and
/// are skipped.
pub fn aggregate(sequences: &[SequenceScores], order: AggregationOrder) -> Result<ScoreReport> {
    let mut per_object = Vec::new();
    let mut per_sequence = Vec::new();
    let mut excluded_frames = Vec::new();
    let mut missing_sequences = Vec::new();
    let mut counts = Counts::default();

    for seq in sequences {
        excluded_frames.extend(seq.excluded_frames.iter().map(|&t| ExcludedFrame {
            sequence: seq.name.clone(),
            frame_index: t,
        }));
        if seq.missing_prediction {
            missing_sequences.push(seq.name.clone());
        }
        let mut ids: Vec<u8> = seq.scores.iter().map(|s| s.object_id).collect();
        ids.sort_unstable();
        ids.dedup();
        let first_object = per_object.len();
        for id in &ids {
            let frames: Vec<&FrameScore> = seq.scores.iter().filter(|s| s.object_id == *id).collect();
            let score = Summary::mean_of(frames.iter().map(|s| (s.j, s.f))).expect("non-empty");
            per_object.push(ObjectSummary {
                sequence: seq.name.clone(),
                object_id: *id,
                frames: frames.len(),
                score,
            });
        }
        let objects = &per_object[first_object..];
        let score = match order {
            AggregationOrder::Hierarchical => Summary::mean_of(objects.iter().map(|o| (o.score.j, o.score.f))),
            AggregationOrder::Pooled => Summary::mean_of(seq.scores.iter().map(|s| (s.j, s.f))),
        };
        if let Some(score) = score {
            per_sequence.push(SequenceSummary {
                name: seq.name.clone(),
                objects: ids.len(),
                frames: seq.scores.len(),
                missing_prediction: seq.missing_prediction,
                score,
            });
            counts.sequences += 1;
            counts.objects += ids.len();
            counts.frames += seq.scores.len();
        }
    }

    let global = match order {
        AggregationOrder::Hierarchical => Summary::mean_of(per_sequence.iter().map(|s| (s.score.j, s.score.f))),
        AggregationOrder::Pooled => Summary::mean_of(
            sequences
                .iter()
                .flat_map(|s| s.scores.iter().map(|f| (f.j, f.f))),
        ),
    }
    .ok_or(Error::EmptyScores)?;

    Ok(ScoreReport {
        aggregation: order,
        global,
        per_sequence,
        per_object,
        counts,
        excluded_frames,
        missing_sequences,
    })
}

impl ScoreReport {
    /// Copy with every score rounded half-even to 4 decimals.
    pub fn rounded(&self) -> ScoreReport {
        let mut r = self.clone();
        r.global = r.global.rounded();
        for s in &mut r.per_sequence {
            s.score = s.score.rounded();
        }
        for o in &mut r.per_object {
            o.score = o.score.rounded();
        }
        r
    }

    /// Pretty JSON of the rounded report.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<ScoreReport> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("malformed score report: {e}")))
    }

    /// Aligned text table with J, F and J&F columns, one row per sequence
    /// followed by the overall row.
    pub fn to_table(&self) -> String {
        let r = self.rounded();
        let mut rows: Vec<(String, Summary)> = r
            .per_sequence
            .iter()
            .map(|s| {
                let name = if s.missing_prediction {
                    format!("{} (missing)", s.name)
                } else {
                    s.name.clone()
                };
                (name, s.score)
            })
            .collect();
        rows.push(("Overall".to_string(), r.global));
        let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(8);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6}", "Sequence", "J", "F", "J&F");
        for (i, (name, s)) in rows.iter().enumerate() {
            if i + 1 == rows.len() {
                let _ = writeln!(out, "{}", "-".repeat(width + 24));
            }
            let _ = writeln!(out, "{:<width$}  {:>6.4}  {:>6.4}  {:>6.4}", name, s.j, s.f, s.jf);
        }
        out
    }
}
