//! Test-time augmentation transforms and per-pixel plurality-vote fusion.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{resize_labelmap, LabelMap};

/// Strictly positive, finite resize factor.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub fn new(factor: f64) -> Result<Self> {
        if factor.is_finite() && factor > 0.0 {
            Ok(ScaleFactor(factor))
        } else {
            Err(Error::InvalidTransform(format!("scale:{factor}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `max(1, round(len * factor))`.
    pub fn scale_len(self, len: usize) -> usize {
        ((len as f64 * self.0).round() as usize).max(1)
    }
}

impl TryFrom<f64> for ScaleFactor {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        ScaleFactor::new(v)
    }
}

impl From<ScaleFactor> for f64 {
    fn from(s: ScaleFactor) -> f64 {
        s.0
    }
}

/// One test-time augmentation. Rotations are clockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TtaTransform {
    Identity,
    Rotate90,
    Rotate180,
    Rotate270,
    HFlip,
    Rescale(ScaleFactor),
}

impl TtaTransform {
    pub fn rescale(factor: f64) -> Result<Self> {
        Ok(TtaTransform::Rescale(ScaleFactor::new(factor)?))
    }

    /// True for `Identity` and `Rescale(1.0)`.
    pub fn is_identity(&self) -> bool {
        match self {
            TtaTransform::Identity => true,
            TtaTransform::Rescale(s) => s.get() == 1.0,
            _ => false,
        }
    }

    /// Dimensions of a `dims`-sized map after this transform.
    pub fn output_dims(&self, (w, h): (usize, usize)) -> (usize, usize) {
        match self {
            TtaTransform::Rotate90 | TtaTransform::Rotate270 => (h, w),
            TtaTransform::Rescale(s) => (s.scale_len(w), s.scale_len(h)),
            _ => (w, h),
        }
    }

    /// Geometric inverse; `None` for rescale, whose inverse depends on the
    /// original dimensions.
    pub fn inverse(&self) -> Option<TtaTransform> {
        match self {
            TtaTransform::Rotate90 => Some(TtaTransform::Rotate270),
            TtaTransform::Rotate270 => Some(TtaTransform::Rotate90),
            TtaTransform::Rescale(_) => None,
            other => Some(*other),
        }
    }
}

impl fmt::Display for TtaTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TtaTransform::Identity => f.write_str("id"),
            TtaTransform::Rotate90 => f.write_str("rot90"),
            TtaTransform::Rotate180 => f.write_str("rot180"),
            TtaTransform::Rotate270 => f.write_str("rot270"),
            TtaTransform::HFlip => f.write_str("hflip"),
            TtaTransform::Rescale(s) => write!(f, "scale:{}", s.get()),
        }
    }
}

impl FromStr for TtaTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "id" => Ok(TtaTransform::Identity),
            "rot90" => Ok(TtaTransform::Rotate90),
            "rot180" => Ok(TtaTransform::Rotate180),
            "rot270" => Ok(TtaTransform::Rotate270),
            "hflip" => Ok(TtaTransform::HFlip),
            _ => {
                let factor = s
                    .strip_prefix("scale:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidTransform(s.to_string()))?;
                TtaTransform::rescale(factor).map_err(|_| Error::InvalidTransform(s.to_string()))
            }
        }
    }
}

fn remap(map: &LabelMap, out_w: usize, out_h: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> LabelMap {
    let mut labels = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        for x in 0..out_w {
            let (sx, sy) = src(x, y);
            labels.push(map.get(sx, sy));
        }
    }
    LabelMap::new(out_w, out_h, labels).expect("remap preserves pixel count")
}

pub fn apply_transform(map: &LabelMap, t: &TtaTransform) -> LabelMap {
    let (w, h) = map.dims();
    match t {
        TtaTransform::Identity => map.clone(),
        // input (x, y) lands on (h - 1 - y, x)
        TtaTransform::Rotate90 => remap(map, h, w, |x, y| (y, h - 1 - x)),
        TtaTransform::Rotate180 => remap(map, w, h, |x, y| (w - 1 - x, h - 1 - y)),
        // input (x, y) lands on (y, w - 1 - x)
        TtaTransform::Rotate270 => remap(map, h, w, |x, y| (w - 1 - y, x)),
        TtaTransform::HFlip => remap(map, w, h, |x, y| (w - 1 - x, y)),
        TtaTransform::Rescale(s) => {
            let (nw, nh) = (s.scale_len(w), s.scale_len(h));
            resize_labelmap(map, nw, nh).expect("scaled dimensions are at least 1")
        }
    }
}

/// Undoes `t` on a map that `t` produced from an `original_dims` map.
pub fn invert_transform(map: &LabelMap, t: &TtaTransform, original_dims: (usize, usize)) -> Result<LabelMap> {
    Error::check_dims(t.output_dims(original_dims), map.dims())?;
    match t.inverse() {
        Some(inv) => Ok(apply_transform(map, &inv)),
        None => resize_labelmap(map, original_dims.0, original_dims.1),
    }
}

/// Brings a member prediction back onto the canonical grid.
///
/// Rotations and flips are undone exactly and must land on `canonical_dims`.
/// Rescaled members are resized to `canonical_dims` whatever their size, so
/// predictions from tools that round scaled sizes differently still fuse.
pub fn restore_member(map: &LabelMap, t: &TtaTransform, canonical_dims: (usize, usize)) -> Result<LabelMap> {
    match t {
        TtaTransform::Rescale(_) | TtaTransform::Identity => {
            if matches!(t, TtaTransform::Identity) {
                Error::check_dims(canonical_dims, map.dims())?;
            }
            resize_labelmap(map, canonical_dims.0, canonical_dims.1)
        }
        _ => invert_transform(map, t, canonical_dims),
    }
}

/// Multi-scale schedule: strictly increasing, starting at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScaleSchedule {
    scales: Vec<f64>,
}

impl Default for ScaleSchedule {
    /// Seven scales, 1 to 1.75 in steps of 0.125.
    fn default() -> Self {
        ScaleSchedule::from_increments(0.125, 7).unwrap()
    }
}

impl ScaleSchedule {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        match scales.first() {
            None => return Err(Error::InvalidSchedule("no scales".into())),
            Some(&first) if first != 1.0 => {
                return Err(Error::InvalidSchedule(format!("first scale is {first}, must be 1")))
            }
            _ => {}
        }
        if let Some(w) = scales.windows(2).find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) || !w[1].is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "scales must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(ScaleSchedule { scales })
    }

    /// `count` scales `1, 1 + step, 1 + 2 step, ...`.
    pub fn from_increments(step: f64, count: usize) -> Result<Self> {
        Self::new((0..count).map(|i| 1.0 + step * i as f64).collect())
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn transforms(&self) -> Vec<TtaTransform> {
        self.scales
            .iter()
            .map(|&s| TtaTransform::rescale(s).expect("validated"))
            .collect()
    }
}

impl TryFrom<Vec<f64>> for ScaleSchedule {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ScaleSchedule::new(v)
    }
}

impl From<ScaleSchedule> for Vec<f64> {
    fn from(s: ScaleSchedule) -> Vec<f64> {
        s.scales
    }
}

impl FromStr for ScaleSchedule {
    type Err = Error;

    /// Comma-separated factors, e.g. `1,1.125,1.25`.
    fn from_str(s: &str) -> Result<Self> {
        let scales = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidSchedule(format!("`{}` is not a number", p.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        ScaleSchedule::new(scales)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackMember {
    pub transform: TtaTransform,
    pub map: LabelMap,
}

/// Predictions of one frame, all back on the original grid. Member 0 is the
/// canonical unscaled, untransformed prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionStack {
    frame_id: String,
    members: Vec<StackMember>,
}

impl PredictionStack {
    pub fn new(frame_id: impl Into<String>, members: Vec<StackMember>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyStack)?;
        if !first.transform.is_identity() {
            return Err(Error::NonCanonicalFirstMember(first.transform.to_string()));
        }
        let dims = first.map.dims();
        for m in &members[1..] {
            Error::check_dims(dims, m.map.dims())?;
        }
        Ok(PredictionStack {
            frame_id: frame_id.into(),
            members,
        })
    }

    /// Stack of maps already on the canonical grid, every member tagged identity.
    pub fn from_maps(frame_id: impl Into<String>, maps: Vec<LabelMap>) -> Result<Self> {
        Self::new(
            frame_id,
            maps.into_iter()
                .map(|map| StackMember {
                    transform: TtaTransform::Identity,
                    map,
                })
                .collect(),
        )
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn members(&self) -> &[StackMember] {
        &self.members
    }

    pub fn dims(&self) -> (usize, usize) {
        self.members[0].map.dims()
    }
}

/// Plurality label among `votes`; ties go to `votes[0]` when it is tied,
/// otherwise to the smallest tied label.
pub fn plurality(votes: &[u8]) -> u8 {
    let mut counts = [0u16; 256];
    let mut best = 0u16;
    for &v in votes {
        counts[v as usize] += 1;
        best = best.max(counts[v as usize]);
    }
    let canonical = votes[0];
    if counts[canonical as usize] == best {
        return canonical;
    }
    (0..=255u8)
        .find(|&l| counts[l as usize] == best)
        .expect("some label holds the maximum")
}

pub fn vote_fuse(stack: &PredictionStack) -> LabelMap {
    let members = stack.members();
    if members.len() == 1 {
        return members[0].map.clone();
    }
    let (w, h) = stack.dims();
    let n = w * h;
    let mut votes = vec![0u8; members.len()];
    let mut counts = [0u16; 256];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        for (v, m) in votes.iter_mut().zip(members) {
            *v = m.map.labels()[i];
        }
        // Counting only touches the labels present, so reset is cheap.
        let mut best = 0u16;
        for &v in &votes {
            counts[v as usize] += 1;
            best = best.max(counts[v as usize]);
        }
        let label = if counts[votes[0] as usize] == best {
            votes[0]
        } else {
            votes
                .iter()
                .copied()
                .filter(|&v| counts[v as usize] == best)
                .min()
                .unwrap()
        };
        for &v in &votes {
            counts[v as usize] = 0;
        }
        labels.push(label);
    }
    LabelMap::new(w, h, labels).expect("dims taken from stack")
}

/// Frame-by-frame [`vote_fuse`], order preserved.
pub fn fuse_sequence(stacks: &[PredictionStack]) -> Vec<LabelMap> {
    stacks.par_iter().map(vote_fuse).collect()
}
