//! Closing the background gaps that open up between adjacent objects when a
//! model predicts each object separately and the masks are merged afterwards.
//!
//! Two objects are adjacent when their dilated masks overlap. The overlap is
//! handed to both objects, and the usual higher-id-wins merge settles pixels
//! claimed by several of them.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{dilate, StructuringElement};
use crate::raster::{split_labels, LabelMap, ObjectSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapFillConfig {
    pub se: StructuringElement,
    /// Only ever write into pixels that were background in the input.
    pub fill_background_only: bool,
}

impl Default for GapFillConfig {
    fn default() -> Self {
        GapFillConfig {
            se: StructuringElement::square(2),
            fill_background_only: true,
        }
    }
}

impl GapFillConfig {
    pub fn with_se(se: StructuringElement) -> Self {
        GapFillConfig {
            se,
            ..Default::default()
        }
    }
}

/// Unordered pairs `(i, j)`, `i < j`, whose dilated masks overlap.
pub fn adjacency_pairs(objs: &ObjectSet, se: &StructuringElement) -> BTreeSet<(u8, u8)> {
    let dilated: Vec<_> = objs.iter().map(|(id, m)| (id, dilate(m, se))).collect();
    let mut pairs = BTreeSet::new();
    for (a, (id_a, da)) in dilated.iter().enumerate() {
        for (id_b, db) in &dilated[a + 1..] {
            // all masks in an ObjectSet share dimensions
            if da.intersects(db).unwrap() {
                pairs.insert((*id_a, *id_b));
            }
        }
    }
    pairs
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GapFillSummary {
    pub pixels_changed: usize,
    pub object_ids: Vec<u8>,
    /// Pairs `(i, j)`, `i < j`, ascending.
    pub adjacent_pairs: Vec<(u8, u8)>,
}

/// Fills inter-object gaps in one frame.
///
/// Object `k` claims `dilate(k) ∩ dilate(j)` for every object `j` adjacent
/// to it. A pixel is therefore claimed exactly when at least two dilated
/// masks cover it, and every covering object claims it; the highest of them
/// wins. Radius 0 leaves the map untouched since disjoint masks never meet.
pub fn gap_fill(map: &LabelMap, cfg: &GapFillConfig) -> LabelMap {
    gap_fill_with_summary(map, cfg).0
}

pub fn gap_fill_with_summary(map: &LabelMap, cfg: &GapFillConfig) -> (LabelMap, GapFillSummary) {
    let objs = split_labels(map);
    let mut summary = GapFillSummary {
        object_ids: objs.ids().collect(),
        ..Default::default()
    };
    if objs.len() < 2 || cfg.se.radius == 0 {
        return (map.clone(), summary);
    }

    let n = map.labels().len();
    // Per pixel: how many dilated masks cover it (saturating at 2) and the
    // highest covering id. Ascending iteration makes "last" the highest.
    let mut cover = vec![0u8; n];
    let mut top = vec![0u8; n];
    let mut dilated = Vec::with_capacity(objs.len());
    for (id, mask) in objs.iter() {
        let d = dilate(mask, &cfg.se);
        for ((c, t), &b) in cover.iter_mut().zip(top.iter_mut()).zip(d.bits()) {
            if b {
                *c = (*c + 1).min(2);
                *t = id;
            }
        }
        dilated.push(d);
    }

    let mut out = map.clone();
    for ((l, &c), &t) in out.labels_mut().iter_mut().zip(&cover).zip(&top) {
        if c < 2 {
            continue;
        }
        if *l == 0 || !cfg.fill_background_only {
            *l = (*l).max(t);
        }
    }

    summary.pixels_changed = out
        .labels()
        .iter()
        .zip(map.labels())
        .filter(|(a, b)| a != b)
        .count();
    let ids = &summary.object_ids;
    summary.adjacent_pairs = (0..dilated.len())
        .flat_map(|a| (a + 1..dilated.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| dilated[a].intersects(&dilated[b]).unwrap())
        .map(|(a, b)| (ids[a], ids[b]))
        .collect();
    (out, summary)
}

/// Frame-by-frame [`gap_fill`]; no temporal coupling.
pub fn gap_fill_sequence(frames: &[LabelMap], cfg: &GapFillConfig) -> Result<Vec<LabelMap>> {
    if let Some(first) = frames.first() {
        for f in frames {
            Error::check_dims(first.dims(), f.dims())?;
        }
    }
    Ok(frames.par_iter().map(|f| gap_fill(f, cfg)).collect())
}
