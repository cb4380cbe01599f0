//! Label maps, binary masks and the conversions between them.
//!
//! Every raster is row-major with the origin at the top-left corner.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

fn check_shape(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    let expected = width * height;
    if len != expected {
        return Err(Error::BufferLength {
            width,
            height,
            expected,
            found: len,
        });
    }
    Ok(())
}

/// A frame of object identifiers, `0` being background.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        check_shape(width, height, labels.len())?;
        Ok(LabelMap {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: u8) -> Result<Self> {
        Self::new(width, height, vec![label; width * height])
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0)
    }

    /// Builds a map from equally long rows.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut labels = Vec::with_capacity(width * height);
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: (width, 1),
                    found: (row.len(), 1),
                });
            }
            labels.extend_from_slice(row);
        }
        Self::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u8] {
        &mut self.labels
    }

    pub fn into_labels(self) -> Vec<u8> {
        self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: u8) {
        self.labels[y * self.width + x] = label;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.labels[y * self.width..(y + 1) * self.width]
    }

    /// Distinct nonzero labels, ascending.
    pub fn object_ids(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (1..=255u8).filter(|&l| seen[l as usize]).collect()
    }

    /// Pixel count per label value.
    pub fn histogram(&self) -> [usize; 256] {
        let mut h = [0usize; 256];
        for &l in &self.labels {
            h[l as usize] += 1;
        }
        h
    }

    /// Binary mask of the pixels carrying `label`.
    pub fn mask_of(&self, label: u8) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == label).collect(),
        }
    }

    /// Binary mask of every nonzero pixel.
    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l != 0).collect(),
        }
    }
}

/// A single-object raster of booleans.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_shape(width, height, bits.len())?;
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    /// Parses rows of `'#'`/`'1'` (set) and anything else (unset).
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut bits = Vec::with_capacity(width * height);
        for row in rows {
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: (width, 1),
                    found: (row.len(), 1),
                });
            }
            bits.extend(row.bytes().map(|b| b == b'#' || b == b'1'));
        }
        Self::new(width, height, bits)
    }

    pub(crate) fn from_parts_unchecked(width: usize, height: usize, bits: Vec<bool>) -> Self {
        debug_assert_eq!(bits.len(), width * height);
        BinaryMask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.bits[y * self.width..(y + 1) * self.width]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        Error::check_dims(self.dims(), other.dims())?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> Result<usize> {
        Error::check_dims(self.dims(), other.dims())?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }

    pub fn intersects(&self, other: &BinaryMask) -> Result<bool> {
        Error::check_dims(self.dims(), other.dims())?;
        Ok(self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b))
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> Result<bool> {
        Error::check_dims(self.dims(), other.dims())?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }
}

/// Per-object masks keyed by ascending object id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectSet {
    width: usize,
    height: usize,
    entries: BTreeMap<u8, BinaryMask>,
}

impl ObjectSet {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(ObjectSet {
            width,
            height,
            entries: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, object_id: u8, mask: BinaryMask) -> Result<()> {
        if object_id == 0 {
            return Err(Error::ZeroObjectId);
        }
        Error::check_dims(self.dims(), mask.dims())?;
        if self.entries.contains_key(&object_id) {
            return Err(Error::DuplicateObject(object_id));
        }
        self.entries.insert(object_id, mask);
        Ok(())
    }

    /// Builds a set from `(id, mask)` pairs in any order.
    pub fn from_entries(
        width: usize,
        height: usize,
        entries: impl IntoIterator<Item = (u8, BinaryMask)>,
    ) -> Result<Self> {
        let mut set = Self::new(width, height)?;
        for (id, mask) in entries {
            set.insert(id, mask)?;
        }
        Ok(set)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, object_id: u8) -> Option<&BinaryMask> {
        self.entries.get(&object_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = u8> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, &BinaryMask)> + '_ {
        self.entries.iter().map(|(&id, m)| (id, m))
    }
}

/// One disjoint mask per distinct nonzero label of `map`.
pub fn split_labels(map: &LabelMap) -> ObjectSet {
    let (w, h) = map.dims();
    let entries = map
        .object_ids()
        .into_iter()
        .map(|id| (id, map.mask_of(id)))
        .collect();
    ObjectSet {
        width: w,
        height: h,
        entries,
    }
}

/// Flattens an object set; where masks overlap the highest id wins.
pub fn merge_labels(objs: &ObjectSet) -> LabelMap {
    let (w, h) = objs.dims();
    let mut labels = vec![0u8; w * h];
    // Ascending iteration lets later (higher) ids overwrite.
    for (id, mask) in objs.iter() {
        for (l, &b) in labels.iter_mut().zip(mask.bits()) {
            if b {
                *l = id;
            }
        }
    }
    LabelMap {
        width: w,
        height: h,
        labels,
    }
}

/// Nearest-neighbour source index for destination index `dst`.
///
/// `floor((dst + 0.5) * src_size / dst_size)`, evaluated in integers and
/// clamped to the source range.
pub fn nearest_source_index(dst: usize, src_size: usize, dst_size: usize) -> usize {
    let idx = ((2 * dst + 1) * src_size) / (2 * dst_size);
    idx.min(src_size - 1)
}

/// Nearest-neighbour resize. Never produces a label absent from the input.
pub fn resize_labelmap(map: &LabelMap, new_width: usize, new_height: usize) -> Result<LabelMap> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::InvalidDimensions {
            width: new_width,
            height: new_height,
        });
    }
    if map.dims() == (new_width, new_height) {
        return Ok(map.clone());
    }
    let (w, h) = map.dims();
    let cols: Vec<usize> = (0..new_width)
        .map(|x| nearest_source_index(x, w, new_width))
        .collect();
    let mut labels = Vec::with_capacity(new_width * new_height);
    for y in 0..new_height {
        let src = map.row(nearest_source_index(y, h, new_height));
        labels.extend(cols.iter().map(|&x| src[x]));
    }
    Ok(LabelMap {
        width: new_width,
        height: new_height,
        labels,
    })
}
