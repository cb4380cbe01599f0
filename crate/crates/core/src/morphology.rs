//! Binary dilation and erosion.
//!
//! Pixels outside the frame are background for both operations: a dilation
//! footprint hanging over the border simply sees nothing there, and an
//! erosion footprint hanging over the border fails containment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::raster::BinaryMask;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeShape {
    #[default]
    Square,
    Disk,
}

impl fmt::Display for SeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeShape::Square => "square",
            SeShape::Disk => "disk",
        })
    }
}

impl FromStr for SeShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" => Ok(SeShape::Square),
            "disk" | "circle" => Ok(SeShape::Disk),
            other => Err(Error::Config(format!(
                "unknown structuring element shape `{other}` (expected square or disk)"
            ))),
        }
    }
}

/// Symmetric structuring element centred on the origin.
///
/// A square of radius `r` covers `|dx| <= r, |dy| <= r` (side `2r + 1`); a
/// disk covers `dx^2 + dy^2 <= r^2`. Radius 0 is the origin alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructuringElement {
    pub shape: SeShape,
    pub radius: usize,
}

impl Default for StructuringElement {
    fn default() -> Self {
        StructuringElement::square(2)
    }
}

fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

impl StructuringElement {
    pub fn new(shape: SeShape, radius: usize) -> Self {
        StructuringElement { shape, radius }
    }

    pub fn square(radius: usize) -> Self {
        Self::new(SeShape::Square, radius)
    }

    pub fn disk(radius: usize) -> Self {
        Self::new(SeShape::Disk, radius)
    }

    pub fn contains(&self, dx: isize, dy: isize) -> bool {
        let r = self.radius as isize;
        match self.shape {
            SeShape::Square => dx.abs() <= r && dy.abs() <= r,
            SeShape::Disk => dx * dx + dy * dy <= r * r,
        }
    }

    /// Horizontal half-extent of the footprint on row offset `dy`.
    pub fn half_width(&self, dy: usize) -> Option<usize> {
        if dy > self.radius {
            return None;
        }
        Some(match self.shape {
            SeShape::Square => self.radius,
            SeShape::Disk => isqrt(self.radius * self.radius - dy * dy),
        })
    }

    /// Every `(dx, dy)` offset in the footprint, row by row.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if self.contains(dx, dy) {
                    out.push((dx, dy));
                }
            }
        }
        out
    }

    pub fn area(&self) -> usize {
        self.offsets().len()
    }
}

impl fmt::Display for StructuringElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.shape, self.radius)
    }
}

/// Running count of set pixels; `prefix[i]` counts `row[..i]`.
fn row_prefix(row: &[bool], prefix: &mut [u32]) {
    prefix[0] = 0;
    let mut acc = 0u32;
    for (p, &b) in prefix[1..].iter_mut().zip(row) {
        acc += b as u32;
        *p = acc;
    }
}

/// `out[x] |= any(row[x - hw ..= x + hw])`, given the row's prefix counts.
fn or_horizontal(prefix: &[u32], hw: usize, out: &mut [bool]) {
    let w = out.len();
    for (x, o) in out.iter_mut().enumerate() {
        let lo = x.saturating_sub(hw);
        let hi = (x + hw + 1).min(w);
        *o |= prefix[hi] != prefix[lo];
    }
}

fn dilate_square(mask: &BinaryMask, r: usize) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut horiz = vec![false; w * h];
    let mut prefix = vec![0u32; w + 1];
    for y in 0..h {
        row_prefix(mask.row(y), &mut prefix);
        or_horizontal(&prefix, r, &mut horiz[y * w..(y + 1) * w]);
    }

    // Sliding vertical window of per-column counts over the rows of `horiz`.
    let mut counts = vec![0u32; w];
    let add = |counts: &mut [u32], y: usize| {
        for (c, &b) in counts.iter_mut().zip(&horiz[y * w..(y + 1) * w]) {
            *c += b as u32;
        }
    };
    for y in 0..=r.min(h - 1) {
        add(&mut counts, y);
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        for (o, &c) in out[y * w..(y + 1) * w].iter_mut().zip(&counts) {
            *o = c != 0;
        }
        if y + r + 1 < h {
            add(&mut counts, y + r + 1);
        }
        if y >= r {
            let leaving = &horiz[(y - r) * w..(y - r + 1) * w];
            for (c, &b) in counts.iter_mut().zip(leaving) {
                *c -= b as u32;
            }
        }
    }
    BinaryMask::from_parts_unchecked(w, h, out)
}

fn dilate_rows(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = se.radius;
    let mut prefix = vec![0u32; (w + 1) * h];
    for y in 0..h {
        row_prefix(mask.row(y), &mut prefix[y * (w + 1)..(y + 1) * (w + 1)]);
    }
    let half_widths: Vec<usize> = (0..=r).map(|dy| se.half_width(dy).unwrap()).collect();
    let mut out = vec![false; w * h];
    for y in 0..h {
        let out_row = &mut out[y * w..(y + 1) * w];
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for src in lo..=hi {
            let hw = half_widths[src.abs_diff(y)];
            or_horizontal(&prefix[src * (w + 1)..(src + 1) * (w + 1)], hw, out_row);
        }
    }
    BinaryMask::from_parts_unchecked(w, h, out)
}

/// Output pixel `x` is set iff the footprint translated to `x` meets the
/// input foreground.
///
/// Squares use a separable row pass plus a sliding column count, so the cost
/// is independent of the radius. Disks OR one horizontal run per footprint
/// row, read off per-row prefix counts.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    if se.radius == 0 {
        return mask.clone();
    }
    match se.shape {
        SeShape::Square => dilate_square(mask, se.radius),
        SeShape::Disk => dilate_rows(mask, se),
    }
}

/// Output pixel `x` is set iff the whole footprint at `x` lies inside the
/// frame and inside the foreground.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    if se.radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let r = se.radius;
    let mut out = dilate(&mask.complement(), se);
    for y in 0..h {
        let interior_row = y >= r && y + r < h;
        for x in 0..w {
            let interior = interior_row && x >= r && x + r < w;
            let b = &mut out.bits_mut()[y * w + x];
            *b = interior && !*b;
        }
    }
    out
}

/// Literal per-pixel test of the dilation definition at `(x, y)`.
pub fn brute_force_dilate_at(
    mask: &BinaryMask,
    offsets: &[(isize, isize)],
    x: usize,
    y: usize,
) -> bool {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    offsets.iter().any(|&(dx, dy)| {
        let (sx, sy) = (x as isize + dx, y as isize + dy);
        sx >= 0 && sy >= 0 && sx < w && sy < h && mask.get(sx as usize, sy as usize)
    })
}

/// Reference dilation: a double loop over pixels and footprint offsets.
///
/// Slow on purpose. It exists to check [`dilate`] against.
pub fn brute_force_dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    let offsets = se.offsets();
    let mut bits = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            bits.push(brute_force_dilate_at(mask, &offsets, x, y));
        }
    }
    BinaryMask::from_parts_unchecked(w, h, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shapes() -> [SeShape; 2] {
        [SeShape::Square, SeShape::Disk]
    }

    #[test]
    fn footprints() {
        assert_eq!(StructuringElement::square(0).offsets(), vec![(0, 0)]);
        assert_eq!(StructuringElement::disk(0).offsets(), vec![(0, 0)]);
        assert_eq!(StructuringElement::square(2).area(), 25);
        // dx^2 + dy^2 <= 4: 1 + 3 + 5 + 3 + 1
        assert_eq!(StructuringElement::disk(2).area(), 13);
        assert_eq!(StructuringElement::disk(1).area(), 5);
    }

    #[test]
    fn half_widths_match_footprint() {
        for shape in shapes() {
            for r in 0..12 {
                let se = StructuringElement::new(shape, r);
                for dy in 0..=r {
                    let hw = se.half_width(dy).unwrap() as isize;
                    assert!(se.contains(hw, dy as isize));
                    assert!(!se.contains(hw + 1, dy as isize));
                }
                assert_eq!(se.half_width(r + 1), None);
            }
        }
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::empty(6, 5).unwrap();
        for shape in shapes() {
            assert!(dilate(&m, &StructuringElement::new(shape, 3)).is_empty());
            assert!(brute_force_dilate(&m, &StructuringElement::new(shape, 3)).is_empty());
        }
    }

    #[test]
    fn point_grows_into_square_block() {
        let m = BinaryMask::from_ascii(&[".....", ".....", "..#..", ".....", "....."]).unwrap();
        let expected =
            BinaryMask::from_ascii(&[".....", ".###.", ".###.", ".###.", "....."]).unwrap();
        assert_eq!(dilate(&m, &StructuringElement::square(1)), expected);
    }

    #[test]
    fn point_grows_into_clipped_disk() {
        let mut m = BinaryMask::empty(5, 5).unwrap();
        m.set(2, 2, true);
        assert_eq!(brute_force_dilate(&m, &StructuringElement::disk(2)).count(), 13);
        let mut corner = BinaryMask::empty(5, 5).unwrap();
        corner.set(0, 0, true);
        // quarter disk: offsets with dx, dy >= 0 and dx^2 + dy^2 <= 4
        assert_eq!(brute_force_dilate(&corner, &StructuringElement::disk(2)).count(), 6);
    }

    #[test]
    fn erode_full_mask_radius_zero() {
        let m = BinaryMask::full(4, 3).unwrap();
        assert_eq!(erode(&m, &StructuringElement::square(0)), m);
    }

    #[test]
    fn erode_three_by_three_leaves_center() {
        let m = BinaryMask::full(3, 3).unwrap();
        let e = erode(&m, &StructuringElement::square(1));
        assert_eq!(e.count(), 1);
        assert!(e.get(1, 1));
    }

    fn mask_from_u16(bits: u16, w: usize, h: usize) -> BinaryMask {
        let v = (0..w * h).map(|i| bits >> i & 1 == 1).collect();
        BinaryMask::new(w, h, v).unwrap()
    }

    #[test]
    fn exhaustive_tiny_grids_match_oracle() {
        for w in 1..=4usize {
            for h in 1..=4usize {
                for bits in 0..(1u32 << (w * h)) {
                    let m = mask_from_u16(bits as u16, w, h);
                    for shape in shapes() {
                        for r in 0..=2 {
                            let se = StructuringElement::new(shape, r);
                            assert_eq!(dilate(&m, &se), brute_force_dilate(&m, &se));
                        }
                    }
                }
            }
        }
    }

    fn brute_force_erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
        let (w, h) = mask.dims();
        let mut out = BinaryMask::empty(w, h).unwrap();
        for y in 0..h {
            for x in 0..w {
                let inside = se.offsets().iter().all(|&(dx, dy)| {
                    let (sx, sy) = (x as isize + dx, y as isize + dy);
                    sx >= 0
                        && sy >= 0
                        && sx < w as isize
                        && sy < h as isize
                        && mask.get(sx as usize, sy as usize)
                });
                out.set(x, y, inside);
            }
        }
        out
    }

    fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
        (1usize..=8, 1usize..=8).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h)
                .prop_map(move |bits| BinaryMask::new(w, h, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn random_masks_match_oracle(m in mask_strategy(), r in 0usize..=3, disk in any::<bool>()) {
            let se = StructuringElement::new(if disk { SeShape::Disk } else { SeShape::Square }, r);
            prop_assert_eq!(dilate(&m, &se), brute_force_dilate(&m, &se));
        }

        #[test]
        fn erosion_is_dual_on_padded_grid(m in mask_strategy(), r in 0usize..=3, disk in any::<bool>()) {
            let se = StructuringElement::new(if disk { SeShape::Disk } else { SeShape::Square }, r);
            // Pad with an r-wide background ring, dilate the complement there,
            // complement back and crop: outside-the-frame counts as background.
            let (w, h) = m.dims();
            let (pw, ph) = (w + 2 * r, h + 2 * r);
            let mut padded = BinaryMask::empty(pw, ph).unwrap();
            for y in 0..h {
                for x in 0..w {
                    padded.set(x + r, y + r, m.get(x, y));
                }
            }
            let dual = brute_force_dilate(&padded.complement(), &se).complement();
            let mut cropped = BinaryMask::empty(w, h).unwrap();
            for y in 0..h {
                for x in 0..w {
                    cropped.set(x, y, dual.get(x + r, y + r));
                }
            }
            let eroded = erode(&m, &se);
            prop_assert_eq!(&eroded, &cropped);
            prop_assert_eq!(&eroded, &brute_force_erode(&m, &se));
        }
    }
}
