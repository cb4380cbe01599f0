//! Closing the background channel between two adjacent objects.
//!
//! cargo run --example gap_fill

use maskpost::cli::fixtures::{channel_gap_pixels, two_blob_gap};
use maskpost::postprocess::{adjacency_pairs, gap_fill_with_summary};
use maskpost::{gap_fill, split_labels, GapFillConfig, LabelMap, StructuringElement};

fn show(map: &LabelMap) {
    for y in 0..map.height() {
        let row: String = map.row(y).iter().map(|&l| if l == 0 { '.' } else { char::from(b'0' + l) }).collect();
        println!("  {row}");
    }
}

fn main() -> maskpost::Result<()> {
    let line = LabelMap::from_rows(&[[1u8, 1, 1, 0, 2, 2, 2]])?;
    println!("1x7 row {:?} -> {:?}", line.labels(), gap_fill(&line, &GapFillConfig::default()).labels());

    let gap = 2;
    let map = two_blob_gap(24, 7, gap);
    println!("two objects, {gap}px channel:");
    show(&map);
    for r in [0, 1, 2, 3] {
        let cfg = GapFillConfig::with_se(StructuringElement::square(r));
        let (filled, summary) = gap_fill_with_summary(&map, &cfg);
        let pairs = adjacency_pairs(&split_labels(&map), &cfg.se);
        println!(
            "{}: adjacent {pairs:?}, {} pixels filled, {} channel pixels left",
            cfg.se,
            summary.pixels_changed,
            channel_gap_pixels(&filled, gap)
        );
        if r == 2 {
            show(&filled);
        }
    }
    Ok(())
}
