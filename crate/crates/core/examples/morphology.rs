//! Dilation and erosion with square and disk elements, checked against the
//! brute-force reference.
//!
//! cargo run --example morphology

use maskpost::morphology::{brute_force_dilate, dilate, erode, StructuringElement};
use maskpost::BinaryMask;

fn show(title: &str, m: &BinaryMask) {
    println!("{title}");
    for y in 0..m.height() {
        let row: String = m.row(y).iter().map(|&b| if b { '#' } else { '.' }).collect();
        println!("  {row}");
    }
}

fn main() -> maskpost::Result<()> {
    let mask = BinaryMask::from_ascii(&[
        "...........",
        "...........",
        "...##......",
        "...##......",
        "........#..",
        "...........",
        "...........",
    ])?;
    show("input", &mask);

    for se in [StructuringElement::square(1), StructuringElement::disk(2)] {
        let d = dilate(&mask, &se);
        assert_eq!(d, brute_force_dilate(&mask, &se));
        println!("{se}: footprint area {}", se.area());
        show(&format!("dilate {se}"), &d);
        show(&format!("erode(dilate) {se}"), &erode(&d, &se));
    }
    Ok(())
}
