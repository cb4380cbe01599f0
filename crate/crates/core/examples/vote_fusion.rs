//! Per-pixel plurality voting over a prediction stack.
//!
//! cargo run --example vote_fusion

use maskpost::{vote_fuse, LabelMap, PredictionStack};

fn main() -> maskpost::Result<()> {
    let members = vec![
        LabelMap::from_rows(&[[1u8, 1, 0, 2], [0, 2, 2, 2]])?,
        LabelMap::from_rows(&[[1u8, 0, 0, 2], [3, 3, 2, 2]])?,
        LabelMap::from_rows(&[[1u8, 1, 2, 0], [3, 0, 2, 1]])?,
    ];
    for (k, m) in members.iter().enumerate() {
        println!("member {k}: {:?}", m.labels());
    }
    let stack = PredictionStack::from_maps("demo/00000", members)?;
    let fused = vote_fuse(&stack);
    println!("fused:    {:?}", fused.labels());
    // (2,0) votes 0,0,2 and (3,1) votes 2,2,1: plain majorities.
    // (0,1) votes 0,3,3 and 3 wins. (1,1) votes 2,3,0: a three-way tie goes
    // to member 0.
    assert_eq!(fused.labels(), &[1, 1, 0, 2, 3, 2, 2, 2]);
    Ok(())
}
