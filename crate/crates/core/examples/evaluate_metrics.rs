//! Region J, boundary F and a J&F report for a short sequence.
//!
//! cargo run --example evaluate_metrics

use maskpost::metrics::{boundary_match, AggregationOrder, FrameExclusion, SequenceScores};
use maskpost::{aggregate, evaluate_sequence, jaccard, BinaryMask, BoundaryParams, LabelMap};

fn square(dx: usize) -> BinaryMask {
    let mut m = BinaryMask::empty(8, 8).unwrap();
    for y in 2..6 {
        for x in 2 + dx..6 + dx {
            m.set(x, y, true);
        }
    }
    m
}

fn main() -> maskpost::Result<()> {
    let (gt, pred) = (square(0), square(1));
    println!("J = {:.4}", jaccard(&pred, &gt)?);
    for r in [0, 1] {
        let m = boundary_match(&pred, &gt, r)?;
        println!("radius {r}: P = {:.4}, R = {:.4}, F = {:.4}", m.precision, m.recall, m.f);
    }

    let gt_frames = vec![
        LabelMap::from_rows(&[[1u8, 1, 0, 0], [1, 1, 0, 2], [0, 0, 2, 2]])?,
        LabelMap::from_rows(&[[1u8, 1, 0, 0], [1, 1, 0, 0], [0, 0, 0, 2]])?,
        LabelMap::from_rows(&[[0u8, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0]])?,
    ];
    let pred_frames = vec![
        gt_frames[0].clone(),
        LabelMap::from_rows(&[[1u8, 1, 1, 0], [1, 1, 0, 0], [0, 0, 2, 2]])?,
        LabelMap::from_rows(&[[0u8, 1, 1, 0], [0, 1, 0, 0], [0, 0, 0, 2]])?,
    ];
    let params = BoundaryParams::default();
    let scores = evaluate_sequence(&pred_frames, &gt_frames, &[1, 2], &params, &FrameExclusion::default())?;
    for s in &scores {
        println!("object {} frame {}: J = {:.4}, F = {:.4}", s.object_id, s.frame_index, s.j, s.f);
    }
    let seq = SequenceScores {
        name: "demo".into(),
        scores,
        excluded_frames: FrameExclusion::default().excluded(gt_frames.len()),
        missing_prediction: false,
    };
    let report = aggregate(&[seq], AggregationOrder::Hierarchical)?;
    print!("{}", report.to_table());
    println!("{}", report.to_json());
    Ok(())
}
