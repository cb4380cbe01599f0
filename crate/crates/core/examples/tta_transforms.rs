//! Test-time augmentation: apply a transform, predict, undo it.
//!
//! cargo run --example tta_transforms

use maskpost::fusion::restore_member;
use maskpost::{apply_transform, invert_transform, LabelMap, ScaleSchedule, TtaTransform};

fn main() -> maskpost::Result<()> {
    let map = LabelMap::from_rows(&[[1u8, 2, 3], [4, 5, 6]])?;
    for t in ["id", "rot90", "rot180", "rot270", "hflip"] {
        let t: TtaTransform = t.parse()?;
        let out = apply_transform(&map, &t);
        let back = invert_transform(&out, &t, map.dims())?;
        assert_eq!(back, map);
        println!("{t:>6}: {}x{} {:?}", out.width(), out.height(), out.labels());
    }

    let schedule = ScaleSchedule::default();
    println!("default scales: {:?}", schedule.scales());
    for t in schedule.transforms() {
        let scaled = apply_transform(&map, &t);
        let restored = restore_member(&scaled, &t, map.dims())?;
        println!("{t:>10}: {}x{} -> {}x{}", scaled.width(), scaled.height(), restored.width(), restored.height());
        assert_eq!(restored, map);
    }
    Ok(())
}
