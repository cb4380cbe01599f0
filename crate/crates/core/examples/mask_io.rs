//! Reading and writing indexed PNG masks in a sequence tree.
//!
//! cargo run --example mask_io

use maskpost::maskio::{list_frames, list_sequences, read_sequence, write_sequence, MaskSequence};
use maskpost::{read_mask_file, write_mask_file, LabelMap};

fn main() -> maskpost::Result<()> {
    let root = std::env::temp_dir().join(format!("maskpost-mask-io-{}", std::process::id()));
    let map = LabelMap::from_rows(&[[0u8, 1, 1], [2, 2, 255]])?;
    let single = root.join("single.png");
    write_mask_file(&map, &single)?;
    assert_eq!(read_mask_file(&single)?, map);
    println!("round-tripped {}", single.display());

    let seq = MaskSequence {
        name: "walk".into(),
        frame_names: vec!["00000.png".into(), "00001.png".into()],
        frames: vec![map.clone(), LabelMap::zeros(3, 2)?],
    };
    write_sequence(root.join("tree"), &seq)?;
    for name in list_sequences(root.join("tree"))? {
        println!("{name}: {:?}", list_frames(root.join("tree").join(&name))?);
        let back = read_sequence(root.join("tree"), &name)?;
        assert_eq!(back, seq);
    }
    std::fs::remove_dir_all(&root).map_err(|e| maskpost::Error::io(&root, e))?;
    Ok(())
}
