//! Indexed PNG mask files and the `<root>/<sequence>/<frame>.png` tree layout.
//!
//! Pixel value equals object id. Masks are written palette-indexed with the
//! usual VOS colour map so that standard viewers show distinct colours per
//! object, and read back from either indexed or 8-bit grayscale PNGs.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::raster::LabelMap;

pub const DEFAULT_MAX_DIMENSION: usize = 16384;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskReadOptions {
    /// Largest accepted width or height.
    pub max_dimension: usize,
}

impl Default for MaskReadOptions {
    fn default() -> Self {
        MaskReadOptions {
            max_dimension: DEFAULT_MAX_DIMENSION,
        }
    }
}

/// The 256-entry PASCAL/DAVIS colour map, packed as RGB triples.
pub fn vos_palette() -> [u8; 768] {
    let mut palette = [0u8; 768];
    for i in 0..256usize {
        let (mut r, mut g, mut b) = (0u8, 0u8, 0u8);
        let mut c = i;
        for j in 0..8 {
            r |= ((c & 1) as u8) << (7 - j);
            g |= (((c >> 1) & 1) as u8) << (7 - j);
            b |= (((c >> 2) & 1) as u8) << (7 - j);
            c >>= 3;
        }
        palette[3 * i] = r;
        palette[3 * i + 1] = g;
        palette[3 * i + 2] = b;
    }
    palette
}

pub fn read_mask_file(path: impl AsRef<Path>) -> Result<LabelMap> {
    read_mask_file_with(path, &MaskReadOptions::default())
}

pub fn read_mask_file_with(path: impl AsRef<Path>, opts: &MaskReadOptions) -> Result<LabelMap> {
    let path = path.as_ref();
    let decode_err = |e: png::DecodingError| match e {
        png::DecodingError::IoError(source) => Error::io(path, source),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    };

    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    // Palette indices must survive decoding untouched.
    decoder.set_transformations(Transformations::IDENTITY);

    let info = decoder.read_header_info().map_err(decode_err)?;
    let (width, height) = (info.width as usize, info.height as usize);
    if width > opts.max_dimension || height > opts.max_dimension {
        return Err(Error::TooLarge {
            path: path.to_path_buf(),
            width,
            height,
            max: opts.max_dimension,
        });
    }
    if info.bit_depth != BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            depth: info.bit_depth as u8,
        });
    }
    if !matches!(info.color_type, ColorType::Grayscale | ColorType::Indexed) {
        return Err(Error::UnsupportedColorType {
            path: path.to_path_buf(),
            color: format!("{:?}", info.color_type),
        });
    }

    let mut reader = decoder.read_info().map_err(decode_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        path: path.to_path_buf(),
        message: "image too large to buffer".into(),
    })?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(decode_err)?;
    let line = frame.line_size;
    let labels = if line == width {
        buf.truncate(width * height);
        buf
    } else {
        buf.chunks(line)
            .take(height)
            .flat_map(|row| row[..width].iter().copied())
            .collect()
    };
    LabelMap::new(width, height, labels)
}

pub fn write_mask_file(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let encode_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(source) => Error::io(path, source),
        other => Error::Encode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        map.width() as u32,
        map.height() as u32,
    );
    encoder.set_color(ColorType::Indexed);
    encoder.set_depth(BitDepth::Eight);
    encoder.set_palette(vos_palette().to_vec());
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(map.labels()).map_err(encode_err)?;
    writer.finish().map_err(encode_err)?;
    Ok(())
}

fn sorted_entries(dir: &Path, want_dirs: bool) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let ty = entry.file_type().map_err(|e| Error::io(entry.path(), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let wanted = if want_dirs {
            ty.is_dir()
        } else {
            ty.is_file() && name.to_ascii_lowercase().ends_with(".png")
        };
        if wanted {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Sequence directory names under `root`, lexicographically ordered.
pub fn list_sequences(root: impl AsRef<Path>) -> Result<Vec<String>> {
    sorted_entries(root.as_ref(), true)
}

/// PNG frame file names in a sequence directory, lexicographically ordered.
pub fn list_frames(seq_dir: impl AsRef<Path>) -> Result<Vec<String>> {
    sorted_entries(seq_dir.as_ref(), false)
}

/// Zero-padded frame file name, `00042.png`.
pub fn frame_file_name(index: usize) -> String {
    format!("{index:05}.png")
}

/// A named, ordered list of frames read from one sequence directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskSequence {
    pub name: String,
    pub frame_names: Vec<String>,
    pub frames: Vec<LabelMap>,
}

pub fn read_sequence(root: impl AsRef<Path>, name: &str) -> Result<MaskSequence> {
    let dir = root.as_ref().join(name);
    let frame_names = list_frames(&dir)?;
    let frames = frame_names
        .iter()
        .map(|f| read_mask_file(dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MaskSequence {
        name: name.to_string(),
        frame_names,
        frames,
    })
}

pub fn write_sequence(root: impl AsRef<Path>, seq: &MaskSequence) -> Result<Vec<PathBuf>> {
    let dir = root.as_ref().join(&seq.name);
    seq.frame_names
        .iter()
        .zip(&seq.frames)
        .map(|(f, map)| {
            let p = dir.join(f);
            write_mask_file(map, &p)?;
            Ok(p)
        })
        .collect()
}
