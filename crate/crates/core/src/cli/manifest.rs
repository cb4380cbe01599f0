//! Fusion manifests.
//!
//! Plain text, one member per line:
//!
//! ```text
//! # descriptor   mask root
//! scale:1        members/scale_1
//! scale:1.125    members/scale_1.125
//! hflip          /data/preds/hflip
//! ```
//!
//! The descriptor is one of `id`, `rot90`, `rot180`, `rot270`, `hflip` or
//! `scale:<factor>` and names the transform that was applied to the input
//! frames before prediction. The rest of the line is the member's mask root;
//! relative paths are taken from the manifest's directory. Blank lines and
//! lines starting with `#` are ignored. The first member is the canonical
//! prediction and must be `id` or `scale:1`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fusion::TtaTransform;

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub transform: TtaTransform,
    pub root: PathBuf,
    pub line: usize,
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let err = |line: usize, message: String| Error::Manifest {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (descriptor, rest) = trimmed
            .split_once(char::is_whitespace)
            .ok_or_else(|| err(line, format!("expected `<transform> <path>`, got `{trimmed}`")))?;
        let transform: TtaTransform = descriptor
            .parse()
            .map_err(|_| err(line, format!("unknown transform `{descriptor}`")))?;
        let rel = PathBuf::from(rest.trim());
        let root = if rel.is_absolute() { rel } else { base.join(rel) };
        entries.push(ManifestEntry {
            transform,
            root,
            line,
        });
    }
    match entries.first() {
        None => Err(err(0, "manifest lists no members".into())),
        Some(first) if !first.transform.is_identity() => Err(err(
            first.line,
            format!("first member must be canonical (id or scale:1), got `{}`", first.transform),
        )),
        _ => Ok(entries),
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path)
}

/// Renders entries back to manifest text, paths as given.
pub fn format_manifest(entries: &[(TtaTransform, &str)]) -> String {
    let mut s = String::from("# transform  mask-root\n");
    for (t, p) in entries {
        s.push_str(&format!("{t} {p}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_members_and_skips_comments() {
        let text = "# header\n\nscale:1 a\n  scale:1.25   b dir \nhflip /abs/c\n";
        let entries = parse_manifest(text, Path::new("/root/m.txt")).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0].root, PathBuf::from("/root/a"));
        assert_eq!(entries[1].root, PathBuf::from("/root/b dir"));
        assert_eq!(entries[1].transform, TtaTransform::rescale(1.25).unwrap());
        assert_eq!(entries[1].line, 4);
        assert_eq!(entries[2].root, PathBuf::from("/abs/c"));
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_manifest("id a\nrot45 b\n", Path::new("m.txt")).unwrap_err();
        assert!(matches!(e, Error::Manifest { line: 2, .. }), "{e}");
        assert!(e.to_string().contains("m.txt:2"));
        let e = parse_manifest("id a\nhflip\n", Path::new("m.txt")).unwrap_err();
        assert!(matches!(e, Error::Manifest { line: 2, .. }));
    }

    #[test]
    fn rejects_empty_and_non_canonical() {
        assert!(parse_manifest("# nothing\n", Path::new("m")).is_err());
        let e = parse_manifest("rot90 a\nid b\n", Path::new("m")).unwrap_err();
        assert!(matches!(e, Error::Manifest { line: 1, .. }));
    }

    #[test]
    fn format_parses_back() {
        let t = [
            (TtaTransform::rescale(1.0).unwrap(), "x"),
            (TtaTransform::Rotate90, "y"),
        ];
        let parsed = parse_manifest(&format_manifest(&t), Path::new("m")).unwrap();
        assert_eq!(parsed[1].transform, TtaTransform::Rotate90);
    }
}
