//! `images/{train,val,test}/<id>.png` with annotations at
//! `groundTruth/<split>/<id>_<k>.png` (any nonzero pixel is a boundary).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::BinaryMap;
use crate::imgproc::{load_image, MultiChannelImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown split '{s}' (train, val, test)")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetItem {
    pub id: String,
    pub image: PathBuf,
    /// Sorted by annotator index.
    pub annotations: Vec<PathBuf>,
    pub split: Split,
}

/// A decoded item whose annotations all match the image size.
#[derive(Clone, Debug)]
pub struct LoadedItem {
    pub id: String,
    pub split: Split,
    pub image: MultiChannelImage,
    pub annotations: Vec<BinaryMap>,
}

fn dimensions(path: &Path) -> Result<(u32, u32)> {
    image::image_dimensions(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

fn sorted_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Lists every image with its annotations, checking (from the PNG headers)
/// that each annotation has the image's size.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Vec<DatasetItem>> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::Dataset(format!("{} is not a directory", root.display())));
    }
    let mut items = Vec::new();
    for split in Split::ALL {
        let img_dir = root.join("images").join(split.name());
        if !img_dir.is_dir() {
            continue;
        }
        let gt_dir = root.join("groundTruth").join(split.name());
        let gts = if gt_dir.is_dir() { sorted_pngs(&gt_dir)? } else { Vec::new() };
        for image in sorted_pngs(&img_dir)? {
            let id = image
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Dataset(format!("non UTF-8 file name {}", image.display())))?
                .to_string();
            let mut ann: Vec<(u32, PathBuf)> = gts
                .iter()
                .filter_map(|p| {
                    let stem = p.file_stem()?.to_str()?;
                    let k = stem.strip_prefix(id.as_str())?.strip_prefix('_')?;
                    if k.is_empty() || !k.bytes().all(|b| b.is_ascii_digit()) {
                        return None;
                    }
                    Some((k.parse().ok()?, p.clone()))
                })
                .collect();
            if ann.is_empty() {
                return Err(Error::Dataset(format!(
                    "image {} has no annotations in {}",
                    image.display(),
                    gt_dir.display()
                )));
            }
            ann.sort();
            let dims = dimensions(&image)?;
            for (_, p) in &ann {
                let d = dimensions(p)?;
                if d != dims {
                    return Err(Error::Dataset(format!(
                        "annotation {} is {}x{} but image {} is {}x{}",
                        p.display(),
                        d.0,
                        d.1,
                        image.display(),
                        dims.0,
                        dims.1
                    )));
                }
            }
            items.push(DatasetItem {
                id,
                image,
                annotations: ann.into_iter().map(|(_, p)| p).collect(),
                split,
            });
        }
    }
    Ok(items)
}

impl DatasetItem {
    pub fn load(&self) -> Result<LoadedItem> {
        let image = load_image(&self.image)?;
        let annotations = self
            .annotations
            .iter()
            .map(|p| {
                let m = BinaryMap::load(p)?;
                if m.width != image.width() || m.height != image.height() {
                    return Err(Error::Dataset(format!(
                        "annotation {} is {}x{} but the image is {}x{}",
                        p.display(),
                        m.width,
                        m.height,
                        image.width(),
                        image.height()
                    )));
                }
                Ok(m)
            })
            .collect::<Result<_>>()?;
        Ok(LoadedItem {
            id: self.id.clone(),
            split: self.split,
            image,
            annotations,
        })
    }
}

/// Items of one split, decoded.
pub fn load_split(items: &[DatasetItem], split: Split) -> Result<Vec<LoadedItem>> {
    items.iter().filter(|i| i.split == split).map(DatasetItem::load).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::{save_binary, save_image_u8, ColorSpace};

    fn write_item(root: &Path, split: &str, id: &str, ann: &[(usize, (usize, usize))]) {
        std::fs::create_dir_all(root.join("images").join(split)).unwrap();
        std::fs::create_dir_all(root.join("groundTruth").join(split)).unwrap();
        let img = MultiChannelImage::new(4, 3, 1, vec![0.5; 12], ColorSpace::Gray).unwrap();
        save_image_u8(&img, root.join("images").join(split).join(format!("{id}.png"))).unwrap();
        for &(k, (w, h)) in ann {
            save_binary(
                &vec![false; w * h],
                w,
                h,
                root.join("groundTruth").join(split).join(format!("{id}_{k}.png")),
            )
            .unwrap();
        }
    }

    #[test]
    fn empty_root() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_dataset(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn groups_and_sorts_annotations() {
        let dir = tempfile::tempdir().unwrap();
        write_item(dir.path(), "train", "a", &[(2, (4, 3)), (0, (4, 3)), (10, (4, 3))]);
        write_item(dir.path(), "test", "a_1", &[(0, (4, 3))]);
        let items = load_dataset(dir.path()).unwrap();
        assert_eq!(items.len(), 2);
        let a = &items[0];
        assert_eq!((a.id.as_str(), a.split), ("a", Split::Train));
        let names: Vec<_> = a.annotations.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
        assert_eq!(names, ["a_0.png", "a_2.png", "a_10.png"]);
        let loaded = a.load().unwrap();
        assert_eq!(loaded.annotations.len(), 3);
        assert_eq!(items[1].annotations.len(), 1);
    }

    #[test]
    fn wrong_size_annotation_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_item(dir.path(), "val", "b", &[(0, (4, 3)), (1, (5, 3))]);
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("b_1.png"), "{err}");
    }

    #[test]
    fn missing_annotations() {
        let dir = tempfile::tempdir().unwrap();
        write_item(dir.path(), "val", "c", &[]);
        assert!(matches!(load_dataset(dir.path()), Err(Error::Dataset(_))));
    }
}
