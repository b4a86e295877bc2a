//! Training directories of labelled corner patches and scene directories
//! of PNG + JSON pairs.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::eval::match_detections;
use super::render::{random_scene_spec, render_scene, RandomSceneOptions, SceneSidecar, SyntheticScene};
use super::DatasetError;
use crate::classify::CardLabel;
use crate::pipeline::{extract_candidates, PipelineConfig};
use crate::raster::{ImageGray, ImageRgb};
use crate::reproject::{CornerPatch, Quad, PATCH_SIZE};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPatch {
    pub patch: CornerPatch,
    pub label: CardLabel,
    pub source: PathBuf,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    v.sort();
    Ok(v)
}

fn parse_class_dir(name: &str) -> Result<CardLabel, DatasetError> {
    let (index, label) = name.split_once('-').ok_or_else(|| DatasetError::BadName(name.to_owned()))?;
    if index.is_empty() || label.is_empty() {
        return Err(DatasetError::BadName(name.to_owned()));
    }
    label.parse().map_err(|_| DatasetError::UnknownLabel {
        file: name.to_owned(),
        label: label.to_owned(),
    })
}

/// Reads `<dir>/<index>-<label>/*` as 28x28 grayscale patches. Loose files
/// at the top level are ignored.
pub fn load_training_dir(dir: impl AsRef<Path>) -> Result<Vec<LabeledPatch>, DatasetError> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(DatasetError::MissingDir(dir.display().to_string()));
    }
    let mut out = Vec::new();
    for sub in sorted_entries(dir)? {
        if !sub.is_dir() {
            continue;
        }
        let name = sub.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let label = parse_class_dir(&name)?;
        for file in sorted_entries(&sub)? {
            if !file.is_file() {
                continue;
            }
            let img = ImageGray::load(&file)?;
            if img.width() != PATCH_SIZE || img.height() != PATCH_SIZE {
                return Err(DatasetError::PatchSize {
                    file: file.display().to_string(),
                    expected: PATCH_SIZE,
                    width: img.width(),
                    height: img.height(),
                });
            }
            out.push(LabeledPatch {
                patch: CornerPatch::new(img).expect("size checked"),
                label,
                source: file,
            });
        }
    }
    Ok(out)
}

/// Writes patches as `<dir>/<index>-<label>/<n>.png`, with `index` the
/// label's position in [`CardLabel::ALL`].
pub fn write_training_dir(dir: impl AsRef<Path>, patches: &[LabeledPatch]) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    let mut counts = [0usize; 14];
    for p in patches {
        let index = CardLabel::ALL.iter().position(|&l| l == p.label).expect("label in ALL");
        let sub = dir.join(format!("{index}-{}", p.label.as_str()));
        fs::create_dir_all(&sub)?;
        p.patch.image().save_png(sub.join(format!("{:03}.png", counts[index])))?;
        counts[index] += 1;
    }
    Ok(())
}

/// Corner patches cut from rendered scenes by the detection pipeline
/// itself, `per_label` for each of the 14 classes. Each detection is
/// labelled by the ground-truth card it matches.
pub fn synthetic_training_set(
    per_label: usize,
    seed: u64,
    opts: &RandomSceneOptions,
    cfg: &PipelineConfig,
) -> Result<Vec<LabeledPatch>, DatasetError> {
    const PER_SCENE: usize = 6;
    let mut wanted: Vec<CardLabel> = (0..per_label).flat_map(|_| CardLabel::ALL).collect();
    let mut out: Vec<LabeledPatch> = Vec::with_capacity(wanted.len());
    let mut round = 0u64;
    // retry cards that were not recovered (rare); bounded to avoid spinning
    while !wanted.is_empty() && round < 8 {
        let batches: Vec<Vec<CardLabel>> = wanted.chunks(PER_SCENE).map(|c| c.to_vec()).collect();
        let results: Vec<Result<(Vec<LabeledPatch>, Vec<CardLabel>), DatasetError>> = batches
            .par_iter()
            .enumerate()
            .map(|(i, labels)| {
                let scene_seed = seed.wrapping_add(round << 32).wrapping_add(i as u64);
                patches_from_scene(scene_seed, labels, opts, cfg)
            })
            .collect();
        wanted.clear();
        for r in results {
            let (got, lost) = r?;
            out.extend(got);
            wanted.extend(lost);
        }
        round += 1;
    }
    out.sort_by_key(|p| CardLabel::ALL.iter().position(|&l| l == p.label));
    Ok(out)
}

fn patches_from_scene(
    seed: u64,
    labels: &[CardLabel],
    opts: &RandomSceneOptions,
    cfg: &PipelineConfig,
) -> Result<(Vec<LabeledPatch>, Vec<CardLabel>), DatasetError> {
    let spec = random_scene_spec(seed, opts, Some(labels))?;
    let scene = render_scene(&spec)?;
    let cands = extract_candidates::<f64>(&scene.image, cfg)?;
    let truths: Vec<Quad<f64>> = scene.ground_truth.iter().map(|g| g.quad).collect();
    let dets: Vec<Quad<f64>> = cands.cards.iter().map(|c| c.quad).collect();
    let mut found = vec![false; truths.len()];
    let mut got = Vec::new();
    for (i, j) in match_detections(&truths, &dets) {
        let (Some(patch), Some(label)) = (&cands.cards[j].patch, scene.ground_truth[i].label) else {
            continue;
        };
        found[i] = true;
        got.push(LabeledPatch {
            patch: patch.clone(),
            label,
            source: PathBuf::from(format!("synthetic/{seed}/{i}")),
        });
    }
    let lost = labels.iter().zip(found).filter(|(_, f)| !f).map(|(&l, _)| l).collect();
    Ok((got, lost))
}

/// One labelled scene read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub image_path: PathBuf,
    pub image: ImageRgb,
    pub sidecar: SceneSidecar,
}

/// Writes `scene_NNNN.png` and `scene_NNNN.json` per scene.
pub fn write_scene_dir(dir: impl AsRef<Path>, scenes: &[SyntheticScene]) -> Result<Vec<PathBuf>, DatasetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (i, s) in scenes.iter().enumerate() {
        let png = dir.join(format!("scene_{i:04}.png"));
        s.image.save_png(&png)?;
        let json = serde_json::to_string_pretty(&s.sidecar()).expect("sidecar serializes");
        fs::write(png.with_extension("json"), json)?;
        paths.push(png);
    }
    Ok(paths)
}

/// Loads every `*.json` sidecar in `dir` together with the image of the
/// same stem (`.png`, `.jpg` or `.jpeg`).
pub fn load_scene_dir(dir: impl AsRef<Path>) -> Result<Vec<SceneFile>, DatasetError> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(DatasetError::MissingDir(dir.display().to_string()));
    }
    let mut out = Vec::new();
    for path in sorted_entries(dir)? {
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let file = path.display().to_string();
        let text = fs::read_to_string(&path)?;
        let sidecar: SceneSidecar = serde_json::from_str(&text).map_err(|e| DatasetError::Sidecar {
            file: file.clone(),
            msg: e.to_string(),
        })?;
        let image_path = ["png", "jpg", "jpeg"]
            .iter()
            .map(|ext| path.with_extension(ext))
            .find(|p| p.is_file())
            .ok_or_else(|| DatasetError::Sidecar {
                file: file.clone(),
                msg: "no matching image".into(),
            })?;
        let image = ImageRgb::load(&image_path)?;
        out.push(SceneFile {
            image_path,
            image,
            sidecar,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_patch(path: &Path, size: usize) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        ImageGray::filled(size, size, 0).unwrap().save_png(path).unwrap();
    }

    #[test]
    fn label_from_first_hyphen() {
        let tmp = tempfile::tempdir().unwrap();
        write_patch(&tmp.path().join("0-10/a.png"), 28);
        write_patch(&tmp.path().join("3-BACK/b.png"), 28);
        fs::write(tmp.path().join("README"), "ignored").unwrap();
        let v = load_training_dir(tmp.path()).unwrap();
        assert_eq!(v.iter().map(|p| p.label).collect::<Vec<_>>(), vec![CardLabel::Ten, CardLabel::Back]);
        assert!(v[0].source.ends_with("0-10/a.png"));
    }

    #[test]
    fn malformed_directory_name() {
        let tmp = tempfile::tempdir().unwrap();
        write_patch(&tmp.path().join("misc/a.png"), 28);
        assert!(matches!(load_training_dir(tmp.path()), Err(DatasetError::BadName(n)) if n == "misc"));
    }

    #[test]
    fn unknown_label_and_wrong_size() {
        let tmp = tempfile::tempdir().unwrap();
        write_patch(&tmp.path().join("1-Z/a.png"), 28);
        assert!(matches!(load_training_dir(tmp.path()), Err(DatasetError::UnknownLabel { .. })));

        let tmp = tempfile::tempdir().unwrap();
        write_patch(&tmp.path().join("1-A/big.png"), 30);
        match load_training_dir(tmp.path()) {
            Err(DatasetError::PatchSize { file, .. }) => assert!(file.ends_with("big.png")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_directory() {
        assert!(matches!(
            load_training_dir("/definitely/not/here"),
            Err(DatasetError::MissingDir(_))
        ));
    }

    #[test]
    fn write_then_load_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let patch = CornerPatch::new(ImageGray::from_fn(28, 28, |x, y| ((x + y) % 2 * 255) as u8).unwrap()).unwrap();
        let items = vec![
            LabeledPatch {
                patch: patch.clone(),
                label: CardLabel::Queen,
                source: PathBuf::new(),
            },
            LabeledPatch {
                patch,
                label: CardLabel::Two,
                source: PathBuf::new(),
            },
        ];
        write_training_dir(tmp.path(), &items).unwrap();
        assert!(tmp.path().join("10-Q/000.png").is_file());
        let back = load_training_dir(tmp.path()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].label, CardLabel::Two);
        assert_eq!(back[0].patch, items[1].patch);
    }
}
