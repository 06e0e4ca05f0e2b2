//! Deterministic synthetic datasets for hermetic tests and demos.
//!
//! Each sample has an elliptical foreground blob. Channel 0 of its
//! embedding carries `+mu` on 64x64 cells whose aligned label is foreground
//! and `-mu` elsewhere; every channel gets uniform noise in `[-noise, noise]`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::data::{write_embedding, write_mask, BinaryMask, CoordSpace, EmbeddingGrid, ManifestEntry, SampleManifest};
use crate::decoder::GeometryInfo;
use crate::error::{Error, Result};
use crate::eval::align_gt_to_grid64;

/// Image sizes cycled through by the generator, as `(height, width)`.
pub const GEOMETRIES: [(usize, usize); 4] = [(256, 256), (240, 288), (288, 256), (320, 320)];

#[derive(Debug, Clone)]
pub struct FixtureSpec {
    pub samples: usize,
    pub mu: f32,
    pub noise: f32,
    /// Blob semi-axes as fractions of the image height and width.
    pub blob_extent: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            samples: 12,
            mu: 1.0,
            noise: 0.1,
            blob_extent: 0.45,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub id: String,
    pub geometry: GeometryInfo,
    pub gt: BinaryMask,
    pub embedding: EmbeddingGrid,
}

fn blob(h: usize, w: usize, extent: f64, rng: &mut SplitMix64) -> BinaryMask {
    let cx = w as f64 * rng.gen_range(0.45..0.55);
    let cy = h as f64 * rng.gen_range(0.45..0.55);
    let rx = w as f64 * extent * rng.gen_range(0.9..1.0);
    let ry = h as f64 * extent * rng.gen_range(0.9..1.0);
    BinaryMask::from_fn(h, w, CoordSpace::OriginalImage, |x, y| {
        let dx = (x as f64 + 0.5 - cx) / rx;
        let dy = (y as f64 + 0.5 - cy) / ry;
        dx * dx + dy * dy <= 1.0
    })
}

pub fn generate(spec: &FixtureSpec) -> Result<Vec<SyntheticSample>> {
    if spec.samples == 0 || !(spec.blob_extent > 0.0 && spec.blob_extent < 0.5) {
        return Err(Error::InvalidConfig(
            "fixture needs at least one sample and a blob extent in (0, 0.5)".into(),
        ));
    }
    let mut rng = SplitMix64::seed_from_u64(spec.seed);
    (0..spec.samples)
        .map(|i| {
            let (h, w) = GEOMETRIES[i % GEOMETRIES.len()];
            let geometry = GeometryInfo::new(h, w)?;
            let gt = blob(h, w, spec.blob_extent, &mut rng);
            let label = align_gt_to_grid64(&gt, &geometry)?;
            let embedding = EmbeddingGrid::from_fn(|c, y, x| {
                let n = rng.gen_range(-spec.noise..=spec.noise);
                if c == 0 {
                    n + if label.get(x, y) { spec.mu } else { -spec.mu }
                } else {
                    n
                }
            })?;
            Ok(SyntheticSample {
                id: format!("syn{i:03}"),
                geometry,
                gt,
                embedding,
            })
        })
        .collect()
}

/// Writes `embeddings/<id>.speb`, `masks/<id>.png` and `manifest.json`
/// under `dir` and returns the manifest.
pub fn write_fixture(dir: impl AsRef<Path>, spec: &FixtureSpec) -> Result<SampleManifest> {
    let dir = dir.as_ref();
    for sub in ["embeddings", "masks"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let mut entries = Vec::with_capacity(spec.samples);
    for s in generate(spec)? {
        let embedding_path = format!("embeddings/{}.speb", s.id);
        let mask_path = format!("masks/{}.png", s.id);
        write_embedding(&s.embedding, dir.join(&embedding_path))?;
        write_mask(&s.gt, dir.join(&mask_path))?;
        entries.push(ManifestEntry {
            id: s.id,
            embedding_path,
            mask_path,
            original_height: s.geometry.original_height,
            original_width: s.geometry.original_width,
        });
    }
    let manifest = SampleManifest::new(entries, dir)?;
    manifest.save(dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::load_manifest;

    #[test]
    fn generation_is_deterministic() {
        let spec = FixtureSpec {
            samples: 3,
            ..Default::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.gt, y.gt);
            assert_eq!(x.embedding.values(), y.embedding.values());
        }
    }

    #[test]
    fn channel_zero_separates_classes() {
        let spec = FixtureSpec {
            samples: 2,
            ..Default::default()
        };
        for s in generate(&spec).unwrap() {
            let label = align_gt_to_grid64(&s.gt, &s.geometry).unwrap();
            assert!(label.count() > 0);
            for y in 0..64 {
                for x in 0..64 {
                    let v = s.embedding.get(0, y, x);
                    assert_eq!(v > 0.0, label.get(x, y));
                }
            }
        }
    }

    #[test]
    fn fixture_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FixtureSpec {
            samples: 2,
            ..Default::default()
        };
        let m = write_fixture(dir.path(), &spec).unwrap();
        let back = load_manifest(dir.path().join("manifest.json")).unwrap();
        assert_eq!(back.ids(), m.ids());
        let e = back.entry("syn001").unwrap();
        let gt = crate::data::read_mask(back.mask_path(e), CoordSpace::OriginalImage).unwrap();
        assert_eq!(gt, generate(&spec).unwrap()[1].gt);
    }
}
