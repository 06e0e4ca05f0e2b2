//! SPLC classifier file: magic `SPLC`, u32 version = 1, u32 dim = 256,
//! `dim` little-endian f32 weights, then the f32 bias.

use std::fs;
use std::path::Path;

use super::PixelClassifier;
use crate::data::EMBED_CHANNELS;
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"SPLC";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 12;

pub fn save_classifier(classifier: &PixelClassifier, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if classifier.dim() != EMBED_CHANNELS {
        return Err(Error::dims("classifier", EMBED_CHANNELS, classifier.dim()));
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * (EMBED_CHANNELS + 1));
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(EMBED_CHANNELS as u32).to_le_bytes());
    for w in classifier.weights() {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    buf.extend_from_slice(&classifier.bias().to_le_bytes());
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_classifier(path: impl AsRef<Path>) -> Result<PixelClassifier> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = HEADER_LEN + 4 * (EMBED_CHANNELS + 1);
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: MAGIC,
            found: magic,
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.into(),
            version,
        });
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if dim != EMBED_CHANNELS {
        return Err(Error::dims(path.display().to_string(), EMBED_CHANNELS, dim));
    }
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            found: bytes.len(),
        });
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect::<Vec<_>>();
    let bias = values.pop().unwrap();
    PixelClassifier::new(values, bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::SplitMix64;

    fn random() -> PixelClassifier {
        let mut rng = SplitMix64::seed_from_u64(2);
        PixelClassifier::new((0..256).map(|_| rng.gen_range(-3.0..3.0)).collect(), -1.25).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.splc");
        let c = random();
        save_classifier(&c, &p).unwrap();
        assert_eq!(load_classifier(&p).unwrap(), c);
        assert_eq!(fs::metadata(&p).unwrap().len(), 12 + 4 * 257);
    }

    #[test]
    fn rejects_truncation_dims_and_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.splc");
        save_classifier(&random(), &p).unwrap();
        let good = fs::read(&p).unwrap();

        fs::write(&p, &good[..good.len() - 4]).unwrap();
        assert!(matches!(load_classifier(&p), Err(Error::Truncated { .. })));

        let mut dim = good.clone();
        dim[8..12].copy_from_slice(&255u32.to_le_bytes());
        fs::write(&p, &dim).unwrap();
        assert!(matches!(load_classifier(&p), Err(Error::DimensionMismatch { .. })));

        let mut magic = good.clone();
        magic[0] = b'X';
        fs::write(&p, &magic).unwrap();
        assert!(matches!(load_classifier(&p), Err(Error::BadMagic { .. })));

        let mut version = good;
        version[4] = 9;
        fs::write(&p, &version).unwrap();
        assert!(matches!(load_classifier(&p), Err(Error::UnsupportedVersion { .. })));

        assert!(save_classifier(&PixelClassifier::zeros(3), &p).is_err());
    }
}
