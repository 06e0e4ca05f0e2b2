//! Frozen encoder output and the SPEB container it is stored in.
//!
//! Layout (all integers little-endian):
//!
//! | offset | field                       |
//! |--------|-----------------------------|
//! | 0      | magic `SPEB`                |
//! | 4      | u32 version (= 1)           |
//! | 8      | u32 channels                |
//! | 12     | u32 height                  |
//! | 16     | u32 width                   |
//! | 20     | `C*H*W` f32, channel-major  |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const EMBED_CHANNELS: usize = 256;
pub const EMBED_SIZE: usize = 64;
const PLANE: usize = EMBED_SIZE * EMBED_SIZE;
const LEN: usize = EMBED_CHANNELS * PLANE;

const MAGIC: [u8; 4] = *b"SPEB";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

/// A `256 x 64 x 64` feature volume in channel-major `(c, y, x)` order.
#[derive(Clone, PartialEq)]
pub struct EmbeddingGrid {
    values: Vec<f32>,
}

impl EmbeddingGrid {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.len() != LEN {
            return Err(Error::dims(
                "embedding values",
                format!("{LEN} ({EMBED_CHANNELS}x{EMBED_SIZE}x{EMBED_SIZE})"),
                values.len(),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "embedding".into(),
                index,
            });
        }
        Ok(Self { values })
    }

    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; LEN],
        }
    }

    /// Builds a grid from `f(c, y, x)`.
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> f32) -> Result<Self> {
        let mut values = Vec::with_capacity(LEN);
        for c in 0..EMBED_CHANNELS {
            for y in 0..EMBED_SIZE {
                for x in 0..EMBED_SIZE {
                    values.push(f(c, y, x));
                }
            }
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// One `64 x 64` row-major channel plane.
    pub fn channel(&self, c: usize) -> &[f32] {
        &self.values[c * PLANE..(c + 1) * PLANE]
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.values[c * PLANE + y * EMBED_SIZE + x]
    }

    /// Feature vectors per pixel, pixel-major (`(y, x)` rows of 256 channels).
    pub fn pixel_major(&self) -> Vec<f32> {
        let mut out = vec![0.0f32; LEN];
        for c in 0..EMBED_CHANNELS {
            let plane = self.channel(c);
            for (p, &v) in plane.iter().enumerate() {
                out[p * EMBED_CHANNELS + c] = v;
            }
        }
        out
    }
}

impl std::fmt::Debug for EmbeddingGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EmbeddingGrid({EMBED_CHANNELS}x{EMBED_SIZE}x{EMBED_SIZE})")
    }
}

pub fn write_embedding(grid: &EmbeddingGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * LEN);
    buf.extend_from_slice(&MAGIC);
    for v in [VERSION, EMBED_CHANNELS as u32, EMBED_SIZE as u32, EMBED_SIZE as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in &grid.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_embedding(path: impl AsRef<Path>) -> Result<EmbeddingGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

fn decode(bytes: &[u8], path: &Path) -> Result<EmbeddingGrid> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: MAGIC,
            found: magic,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = word(0);
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.into(),
            version,
        });
    }
    let dims = (word(1), word(2), word(3));
    let want = (EMBED_CHANNELS as u32, EMBED_SIZE as u32, EMBED_SIZE as u32);
    if dims != want {
        return Err(Error::dims(
            path.display().to_string(),
            format!("{}x{}x{}", want.0, want.1, want.2),
            format!("{}x{}x{}", dims.0, dims.1, dims.2),
        ));
    }
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 4 * LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN + 4 * LEN,
            found: bytes.len(),
        });
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingGrid::new(values).map_err(|e| match e {
        Error::NonFinite { index, .. } => Error::NonFinite {
            context: path.display().to_string(),
            index,
        },
        other => other,
    })
}
