//! Fold splitting and shot sampling. Both draw from SplitMix64.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::data::SampleManifest;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub index: usize,
    /// Ids available for shot sampling, in manifest order.
    pub train_pool: Vec<String>,
    /// Held-out ids, in manifest order.
    pub eval: Vec<String>,
}

/// Shuffles ids by `seed` and deals them into `folds` near-equal parts
/// (the first `n % folds` parts get one extra).
pub fn kfold_split(manifest: &SampleManifest, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = manifest.len();
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidConfig(format!(
            "{folds} folds requested but the manifest has only {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SplitMix64::seed_from_u64(seed));
    let mut assignment = vec![0usize; n];
    let (base, extra) = (n / folds, n % folds);
    let mut cursor = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        for &i in &order[cursor..cursor + size] {
            assignment[i] = f;
        }
        cursor += size;
    }
    Ok((0..folds)
        .map(|f| {
            let (eval, pool): (Vec<_>, Vec<_>) = manifest.entries.iter().zip(&assignment).partition(|(_, &a)| a == f);
            Fold {
                index: f,
                train_pool: pool.into_iter().map(|(e, _)| e.id.clone()).collect(),
                eval: eval.into_iter().map(|(e, _)| e.id.clone()).collect(),
            }
        })
        .collect())
}

/// Number of labelled training images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ShotCount {
    Count(usize),
    /// The entire training pool of the fold.
    Full,
}

impl fmt::Display for ShotCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShotCount::Count(n) => write!(f, "{n}"),
            ShotCount::Full => f.write_str("full"),
        }
    }
}

impl FromStr for ShotCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(ShotCount::Full);
        }
        s.parse()
            .map(ShotCount::Count)
            .map_err(|_| Error::InvalidConfig(format!("invalid shot count {s:?} (a number or `full`)")))
    }
}

impl From<ShotCount> for String {
    fn from(s: ShotCount) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for ShotCount {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Uniform sample without replacement, returned in pool order.
pub fn sample_shots(pool: &[String], shots: ShotCount, seed: u64) -> Result<Vec<String>> {
    let k = match shots {
        ShotCount::Full => return Ok(pool.to_vec()),
        ShotCount::Count(0) => {
            return Err(Error::InvalidConfig("shot count must be at least 1".into()));
        }
        ShotCount::Count(k) if k > pool.len() => {
            return Err(Error::InvalidConfig(format!(
                "{k} shots requested from a pool of {}",
                pool.len()
            )));
        }
        ShotCount::Count(k) => k,
    };
    let mut picks = index::sample(&mut SplitMix64::seed_from_u64(seed), pool.len(), k).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| pool[i].clone()).collect())
}
