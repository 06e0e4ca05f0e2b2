//! Exact Euclidean distance transform (Meijster, Roerdink & Hesselink).
//!
//! Pass one scans columns for the vertical distance to the nearest
//! background pixel; pass two takes the lower envelope of parabolas along
//! each row. All arithmetic is on integers, so squared distances are exact.

use crate::data::BinaryMask;
use crate::error::{Error, Result};

/// Squared distance from each pixel to its nearest background pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    height: usize,
    width: usize,
    squared: Vec<u64>,
}

impl DistanceMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn squared(&self) -> &[u64] {
        &self.squared
    }

    pub fn squared_at(&self, x: usize, y: usize) -> u64 {
        self.squared[y * self.width + x]
    }

    pub fn distance(&self, x: usize, y: usize) -> f64 {
        (self.squared_at(x, y) as f64).sqrt()
    }

    /// Euclidean distances, row-major.
    pub fn distances(&self) -> Vec<f64> {
        self.squared.iter().map(|&d| (d as f64).sqrt()).collect()
    }
}

fn squared_edt(bits: &[bool], h: usize, w: usize) -> Vec<u64> {
    // Larger than any in-image distance; only reached by columns with no
    // background (which cannot win the row envelope if any column has one).
    let inf = (h + w) as i64;
    let mut g = vec![0i64; h * w];
    for x in 0..w {
        g[x] = if bits[x] { inf } else { 0 };
        for y in 1..h {
            g[y * w + x] = if bits[y * w + x] { g[(y - 1) * w + x] + 1 } else { 0 };
        }
        for y in (0..h.saturating_sub(1)).rev() {
            let below = g[(y + 1) * w + x];
            if below < g[y * w + x] {
                g[y * w + x] = below + 1;
            }
        }
    }

    let mut out = vec![0u64; h * w];
    let mut s = vec![0i64; w];
    let mut t = vec![0i64; w];
    for y in 0..h {
        let row = &g[y * w..(y + 1) * w];
        let f = |x: i64, i: i64| (x - i) * (x - i) + row[i as usize] * row[i as usize];
        let sep = |i: i64, u: i64| {
            let (gi, gu) = (row[i as usize], row[u as usize]);
            (u * u - i * i + gu * gu - gi * gi).div_euclid(2 * (u - i))
        };
        let mut q: i64 = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w as i64 {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let wsep = 1 + sep(s[q as usize], u);
                if wsep < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = wsep;
                }
            }
        }
        for u in (0..w as i64).rev() {
            out[y * w + u as usize] = f(u, s[q as usize]) as u64;
            if u == t[q as usize] {
                q -= 1;
            }
        }
    }
    out
}

/// Background pixels map to 0. A mask with no background at all is treated
/// as if framed by background one pixel outside the image.
pub fn distance_transform(mask: &BinaryMask) -> DistanceMap {
    let (h, w) = (mask.height(), mask.width());
    let has_background = mask.bits().iter().any(|&b| !b);
    let squared = if has_background || h == 0 || w == 0 {
        squared_edt(mask.bits(), h, w)
    } else {
        let (ph, pw) = (h + 2, w + 2);
        let framed: Vec<bool> = (0..ph * pw)
            .map(|i| {
                let (x, y) = (i % pw, i / pw);
                x > 0 && y > 0 && x <= w && y <= h
            })
            .collect();
        let full = squared_edt(&framed, ph, pw);
        (0..h * w)
            .map(|i| full[(i / w + 1) * pw + i % w + 1])
            .collect()
    };
    DistanceMap {
        height: h,
        width: w,
        squared,
    }
}

/// The foreground pixel farthest from the background, as `(x, y)`. Ties go
/// to the smallest `(y, x)`.
pub fn extract_point(mask: &BinaryMask) -> Result<(usize, usize)> {
    let dm = distance_transform(mask);
    let mut best: Option<(u64, usize)> = None;
    for (i, (&d, &fg)) in dm.squared.iter().zip(mask.bits()).enumerate() {
        if fg && best.map_or(true, |(bd, _)| d > bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| (i % mask.width(), i / mask.width()))
        .ok_or(Error::EmptyMask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CoordSpace;
    use proptest::prelude::*;

    fn brute(mask: &BinaryMask) -> Vec<u64> {
        let bg: Vec<(i64, i64)> = (0..mask.height())
            .flat_map(|y| (0..mask.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| !mask.get(x, y))
            .map(|(x, y)| (x as i64, y as i64))
            .collect();
        (0..mask.height() * mask.width())
            .map(|i| {
                let (x, y) = ((i % mask.width()) as i64, (i / mask.width()) as i64);
                bg.iter()
                    .map(|&(bx, by)| ((bx - x).pow(2) + (by - y).pow(2)) as u64)
                    .min()
                    .unwrap()
            })
            .collect()
    }

    fn centered3() -> BinaryMask {
        BinaryMask::from_fn(5, 5, CoordSpace::Grid256, |x, y| (1..4).contains(&x) && (1..4).contains(&y))
    }

    #[test]
    fn hand_cases() {
        let empty = BinaryMask::empty(6, 4, CoordSpace::Grid256);
        assert!(distance_transform(&empty).squared().iter().all(|&d| d == 0));

        let dm = distance_transform(&centered3());
        assert_eq!(dm.distance(2, 2), 2.0);
        assert_eq!(dm.distance(1, 1), 1.0);
        assert_eq!(dm.distance(3, 1), 1.0);
        assert_eq!(dm.distance(0, 0), 0.0);
        assert_eq!(extract_point(&centered3()).unwrap(), (2, 2));
    }

    #[test]
    fn single_pixel_and_empty_point() {
        let mut m = BinaryMask::empty(16, 16, CoordSpace::Grid256);
        m.set(7, 9, true);
        assert_eq!(extract_point(&m).unwrap(), (7, 9));
        let empty = BinaryMask::empty(3, 3, CoordSpace::Grid256);
        assert!(matches!(extract_point(&empty), Err(Error::EmptyMask)));
    }

    #[test]
    fn all_foreground_uses_virtual_frame() {
        let m = BinaryMask::full(7, 5, CoordSpace::Grid256);
        let dm = distance_transform(&m);
        for y in 0..7 {
            for x in 0..5 {
                let d = (x + 1).min(y + 1).min(5 - x).min(7 - y) as u64;
                assert_eq!(dm.squared_at(x, y), d * d);
            }
        }
        // (2, 2), (2, 3) and (2, 4) all sit at distance 3.
        assert_eq!(extract_point(&m).unwrap(), (2, 2));
        let big = BinaryMask::full(256, 256, CoordSpace::Grid256);
        assert_eq!(extract_point(&big).unwrap(), (127, 127));
    }

    #[test]
    fn equal_blobs_tie_to_first_in_raster_order() {
        let m = BinaryMask::from_fn(20, 30, CoordSpace::Grid256, |x, y| {
            (2..7).contains(&y) && ((3..8).contains(&x) || (20..25).contains(&x))
        });
        let dm = brute(&m);
        let (x, y) = extract_point(&m).unwrap();
        let max = dm.iter().zip(m.bits()).filter(|(_, &b)| b).map(|(d, _)| *d).max().unwrap();
        assert_eq!(dm[y * 30 + x], max);
        assert_eq!((x, y), (5, 4));
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            h in 1usize..20,
            w in 1usize..20,
            density in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(seed);
            let mut m = BinaryMask::from_fn(h, w, CoordSpace::Grid256, |_, _| rng.gen_bool(density));
            if m.bits().iter().all(|&b| b) {
                m.set(0, 0, false);
            }
            prop_assert_eq!(distance_transform(&m).squared().to_vec(), brute(&m));
            if !m.is_empty() {
                let (x, y) = extract_point(&m).unwrap();
                prop_assert!(m.get(x, y));
            }
        }
    }
}
