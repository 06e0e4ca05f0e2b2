//! Regularized pixel-wise logistic loss and its derivatives.
//!
//! Parameters are packed as `theta = [w_0 .. w_{d-1}, b]`. The smooth form
//! `softplus(z) - t*z` is used here; it equals the cross-entropy on
//! `sigma(z)` without any probability clamp.

use rayon::prelude::*;

use super::PixelDataset;

/// Pixels per reduction chunk. Fixed so that summation order, and therefore
/// every bit of the result, is independent of the worker count.
const CHUNK: usize = 4096;

pub(crate) struct LogisticProblem<'a> {
    pub data: &'a PixelDataset,
    pub lambda: f64,
}

#[inline]
fn dot(w: &[f64], x: &[f32]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut wc = w.chunks_exact(4);
    let mut xc = x.chunks_exact(4);
    for (wq, xq) in (&mut wc).zip(&mut xc) {
        acc[0] += wq[0] * xq[0] as f64;
        acc[1] += wq[1] * xq[1] as f64;
        acc[2] += wq[2] * xq[2] as f64;
        acc[3] += wq[3] * xq[3] as f64;
    }
    let mut tail = 0.0;
    for (a, b) in wc.remainder().iter().zip(xc.remainder()) {
        tail += a * *b as f64;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticProblem<'_> {
    pub fn dim(&self) -> usize {
        self.data.dim
    }

    /// `X w + b` for every pixel.
    pub fn margins(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let (w, b) = (&theta[..d], theta[d]);
        self.data
            .features
            .par_chunks(d)
            .map(|x| dot(w, x) + b)
            .collect()
    }

    /// Summed loss over pixels (before sample weighting) for given margins.
    fn data_loss(&self, z: &[f64]) -> f64 {
        z.par_chunks(CHUNK)
            .zip(self.data.labels.par_chunks(CHUNK))
            .map(|(zc, tc)| {
                zc.iter()
                    .zip(tc)
                    .map(|(&z, &t)| softplus(z) - if t { z } else { 0.0 })
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }

    pub fn objective_from_margins(&self, theta: &[f64], z: &[f64]) -> f64 {
        let d = self.dim();
        let penalty: f64 = theta[..d].iter().map(|w| w * w).sum();
        self.data.weight * self.data_loss(z) + self.lambda * penalty
    }

    /// Gradient at `theta`, given its margins `z`.
    pub fn gradient(&self, theta: &[f64], z: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let partials: Vec<Vec<f64>> = self
            .data
            .features
            .par_chunks(CHUNK * d)
            .zip(z.par_chunks(CHUNK))
            .zip(self.data.labels.par_chunks(CHUNK))
            .map(|((xs, zc), tc)| {
                let mut g = vec![0.0f64; d + 1];
                for ((x, &z), &t) in xs.chunks_exact(d).zip(zc).zip(tc) {
                    let r = sigmoid(z) - if t { 1.0 } else { 0.0 };
                    for (gi, &xi) in g[..d].iter_mut().zip(x) {
                        *gi += r * xi as f64;
                    }
                    g[d] += r;
                }
                g
            })
            .collect();
        let mut grad = vec![0.0f64; d + 1];
        for p in &partials {
            for (g, v) in grad.iter_mut().zip(p) {
                *g += v;
            }
        }
        for g in &mut grad {
            *g *= self.data.weight;
        }
        for (g, w) in grad[..d].iter_mut().zip(&theta[..d]) {
            *g += 2.0 * self.lambda * w;
        }
        grad
    }
}
