use crate::data::BinaryMask;
use crate::error::Result;

fn counts(pred: &BinaryMask, gt: &BinaryMask) -> Result<(usize, usize, usize)> {
    gt.same_shape(pred, "metric inputs")?;
    let mut inter = 0;
    let (mut a, mut b) = (0, 0);
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        a += p as usize;
        b += g as usize;
        inter += (p && g) as usize;
    }
    Ok((inter, a, b))
}

/// `2|A n B| / (|A| + |B|)`; two empty masks score 1.
pub fn dice(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    let (inter, a, b) = counts(pred, gt)?;
    Ok(if a + b == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (a + b) as f64
    })
}

/// `|A n B| / |A u B|`; two empty masks score 1.
pub fn iou(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    let (inter, a, b) = counts(pred, gt)?;
    let union = a + b - inter;
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}
