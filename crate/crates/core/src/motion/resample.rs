use super::types::PointSeq;
use crate::error::{Error, Result};

pub const NATIVE_RATE: f64 = 15.0;
pub const ANCHOR_RATE: f64 = 5.0;

/// Catmull-Rom basis weights for `p[i-1], p[i], p[i+1], p[i+2]` at `s ∈ [0, 1]`.
#[inline]
pub fn catmull_rom_weights(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        0.5 * (-s3 + 2.0 * s2 - s),
        0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
        0.5 * (-3.0 * s3 + 4.0 * s2 + s),
        0.5 * (s3 - s2),
    ]
}

/// Replace every non-anchor frame of a `frames × dim` row-major signal with
/// the Catmull-Rom spline through every `native/anchor`-th frame.
///
/// Anchors are copied verbatim. End segments use linearly extrapolated phantom
/// anchors, so affine signals are reproduced; frames after the last anchor are
/// evaluated on the extrapolated segment.
pub fn anchor_resample(data: &[f64], dim: usize, native_rate: f64, anchor_rate: f64) -> Result<Vec<f64>> {
    let ratio = native_rate / anchor_rate;
    let step = ratio.round() as usize;
    if step == 0 || (ratio - step as f64).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "anchor rate {anchor_rate} must divide native rate {native_rate}"
        )));
    }
    if dim == 0 || data.len() % dim != 0 {
        return Err(Error::shape(format!(
            "{} values is not a multiple of {dim}",
            data.len()
        )));
    }
    let frames = data.len() / dim;
    let anchors = if frames == 0 { 0 } else { (frames - 1) / step + 1 };
    if anchors < 4 {
        return Err(Error::TooShort {
            needed: 3 * step + 1,
            got: frames,
        });
    }

    let row = |t: usize| &data[t * dim..(t + 1) * dim];
    // Anchor k value for channel c, with phantom anchors at -1, n and n+1.
    let anchor = |k: isize, c: usize| -> f64 {
        let n = anchors as isize;
        let at = |k: isize| row(k as usize * step)[c];
        if k < 0 {
            2.0 * at(0) - at(1)
        } else if k < n {
            at(k)
        } else if k == n {
            2.0 * at(n - 1) - at(n - 2)
        } else {
            let pn = 2.0 * at(n - 1) - at(n - 2);
            2.0 * pn - at(n - 1)
        }
    };

    let mut out = data.to_vec();
    for t in 0..frames {
        let seg = t / step;
        let rem = t % step;
        if rem == 0 {
            continue;
        }
        let s = rem as f64 / step as f64;
        let w = catmull_rom_weights(s);
        let k = seg as isize;
        for c in 0..dim {
            out[t * dim + c] =
                w[0] * anchor(k - 1, c) + w[1] * anchor(k, c) + w[2] * anchor(k + 1, c) + w[3] * anchor(k + 2, c);
        }
    }
    Ok(out)
}

pub fn anchor_resample_points(seq: &PointSeq) -> Result<PointSeq> {
    let data = anchor_resample(seq.data(), seq.points() * 3, NATIVE_RATE, ANCHOR_RATE)?;
    PointSeq::new(seq.frames(), seq.points(), data)
}
