//! Exact Euclidean distance fields.
//!
//! Distances are measured between pixel centers and computed with the
//! two-pass squared-distance transform of Felzenszwalb & Huttenlocher.
//! Squared distances stay in integer arithmetic, so the result matches a
//! brute-force all-pairs minimum bit for bit.

use crate::error::{Error, Result};
use crate::mask::Pixel;

const UNREACHED: i64 = i64::MAX;

/// Per-pixel Euclidean distance to the nearest pixel of a source set.
/// All values are `+inf` when the source set is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Distance at (row, col). Panics if out of bounds.
    #[inline]
    pub fn get(&self, row: u32, col: u32) -> f64 {
        self.values[row as usize * self.width as usize + col as usize]
    }

    /// Row-major distance values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Computes the exact Euclidean distance field of `source` on a
/// `width` x `height` grid.
pub fn distance_field(source: &[Pixel], width: u32, height: u32) -> Result<DistanceField> {
    if width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "distance field dimensions must be positive, got {width}x{height}"
        )));
    }
    let (w, h) = (width as usize, height as usize);
    let mut sq = vec![UNREACHED; w * h];
    for &(r, c) in source {
        if r >= height || c >= width {
            return Err(Error::Input(format!(
                "source pixel ({r}, {c}) outside {width}x{height} grid"
            )));
        }
        sq[r as usize * w + c as usize] = 0;
    }

    // vertical pass: per column, squared distance to nearest source row
    let mut column = vec![0i64; h];
    let mut out_line = vec![0i64; h];
    let mut verts = vec![0usize; h.max(w)];
    let mut bounds = vec![0f64; h.max(w) + 1];
    for c in 0..w {
        for r in 0..h {
            column[r] = sq[r * w + c];
        }
        transform_1d(&column, &mut out_line[..h], &mut verts, &mut bounds);
        for r in 0..h {
            sq[r * w + c] = out_line[r];
        }
    }

    // horizontal pass over the vertical results
    let mut row_in = vec![0i64; w];
    for r in 0..h {
        row_in.copy_from_slice(&sq[r * w..(r + 1) * w]);
        transform_1d(&row_in, &mut sq[r * w..(r + 1) * w], &mut verts, &mut bounds);
    }

    let values = sq
        .into_iter()
        .map(|d| {
            if d == UNREACHED {
                f64::INFINITY
            } else {
                (d as f64).sqrt()
            }
        })
        .collect();
    Ok(DistanceField { width, height, values })
}

/// 1D squared-distance transform: `out[i] = min_q (i - q)^2 + f[q]`,
/// skipping unreached cells.
fn transform_1d(f: &[i64], out: &mut [i64], verts: &mut [usize], bounds: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    let mut started = false;
    for q in 0..n {
        if f[q] == UNREACHED {
            continue;
        }
        if !started {
            verts[0] = q;
            bounds[0] = f64::NEG_INFINITY;
            bounds[1] = f64::INFINITY;
            started = true;
            continue;
        }
        let mut s = intersection(f, verts[k], q);
        while s <= bounds[k] {
            k -= 1;
            s = intersection(f, verts[k], q);
        }
        k += 1;
        verts[k] = q;
        bounds[k] = s;
        bounds[k + 1] = f64::INFINITY;
    }
    if !started {
        out.fill(UNREACHED);
        return;
    }
    let mut j = 0usize;
    for (q, slot) in out.iter_mut().enumerate() {
        while bounds[j + 1] < q as f64 {
            j += 1;
        }
        let d = q as i64 - verts[j] as i64;
        *slot = d * d + f[verts[j]];
    }
}

/// Abscissa where the parabola rooted at `q` overtakes the one rooted at `p`.
fn intersection(f: &[i64], p: usize, q: usize) -> f64 {
    let (fp, fq) = (f[p] as f64, f[q] as f64);
    let (pp, qq) = (p as f64, q as f64);
    ((fq + qq * qq) - (fp + pp * pp)) / (2.0 * (qq - pp))
}
