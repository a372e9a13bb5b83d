//! Single-shift complex QR iteration on an upper-Hessenberg matrix.
//!
//! Eigenvalues only: each sweep acts on the active unreduced block, so no
//! Schur vectors are accumulated.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
pub(crate) fn givens(x: C64, y: C64) -> (f64, C64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    let ax = x.norm();
    let ay = y.norm();
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let norm = ax.hypot(ay);
    let phase = x / ax;
    (ax / norm, phase * y.conj() / norm)
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let p = (a - d) * 0.5;
    let bc = b * c;
    let mut disc = (p * p + bc).sqrt();
    if (p.conj() * disc).re < 0.0 {
        disc = -disc;
    }
    let den = p + disc;
    if den == ZERO { d } else { d - bc / den }
}

fn qr_sweep(h: &mut Array2<C64>, lo: usize, hi: usize, shift: C64) {
    for k in lo..=hi {
        h[[k, k]] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[[k, k]], h[[k + 1, k]]);
        for col in k..=hi {
            let x = h[[k, col]];
            let y = h[[k + 1, col]];
            h[[k, col]] = x * c + s * y;
            h[[k + 1, col]] = -s.conj() * x + y * c;
        }
        h[[k + 1, k]] = ZERO;
        rots.push((c, s));
    }
    for (off, (c, s)) in rots.into_iter().enumerate() {
        let k = lo + off;
        for row in lo..=(k + 1).min(hi) {
            let x = h[[row, k]];
            let y = h[[row, k + 1]];
            h[[row, k]] = x * c + y * s.conj();
            h[[row, k + 1]] = -x * s + y * c;
        }
    }
    for k in lo..=hi {
        h[[k, k]] += shift;
    }
}

/// All eigenvalues of an upper-Hessenberg matrix, in deflation order.
///
/// A subdiagonal entry is dropped when it is negligible next to its
/// diagonal neighbours or next to the whole matrix; the second test lets
/// blocks of pure round-off (e.g. from rank-deficient input) deflate.
///
/// Fails with `NonConvergence` once more than `max_sweeps` QR sweeps have
/// been spent in total.
pub(crate) fn hessenberg_eigenvalues(mut h: Array2<C64>, max_sweeps: usize) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut its = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[[0, 0]];
            return Ok(eig);
        }
        let mut lo = 0;
        for l in (1..=hi).rev() {
            let sub = abs1(h[[l, l - 1]]);
            let mut tst = abs1(h[[l - 1, l - 1]]) + abs1(h[[l, l]]);
            if tst == 0.0 {
                if l >= 2 {
                    tst += abs1(h[[l - 1, l - 2]]);
                }
                if l < hi {
                    tst += abs1(h[[l + 1, l]]);
                }
            }
            if sub <= f64::EPSILON * tst || sub <= f64::EPSILON * norm || sub < f64::MIN_POSITIVE {
                h[[l, l - 1]] = ZERO;
                lo = l;
                break;
            }
        }
        if lo == hi {
            eig[hi] = h[[hi, hi]];
            hi -= 1;
            its = 0;
            continue;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NonConvergence { index: hi });
        }
        sweeps += 1;
        its += 1;
        let shift = if its % 20 == 10 {
            h[[lo, lo]] + 0.75 * abs1(h[[lo + 1, lo]])
        } else if its % 20 == 0 {
            h[[hi, hi]] + 0.75 * abs1(h[[hi, hi - 1]])
        } else {
            wilkinson_shift(h[[hi - 1, hi - 1]], h[[hi - 1, hi]], h[[hi, hi - 1]], h[[hi, hi]])
        };
        qr_sweep(&mut h, lo, hi, shift);
    }
}
