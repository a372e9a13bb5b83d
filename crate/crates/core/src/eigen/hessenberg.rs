//! Householder reduction to upper-Hessenberg form.

use ndarray::Array2;
use num_complex::Complex64 as C64;

pub(crate) fn is_upper_hessenberg(a: &Array2<C64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..i.saturating_sub(1)).all(|j| a[[i, j]] == C64::new(0.0, 0.0)))
}

/// Returns `(H, Q)` with `A = Q H Q^dagger`. `Q` is `None` when `A` is
/// already upper Hessenberg (tridiagonal model matrices take this path).
pub(crate) fn reduce(a: &Array2<C64>) -> (Array2<C64>, Option<Array2<C64>>) {
    if is_upper_hessenberg(a) {
        return (a.clone(), None);
    }
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = Array2::<C64>::eye(n);
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| h[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[[k + 1, k]];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[[i, k]]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vnorm);

        // H <- P H with P = I - 2 v v^dagger acting on rows k+1..n
        for col in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * h[[k + 1 + i, col]]).sum();
            for (i, vi) in v.iter().enumerate() {
                h[[k + 1 + i, col]] -= 2.0 * vi * dot;
            }
        }
        // H <- H P and Q <- Q P on columns k+1..n
        for row in 0..n {
            let dh: C64 = v.iter().enumerate().map(|(i, vi)| h[[row, k + 1 + i]] * vi).sum();
            let dq: C64 = v.iter().enumerate().map(|(i, vi)| q[[row, k + 1 + i]] * vi).sum();
            for (i, vi) in v.iter().enumerate() {
                h[[row, k + 1 + i]] -= 2.0 * dh * vi.conj();
                q[[row, k + 1 + i]] -= 2.0 * dq * vi.conj();
            }
        }
        for i in k + 2..n {
            h[[i, k]] = C64::new(0.0, 0.0);
        }
    }
    (h, Some(q))
}
