//! Inverse iteration for right and left eigenvectors of an upper-Hessenberg
//! matrix.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// LU factorisation of `H - shift` with adjacent-row partial pivoting.
struct HessLu {
    u: Array2<C64>,
    mult: Vec<C64>,
    swapped: Vec<bool>,
}

impl HessLu {
    fn new(h: &Array2<C64>, shift: C64, floor: f64) -> Self {
        let n = h.nrows();
        let mut u = h.clone();
        for k in 0..n {
            u[[k, k]] -= shift;
        }
        let mut mult = vec![ZERO; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            if u[[k + 1, k]].norm() > u[[k, k]].norm() {
                for col in k..n {
                    u.swap([k, col], [k + 1, col]);
                }
                swapped[k] = true;
            }
            if u[[k, k]].norm() < floor {
                u[[k, k]] = C64::new(floor, 0.0);
            }
            let m = u[[k + 1, k]] / u[[k, k]];
            mult[k] = m;
            u[[k + 1, k]] = ZERO;
            if m != ZERO {
                for col in k + 1..n {
                    let t = u[[k, col]];
                    u[[k + 1, col]] -= m * t;
                }
            }
        }
        if n > 0 && u[[n - 1, n - 1]].norm() < floor {
            u[[n - 1, n - 1]] = C64::new(floor, 0.0);
        }
        Self { u, mult, swapped }
    }

    /// Solves `(H - shift) x = b`.
    fn solve(&self, b: &Array1<C64>) -> Array1<C64> {
        let n = b.len();
        let mut y = b.clone();
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                y.swap(k, k + 1);
            }
            let t = y[k];
            y[k + 1] -= self.mult[k] * t;
        }
        for k in (0..n).rev() {
            let mut acc = y[k];
            for col in k + 1..n {
                acc -= self.u[[k, col]] * y[col];
            }
            y[k] = acc / self.u[[k, k]];
        }
        y
    }

    /// Solves `(H - shift)^dagger z = b`.
    fn solve_adjoint(&self, b: &Array1<C64>) -> Array1<C64> {
        let n = b.len();
        let mut w = b.clone();
        // U^dagger is lower triangular.
        for k in 0..n {
            let mut acc = w[k];
            for row in 0..k {
                acc -= self.u[[row, k]].conj() * w[row];
            }
            w[k] = acc / self.u[[k, k]].conj();
        }
        for k in (0..n.saturating_sub(1)).rev() {
            let t = w[k + 1];
            w[k] -= self.mult[k].conj() * t;
            if self.swapped[k] {
                w.swap(k, k + 1);
            }
        }
        w
    }
}

/// Deterministic, sign-varying start vector; `seed` separates cluster members.
fn start_vector(n: usize, seed: usize) -> Array1<C64> {
    Array1::from_shape_fn(n, |j| {
        let x = (j + 1) as f64;
        let s = seed as f64;
        C64::new((0.7 * x + 0.31 * x * x + 1.3 * s).cos(), 0.25 * (1.1 * x + 2.7 * s).sin())
    })
}

fn normalize(v: &mut Array1<C64>) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.mapv_inplace(|z| z / norm);
    }
    norm
}

fn project_out(v: &mut Array1<C64>, basis: &[Array1<C64>]) {
    for b in basis {
        let overlap: C64 = b.iter().zip(v.iter()).map(|(bi, vi)| bi.conj() * vi).sum();
        v.zip_mut_with(b, |vi, bi| *vi -= overlap * bi);
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Side {
    Right,
    Left,
}

/// Unit eigenvector of `h` (or of `h^dagger` for `Side::Left`, using
/// `conj(lambda)`), orthogonal to `cluster`.
pub(crate) fn inverse_iteration(
    h: &Array2<C64>,
    lambda: C64,
    side: Side,
    cluster: &[Array1<C64>],
    hnorm: f64,
) -> Array1<C64> {
    let n = h.nrows();
    if n == 1 {
        return Array1::from_elem(1, C64::new(1.0, 0.0));
    }
    let floor = f64::EPSILON * hnorm.max(f64::MIN_POSITIVE);
    let lu = HessLu::new(h, lambda, floor);
    let target = match side {
        Side::Right => lambda,
        Side::Left => lambda.conj(),
    };
    let tol = 64.0 * n as f64 * f64::EPSILON * hnorm.max(1.0);
    let adjoint = match side {
        Side::Right => None,
        Side::Left => Some(h.t().mapv(|z| z.conj())),
    };
    let mut v = start_vector(n, cluster.len());
    project_out(&mut v, cluster);
    normalize(&mut v);
    for _ in 0..12 {
        let mut x = match side {
            Side::Right => lu.solve(&v),
            Side::Left => lu.solve_adjoint(&v),
        };
        project_out(&mut x, cluster);
        normalize(&mut x);
        v = x;
        let hv = match &adjoint {
            None => h.dot(&v),
            Some(hd) => hd.dot(&v),
        };
        let res = hv
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - target * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res <= tol {
            break;
        }
    }
    v
}
