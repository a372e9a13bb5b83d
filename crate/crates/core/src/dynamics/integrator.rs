//! Step-doubled classical RK4 for `dΔ/dt = XΔ + ΔX†` with tridiagonal `X`.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

struct Bands {
    lower: Vec<C64>,
    diag: Vec<C64>,
    upper: Vec<C64>,
}

impl Bands {
    fn new(x: ArrayView2<'_, C64>) -> Result<Self> {
        let n = x.nrows();
        if x.indexed_iter().any(|((i, j), z)| i.abs_diff(j) > 1 && *z != C64::new(0.0, 0.0)) {
            return Err(Error::InvalidConfig("integrator expects a tridiagonal generator".into()));
        }
        Ok(Self {
            lower: (1..n).map(|i| x[[i, i - 1]]).collect(),
            diag: (0..n).map(|i| x[[i, i]]).collect(),
            upper: (1..n).map(|i| x[[i - 1, i]]).collect(),
        })
    }

    /// `XΔ + ΔX†`.
    fn rhs(&self, d: &Array2<C64>) -> Array2<C64> {
        let n = d.nrows();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for k in 0..n {
                let mut acc = self.diag[i] * d[[i, k]];
                if i > 0 {
                    acc += self.lower[i - 1] * d[[i - 1, k]];
                }
                if i + 1 < n {
                    acc += self.upper[i] * d[[i + 1, k]];
                }
                // (ΔX†)_ik = sum_m Δ_im conj(X_km)
                acc += d[[i, k]] * self.diag[k].conj();
                if k > 0 {
                    acc += d[[i, k - 1]] * self.lower[k - 1].conj();
                }
                if k + 1 < n {
                    acc += d[[i, k + 1]] * self.upper[k].conj();
                }
                out[[i, k]] = acc;
            }
        }
        out
    }

    fn rk4(&self, y: &Array2<C64>, h: f64) -> Array2<C64> {
        let k1 = self.rhs(y);
        let k2 = self.rhs(&(y + &k1.mapv(|z| z * (0.5 * h))));
        let k3 = self.rhs(&(y + &k2.mapv(|z| z * (0.5 * h))));
        let k4 = self.rhs(&(y + &k3.mapv(|z| z * h)));
        y + &((k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (h / 6.0)))
    }

    fn norm(&self) -> f64 {
        self.diag.iter().chain(&self.lower).chain(&self.upper).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Integrates from `delta0` and returns `Δ` at each time of `times`.
///
/// Each step compares one full step with two half steps; the local error
/// estimate is `|y_half - y_full| / 15`, accepted steps keep the Richardson
/// value `y_half + (y_half - y_full) / 15`. Tolerance is relative to the
/// current largest entry.
pub fn integrate_correlation(x: ArrayView2<'_, C64>, delta0: &Array2<C64>, times: &[f64], rtol: f64) -> Result<Vec<Array2<C64>>> {
    super::check_times(times)?;
    let bands = Bands::new(x)?;
    let mut y = delta0.clone();
    let mut t = 0.0;
    let mut h = 0.1 / bands.norm().max(1e-3);
    let mut out = Vec::with_capacity(times.len());
    out.push(y.clone());
    for &target in &times[1..] {
        while t < target {
            let last = target - t <= h * (1.0 + 1e-12);
            let step = if last { target - t } else { h };
            if step < 1e-14 * (1.0 + t.abs()) && !last {
                return Err(Error::StepSizeUnderflow(t));
            }
            let full = bands.rk4(&y, step);
            let half = bands.rk4(&bands.rk4(&y, 0.5 * step), 0.5 * step);
            let diff = &half - &full;
            let err = max_abs(&diff) / 15.0;
            let scale = rtol * max_abs(&half).max(f64::MIN_POSITIVE);
            if err <= scale {
                y = half + diff.mapv(|z| z / 15.0);
                t = if last { target } else { t + step };
                let grow = if err == 0.0 { 2.0 } else { (0.9 * (scale / err).powf(0.2)).clamp(0.2, 2.0) };
                if !last || grow < 1.0 {
                    h = step * grow;
                }
            } else {
                h = step * (0.9 * (scale / err).powf(0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::StepSizeUnderflow(t));
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
