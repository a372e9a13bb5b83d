//! Dense complex non-Hermitian eigensolver.
//!
//! Eigenvalues come from single-shift QR on the Hessenberg form; right and
//! left eigenvectors from inverse iteration, back-transformed to the input
//! basis and biorthonormalised. Output is deterministic for identical input
//! and always returned in the canonical sort order (see [`sort_spectrum`]).

mod hessenberg;
mod qr;
mod vectors;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::matrix::{invert, ComplexMatrix};
use vectors::Side;

/// Relative separation below which two eigenvalues are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Threshold on `|psi^T psi|` for the conjugate-left route.
pub const SELF_ORTHOGONAL_TOL: f64 = 1e-10;
/// Default relative tolerance for grouping real parts as ties when sorting.
pub const SORT_TIE_TOL: f64 = 1e-8;

/// How the left eigenvectors of a [`Spectrum`] were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeftRoute {
    InverseIteration,
    ConjugateRight,
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<C64>,
    /// Columns are unit-norm right eigenvectors in the phase gauge.
    pub right: Array2<C64>,
    /// Rows are left eigenvectors (kets) with `<left_m|right_n> = delta_mn`.
    pub left: Array2<C64>,
    /// `sort_order[k]` is the raw solver index of the k-th stored eigenpair.
    pub sort_order: Vec<usize>,
    pub left_route: LeftRoute,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn right_vector(&self, m: usize) -> Array1<C64> {
        self.right.column(m).to_owned()
    }

    pub fn left_vector(&self, m: usize) -> Array1<C64> {
        self.left.row(m).to_owned()
    }

    /// Matrix of bras: `bras().dot(&right) = I`.
    pub fn bras(&self) -> Array2<C64> {
        self.left.mapv(|z| z.conj())
    }

    /// Eigenvalue condition numbers `|l_m| |r_m| / |<l_m|r_m>|`.
    pub fn condition_numbers(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|m| {
                let l = self.left.row(m);
                let r = self.right.column(m);
                let ip: C64 = l.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum();
                let nl = l.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let nr = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                nl * nr / ip.norm()
            })
            .collect()
    }

    /// `max_m |M r_m - E_m r_m|_2 / max(|M|, tiny)` with `|M|` the Frobenius norm.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        let a = m.as_array();
        let norm = m.frobenius().max(f64::MIN_POSITIVE);
        (0..self.dim())
            .map(|k| {
                let r = self.right.column(k);
                let ar = a.dot(&r);
                ar.iter()
                    .zip(r.iter())
                    .map(|(x, y)| (x - self.values[k] * y).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
                    / norm
            })
            .fold(0.0, f64::max)
    }

    /// `max |<left_m|right_n> - delta_mn|`.
    pub fn biorthogonality_defect(&self) -> f64 {
        let g = self.bras().dot(&self.right);
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[[i, j]] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    fn permuted(&self, perm: &[usize]) -> Spectrum {
        let n = self.dim();
        let mut right = Array2::zeros((n, n));
        let mut left = Array2::zeros((n, n));
        for (k, &p) in perm.iter().enumerate() {
            right.column_mut(k).assign(&self.right.column(p));
            left.row_mut(k).assign(&self.left.row(p));
        }
        Spectrum {
            values: perm.iter().map(|&p| self.values[p]).collect(),
            right,
            left,
            sort_order: perm.iter().map(|&p| self.sort_order[p]).collect(),
            left_route: self.left_route,
        }
    }
}

fn validate(m: &ComplexMatrix) -> Result<()> {
    if m.dim() == 0 {
        return Err(Error::BadShape);
    }
    if m.as_array().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn max_sweeps(dim: usize) -> usize {
    100 * dim
}

/// Eigenvalues only, in canonical sort order.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    validate(m)?;
    let (h, _) = hessenberg::reduce(m.as_array());
    let vals = qr::hessenberg_eigenvalues(h, max_sweeps(m.dim()))?;
    let order = canonical_order(&vals, SORT_TIE_TOL);
    Ok(order.into_iter().map(|k| vals[k]).collect())
}

fn degeneracy_tol(norm: f64) -> f64 {
    DEGENERACY_TOL * norm.max(1.0)
}

/// Groups of indices whose eigenvalues lie within the degeneracy tolerance
/// of one another (transitively).
fn clusters(vals: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = vals.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            if (vals[a] - vals[b]).norm() < tol {
                let (ra, rb) = (root(&mut label, a), root(&mut label, b));
                if ra != rb {
                    label[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut label, i);
        if index_of[r] == usize::MAX {
            index_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[r]].push(i);
    }
    groups
}

fn back_transform(q: &Option<Array2<C64>>, v: Array1<C64>) -> Array1<C64> {
    match q {
        Some(q) => q.dot(&v),
        None => v,
    }
}

/// Rotates a vector so its largest-magnitude entry (first one, up to a
/// relative 1e-9 tie window) is real and positive. Returns the phase applied.
pub(crate) fn apply_phase_gauge(v: &mut [C64]) -> C64 {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|z| *z *= phase);
    phase
}

fn unit_norm(v: &mut Array1<C64>) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.mapv_inplace(|z| z / n);
    }
}

/// Left eigenvectors by inverse iteration on `M^dagger`, biorthonormalised
/// against the given right eigenvectors cluster by cluster.
fn general_left(
    h: &Array2<C64>,
    q: &Option<Array2<C64>>,
    vals: &[C64],
    right: &Array2<C64>,
    norm: f64,
) -> Result<Array2<C64>> {
    let n = vals.len();
    let mut left = Array2::<C64>::zeros((n, n));
    for group in clusters(vals, degeneracy_tol(norm)) {
        let mut found: Vec<Array1<C64>> = Vec::new();
        for &k in &group {
            let z = vectors::inverse_iteration(h, vals[k], Side::Left, &found, norm);
            found.push(z);
        }
        // G = L_c^dagger R_c; L_c <- L_c G^{-dagger}
        let kc = group.len();
        let mut lc = Array2::<C64>::zeros((n, kc));
        let mut rc = Array2::<C64>::zeros((n, kc));
        for (c, (&k, z)) in group.iter().zip(found.into_iter()).enumerate() {
            lc.column_mut(c).assign(&back_transform(q, z));
            rc.column_mut(c).assign(&right.column(k));
        }
        let g = lc.t().mapv(|z| z.conj()).dot(&rc);
        let ginv = invert(&g).ok_or(Error::IllConditioned { index: group[0], value: 0.0 })?;
        let lc = lc.dot(&ginv.t().mapv(|z| z.conj()));
        for (c, &k) in group.iter().enumerate() {
            left.row_mut(k).assign(&lc.column(c));
        }
    }
    Ok(left)
}

/// Full eigendecomposition: eigenvalues, unit right vectors in the phase
/// gauge, and biorthonormal left vectors.
pub fn eigendecompose(m: &ComplexMatrix) -> Result<Spectrum> {
    validate(m)?;
    let n = m.dim();
    let norm = m.frobenius();
    let (h, q) = hessenberg::reduce(m.as_array());
    let vals = qr::hessenberg_eigenvalues(h.clone(), max_sweeps(n))?;

    let mut right = Array2::<C64>::zeros((n, n));
    for group in clusters(&vals, degeneracy_tol(norm)) {
        let mut found: Vec<Array1<C64>> = Vec::new();
        for &k in &group {
            let y = vectors::inverse_iteration(&h, vals[k], Side::Right, &found, norm);
            found.push(y.clone());
            let mut v = back_transform(&q, y);
            unit_norm(&mut v);
            apply_phase_gauge(v.as_slice_mut().expect("contiguous"));
            right.column_mut(k).assign(&v);
        }
    }
    let left = general_left(&h, &q, &vals, &right, norm)?;
    let raw = Spectrum {
        values: vals,
        right,
        left,
        sort_order: (0..n).collect(),
        left_route: LeftRoute::InverseIteration,
    };
    Ok(sort_spectrum(&raw))
}

/// Replaces the left vectors of a complex-symmetric matrix's spectrum by
/// conjugated right vectors, `l_m = conj(r_m) / conj(r_m^T r_m)`.
///
/// Falls back to the inverse-iteration left solve when the spectrum has a
/// degenerate pair; fails when some `|r_m^T r_m|` is below
/// [`SELF_ORTHOGONAL_TOL`].
pub fn left_vectors_complex_symmetric(spec: &Spectrum, m: &ComplexMatrix) -> Result<Spectrum> {
    if m.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: spec.dim() });
    }
    let norm = m.frobenius();
    let defect = m.symmetry_defect();
    if defect > 1e-12 * norm.max(1.0) {
        return Err(Error::NotComplexSymmetric(defect));
    }
    let n = spec.dim();
    let degenerate = clusters(&spec.values, degeneracy_tol(norm)).iter().any(|g| g.len() > 1);
    if degenerate {
        let (h, q) = hessenberg::reduce(m.as_array());
        let left = general_left(&h, &q, &spec.values, &spec.right, norm)?;
        return Ok(Spectrum { left, left_route: LeftRoute::InverseIteration, ..spec.clone() });
    }
    let mut left = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        let r = spec.right.column(k);
        let g: C64 = r.iter().map(|z| z * z).sum();
        if g.norm() < SELF_ORTHOGONAL_TOL {
            return Err(Error::IllConditioned { index: k, value: g.norm() });
        }
        let scale = g.conj();
        left.row_mut(k).assign(&r.mapv(|z| z.conj() / scale));
    }
    Ok(Spectrum { left, left_route: LeftRoute::ConjugateRight, ..spec.clone() })
}

/// Canonical order: real part ascending; real parts within
/// `tie_tol * max(1, max|E|)` form a tie group ordered by imaginary part
/// descending. Stable on exact ties.
pub fn canonical_order(vals: &[C64], tie_tol: f64) -> Vec<usize> {
    let scale = vals.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = tie_tol * scale;
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].re.total_cmp(&vals[b].re));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let anchor = vals[idx[start]].re;
        let mut end = start + 1;
        while end < idx.len() && vals[idx[end]].re - anchor <= tol {
            end += 1;
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&a, &b| vals[b].im.total_cmp(&vals[a].im));
        out.extend(group);
        start = end;
    }
    out
}

/// Permutes eigenpairs into canonical order (see [`canonical_order`]).
pub fn sort_spectrum(spec: &Spectrum) -> Spectrum {
    sort_spectrum_with_tol(spec, SORT_TIE_TOL)
}

pub fn sort_spectrum_with_tol(spec: &Spectrum, tie_tol: f64) -> Spectrum {
    let perm = canonical_order(&spec.values, tie_tol);
    spec.permuted(&perm)
}

/// Indices of `vals` in the order of descending imaginary part (least damped
/// first), used to label localized states `m = 1, 2, ...`.
pub fn order_by_imag_desc(vals: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].im.total_cmp(&vals[a].im).then(vals[a].re.total_cmp(&vals[b].re)));
    idx
}
