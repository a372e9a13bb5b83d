//! Model matrices of the Stark ladder chain and their symmetry identities.
//!
//! All matrices act on the single-particle space spanned by sites `1..=L`
//! with open boundaries. The imaginary ladder has on-site potential `-iFj`,
//! the real ladder `-Fj`; both have nearest-neighbour hopping `J/2`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PotentialKind {
    ImaginaryStark,
    RealStark,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Number of sites.
    pub l: usize,
    /// Hopping energy; the off-diagonal matrix element is `j / 2`.
    pub j: f64,
    /// Field strength.
    pub f: f64,
    pub kind: PotentialKind,
}

impl LatticeConfig {
    pub fn new(l: usize, j: f64, f: f64, kind: PotentialKind) -> Result<Self> {
        let cfg = Self { l, j, f, kind };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn imaginary(l: usize, j: f64, f: f64) -> Result<Self> {
        Self::new(l, j, f, PotentialKind::ImaginaryStark)
    }

    pub fn real(l: usize, j: f64, f: f64) -> Result<Self> {
        Self::new(l, j, f, PotentialKind::RealStark)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidConfig("L must be at least 1".into()));
        }
        if !(self.j.is_finite() && self.j > 0.0) {
            return Err(Error::InvalidConfig(format!("J must be finite and > 0, got {}", self.j)));
        }
        if !(self.f.is_finite() && self.f >= 0.0) {
            return Err(Error::InvalidConfig(format!("F must be finite and >= 0, got {}", self.f)));
        }
        Ok(())
    }

    pub fn with_f(&self, f: f64) -> Self {
        Self { f, ..*self }
    }

    pub fn with_l(&self, l: usize) -> Self {
        Self { l, ..*self }
    }

    pub fn with_kind(&self, kind: PotentialKind) -> Self {
        Self { kind, ..*self }
    }

    /// Constant imaginary offset `E0 = -iF(L+1)/2` removed by the shift.
    pub fn energy_offset(&self) -> C64 {
        C64::new(0.0, -self.f * (self.l as f64 + 1.0) / 2.0)
    }

    fn require_imaginary(&self) -> Result<()> {
        match self.kind {
            PotentialKind::ImaginaryStark => Ok(()),
            PotentialKind::RealStark => Err(Error::RequiresImaginaryStark),
        }
    }
}

/// Single-particle Hamiltonian matrix `H`.
pub fn build_hamiltonian(cfg: &LatticeConfig) -> Result<ComplexMatrix> {
    cfg.validate()?;
    let l = cfg.l;
    let mut h = ComplexMatrix::zeros(l);
    let hop = C64::new(cfg.j / 2.0, 0.0);
    for site in 1..=l {
        let v = cfg.f * site as f64;
        let diag = match cfg.kind {
            PotentialKind::ImaginaryStark => C64::new(0.0, -v),
            PotentialKind::RealStark => C64::new(-v, 0.0),
        };
        h.set_site(site, site, diag);
        if site < l {
            h.set_site(site, site + 1, hop);
            h.set_site(site + 1, site, hop);
        }
    }
    Ok(h)
}

/// Shifted Hamiltonian `H' = H + iF(L+1)/2`, traceless with antisymmetric
/// imaginary diagonal.
pub fn build_shifted(cfg: &LatticeConfig) -> Result<ComplexMatrix> {
    cfg.require_imaginary()?;
    let mut h = build_hamiltonian(cfg)?;
    let l = cfg.l as f64;
    // Written directly rather than as H - E0 so the diagonal is exactly
    // antisymmetric in floating point.
    for site in 1..=cfg.l {
        h.set_site(site, site, C64::new(0.0, cfg.f * (l + 1.0 - 2.0 * site as f64) / 2.0));
    }
    Ok(h)
}

/// Diagonal sign matrix `U_jj = (-1)^j`.
pub fn build_u_transform(l: usize) -> ComplexMatrix {
    let diag: Vec<C64> = (1..=l)
        .map(|j| C64::new(if j % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    ComplexMatrix::from_diag(&diag)
}

/// Site-reversal permutation `P: j -> L + 1 - j`.
pub fn build_parity(l: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(l);
    for j in 1..=l {
        p.set_site(j, l + 1 - j, C64::new(1.0, 0.0));
    }
    p
}

/// `max |U^-1 H' U + H'^dagger|`; vanishes for every imaginary ladder.
pub fn k_symmetry_residual(cfg: &LatticeConfig) -> Result<f64> {
    let hs = build_shifted(cfg)?;
    let u = build_u_transform(cfg.l);
    // U is its own inverse.
    let lhs = u.matmul(&hs).matmul(&u);
    Ok(lhs.add(&hs.dagger()).max_abs())
}

/// `max |P conj(H') P - H'|`, the passive PT commutator.
pub fn pt_symmetry_residual(cfg: &LatticeConfig) -> Result<f64> {
    let hs = build_shifted(cfg)?;
    let p = build_parity(cfg.l);
    let lhs = p.matmul(&hs.conj()).matmul(&p);
    Ok(lhs.sub(&hs).max_abs())
}

/// Damping matrix `X = i h^T - M^T` with `M = diag(jF)`, which equals `iH*`.
///
/// For the real ladder the same `iH*` form is returned (purely unitary
/// correlation dynamics).
pub fn damping_matrix(cfg: &LatticeConfig) -> Result<ComplexMatrix> {
    cfg.validate()?;
    let l = cfg.l;
    let mut x = ComplexMatrix::zeros(l);
    let i_hop = C64::new(0.0, cfg.j / 2.0);
    for site in 1..=l {
        let v = cfg.f * site as f64;
        let diag = match cfg.kind {
            PotentialKind::ImaginaryStark => C64::new(-v, 0.0),
            PotentialKind::RealStark => C64::new(0.0, -v),
        };
        x.set_site(site, site, diag);
        if site < l {
            x.set_site(site, site + 1, i_hop);
            x.set_site(site + 1, site, i_hop);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hamiltonian_two_sites() {
        let h = build_hamiltonian(&LatticeConfig::imaginary(2, 1.0, 0.5).unwrap()).unwrap();
        let want = ComplexMatrix::from_rows(&[vec![c(0.0, -0.5), c(0.5, 0.0)], vec![c(0.5, 0.0), c(0.0, -1.0)]])
            .unwrap();
        assert_eq!(h, want);
    }

    #[test]
    fn hamiltonian_single_site() {
        let h = build_hamiltonian(&LatticeConfig::imaginary(1, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.site(1, 1), c(0.0, -2.0));
    }

    #[test]
    fn real_ladder_three_sites() {
        let h = build_hamiltonian(&LatticeConfig::real(3, 1.0, 1.0).unwrap()).unwrap();
        for (j, d) in [(1, -1.0), (2, -2.0), (3, -3.0)] {
            assert_eq!(h.site(j, j), c(d, 0.0));
        }
        assert_eq!(h.site(1, 2), c(0.5, 0.0));
        assert_eq!(h.site(2, 3), c(0.5, 0.0));
        assert_eq!(h.site(1, 3), c(0.0, 0.0));
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(LatticeConfig::imaginary(0, 1.0, 1.0).is_err());
        assert!(LatticeConfig::imaginary(3, 0.0, 1.0).is_err());
        assert!(LatticeConfig::imaginary(3, 1.0, -0.1).is_err());
        let raw = LatticeConfig { l: 0, j: 1.0, f: 1.0, kind: PotentialKind::ImaginaryStark };
        assert!(build_hamiltonian(&raw).is_err());
    }

    #[test]
    fn shifted_examples() {
        let hs = build_shifted(&LatticeConfig::imaginary(2, 1.0, 0.5).unwrap()).unwrap();
        assert_eq!(hs.site(1, 1), c(0.0, 0.25));
        assert_eq!(hs.site(2, 2), c(0.0, -0.25));
        assert_eq!(hs.site(1, 2), c(0.5, 0.0));
        let hs = build_shifted(&LatticeConfig::imaginary(3, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(hs.diagonal().to_vec(), vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, -1.0)]);
        assert_eq!(
            build_shifted(&LatticeConfig::real(3, 1.0, 1.0).unwrap()),
            Err(Error::RequiresImaginaryStark)
        );
    }

    #[test]
    fn u_transform() {
        let u = build_u_transform(3);
        assert_eq!(u.diagonal().to_vec(), vec![c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(build_u_transform(1).site(1, 1), c(-1.0, 0.0));
        let u = build_u_transform(40);
        assert_eq!(u.matmul(&u), ComplexMatrix::identity(40));
    }

    #[test]
    fn symmetry_residual_examples() {
        let k = |l, f| k_symmetry_residual(&LatticeConfig::imaginary(l, 1.0, f).unwrap()).unwrap();
        assert!(k(40, 0.1) < 1e-14);
        assert!(k(2, 2.0) < 1e-14);
        assert_eq!(k(1, 1.0), 0.0);
        let pt = |l, j, f| pt_symmetry_residual(&LatticeConfig::imaginary(l, j, f).unwrap()).unwrap();
        assert!(pt(40, 1.0, 1.0) < 1e-14);
        assert!(pt(2, 1.0, 0.3) < 1e-14);
        assert_eq!(pt(5, 2.0, 0.0), 0.0);
    }

    #[test]
    fn damping_matrix_examples() {
        let cfg = LatticeConfig::imaginary(2, 1.0, 0.5).unwrap();
        let x = damping_matrix(&cfg).unwrap();
        let want = ComplexMatrix::from_rows(&[vec![c(-0.5, 0.0), c(0.0, 0.5)], vec![c(0.0, 0.5), c(-1.0, 0.0)]])
            .unwrap();
        assert_eq!(x, want);
        // X + X^dagger = -2M
        let m2 = x.add(&x.dagger());
        assert_eq!(m2.diagonal().to_vec(), vec![c(-1.0, 0.0), c(-2.0, 0.0)]);
        assert_eq!(m2.site(1, 2), c(0.0, 0.0));
        let x0 = damping_matrix(&cfg.with_f(0.0)).unwrap();
        assert_eq!(x0.add(&x0.dagger()).max_abs(), 0.0);
    }

    proptest! {
        #[test]
        fn model_identities(l in 1usize..60, j in 0.05f64..3.0, f in 0.0f64..3.0) {
            let cfg = LatticeConfig::imaginary(l, j, f).unwrap();
            let h = build_hamiltonian(&cfg).unwrap();
            prop_assert!(h.is_tridiagonal());
            prop_assert_eq!(h.symmetry_defect(), 0.0);
            prop_assert!(k_symmetry_residual(&cfg).unwrap() < 1e-12);
            prop_assert!(pt_symmetry_residual(&cfg).unwrap() < 1e-12);
            let hs = build_shifted(&cfg).unwrap();
            prop_assert!(hs.trace().norm() < 1e-12 * (1.0 + f * l as f64));
            let x = damping_matrix(&cfg).unwrap();
            let ihc = h.conj().scale(C64::new(0.0, 1.0));
            prop_assert!(x.sub(&ihc).max_abs() < 1e-15);
            let real = build_hamiltonian(&cfg.with_kind(PotentialKind::RealStark)).unwrap();
            prop_assert_eq!(real.hermiticity_defect(), 0.0);
        }
    }
}
