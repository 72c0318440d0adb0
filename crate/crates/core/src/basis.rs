//! Truncated oscillator ⊗ spin basis.
//!
//! Product states are stored interleaved: index `2n + s` with `s = 0` for
//! spin up and `s = 1` for spin down along z.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, Csr};
use crate::special::ln_factorial_ratio;

pub type Spin2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigenvalue label of the rotated spin operator `Sigma_x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Plus, Spin::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Spin::Plus => 1.0,
            Spin::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Spin::Plus => 0,
            Spin::Minus => 1,
        }
    }

    /// Components of `|±>` along z: `(1, ±e^{i phi}) / sqrt(2)`.
    pub fn spinor(self, phi: f64) -> [Complex64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        [Complex64::new(r, 0.0), Complex64::from_polar(self.sign() * r, phi)]
    }
}

pub fn sigma_x_rotated(phi: f64) -> Spin2 {
    [
        [ZERO, Complex64::from_polar(1.0, -phi)],
        [Complex64::from_polar(1.0, phi), ZERO],
    ]
}

pub fn sigma_y_rotated(phi: f64) -> Spin2 {
    [
        [ZERO, -I * Complex64::from_polar(1.0, -phi)],
        [I * Complex64::from_polar(1.0, phi), ZERO],
    ]
}

pub fn sigma_z() -> Spin2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

/// Orbital and spin operators of a truncated basis.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub n_max: usize,
    pub length: f64,
    pub phi: f64,
    pub x: Csr,
    pub p: Csr,
    /// `x^4` with exact matrix elements (not the product of truncated `x`).
    pub x4: Csr,
    pub number: Vec<f64>,
    pub sigma_x: Spin2,
    pub sigma_y: Spin2,
    pub sigma_z: Spin2,
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        2 * self.n_max
    }

    /// Harmonic part `p^2/2 + x^2/2` (diagonal `n + 1/2`).
    pub fn harmonic(&self) -> Csr {
        Csr::from_triplets(
            self.n_max,
            (0..self.n_max).map(|n| (n, n, Complex64::new(n as f64 + 0.5, 0.0))),
        )
    }

    pub fn x_dense(&self) -> CMat {
        self.x.to_dense()
    }

    pub fn p_dense(&self) -> CMat {
        self.p.to_dense()
    }

    pub fn x4_dense(&self) -> CMat {
        self.x4.to_dense()
    }
}

/// Ladder-operator matrices for `n_max` levels of an oscillator with length
/// `length`, and the spin operators rotated by `phi`.
pub fn build_operators(n_max: usize, length: f64, phi: f64) -> Result<OperatorSet> {
    if n_max < crate::params::MIN_BASIS {
        return Err(Error::InsufficientBasis {
            needed: crate::params::MIN_BASIS,
            got: n_max,
        });
    }
    let mut xt = Vec::new();
    let mut pt = Vec::new();
    for n in 0..n_max - 1 {
        let e = ((n + 1) as f64 / 2.0).sqrt();
        xt.push((n, n + 1, Complex64::new(e * length, 0.0)));
        xt.push((n + 1, n, Complex64::new(e * length, 0.0)));
        pt.push((n, n + 1, Complex64::new(0.0, -e / length)));
        pt.push((n + 1, n, Complex64::new(0.0, e / length)));
    }
    let l4 = length.powi(4);
    let mut x4t = Vec::new();
    for n in 0..n_max {
        let nf = n as f64;
        x4t.push((n, n, Complex64::new((6.0 * nf * nf + 6.0 * nf + 3.0) / 4.0 * l4, 0.0)));
        if n + 2 < n_max {
            let v = (2.0 * nf + 3.0) * ((nf + 1.0) * (nf + 2.0)).sqrt() / 2.0 * l4;
            x4t.push((n, n + 2, Complex64::new(v, 0.0)));
            x4t.push((n + 2, n, Complex64::new(v, 0.0)));
        }
        if n + 4 < n_max {
            let v = ((nf + 1.0) * (nf + 2.0) * (nf + 3.0) * (nf + 4.0)).sqrt() / 4.0 * l4;
            x4t.push((n, n + 4, Complex64::new(v, 0.0)));
            x4t.push((n + 4, n, Complex64::new(v, 0.0)));
        }
    }
    Ok(OperatorSet {
        n_max,
        length,
        phi,
        x: Csr::from_triplets(n_max, xt),
        p: Csr::from_triplets(n_max, pt),
        x4: Csr::from_triplets(n_max, x4t),
        number: (0..n_max).map(|n| n as f64).collect(),
        sigma_x: sigma_x_rotated(phi),
        sigma_y: sigma_y_rotated(phi),
        sigma_z: sigma_z(),
    })
}

/// Associated Laguerre `L_m^{(d)}(x)` as `(mantissa, ln_scale)` so that the
/// value is `mantissa * exp(ln_scale)`.
fn laguerre_scaled(m: usize, d: usize, x: f64) -> (f64, f64) {
    let a = d as f64;
    let mut prev = 1.0f64;
    if m == 0 {
        return (1.0, 0.0);
    }
    let mut cur = 1.0 + a - x;
    let mut ln_scale = 0.0;
    for j in 1..m {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - x) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            prev *= 1e-100;
            cur *= 1e-100;
            ln_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    (cur, ln_scale)
}

/// `<phi_l| exp(i q x) |phi_n>` for oscillator eigenstates, `q` in units of
/// the inverse oscillator length.
pub fn boost_overlap(l: usize, n: usize, q: f64) -> Complex64 {
    if q == 0.0 {
        return if l == n { ONE } else { ZERO };
    }
    let (m, d) = if l >= n { (n, l - n) } else { (l, n - l) };
    let x = 0.5 * q * q;
    let (lag, ln_scale) = laguerre_scaled(m, d, x);
    if lag == 0.0 {
        return ZERO;
    }
    let ln_mag = -0.5 * ln_factorial_ratio(m, m + d) + d as f64 * (q.abs() * std::f64::consts::FRAC_1_SQRT_2).ln()
        - 0.25 * q * q
        + ln_scale
        + lag.abs().ln();
    let mut mag = ln_mag.exp() * lag.signum();
    if q < 0.0 && d % 2 == 1 {
        mag = -mag;
    }
    // (i)^d
    match d % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

/// Reference value of [`boost_overlap`] from the matrix exponential of
/// `i q x` in a truncated basis of `basis` levels.
pub fn boost_overlap_oracle(l: usize, n: usize, q: f64, basis: usize) -> Result<Complex64> {
    let needed = l + n + 40;
    if basis < needed {
        return Err(Error::InsufficientBasis { needed, got: basis });
    }
    Ok(boost_matrix_oracle(q, basis)[(l, n)])
}

/// Dense `exp(i q x)` in a truncated basis via the eigenvectors of `x`.
pub fn boost_matrix_oracle(q: f64, basis: usize) -> CMat {
    let mut x = DMatrix::<f64>::zeros(basis, basis);
    for n in 0..basis - 1 {
        let e = ((n + 1) as f64 / 2.0).sqrt();
        x[(n, n + 1)] = e;
        x[(n + 1, n)] = e;
    }
    let eig = SymmetricEigen::new(x);
    let v = eig.eigenvectors;
    let mut out = CMat::zeros(basis, basis);
    for k in 0..basis {
        let ph = Complex64::from_polar(1.0, q * eig.eigenvalues[k]);
        for i in 0..basis {
            let vik = v[(i, k)] * ph;
            for j in 0..basis {
                out[(i, j)] += vik * v[(j, k)];
            }
        }
    }
    out
}

/// Overlap `<psi_l^{s'} | psi_n^{s}>` between eigenstates of the kicked,
/// spin-orbit-shifted oscillator. The kick cancels between the two states,
/// leaving a relative boost of `alpha (s' - s)`.
pub fn quench_overlap(l: usize, s_bra: Spin, n: usize, s_ket: Spin, _a0: f64, alpha: f64) -> Complex64 {
    boost_overlap(l, n, alpha * (s_bra.sign() - s_ket.sign()))
}

/// Dense table of [`boost_overlap`] for one boost.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    pub q: f64,
    pub matrix: CMat,
}

impl OverlapTable {
    pub fn new(q: f64, n_max: usize) -> Self {
        let mut matrix = CMat::zeros(n_max, n_max);
        for n in 0..n_max {
            for l in n..n_max {
                let v = boost_overlap(l, n, q);
                matrix[(l, n)] = v;
                if l != n {
                    // <n|e^{iqx}|l> = <l|e^{iqx}|n> for real oscillator states.
                    matrix[(n, l)] = v;
                }
            }
        }
        OverlapTable { q, matrix }
    }

    pub fn get(&self, l: usize, n: usize) -> Complex64 {
        self.matrix[(l, n)]
    }
}

/// Column-banded overlap matrix keeping entries above a magnitude cutoff.
#[derive(Debug, Clone)]
pub struct BandedOverlap {
    pub q: f64,
    pub n_max: usize,
    /// For each column `n`: first row index and the values from there on.
    pub columns: Vec<(usize, Vec<Complex64>)>,
}

impl BandedOverlap {
    pub fn new(q: f64, n_max: usize, cutoff: f64) -> Self {
        let table = OverlapTable::new(q, n_max);
        let columns = (0..n_max)
            .map(|n| {
                let col = table.matrix.column(n);
                let first = (0..n_max).find(|&l| col[l].norm() >= cutoff).unwrap_or(n);
                let last = (0..n_max).rev().find(|&l| col[l].norm() >= cutoff).unwrap_or(n);
                (first, (first..=last).map(|l| col[l]).collect())
            })
            .collect();
        BandedOverlap { q, n_max, columns }
    }

    /// Nonzero entries `(l, value)` of column `n`.
    pub fn column(&self, n: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (first, ref vals) = self.columns[n];
        vals.iter().enumerate().map(move |(i, &v)| (first + i, v))
    }

    pub fn get(&self, l: usize, n: usize) -> Complex64 {
        let (first, ref vals) = self.columns[n];
        if l < first || l - first >= vals.len() {
            ZERO
        } else {
            vals[l - first]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_elements() {
        let ops = build_operators(32, 1.0, 0.0).unwrap();
        assert!((ops.x.get(0, 1).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((ops.p.get(0, 1).im + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((ops.x.get(4, 5).re - 2.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_rotation_gives_pauli_x() {
        let s = sigma_x_rotated(0.0);
        assert_eq!(s, [[ZERO, ONE], [ONE, ZERO]]);
    }

    #[test]
    fn rotated_spinors_are_eigenvectors() {
        let phi = 0.7;
        let sx = sigma_x_rotated(phi);
        for s in Spin::BOTH {
            let v = s.spinor(phi);
            for r in 0..2 {
                let hv = sx[r][0] * v[0] + sx[r][1] * v[1];
                assert!((hv - s.sign() * v[r]).norm() < 1e-15);
            }
        }
        // <+| Sigma_y |-> = i
        let sy = sigma_y_rotated(phi);
        let (p, m) = (Spin::Plus.spinor(phi), Spin::Minus.spinor(phi));
        let mut e = ZERO;
        for r in 0..2 {
            for c in 0..2 {
                e += p[r].conj() * sy[r][c] * m[c];
            }
        }
        assert!((e - I).norm() < 1e-15);
    }

    #[test]
    fn boost_identity_at_zero() {
        assert_eq!(boost_overlap(3, 3, 0.0), ONE);
        assert_eq!(boost_overlap(3, 4, 0.0), ZERO);
    }

    #[test]
    fn boost_reference_magnitudes() {
        assert!((boost_overlap(0, 0, 0.16).norm() - 0.993_620).abs() < 1e-6);
        assert!((boost_overlap(0, 0, 0.16).re - (-0.0064f64).exp()).abs() < 1e-15);
        // Closed form (q/sqrt2) e^{-q^2/4} = 0.1124153; quoted elsewhere as 0.112418.
        let eta = boost_overlap(1, 0, 0.16).norm();
        assert!((eta - 0.16 * std::f64::consts::FRAC_1_SQRT_2 * (-0.0064f64).exp()).abs() < 1e-15);
        assert!((eta - 0.112_418).abs() < 5e-6);
    }

    #[test]
    fn boost_matches_oracle_small() {
        let oracle = boost_matrix_oracle(0.5, 80);
        for l in 0..20 {
            for n in 0..20 {
                let d = (boost_overlap(l, n, 0.5) - oracle[(l, n)]).norm();
                assert!(d < 1e-12, "({l},{n}): {d}");
            }
        }
    }

    #[test]
    fn oracle_refuses_small_basis() {
        assert!(matches!(
            boost_overlap_oracle(10, 10, 0.1, 50),
            Err(Error::InsufficientBasis { needed: 60, got: 50 })
        ));
    }

    #[test]
    fn quench_overlap_same_spin_is_identity() {
        assert_eq!(quench_overlap(2, Spin::Plus, 2, Spin::Plus, 6.25, 0.08), ONE);
        assert_eq!(quench_overlap(2, Spin::Minus, 3, Spin::Minus, 6.25, 0.08), ZERO);
        let v = quench_overlap(0, Spin::Minus, 0, Spin::Plus, 0.0, 0.08);
        assert!((v.norm() - 0.993_620).abs() < 1e-6);
        for a0 in [0.0, 6.25] {
            let e = quench_overlap(1, Spin::Minus, 0, Spin::Plus, a0, 0.08);
            assert!((e.norm() - 0.112_415_3).abs() < 1e-7);
        }
    }

    #[test]
    fn large_index_overlaps_are_finite() {
        let v = boost_overlap(600, 400, 20.0);
        assert!(v.norm().is_finite());
        // |<l|e^{iqx}|0>|^2 is Poisson with mean q^2/2.
        let w = boost_overlap(400, 0, 20.0);
        let ln_p = -200.0 + 400.0 * 200f64.ln() - crate::special::ln_factorial_ratio(0, 400);
        assert!((2.0 * w.norm().ln() - ln_p).abs() < 1e-10);
    }

    #[test]
    fn banded_matches_dense() {
        let t = OverlapTable::new(-0.16, 60);
        let b = BandedOverlap::new(-0.16, 60, 1e-14);
        for n in 0..60 {
            for l in 0..60 {
                let d = (t.get(l, n) - b.get(l, n)).norm();
                assert!(d < 1e-14);
            }
        }
    }
}
