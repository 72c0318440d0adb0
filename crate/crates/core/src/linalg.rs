//! Small sparse-matrix toolkit and the Chebyshev matrix exponential.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::special::bessel_j_sequence;

pub type CMat = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Compressed-sparse-row complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<Complex64>,
}

impl Csr {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            *rows[r].entry(c).or_insert(ZERO) += v;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Csr {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.cols[lo..hi].binary_search(&c) {
            Ok(i) => self.vals[lo + i],
            Err(_) => ZERO,
        }
    }

    /// `out = self * v`.
    pub fn matvec_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        for r in 0..self.dim {
            let mut acc = ZERO;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * v[self.cols[i]];
            }
            out[r] = acc;
        }
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim];
        self.matvec_into(v, &mut out);
        out
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[i])] = self.vals[i];
            }
        }
        m
    }

    /// Re-express this matrix on a (super-)pattern; entries missing from the
    /// pattern must be zero.
    pub fn values_on(&self, pattern: &Csr) -> Vec<Complex64> {
        let mut out = vec![ZERO; pattern.nnz()];
        for r in 0..self.dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (lo, hi) = (pattern.row_ptr[r], pattern.row_ptr[r + 1]);
                let j = pattern.cols[lo..hi]
                    .binary_search(&self.cols[i])
                    .expect("entry outside target pattern");
                out[lo + j] = self.vals[i];
            }
        }
        out
    }

    /// Gershgorin bounds `(lo, hi)` on the spectrum of a Hermitian matrix.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let mut d = 0.0;
            let mut rad = 0.0;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[i] == r {
                    d = self.vals[i].re;
                } else {
                    rad += self.vals[i].norm();
                }
            }
            lo = lo.min(d - rad);
            hi = hi.max(d + rad);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

/// Union sparsity pattern of several same-sized matrices (values zero).
pub fn union_pattern(mats: &[&Csr]) -> Csr {
    let dim = mats[0].dim;
    let trip = mats.iter().flat_map(|m| {
        (0..dim).flat_map(move |r| (m.row_ptr[r]..m.row_ptr[r + 1]).map(move |i| (r, m.cols[i], ZERO)))
    });
    // Diagonal always present so Gershgorin sees it.
    Csr::from_triplets(dim, trip.chain((0..dim).map(|r| (r, r, ZERO))))
}

/// Kronecker product `a ⊗ s` of an orbital matrix with a 2x2 spin matrix,
/// using the interleaved index `2n + spin`.
pub fn kron_spin(a: &Csr, s: &[[Complex64; 2]; 2]) -> Csr {
    let mut trip = Vec::new();
    for r in 0..a.dim {
        for i in a.row_ptr[r]..a.row_ptr[r + 1] {
            let c = a.cols[i];
            for (si, srow) in s.iter().enumerate() {
                for (sj, &sv) in srow.iter().enumerate() {
                    if sv != ZERO {
                        trip.push((2 * r + si, 2 * c + sj, a.vals[i] * sv));
                    }
                }
            }
        }
    }
    Csr::from_triplets(2 * a.dim, trip)
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Apply `exp(-i H t)` to `v` for Hermitian `H` with spectrum inside
/// `bounds`, using a Chebyshev expansion with Bessel coefficients.
pub fn chebyshev_expm_apply(h: &Csr, bounds: (f64, f64), t: f64, v: &[Complex64]) -> Vec<Complex64> {
    let (lo, hi) = bounds;
    let centre = 0.5 * (hi + lo);
    let half = (0.5 * (hi - lo)).max(1e-300);
    let z = half * t.abs();
    // Terms beyond |J_k(z)| < 1e-17 are dropped; J_k decays superexponentially past k ~ z.
    let kmax = (z + 10.0 * z.cbrt() + 20.0).ceil() as usize;
    let j = bessel_j_sequence(z, kmax);
    let nterms = (0..=kmax)
        .rev()
        .find(|&k| j[k].abs() > 1e-17)
        .map_or(1, |k| k + 1);
    let n = v.len();
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };
    // (-i)^k for exp(-i z x) and its conjugate for negative time.
    let phase = |k: usize| -> Complex64 {
        match k % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -sign),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, sign),
        }
    };
    // Normalised operator applied as (H - centre) / half.
    let apply = |x: &[Complex64], out: &mut [Complex64]| {
        h.matvec_into(x, out);
        for i in 0..n {
            out[i] = (out[i] - centre * x[i]) / half;
        }
    };
    let mut acc: Vec<Complex64> = v.iter().map(|x| x * j[0]).collect();
    if nterms > 1 {
        let mut t_prev = v.to_vec();
        let mut t_cur = vec![ZERO; n];
        apply(&t_prev, &mut t_cur);
        let c1 = phase(1) * (2.0 * j[1]);
        for i in 0..n {
            acc[i] += c1 * t_cur[i];
        }
        let mut t_next = vec![ZERO; n];
        for k in 2..nterms {
            apply(&t_cur, &mut t_next);
            for i in 0..n {
                t_next[i] = 2.0 * t_next[i] - t_prev[i];
            }
            let ck = phase(k) * (2.0 * j[k]);
            for i in 0..n {
                acc[i] += ck * t_next[i];
            }
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut t_next);
        }
    }
    let global = Complex64::from_polar(1.0, -centre * t);
    for a in acc.iter_mut() {
        *a *= global;
    }
    acc
}

/// Dense `exp(-i H t)` of a Hermitian matrix via eigendecomposition.
pub fn dense_expm(h: &CMat, t: f64) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -lam * t);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= ph;
        }
    }
    scaled * v.adjoint()
}
