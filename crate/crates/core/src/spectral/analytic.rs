//! First-order Zeeman perturbation theory over the quench spectrum and the
//! resulting time-averaged spin polarisation.
//!
//! Basis states `|n, s>` = `psi_n^s` ⊗ `|s>` are indexed `2n + s.index()`.
//! Zeroth-order states are either single basis states or the two
//! eigenvectors of an avoided-crossing block `{(n,+), (n+k,-)}`. Because the
//! quench gap `2 alpha A0 - k` does not depend on `n`, every block of a given
//! `k` is near-degenerate at once. Phases use the Zeeman-shifted energies;
//! denominators of isolated levels use the bare quench energies.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{quench_energy, required_basis, solve_two_level, Branch, DEGENERACY_THRESHOLD};
use crate::basis::{boost_overlap, BandedOverlap, Spin};
use crate::error::{Error, Result};
use crate::params::NaturalParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Levels within this many of the top of the basis count as the tail.
const TAIL_WINDOW: usize = 8;

pub type StateLabel = (usize, Spin);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Half-width of the quasi-degenerate window.
    pub threshold: f64,
    /// Use the `n = 0` block overlap for every avoided-crossing block.
    pub eta_n_independent: bool,
    /// Overlap entries below this magnitude are dropped.
    pub cutoff: f64,
    /// Zeroth-order states with smaller projected amplitude are skipped.
    pub amplitude_floor: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            threshold: DEGENERACY_THRESHOLD,
            eta_n_independent: false,
            cutoff: 1e-12,
            amplitude_floor: 1e-10,
        }
    }
}

impl SpectralOptions {
    /// Treat the nearest-order blocks exactly at every amplitude. Removes the
    /// jump in `Q` where the default window opens, at the price of pairing
    /// levels that are up to half a quantum apart.
    pub fn paired() -> Self {
        SpectralOptions {
            threshold: 0.5,
            ..Self::default()
        }
    }
}

/// `(1/T) ∫_0^T exp(-i omega s) ds`.
pub fn time_average_phase(omega: f64, span: f64) -> Complex64 {
    let x = omega * span;
    if x.abs() < 1e-8 {
        Complex64::new(1.0, -0.5 * x)
    } else {
        (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -x)) / Complex64::new(0.0, x)
    }
}

/// One term `weight * exp(-i omega (t - t0))` of the polarisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub bra: usize,
    pub ket: usize,
    pub weight: Complex64,
    pub omega: f64,
}

/// A zeroth-order state and its first-order Zeeman correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedState {
    pub label: StateLabel,
    pub branch: Branch,
    pub energy: f64,
    /// Zeroth-order components on basis states.
    pub zeroth: Vec<(StateLabel, Complex64)>,
    /// First-order coefficients on `|l, +>`.
    pub f1: Vec<(usize, Complex64)>,
    /// First-order coefficients on `|l, ->`.
    pub f2: Vec<(usize, Complex64)>,
    pub correction_norm: f64,
}

/// Everything needed to evaluate the polarisation after the kick.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub a0: f64,
    pub branch: Branch,
    /// Order `k` of the active avoided crossings, if any.
    pub order: Option<i64>,
    /// Zeeman-corrected detuning from the nearest crossing.
    pub detuning: f64,
    pub labels: Vec<StateLabel>,
    pub energies: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub correction_norms: Vec<f64>,
    /// States whose first-order correction exceeds 0.2 in norm.
    pub flagged: usize,
    pub terms: Vec<PairTerm>,
    zeroth: Vec<Vec<(usize, Complex64)>>,
    corrected: Vec<Vec<(usize, Complex64)>>,
    index: HashMap<StateLabel, usize>,
}

#[derive(Default)]
struct ZerothStates {
    labels: Vec<StateLabel>,
    energies: Vec<f64>,
    /// Energies entering perturbative denominators: the quench energies for
    /// isolated levels, the block eigenvalues for paired ones.
    bare: Vec<f64>,
    zeroth: Vec<Vec<(usize, Complex64)>>,
    block: Vec<usize>,
}

impl ZerothStates {
    fn push(&mut self, label: StateLabel, e: f64, bare: f64, comps: Vec<(usize, Complex64)>, block: usize) {
        self.labels.push(label);
        self.energies.push(e);
        self.bare.push(bare);
        self.zeroth.push(comps);
        self.block.push(block);
    }
}

fn label_of(b: usize) -> StateLabel {
    (b / 2, if b % 2 == 0 { Spin::Plus } else { Spin::Minus })
}

fn basis_index(n: usize, s: Spin) -> usize {
    2 * n + s.index()
}

impl Expansion {
    /// `<sigma_z>` at time `t0 + s`.
    pub fn sigma_z(&self, s: f64) -> f64 {
        self.sigma_z_complex(s).re
    }

    /// Unreduced sum; its imaginary part measures how well the pair terms
    /// pair up into complex conjugates.
    pub fn sigma_z_complex(&self, s: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.weight * Complex64::from_polar(1.0, -t.omega * s))
            .sum()
    }

    /// Average of `<sigma_z>` over `[t0, t0 + span]`.
    pub fn long_time_average(&self, span: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * time_average_phase(t.omega, span))
            .sum::<Complex64>()
            .re
    }

    pub fn state(&self, label: StateLabel) -> Option<PerturbedState> {
        let j = *self.index.get(&label)?;
        let zeroth: Vec<_> = self.zeroth[j].iter().map(|&(b, c)| (label_of(b), c)).collect();
        let mut first: HashMap<usize, Complex64> = self.corrected[j].iter().copied().collect();
        for &(b, c) in &self.zeroth[j] {
            *first.entry(b).or_insert(ZERO) -= c;
        }
        let mut f1 = Vec::new();
        let mut f2 = Vec::new();
        let mut keys: Vec<_> = first.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
        keys.sort_by_key(|&(b, _)| b);
        for (b, c) in keys {
            let (l, s) = label_of(b);
            match s {
                Spin::Plus => f1.push((l, c)),
                Spin::Minus => f2.push((l, c)),
            }
        }
        Some(PerturbedState {
            label,
            branch: self.branch,
            energy: self.energies[j],
            zeroth,
            f1,
            f2,
            correction_norm: self.correction_norms[j],
        })
    }
}

/// Tables `M_{ab}(N, L)` of the polarisation written as
/// `sum M exp(-i (E_{N,a} - E_{L,b})(t - t0)) + c.c.`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaZCoefficients {
    pub branch: Branch,
    pub plus_plus: Vec<MEntry>,
    pub minus_minus: Vec<MEntry>,
    pub plus_minus: Vec<MEntry>,
    pub minus_plus: Vec<MEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MEntry {
    pub n: usize,
    pub l: usize,
    pub value: Complex64,
    pub omega: f64,
}

impl SigmaZCoefficients {
    fn all(&self) -> impl Iterator<Item = &MEntry> {
        self.plus_plus
            .iter()
            .chain(&self.minus_minus)
            .chain(&self.plus_minus)
            .chain(&self.minus_plus)
    }

    pub fn sigma_z(&self, s: f64) -> f64 {
        self.all()
            .map(|m| 2.0 * (m.value * Complex64::from_polar(1.0, -m.omega * s)).re)
            .sum()
    }

    pub fn long_time_average(&self, span: f64) -> f64 {
        self.all()
            .map(|m| 2.0 * (m.value * time_average_phase(m.omega, span)).re)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.all().all(|m| m.value.re.is_finite() && m.value.im.is_finite())
    }
}

/// Perturbative solver over a fixed basis.
#[derive(Debug, Clone)]
pub struct AnalyticEngine {
    alpha: f64,
    n_max: usize,
    options: SpectralOptions,
    /// `flip[s.index()].get(l, n) = <psi_l^{-s} | psi_n^{s}>`.
    flip: [BandedOverlap; 2],
}

struct Scratch {
    vals: Vec<Complex64>,
    touched: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            vals: vec![ZERO; n],
            touched: Vec::new(),
        }
    }

    fn add(&mut self, i: usize, v: Complex64) {
        if self.vals[i] == ZERO {
            self.touched.push(i);
        }
        self.vals[i] += v;
    }

    fn drain_sorted(&mut self) -> Vec<(usize, Complex64)> {
        self.touched.sort_unstable();
        self.touched.dedup();
        let out = self
            .touched
            .iter()
            .map(|&i| (i, self.vals[i]))
            .filter(|(_, v)| *v != ZERO)
            .collect();
        for &i in &self.touched {
            self.vals[i] = ZERO;
        }
        self.touched.clear();
        out
    }
}

impl AnalyticEngine {
    pub fn new(alpha: f64, n_max: usize, options: SpectralOptions) -> Self {
        AnalyticEngine {
            alpha,
            n_max,
            options,
            flip: [
                BandedOverlap::new(-2.0 * alpha, n_max, options.cutoff),
                BandedOverlap::new(2.0 * alpha, n_max, options.cutoff),
            ],
        }
    }

    /// Engine with a basis large enough for kicks up to `max_a0`.
    pub fn for_kick(alpha: f64, max_a0: f64, options: SpectralOptions) -> Self {
        Self::new(alpha, required_basis(max_a0.abs()), options)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn overlap(&self, l: usize, s_bra: Spin, n: usize, s_ket: Spin) -> Complex64 {
        if s_bra == s_ket {
            if l == n {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        } else {
            self.flip[s_ket.index()].get(l, n)
        }
    }

    /// Long-time average of `<sigma_z>` for the given drive.
    pub fn q(&self, params: &NaturalParams, initial: [Complex64; 2], span: f64) -> Result<f64> {
        Ok(self.expand(params, initial)?.long_time_average(span))
    }

    pub fn expand(&self, params: &NaturalParams, initial: [Complex64; 2]) -> Result<Expansion> {
        if (params.alpha - self.alpha).abs() > 1e-14 * self.alpha.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "engine built for alpha = {} used with alpha = {}",
                self.alpha, params.alpha
            )));
        }
        let nb = self.n_max;
        let dim = 2 * nb;
        let alpha = self.alpha;
        let a0 = params.kick();
        let zc = params.zeeman_parallel();
        let zs = params.zeeman_perpendicular();

        // Initial amplitudes on the quench basis; both spin sectors share
        // the orbital profile <phi_N| e^{-i A0 x} |phi_0>.
        let profile: Vec<Complex64> = (0..nb).map(|n| boost_overlap(n, 0, -a0)).collect();
        let tail: f64 = profile[nb.saturating_sub(TAIL_WINDOW)..].iter().map(|c| c.norm_sqr()).sum();
        if tail >= 1e-10 {
            return Err(Error::TruncationBreach {
                n_max: nb,
                window: TAIL_WINDOW,
                tail_mass: tail,
            });
        }
        let mut a_basis = vec![ZERO; dim];
        for n in 0..nb {
            for s in Spin::BOTH {
                a_basis[basis_index(n, s)] = initial[s.index()] * profile[n];
            }
        }

        // Zeroth-order states.
        let g = 2.0 * alpha * a0;
        let k = g.round();
        let detuning = g - k;
        let degenerate = detuning.abs() < self.options.threshold;
        let k = k as i64;
        let branch = if degenerate {
            Branch::Degenerate
        } else {
            Branch::Nondegenerate
        };
        let energy0 = |n: usize, s: Spin| quench_energy(n, s, a0, alpha) + s.sign() * zc;

        let mut z = ZerothStates::default();
        let mut paired_minus = vec![false; nb];
        let mut nblocks = 0;
        for n in 0..nb {
            let m = n as i64 + k;
            if degenerate && m >= 0 && (m as usize) < nb {
                let m = m as usize;
                paired_minus[m] = true;
                let eta = if self.options.eta_n_independent {
                    if k >= 0 {
                        boost_overlap(k as usize, 0, -2.0 * alpha)
                    } else {
                        boost_overlap(0, (-k) as usize, -2.0 * alpha)
                    }
                } else {
                    self.overlap(m, Spin::Minus, n, Spin::Plus)
                };
                let d1 = energy0(n, Spin::Plus);
                let d2 = energy0(m, Spin::Minus);
                let w = Complex64::new(0.0, zs) * eta.conj();
                let (es, vecs) = solve_two_level(d1, d2, w);
                let (upper, lower) = if d1 >= d2 {
                    ((n, Spin::Plus), (m, Spin::Minus))
                } else {
                    ((m, Spin::Minus), (n, Spin::Plus))
                };
                let bp = basis_index(n, Spin::Plus);
                let bm = basis_index(m, Spin::Minus);
                for (i, label) in [(0, upper), (1, lower)] {
                    let mut comps: Vec<_> = [(bp, vecs[i][0]), (bm, vecs[i][1])]
                        .into_iter()
                        .filter(|(_, c)| *c != ZERO)
                        .collect();
                    comps.sort_by_key(|&(b, _)| b);
                    z.push(label, es[i], es[i], comps, nblocks);
                }
            } else {
                let b = basis_index(n, Spin::Plus);
                z.push((n, Spin::Plus), energy0(n, Spin::Plus), quench_energy(n, Spin::Plus, a0, alpha), vec![(b, Complex64::new(1.0, 0.0))], nblocks);
            }
            nblocks += 1;
        }
        for m in 0..nb {
            if !paired_minus[m] {
                let b = basis_index(m, Spin::Minus);
                z.push((m, Spin::Minus), energy0(m, Spin::Minus), quench_energy(m, Spin::Minus, a0, alpha), vec![(b, Complex64::new(1.0, 0.0))], nblocks);
                nblocks += 1;
            }
        }
        let ZerothStates {
            labels,
            energies,
            bare,
            zeroth,
            block,
        } = z;
        let nstates = labels.len();

        // Inverse map: basis state -> (zeroth state, U_{b j}).
        let mut owner: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for (j, comps) in zeroth.iter().enumerate() {
            for &(b, c) in comps {
                owner[b].push((j, c));
            }
        }

        // First-order corrections |j> = |j0> + sum_i T_ij |i0>.
        let mut corrected = zeroth.clone();
        let mut correction_norms = vec![0.0; nstates];
        let mut flagged = 0;
        if zs != 0.0 {
            let mut vb = Scratch::new(dim);
            let mut vi = Scratch::new(nstates);
            let mut rb = Scratch::new(dim);
            for j in 0..nstates {
                for &(b, u) in &zeroth[j] {
                    let (n, s) = label_of(b);
                    // <l,-s| H_Z |n,s> = zs <-s|Sigma_y|s> <psi_l^{-s}|psi_n^s>, <-s|Sigma_y|s> = -i s
                    let pref = Complex64::new(0.0, -s.sign() * zs) * u;
                    for (l, o) in self.flip[s.index()].column(n) {
                        vb.add(basis_index(l, s.flip()), pref * o);
                    }
                }
                for (b, v) in vb.drain_sorted() {
                    for &(i, uc) in &owner[b] {
                        if block[i] != block[j] {
                            vi.add(i, uc.conj() * v);
                        }
                    }
                }
                let mut norm2 = 0.0;
                for &(b, u) in &zeroth[j] {
                    rb.add(b, u);
                }
                for (i, vij) in vi.drain_sorted() {
                    let denom = bare[j] - bare[i];
                    if denom.abs() < 1e-3 && vij.norm() > 1e-15 {
                        return Err(Error::PerturbationBreakdown {
                            from: format!("{:?}", labels[j]),
                            to: format!("{:?}", labels[i]),
                            denominator: denom,
                        });
                    }
                    let t = vij / denom;
                    norm2 += t.norm_sqr();
                    for &(b, u) in &zeroth[i] {
                        rb.add(b, t * u);
                    }
                }
                corrected[j] = rb.drain_sorted();
                correction_norms[j] = norm2.sqrt();
                if correction_norms[j] > 0.2 {
                    flagged += 1;
                }
            }
            if flagged > 0 {
                log::warn!(
                    "{flagged} states have first-order corrections above 0.2 at A0 = {a0:.4}"
                );
            }
        }

        // Projected amplitudes c_j = <j|Psi>.
        let amplitudes: Vec<Complex64> = corrected
            .iter()
            .map(|col| col.iter().map(|&(b, r)| r.conj() * a_basis[b]).sum())
            .collect();

        let terms = self.pair_terms(&corrected, &amplitudes, &energies, self.options.amplitude_floor);

        let index = labels.iter().enumerate().map(|(j, &l)| (l, j)).collect();
        Ok(Expansion {
            a0,
            branch,
            order: if degenerate { Some(k) } else { None },
            detuning,
            labels,
            energies,
            amplitudes,
            correction_norms,
            flagged,
            terms,
            zeroth,
            corrected,
            index,
        })
    }

    /// `sigma_z` applied to a sparse basis vector.
    fn apply_sigma_z(&self, col: &[(usize, Complex64)], out: &mut Scratch) {
        for &(b, r) in col {
            let (n, s) = label_of(b);
            for (l, o) in self.flip[s.index()].column(n) {
                out.add(basis_index(l, s.flip()), o * r);
            }
        }
    }

    fn pair_terms(
        &self,
        cols: &[Vec<(usize, Complex64)>],
        amps: &[Complex64],
        energies: &[f64],
        floor: f64,
    ) -> Vec<PairTerm> {
        let dim = 2 * self.n_max;
        let live: Vec<usize> = (0..amps.len()).filter(|&j| amps[j].norm() > floor).collect();
        let extent = |col: &[(usize, Complex64)]| -> (usize, usize) {
            (col.first().map_or(0, |c| c.0), col.last().map_or(0, |c| c.0))
        };
        let mut scratch = Scratch::new(dim);
        let mut dense = vec![ZERO; dim];
        let mut terms = Vec::new();
        for &k in &live {
            self.apply_sigma_z(&cols[k], &mut scratch);
            let z = scratch.drain_sorted();
            if z.is_empty() {
                continue;
            }
            let (zlo, zhi) = (z[0].0, z[z.len() - 1].0);
            for &(b, v) in &z {
                dense[b] = v;
            }
            for &j in &live {
                let (lo, hi) = extent(&cols[j]);
                if hi < zlo || lo > zhi {
                    continue;
                }
                let s: Complex64 = cols[j].iter().map(|&(b, r)| r.conj() * dense[b]).sum();
                if s != ZERO {
                    terms.push(PairTerm {
                        bra: j,
                        ket: k,
                        weight: amps[j].conj() * amps[k] * s,
                        omega: energies[k] - energies[j],
                    });
                }
            }
            for &(b, _) in &z {
                dense[b] = ZERO;
            }
        }
        terms
    }

    /// Split the expansion into the `M_{ab}(N, L)` tables. Cross-spin pairs
    /// with ket `(N,-)` carry the zeroth-order overlap and those with ket
    /// `(N,+)` the first-order remainder; same-spin pairs are halved so each
    /// ordered pair plus its conjugate is counted once.
    pub fn sigma_z_coefficients(&self, e: &Expansion) -> SigmaZCoefficients {
        let floor = self.options.amplitude_floor;
        let full: HashMap<(usize, usize), (Complex64, f64)> =
            e.terms.iter().map(|t| ((t.bra, t.ket), (t.weight, t.omega))).collect();
        let zeroth: HashMap<(usize, usize), (Complex64, f64)> = self
            .pair_terms(&e.zeroth, &e.amplitudes, &e.energies, floor)
            .into_iter()
            .map(|t| ((t.bra, t.ket), (t.weight, t.omega)))
            .collect();
        let mut keys: Vec<(usize, usize)> = full.keys().chain(zeroth.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        let mut out = SigmaZCoefficients {
            branch: e.branch,
            plus_plus: Vec::new(),
            minus_minus: Vec::new(),
            plus_minus: Vec::new(),
            minus_plus: Vec::new(),
        };
        for (bra, ket) in keys {
            let (w, om1) = full.get(&(bra, ket)).copied().unwrap_or((ZERO, f64::NAN));
            let (w0, om0) = zeroth.get(&(bra, ket)).copied().unwrap_or((ZERO, f64::NAN));
            let omega = if om1.is_nan() { om0 } else { om1 };
            let (l, sb) = e.labels[bra];
            let (n, sk) = e.labels[ket];
            let (table, value) = match (sk, sb) {
                (Spin::Plus, Spin::Plus) => (&mut out.plus_plus, 0.5 * w),
                (Spin::Minus, Spin::Minus) => (&mut out.minus_minus, 0.5 * w),
                (Spin::Minus, Spin::Plus) => (&mut out.minus_plus, w0),
                (Spin::Plus, Spin::Minus) => (&mut out.plus_minus, w - w0),
            };
            if value != ZERO {
                table.push(MEntry { n, l, value, omega });
            }
        }
        out
    }
}

/// First-order Zeeman correction of one level, in a basis sized for the drive.
pub fn first_order_corrections(label: StateLabel, params: &NaturalParams) -> Result<PerturbedState> {
    let engine = AnalyticEngine::new(
        params.alpha,
        required_basis(params.kick()).max(label.0 + 40),
        SpectralOptions::default(),
    );
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let e = engine.expand(params, [Complex64::new(r, 0.0), Complex64::new(r, 0.0)])?;
    e.state(label)
        .ok_or_else(|| Error::Numerical(format!("level {label:?} outside the basis")))
}
