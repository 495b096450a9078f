//! Brute-force reference in the `2^N` product basis.
//!
//! Basis convention: bit `k` of a basis index is spin `k` (0 = down,
//! 1 = up), spin 0 least significant. Operators are stored sparsely by
//! column since every spin operator used here has at most `N + 1` nonzeros
//! per column; dense blocks are extracted per magnetization sector for
//! diagonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lambda::Axis;
use crate::model::{BasisOccupation, GaudinModel};
use crate::rapidity::RapiditySet;

/// Largest number of spins the oracle accepts.
pub const MAX_SPINS: usize = 12;

fn check_size(n: usize) -> Result<()> {
    if n > MAX_SPINS {
        Err(Error::TooLarge {
            size: n,
            limit: MAX_SPINS,
        })
    } else {
        Ok(())
    }
}

/// Complex amplitudes over the product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            amps: vec![Complex64::new(0.0, 0.0); 1 << n],
        }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut v = Self::zeros(n);
        v.amps[index] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn product(n: usize, occ: &BasisOccupation) -> Self {
        Self::basis(n, occ.basis_index())
    }

    /// Σ conj(a_i) b_i.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Σ a_i b_i, the pairing in which the transpose of a creation-operator
    /// product acts as the corresponding annihilation product.
    pub fn bilinear(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn scale(&mut self, s: Complex64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    pub fn axpy(&mut self, s: Complex64, x: &Self) {
        for (a, b) in self.amps.iter_mut().zip(&x.amps) {
            *a += s * b;
        }
    }

    /// Largest |amplitude| among indices whose popcount differs from `m`.
    pub fn leakage_outside_sector(&self, m: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i.count_ones() as usize != m)
            .map(|(_, a)| a.norm())
            .fold(0.0, f64::max)
    }
}

/// Real sparse operator on the product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub n: usize,
    /// `cols[c]` lists `(row, value)`.
    cols: Vec<Vec<(usize, f64)>>,
}

impl OperatorMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            cols: vec![Vec::new(); 1 << n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            cols: (0..1usize << n).map(|c| vec![(c, 1.0)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn from_column_map(n: usize, f: impl Fn(usize) -> Vec<(usize, f64)>) -> Self {
        Self {
            n,
            cols: (0..1usize << n).map(f).collect(),
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.cols[col]
            .iter()
            .filter(|(r, _)| *r == row)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn apply(&self, x: &StateVector) -> StateVector {
        let mut y = StateVector::zeros(self.n);
        for (c, col) in self.cols.iter().enumerate() {
            let xc = x.amps[c];
            if xc == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(r, v) in col {
                y.amps[r] += xc * v;
            }
        }
        y
    }

    fn compress(mut col: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
        col.sort_by_key(|e| e.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(col.len());
        for (r, v) in col {
            match out.last_mut() {
                Some(last) if last.0 == r => last.1 += v,
                _ => out.push((r, v)),
            }
        }
        out.retain(|e| e.1 != 0.0);
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            cols: self
                .cols
                .iter()
                .map(|c| c.iter().map(|&(r, v)| (r, v * s)).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            cols: self
                .cols
                .iter()
                .zip(&other.cols)
                .map(|(a, b)| Self::compress(a.iter().chain(b).copied().collect()))
                .collect(),
        }
    }

    /// `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            cols: other
                .cols
                .iter()
                .map(|bcol| {
                    let mut acc = Vec::new();
                    for &(k, bv) in bcol {
                        for &(r, av) in &self.cols[k] {
                            acc.push((r, av * bv));
                        }
                    }
                    Self::compress(acc)
                })
                .collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut cols = vec![Vec::new(); self.dim()];
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                cols[r].push((c, v));
            }
        }
        Self {
            n: self.n,
            cols: cols.into_iter().map(Self::compress).collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.cols.iter().flatten().map(|e| e.1.abs()).fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self).scaled(-1.0))
    }

    /// Dense restriction to the given basis indices.
    pub fn dense_block(&self, indices: &[usize]) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.dim()];
        for (k, &i) in indices.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = DMatrix::zeros(indices.len(), indices.len());
        for (k, &c) in indices.iter().enumerate() {
            for &(r, v) in &self.cols[c] {
                if pos[r] != usize::MAX {
                    m[(pos[r], k)] += v;
                }
            }
        }
        m
    }
}

/// `S⁺_i`, `S⁻_i`, `S^z_i` for every site.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub plus: Vec<OperatorMatrix>,
    pub minus: Vec<OperatorMatrix>,
    pub z: Vec<OperatorMatrix>,
}

pub fn splus(n: usize, k: usize) -> OperatorMatrix {
    OperatorMatrix::from_column_map(n, |c| {
        if c & (1 << k) == 0 {
            vec![(c | (1 << k), 1.0)]
        } else {
            Vec::new()
        }
    })
}

pub fn sminus(n: usize, k: usize) -> OperatorMatrix {
    OperatorMatrix::from_column_map(n, |c| {
        if c & (1 << k) != 0 {
            vec![(c & !(1 << k), 1.0)]
        } else {
            Vec::new()
        }
    })
}

pub fn sz(n: usize, k: usize) -> OperatorMatrix {
    OperatorMatrix::from_column_map(n, |c| vec![(c, if c & (1 << k) != 0 { 0.5 } else { -0.5 })])
}

pub fn build_spin_ops(n: usize) -> Result<SpinOps> {
    check_size(n)?;
    Ok(SpinOps {
        plus: (0..n).map(|k| splus(n, k)).collect(),
        minus: (0..n).map(|k| sminus(n, k)).collect(),
        z: (0..n).map(|k| sz(n, k)).collect(),
    })
}

/// `S_i · S_j = S^z_i S^z_j + ½(S⁺_i S⁻_j + S⁻_i S⁺_j)` for `i ≠ j`.
pub fn spin_dot(n: usize, i: usize, j: usize) -> OperatorMatrix {
    OperatorMatrix::from_column_map(n, |c| {
        let bi = c & (1 << i) != 0;
        let bj = c & (1 << j) != 0;
        let zz = if bi == bj { 0.25 } else { -0.25 };
        let mut col = vec![(c, zz)];
        if bi != bj {
            col.push((c ^ (1 << i) ^ (1 << j), 0.5));
        }
        col
    })
}

/// `R_i = −2S^z_i/g + Σ_{j≠i} 2 S_i·S_j/(ε_i − ε_j)`.
pub fn build_charge(model: &GaudinModel<f64>, i: usize) -> Result<OperatorMatrix> {
    let n = model.num_spins();
    check_size(n)?;
    if i >= n {
        return Err(Error::SiteOutOfRange { site: i, n });
    }
    let e = model.epsilons();
    let g = model.coupling();
    let mut r = sz(n, i).scaled(-2.0 / g);
    for j in 0..n {
        if j != i {
            r = r.add(&spin_dot(n, i, j).scaled(2.0 / (e[i] - e[j])));
        }
    }
    Ok(r)
}

/// `Σ_i η_i R_i`.
pub fn build_hamiltonian(model: &GaudinModel<f64>, eta: &[f64]) -> Result<OperatorMatrix> {
    let n = model.num_spins();
    if eta.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: eta.len(),
        });
    }
    let mut h = OperatorMatrix::zeros(n);
    for (i, &w) in eta.iter().enumerate() {
        if w != 0.0 {
            h = h.add(&build_charge(model, i)?.scaled(w));
        }
    }
    Ok(h)
}

/// `H = B S^z_0 + Σ_j A_j S_0·S_j` on `1 + A.len()` spins.
pub fn central_spin_hamiltonian(field: f64, couplings: &[f64]) -> Result<OperatorMatrix> {
    let n = couplings.len() + 1;
    check_size(n)?;
    let mut h = sz(n, 0).scaled(field);
    for (j, &a) in couplings.iter().enumerate() {
        h = h.add(&spin_dot(n, 0, j + 1).scaled(a));
    }
    Ok(h)
}

/// Applies `Σ_i O_i/(u − ε_i)` with `O_i` raising (`raise`) or lowering.
fn apply_creation(model: &GaudinModel<f64>, u: Complex64, raise: bool, v: &StateVector) -> StateVector {
    let n = model.num_spins();
    let mut out = StateVector::zeros(n);
    for (c, &a) in v.amps.iter().enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (k, &ek) in model.epsilons().iter().enumerate() {
            let bit = c & (1 << k) != 0;
            if bit != raise {
                out.amps[c ^ (1 << k)] += a / (u - ek);
            }
        }
    }
    out
}

/// `Π B(λ_j)|↓…↓⟩` on the down-vacuum axis, `Π C(μ_j)|↑…↑⟩` on the up one,
/// with `B(u) = Σ S⁺_i/(u − ε_i)` and `C(u) = Σ S⁻_i/(u − ε_i)`.
pub fn build_bethe_vector(model: &GaudinModel<f64>, rap: &RapiditySet<f64>) -> Result<StateVector> {
    let n = model.num_spins();
    check_size(n)?;
    for (j, l) in rap.values.iter().enumerate() {
        for (k, &e) in model.epsilons().iter().enumerate() {
            if (l - e).norm() <= 1e-12 * model.span() {
                return Err(Error::RapidityOnLevel { index: j, level: k });
            }
        }
    }
    let (mut v, raise) = match rap.axis {
        Axis::Lambda => (StateVector::basis(n, 0), true),
        Axis::Mu => (StateVector::basis(n, (1 << n) - 1), false),
    };
    for &l in &rap.values {
        v = apply_creation(model, l, raise, &v);
    }
    Ok(v)
}

/// Basis indices with `m` up spins, increasing.
pub fn sector_indices(n: usize, m: usize) -> Vec<usize> {
    (0..1usize << n)
        .filter(|i| i.count_ones() as usize == m)
        .collect()
}

/// Joint eigenbasis of the charges within one magnetization sector.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub m: usize,
    /// Charge eigenvalues `r_i`, one vector per eigenstate.
    pub r_vectors: Vec<Vec<f64>>,
    /// Real unit eigenvectors over the full basis.
    pub eigenvectors: Vec<StateVector>,
}

/// Diagonalizes a seeded generic `Σ η_i R_i` sector by sector and reads off
/// each `r_i` as `⟨v|R_i|v⟩`.
pub fn spectrum_by_sector(model: &GaudinModel<f64>, seed: u64) -> Result<Vec<SectorSpectrum>> {
    let n = model.num_spins();
    check_size(n)?;
    let charges = (0..n)
        .map(|i| build_charge(model, i))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_gap = 0.0;
    'draw: for _ in 0..8 {
        let eta: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let mut out = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let idx = sector_indices(n, m);
            let blocks: Vec<DMatrix<f64>> = charges.iter().map(|r| r.dense_block(&idx)).collect();
            let mut h = DMatrix::zeros(idx.len(), idx.len());
            for (b, &w) in blocks.iter().zip(&eta) {
                h += b * w;
            }
            let eig = SymmetricEigen::new(h);
            let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let gap = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            if gap < 1e-9 {
                last_gap = gap;
                continue 'draw;
            }
            let mut r_vectors = Vec::with_capacity(idx.len());
            let mut eigenvectors = Vec::with_capacity(idx.len());
            for k in 0..idx.len() {
                let v = eig.eigenvectors.column(k);
                let r: Vec<f64> = blocks.iter().map(|b| v.dot(&(b * v))).collect();
                let mut full = StateVector::zeros(n);
                for (p, &i) in idx.iter().enumerate() {
                    full.amps[i] = Complex64::new(v[p], 0.0);
                }
                r_vectors.push(r);
                eigenvectors.push(full);
            }
            out.push(SectorSpectrum {
                m,
                r_vectors,
                eigenvectors,
            });
        }
        return Ok(out);
    }
    Err(Error::DegenerateGeneric(last_gap))
}

/// Result of pairing two lists of charge vectors.
#[derive(Debug, Clone)]
pub struct Matching {
    /// `pairs[a] = b`: item `a` of the first list matched to item `b` of the second.
    pub pairs: Vec<usize>,
    /// Largest ∞-norm distance among matched pairs.
    pub max_distance: f64,
    /// Items whose runner-up candidate was within the ambiguity margin.
    pub ambiguous: Vec<usize>,
}

/// Ambiguity margin for [`greedy_match`].
pub const MATCH_AMBIGUITY: f64 = 1e-4;

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Greedy nearest-neighbour matching in ∞-norm; every item of `a` takes the
/// closest unused item of `b`.
pub fn greedy_match(a: &[Vec<f64>], b: &[Vec<f64>]) -> Matching {
    let mut used = vec![false; b.len()];
    let mut pairs = Vec::with_capacity(a.len());
    let mut max_distance: f64 = 0.0;
    let mut ambiguous = Vec::new();
    for (ia, va) in a.iter().enumerate() {
        let mut dists: Vec<(f64, usize)> = b
            .iter()
            .enumerate()
            .filter(|(ib, _)| !used[*ib])
            .map(|(ib, vb)| (inf_dist(va, vb), ib))
            .collect();
        dists.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let Some(&(d, best)) = dists.first() else {
            pairs.push(usize::MAX);
            max_distance = f64::INFINITY;
            continue;
        };
        if dists.len() > 1 && dists[1].0 - d < MATCH_AMBIGUITY {
            ambiguous.push(ia);
        }
        used[best] = true;
        pairs.push(best);
        max_distance = max_distance.max(d);
    }
    Matching {
        pairs,
        max_distance,
        ambiguous,
    }
}

/// Real symmetric eigen-decomposition of an operator restricted to a sector.
struct SectorPropagator {
    idx: Vec<usize>,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl SectorPropagator {
    fn new(h: &OperatorMatrix, m: usize) -> Self {
        let idx = sector_indices(h.n, m);
        let eig = SymmetricEigen::new(h.dense_block(&idx));
        Self {
            idx,
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// `e^{−iHt}` applied to the sector component of `psi`.
    fn evolve(&self, psi: &StateVector, t: f64) -> StateVector {
        let d = self.idx.len();
        let coeffs: Vec<Complex64> = (0..d)
            .map(|k| {
                let c: Complex64 = (0..d).map(|p| psi.amps[self.idx[p]] * self.vectors[(p, k)]).sum();
                c * Complex64::from_polar(1.0, -self.values[k] * t)
            })
            .collect();
        let mut out = StateVector::zeros(psi.n);
        for p in 0..d {
            out.amps[self.idx[p]] = (0..d).map(|k| coeffs[k] * self.vectors[(p, k)]).sum();
        }
        out
    }
}

/// `⟨ψ(t)|S⁺_0|ψ(t)⟩` for `ψ(0) = α|↑_0; occ⟩ + β|↓_0; occ⟩` evolved under
/// the central-spin Hamiltonian. `bath_occ` indexes bath spins from 0.
pub fn central_spin_coherence(
    field: f64,
    couplings: &[f64],
    alpha: Complex64,
    beta: Complex64,
    bath_occ: &BasisOccupation,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    let h = central_spin_hamiltonian(field, couplings)?;
    let n = h.n;
    let sites: Vec<usize> = bath_occ.sites().iter().map(|s| s + 1).collect();
    let m = sites.len();
    let down = BasisOccupation::new(sites.clone(), n)?;
    let mut up_sites = sites;
    up_sites.push(0);
    let up = BasisOccupation::new(up_sites, n)?;

    let mut psi_up = StateVector::product(n, &up);
    psi_up.scale(alpha);
    let mut psi_down = StateVector::product(n, &down);
    psi_down.scale(beta);

    let prop_up = SectorPropagator::new(&h, m + 1);
    let prop_down = SectorPropagator::new(&h, m);
    let raise = splus(n, 0);
    Ok(times
        .iter()
        .map(|&t| {
            let a = prop_up.evolve(&psi_up, t);
            let b = prop_down.evolve(&psi_down, t);
            a.inner(&raise.apply(&b))
        })
        .collect())
}
