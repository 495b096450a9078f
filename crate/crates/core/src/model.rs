//! Model data and conserved-charge eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{Axis, LambdaState};
use crate::scalar::{Real, Total};

/// Relative distinctness threshold on the level energies.
pub const DISTINCT_RELATIVE: f64 = 1e-10;

/// Rational spin-1/2 Gaudin magnet: `N` distinct levels `ε_i` and a coupling `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaudinModel<T> {
    epsilons: Vec<T>,
    coupling: T,
    /// Σ 2|S_i|; equals the number of levels for spin 1/2.
    omega: usize,
}

impl<T: Real> GaudinModel<T> {
    pub fn new(epsilons: Vec<T>, g: T) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::EmptyModel);
        }
        if !epsilons.iter().all(|e| e.is_finite()) {
            return Err(Error::NonFinite("level energies"));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("coupling"));
        }
        if g == T::zero() {
            return Err(Error::ZeroCoupling);
        }
        let span = span_of(&epsilons);
        let threshold = T::lit(DISTINCT_RELATIVE) * span;
        for i in 0..epsilons.len() {
            for j in i + 1..epsilons.len() {
                let d = (epsilons[i] - epsilons[j]).abs();
                if d == T::zero() || d <= threshold {
                    return Err(Error::DuplicateEpsilon(i, j));
                }
            }
        }
        let omega = epsilons.len();
        Ok(Self {
            epsilons,
            coupling: g,
            omega,
        })
    }

    pub fn num_spins(&self) -> usize {
        self.epsilons.len()
    }

    pub fn epsilons(&self) -> &[T] {
        &self.epsilons
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    /// The same model in the wider scalar type.
    pub fn widened(&self) -> GaudinModel<T::Wider> {
        GaudinModel {
            epsilons: self.epsilons.iter().map(|&e| e.widen()).collect(),
            coupling: self.coupling.widen(),
            omega: self.omega,
        }
    }

    /// Same levels, different coupling.
    pub fn with_coupling(&self, g: T) -> Result<Self> {
        if g == T::zero() {
            return Err(Error::ZeroCoupling);
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("coupling"));
        }
        Ok(Self {
            coupling: g,
            ..self.clone()
        })
    }

    /// max ε − min ε (1 for a single level).
    pub fn span(&self) -> T {
        span_of(&self.epsilons)
    }

    pub fn min_spacing(&self) -> T {
        let mut sorted = self.epsilons.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))))
            .unwrap_or_else(T::one)
    }

    /// Σ_{j≠i} 1/(ε_i − ε_j).
    pub fn level_sum(&self, i: usize) -> T {
        let e = &self.epsilons;
        (0..e.len())
            .filter(|&j| j != i)
            .map(|j| (e[i] - e[j]).recip())
            .total()
    }
}

fn span_of<T: Real>(e: &[T]) -> T {
    let lo = e.iter().copied().fold(T::infinity(), T::min);
    let hi = e.iter().copied().fold(T::neg_infinity(), T::max);
    let s = hi - lo;
    if s > T::zero() {
        s
    } else {
        T::one()
    }
}

/// Strictly increasing list of up-spin sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisOccupation {
    up_sites: Vec<usize>,
}

impl BasisOccupation {
    /// Sorts the sites; rejects repeats and indices `>= n`.
    pub fn new(mut sites: Vec<usize>, n: usize) -> Result<Self> {
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidOccupation("repeated site".into()));
        }
        if let Some(&s) = sites.last() {
            if s >= n {
                return Err(Error::InvalidOccupation(format!(
                    "site {s} out of range for {n} levels"
                )));
            }
        }
        Ok(Self { up_sites: sites })
    }

    pub fn empty() -> Self {
        Self { up_sites: Vec::new() }
    }

    pub fn sites(&self) -> &[usize] {
        &self.up_sites
    }

    pub fn len(&self) -> usize {
        self.up_sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up_sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.up_sites.binary_search(&site).is_ok()
    }

    /// Sites not in the occupation, out of `n`.
    pub fn complement(&self, n: usize) -> Self {
        Self {
            up_sites: (0..n).filter(|s| !self.contains(*s)).collect(),
        }
    }

    /// Product-basis index: bit `k` set when site `k` is up.
    pub fn basis_index(&self) -> usize {
        self.up_sites.iter().map(|&s| 1usize << s).sum()
    }

    /// All `C(n, m)` occupations in lexicographic order.
    pub fn all_in_sector(n: usize, m: usize) -> Vec<Self> {
        let mut out = Vec::new();
        if m > n {
            return out;
        }
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            out.push(Self {
                up_sites: idx.clone(),
            });
            // advance to next combination
            let mut k = m;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if idx[k] < n - m + k {
                    idx[k] += 1;
                    for j in k + 1..m {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

/// Eigenvalues `r_i` of the commuting charges `R_i` on one eigenstate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeEigenvalues<T> {
    pub r: Vec<T>,
}

/// `r_i = ½[∓2Λ(ε_i) ± 2/g + Σ_{j≠i} 1/(ε_i − ε_j)]`, upper signs for the
/// down-vacuum axis, with `Λ^μ` entering through `Λ^μ = Λ^λ − 2/g`.
pub fn charge_eigenvalues<T: Real>(
    model: &GaudinModel<T>,
    lam: &LambdaState<T>,
) -> Result<ChargeEigenvalues<T>> {
    let n = model.num_spins();
    if lam.values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: lam.values.len(),
        });
    }
    let two = T::lit(2.0);
    let field = two / model.coupling();
    let shift = match lam.axis {
        Axis::Lambda => field,
        Axis::Mu => -field,
    };
    let r = (0..n)
        .map(|i| (-two * lam.values[i] + shift + model.level_sum(i)) / two)
        .collect();
    Ok(ChargeEigenvalues { r })
}

/// `Σ_i η_i r_i`.
pub fn hamiltonian_energy<T: Real>(eta: &[T], r: &ChargeEigenvalues<T>) -> Result<T> {
    if eta.len() != r.r.len() {
        return Err(Error::LengthMismatch {
            expected: r.r.len(),
            got: eta.len(),
        });
    }
    Ok(eta.iter().zip(&r.r).map(|(&a, &b)| a * b).total())
}

/// Binomial coefficient.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
