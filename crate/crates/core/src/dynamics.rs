//! Central-spin decoherence from the spectral sum over two adjacent sectors.
//!
//! `H = B S^z_0 + Σ_j A_j S_0·S_j` equals `½ R_0` of the Gaudin model with
//! `g = −1/B`, `ε_0 = 0` and `ε_j = −1/A_j`. For the initial state
//! `α|↑_0; occ⟩ + β|↓_0; occ⟩` the coherence `⟨S⁺_0⟩(t)` is a double sum
//! over eigenstates `n` of sector `M + 1` and `m` of sector `M`, `M = |occ|`.

use num_complex::Complex;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::determinant::{norm_product, partition_overlap_det, splus_form_factor};
use crate::error::{Error, Result};
use crate::lambda::{solve_all_in_sector, transform_axis, ContinuationConfig, LambdaState, SectorSolutions};
use crate::model::{binomial, charge_eigenvalues, hamiltonian_energy, BasisOccupation, GaudinModel};
use crate::scalar::{Real, Total};

/// Tolerance on `|α|² + |β|² = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Physical input of the central-spin problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralSpinParams<T> {
    pub field: T,
    pub couplings: Vec<T>,
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    /// Up spins of the bath, indexed from 0 over the bath sites.
    pub bath_occupation: BasisOccupation,
}

impl<T: Real> CentralSpinParams<T> {
    pub fn new(
        field: T,
        couplings: Vec<T>,
        alpha: Complex<T>,
        beta: Complex<T>,
        bath_occupation: BasisOccupation,
    ) -> Result<Self> {
        let p = Self {
            field,
            couplings,
            alpha,
            beta,
            bath_occupation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.field.is_finite() || !self.couplings.iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite("central-spin parameters"));
        }
        if self.field == T::zero() {
            return Err(Error::ZeroField);
        }
        if let Some(j) = self.couplings.iter().position(|a| *a == T::zero()) {
            return Err(Error::InvalidConfig(format!("coupling A_{j} is zero")));
        }
        let norm = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if !((norm - T::one()).abs() <= T::lit(NORMALIZATION_TOLERANCE)) {
            return Err(Error::InvalidConfig(format!(
                "|alpha|^2 + |beta|^2 = {} (must be 1)",
                norm.as_f64()
            )));
        }
        if self
            .bath_occupation
            .sites()
            .last()
            .is_some_and(|&s| s >= self.couplings.len())
        {
            return Err(Error::InvalidOccupation(format!(
                "bath site out of range for {} bath spins",
                self.couplings.len()
            )));
        }
        Ok(())
    }

    pub fn num_bath(&self) -> usize {
        self.couplings.len()
    }

    /// Up sites of `|↓_0; occ⟩` in the full model (central spin is site 0).
    pub fn lower_occupation(&self) -> BasisOccupation {
        let n = self.num_bath() + 1;
        BasisOccupation::new(self.bath_occupation.sites().iter().map(|s| s + 1).collect(), n)
            .expect("validated occupation")
    }

    /// Up sites of `|↑_0; occ⟩`.
    pub fn upper_occupation(&self) -> BasisOccupation {
        let n = self.num_bath() + 1;
        let mut sites: Vec<usize> = self.bath_occupation.sites().iter().map(|s| s + 1).collect();
        sites.push(0);
        BasisOccupation::new(sites, n).expect("validated occupation")
    }
}

/// Gaudin data of the central-spin Hamiltonian: the model and `η` with
/// `H = Σ η_i R_i`.
pub fn map_to_gaudin<T: Real>(p: &CentralSpinParams<T>) -> Result<(GaudinModel<T>, Vec<T>)> {
    p.validate()?;
    for i in 0..p.couplings.len() {
        for j in i + 1..p.couplings.len() {
            if p.couplings[i] == p.couplings[j] {
                return Err(Error::DegenerateCouplings(i, j));
            }
        }
    }
    let mut eps = Vec::with_capacity(p.couplings.len() + 1);
    eps.push(T::zero());
    eps.extend(p.couplings.iter().map(|&a| -a.recip()));
    let model = GaudinModel::new(eps, -p.field.recip()).map_err(|e| match e {
        // level 0 is ε_0 = 0, never equal to −1/A_j
        Error::DuplicateEpsilon(i, j) => Error::DegenerateCouplings(i - 1, j - 1),
        other => other,
    })?;
    let mut eta = vec![T::zero(); model.num_spins()];
    eta[0] = T::lit(0.5);
    Ok((model, eta))
}

/// One term of the double sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow<T> {
    /// Eigenstate index in sector `M + 1`.
    pub n: usize,
    /// Eigenstate index in sector `M`.
    pub m: usize,
    pub amplitude: Complex<T>,
    /// `ω_n − ω_m`.
    pub frequency: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable<T> {
    pub rows: Vec<SpectralRow<T>>,
    /// `Σ_m ⟨↓_0;occ|λ_m⟩⟨μ_m|↓_0;occ⟩ / ⟨μ_m|λ_m⟩`, 1 for a complete sector.
    pub completeness_lower: T,
    /// The same sum over sector `M + 1` and `|↑_0; occ⟩`.
    pub completeness_upper: T,
}

impl<T: Real> SpectralTable<T> {
    /// `Σ amplitude`, the coherence at `t = 0`.
    pub fn total(&self) -> Complex<T> {
        self.rows
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |a, r| a + r.amplitude)
    }
}

/// Per-eigenstate data entering the table.
struct Spectral<T> {
    lam: LambdaState<T>,
    mu: LambdaState<T>,
    omega: T,
    /// `⟨occ|λ⟩`
    ket: T,
    /// `⟨μ|occ⟩`
    bra: T,
    /// `1 / ⟨μ|λ⟩`
    inv_norm: T,
}

fn values_at<T: Real>(state: &LambdaState<T>, occ: &BasisOccupation) -> Vec<T> {
    occ.sites().iter().map(|&s| state.values[s]).collect()
}

fn spectral_data<T: Real>(
    model: &GaudinModel<T>,
    eta: &[T],
    sector: &SectorSolutions<T>,
    occ: &BasisOccupation,
) -> Result<Vec<Spectral<T>>> {
    let n = model.num_spins();
    let expected = binomial(n, sector.m);
    if sector.states.len() != expected || !sector.collisions.is_empty() {
        return Err(Error::IncompleteSector {
            m: sector.m,
            got: sector.states.len() - sector.collisions.len().min(sector.states.len()),
            expected,
        });
    }
    let down = occ.complement(n);
    sector
        .states
        .par_iter()
        .map(|lam| {
            let mu = transform_axis(model, lam)?;
            let norm = norm_product(model, lam, &mu)?;
            if norm == T::zero() {
                return Err(Error::ZeroOverlap(0.0));
            }
            let r = charge_eigenvalues(model, lam)?;
            let omega = hamiltonian_energy(eta, &r)?;
            let ket = partition_overlap_det(model, occ, &values_at(lam, occ))?;
            let bra = partition_overlap_det(model, &down, &values_at(&mu, &down))?;
            Ok(Spectral {
                lam: lam.clone(),
                mu,
                omega,
                ket,
                bra,
                inv_norm: norm.recip(),
            })
        })
        .collect()
}

/// Assembles the table from fully solved sectors `M` and `M + 1`.
///
/// `amplitude(n, m) = ᾱβ ⟨↑_0;occ|λ_n⟩ ⟨μ_n|S⁺_0|λ_m⟩ ⟨μ_m|↓_0;occ⟩ / (⟨μ_n|λ_n⟩⟨μ_m|λ_m⟩)`.
pub fn build_spectral_table<T: Real>(
    p: &CentralSpinParams<T>,
    lower: &SectorSolutions<T>,
    upper: &SectorSolutions<T>,
) -> Result<SpectralTable<T>> {
    let (model, eta) = map_to_gaudin(p)?;
    let m_low = p.bath_occupation.len();
    if lower.m != m_low || upper.m != m_low + 1 {
        return Err(Error::InvalidConfig(format!(
            "sectors {} and {} given, {} and {} required",
            lower.m,
            upper.m,
            m_low,
            m_low + 1
        )));
    }
    let occ_low = p.lower_occupation();
    let occ_up = p.upper_occupation();
    let low = spectral_data(&model, &eta, lower, &occ_low)?;
    let up = spectral_data(&model, &eta, upper, &occ_up)?;
    let prefactor = p.alpha.conj() * p.beta;

    let rows: Vec<Vec<SpectralRow<T>>> = up
        .par_iter()
        .enumerate()
        .map(|(n, sn)| {
            low.iter()
                .enumerate()
                .map(|(m, sm)| {
                    let ff = splus_form_factor(&model, 0, (&sn.mu).into(), (&sm.lam).into())?.value;
                    let w = sn.ket * sn.inv_norm * ff * sm.bra * sm.inv_norm;
                    Ok(SpectralRow {
                        n,
                        m,
                        amplitude: prefactor * w,
                        frequency: sn.omega - sm.omega,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let completeness =
        |data: &[Spectral<T>]| -> T { data.iter().map(|s| s.ket * s.bra * s.inv_norm).total() };
    Ok(SpectralTable {
        rows: rows.into_iter().flatten().collect(),
        completeness_lower: completeness(&low),
        completeness_upper: completeness(&up),
    })
}

/// Solves sectors `M` and `M + 1` of the mapped model and builds the table.
pub fn solve_spectral_table<T: Real>(
    p: &CentralSpinParams<T>,
    cfg: &ContinuationConfig<T>,
) -> Result<SpectralTable<T>> {
    let (model, _) = map_to_gaudin(p)?;
    let m = p.bath_occupation.len();
    let lower = solve_all_in_sector(&model, m, cfg)?;
    let upper = solve_all_in_sector(&model, m + 1, cfg)?;
    build_spectral_table(p, &lower, &upper)
}

/// How the double sum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Full,
    MonteCarlo { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub times: Vec<T>,
    pub values: Vec<Complex<T>>,
    /// Standard error of each value; present for Monte Carlo sums only.
    pub std_error: Option<Vec<T>>,
}

impl<T: Real> TimeSeries<T> {
    /// Largest `|value|`; at most ½ for a spin-½ coherence.
    pub fn max_modulus(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }
}

/// `count` evenly spaced times from `start` to `stop` inclusive.
pub fn time_grid<T: Real>(start: T, stop: T, count: usize) -> Result<Vec<T>> {
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidConfig(
            "time grid needs a finite range and count > 0".into(),
        ));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / T::count(count - 1);
    Ok((0..count).map(|k| start + step * T::count(k)).collect())
}

fn phase<T: Real>(w: T, t: T) -> Complex<T> {
    Complex::from_polar(T::one(), w * t)
}

/// `Σ_{n,m} amplitude · e^{i(ω_n − ω_m)t}` on every time.
///
/// Monte Carlo draws `count` rows with probability `∝ |amplitude|` and
/// averages `amplitude/p · phase`. When `count` covers the table the sum is
/// evaluated exactly instead.
pub fn coherence_factor<T: Real>(
    table: &SpectralTable<T>,
    times: &[T],
    sampling: Sampling,
) -> Result<TimeSeries<T>> {
    if table.rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let full = |rows: &[SpectralRow<T>]| -> Vec<Complex<T>> {
        times
            .par_iter()
            .map(|&t| {
                rows.iter().fold(Complex::new(T::zero(), T::zero()), |a, r| {
                    a + r.amplitude * phase(r.frequency, t)
                })
            })
            .collect()
    };
    match sampling {
        Sampling::MonteCarlo { count, seed } if count < table.rows.len() => {
            if count < 2 {
                return Err(Error::InvalidConfig(
                    "Monte Carlo needs at least 2 samples".into(),
                ));
            }
            let weights: Vec<f64> = table.rows.iter().map(|r| r.amplitude.norm().as_f64()).collect();
            let total: T = table.rows.iter().map(|r| r.amplitude.norm()).total();
            let dist = WeightedIndex::new(&weights)
                .map_err(|_| Error::InvalidConfig("all amplitudes vanish".into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let picks: Vec<(Complex<T>, T)> = (0..count)
                .map(|_| {
                    let r = &table.rows[dist.sample(&mut rng)];
                    let p = r.amplitude.norm() / total;
                    (r.amplitude / p, r.frequency)
                })
                .collect();
            let k = T::count(count);
            let stats: Vec<(Complex<T>, T)> = times
                .par_iter()
                .map(|&t| {
                    let samples: Vec<Complex<T>> = picks.iter().map(|&(a, w)| a * phase(w, t)).collect();
                    let mean = samples
                        .iter()
                        .fold(Complex::new(T::zero(), T::zero()), |a, &s| a + s)
                        / k;
                    let var = samples.iter().map(|s| (s - mean).norm_sqr()).total() / (k - T::one());
                    (mean, (var / k).sqrt())
                })
                .collect();
            Ok(TimeSeries {
                times: times.to_vec(),
                values: stats.iter().map(|s| s.0).collect(),
                std_error: Some(stats.iter().map(|s| s.1).collect()),
            })
        }
        Sampling::MonteCarlo { .. } => Ok(TimeSeries {
            times: times.to_vec(),
            values: full(&table.rows),
            std_error: Some(vec![T::zero(); times.len()]),
        }),
        Sampling::Full => Ok(TimeSeries {
            times: times.to_vec(),
            values: full(&table.rows),
            std_error: None,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(b: f64, a: &[f64], occ: &[usize]) -> CentralSpinParams<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CentralSpinParams::new(
            b,
            a.to_vec(),
            Complex::new(h, 0.0),
            Complex::new(h, 0.0),
            BasisOccupation::new(occ.to_vec(), a.len()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn mapping() {
        let (m, eta) = map_to_gaudin(&params(2.0, &[1.0, 0.5], &[])).unwrap();
        assert_eq!(m.coupling(), -0.5);
        assert_eq!(m.epsilons(), &[0.0, -1.0, -2.0]);
        assert_eq!(eta, vec![0.5, 0.0, 0.0]);
        let p = params(2.0, &[1.0, 1.0], &[]);
        assert_eq!(map_to_gaudin(&p), Err(Error::DegenerateCouplings(0, 1)));
    }

    #[test]
    fn rejects_bad_parameters() {
        let occ = BasisOccupation::empty();
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        assert_eq!(
            CentralSpinParams::new(0.0, vec![1.0], one, zero, occ.clone()),
            Err(Error::ZeroField)
        );
        assert!(CentralSpinParams::new(1.0, vec![0.0], one, zero, occ.clone()).is_err());
        assert!(CentralSpinParams::new(1.0, vec![1.0], one, one, occ).is_err());
    }

    #[test]
    fn grid() {
        assert_eq!(time_grid(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(time_grid(2.0, 5.0, 1).unwrap(), vec![2.0]);
        assert!(time_grid(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn sampling() {
        let p = params(1.1, &[1.0, 0.6, 0.35, 0.2], &[0, 2]);
        let table = solve_spectral_table(&p, &ContinuationConfig::default()).unwrap();
        assert!((table.total() - Complex::new(0.5, 0.0)).norm() < 1e-8);
        let times = time_grid(0.0, 5.0, 21).unwrap();
        let full = coherence_factor(&table, &times, Sampling::Full).unwrap();
        assert!(full.max_modulus() <= 0.5 + 1e-8);

        let all = Sampling::MonteCarlo {
            count: table.rows.len(),
            seed: 9,
        };
        let exhaustive = coherence_factor(&table, &times, all).unwrap();
        for (a, b) in exhaustive.values.iter().zip(&full.values) {
            assert!((a - b).norm() < 1e-12);
        }

        let mc = Sampling::MonteCarlo {
            count: 20_000,
            seed: 3,
        };
        let est = coherence_factor(&table, &times, mc).unwrap();
        let again = coherence_factor(&table, &times, mc).unwrap();
        assert_eq!(est, again);
        let err = est.std_error.as_ref().unwrap();
        let outside = est
            .values
            .iter()
            .zip(&full.values)
            .zip(err)
            .filter(|((a, b), s)| (*a - *b).norm() > 3.0 * std::f64::consts::SQRT_2 * **s + 1e-12)
            .count();
        assert!(outside <= 1, "{outside} points beyond 3 standard errors");
    }

    #[test]
    fn empty_table() {
        let t = SpectralTable::<f64> {
            rows: vec![],
            completeness_lower: 1.0,
            completeness_upper: 1.0,
        };
        assert_eq!(
            coherence_factor(&t, &[0.0], Sampling::Full),
            Err(Error::EmptyTable)
        );
    }
}
