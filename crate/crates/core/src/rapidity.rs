//! Explicit rapidities: conversion to and from `Λ(ε_i)`, Bethe-equation
//! residuals and transfer-matrix eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lambda::{sharpen, Axis, LambdaState};
use crate::linalg::{self, DenseMatrix};
use crate::model::GaudinModel;
use crate::scalar::{Field, Real, Total};

/// Rapidities of one Bethe state on a given vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct RapiditySet<T> {
    pub values: Vec<Complex<T>>,
    pub axis: Axis,
}

impl<T: Real> RapiditySet<T> {
    pub fn new(values: Vec<Complex<T>>, axis: Axis) -> Self {
        Self { values, axis }
    }

    pub fn from_real(values: &[T], axis: Axis) -> Self {
        Self {
            values: values.iter().map(|&v| Complex::new(v, T::zero())).collect(),
            axis,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest distance between a rapidity and the nearest conjugate of
    /// another (or itself); zero for conjugation-closed sets.
    pub fn conjugation_defect(&self) -> T {
        let mut used = vec![false; self.values.len()];
        let mut worst = T::zero();
        for i in 0..self.values.len() {
            if used[i] {
                continue;
            }
            let target = self.values[i].conj();
            let (best, d) = (0..self.values.len())
                .filter(|&j| !used[j])
                .map(|j| (j, (self.values[j] - target).norm()))
                .fold((i, T::infinity()), |acc, x| if x.1 < acc.1 { x } else { acc });
            used[i] = true;
            used[best] = true;
            worst = worst.max(d);
        }
        worst
    }

    /// The set with rapidity `j` removed.
    pub fn without(&self, j: usize) -> Self {
        let mut values = self.values.clone();
        values.remove(j);
        Self {
            values,
            axis: self.axis,
        }
    }
}

/// `Λ(ε_i) = Σ_j 1/(ε_i − λ_j)` in complex arithmetic, for arbitrary rapidities.
pub fn lambda_values_complex<T: Real>(model: &GaudinModel<T>, rap: &RapiditySet<T>) -> Vec<Complex<T>> {
    model
        .epsilons()
        .iter()
        .map(|&e| {
            rap.values
                .iter()
                .map(|&l| (Complex::new(e, T::zero()) - l).inv())
                .fold(Complex::zero(), |a, b| a + b)
        })
        .collect()
}

fn check_off_levels<T: Real>(model: &GaudinModel<T>, rap: &RapiditySet<T>) -> Result<()> {
    let tol = T::lit(1e-12) * model.span();
    for (j, l) in rap.values.iter().enumerate() {
        for (k, &e) in model.epsilons().iter().enumerate() {
            if (*l - e).norm() <= tol {
                return Err(Error::RapidityOnLevel { index: j, level: k });
            }
        }
    }
    Ok(())
}

/// Imaginary residue tolerated when reducing `Λ` to real values.
pub const IMAG_TOLERANCE: f64 = 1e-8;

/// Real `Λ` state from a (conjugation-closed) rapidity set.
pub fn lambda_from_rapidities<T: Real>(
    model: &GaudinModel<T>,
    rap: &RapiditySet<T>,
) -> Result<LambdaState<T>> {
    check_off_levels(model, rap)?;
    let n = model.num_spins();
    if rap.len() > n {
        return Err(Error::TooLarge {
            size: rap.len(),
            limit: n,
        });
    }
    let complex = lambda_values_complex(model, rap);
    let mut values = Vec::with_capacity(n);
    for (level, c) in complex.iter().enumerate() {
        if c.im.abs() > T::lit(IMAG_TOLERANCE) * T::one().max(c.re.abs()) {
            return Err(Error::NonRealLambda {
                level,
                imag: c.im.as_f64(),
            });
        }
        values.push(c.re);
    }
    let sector_m = match rap.axis {
        Axis::Lambda => rap.len(),
        Axis::Mu => n - rap.len(),
    };
    Ok(LambdaState::new(values, rap.axis, sector_m, model.coupling()))
}

/// Lowest-weight function `F(u) = Σ_k ½/(u − ε_k) ± 1/g` and its derivative.
fn lowest_weight<T: Real>(model: &GaudinModel<T>, axis: Axis, u: Complex<T>) -> (Complex<T>, Complex<T>) {
    let half = T::lit(0.5);
    let mut f = Complex::new(axis.field_sign::<T>() / model.coupling(), T::zero());
    let mut df = Complex::zero();
    for &e in model.epsilons() {
        let inv = (u - e).inv();
        f += inv * half;
        df -= inv * inv * half;
    }
    (f, df)
}

fn check_distinct<T: Real>(model: &GaudinModel<T>, rap: &RapiditySet<T>) -> Result<()> {
    let tol = T::lit(1e-10) * model.span();
    for i in 0..rap.len() {
        for j in i + 1..rap.len() {
            if (rap.values[i] - rap.values[j]).norm() <= tol {
                return Err(Error::CoincidingRapidities(i, j));
            }
        }
    }
    Ok(())
}

/// `F(λ_i) − Σ_{j≠i} 1/(λ_i − λ_j)` for every rapidity.
pub fn bethe_residuals<T: Real>(model: &GaudinModel<T>, rap: &RapiditySet<T>) -> Result<Vec<Complex<T>>> {
    check_distinct(model, rap)?;
    Ok(bethe_residuals_unchecked(model, &rap.values, rap.axis))
}

fn bethe_residuals_unchecked<T: Real>(
    model: &GaudinModel<T>,
    values: &[Complex<T>],
    axis: Axis,
) -> Vec<Complex<T>> {
    (0..values.len())
        .map(|i| {
            let (f, _) = lowest_weight(model, axis, values[i]);
            let pair = (0..values.len())
                .filter(|&j| j != i)
                .map(|j| (values[i] - values[j]).inv())
                .fold(Complex::zero(), |a, b| a + b);
            f - pair
        })
        .collect()
}

fn complex_inf_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |a, x| a.max(x.norm()))
}

/// Bethe residuals are compared against the size of the field term.
fn residual_scale<T: Real>(model: &GaudinModel<T>, values: &[Complex<T>]) -> T {
    let mut s = model.coupling().recip().abs();
    for &l in values {
        for &e in model.epsilons() {
            s = s.max((l - e).norm().recip());
        }
    }
    s
}

/// Relative polish residual above which a root is reported as diverged.
pub const POLISH_TOLERANCE: f64 = 1e-8;

/// Relative least-squares residual above which reconstruction is rejected.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-6;

/// Recovers explicit rapidities from a solved `Λ` state.
///
/// The rapidities are the roots of the monic `P(u) = Π_j (u − λ_j)`, whose
/// non-leading coefficients follow from the linear conditions
/// `P'(ε_i) = Λ(ε_i) P(ε_i)` solved in least squares on the levels mapped
/// to `[−1, 1]`. Roots come from the companion matrix and are then polished
/// jointly by Newton on the Bethe equations.
///
/// When the least-squares fit is ill-conditioned in `T`, the state is
/// re-converged and the fit redone in the wider type.
pub fn extract_rapidities<T: Real>(model: &GaudinModel<T>, lam: &LambdaState<T>) -> Result<RapiditySet<T>> {
    match extract_in(model, lam) {
        Err(Error::IllConditioned { .. }) if T::epsilon() > T::lit(1e-20) => {
            let wide = model.widened();
            let rap = extract_in(&wide, &sharpen(&wide, lam)?)?;
            let start = rap.values.iter().map(|&z| Complex::narrow(z)).collect();
            Ok(RapiditySet::new(polish(model, start, lam.axis)?, lam.axis))
        }
        other => other,
    }
}

fn extract_in<T: Real>(model: &GaudinModel<T>, lam: &LambdaState<T>) -> Result<RapiditySet<T>> {
    let n = model.num_spins();
    if lam.values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: lam.values.len(),
        });
    }
    let g = model.coupling();
    let sum: T = lam.values.iter().copied().total();
    let raw = match lam.axis {
        Axis::Lambda => g * sum / T::lit(2.0),
        Axis::Mu => -g * sum / T::lit(2.0),
    };
    let count_f = raw.round();
    if (raw - count_f).abs() > T::lit(1e-6) || count_f < T::zero() || count_f > T::count(n) {
        return Err(Error::SectorInconsistent(raw.as_f64()));
    }
    let k = count_f.to_usize().expect("integral count");
    if k == 0 {
        return Ok(RapiditySet::new(Vec::new(), lam.axis));
    }

    let e = model.epsilons();
    let lo = e.iter().copied().fold(T::infinity(), T::min);
    let hi = e.iter().copied().fold(T::neg_infinity(), T::max);
    let center = (lo + hi) / T::lit(2.0);
    let half = model.span() / T::lit(2.0);

    // rows: Σ_p a_p (p t^{p-1} − w t^p) = −(k t^{k-1} − w t^k)
    let mut rows = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for i in 0..n {
        let t = (e[i] - center) / half;
        let w = half * lam.values[i];
        let scale = (T::one() + w.abs() + T::count(k)).recip();
        let mut pow = vec![T::one(); k + 1];
        for p in 1..=k {
            pow[p] = pow[p - 1] * t;
        }
        let row: Vec<T> = (0..k)
            .map(|p| {
                let deriv = if p == 0 {
                    T::zero()
                } else {
                    T::count(p) * pow[p - 1]
                };
                (deriv - w * pow[p]) * scale
            })
            .collect();
        rows.push(row);
        rhs.push(-(T::count(k) * pow[k - 1] - w * pow[k]) * scale);
    }
    let (coeffs, resid) = linalg::least_squares(&rows, &rhs)?;
    let rhs_norm = rhs.iter().map(|&v| v * v).total().sqrt().max(T::one());
    if resid / rhs_norm > T::lit(RECONSTRUCTION_TOLERANCE) || !coeffs.iter().all(|c| c.is_finite()) {
        return Err(Error::IllConditioned {
            residual: (resid / rhs_norm).as_f64(),
        });
    }

    let roots = companion_roots(&coeffs);
    let values: Vec<Complex<T>> = roots
        .into_iter()
        .map(|r| Complex::new(center + half * T::lit(r.re), half * T::lit(r.im)))
        .collect();
    let polished = polish(model, values, lam.axis)?;
    Ok(RapiditySet::new(polished, lam.axis))
}

/// Roots of the monic polynomial `t^k + Σ_{p<k} a_p t^p` as eigenvalues of
/// its companion matrix. Evaluated in `f64`.
fn companion_roots<T: Real>(coeffs: &[T]) -> Vec<Complex<f64>> {
    let k = coeffs.len();
    if k == 1 {
        return vec![Complex::new(-coeffs[0].as_f64(), 0.0)];
    }
    let mut c = DMatrix::<f64>::zeros(k, k);
    for i in 1..k {
        c[(i, i - 1)] = 1.0;
    }
    for p in 0..k {
        c[(p, k - 1)] = -coeffs[p].as_f64();
    }
    c.complex_eigenvalues()
        .iter()
        .map(|z| Complex::new(z.re, z.im))
        .collect()
}

/// Joint Newton on the Bethe equations.
fn polish<T: Real>(model: &GaudinModel<T>, start: Vec<Complex<T>>, axis: Axis) -> Result<Vec<Complex<T>>> {
    let m = start.len();
    let mut x = start;
    let mut res = bethe_residuals_unchecked(model, &x, axis);
    let mut best = complex_inf_norm(&res) / residual_scale(model, &x);
    for _ in 0..30 {
        if !(best > T::epsilon()) {
            break;
        }
        let jac = DenseMatrix::from_fn(m, |i, j| {
            if i == j {
                let (_, df) = lowest_weight(model, axis, x[i]);
                (0..m)
                    .filter(|&l| l != i)
                    .map(|l| {
                        let d = (x[i] - x[l]).inv();
                        d * d
                    })
                    .fold(df, |a, b| a + b)
            } else {
                let d = (x[i] - x[j]).inv();
                -(d * d)
            }
        });
        let rhs: Vec<Complex<T>> = res.iter().map(|&r| -r).collect();
        let Ok(Some(step)) = linalg::solve(&jac, &rhs) else {
            break;
        };
        let trial: Vec<Complex<T>> = x.iter().zip(&step).map(|(a, b)| *a + *b).collect();
        let trial_res = bethe_residuals_unchecked(model, &trial, axis);
        let rel = complex_inf_norm(&trial_res) / residual_scale(model, &trial);
        if !(rel < best) {
            break;
        }
        x = trial;
        res = trial_res;
        best = rel;
    }
    if !(best <= T::lit(POLISH_TOLERANCE)) {
        let scale = residual_scale(model, &x);
        let index = res
            .iter()
            .enumerate()
            .fold(
                (0, T::zero()),
                |acc, (i, r)| if r.norm() > acc.1 { (i, r.norm()) } else { acc },
            )
            .0;
        return Err(Error::PolishDiverged {
            index,
            residual: (res[index].norm() / scale).as_f64(),
        });
    }
    Ok(x)
}

/// Eigenvalue of the transfer matrix `S²(u)` on a Bethe state:
/// `τ(u) = F² − F' − 2 Σ_i F/(u − λ_i) + Σ_i 1/(u − λ_i) Σ_{j≠i} 1/(u − λ_j)`.
pub fn tau_eigenvalue<T: Real>(
    model: &GaudinModel<T>,
    rap: &RapiditySet<T>,
    u: Complex<T>,
) -> Result<Complex<T>> {
    let tol = T::lit(1e-12) * model.span();
    let near = |p: Complex<T>| (u - p).norm() <= tol;
    if model.epsilons().iter().any(|&e| near(Complex::new(e, T::zero())))
        || rap.values.iter().any(|&l| near(l))
    {
        return Err(Error::PoleEvaluation);
    }
    let (f, df) = lowest_weight(model, rap.axis, u);
    let inv: Vec<Complex<T>> = rap.values.iter().map(|&l| (u - l).inv()).collect();
    let s1 = inv.iter().fold(Complex::zero(), |a, &b| a + b);
    let s2 = inv.iter().fold(Complex::zero(), |a, &b| a + b * b);
    // Σ_i Σ_{j≠i} a_i a_j = (Σ a)² − Σ a²
    let two = Complex::new(T::lit(2.0), T::zero());
    Ok(f * f - df - two * f * s1 + (s1 * s1 - s2) * Complex::<T>::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{quadratic_residual, solve_sector, ContinuationConfig};
    use crate::model::{charge_eigenvalues, BasisOccupation};
    use num_complex::Complex64;

    #[test]
    fn empty_and_single() {
        let m = GaudinModel::<f64>::new(vec![0.0], 0.5).unwrap();
        let vac = lambda_from_rapidities(&m, &RapiditySet::new(vec![], Axis::Lambda)).unwrap();
        assert_eq!(vac.values, vec![0.0]);
        let one = RapiditySet::from_real(&[-0.25], Axis::Lambda);
        let s = lambda_from_rapidities(&m, &one).unwrap();
        assert!((s.values[0] - 4.0).abs() < 1e-15);
        assert_eq!(s.sector_m, 1);
        let r = bethe_residuals(&m, &one).unwrap();
        assert!(r[0].norm() < 1e-15);
        assert!(bethe_residuals(&m, &RapiditySet::new(vec![], Axis::Lambda))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn conjugate_pair_gives_real_lambda() {
        let m = GaudinModel::<f64>::new(vec![0.0, 0.6, 1.3], 0.5).unwrap();
        let z = Complex64::new(0.4, 0.7);
        let rap = RapiditySet::new(vec![z, z.conj()], Axis::Lambda);
        let s = lambda_from_rapidities(&m, &rap).unwrap();
        for (i, &e) in m.epsilons().iter().enumerate() {
            let direct = (1.0 / (e - z) + 1.0 / (e - z.conj())).re;
            assert!((s.values[i] - direct).abs() < 1e-14);
        }
        let lonely = RapiditySet::new(vec![z], Axis::Lambda);
        assert!(matches!(
            lambda_from_rapidities(&m, &lonely),
            Err(Error::NonRealLambda { .. })
        ));
        let on = RapiditySet::from_real(&[0.6], Axis::Lambda);
        assert!(matches!(
            lambda_from_rapidities(&m, &on),
            Err(Error::RapidityOnLevel { .. })
        ));
    }

    #[test]
    fn coinciding_rapidities_rejected() {
        let m = GaudinModel::<f64>::new(vec![0.0, 1.0], 0.5).unwrap();
        let rap = RapiditySet::from_real(&[0.3, 0.3], Axis::Lambda);
        assert_eq!(bethe_residuals(&m, &rap), Err(Error::CoincidingRapidities(0, 1)));
    }

    #[test]
    fn extract_single_spin() {
        let g = 0.5;
        let m = GaudinModel::<f64>::new(vec![0.2], g).unwrap();
        let s = LambdaState::new(vec![2.0 / g], Axis::Lambda, 1, g);
        let rap = extract_rapidities(&m, &s).unwrap();
        assert_eq!(rap.len(), 1);
        assert!((rap.values[0] - Complex64::new(0.2 - g / 2.0, 0.0)).norm() < 1e-12);
        let vac = LambdaState::new(vec![0.0], Axis::Lambda, 0, g);
        assert!(extract_rapidities(&m, &vac).unwrap().is_empty());
    }

    #[test]
    fn extract_round_trip_six_levels() {
        let m = GaudinModel::<f64>::new(vec![0.0, 0.31, 0.72, 1.05, 1.6, 2.1], 0.9).unwrap();
        let cfg = ContinuationConfig::default();
        for occ in BasisOccupation::all_in_sector(6, 3) {
            let s = solve_sector(&m, &occ, &cfg).unwrap();
            let rap = extract_rapidities(&m, &s).unwrap();
            let r = bethe_residuals(&m, &rap).unwrap();
            assert!(complex_inf_norm(&r) < 1e-8, "{:?}", r);
            assert!(rap.conjugation_defect() < 1e-8);
            let back = lambda_from_rapidities(&m, &rap).unwrap();
            for (a, b) in back.values.iter().zip(&s.values) {
                assert!((a - b).abs() < 1e-7);
            }
            assert!(crate::lambda::inf_norm(&quadratic_residual(&m, &back)) < 1e-6);
        }
    }

    #[test]
    fn tau_vacuum_and_residue() {
        let m = GaudinModel::<f64>::new(vec![0.0, 0.5, 1.4], 0.8).unwrap();
        let vac = RapiditySet::<f64>::new(vec![], Axis::Lambda);
        let u = Complex64::new(7.0, 0.3);
        let t = tau_eigenvalue(&m, &vac, u).unwrap();
        let (f, df) = lowest_weight(&m, Axis::Lambda, u);
        assert!((t - (f * f - df)).norm() < 1e-14);
        assert_eq!(
            tau_eigenvalue(&m, &vac, Complex64::new(0.5, 0.0)),
            Err(Error::PoleEvaluation)
        );

        // contour residue at each level equals r_i
        let occ = BasisOccupation::new(vec![1], 3).unwrap();
        let s = solve_sector(&m, &occ, &ContinuationConfig::default()).unwrap();
        let rap = extract_rapidities(&m, &s).unwrap();
        let r = charge_eigenvalues(&m, &s).unwrap();
        for (i, &e) in m.epsilons().iter().enumerate() {
            let radius = 1e-3;
            let k = 64;
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..k {
                let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * q as f64 / k as f64);
                let u = e + phase * radius;
                // (1/2πi)∮ τ du with du = i (u − e) dθ
                acc += tau_eigenvalue(&m, &rap, u).unwrap() * (u - e);
            }
            let residue = acc / k as f64;
            assert!(
                (residue.re - r.r[i]).abs() < 1e-8 * r.r[i].abs().max(1.0),
                "{residue} vs {}",
                r.r[i]
            );
        }
    }
}
