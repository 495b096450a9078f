//! Determinant representations of domain-wall partition functions, scalar
//! products, norms and local spin form factors.
//!
//! Scalar products pair a bra built on the up-spin vacuum with a ket built
//! on the down-spin vacuum:
//! `⟨μ'|λ⟩ = ⟨↑…↑| Π B(μ'_i) Π B(λ_j) |↓…↓⟩`, with
//! `B(u) = Σ_i S⁺_i/(u − ε_i)`. No rapidity set has to solve the Bethe
//! equations; only the `Λ` values enter.

use num_complex::Complex;
use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::lambda::{Axis, LambdaState};
use crate::linalg::DenseMatrix;
use crate::model::{BasisOccupation, GaudinModel};
use crate::rapidity::{extract_rapidities, RapiditySet};
use crate::scalar::{Field, Real, Total};

pub use crate::linalg::det;

/// Amplitude with the magnetization selection rule made explicit: when the
/// two states cannot connect, `value` is exactly zero and `sector_mismatch`
/// is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude<F> {
    pub value: F,
    pub sector_mismatch: bool,
}

impl<F: Field> Amplitude<F> {
    fn of(value: F) -> Self {
        Self {
            value,
            sector_mismatch: false,
        }
    }

    fn mismatch() -> Self {
        Self {
            value: F::zero(),
            sector_mismatch: true,
        }
    }
}

/// `Λ` values on every level together with the number of rapidities
/// behind them.
#[derive(Debug, Clone, Copy)]
pub struct LambdaValues<'a, F> {
    pub count: usize,
    pub values: &'a [F],
}

impl<'a, T: Real> From<&'a LambdaState<T>> for LambdaValues<'a, T> {
    fn from(s: &'a LambdaState<T>) -> Self {
        Self {
            count: s.rapidity_count(),
            values: &s.values,
        }
    }
}

fn check_len<F>(n: usize, v: &[F]) -> Result<()> {
    if v.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: v.len(),
        });
    }
    Ok(())
}

/// Matrix with off-diagonals `1/(ε_a − ε_b)` over `levels` and diagonal
/// `Σ_{c≠a} 1/(ε_a − ε_c) − diag_shift[a]`.
fn cauchy_like<F: Field>(levels: &[F::Real], diag_shift: &[F]) -> DenseMatrix<F> {
    DenseMatrix::from_fn(levels.len(), |a, b| {
        if a == b {
            let s: F::Real = (0..levels.len())
                .filter(|&c| c != a)
                .map(|c| (levels[a] - levels[c]).recip())
                .total();
            F::from_real(s) - diag_shift[a]
        } else {
            F::from_real((levels[a] - levels[b]).recip())
        }
    })
}

/// `det` of [`cauchy_like`] with the diagonal shift `Σ_p parts[p][a] + constant`,
/// formed and factored in the widened scalar type. The determinants cancel
/// strongly near orthogonality and at strong coupling.
fn cauchy_det<F: Field>(levels: &[F::Real], parts: &[&[F]], constant: F::Real) -> Result<F> {
    let wide_levels: Vec<<F::Wide as Field>::Real> = levels.iter().map(|&x| x.widen()).collect();
    let base = F::Wide::from_real(constant.widen());
    let shift: Vec<F::Wide> = (0..levels.len())
        .map(|a| parts.iter().fold(base, |acc, p| acc + p[a].widen()))
        .collect();
    Ok(F::narrow(det(&cauchy_like(&wide_levels, &shift))?))
}

/// Product of row norms, an upper bound on |det|.
fn hadamard_bound<F: Field>(m: &DenseMatrix<F>) -> F::Real {
    (0..m.dim())
        .map(|a| {
            (0..m.dim())
                .map(|b| {
                    let x = m[(a, b)].modulus();
                    x * x
                })
                .total()
                .sqrt()
        })
        .fold(F::Real::one(), |acc, x| acc * x)
}

/// `⟨ε_{i_1}…ε_{i_M}|λ_1…λ_M⟩` from the `Λ` values at the occupied levels.
pub fn partition_overlap_det<F: Field>(
    model: &GaudinModel<F::Real>,
    occ: &BasisOccupation,
    lam_at_occ: &[F],
) -> Result<F> {
    check_len(occ.len(), lam_at_occ)?;
    if occ.sites().last().is_some_and(|&s| s >= model.num_spins()) {
        return Err(Error::InvalidOccupation("site out of range".into()));
    }
    let e = model.epsilons();
    let levels: Vec<F::Real> = occ.sites().iter().map(|&s| e[s]).collect();
    cauchy_det(&levels, &[lam_at_occ], F::Real::zero())
}

/// Largest `M` accepted by the permutation expansion.
pub const MAX_PERMUTATION_SIZE: usize = 9;

/// `Σ_P Π_i 1/(λ_i − ε_{P_i})` over all assignments of rapidities to the
/// occupied levels.
pub fn partition_overlap_perm<T: Real>(
    model: &GaudinModel<T>,
    occ: &BasisOccupation,
    rap: &RapiditySet<T>,
) -> Result<Complex<T>> {
    let m = occ.len();
    check_len(m, &rap.values)?;
    if m > MAX_PERMUTATION_SIZE {
        return Err(Error::TooLarge {
            size: m,
            limit: MAX_PERMUTATION_SIZE,
        });
    }
    let e = model.epsilons();
    let levels: Vec<T> = occ.sites().iter().map(|&s| e[s]).collect();
    // table[i][p] = 1/(λ_i − ε_p)
    let table: Vec<Vec<Complex<T>>> = rap
        .values
        .iter()
        .map(|&l| levels.iter().map(|&ep| (l - ep).inv()).collect())
        .collect();

    fn recurse<T: Real>(
        table: &[Vec<Complex<T>>],
        row: usize,
        used: &mut [bool],
        acc: Complex<T>,
    ) -> Complex<T> {
        if row == table.len() {
            return acc;
        }
        let mut total = Complex::zero();
        for p in 0..used.len() {
            if !used[p] {
                used[p] = true;
                total += recurse(table, row + 1, used, acc * table[row][p]);
                used[p] = false;
            }
        }
        total
    }
    let mut used = vec![false; m];
    Ok(recurse(&table, 0, &mut used, Complex::new(T::one(), T::zero())))
}

/// Izergin form: `Π_{j,k}(λ_j − ε_k) / [Π_{i>j}(λ_i − λ_j) Π_{j<k}(ε_j − ε_k)]`
/// times `Det[1/(ε_b − λ_a)²]`, over the occupied levels.
pub fn izergin_overlap<T: Real>(
    model: &GaudinModel<T>,
    occ: &BasisOccupation,
    rap: &RapiditySet<T>,
) -> Result<Complex<T>> {
    let m = occ.len();
    check_len(m, &rap.values)?;
    let e = model.epsilons();
    let levels: Vec<T> = occ.sites().iter().map(|&s| e[s]).collect();
    let lam = &rap.values;
    let tol = T::lit(1e-10) * model.span();
    for i in 0..m {
        for j in i + 1..m {
            if (lam[i] - lam[j]).norm() <= tol {
                return Err(Error::CoincidingRapidities(i, j));
            }
        }
    }
    let levels: Vec<T::Wider> = levels.iter().map(|&x| x.widen()).collect();
    let lam: Vec<Complex<T::Wider>> = lam.iter().map(|&x| x.widen()).collect();
    izergin_wide(&levels, &lam).map(Complex::narrow)
}

fn izergin_wide<W: Real>(levels: &[W], lam: &[Complex<W>]) -> Result<Complex<W>> {
    let m = levels.len();
    let mut num = Complex::new(W::one(), W::zero());
    for &l in lam {
        for &ek in levels {
            num *= l - ek;
        }
    }
    let mut den = Complex::new(W::one(), W::zero());
    for i in 0..m {
        for j in 0..i {
            den *= lam[i] - lam[j];
        }
    }
    for j in 0..m {
        for k in j + 1..m {
            den *= levels[j] - levels[k];
        }
    }
    let k = DenseMatrix::from_fn(m, |a, b| {
        let d = (lam[a] - levels[b]).inv();
        d * d
    });
    Ok(num / den * det(&k)?)
}

/// The same overlap with the roles of levels and rapidities exchanged:
/// diagonal `−Σ_{c≠a} 1/(λ_a − λ_c) + Σ_c 1/(λ_a − ε_{i_c})`, off-diagonal
/// `−1/(λ_a − λ_b)`.
pub fn partition_overlap_rapidity_form<T: Real>(
    model: &GaudinModel<T>,
    occ: &BasisOccupation,
    rap: &RapiditySet<T>,
) -> Result<Complex<T>> {
    let m = occ.len();
    check_len(m, &rap.values)?;
    let e = model.epsilons();
    let levels: Vec<T> = occ.sites().iter().map(|&s| e[s]).collect();
    let levels: Vec<T::Wider> = levels.iter().map(|&x| x.widen()).collect();
    let lam: Vec<Complex<T::Wider>> = rap.values.iter().map(|&x| x.widen()).collect();
    let j = DenseMatrix::from_fn(m, |a, b| {
        if a == b {
            let pairs = (0..m)
                .filter(|&c| c != a)
                .fold(Complex::zero(), |acc, c| acc - (lam[a] - lam[c]).inv());
            levels.iter().fold(pairs, |acc, &ec| acc + (lam[a] - ec).inv())
        } else {
            -(lam[a] - lam[b]).inv()
        }
    });
    det(&j).map(Complex::narrow)
}

/// `⟨μ'|λ⟩ = Det K` with `K_aa = Σ_{c≠a} 1/(ε_a − ε_c) − Λ^λ(ε_a) − Λ^{μ'}(ε_a)`.
/// Returns a flagged zero unless the two rapidity counts add up to `N`.
pub fn scalar_product_det<F: Field>(
    model: &GaudinModel<F::Real>,
    bra_mu: LambdaValues<'_, F>,
    ket_lambda: LambdaValues<'_, F>,
) -> Result<Amplitude<F>> {
    let n = model.num_spins();
    check_len(n, bra_mu.values)?;
    check_len(n, ket_lambda.values)?;
    if bra_mu.count + ket_lambda.count != n {
        return Ok(Amplitude::mismatch());
    }
    Ok(Amplitude::of(cauchy_det(
        model.epsilons(),
        &[bra_mu.values, ket_lambda.values],
        F::Real::zero(),
    )?))
}

fn expect_axis<T>(s: &LambdaState<T>, axis: Axis, what: &'static str) -> Result<()> {
    if s.axis != axis {
        return Err(Error::AxisMismatch(what));
    }
    Ok(())
}

/// [`scalar_product_det`] for a μ-axis bra and a λ-axis ket.
pub fn scalar_product<T: Real>(
    model: &GaudinModel<T>,
    bra_mu: &LambdaState<T>,
    ket_lambda: &LambdaState<T>,
) -> Result<Amplitude<T>> {
    expect_axis(bra_mu, Axis::Mu, "bra must be on the up-spin vacuum")?;
    expect_axis(ket_lambda, Axis::Lambda, "ket must be on the down-spin vacuum")?;
    scalar_product_det(model, bra_mu.into(), ket_lambda.into())
}

/// Scalar product for an eigenstate bra given on the down-spin vacuum: its
/// up-vacuum form is substituted, adding `2/g` on the diagonal.
pub fn scalar_product_eigen<T: Real>(
    model: &GaudinModel<T>,
    bra_eigen: &LambdaState<T>,
    ket_lambda: &LambdaState<T>,
) -> Result<Amplitude<T>> {
    expect_axis(
        bra_eigen,
        Axis::Lambda,
        "eigenstate bra must be given on the down-spin vacuum",
    )?;
    expect_axis(ket_lambda, Axis::Lambda, "ket must be on the down-spin vacuum")?;
    let n = model.num_spins();
    check_len(n, &bra_eigen.values)?;
    check_len(n, &ket_lambda.values)?;
    if bra_eigen.sector_m != ket_lambda.sector_m {
        return Ok(Amplitude::mismatch());
    }
    let field = T::lit(2.0) / model.coupling();
    Ok(Amplitude::of(cauchy_det(
        model.epsilons(),
        &[&bra_eigen.values, &ket_lambda.values],
        -field,
    )?))
}

/// `N_μ N_λ = Det G` for the two representations of one eigenstate.
pub fn norm_product<T: Real>(model: &GaudinModel<T>, lam: &LambdaState<T>, mu: &LambdaState<T>) -> Result<T> {
    expect_axis(
        lam,
        Axis::Lambda,
        "first argument must be on the down-spin vacuum",
    )?;
    expect_axis(mu, Axis::Mu, "second argument must be on the up-spin vacuum")?;
    if lam.sector_m != mu.sector_m {
        return Err(Error::AxisMismatch("representations of different sectors"));
    }
    Ok(scalar_product(model, mu, lam)?.value)
}

fn check_site(model_n: usize, site: usize) -> Result<()> {
    if site >= model_n {
        return Err(Error::SiteOutOfRange { site, n: model_n });
    }
    Ok(())
}

/// `⟨μ'|S⁺_i|λ⟩` as the `(N−1)`-determinant with level `i` removed:
/// diagonal `Σ_{c≠a,i} 1/(ε_a − ε_c) − Λ^{μ'}(ε_a) − Λ^λ(ε_a)`.
/// The bra carries `N − M − 1` rapidities when the ket carries `M`.
pub fn splus_form_factor<F: Field>(
    model: &GaudinModel<F::Real>,
    site: usize,
    bra_mu: LambdaValues<'_, F>,
    ket_lambda: LambdaValues<'_, F>,
) -> Result<Amplitude<F>> {
    let n = model.num_spins();
    check_site(n, site)?;
    check_len(n, bra_mu.values)?;
    check_len(n, ket_lambda.values)?;
    if bra_mu.count + ket_lambda.count + 1 != n {
        return Ok(Amplitude::mismatch());
    }
    let e = model.epsilons();
    let keep: Vec<usize> = (0..n).filter(|&a| a != site).collect();
    let levels: Vec<F::Real> = keep.iter().map(|&a| e[a]).collect();
    let bra: Vec<F> = keep.iter().map(|&a| bra_mu.values[a]).collect();
    let ket: Vec<F> = keep.iter().map(|&a| ket_lambda.values[a]).collect();
    Ok(Amplitude::of(cauchy_det(
        &levels,
        &[&bra, &ket],
        F::Real::zero(),
    )?))
}

/// `⟨λ|S⁻_i|μ'⟩ = conj ⟨μ'|S⁺_i|λ⟩`: bra on the down-spin vacuum with `M`
/// rapidities, ket on the up-spin vacuum with `N − M − 1`.
pub fn sminus_form_factor<F: Field>(
    model: &GaudinModel<F::Real>,
    site: usize,
    bra_lambda: LambdaValues<'_, F>,
    ket_mu: LambdaValues<'_, F>,
) -> Result<Amplitude<F>> {
    let a = splus_form_factor(model, site, ket_mu, bra_lambda)?;
    Ok(Amplitude {
        value: a.value.conj(),
        sector_mismatch: a.sector_mismatch,
    })
}

/// Sign of the coefficient in the `S^z` sum: each term carries
/// `SZ_COEFFICIENT_SIGN / (λ_j − ε_i)`.
///
/// Fixed by the one-spin case `⟨↑|S^z B(λ)|↓⟩ = ½/(λ − ε)` and checked
/// against exact diagonalization in `verify`.
pub const SZ_COEFFICIENT_SIGN: f64 = 1.0;

/// `⟨μ'|S^z_i|λ⟩ = −½⟨μ'|λ⟩ + Σ_j c_j ⟨μ'|S⁺_i|λ∖λ_j⟩` with
/// `c_j = sign/(λ_j − ε_i)`; `sign` is exposed for validation only.
pub fn sz_form_factor_signed<F: Field>(
    model: &GaudinModel<F::Real>,
    site: usize,
    bra_mu: LambdaValues<'_, F>,
    ket_lambda: LambdaValues<'_, F>,
    ket_rapidities: Option<&RapiditySet<F::Real>>,
    sign: F::Real,
) -> Result<Amplitude<Complex<F::Real>>> {
    let n = model.num_spins();
    check_site(n, site)?;
    check_len(n, bra_mu.values)?;
    check_len(n, ket_lambda.values)?;
    if bra_mu.count + ket_lambda.count != n {
        return Ok(Amplitude::mismatch());
    }
    let bra: Vec<Complex<F::Real>> = bra_mu.values.iter().map(|v| v.to_complex()).collect();
    let ket: Vec<Complex<F::Real>> = ket_lambda.values.iter().map(|v| v.to_complex()).collect();
    let half = Complex::new(F::Real::lit(0.5), F::Real::zero());
    let overlap = scalar_product_det(
        model,
        LambdaValues {
            count: bra_mu.count,
            values: &bra,
        },
        LambdaValues {
            count: ket_lambda.count,
            values: &ket,
        },
    )?
    .value;
    let mut total = -(half * overlap);
    if ket_lambda.count == 0 {
        return Ok(Amplitude::of(total));
    }
    let rap = ket_rapidities.ok_or(Error::RapiditiesRequired)?;
    if rap.len() != ket_lambda.count {
        return Err(Error::LengthMismatch {
            expected: ket_lambda.count,
            got: rap.len(),
        });
    }
    let e = model.epsilons();
    let mut reduced = vec![Complex::zero(); n];
    for &lj in &rap.values {
        for a in 0..n {
            reduced[a] = ket[a] - (Complex::new(e[a], F::Real::zero()) - lj).inv();
        }
        let coeff = (lj - e[site]).inv() * sign;
        let ff = splus_form_factor(
            model,
            site,
            LambdaValues {
                count: bra_mu.count,
                values: &bra,
            },
            LambdaValues {
                count: ket_lambda.count - 1,
                values: &reduced,
            },
        )?
        .value;
        total += coeff * ff;
    }
    Ok(Amplitude::of(total))
}

/// `⟨μ'|S^z_i|λ⟩`; needs the ket rapidities whenever the ket has any.
pub fn sz_form_factor<F: Field>(
    model: &GaudinModel<F::Real>,
    site: usize,
    bra_mu: LambdaValues<'_, F>,
    ket_lambda: LambdaValues<'_, F>,
    ket_rapidities: Option<&RapiditySet<F::Real>>,
) -> Result<Amplitude<Complex<F::Real>>> {
    sz_form_factor_signed(
        model,
        site,
        bra_mu,
        ket_lambda,
        ket_rapidities,
        F::Real::lit(SZ_COEFFICIENT_SIGN),
    )
}

/// Local spin operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinOp {
    Plus,
    Minus,
    Z,
}

impl std::str::FromStr for SpinOp {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sp" | "plus" | "S+" => Ok(SpinOp::Plus),
            "sm" | "minus" | "S-" => Ok(SpinOp::Minus),
            "sz" | "z" | "Sz" => Ok(SpinOp::Z),
            other => Err(format!("unknown operator {other:?}; expected sz, sp or sm")),
        }
    }
}

impl std::fmt::Display for SpinOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpinOp::Plus => "sp",
            SpinOp::Minus => "sm",
            SpinOp::Z => "sz",
        })
    }
}

/// Relative size below which the normalizing overlap counts as zero.
pub const ZERO_OVERLAP: f64 = 1e-12;

/// `⟨O⟩ = ⟨μ|O|λ⟩ / ⟨μ|λ⟩` for a state given in both representations.
/// `S^±` expectations vanish by the magnetization selection rule.
pub fn normalized_expectation<T: Real>(
    model: &GaudinModel<T>,
    op: SpinOp,
    site: usize,
    lam: &LambdaState<T>,
    mu: &LambdaState<T>,
) -> Result<T> {
    expect_axis(lam, Axis::Lambda, "first state must be on the down-spin vacuum")?;
    expect_axis(mu, Axis::Mu, "second state must be on the up-spin vacuum")?;
    let n = model.num_spins();
    check_site(n, site)?;
    check_len(n, &lam.values)?;
    check_len(n, &mu.values)?;
    let shift: Vec<T> = (0..n).map(|a| mu.values[a] + lam.values[a]).collect();
    let k = cauchy_like(model.epsilons(), &shift);
    let den = if lam.rapidity_count() + mu.rapidity_count() == n {
        cauchy_det(model.epsilons(), &[&mu.values, &lam.values], T::zero())?
    } else {
        T::zero()
    };
    let scale = hadamard_bound(&k).max(T::min_positive_value());
    if !(den.abs() > T::lit(ZERO_OVERLAP) * scale) {
        return Err(Error::ZeroOverlap(den.as_f64()));
    }
    match op {
        SpinOp::Plus => Ok(splus_form_factor(model, site, mu.into(), lam.into())?.value / den),
        SpinOp::Minus => Ok(sminus_form_factor(model, site, lam.into(), mu.into())?.value / den),
        SpinOp::Z => {
            let rap = if lam.sector_m > 0 {
                Some(extract_rapidities(model, lam)?)
            } else {
                None
            };
            let num = sz_form_factor(model, site, mu.into(), lam.into(), rap.as_ref())?.value;
            Ok(num.re / den)
        }
    }
}

/// Coefficient of `O|λ_k⟩` on the eigenvector `|λ_b⟩`:
/// `⟨μ_b|O|λ_k⟩ / ⟨μ_b|λ_b⟩`. On the diagonal this is the expectation value.
/// For `S⁻` the expansion is carried out in the up-vacuum basis instead,
/// `⟨λ_b|S⁻_i|μ_k⟩ / ⟨λ_b|μ_b⟩`.
pub fn eigenbasis_coefficient<T: Real>(
    model: &GaudinModel<T>,
    op: SpinOp,
    site: usize,
    bra: &LambdaState<T>,
    ket: &LambdaState<T>,
    ket_rapidities: Option<&RapiditySet<T>>,
) -> Result<Amplitude<T>> {
    expect_axis(bra, Axis::Lambda, "bra must be given on the down-spin vacuum")?;
    expect_axis(ket, Axis::Lambda, "ket must be given on the down-spin vacuum")?;
    let bra_mu = crate::lambda::transform_axis(model, bra)?;
    let norm = norm_product(model, bra, &bra_mu)?;
    let num = match op {
        SpinOp::Plus => splus_form_factor(model, site, (&bra_mu).into(), ket.into())?,
        SpinOp::Minus => {
            let ket_mu = crate::lambda::transform_axis(model, ket)?;
            sminus_form_factor(model, site, bra.into(), (&ket_mu).into())?
        }
        SpinOp::Z => {
            let owned;
            let rap = match ket_rapidities {
                Some(r) => Some(r),
                None if ket.sector_m > 0 => {
                    owned = extract_rapidities(model, ket)?;
                    Some(&owned)
                }
                None => None,
            };
            let a = sz_form_factor(model, site, (&bra_mu).into(), ket.into(), rap)?;
            Amplitude {
                value: a.value.re,
                sector_mismatch: a.sector_mismatch,
            }
        }
    };
    if num.sector_mismatch {
        return Ok(num);
    }
    if norm == T::zero() {
        return Err(Error::ZeroOverlap(0.0));
    }
    Ok(Amplitude::of(num.value / norm))
}

/// Shorthand used by callers holding only values.
pub fn lambda_values<T>(count: usize, values: &[T]) -> LambdaValues<'_, T> {
    LambdaValues { count, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rapidity::lambda_values_complex;
    use num_complex::Complex64;

    fn model(e: &[f64], g: f64) -> GaudinModel<f64> {
        GaudinModel::new(e.to_vec(), g).unwrap()
    }

    #[test]
    fn single_rapidity_projection() {
        let m = model(&[0.2, 1.0], 0.5);
        let occ = BasisOccupation::new(vec![1], 2).unwrap();
        let lam = Complex64::new(0.3, 0.4);
        let rap = RapiditySet::new(vec![lam], Axis::Lambda);
        let at_occ = vec![(1.0 - lam).inv()];
        let d = partition_overlap_det(&m, &occ, &at_occ).unwrap();
        let expect = (lam - 1.0).inv();
        assert!((d - expect).norm() < 1e-15);
        assert!((partition_overlap_perm(&m, &occ, &rap).unwrap() - expect).norm() < 1e-15);
        assert!((izergin_overlap(&m, &occ, &rap).unwrap() - expect).norm() < 1e-15);
        let empty: Vec<f64> = vec![];
        assert_eq!(
            partition_overlap_det(&m, &BasisOccupation::empty(), &empty).unwrap(),
            1.0
        );
    }

    #[test]
    fn two_term_permutation_sum() {
        let m = model(&[0.0, 1.0], 0.5);
        let occ = BasisOccupation::new(vec![0, 1], 2).unwrap();
        let l1 = Complex64::new(2.0, 0.0);
        let l2 = Complex64::new(0.0, 3.0);
        let rap = RapiditySet::new(vec![l1, l2], Axis::Lambda);
        let hand = 1.0 / (l1 - 0.0) / (l2 - 1.0) + 1.0 / (l1 - 1.0) / (l2 - 0.0);
        let perm = partition_overlap_perm(&m, &occ, &rap).unwrap();
        assert!((perm - hand).norm() < 1e-15);
        let swapped = RapiditySet::new(vec![l2, l1], Axis::Lambda);
        assert!((partition_overlap_perm(&m, &occ, &swapped).unwrap() - hand).norm() < 1e-15);
        let lam = lambda_values_complex(&m, &rap);
        let d = partition_overlap_det(&m, &occ, &lam).unwrap();
        assert!((d - hand).norm() < 1e-14);
    }

    #[test]
    fn izergin_degenerates_where_det_form_does_not() {
        let m = model(&[0.0, 1.0, 2.0], 0.5);
        let occ = BasisOccupation::new(vec![0, 2], 3).unwrap();
        let l = Complex64::new(0.6, 0.2);
        let rap = RapiditySet::new(vec![l, l], Axis::Lambda);
        assert_eq!(
            izergin_overlap(&m, &occ, &rap),
            Err(Error::CoincidingRapidities(0, 1))
        );
        let lam = lambda_values_complex(&m, &rap);
        let at: Vec<Complex64> = occ.sites().iter().map(|&s| lam[s]).collect();
        let d = partition_overlap_det(&m, &occ, &at).unwrap();
        assert!(d.re.is_finite() && d.im.is_finite());
        // merged limit equals the permutation sum with equal rapidities
        let perm = partition_overlap_perm(&m, &occ, &rap).unwrap();
        assert!((d - perm).norm() < 1e-12 * perm.norm());
    }

    #[test]
    fn permutation_size_limit() {
        let e: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let m = model(&e, 1.0);
        let occ = BasisOccupation::new((0..10).collect(), 10).unwrap();
        let rap = RapiditySet::from_real(&[0.5; 10], Axis::Lambda);
        assert!(matches!(
            partition_overlap_perm(&m, &occ, &rap),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn one_spin_scalar_products() {
        let g = 0.4;
        let m = model(&[0.3], g);
        let up_mu = LambdaState::new(vec![0.0], Axis::Mu, 1, g);
        let up_lam = LambdaState::new(vec![2.0 / g], Axis::Lambda, 1, g);
        let sp = scalar_product(&m, &up_mu, &up_lam).unwrap();
        assert!(!sp.sector_mismatch);
        assert!((sp.value + 2.0 / g).abs() < 1e-14);
        assert!((norm_product(&m, &up_lam, &up_mu).unwrap() + 2.0 / g).abs() < 1e-14);
        let eig = scalar_product_eigen(&m, &up_lam, &up_lam).unwrap();
        assert!((eig.value - sp.value).abs() < 1e-14);

        let down_lam = LambdaState::new(vec![0.0], Axis::Lambda, 0, g);
        let down_mu = LambdaState::new(vec![-2.0 / g], Axis::Mu, 0, g);
        assert!((norm_product(&m, &down_lam, &down_mu).unwrap() - 2.0 / g).abs() < 1e-14);

        let mismatch = scalar_product(&m, &up_mu, &down_lam).unwrap();
        assert!(mismatch.sector_mismatch);
        assert_eq!(mismatch.value, 0.0);
        assert!(matches!(
            norm_product(&m, &up_mu, &up_lam),
            Err(Error::AxisMismatch(_))
        ));
    }

    #[test]
    fn one_spin_form_factors() {
        let g = 0.4;
        let m = model(&[0.3], g);
        let bra = [0.0];
        let ket = [0.0];
        let sp = splus_form_factor(&m, 0, lambda_values(0, &bra), lambda_values(0, &ket)).unwrap();
        assert_eq!(sp.value, 1.0);
        assert!(!sp.sector_mismatch);
        let same = splus_form_factor(&m, 0, lambda_values(1, &bra), lambda_values(0, &ket)).unwrap();
        assert!(same.sector_mismatch);
        assert!(matches!(
            splus_form_factor(&m, 1, lambda_values(0, &bra), lambda_values(0, &ket)),
            Err(Error::SiteOutOfRange { .. })
        ));

        // ⟨↑|S^z B(λ)|↓⟩ = ½/(λ − ε) for an arbitrary rapidity
        let lam = Complex64::new(-0.45, 0.0);
        let rap = RapiditySet::new(vec![lam], Axis::Lambda);
        let lv = [(0.3 - lam.re).recip()];
        let sz = sz_form_factor(&m, 0, lambda_values(0, &bra), lambda_values(1, &lv), Some(&rap)).unwrap();
        assert!((sz.value - 0.5 / (lam - 0.3)).norm() < 1e-14);
        assert_eq!(
            sz_form_factor(&m, 0, lambda_values(0, &bra), lambda_values(1, &lv), None),
            Err(Error::RapiditiesRequired)
        );
        // vacuum ket: only the overlap term
        let mu_full = [-2.0 / g];
        let vac = sz_form_factor(&m, 0, lambda_values(1, &mu_full), lambda_values(0, &ket), None).unwrap();
        assert!((vac.value.re + 0.5 * 2.0 / g).abs() < 1e-14);
    }

    #[test]
    fn vacuum_expectations() {
        let g = 0.9;
        let m = model(&[0.0, 0.4, 1.1], g);
        let vac = LambdaState::new(vec![0.0; 3], Axis::Lambda, 0, g);
        let vac_mu = crate::lambda::transform_axis(&m, &vac).unwrap();
        let full_mu = LambdaState::new(vec![0.0; 3], Axis::Mu, 3, g);
        let full = crate::lambda::transform_axis(&m, &full_mu).unwrap();
        for i in 0..3 {
            let z = normalized_expectation(&m, SpinOp::Z, i, &vac, &vac_mu).unwrap();
            assert!((z + 0.5).abs() < 1e-14);
            let z = normalized_expectation(&m, SpinOp::Z, i, &full, &full_mu).unwrap();
            assert!((z - 0.5).abs() < 1e-12);
            assert_eq!(
                normalized_expectation(&m, SpinOp::Plus, i, &vac, &vac_mu).unwrap(),
                0.0
            );
        }
    }
}
