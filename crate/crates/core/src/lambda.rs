//! The quadratic system satisfied by `Λ(ε_i) = Σ_j 1/(ε_i − λ_j)` and its
//! solution by continuation in the coupling `g`.
//!
//! Eigenstates in the sector with `M` up spins are labelled by the product
//! state they connect to as `g → 0`: with the down-spin vacuum, each up spin
//! `k` carries a rapidity `λ_k ≈ ε_k − g/2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::model::{BasisOccupation, GaudinModel};
use crate::scalar::{Real, Total};

/// Which pseudo-vacuum a representation is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// All spins down; `M` creation operators.
    Lambda,
    /// All spins up; `N − M` creation operators.
    Mu,
}

impl Axis {
    pub fn opposite(self) -> Self {
        match self {
            Axis::Lambda => Axis::Mu,
            Axis::Mu => Axis::Lambda,
        }
    }

    /// +1 for the down vacuum, −1 for the up vacuum: the sign of the field
    /// term `1/g` in the lowest-weight function.
    pub fn field_sign<T: Real>(self) -> T {
        match self {
            Axis::Lambda => T::one(),
            Axis::Mu => -T::one(),
        }
    }
}

/// Values `Λ(ε_i)` on every level for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaState<T> {
    pub values: Vec<T>,
    pub axis: Axis,
    /// Number of up spins `M`, whatever the axis.
    pub sector_m: usize,
    /// Coupling the state was solved at.
    pub g: T,
}

impl<T: Real> LambdaState<T> {
    pub fn new(values: Vec<T>, axis: Axis, sector_m: usize, g: T) -> Self {
        Self {
            values,
            axis,
            sector_m,
            g,
        }
    }

    pub fn num_spins(&self) -> usize {
        self.values.len()
    }

    /// Number of rapidities behind this representation: `M` on the
    /// down-vacuum axis, `N − M` on the up-vacuum axis.
    pub fn rapidity_count(&self) -> usize {
        match self.axis {
            Axis::Lambda => self.sector_m,
            Axis::Mu => self.num_spins() - self.sector_m,
        }
    }

    /// Deviation from the sum rule `Σ Λ^λ = 2M/g` (resp. `Σ Λ^μ = −2(N−M)/g`).
    pub fn sum_rule_error(&self) -> T {
        let s: T = self.values.iter().copied().total();
        let expect = T::lit(2.0) * T::count(self.rapidity_count()) / self.g;
        match self.axis {
            Axis::Lambda => (s - expect).abs(),
            Axis::Mu => (s + expect).abs(),
        }
    }
}

/// Parameters of the coupling continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationConfig<T> {
    /// |g| of the first rung; `None` picks `10⁻³ ×` the smallest level spacing.
    pub g_start: Option<T>,
    pub step_factor: T,
    pub newton_tol: T,
    pub max_newton_iters: usize,
    pub max_backtracks: usize,
}

impl<T: Real> Default for ContinuationConfig<T> {
    fn default() -> Self {
        Self {
            g_start: None,
            step_factor: T::lit(1.5),
            newton_tol: T::lit(1e-12),
            max_newton_iters: 50,
            max_backtracks: 30,
        }
    }
}

impl<T: Real> ContinuationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_factor > T::one() && self.step_factor <= T::lit(2.0)) {
            return Err(Error::InvalidConfig("step_factor must lie in (1, 2]".into()));
        }
        if !(self.newton_tol >= T::lit(1e-14) && self.newton_tol <= T::lit(1e-6)) {
            return Err(Error::InvalidConfig(
                "newton_tol must lie in [1e-14, 1e-6]".into(),
            ));
        }
        if let Some(g0) = self.g_start {
            if !(g0 > T::zero() && g0.is_finite()) {
                return Err(Error::InvalidConfig("g_start must be positive".into()));
            }
        }
        if self.max_newton_iters == 0 {
            return Err(Error::InvalidConfig("max_newton_iters must be positive".into()));
        }
        Ok(())
    }

    fn start_for(&self, model: &GaudinModel<T>) -> T {
        self.g_start.unwrap_or_else(|| T::lit(1e-3) * model.min_spacing())
    }
}

/// Residual of the quadratic system,
/// `Λ_j² − Σ_{i≠j} (Λ_j − Λ_i)/(ε_j − ε_i) ∓ (2/g) Λ_j`
/// (− on the down-vacuum axis), evaluated at coupling `g`.
pub fn quadratic_residual_at<T: Real>(model: &GaudinModel<T>, values: &[T], axis: Axis, g: T) -> Vec<T> {
    let e = model.epsilons();
    let field = axis.field_sign::<T>() * T::lit(2.0) / g;
    (0..e.len())
        .map(|j| {
            let mut s = values[j] * values[j] - field * values[j];
            for i in 0..e.len() {
                if i != j {
                    s -= (values[j] - values[i]) / (e[j] - e[i]);
                }
            }
            s
        })
        .collect()
}

pub fn quadratic_residual<T: Real>(model: &GaudinModel<T>, lam: &LambdaState<T>) -> Vec<T> {
    quadratic_residual_at(model, &lam.values, lam.axis, model.coupling())
}

pub fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, x| a.max(x.abs()))
}

/// Analytic Jacobian of [`quadratic_residual_at`] with respect to `Λ`.
pub fn quadratic_jacobian<T: Real>(model: &GaudinModel<T>, values: &[T], axis: Axis, g: T) -> DenseMatrix<T> {
    let e = model.epsilons();
    let field = axis.field_sign::<T>() * T::lit(2.0) / g;
    DenseMatrix::from_fn(e.len(), |j, k| {
        if j == k {
            T::lit(2.0) * values[j] - model.level_sum(j) - field
        } else {
            (e[j] - e[k]).recip()
        }
    })
}

/// Weak-coupling starting point on the down-vacuum axis.
pub fn seed_state<T: Real>(model: &GaudinModel<T>, occ: &BasisOccupation, g_small: T) -> LambdaState<T> {
    let e = model.epsilons();
    let values = (0..e.len())
        .map(|j| {
            let pairs: T = occ
                .sites()
                .iter()
                .filter(|&&k| k != j)
                .map(|&k| (e[j] - e[k]).recip())
                .total();
            if occ.contains(j) {
                T::lit(2.0) / g_small + pairs
            } else {
                pairs
            }
        })
        .collect();
    LambdaState::new(values, Axis::Lambda, occ.len(), g_small)
}

/// Multiple of the unit roundoff, relative to the magnitude of the terms
/// summed in each equation, at which a residual counts as exact.
const ROUNDOFF_RESIDUAL: f64 = 64.0;

/// True when every equation balances to round-off in its own terms. Newton
/// cannot improve such an iterate, however ill-conditioned the Jacobian.
fn balanced<T: Real>(model: &GaudinModel<T>, values: &[T], f: &[T], axis: Axis, g: T) -> bool {
    let e = model.epsilons();
    let field = (axis.field_sign::<T>() * T::lit(2.0) / g).abs();
    let tol = T::lit(ROUNDOFF_RESIDUAL) * T::epsilon();
    (0..e.len()).all(|j| {
        let mut terms = values[j] * values[j] + field * values[j].abs();
        for i in 0..e.len() {
            if i != j {
                terms += ((values[j] - values[i]) / (e[j] - e[i])).abs();
            }
        }
        f[j].abs() <= tol * terms
    })
}

/// Outcome of a Newton solve.
struct NewtonOutcome<T> {
    values: Vec<T>,
    iterations: usize,
}

fn newton<T: Real>(
    model: &GaudinModel<T>,
    start: &[T],
    axis: Axis,
    g: T,
    cfg: &ContinuationConfig<T>,
) -> Option<NewtonOutcome<T>> {
    let mut x = start.to_vec();
    for it in 1..=cfg.max_newton_iters {
        let f = quadratic_residual_at(model, &x, axis, g);
        if balanced(model, &x, &f, axis, g) {
            return Some(NewtonOutcome {
                values: x,
                iterations: it,
            });
        }
        let jac = quadratic_jacobian(model, &x, axis, g);
        let rhs: Vec<T> = f.iter().map(|&v| -v).collect();
        let step = linalg::solve(&jac, &rhs).ok()??;
        let size = inf_norm(&step);
        let scale = T::one().max(inf_norm(&x));
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi += *si;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        if size <= cfg.newton_tol * scale {
            return Some(NewtonOutcome {
                values: x,
                iterations: it,
            });
        }
    }
    None
}

/// Runs Newton from `seed` at the seed's coupling; returns the converged
/// state and the iteration count.
pub fn refine<T: Real>(
    model: &GaudinModel<T>,
    seed: &LambdaState<T>,
    cfg: &ContinuationConfig<T>,
) -> Result<(LambdaState<T>, usize)> {
    let out = newton(model, &seed.values, seed.axis, seed.g, cfg).ok_or(Error::NoConvergence {
        g_reached: seed.g.as_f64(),
        g_target: seed.g.as_f64(),
    })?;
    Ok((
        LambdaState::new(out.values, seed.axis, seed.sector_m, seed.g),
        out.iterations,
    ))
}

/// Re-converges `state` by Newton in the wider scalar type of `wide`, which
/// must be the widened model the state was solved on.
pub fn sharpen<T: Real>(
    wide: &GaudinModel<T::Wider>,
    state: &LambdaState<T>,
) -> Result<LambdaState<T::Wider>> {
    let seed = LambdaState::new(
        state.values.iter().map(|&v| v.widen()).collect(),
        state.axis,
        state.sector_m,
        state.g.widen(),
    );
    let cfg = ContinuationConfig {
        newton_tol: <T::Wider as Real>::lit(EXTENDED_TOL),
        ..ContinuationConfig::default()
    };
    let (out, _) = refine(wide, &seed, &cfg)?;
    let drift = sector_drift(out.g * out.axis.field_sign(), &out.values, out.rapidity_count());
    if drift > <T::Wider as Real>::lit(POLISH_DRIFT) {
        return Err(Error::SectorInconsistent(drift.as_f64()));
    }
    Ok(out)
}

/// Tangent predictor in the scaled variables `x = gΛ/2`, which stay O(1)
/// at weak coupling.
fn predict<T: Real>(model: &GaudinModel<T>, values: &[T], g: T, g_next: T) -> Option<Vec<T>> {
    let e = model.epsilons();
    let n = e.len();
    let two = T::lit(2.0);
    let half_g = g / two;
    let x: Vec<T> = values.iter().map(|&v| half_g * v).collect();
    // F(x, g) = x² − x − (g/2) Σ_{i≠j} (x_j − x_i)/(ε_j − ε_i)
    let dfdg: Vec<T> = (0..n)
        .map(|j| {
            let s: T = (0..n)
                .filter(|&i| i != j)
                .map(|i| (x[j] - x[i]) / (e[j] - e[i]))
                .total();
            -s / two
        })
        .collect();
    let jac = DenseMatrix::from_fn(n, |j, k| {
        if j == k {
            two * x[j] - T::one() - half_g * model.level_sum(j)
        } else {
            half_g / (e[j] - e[k])
        }
    });
    let rhs: Vec<T> = dfdg.iter().map(|&v| -v).collect();
    let dx = linalg::solve(&jac, &rhs).ok()??;
    let dg = g_next - g;
    Some(
        x.iter()
            .zip(&dx)
            .map(|(&xi, &di)| two * (xi + di * dg) / g_next)
            .collect(),
    )
}

/// Relative coupling step below which the continuation gives up.
const MIN_STEP: f64 = 1e-8;

/// Largest drift of `gΣΛ/2` from the excitation count accepted on a step.
const SECTOR_DRIFT: f64 = 1e-6;

/// Newton tolerance used when a continuation is rerun in double-double.
const EXTENDED_TOL: f64 = 1e-24;

/// Drift of `gΣΛ/2` from `M` above which an `f64` solution is polished in
/// double-double.
const POLISH_DRIFT: f64 = 1e-11;

fn sector_drift<T: Real>(g: T, values: &[T], m: usize) -> T {
    (g * values.iter().copied().total() / T::lit(2.0) - T::count(m)).abs()
}

/// Solves the down-vacuum quadratic system at the model's coupling for the
/// eigenstate connected to the product state `occ` at weak coupling.
///
/// Near the strong-coupling limit the Jacobian of descendant states becomes
/// nearly singular and Newton stalls at round-off. A solution that drifts
/// off its sector is polished with Newton in double-double arithmetic; if
/// that fails too, or the continuation fails in `T`, the continuation is
/// rerun in double-double. The result is rounded back to `T`.
pub fn solve_sector<T: Real>(
    model: &GaudinModel<T>,
    occ: &BasisOccupation,
    cfg: &ContinuationConfig<T>,
) -> Result<LambdaState<T>> {
    cfg.validate()?;
    if occ.sites().last().is_some_and(|&s| s >= model.num_spins()) {
        return Err(Error::InvalidOccupation("site out of range".into()));
    }
    let target = model.coupling();
    let values = match continuation(model, occ, cfg) {
        Ok(v)
            if T::epsilon() < T::lit(1e-20)
                || sector_drift(target, &v, occ.len()) <= T::lit(POLISH_DRIFT) =>
        {
            v
        }
        first => {
            let wide = |x: T| Dd::new(x.as_f64());
            let eps: Vec<Dd> = model.epsilons().iter().map(|&x| wide(x)).collect();
            let dd_model = GaudinModel::new(eps, wide(target))?;
            let dd_cfg = ContinuationConfig {
                g_start: cfg.g_start.map(wide),
                step_factor: wide(cfg.step_factor),
                newton_tol: Dd::new(EXTENDED_TOL),
                max_newton_iters: cfg.max_newton_iters,
                max_backtracks: cfg.max_backtracks,
            };
            let in_sector =
                |v: &Vec<Dd>| sector_drift(dd_model.coupling(), v, occ.len()) <= Dd::new(POLISH_DRIFT);
            let polished = first.as_ref().ok().and_then(|v| {
                let start: Vec<Dd> = v.iter().map(|&x| wide(x)).collect();
                newton(&dd_model, &start, Axis::Lambda, dd_model.coupling(), &dd_cfg)
                    .map(|out| out.values)
                    .filter(in_sector)
            });
            let wide_values = match polished {
                Some(v) => v,
                None => continuation(&dd_model, occ, &dd_cfg)
                    .ok()
                    .filter(in_sector)
                    .ok_or_else(|| {
                        first.err().unwrap_or(Error::NoConvergence {
                            g_reached: target.as_f64(),
                            g_target: target.as_f64(),
                        })
                    })?,
            };
            wide_values.into_iter().map(|v| T::lit(v.as_f64())).collect()
        }
    };
    Ok(LambdaState::new(
        values,
        Axis::Lambda,
        occ.len(),
        model.coupling(),
    ))
}

fn continuation<T: Real>(
    model: &GaudinModel<T>,
    occ: &BasisOccupation,
    cfg: &ContinuationConfig<T>,
) -> Result<Vec<T>> {
    let target = model.coupling();
    let sign = target.signum();
    let mut g = sign * cfg.start_for(model);
    if g.abs() > target.abs() {
        g = target;
    }
    let fail = |g: T| Error::NoConvergence {
        g_reached: g.as_f64(),
        g_target: target.as_f64(),
    };

    let seed = seed_state(model, occ, g);
    let mut values = newton(model, &seed.values, Axis::Lambda, g, cfg)
        .ok_or_else(|| fail(g))?
        .values;

    let mut factor = cfg.step_factor;
    while g != target {
        let mut accepted = false;
        for _ in 0..=cfg.max_backtracks {
            let mut g_next = g * factor;
            if g_next.abs() >= target.abs() {
                g_next = target;
            }
            let attempt = predict(model, &values, g, g_next).and_then(|guess| {
                let out = newton(model, &guess, Axis::Lambda, g_next, cfg)?;
                // reject branch jumps: the corrector must stay close to the
                // predictor in the scaled variables, relative both to the
                // solution and to the predicted move, and the sector must hold
                let half = g_next.abs() / T::lit(2.0);
                let scaled_dist = |a: &[T], b: &[T], h: T| {
                    a.iter()
                        .zip(b)
                        .fold(T::zero(), |m, (p, q)| m.max((*p * h - *q * half).abs()))
                };
                let shift = scaled_dist(&out.values, &guess, half);
                let moved = scaled_dist(&values, &guess, g.abs() / T::lit(2.0));
                let size = T::one().max(inf_norm(&out.values) * half);
                let count = g_next * out.values.iter().copied().total() / T::lit(2.0);
                let in_sector = (count - T::count(occ.len())).abs() <= T::lit(SECTOR_DRIFT);
                (in_sector
                    && shift <= T::lit(0.1) * size
                    && shift <= T::lit(0.5) * moved + T::lit(1e-9) * size)
                    .then_some(out)
            });
            match attempt {
                Some(out) => {
                    values = out.values;
                    g = g_next;
                    accepted = true;
                    break;
                }
                None => {
                    factor = T::one() + (factor - T::one()) / T::lit(2.0);
                    if factor - T::one() < T::lit(MIN_STEP) {
                        break;
                    }
                }
            }
        }
        if !accepted {
            return Err(fail(g));
        }
        factor = cfg.step_factor.min(T::one() + (factor - T::one()) * T::lit(2.0));
    }
    Ok(values)
}

/// All eigenstates of one magnetization sector.
#[derive(Debug, Clone)]
pub struct SectorSolutions<T> {
    pub m: usize,
    pub occupations: Vec<BasisOccupation>,
    pub states: Vec<LambdaState<T>>,
    /// Pairs of state indices closer than [`DUPLICATE_DISTANCE`].
    pub collisions: Vec<(usize, usize)>,
}

/// ∞-norm distance below which two solutions count as the same.
pub const DUPLICATE_DISTANCE: f64 = 1e-6;

/// Solves every occupation of sector `m` in parallel.
pub fn solve_all_in_sector<T: Real>(
    model: &GaudinModel<T>,
    m: usize,
    cfg: &ContinuationConfig<T>,
) -> Result<SectorSolutions<T>> {
    let n = model.num_spins();
    if m > n {
        return Err(Error::InvalidOccupation(format!("sector {m} exceeds {n} levels")));
    }
    let occupations = BasisOccupation::all_in_sector(n, m);
    let states = occupations
        .par_iter()
        .map(|occ| solve_sector(model, occ, cfg))
        .collect::<Result<Vec<_>>>()?;
    let collisions = find_collisions(&states, T::lit(DUPLICATE_DISTANCE));
    Ok(SectorSolutions {
        m,
        occupations,
        states,
        collisions,
    })
}

pub fn find_collisions<T: Real>(states: &[LambdaState<T>], dist: T) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..states.len() {
        for b in a + 1..states.len() {
            let d = states[a]
                .values
                .iter()
                .zip(&states[b].values)
                .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).abs()));
            if d <= dist {
                out.push((a, b));
            }
        }
    }
    out
}

/// Relative residual accepted when checking that a state is an eigenstate.
pub const EIGENSTATE_CHECK: f64 = 1e-8;

/// Residual normalized by the size of the terms it balances.
pub fn relative_residual<T: Real>(model: &GaudinModel<T>, lam: &LambdaState<T>) -> T {
    let res = inf_norm(&quadratic_residual(model, lam));
    let big = inf_norm(&lam.values);
    let scale = T::one()
        .max(big * big)
        .max(big * (T::lit(2.0) / model.coupling()).abs())
        .max(big / model.min_spacing());
    res / scale
}

/// Switches between the two vacuum representations of an eigenstate:
/// `Λ^μ = Λ^λ − 2/g`.
pub fn transform_axis<T: Real>(model: &GaudinModel<T>, lam: &LambdaState<T>) -> Result<LambdaState<T>> {
    if lam.values.len() != model.num_spins() {
        return Err(Error::LengthMismatch {
            expected: model.num_spins(),
            got: lam.values.len(),
        });
    }
    let rel = relative_residual(model, lam);
    if !(rel <= T::lit(EIGENSTATE_CHECK)) {
        return Err(Error::NotAnEigenstate {
            residual: inf_norm(&quadratic_residual(model, lam)).as_f64(),
        });
    }
    let shift = T::lit(2.0) / model.coupling();
    let (values, axis) = match lam.axis {
        Axis::Lambda => (lam.values.iter().map(|&v| v - shift).collect(), Axis::Mu),
        Axis::Mu => (lam.values.iter().map(|&v| v + shift).collect(), Axis::Lambda),
    };
    Ok(LambdaState::new(values, axis, lam.sector_m, lam.g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(e: &[f64], g: f64) -> GaudinModel<f64> {
        GaudinModel::new(e.to_vec(), g).unwrap()
    }

    #[test]
    fn vacuum_and_single_spin_residuals() {
        let m = model(&[0.0, 0.4, 1.3], 0.7);
        let vac = LambdaState::new(vec![0.0; 3], Axis::Lambda, 0, 0.7);
        assert_eq!(inf_norm(&quadratic_residual(&m, &vac)), 0.0);

        let one = model(&[0.2], 0.35);
        let up = LambdaState::new(vec![2.0 / 0.35], Axis::Lambda, 1, 0.35);
        assert!(inf_norm(&quadratic_residual(&one, &up)) < 1e-12);
    }

    /// N = 2 closed form. With d = ε_1 − ε_0, the sector M = 1 has
    /// Λ_0 + Λ_1 = 2/g and Λ_0 − Λ_1 = ±sqrt(4/g² + 4/(g d) ... ) obtained
    /// by eliminating Λ_1; see the quadratic below.
    #[test]
    fn two_level_closed_form() {
        let (e0, e1, g) = (0.0, 1.0, 0.25);
        let m = model(&[e0, e1], g);
        let d = e0 - e1;
        // Λ_1 = 2/g − Λ_0 into equation 0:
        // Λ_0² − (2Λ_0 − 2/g)/d − (2/g)Λ_0 = 0
        let (a, b, c) = (1.0, -2.0 / d - 2.0 / g, 2.0 / (g * d));
        let disc = (b * b - 4.0 * a * c).sqrt();
        let mut closed: Vec<f64> = vec![(-b + disc) / 2.0, (-b - disc) / 2.0];
        closed.sort_by(|x, y| x.partial_cmp(y).unwrap());

        let cfg = ContinuationConfig::default();
        let mut solved: Vec<f64> = BasisOccupation::all_in_sector(2, 1)
            .iter()
            .map(|occ| {
                let s = solve_sector(&m, occ, &cfg).unwrap();
                assert!(inf_norm(&quadratic_residual(&m, &s)) < 1e-12);
                s.values[0]
            })
            .collect();
        solved.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (s, c) in solved.iter().zip(&closed) {
            assert!((s - c).abs() < 1e-12, "{s} vs {c}");
        }
    }

    #[test]
    fn one_spin_any_coupling() {
        for g in [0.01, 0.5, 30.0, -2.0] {
            let m = model(&[0.3], g);
            let occ = BasisOccupation::new(vec![0], 1).unwrap();
            let s = solve_sector(&m, &occ, &ContinuationConfig::default()).unwrap();
            assert!((s.values[0] - 2.0 / g).abs() < 1e-12 * (2.0 / g).abs());
        }
    }

    #[test]
    fn seed_shapes() {
        let m = model(&[0.0, 1.0, 2.5], 1.0);
        let empty = seed_state(&m, &BasisOccupation::empty(), 1e-3);
        assert!(empty.values.iter().all(|&v| v == 0.0));
        let one = model(&[0.0], 1.0);
        let s = seed_state(&one, &BasisOccupation::new(vec![0], 1).unwrap(), 1e-3);
        assert!((s.values[0] - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn seed_converges_quickly() {
        let m = model(&[0.0, 1.0, 2.5], 1.0);
        let g_small = 1e-3 * m.min_spacing();
        let occ = BasisOccupation::new(vec![0, 2], 3).unwrap();
        let seed = seed_state(&m, &occ, g_small);
        let (_, iters) = refine(&m, &seed, &ContinuationConfig::default()).unwrap();
        assert!(iters <= 5, "took {iters}");
    }

    #[test]
    fn transform_vacua() {
        let g = 0.8;
        let one = model(&[0.0], g);
        let up = LambdaState::new(vec![2.0 / g], Axis::Lambda, 1, g);
        let mu = transform_axis(&one, &up).unwrap();
        assert_eq!(mu.axis, Axis::Mu);
        assert!(mu.values[0].abs() < 1e-15);

        let m = model(&[0.0, 0.5, 1.7, 2.0], g);
        let vac = LambdaState::new(vec![0.0; 4], Axis::Lambda, 0, g);
        let mu = transform_axis(&m, &vac).unwrap();
        assert!(mu.values.iter().all(|&v| (v + 2.0 / g).abs() < 1e-15));
        assert!(inf_norm(&quadratic_residual(&m, &mu)) < 1e-12);
        let back = transform_axis(&m, &mu).unwrap();
        assert_eq!(back.axis, Axis::Lambda);
    }

    #[test]
    fn transform_rejects_non_eigenstates() {
        let m = model(&[0.0, 0.5, 1.7], 0.8);
        let junk = LambdaState::new(vec![1.0, 2.0, 3.0], Axis::Lambda, 1, 0.8);
        assert!(matches!(
            transform_axis(&m, &junk),
            Err(Error::NotAnEigenstate { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ContinuationConfig::<f64>::default();
        assert!(cfg.validate().is_ok());
        cfg.step_factor = 2.5;
        assert!(cfg.validate().is_err());
        cfg.step_factor = 1.5;
        cfg.newton_tol = 1e-3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = model(&[0.0, 0.3, 1.1, 1.9, 2.4], -0.9);
        let x = vec![0.7, -1.2, 2.2, 0.4, -0.3];
        for axis in [Axis::Lambda, Axis::Mu] {
            let jac = quadratic_jacobian(&m, &x, axis, m.coupling());
            let h = 1e-6;
            for k in 0..5 {
                let mut p = x.clone();
                let mut q = x.clone();
                p[k] += h;
                q[k] -= h;
                let fp = quadratic_residual_at(&m, &p, axis, m.coupling());
                let fq = quadratic_residual_at(&m, &q, axis, m.coupling());
                for j in 0..5 {
                    let fd = (fp[j] - fq[j]) / (2.0 * h);
                    let an = jac[(j, k)];
                    assert!(
                        (fd - an).abs() <= 1e-5 * an.abs().max(1.0),
                        "{j},{k}: {fd} vs {an}"
                    );
                }
            }
        }
    }
}
