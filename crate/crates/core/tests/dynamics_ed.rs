use gaudin_core::dynamics::*;
use gaudin_core::ed;
use gaudin_core::lambda::ContinuationConfig;
use gaudin_core::model::BasisOccupation;
use num_complex::Complex64;

fn params(b: f64, a: &[f64], occ: &[usize], alpha: Complex64, beta: Complex64) -> CentralSpinParams<f64> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    let s = n.sqrt();
    CentralSpinParams::new(
        b,
        a.to_vec(),
        alpha / s,
        beta / s,
        BasisOccupation::new(occ.to_vec(), a.len()).unwrap(),
    )
    .unwrap()
}

fn compare(p: &CentralSpinParams<f64>, times: &[f64]) -> f64 {
    let table = solve_spectral_table(p, &ContinuationConfig::default()).unwrap();
    assert!(
        (table.completeness_lower - 1.0).abs() < 1e-8,
        "{}",
        table.completeness_lower
    );
    assert!(
        (table.completeness_upper - 1.0).abs() < 1e-8,
        "{}",
        table.completeness_upper
    );
    let series = coherence_factor(&table, times, Sampling::Full).unwrap();
    let exact = ed::central_spin_coherence(p.field, &p.couplings, p.alpha, p.beta, &p.bath_occupation, times)
        .unwrap();
    series
        .values
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

#[test]
fn one_bath_spin_matches_ed() {
    let p = params(
        1.3,
        &[0.7],
        &[],
        Complex64::new(0.6, 0.0),
        Complex64::new(0.8, 0.0),
    );
    let times: Vec<f64> = (0..40).map(|k| 0.25 * k as f64).collect();
    assert!(compare(&p, &times) < 1e-10);
}

#[test]
fn complex_amplitudes_use_conjugated_alpha() {
    let p = params(
        0.9,
        &[1.0, 0.45, 0.2],
        &[1],
        Complex64::new(0.3, 0.5),
        Complex64::new(-0.2, 0.7),
    );
    let table = solve_spectral_table(&p, &ContinuationConfig::default()).unwrap();
    let t0 = p.alpha.conj() * p.beta;
    assert!((table.total() - t0).norm() < 1e-10);
    let times: Vec<f64> = (0..30).map(|k| 0.3 * k as f64).collect();
    assert!(compare(&p, &times) < 1e-9);
}
