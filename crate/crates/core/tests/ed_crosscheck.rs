use gaudin_core::determinant::*;
use gaudin_core::ed::{self, StateVector};
use gaudin_core::lambda::*;
use gaudin_core::model::*;
use gaudin_core::rapidity::*;

fn model4() -> GaudinModel<f64> {
    GaudinModel::new(vec![0.1, 0.65, 1.3, 2.2], 0.8).unwrap()
}

fn bethe(model: &GaudinModel<f64>, lam: &LambdaState<f64>) -> StateVector {
    let rap = if lam.rapidity_count() == 0 {
        RapiditySet::new(vec![], lam.axis)
    } else {
        extract_rapidities(model, lam).unwrap()
    };
    ed::build_bethe_vector(model, &rap).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn all_sectors(m: &GaudinModel<f64>) -> Vec<SectorSolutions<f64>> {
    let cfg = ContinuationConfig::default();
    (0..=m.num_spins())
        .map(|k| solve_all_in_sector(m, k, &cfg).unwrap())
        .collect()
}

#[test]
fn norms_match_bethe_vectors() {
    let m = model4();
    for sector in all_sectors(&m) {
        for lam in &sector.states {
            let mu = transform_axis(&m, lam).unwrap();
            let ed = bethe(&m, &mu).bilinear(&bethe(&m, lam));
            let det = norm_product(&m, lam, &mu).unwrap();
            assert!(close(ed.re, det, 1e-9), "M={} det {det} ed {ed}", sector.m);
            assert!(ed.im.abs() < 1e-12);
        }
    }
}

#[test]
fn distinct_states_are_orthogonal() {
    let m = model4();
    for sector in all_sectors(&m) {
        for (a, lam) in sector.states.iter().enumerate() {
            for (b, other) in sector.states.iter().enumerate() {
                if a == b {
                    continue;
                }
                let mu = transform_axis(&m, other).unwrap();
                let sp = scalar_product(&m, &mu, lam).unwrap();
                let scale = norm_product(&m, lam, &transform_axis(&m, lam).unwrap())
                    .unwrap()
                    .abs()
                    .max(1.0);
                assert!(
                    sp.value.abs() < 1e-9 * scale,
                    "M={} ({a},{b}) {}",
                    sector.m,
                    sp.value
                );
            }
        }
    }
}

#[test]
fn raising_form_factors_match_bethe_vectors() {
    let m = model4();
    let n = m.num_spins();
    let sectors = all_sectors(&m);
    for k in 0..n {
        for lam in &sectors[k].states {
            let v = bethe(&m, lam);
            for site in 0..n {
                let raised = ed::splus(n, site).apply(&v);
                for upper in &sectors[k + 1].states {
                    let mu = transform_axis(&m, upper).unwrap();
                    let ed = bethe(&m, &mu).bilinear(&raised);
                    let det = splus_form_factor(&m, site, (&mu).into(), lam.into())
                        .unwrap()
                        .value;
                    assert!(close(ed.re, det, 1e-8), "k={k} site={site} ed {ed} det {det}");
                }
            }
        }
    }
}

#[test]
fn sz_form_factors_match_bethe_vectors() {
    let m = model4();
    let n = m.num_spins();
    for sector in all_sectors(&m) {
        for lam in &sector.states {
            let mu = transform_axis(&m, lam).unwrap();
            let v = bethe(&m, lam);
            let w = bethe(&m, &mu);
            let rap = (sector.m > 0).then(|| extract_rapidities(&m, lam).unwrap());
            for site in 0..n {
                let ed = w.bilinear(&ed::sz(n, site).apply(&v));
                let det = sz_form_factor(&m, site, (&mu).into(), lam.into(), rap.as_ref())
                    .unwrap()
                    .value;
                assert!(
                    close(ed.re, det.re, 1e-8),
                    "M={} site={site} ed {ed} det {det}",
                    sector.m
                );
            }
        }
    }
}
