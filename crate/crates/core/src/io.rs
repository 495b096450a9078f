//! JSON and CSV file formats.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{time_grid, CentralSpinParams, Sampling, TimeSeries};
use crate::error::Error;
use crate::lambda::{
    find_collisions, inf_norm, quadratic_residual, Axis, LambdaState, SectorSolutions, DUPLICATE_DISTANCE,
};
use crate::model::{BasisOccupation, GaudinModel};
use crate::rapidity::RapiditySet;

/// Input-side failures: unreadable text or content that violates a format.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(#[from] Error),
}

pub type InputResult<T> = std::result::Result<T, InputError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub epsilons: Vec<f64>,
    pub g: f64,
}

pub fn parse_model(text: &str) -> InputResult<GaudinModel<f64>> {
    let f: ModelFile = serde_json::from_str(text)?;
    Ok(GaudinModel::new(f.epsilons, f.g)?)
}

pub fn model_to_json(model: &GaudinModel<f64>) -> String {
    let f = ModelFile {
        epsilons: model.epsilons().to_vec(),
        g: model.coupling(),
    };
    serde_json::to_string_pretty(&f).expect("finite values serialize")
}

/// One entry of a solutions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionRecord {
    pub occupation: Vec<usize>,
    #[serde(rename = "M")]
    pub m: usize,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub residual_inf: f64,
}

/// Records for the given sectors, in sector then occupation order.
pub fn solution_records(model: &GaudinModel<f64>, sectors: &[SectorSolutions<f64>]) -> Vec<SolutionRecord> {
    sectors
        .iter()
        .flat_map(|s| {
            s.occupations
                .iter()
                .zip(&s.states)
                .map(move |(occ, st)| SolutionRecord {
                    occupation: occ.sites().to_vec(),
                    m: s.m,
                    axis: st.axis,
                    values: st.values.clone(),
                    residual_inf: inf_norm(&quadratic_residual(model, st)),
                })
        })
        .collect()
}

pub fn solutions_to_json(records: &[SolutionRecord]) -> String {
    serde_json::to_string_pretty(records).expect("finite values serialize")
}

/// Parses a solutions file and groups it by sector, ascending in `M`.
///
/// Structure is checked here; whether the values actually solve the
/// quadratic system is left to the caller.
pub fn parse_solutions(model: &GaudinModel<f64>, text: &str) -> InputResult<Vec<SectorSolutions<f64>>> {
    let records: Vec<SolutionRecord> = serde_json::from_str(text)?;
    records_to_sectors(model, &records)
}

pub fn records_to_sectors(
    model: &GaudinModel<f64>,
    records: &[SolutionRecord],
) -> InputResult<Vec<SectorSolutions<f64>>> {
    let n = model.num_spins();
    let mut by_m: std::collections::BTreeMap<usize, SectorSolutions<f64>> = Default::default();
    for (k, r) in records.iter().enumerate() {
        let occ = BasisOccupation::new(r.occupation.clone(), n)?;
        if occ.len() != r.m || r.m > n {
            return Err(Error::InvalidConfig(format!(
                "record {k}: occupation has {} sites but M = {}",
                occ.len(),
                r.m
            ))
            .into());
        }
        if r.values.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: r.values.len(),
            }
            .into());
        }
        if !r.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("solution values").into());
        }
        let state = LambdaState::new(r.values.clone(), r.axis, r.m, model.coupling());
        let entry = by_m.entry(r.m).or_insert_with(|| SectorSolutions {
            m: r.m,
            occupations: vec![],
            states: vec![],
            collisions: vec![],
        });
        if entry.occupations.contains(&occ) {
            return Err(Error::InvalidConfig(format!("record {k}: occupation repeated")).into());
        }
        entry.occupations.push(occ);
        entry.states.push(state);
    }
    Ok(by_m
        .into_values()
        .map(|mut s| {
            s.collisions = find_collisions(&s.states, DUPLICATE_DISTANCE);
            s
        })
        .collect())
}

pub fn parse_rapidities(text: &str, axis: Axis) -> InputResult<RapiditySet<f64>> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text)?;
    if !pairs.iter().flatten().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("rapidities").into());
    }
    Ok(RapiditySet::new(
        pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
        axis,
    ))
}

pub fn rapidities_to_json(rap: &RapiditySet<f64>) -> String {
    let pairs: Vec<[f64; 2]> = rap.values.iter().map(|c| [c.re, c.im]).collect();
    serde_json::to_string(&pairs).expect("finite values serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

/// Central-spin run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsFile {
    #[serde(rename = "B")]
    pub field: f64,
    #[serde(rename = "A")]
    pub couplings: Vec<f64>,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub occupation: Vec<usize>,
    pub times: TimeRange,
    #[serde(default = "full_sampling")]
    pub sampling: Sampling,
}

fn full_sampling() -> Sampling {
    Sampling::Full
}

impl DynamicsFile {
    pub fn params(&self) -> InputResult<CentralSpinParams<f64>> {
        let occ = BasisOccupation::new(self.occupation.clone(), self.couplings.len())?;
        Ok(CentralSpinParams::new(
            self.field,
            self.couplings.clone(),
            Complex64::new(self.alpha[0], self.alpha[1]),
            Complex64::new(self.beta[0], self.beta[1]),
            occ,
        )?)
    }

    pub fn times(&self) -> InputResult<Vec<f64>> {
        Ok(time_grid(self.times.start, self.times.stop, self.times.count)?)
    }
}

pub fn parse_dynamics(text: &str) -> InputResult<DynamicsFile> {
    let f: DynamicsFile = serde_json::from_str(text)?;
    f.params()?;
    f.times()?;
    Ok(f)
}

/// `t,re,im`, plus `std_error` for sampled sums.
pub fn series_to_csv(series: &TimeSeries<f64>) -> String {
    let mut out = String::from("t,re,im");
    if series.std_error.is_some() {
        out.push_str(",std_error");
    }
    out.push('\n');
    for (k, (t, v)) in series.times.iter().zip(&series.values).enumerate() {
        write!(out, "{t},{},{}", v.re, v.im).unwrap();
        if let Some(e) = &series.std_error {
            write!(out, ",{}", e[k]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One line of a form-factor table; ids index the solutions file.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactorRow {
    pub bra_id: usize,
    pub ket_id: usize,
    pub site: usize,
    pub operator: String,
    pub value: f64,
    /// Zero forced by the magnetization selection rule.
    pub sector_mismatch: bool,
}

pub fn form_factors_to_csv(rows: &[FormFactorRow]) -> String {
    let mut out = String::from("bra_id,ket_id,site,operator,value,flag\n");
    for r in rows {
        let flag = if r.sector_mismatch { "sector_mismatch" } else { "" };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.bra_id, r.ket_id, r.site, r.operator, r.value, flag
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{solve_all_in_sector, ContinuationConfig};

    #[test]
    fn model_round_trip() {
        let m = parse_model(r#"{"epsilons": [0.0, 1.5, 2.0], "g": -0.3}"#).unwrap();
        assert_eq!(m.epsilons(), &[0.0, 1.5, 2.0]);
        assert_eq!(parse_model(&model_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn model_rejects_bad_input() {
        assert!(matches!(parse_model("{"), Err(InputError::Json(_))));
        assert!(matches!(
            parse_model(r#"{"epsilons": [NaN], "g": 1}"#),
            Err(InputError::Json(_))
        ));
        assert!(parse_model(r#"{"epsilons": [1e999], "g": 1}"#).is_err());
        assert!(matches!(
            parse_model(r#"{"epsilons": [1, 1], "g": 1}"#),
            Err(InputError::Invalid(Error::DuplicateEpsilon(0, 1)))
        ));
        assert!(parse_model(r#"{"epsilons": [1], "g": 1, "x": 2}"#).is_err());
    }

    #[test]
    fn solutions_round_trip() {
        let m = GaudinModel::new(vec![0.0, 0.4, 1.1], 0.7).unwrap();
        let cfg = ContinuationConfig::default();
        let sectors: Vec<_> = (0..=3)
            .map(|k| solve_all_in_sector(&m, k, &cfg).unwrap())
            .collect();
        let recs = solution_records(&m, &sectors);
        assert_eq!(recs.len(), 8);
        assert!(recs.iter().all(|r| r.residual_inf < 1e-11));
        let back = parse_solutions(&m, &solutions_to_json(&recs)).unwrap();
        assert_eq!(back.len(), 4);
        for (a, b) in back.iter().zip(&sectors) {
            assert_eq!(a.occupations, b.occupations);
            assert_eq!(a.states, b.states);
        }
        let text = solutions_to_json(&recs).replace("\"M\": 1", "\"M\": 2");
        assert!(parse_solutions(&m, &text).is_err());
    }

    #[test]
    fn rapidity_round_trip() {
        let r = parse_rapidities("[[0.5, 0.25], [0.5, -0.25]]", Axis::Lambda).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(
            parse_rapidities(&rapidities_to_json(&r), Axis::Lambda).unwrap(),
            r
        );
    }

    #[test]
    fn dynamics_file() {
        let text = r#"{"B": 1.0, "A": [1.0, 0.5], "alpha": [0.6, 0], "beta": [0.8, 0],
            "occupation": [1], "times": {"start": 0, "stop": 1, "count": 3},
            "sampling": {"monte_carlo": {"count": 10, "seed": 4}}}"#;
        let f = parse_dynamics(text).unwrap();
        assert_eq!(f.sampling, Sampling::MonteCarlo { count: 10, seed: 4 });
        assert_eq!(f.times().unwrap(), vec![0.0, 0.5, 1.0]);
        let plain = text.replace(
            r#""sampling": {"monte_carlo": {"count": 10, "seed": 4}}"#,
            r#""sampling": "full""#,
        );
        assert_eq!(parse_dynamics(&plain).unwrap().sampling, Sampling::Full);
        let bad = text.replace("0.8, 0", "0.9, 0");
        assert!(matches!(parse_dynamics(&bad), Err(InputError::Invalid(_))));
    }

    #[test]
    fn csv_layout() {
        let s = TimeSeries {
            times: vec![0.0, 0.5],
            values: vec![Complex64::new(0.5, 0.0), Complex64::new(0.25, -0.125)],
            std_error: None,
        };
        assert_eq!(series_to_csv(&s), "t,re,im\n0,0.5,0\n0.5,0.25,-0.125\n");
        let rows = vec![FormFactorRow {
            bra_id: 0,
            ket_id: 3,
            site: 1,
            operator: "sp".into(),
            value: 0.0,
            sector_mismatch: true,
        }];
        assert_eq!(
            form_factors_to_csv(&rows),
            "bra_id,ket_id,site,operator,value,flag\n0,3,1,sp,0,sector_mismatch\n"
        );
    }
}
