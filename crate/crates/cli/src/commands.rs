use std::fs;
use std::path::Path;

use rayon::prelude::*;

use gaudin_core::determinant::{eigenbasis_coefficient, SpinOp};
use gaudin_core::dynamics::{coherence_factor, solve_spectral_table};
use gaudin_core::io::{self, FormFactorRow, SolutionRecord};
use gaudin_core::lambda::{
    relative_residual, sharpen, solve_all_in_sector, transform_axis, LambdaState, EIGENSTATE_CHECK,
};
use gaudin_core::rapidity::extract_rapidities;
use gaudin_core::verify::{self, Status};
use gaudin_core::{Axis, Config, Dd, Error, Real};

use crate::failure::Failure;
use crate::manifest::{sidecar, Recorder};

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn write_with_manifest(out: &Path, text: &str, rec: Recorder) -> Result<(), Failure> {
    write(out, text)?;
    write(&sidecar(out), &rec.finish().to_json())
}

pub fn solve(model_path: &Path, sector: Option<usize>, out: &Path, threads: usize) -> Result<(), Failure> {
    let text = read(model_path)?;
    let model = io::parse_model(&text)?;
    let n = model.num_spins();
    let mut rec = Recorder::new("solve", threads);
    rec.input(model_path, &text);
    rec.setting("sector", format!("{sector:?}"));

    let sectors: Vec<usize> = match sector {
        Some(m) if m > n => {
            return Err(Failure::Input(format!(
                "--sector {m} exceeds the {n} levels of the model"
            )));
        }
        Some(m) => vec![m],
        None => (0..=n).collect(),
    };
    let cfg = Config::default();
    let mut solved = Vec::with_capacity(sectors.len());
    for m in sectors {
        let s = solve_all_in_sector(&model, m, &cfg)?;
        if let Some(&(a, b)) = s.collisions.first() {
            return Err(Failure::Numerical(format!(
                "sector {m}: occupations {:?} and {:?} converged to the same state",
                s.occupations[a].sites(),
                s.occupations[b].sites()
            )));
        }
        solved.push(s);
    }
    let records = io::solution_records(&model, &solved);
    let worst = records.iter().map(|r| r.residual_inf).fold(0.0, f64::max);
    write_with_manifest(out, &io::solutions_to_json(&records), rec)?;
    println!(
        "{} states in {} sectors; worst quadratic residual {worst:.2e}",
        records.len(),
        solved.len()
    );
    Ok(())
}

/// A record re-converged in double-double on the down-spin axis.
struct Loaded {
    m: usize,
    state: LambdaState<Dd>,
    rapidities: Option<gaudin_core::rapidity::RapiditySet<Dd>>,
}

fn load_states(
    model: &gaudin_core::Model,
    records: &[SolutionRecord],
    need_rapidities: bool,
) -> Result<Vec<Loaded>, Failure> {
    let wide = model.widened();
    records
        .par_iter()
        .enumerate()
        .map(|(id, r)| {
            let st = LambdaState::new(r.values.clone(), r.axis, r.m, model.coupling());
            let st = match st.axis {
                Axis::Lambda => st,
                Axis::Mu => transform_axis(model, &st)?,
            };
            let res = relative_residual(model, &st);
            if res.is_nan() || res > EIGENSTATE_CHECK {
                return Err(Failure::Numerical(format!(
                    "solution {id} is not an eigenstate: relative residual {res:.2e}"
                )));
            }
            let state = sharpen(&wide, &st)?;
            let rapidities = if need_rapidities && r.m > 0 {
                Some(extract_rapidities(&wide, &state)?)
            } else {
                None
            };
            Ok(Loaded {
                m: r.m,
                state,
                rapidities,
            })
        })
        .collect()
}

pub fn formfactor(
    model_path: &Path,
    solutions_path: &Path,
    op: SpinOp,
    site: usize,
    out: &Path,
    threads: usize,
) -> Result<(), Failure> {
    let model_text = read(model_path)?;
    let sol_text = read(solutions_path)?;
    let model = io::parse_model(&model_text)?;
    let n = model.num_spins();
    if site >= n {
        return Err(Error::SiteOutOfRange { site, n }.into());
    }
    let records: Vec<SolutionRecord> =
        serde_json::from_str(&sol_text).map_err(|e| Failure::Input(format!("malformed JSON: {e}")))?;
    io::records_to_sectors(&model, &records)?;
    let present = |m: usize| records.iter().any(|r| r.m == m);
    let paired = records.iter().any(|r| match op {
        SpinOp::Z => true,
        SpinOp::Plus => present(r.m + 1),
        SpinOp::Minus => r.m > 0 && present(r.m - 1),
    });
    if !paired {
        return Err(Failure::Input(format!(
            "missing sector: no pair of solved sectors is connected by {op}"
        )));
    }

    let mut rec = Recorder::new("formfactor", threads);
    rec.input(model_path, &model_text);
    rec.input(solutions_path, &sol_text);
    rec.setting("op", op);
    rec.setting("site", site);

    let states = load_states(&model, &records, op == SpinOp::Z)?;
    let wide = model.widened();
    let rows: Vec<Vec<FormFactorRow>> = states
        .par_iter()
        .enumerate()
        .map(|(bra_id, bra)| {
            states
                .iter()
                .enumerate()
                .map(|(ket_id, ket)| {
                    let connected = match op {
                        SpinOp::Z => bra.m == ket.m,
                        SpinOp::Plus => bra.m == ket.m + 1,
                        SpinOp::Minus => bra.m + 1 == ket.m,
                    };
                    let (value, sector_mismatch) = if connected {
                        let a = eigenbasis_coefficient(
                            &wide,
                            op,
                            site,
                            &bra.state,
                            &ket.state,
                            ket.rapidities.as_ref(),
                        )?;
                        (a.value.as_f64(), a.sector_mismatch)
                    } else {
                        (0.0, true)
                    };
                    Ok(FormFactorRow {
                        bra_id,
                        ket_id,
                        site,
                        operator: op.to_string(),
                        value,
                        sector_mismatch,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()
        })
        .collect::<Result<_, Error>>()?;
    let rows: Vec<FormFactorRow> = rows.into_iter().flatten().collect();
    write_with_manifest(out, &io::form_factors_to_csv(&rows), rec)?;
    let live = rows.iter().filter(|r| !r.sector_mismatch).count();
    println!("{} rows, {live} allowed by the selection rule", rows.len());
    Ok(())
}

pub fn dynamics(params_path: &Path, out: &Path, threads: usize) -> Result<(), Failure> {
    let text = read(params_path)?;
    let file = io::parse_dynamics(&text)?;
    let mut rec = Recorder::new("dynamics", threads);
    rec.input(params_path, &text);
    let params = file.params()?;
    let times = file.times()?;
    let table = solve_spectral_table(&params, &Config::default())?;
    let series = coherence_factor(&table, &times, file.sampling)?;
    write_with_manifest(out, &io::series_to_csv(&series), rec)?;
    println!(
        "{} rows in the spectral table, {} times",
        table.rows.len(),
        times.len()
    );
    Ok(())
}

pub fn verify(
    model_path: &Path,
    level: verify::Level,
    solutions_path: Option<&Path>,
    seed: u64,
    threads: usize,
) -> Result<(), Failure> {
    let text = read(model_path)?;
    let model = io::parse_model(&text)?;
    let mut rec = Recorder::new("verify", threads);
    rec.input(model_path, &text);
    rec.setting("level", format!("{level:?}"));
    rec.setting("seed", seed);
    let solutions = match solutions_path {
        Some(p) => {
            let s = read(p)?;
            rec.input(p, &s);
            Some(io::parse_solutions(&model, &s)?)
        }
        None => None,
    };
    let report = verify::run_suite(&model, level, solutions, seed);
    for c in &report.checks {
        println!("{c}");
    }
    let failed = report.checks.iter().filter(|c| c.status == Status::Fail).count();
    let skipped = report
        .checks
        .iter()
        .filter(|c| c.status == Status::Skipped)
        .count();
    println!(
        "{} checks: {} passed, {failed} failed, {skipped} skipped",
        report.checks.len(),
        report.checks.len() - failed - skipped
    );
    eprintln!("{}", rec.finish().to_json());
    if report.bad_solutions {
        return Err(Failure::Numerical(
            "supplied solutions do not solve the quadratic system".into(),
        ));
    }
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} checks failed")));
    }
    Ok(())
}
