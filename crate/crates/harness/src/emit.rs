//! CSV plot data from a results directory. Rewrites every file from
//! results.json, so repeated calls produce identical output.

use std::path::Path;

use cle_core::estimators::{NormalizationTable, PointSplitReport, StressInsertion};
use cle_core::stats::{ComplexExtrapolation, ExtrapolationResult};
use num_complex::Complex64;

use crate::experiments::Results;
use crate::manifest::read_json;
use crate::{io_failure, Failure};

pub const RESULTS_FILE: &str = "results.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const EPS_DIR: &str = "eps_extrapolation";
pub const THETA_DIR: &str = "theta_spectrum";

type Row = Vec<String>;

fn write_csv(path: &Path, header: &[&str], rows: &[Row]) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    w.write_record(header).map_err(|e| io_failure(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

fn f(x: f64) -> String {
    x.to_string()
}

const EPS_HEADER: [&str; 6] = ["eps", "ratio", "std_err", "fit_value", "fit_lo", "fit_hi"];

/// Ladder rows, then the ε = 0 intercept; the band is the fit curve shifted
/// by the intercept error.
fn eps_rows(points: &[(f64, f64, f64)], value: f64, error: f64, curve: impl Fn(f64) -> f64) -> Vec<Row> {
    let mut rows: Vec<Row> = points
        .iter()
        .map(|&(e, v, s)| {
            let c = curve(e);
            vec![f(e), f(v), f(s), f(c), f(c - error), f(c + error)]
        })
        .collect();
    rows.push(vec![f(0.0), f(value), f(error), f(value), f(value - error), f(value + error)]);
    rows
}

fn emit_real(dir: &Path, series: &str, r: &ExtrapolationResult, files: &mut Vec<String>) -> Result<(), Failure> {
    let pts: Vec<(f64, f64, f64)> = r.table.iter().map(|t| (t.eps, t.value, t.std_err)).collect();
    let name = format!("{EPS_DIR}/{series}.csv");
    write_csv(&dir.join(&name), &EPS_HEADER, &eps_rows(&pts, r.value, r.error, |e| r.curve(e)))?;
    files.push(name);
    Ok(())
}

fn complex_curve(r: &ComplexExtrapolation, eps: f64) -> Complex64 {
    if r.table.len() == 1 {
        r.value
    } else {
        r.value + r.slope * eps.powf(r.exponent)
    }
}

fn emit_complex(dir: &Path, series: &str, r: &ComplexExtrapolation, files: &mut Vec<String>) -> Result<(), Failure> {
    for (part, pick) in [("re", (|z: Complex64| z.re) as fn(Complex64) -> f64), ("im", |z: Complex64| z.im)] {
        let pts: Vec<(f64, f64, f64)> =
            r.table.iter().map(|t| (t.eps, pick(t.estimate.mean), pick(t.estimate.std_err))).collect();
        let name = format!("{EPS_DIR}/{series}_{part}.csv");
        let rows = eps_rows(&pts, pick(r.value), pick(r.error), |e| pick(complex_curve(r, e)));
        write_csv(&dir.join(&name), &EPS_HEADER, &rows)?;
        files.push(name);
    }
    Ok(())
}

fn emit_stress(dir: &Path, series: &str, s: &StressInsertion, files: &mut Vec<String>) -> Result<(), Failure> {
    emit_complex(dir, series, &s.result, files)?;
    for (k, rung) in s.rungs.iter().enumerate() {
        let rows: Vec<Row> = rung.spectrum.iter().map(|t| vec![f(t.theta), f(t.value), f(t.std_err)]).collect();
        let name = format!("{THETA_DIR}/{series}_eps{k}.csv");
        write_csv(&dir.join(&name), &["theta", "value", "std_err"], &rows)?;
        files.push(name);
    }
    Ok(())
}

fn emit_table(dir: &Path, series: &str, t: &NormalizationTable, files: &mut Vec<String>) -> Result<(), Failure> {
    emit_real(dir, series, &t.ratio_fit, files)
}

fn emit_point_split(dir: &Path, reports: &[PointSplitReport], files: &mut Vec<String>) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for r in reports {
        for row in &r.rows {
            rows.push(vec![
                f(r.resolution),
                f(row.separation),
                f(row.value.mean),
                f(row.value.std_err),
                f(row.pair_count.mean),
                f(row.pair_count.std_err),
                row.discarded.to_string(),
            ]);
        }
    }
    let header = ["resolution", "separation", "value", "std_err", "pair_count", "pair_count_std_err", "discarded"];
    write_csv(&dir.join("point_split.csv"), &header, &rows)?;
    files.push("point_split.csv".into());
    Ok(())
}

/// Writes the CSV files for `dir/results.json` and returns their relative paths.
pub fn emit(dir: &Path) -> Result<Vec<String>, Failure> {
    let results: Results = read_json(&dir.join(RESULTS_FILE))?;
    let mut files = Vec::new();
    match &results {
        Results::SelftestExact { .. } | Results::OracleTiny { .. } => {}
        Results::Restriction { table, report } => {
            emit_table(dir, "normalization", table, &mut files)?;
            emit_real(dir, "restriction_residual", &report.residual_fit, &mut files)?;
            let rows: Vec<Row> = report
                .rungs
                .iter()
                .map(|r| {
                    vec![
                        f(r.eps),
                        r.resolution.to_string(),
                        r.joint_count.to_string(),
                        r.corridor_count.to_string(),
                        f(r.prelimit_ratio),
                        f(r.conditional),
                        f(r.residual.mean),
                        f(r.residual.std_err),
                    ]
                })
                .collect();
            let header =
                ["eps", "resolution", "joint_count", "corridor_count", "prelimit_ratio", "conditional", "residual", "std_err"];
            write_csv(&dir.join("restriction_rungs.csv"), &header, &rows)?;
            files.push("restriction_rungs.csv".into());
        }
        Results::WardDisk { table, report } | Results::WardPlane { table, report } => {
            emit_table(dir, "normalization", table, &mut files)?;
            emit_complex(dir, "ward_insertion", &report.insertion, &mut files)?;
            let rows: Vec<Row> = report.derivative.spectrum.iter().map(|(t, v)| vec![f(*t), f(*v), String::new()]).collect();
            let name = format!("{THETA_DIR}/ward_derivative.csv");
            write_csv(&dir.join(&name), &["theta", "value", "std_err"], &rows)?;
            files.push(name);
        }
        Results::OnePoint { table, stress, relative } => {
            emit_table(dir, "normalization", table, &mut files)?;
            emit_stress(dir, "p1_stress", stress, &mut files)?;
            if let Some(r) = relative {
                let rows: Vec<Row> = r.derivative.spectrum.iter().map(|(t, v)| vec![f(*t), f(*v), String::new()]).collect();
                let name = format!("{THETA_DIR}/p1_relative_z.csv");
                write_csv(&dir.join(&name), &["theta", "value", "std_err"], &rows)?;
                files.push(name);
            }
        }
        Results::CentralCharge { rows } => {
            let mut conv = Vec::new();
            let mut tail = Vec::new();
            for r in rows {
                emit_table(dir, &format!("normalization_L0_{}", r.l0), &r.table, &mut files)?;
                if let Some(s) = &r.report.elongated {
                    emit_stress(dir, &format!("elongated_L0_{}", r.l0), s, &mut files)?;
                }
                for (route, c) in [("elongated-domain", r.report.c_via_elongated_domain), ("charge-fit", r.report.c_via_charge_fit)] {
                    if let Some(c) = c {
                        conv.push(vec![r.l0.to_string(), r.calibration_l0.to_string(), route.into(), f(c.mean), f(c.std_err)]);
                    }
                }
                for d in &r.report.charge_samples {
                    let model = r.report.charge_fit.as_ref().map(|fit| fit.model(d.z));
                    let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
                    tail.push(vec![
                        r.l0.to_string(),
                        f(d.z.re),
                        f(d.z.im),
                        f(d.z.norm()),
                        f(d.value.re),
                        f(d.value.im),
                        f(d.std_err),
                        opt(model.map(|m| m.re)),
                        opt(model.map(|m| m.im)),
                    ]);
                }
            }
            write_csv(&dir.join("c_convergence.csv"), &["l0", "calibration_l0", "route", "c", "std_err"], &conv)?;
            files.push("c_convergence.csv".into());
            if !tail.is_empty() {
                let header = ["l0", "z_re", "z_im", "abs_z", "delta_re", "delta_im", "std_err", "model_re", "model_im"];
                write_csv(&dir.join("charge_tail.csv"), &header, &tail)?;
                files.push("charge_tail.csv".into());
            }
        }
        Results::Transformation { table, report, .. } => {
            emit_table(dir, "normalization", table, &mut files)?;
            emit_stress(dir, "p1", &report.p1, &mut files)?;
            emit_stress(dir, "p1_image", &report.p1_image, &mut files)?;
        }
        Results::PointSplit { reports } => {
            emit_point_split(dir, reports, &mut files)?;
            for r in reports {
                emit_real(dir, &format!("point_split_plateau_L{}", r.resolution), &r.plateau, &mut files)?;
            }
        }
    }
    Ok(files)
}
