//! CSV interchange for observation sets and path bundles.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::to_f64;
use crate::scalar::{real, Scalar};
use crate::sim::{ComponentObservations, ObservationSet, PathBundle};

/// Writes an observation set as CSV with header `component,time,value`,
/// components 1-indexed, one row per observation.
pub fn write_observations_csv<T: Scalar, W: Write>(obs: &ObservationSet<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["component", "time", "value"])?;
    for (l, comp) in obs.components.iter().enumerate() {
        for (t, v) in comp.times.iter().zip(&comp.values) {
            w.write_record(&[
                (l + 1).to_string(),
                format!("{:.15e}", to_f64(*t)),
                format!("{:.15e}", to_f64(*v)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an observation set from `component,time,value` CSV. Rows may appear
/// in any order; times must be strictly increasing within each component.
/// Components whose times form the regular grid `i/n` are flagged as such.
pub fn read_observations_csv<T: Scalar, R: Read>(input: R) -> Result<ObservationSet<T>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let expected = ["component", "time", "value"];
    if headers.iter().take(3).collect::<Vec<_>>() != expected {
        return Err(Error::config(format!(
            "observation CSV must have header component,time,value (got {headers:?})"
        )));
    }
    let mut per_component: Vec<Vec<(f64, f64)>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let comp: usize = record
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::config("bad component id in observation CSV"))?;
        let time: f64 = record
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::config("bad time in observation CSV"))?;
        let value: f64 = record
            .get(2)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::config("bad value in observation CSV"))?;
        if comp == 0 {
            return Err(Error::config("component ids are 1-indexed"));
        }
        if per_component.len() < comp {
            per_component.resize(comp, Vec::new());
        }
        per_component[comp - 1].push((time, value));
    }
    let mut components = Vec::with_capacity(per_component.len());
    for rows in per_component {
        if rows.len() < 2 {
            return Err(Error::config("every component needs at least 2 observations"));
        }
        let mut rows = rows;
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
        let times: Vec<T> = rows.iter().map(|r| real(r.0)).collect();
        let values: Vec<T> = rows.iter().map(|r| real(r.1)).collect();
        let n = times.len() - 1;
        let regular = times.iter().enumerate().all(|(i, &t)| {
            (to_f64(t) - i as f64 / n as f64).abs() < 1e-9
        });
        let comp = ComponentObservations { times, values, regular };
        comp.validate()?;
        components.push(comp);
    }
    ObservationSet::new(components)
}

/// Debug CSV export of a path bundle: `t,x_1..x_d,sigma_sq_11..` columns.
pub fn write_path_bundle_csv<T: Scalar, W: Write>(paths: &PathBundle<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = paths.dimension();
    let mut header = vec!["t".to_string()];
    for l in 0..d {
        header.push(format!("x_{}", l + 1));
    }
    for p in 0..d {
        for q in 0..d {
            header.push(format!("sigma_sq_{}{}", p + 1, q + 1));
        }
    }
    w.write_record(&header)?;
    for i in 0..=paths.steps() {
        let mut row = vec![format!("{:.12e}", to_f64(paths.time(i)))];
        for l in 0..d {
            row.push(format!("{:.12e}", to_f64(paths.x_grid()[[i, l]])));
        }
        let cov = paths.volatility().covolatility_at(i);
        for p in 0..d {
            for q in 0..d {
                row.push(format!("{:.12e}", to_f64(cov[(p, q)])));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
