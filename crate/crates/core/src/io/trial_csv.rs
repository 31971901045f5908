//! Trial data as CSV: `id, entry_time, time_obs, event, dropout` followed by
//! covariate columns. The administrative-censoring flag is derived.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use super::csv_error;
use crate::data::{InterimDataset, Outcome, SubjectRecord};
use crate::error::{Error, Result};

const FIXED_COLUMNS: [&str; 5] = ["id", "entry_time", "time_obs", "event", "dropout"];

/// Reads a trial observed at calendar time `interim_time`, keeping the named
/// covariate columns in the given order.
pub fn read_trial_csv(path: &Path, covariates: &[String], interim_time: f64) -> Result<InterimDataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_trial_csv_from(file, covariates, interim_time)
}

pub fn read_trial_csv_from(reader: impl Read, covariates: &[String], interim_time: f64) -> Result<InterimDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let [id_col, entry_col, time_col, event_col, dropout_col] = [
        column(FIXED_COLUMNS[0])?,
        column(FIXED_COLUMNS[1])?,
        column(FIXED_COLUMNS[2])?,
        column(FIXED_COLUMNS[3])?,
        column(FIXED_COLUMNS[4])?,
    ];
    let cov_cols = covariates.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;

    let mut subjects = Vec::new();
    let mut ids = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Parse { line, message };
        let number = |col: usize, name: &str| -> Result<f64> {
            let raw = rec.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("`{name}` value `{raw}` is not a finite number")))
        };
        let flag = |col: usize, name: &str| -> Result<bool> {
            match rec.get(col).unwrap_or("") {
                "0" => Ok(false),
                "1" => Ok(true),
                raw => Err(bad(format!("`{name}` must be 0 or 1, got `{raw}`"))),
            }
        };
        let id = rec.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(bad("empty id".into()));
        }
        if !ids.insert(id.clone()) {
            return Err(bad(format!("duplicate id `{id}`")));
        }
        let entry_time = number(entry_col, "entry_time")?;
        let t_obs = number(time_col, "time_obs")?;
        if entry_time < 0.0 || t_obs < 0.0 {
            return Err(bad("times must be nonnegative".into()));
        }
        let outcome = match (flag(event_col, "event")?, flag(dropout_col, "dropout")?) {
            (true, false) => Outcome::Event,
            (false, true) => Outcome::Dropout,
            (false, false) => Outcome::AdminCensored,
            (true, true) => return Err(bad("event and dropout are both 1".into())),
        };
        let z = cov_cols
            .iter()
            .zip(covariates)
            .map(|(&c, name)| number(c, name))
            .collect::<Result<Vec<_>>>()?;
        let subject = SubjectRecord {
            id,
            entry_time,
            t_obs,
            outcome,
            z,
        };
        // record-level checks, so that the error carries the line number
        InterimDataset::new(vec![subject.clone()], interim_time, covariates.to_vec())
            .map_err(|e| bad(e.to_string()))?;
        subjects.push(subject);
    }
    if subjects.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    InterimDataset::new(subjects, interim_time, covariates.to_vec())
}

pub fn write_trial_csv(path: &Path, data: &InterimDataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trial_csv_to(std::io::BufWriter::new(file), data)
}

/// Floats are written with 17 significant digits, so reading back is exact.
pub fn write_trial_csv_to(writer: impl Write, data: &InterimDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<&str> = FIXED_COLUMNS
        .iter()
        .copied()
        .chain(data.covariate_names().iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for s in data.subjects() {
        let mut row = vec![
            s.id.clone(),
            format!("{:.16e}", s.entry_time),
            format!("{:.16e}", s.t_obs),
            u8::from(s.delta()).to_string(),
            u8::from(s.epsilon()).to_string(),
        ];
        row.extend(s.z.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
