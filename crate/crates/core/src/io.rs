//! Delimited-text tables, JSON metadata sidecars and gnuplot scripts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::dynamics::PhaseState;
use crate::frequencies::FrequencyVector;
use crate::{Error, Result};

/// Writes `rows` as CSV with a header taken from the field names.
pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Path of the metadata sidecar that accompanies `table`.
pub fn sidecar_path(table: &Path) -> PathBuf {
    table.with_extension("meta.json")
}

/// Run metadata: coupling function, seed, width, topology, scheme and any
/// further settings, written as pretty JSON with sorted keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(Map<String, Value>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.0.insert(key.to_string(), v);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.0)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        match serde_json::from_str(&fs::read_to_string(path)?)? {
            Value::Object(map) => Ok(Self(map)),
            _ => Err(Error::InvalidConfig(format!(
                "{} is not a JSON object",
                path.display()
            ))),
        }
    }
}

/// Writes `rows` to `path` and `meta` to its sidecar.
pub fn write_table_with_metadata<T: Serialize>(
    path: &Path,
    rows: &[T],
    meta: &Metadata,
) -> Result<()> {
    write_table(path, rows)?;
    meta.write(&sidecar_path(path))
}

/// One value per line; blank lines and lines starting with `#` are skipped.
pub fn read_frequency_vector(path: &Path) -> Result<FrequencyVector> {
    let text = fs::read_to_string(path)?;
    let mut eta = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line.parse::<f64>().map_err(|_| {
            Error::InvalidConfig(format!(
                "{}:{}: not a number: `{line}`",
                path.display(),
                i + 1
            ))
        })?;
        eta.push(v);
    }
    FrequencyVector::new(eta)
}

pub fn write_frequency_vector(path: &Path, fv: &FrequencyVector) -> Result<()> {
    let mut out = String::new();
    if let Some(seed) = fv.seed() {
        out.push_str(&format!("# seed {seed}\n"));
    }
    for v in fv.eta() {
        out.push_str(&format!("{v:?}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

fn indexed_header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}_{k}")).collect()
}

/// Single-row table with header `phi_1, ..., phi_m`.
pub fn write_phase_differences(path: &Path, phi: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(indexed_header("phi", phi.len()))?;
    w.write_record(phi.iter().map(|v| format!("{v:?}")))?;
    w.flush()?;
    Ok(())
}

/// Reads back a table written by [`write_phase_differences`].
pub fn read_phase_differences(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let record = r
        .records()
        .next()
        .ok_or_else(|| Error::InvalidConfig(format!("{} has no data row", path.display())))??;
    record
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("not a number: `{s}`")))
        })
        .collect()
}

/// One row per sample: `time, theta_1, ..., theta_N`.
pub fn write_trajectory(path: &Path, samples: &[PhaseState]) -> Result<()> {
    let n = samples.first().map_or(0, |s| s.theta.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["time".to_string()];
    header.extend(indexed_header("theta", n));
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![format!("{:?}", s.time)];
        row.extend(s.theta.iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot script for the scatter plot of `gamma_r_hat` against
/// `gamma_c_hat`, with the ratio-1 line and the ratio bound.
pub fn scatter_gnuplot(table: &str, ratio_bound: f64) -> String {
    format!(
        "set datafile separator ','\n\
         set key top left\n\
         set xlabel 'chain threshold'\n\
         set ylabel 'ring threshold'\n\
         set terminal pngcairo size 800,600\n\
         set output '{stem}.png'\n\
         plot '{table}' using 'gamma_c_hat':'gamma_r_hat' with points pt 7 ps 0.6 title 'trials', \\\n\
         \x20    x with lines dt 2 title 'ratio 1', \\\n\
         \x20    2*x with lines dt 2 title 'ratio 2', \\\n\
         \x20    {ratio_bound:?}*x with lines lw 2 title 'bound'\n",
        stem = table.trim_end_matches(".csv"),
    )
}

/// Gnuplot script for the log-log decay of the chain/ring separation.
pub fn convergence_gnuplot(sizes_table: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set logscale xy\n\
         set xlabel 'N'\n\
         set ylabel 'separation'\n\
         set terminal pngcairo size 800,600\n\
         set output '{stem}.png'\n\
         plot '{sizes_table}' using 'n':'mean_separation' with linespoints title 'trajectories', \\\n\
         \x20    '{sizes_table}' using 'n':'mean_residual' with linespoints title 'analytic residual', \\\n\
         \x20    '{sizes_table}' using 'n':(1.0/$1) with lines dt 2 title '1/N'\n",
        stem = sizes_table.trim_end_matches(".csv"),
    )
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eta.txt");
        let fv = FrequencyVector::sample_uniform(7, 99).unwrap();
        write_frequency_vector(&path, &fv).unwrap();
        let back = read_frequency_vector(&path).unwrap();
        assert_eq!(back.eta(), fv.eta());
    }

    #[test]
    fn bad_frequency_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eta.txt");
        fs::write(&path, "0.5\nabc\n").unwrap();
        assert!(read_frequency_vector(&path).is_err());
        fs::write(&path, "0.5\n").unwrap();
        assert!(matches!(
            read_frequency_vector(&path),
            Err(Error::TooFewOscillators(1))
        ));
    }

    #[test]
    fn phase_difference_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.csv");
        let phi = vec![0.1, -2.5, 1.0 / 3.0];
        write_phase_differences(&path, &phi).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("phi_1,phi_2,phi_3\n"));
        assert_eq!(read_phase_differences(&path).unwrap(), phi);
    }

    #[test]
    fn trajectory_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let samples = vec![
            PhaseState::zeros(2),
            PhaseState {
                theta: vec![0.5, 1.0],
                time: 0.25,
            },
        ];
        write_trajectory(&path, &samples).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "time,theta_1,theta_2\n0.0,0.0,0.0\n0.25,0.5,1.0\n");
    }

    #[test]
    fn metadata_sorted_and_readable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.meta.json");
        let meta = Metadata::new()
            .with("seed", 7u64)
            .with("f", "sin(1)")
            .with("gamma", 0.5);
        meta.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let f_at = text.find("\"f\"").unwrap();
        let seed_at = text.find("\"seed\"").unwrap();
        assert!(f_at < seed_at);
        assert_eq!(Metadata::read(&path).unwrap(), meta);
        assert_eq!(
            sidecar_path(Path::new("out/scatter.csv")),
            Path::new("out/scatter.meta.json")
        );
    }
}
