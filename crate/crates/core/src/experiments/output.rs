use std::path::{Path, PathBuf};

use super::runner::{AggregateResult, ExperimentResult};
use super::ExperimentError;

pub const CSV_HEADER: &str =
    "t,mean,std,algorithm,regret_kind,K,T,M,delta_cap,delta_change,instances,groups,seed";

/// 17 significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `<label>_<kind>.csv` with characters outside `[A-Za-z0-9_-]` replaced.
pub fn csv_file_name(series: &AggregateResult) -> String {
    let label: String = series
        .algorithm
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect();
    format!("{label}_{}.csv", series.kind)
}

pub fn render_csv(result: &ExperimentResult, series: &AggregateResult) -> String {
    let cfg = &result.config;
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::with_capacity(160 * (series.checkpoints.len() + 1)));
    let kind = series.kind.to_string();
    let fixed = [
        series.algorithm.clone(),
        kind,
        cfg.k.to_string(),
        cfg.horizon.to_string(),
        cfg.segments.to_string(),
        num(cfg.delta_cap),
        num(cfg.delta_change),
        cfg.instances.to_string(),
        cfg.groups.to_string(),
        cfg.seed.to_string(),
    ];
    wtr.write_record(CSV_HEADER.split(','))
        .expect("in-memory write");
    for ((t, mean), std) in series.checkpoints.iter().zip(&series.mean).zip(&series.std) {
        let head = [t.to_string(), num(*mean), num(*std)];
        wtr.write_record(head.iter().chain(&fixed))
            .expect("in-memory write");
    }
    let bytes = wtr.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

/// Writes one CSV per (algorithm, regret kind) into `dir` and returns the
/// paths in series order.
pub fn write_csv(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    if result.series.is_empty() {
        return Err(ExperimentError::Io("no results to write".into()));
    }
    let io = |p: &Path, e: std::io::Error| ExperimentError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut paths = Vec::with_capacity(result.series.len());
    for series in &result.series {
        let path = dir.join(csv_file_name(series));
        std::fs::write(&path, render_csv(result, series)).map_err(|e| io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{AlgorithmSpec, ExperimentConfig};
    use crate::regret::RegretKind;

    fn result() -> ExperimentResult {
        let mut cfg = ExperimentConfig::new(3, 10, 1, vec![AlgorithmSpec::new("mdb:ws")]);
        cfg.instances = 2;
        cfg.groups = 1;
        let series = AggregateResult::from_curves(
            "mdb:ws",
            RegretKind::BINARY_WEAK,
            vec![5, 10],
            &[vec![0.1, 1.0 / 3.0], vec![0.3, 2.0]],
            1,
        );
        ExperimentResult {
            config: cfg,
            series: vec![series],
            warnings: vec![],
            verified_runs: 2,
        }
    }

    #[test]
    fn layout() {
        let r = result();
        let text = render_csv(&r, &r.series[0]);
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 2 + 2);
        assert_eq!(lines[3], "");
        assert!(!text.contains('\r'));
        let fields: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(fields.len(), 13);
        assert_eq!(fields[0], "10");
        assert_eq!(fields[3], "mdb:ws");
        assert_eq!(fields[4], "binary_weak");
        assert_eq!(csv_file_name(&r.series[0]), "mdb-ws_binary_weak.csv");
    }

    #[test]
    fn values_round_trip() {
        let r = result();
        let text = render_csv(&r, &r.series[0]);
        let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
        let mean: f64 = row[1].parse().unwrap();
        assert_eq!(mean, r.series[0].mean[1]);
        assert_eq!(mean.to_bits(), ((1.0 / 3.0 + 2.0) / 2.0f64).to_bits());
        let digits = row[1].split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(digits.len(), 17);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_csv(&result(), dir.path()).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(std::fs::read_to_string(&paths[0])
            .unwrap()
            .starts_with("t,mean"));
    }
}
