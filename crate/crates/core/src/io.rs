//! Data ingestion, matrix/result persistence and plot-data CSV emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dyson::DysonTrajectory;
use crate::error::{Error, Result};
use crate::experiments::SweepResult;
use crate::hermitian::{HermitianMatrix, RealSymmetricMatrix};
use crate::mechanisms::{clip_rows, DataMatrix, Variant};
use crate::random_matrix::GapCdfTable;

pub const SCHEMA_VERSION: u32 = 1;
/// Overrides the default output directory when set.
pub const OUTPUT_DIR_ENV: &str = "CGAUSS_OUTPUT_DIR";
/// Symmetry tolerance when importing a real symmetric matrix from CSV.
pub const CSV_SYMMETRY_TOL: f64 = 1e-9;

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    rdr.records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(Error::from)
}

/// Parses a rectangular numeric table. A first row with no numeric cell is
/// treated as a header. Row/column numbers in errors are 1-based file
/// positions.
pub fn parse_numeric_csv(path: &Path) -> Result<DMatrix<f64>> {
    let records = read_records(path)?;
    let mut rows = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !(r.len() == 1 && r[0].is_empty()));
    let mut first = rows.next().ok_or_else(|| Error::Empty(path.display().to_string()))?;
    if first.1.iter().all(|c| c.parse::<f64>().is_err()) {
        first = rows.next().ok_or_else(|| Error::Empty(path.display().to_string()))?;
    }
    let width = first.1.len();
    let mut values = Vec::new();
    let mut n_rows = 0;
    for (idx, rec) in std::iter::once(first).chain(rows) {
        let row = idx + 1;
        if rec.len() != width {
            return Err(Error::RaggedRow {
                row,
                expected: width,
                found: rec.len(),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                col: c + 1,
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col: c + 1 });
            }
            values.push(v);
        }
        n_rows += 1;
    }
    Ok(DMatrix::from_row_slice(n_rows, width, &values))
}

/// Loads a data matrix and clips every row to Euclidean norm `row_bound`.
pub fn load_data_csv(path: &Path, row_bound: f64) -> Result<DataMatrix> {
    clip_rows(parse_numeric_csv(path)?, row_bound)
}

/// Square symmetric matrix from CSV, symmetric to within `1e-9`.
pub fn load_real_symmetric_csv(path: &Path) -> Result<RealSymmetricMatrix> {
    let m = parse_numeric_csv(path)?;
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    RealSymmetricMatrix::with_tolerance(m, CSV_SYMMETRY_TOL)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn save_hermitian(path: &Path, m: &HermitianMatrix) -> Result<()> {
    write_json(path, m)
}

pub fn load_hermitian(path: &Path) -> Result<HermitianMatrix> {
    read_json(path)
}

pub fn save_real_symmetric(path: &Path, m: &RealSymmetricMatrix) -> Result<()> {
    write_json(path, m)
}

pub fn load_real_symmetric(path: &Path) -> Result<RealSymmetricMatrix> {
    read_json(path)
}

/// Loads a real symmetric matrix from `.json` or `.csv` by extension.
pub fn load_real_symmetric_any(path: &Path) -> Result<RealSymmetricMatrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => load_real_symmetric_csv(path),
        _ => load_real_symmetric(path),
    }
}

/// `$CGAUSS_OUTPUT_DIR` if set, otherwise `default`.
pub fn output_dir(default: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => default.to_path_buf(),
    }
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: Option<u64>,
    pub artifact_version: String,
    pub gaussian_transform: String,
    pub started_at: f64,
    pub finished_at: Option<f64>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value, master_seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            master_seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            gaussian_transform: crate::rng::GAUSSIAN_TRANSFORM.to_string(),
            started_at: unix_seconds(),
            finished_at: None,
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    pub fn finish(&mut self) {
        self.finished_at = Some(unix_seconds());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Trajectory,
    GapCdf,
    Sweep,
}

impl std::fmt::Display for PlotKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Trajectory => "trajectory",
            Self::GapCdf => "gap_cdf",
            Self::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Payload {
    Trajectory(DysonTrajectory),
    GapCdf(GapCdfTable),
    Sweep(SweepResult),
    Other(serde_json::Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub payload: Payload,
}

impl ResultEnvelope {
    pub fn new(manifest: RunManifest, payload: Payload) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            manifest,
            payload,
        }
    }
}

pub fn trajectory_csv(traj: &DysonTrajectory) -> String {
    let d = traj.config.dim;
    let mut out = String::from("t");
    for i in 1..=d {
        write!(out, ",gamma_{i}").unwrap();
    }
    out.push('\n');
    for (t, s) in traj.times.iter().zip(&traj.states) {
        write!(out, "{t}").unwrap();
        for v in s.as_slice() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn gap_cdf_csv(table: &GapCdfTable) -> String {
    let mut out = String::from("s,p_hat,ci_lo,ci_hi\n");
    for r in &table.rows {
        writeln!(out, "{},{},{},{}", r.s, r.p_hat, r.ci_lo, r.ci_hi).unwrap();
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("d,rms_strong_complex,rms_strong_real,rms_weak_complex,rms_weak_real,bound_value\n");
    for p in &sweep.points {
        let pick = |v: Variant| p.result.variant(v);
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.d,
            opt(pick(Variant::Complex).map(|s| s.rms_strong)),
            opt(pick(Variant::Real).map(|s| s.rms_strong)),
            opt(pick(Variant::Complex).map(|s| s.rms_weak)),
            opt(pick(Variant::Real).map(|s| s.rms_weak)),
            opt(p.result.bound_value),
        )
        .unwrap();
    }
    out
}

/// CSV body for `kind`, or a mismatch error if the payload is of another kind.
pub fn plot_csv(result: &ResultEnvelope, kind: PlotKind) -> Result<String> {
    match (&result.payload, kind) {
        (Payload::Trajectory(t), PlotKind::Trajectory) => Ok(trajectory_csv(t)),
        (Payload::GapCdf(t), PlotKind::GapCdf) => Ok(gap_cdf_csv(t)),
        (Payload::Sweep(s), PlotKind::Sweep) => Ok(sweep_csv(s)),
        _ => Err(Error::KindMismatch { kind: kind.to_string() }),
    }
}

pub fn write_plot_data(result: &ResultEnvelope, kind: PlotKind, path: &Path) -> Result<()> {
    let body = plot_csv(result, kind)?;
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)?;
    Ok(())
}

/// Writes `<dir>/<stem>_<kind>.csv` and returns the paths written. Identical
/// payloads give byte-identical files.
pub fn emit_plot_data(result: &ResultEnvelope, kind: PlotKind, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let path = dir.join(format!("{stem}_{kind}.csv"));
    write_plot_data(result, kind, &path)?;
    Ok(vec![path])
}

/// Reads a vector from a JSON array or a one-row/one-column CSV file.
pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let m = parse_numeric_csv(path)?;
            if m.nrows() != 1 && m.ncols() != 1 {
                return Err(Error::arg(format!("{} is not a single row or column", path.display())));
            }
            Ok(m.iter().copied().collect())
        }
        _ => read_json(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyson::{simulate, DysonConfig};
    use crate::hermitian::WeylChamberVector;
    use crate::rng::SeededRng;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn identity_rows_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_data_csv(&write(&dir, "a.csv", "1,0\n0,1\n"), 1.0).unwrap();
        assert_eq!(a.entries(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn header_and_clipping() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_data_csv(&write(&dir, "a.csv", "x,y\n3,4\n0.1,0.2\n"), 1.0).unwrap();
        assert_eq!(a.rows(), 2);
        assert_eq!((a.entries()[(0, 0)], a.entries()[(0, 1)]), (0.6, 0.8));
        assert_eq!(a.entries()[(1, 1)], 0.2);
    }

    #[test]
    fn error_locations() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(&dir, "bad.csv", "1,2\n3,4\n5,abc\n");
        assert!(matches!(
            load_data_csv(&bad, 1.0),
            Err(Error::Parse { row: 3, col: 2, .. })
        ));
        let ragged = write(&dir, "r.csv", "1,2\n3\n");
        assert!(matches!(
            load_data_csv(&ragged, 1.0),
            Err(Error::RaggedRow {
                row: 2,
                expected: 2,
                found: 1
            })
        ));
        let nan = write(&dir, "n.csv", "1,NaN\n");
        assert!(matches!(
            load_data_csv(&nan, 1.0),
            Err(Error::NonFinite { row: 1, col: 2 })
        ));
        let empty = write(&dir, "e.csv", "");
        assert!(matches!(load_data_csv(&empty, 1.0), Err(Error::Empty(_))));
        let header_only = write(&dir, "h.csv", "a,b\n");
        assert!(matches!(load_data_csv(&header_only, 1.0), Err(Error::Empty(_))));
    }

    #[test]
    fn matrix_json_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = SeededRng::new(12);
        let h = crate::mechanisms::sample_complex_perturbation(5, &mut rng).scale(1.0 / 3.0);
        let p = dir.path().join("h.json");
        save_hermitian(&p, &h).unwrap();
        assert_eq!(load_hermitian(&p).unwrap(), h);
        let r = h.real_part();
        save_real_symmetric(&p, &r).unwrap();
        assert_eq!(load_real_symmetric(&p).unwrap(), r);
    }

    #[test]
    fn symmetric_csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let ok = write(&dir, "m.csv", "2,1\n1.0000000000001,3\n");
        assert_eq!(load_real_symmetric_any(&ok).unwrap().dim(), 2);
        let bad = write(&dir, "b.csv", "2,1\n1.1,3\n");
        assert!(load_real_symmetric_csv(&bad).is_err());
        let rect = write(&dir, "c.csv", "1,2,3\n4,5,6\n");
        assert!(load_real_symmetric_csv(&rect).is_err());
    }

    fn trajectory_envelope() -> ResultEnvelope {
        let cfg = DysonConfig::new(6, 2, 1e-3, 0.05).unwrap();
        let traj = simulate(&WeylChamberVector::zeros(6), &cfg, &mut SeededRng::new(3)).unwrap();
        ResultEnvelope::new(
            RunManifest::start("dyson", serde_json::json!({}), Some(3)),
            Payload::Trajectory(traj),
        )
    }

    #[test]
    fn trajectory_plot_data() {
        let dir = tempfile::tempdir().unwrap();
        let env = trajectory_envelope();
        let a = emit_plot_data(&env, PlotKind::Trajectory, dir.path(), "a").unwrap();
        let b = emit_plot_data(&env, PlotKind::Trajectory, dir.path(), "b").unwrap();
        let body = fs::read(&a[0]).unwrap();
        assert_eq!(body, fs::read(&b[0]).unwrap());
        let text = String::from_utf8(body).unwrap();
        assert!(text.starts_with("t,gamma_1,gamma_2,gamma_3,gamma_4,gamma_5,gamma_6\n"));
        assert!(matches!(
            emit_plot_data(&env, PlotKind::GapCdf, dir.path(), "c"),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn envelope_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let env = trajectory_envelope();
        let p = dir.path().join("env.json");
        write_json(&p, &env).unwrap();
        let back: ResultEnvelope = read_json(&p).unwrap();
        assert_eq!(back, env);
        assert_eq!(back.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn vectors_from_json_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            load_vector(&write(&dir, "v.json", "[3, 1.5, -2]")).unwrap(),
            vec![3.0, 1.5, -2.0]
        );
        assert_eq!(
            load_vector(&write(&dir, "v.csv", "3,1.5,-2\n")).unwrap(),
            vec![3.0, 1.5, -2.0]
        );
        assert_eq!(load_vector(&write(&dir, "c.csv", "3\n1.5\n")).unwrap(), vec![3.0, 1.5]);
        assert!(load_vector(&write(&dir, "m.csv", "1,2\n3,4\n")).is_err());
    }

    #[test]
    fn gap_cdf_header() {
        let table = GapCdfTable {
            index: 1,
            scale: 1.0,
            n: 4,
            rows: vec![crate::random_matrix::CdfRow {
                s: 0.5,
                hits: 2,
                p_hat: 0.5,
                ci_lo: 0.1,
                ci_hi: 0.9,
            }],
        };
        assert_eq!(gap_cdf_csv(&table), "s,p_hat,ci_lo,ci_hi\n0.5,0.5,0.1,0.9\n");
    }
}
