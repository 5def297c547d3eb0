//! Output directory, CSV and PGM writers, and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qreadout::bench::ScalingRun;
use qreadout::cfd::write_pgm;
use qreadout::gridfn::{write_grid_csv, GridFunction};
use qreadout::readout_sampling::CoefficientEstimate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// One row of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub method: String,
    pub abscissa_kind: String,
    pub abscissa: f64,
    pub seed: u64,
    pub l2ns_error: f64,
}

/// One row of the summary CSV; empty cells for missing fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    pub expected_slope: Option<f64>,
}

const SERIES_HEADER: [&str; 5] = ["method", "abscissa_kind", "abscissa", "seed", "l2ns_error"];
const SUMMARY_HEADER: [&str; 4] = ["method", "slope", "stderr", "expected_slope"];

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn write_rows<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_csv(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    write_rows(path, &SERIES_HEADER, rows)
}

pub fn read_series_csv(path: &Path) -> Result<Vec<SeriesRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != SERIES_HEADER {
        anyhow::bail!("{}: unexpected header {header:?}", path.display());
    }
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path, &SUMMARY_HEADER, rows)
}

/// Every sample of a run as results rows.
pub fn series_rows(run: &ScalingRun) -> Vec<SeriesRow> {
    run.points
        .iter()
        .flat_map(|p| {
            p.samples.iter().map(move |s| SeriesRow {
                method: run.method.clone(),
                abscissa_kind: run.abscissa_kind.name().into(),
                abscissa: p.abscissa,
                seed: s.seed,
                l2ns_error: s.error,
            })
        })
        .collect()
}

/// Shot-free sweeps get an `-m0` suffix so that summary rows stay unique.
pub fn summary_row(run: &ScalingRun) -> SummaryRow {
    let finite = |v: f64| v.is_finite().then_some(v);
    let method = match run.abscissa_kind.name() {
        "m0" => format!("{}-m0", run.method),
        _ => run.method.clone(),
    };
    SummaryRow {
        method,
        slope: finite(run.slope),
        stderr: finite(run.stderr),
        expected_slope: run.expected_slope,
    }
}

pub fn write_coefficients_csv<T: qreadout::scalar::Real>(path: &Path, dim: usize, coeffs: &[CoefficientEstimate<T>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = (1..=dim).map(|l| format!("k{l}")).collect();
    header.extend(["re", "im", "abs_est", "sign_re", "sign_im"].map(String::from));
    w.write_record(&header)?;
    for c in coeffs {
        let mut rec: Vec<String> = c.k.iter().map(i64::to_string).collect();
        rec.push(c.re.as_f64().to_string());
        rec.push(c.im.as_f64().to_string());
        rec.push(c.abs().as_f64().to_string());
        rec.push(c.sign_re.to_string());
        rec.push(c.sign_im.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid(path: &Path, f: &GridFunction<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    write_grid_csv(&mut w, f.spec(), &[f.values()])?;
    w.flush()?;
    Ok(())
}

/// P2 heatmap of a 2D grid; a constant grid renders mid-gray.
pub fn render_heatmap(f: &GridFunction<f64>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    write_pgm(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory that remembers every artifact written through it.
pub struct OutDir {
    root: PathBuf,
    artifacts: Vec<String>,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root,
            artifacts: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path for an artifact relative to the root; parents are created.
    pub fn artifact(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.artifacts.push(rel.to_owned());
        Ok(p)
    }

    pub fn write_manifest(&self, command: &str, config: &Value, seed: Option<u64>, summary: &Value) -> Result<PathBuf> {
        let artifacts = self
            .artifacts
            .iter()
            .map(|rel| {
                let bytes = std::fs::read(self.root.join(rel))?;
                Ok(json!({"path": rel, "bytes": bytes.len(), "sha256": sha256_hex(&bytes)}))
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = json!({
            "tool": "qreadout",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "seed": seed,
            "output_dir": self.root.display().to_string(),
            "summary": summary,
            "artifacts": artifacts,
        });
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qreadout::gridfn::GridSpec;

    fn row(m: &str, x: f64, e: f64) -> SeriesRow {
        SeriesRow {
            method: m.into(),
            abscissa_kind: "shots".into(),
            abscissa: x,
            seed: 42,
            l2ns_error: e,
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_series_csv(&p, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "method,abscissa_kind,abscissa,seed,l2ns_error\n");
        assert!(read_series_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let rows = vec![row("fsr", 10000.0, 0.1 + 0.2), row("rsr", 2.56e6, 1.0 / 3.0)];
        write_series_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(read_series_csv(&p).unwrap(), rows);
    }

    #[test]
    fn summary_leaves_missing_fits_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let rows = vec![SummaryRow {
            method: "fsr".into(),
            slope: None,
            stderr: None,
            expected_slope: Some(-0.5),
        }];
        write_summary_csv(&p, &rows).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "method,slope,stderr,expected_slope\nfsr,,,-0.5\n");
    }

    #[test]
    fn heatmap_corners_and_constant() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.pgm");
        let spec = GridSpec::unit(&[1, 1]).unwrap();
        render_heatmap(&GridFunction::new(spec.clone(), vec![0.0, 1.0, 1.0, 0.0]).unwrap(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let px: Vec<&str> = text.lines().skip(4).flat_map(str::split_whitespace).collect();
        assert_eq!(px, ["0", "65535", "65535", "0"]);
        render_heatmap(&GridFunction::new(spec, vec![2.5; 4]).unwrap(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.lines().skip(4).flat_map(str::split_whitespace).all(|v| v == "32768"));
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
