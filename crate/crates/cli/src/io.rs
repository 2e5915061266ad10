//! Artifact writers and readers: CSV tables, 16-bit binary graymaps with a
//! CSV sidecar, and JSON reports. All text output is UTF-8 with LF line
//! endings and `.` decimals so reruns are byte-comparable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use fop_optics::imaging::SceneImage;
use fop_optics::response::{AngularResponse, ResponseMeta};

/// Fixed scientific float formatting keeps artifacts byte-stable across
/// platforms and reruns.
pub fn fmt(v: f64) -> String {
    format!("{v:.9e}")
}

/// Write a CSV with a single header row.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_response_csv(path: &Path, response: &AngularResponse) -> Result<()> {
    let rows: Vec<Vec<String>> = response
        .theta_deg()
        .iter()
        .zip(response.transmittance())
        .map(|(&t, &v)| vec![fmt(t), fmt(v)])
        .collect();
    write_csv(path, "theta_deg,transmittance", &rows)
}

/// Read an angular response from a two-column CSV (theta_deg,
/// transmittance) with one header row; used for digitized measured curves.
pub fn read_response_csv(path: &Path) -> Result<AngularResponse> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut theta = Vec::new();
    let mut trans = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b) = (parts.next(), parts.next());
        match (a, b) {
            (Some(a), Some(b)) => {
                theta.push(a.trim().parse::<f64>().with_context(|| {
                    format!("{}:{}: bad angle `{a}`", path.display(), i + 1)
                })?);
                trans.push(b.trim().parse::<f64>().with_context(|| {
                    format!("{}:{}: bad transmittance `{b}`", path.display(), i + 1)
                })?);
            }
            _ => bail!("{}:{}: expected two columns", path.display(), i + 1),
        }
    }
    Ok(AngularResponse::new(theta, trans, ResponseMeta::default())?)
}

/// Read a two-column (wavelength_nm, relative_value) spectrum CSV.
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => points.push((
                a.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}:{}: bad wavelength", path.display(), i + 1))?,
                b.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}:{}: bad value", path.display(), i + 1))?,
            )),
            _ => bail!("{}:{}: expected two columns", path.display(), i + 1),
        }
    }
    Ok(points)
}

/// 16-bit binary portable graymap (P5, maxval 65535, big-endian samples),
/// normalized to the image maximum, plus a CSV sidecar recording the
/// physical scale so the graymap stays invertible.
pub fn write_pgm16(path: &Path, image: &SceneImage) -> Result<()> {
    let max = image.data().iter().cloned().fold(0.0, f64::max);
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{} {}\n65535\n", image.cols, image.rows)?;
    for v in image.data() {
        let q = (v * scale).round().clamp(0.0, 65535.0) as u16;
        w.write_all(&q.to_be_bytes())?;
    }
    drop(w);

    let sidecar = path.with_extension("pgm.csv");
    write_csv(
        &sidecar,
        "rows,cols,pitch_um,value_at_65535",
        &[vec![
            image.rows.to_string(),
            image.cols.to_string(),
            fmt(image.pitch_um),
            fmt(max),
        ]],
    )
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}
