//! CSV emission. Every file starts with a `# config-hash:` comment, then any
//! metadata comments, then a header row.

use std::io::Write;

use crate::error::Result;
use crate::eulerian::StepRecord;
use crate::illposedness::SeparationSeries;

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Columns `k, input_gap, output_gap, <aux…>, flags`.
pub fn write_series(out: &mut impl Write, series: &SeparationSeries, config_hash: &str) -> Result<()> {
    writeln!(out, "# config-hash: {config_hash}")?;
    writeln!(out, "# series: {}", series.name)?;
    for (k, v) in &series.metadata {
        writeln!(out, "# {k} = {v}")?;
    }
    match series.truncated_at {
        Some(k) => writeln!(out, "# truncated_at = {k}")?,
        None => writeln!(out, "# truncated_at = none")?,
    }
    writeln!(out, "# resolution_watermark_cells = {}", num(series.watermark))?;
    let mut header = vec!["k".to_string(), "input_gap".into(), "output_gap".into()];
    header.extend(series.aux_names.iter().cloned());
    header.push("flags".into());
    writeln!(out, "{}", header.join(","))?;
    for row in &series.rows {
        let mut cols = vec![row.k.to_string(), num(row.input_gap), num(row.output_gap)];
        cols.extend(row.aux.iter().map(|v| num(*v)));
        cols.push(csv_field(&row.flags));
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

/// Columns `t, energy, hs_norm, div_drift`.
pub fn write_records(out: &mut impl Write, records: &[StepRecord], config_hash: &str) -> Result<()> {
    writeln!(out, "# config-hash: {config_hash}")?;
    writeln!(out, "t,energy,hs_norm,div_drift")?;
    for r in records {
        writeln!(out, "{},{},{},{}", num(r.t), num(r.energy), num(r.hs_norm), num(r.div_drift))?;
    }
    Ok(())
}

/// Generic table with named columns.
pub fn write_table(out: &mut impl Write, columns: &[&str], rows: &[Vec<f64>], config_hash: &str) -> Result<()> {
    writeln!(out, "# config-hash: {config_hash}")?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","))?;
    }
    Ok(())
}
