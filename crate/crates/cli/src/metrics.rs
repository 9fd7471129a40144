//! Metrics CSV: one row per update, append-safe, readable mid-run.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use ppgl_core::harness::MetricsRow;

pub const HEADER: &str =
    "update,timesteps,mean_reward,policy_loss,value_loss,entropy,clip_frac,approx_kl,aux_loss,seconds";

/// Serialize one row. Floats use shortest-roundtrip formatting; absent
/// optional fields serialize as empty.
pub fn format_row(row: &MetricsRow) -> String {
    let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        row.update,
        row.timesteps,
        opt(&row.mean_reward),
        row.policy_loss,
        row.value_loss,
        row.entropy,
        row.clip_frac,
        row.approx_kl,
        opt(&row.aux_loss),
        row.seconds,
    )
}

pub fn parse_row(line: &str) -> Result<MetricsRow> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 10 {
        bail!("metrics row has {} fields, expected 10: '{line}'", fields.len());
    }
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            Ok(Some(s.parse::<f64>()?))
        }
    };
    Ok(MetricsRow {
        update: fields[0].parse()?,
        timesteps: fields[1].parse()?,
        mean_reward: opt(fields[2])?,
        policy_loss: fields[3].parse()?,
        value_loss: fields[4].parse()?,
        entropy: fields[5].parse()?,
        clip_frac: fields[6].parse()?,
        approx_kl: fields[7].parse()?,
        aux_loss: opt(fields[8])?,
        seconds: fields[9].parse()?,
    })
}

/// Incremental writer: full lines only, flushed per row, so a concurrent
/// reader (the plot subcommand) never sees a torn write.
pub struct CsvWriter {
    file: File,
}

impl CsvWriter {
    /// Start a fresh file with just the header.
    pub fn create(path: &Path) -> Result<CsvWriter> {
        let mut file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        writeln!(file, "{HEADER}")?;
        file.flush()?;
        Ok(CsvWriter { file })
    }

    /// Resume an existing file: keep rows up to `through_update`, drop the
    /// rest, and append from there.
    pub fn resume(path: &Path, through_update: u64) -> Result<CsvWriter> {
        let rows = read_rows(path)?;
        let mut file =
            File::create(path).with_context(|| format!("cannot rewrite {}", path.display()))?;
        writeln!(file, "{HEADER}")?;
        for row in rows.iter().filter(|r| r.update <= through_update) {
            writeln!(file, "{}", format_row(row))?;
        }
        file.flush()?;
        drop(file);
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .with_context(|| format!("cannot reopen {}", path.display()))?;
        Ok(CsvWriter { file })
    }

    pub fn write(&mut self, row: &MetricsRow) -> std::io::Result<()> {
        writeln!(self.file, "{}", format_row(row))?;
        self.file.flush()
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<MetricsRow>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h == HEADER => {}
        Some(Ok(h)) => bail!("unexpected metrics header '{h}'"),
        _ => bail!("empty metrics file"),
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        rows.push(parse_row(&line)?);
    }
    Ok(rows)
}
