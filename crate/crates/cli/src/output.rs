//! CSV tables with a JSON metadata sidecar sharing the same basename.

use scramble_core::{SpaceTimeField, VERSION};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Long format: one row per (site, time), with a stderr column when present.
    pub fn from_field(field: &SpaceTimeField) -> Self {
        let mut cols = vec!["site", "time", "value"];
        if field.stderr.is_some() {
            cols.push("stderr");
        }
        let mut t = Table::new(&cols);
        for i in 0..field.num_sites() {
            for j in 0..field.num_times() {
                let mut row = vec![num(field.sites[i]), num(field.times[j]), num(field.get(i, j))];
                if let Some(e) = field.error(i, j) {
                    row.push(num(e));
                }
                t.push(row);
            }
        }
        t
    }
}

/// Shortest round-trip decimal form, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub struct Run {
    pub command: &'static str,
    pub dir: PathBuf,
    pub stem: String,
    pub seed: u64,
    started: Instant,
}

impl Run {
    pub fn new(command: &'static str, dir: &Path, stem: Option<&str>, seed: u64) -> Self {
        Self {
            command,
            dir: dir.to_path_buf(),
            stem: stem.unwrap_or(command).to_string(),
            seed,
            started: Instant::now(),
        }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(format!("{}.csv", self.stem))
    }

    pub fn json_path(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.stem))
    }

    /// Writes both files and returns the metadata that went into the sidecar.
    pub fn finish(
        self,
        config: &impl Serialize,
        method: &str,
        units: &str,
        table: &Table,
        results: Value,
    ) -> std::io::Result<Value> {
        fs::create_dir_all(&self.dir)?;
        let mut w = csv::Writer::from_path(self.csv_path())?;
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        let meta = json!({
            "version": VERSION,
            "command": self.command,
            "method": method,
            "seed": self.seed,
            "config": serde_json::to_value(config).unwrap_or(Value::Null),
            "columns": table.columns,
            "units": units,
            "csv": self.csv_path().file_name().map(|f| f.to_string_lossy().into_owned()),
            "timings": { "total_seconds": self.started.elapsed().as_secs_f64() },
            "results": results,
        });
        fs::write(self.json_path(), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(meta)
    }
}

/// Reads a long-format field written by [`Table::from_field`].
pub fn read_field(path: &Path) -> Result<SpaceTimeField, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(si), Some(ti), Some(vi)) = (col("site"), col("time"), col("value")) else {
        return Err(format!("{}: expected columns site,time,value", path.display()));
    };
    let mut triples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let parse = |i: usize| rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| format!("row {rec:?}: {e}"));
        triples.push((parse(si)?, parse(ti)?, parse(vi)?));
    }
    let mut sites: Vec<f64> = triples.iter().map(|t| t.0).collect();
    let mut times: Vec<f64> = triples.iter().map(|t| t.1).collect();
    for v in [&mut sites, &mut times] {
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
    }
    if sites.len() * times.len() != triples.len() {
        return Err(format!("{}: rows do not form a full site × time grid", path.display()));
    }
    let mut field = SpaceTimeField::zeros(sites, times, "csv");
    for (s, t, v) in triples {
        let i = field.sites.partition_point(|x| *x < s);
        let j = field.times.partition_point(|x| *x < t);
        field.set(i, j, v);
    }
    Ok(field)
}
