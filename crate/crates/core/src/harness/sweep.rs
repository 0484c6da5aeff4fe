use std::path::{Path, PathBuf};

use rayon::prelude::*;
use toml::Value;

use super::run::{run, write_record};
use super::{report, HarnessError, RunConfig};

/// One `key=v1,v2,...` grid argument. `key` is a dotted path into the config;
/// numeric segments index arrays (`agent.channels.0.gate.alpha`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<Value>,
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

pub fn parse_grid(args: &[String]) -> Result<Vec<GridAxis>, HarnessError> {
    args.iter()
        .map(|arg| {
            let bad = |reason: &str| HarnessError::BadGridKey { key: arg.clone(), reason: reason.into() };
            let (key, values) = arg.split_once('=').ok_or_else(|| bad("expected key=v1,v2,..."))?;
            let key = key.trim();
            if key.is_empty() || key.split('.').any(str::is_empty) {
                return Err(bad("empty path segment"));
            }
            let values: Vec<Value> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(parse_value).collect();
            if values.is_empty() {
                return Err(bad("no values"));
            }
            Ok(GridAxis { key: key.to_string(), values })
        })
        .collect()
}

/// Sets `key` in a config tree. The parent of the final segment must exist.
pub fn apply_override(root: &mut Value, key: &str, value: Value) -> Result<(), HarnessError> {
    let bad = |reason: String| HarnessError::BadGridKey { key: key.to_string(), reason };
    let segments: Vec<&str> = key.split('.').collect();
    let (last, parents) = segments.split_last().expect("split yields at least one segment");
    let mut node = root;
    for seg in parents {
        node = match node {
            Value::Table(t) => t.get_mut(*seg).ok_or_else(|| bad(format!("no field {seg}")))?,
            Value::Array(a) => {
                let i: usize = seg.parse().map_err(|_| bad(format!("{seg} is not an array index")))?;
                a.get_mut(i).ok_or_else(|| bad(format!("index {i} out of range")))?
            }
            _ => return Err(bad(format!("{seg} is below a scalar"))),
        };
    }
    match node {
        Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        Value::Array(a) => {
            let i: usize = last.parse().map_err(|_| bad(format!("{last} is not an array index")))?;
            *a.get_mut(i).ok_or_else(|| bad(format!("index {i} out of range")))? = value;
        }
        _ => return Err(bad(format!("{last} is below a scalar"))),
    }
    Ok(())
}

/// Expands a base config over the Cartesian product of `axes`.
///
/// Cell `i` writes to `<output_dir>/cell-<i>` and, unless the grid sets
/// `seed` itself, runs with `seed + i`. An empty grid gives one cell.
pub fn sweep(base: &RunConfig, axes: &[GridAxis]) -> Result<Vec<RunConfig>, HarnessError> {
    let base_value = Value::try_from(base).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let seeds_from_grid = axes.iter().any(|a| a.key == "seed");
    let mut cells = Vec::with_capacity(total);
    for i in 0..total {
        let mut v = base_value.clone();
        let mut rest = i;
        for axis in axes.iter().rev() {
            let n = axis.values.len();
            apply_override(&mut v, &axis.key, axis.values[rest % n].clone())?;
            rest /= n;
        }
        let mut cfg = RunConfig::from_value(v).map_err(|e| match e {
            HarnessError::ConfigInvalid(msg) => match axes.iter().find(|a| {
                let last = a.key.rsplit('.').next().unwrap_or(&a.key);
                msg.contains(&format!("unknown field `{last}`"))
            }) {
                Some(a) => HarnessError::BadGridKey { key: a.key.clone(), reason: msg },
                None => HarnessError::ConfigInvalid(msg),
            },
            other => other,
        })?;
        if !seeds_from_grid {
            cfg.seed = base.seed.wrapping_add(i as u64);
        }
        cfg.output_dir = Some(format!("{}/cell-{i:03}", base.output_dir()));
        cells.push(cfg);
    }
    Ok(cells)
}

/// Runs every cell in parallel, writes the records and a `metrics.csv` for
/// the sweep. Returns the sweep directory.
pub fn sweep_and_write(base: &RunConfig, axes: &[GridAxis], root: &Path) -> Result<PathBuf, HarnessError> {
    let cells = sweep(base, axes)?;
    let records = cells.par_iter().map(run).collect::<Result<Vec<_>, _>>()?;
    for (cfg, record) in cells.iter().zip(&records) {
        write_record(&root.join(cfg.output_dir()), record)?;
    }
    let dir = root.join(base.output_dir());
    report(&dir)?;
    Ok(dir)
}
