//! On-disk formats. Every writer emits rows in a fixed order and formats
//! floats with the shortest round-trip representation, so reruns are
//! byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use preorder_rl::{EpisodeRecord, QuantileMatrix, QuantileTensor};

use crate::error::{CliError, Result};

pub const TENSOR_FILE: &str = "tensor.csv";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const CELL_FILE: &str = "cell.json";

pub fn seed_dir(out: &Path, hash: &str, seed: u64) -> PathBuf {
    out.join(hash).join(seed.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    csv::Writer::from_path(path).map_err(CliError::csv(path))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(CliError::io(path))
}

/// Writes `rows` (header first) as CSV.
pub fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(CliError::csv(path))?;
    for r in rows {
        w.write_record(r).map_err(CliError::csv(path))?;
    }
    finish(w, path)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, text).map_err(CliError::io(path))
}

/// Flat `objective,state,action,k,value` rows for every written state.
pub fn write_tensor(path: &Path, z: &QuantileTensor<f64>) -> Result<()> {
    let mut w = writer(path)?;
    let err = CliError::csv(path);
    let mut res = w.write_record(["objective", "state", "action", "k", "value"]);
    'outer: for s in z.touched_states() {
        for h in 0..z.n_heads() {
            for a in 0..z.n_actions() {
                let q = z.quantiles(h, s, a).expect("touched state");
                for (k, v) in q.iter().enumerate() {
                    res = w.write_record([h.to_string(), s.to_string(), a.to_string(), k.to_string(), v.to_string()]);
                    if res.is_err() {
                        break 'outer;
                    }
                }
            }
        }
    }
    res.map_err(err)?;
    finish(w, path)
}

pub fn read_tensor(
    path: &Path,
    n_heads: usize,
    n_states: usize,
    n_actions: usize,
    n_quantiles: usize,
) -> Result<QuantileTensor<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let mut z = QuantileTensor::new(n_heads, n_states, n_actions, n_quantiles);
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(CliError::csv(path))?;
        let bad = || CliError::Shape(format!("{}: malformed row {}", path.display(), line + 2));
        if rec.len() != 5 {
            return Err(bad());
        }
        let idx: Vec<usize> = (0..4)
            .map(|i| rec[i].parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let value: f64 = rec[4].parse().map_err(|_| bad())?;
        let (h, s, a, k) = (idx[0], idx[1], idx[2], idx[3]);
        if h >= n_heads || s >= n_states || a >= n_actions || k >= n_quantiles {
            return Err(CliError::Shape(format!(
                "{}: row {} indexes outside a {n_heads}x{n_states}x{n_actions}x{n_quantiles} tensor",
                path.display(),
                line + 2
            )));
        }
        z.quantiles_mut(h, s, a)[k] = value;
    }
    Ok(z)
}

pub fn episode_header(n_objectives: usize) -> Vec<String> {
    let mut h = vec!["episode".to_string()];
    h.extend((0..n_objectives).map(|i| format!("return_{i}")));
    h.extend(["success", "collision", "offroad", "progress", "steps"].map(String::from));
    h
}

pub fn episode_row(r: &EpisodeRecord) -> Vec<String> {
    let mut row = vec![r.episode.to_string()];
    row.extend(r.returns.iter().map(|v| v.to_string()));
    row.extend([
        (r.success as u8).to_string(),
        (r.collision as u8).to_string(),
        (r.offroad as u8).to_string(),
        r.progress.to_string(),
        r.steps.to_string(),
    ]);
    row
}

pub fn write_episodes(path: &Path, log: &[EpisodeRecord], n_objectives: usize) -> Result<()> {
    let rows: Vec<Vec<String>> = log.iter().map(episode_row).collect();
    write_rows(path, &episode_header(n_objectives), &rows)
}

/// Reads a `tau,a0,a1,...` quantile matrix.
pub fn read_quantile_csv(path: &Path) -> Result<QuantileMatrix<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let header = r.headers().map_err(CliError::csv(path))?.clone();
    if header.len() < 2 || &header[0] != "tau" {
        return Err(CliError::Shape(format!(
            "{}: expected header tau,a0,a1,...",
            path.display()
        )));
    }
    let mut fractions = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => {
                CliError::Shape(format!("{}: row {} has the wrong width", path.display(), line + 2))
            }
            _ => CliError::csv(path)(e),
        })?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| {
                f.trim().parse().map_err(|_| {
                    CliError::Shape(format!("{}: row {}: not a number: {f:?}", path.display(), line + 2))
                })
            })
            .collect::<Result<_>>()?;
        fractions.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    QuantileMatrix::from_rows(fractions, rows)
        .map_err(|e| CliError::Shape(format!("{}: {e}", path.display())))
}

/// Writes a matrix in the `tau,a0,...` layout.
pub fn write_quantile_csv(path: &Path, m: &QuantileMatrix<f64>) -> Result<()> {
    let mut header = vec!["tau".to_string()];
    header.extend((0..m.n_actions()).map(|a| format!("a{a}")));
    let rows: Vec<Vec<String>> = (0..m.fractions().len())
        .map(|k| {
            let mut r = vec![m.fractions()[k].to_string()];
            r.extend(m.row(k).iter().map(|v| v.to_string()));
            r
        })
        .collect();
    write_rows(path, &header, &rows)
}

/// Score rows `algorithm,seed,run,score`, grouped by algorithm in first-seen order.
pub fn read_scores(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let header = r.headers().map_err(CliError::csv(path))?.clone();
    if header.iter().collect::<Vec<_>>() != ["algorithm", "seed", "run", "score"] {
        return Err(CliError::Shape(format!(
            "{}: expected header algorithm,seed,run,score",
            path.display()
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(CliError::csv(path))?;
        let score: f64 = rec[3]
            .parse()
            .map_err(|_| CliError::Shape(format!("{}: row {}: bad score", path.display(), line + 2)))?;
        let alg = rec[0].to_string();
        if !groups.contains_key(&alg) {
            order.push(alg.clone());
        }
        groups.entry(alg).or_default().push(score);
    }
    Ok(order
        .into_iter()
        .map(|a| {
            let v = groups.remove(&a).unwrap_or_default();
            (a, v)
        })
        .collect())
}
