use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use preorder_rl::learner::run_episode;
use preorder_rl::stats::{bootstrap_ci, iqm, optimality_gap, prob_improvement};
use preorder_rl::{
    global_leaf_survivors, select, ComparatorConfig, ComparatorKind, LearnerMode, PreorderSpec, QuantileMatrix,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::artifacts::{self, seed_dir, CELL_FILE, EPISODES_FILE, TENSOR_FILE};
use crate::config::{ResolvedCell, RunConfig};
use crate::error::{CliError, Result};
use crate::svg::{bar_chart, Bar};

/// Generator for training (`stream 0`) or evaluation run `r` (`stream r + 1`).
pub fn run_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))
}

fn jobs_for<'a>(cells: &'a [ResolvedCell], seeds: &[u64]) -> Vec<(&'a ResolvedCell, u64)> {
    cells
        .iter()
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub cell: String,
    pub hash: String,
    pub seed: u64,
    pub dir: PathBuf,
    /// Success rate over the last tenth of training episodes.
    pub late_success: f64,
}

/// Trains every cell for every seed and writes `out/<hash>/<seed>/{tensor,episodes}.csv`.
pub fn train(cfg: &RunConfig, out: &Path, seeds: &[u64], jobs: usize) -> Result<Vec<TrainSummary>> {
    let cells = cfg.cells()?;
    for c in &cells {
        let text = serde_json::to_string_pretty(&serde_json::json!({
            "label": c.cell.label(),
            "cell": c.cell,
            "env": c.env,
            "preorder": c.preorder,
            "learner": cfg.learner,
            "episodes": cfg.episodes,
        }))
        .expect("cell serializes");
        artifacts::write_text(&out.join(&c.hash).join(CELL_FILE), &(text + "\n"))?;
    }
    let work = jobs_for(&cells, seeds);
    pool(jobs)?.install(|| {
        work.par_iter()
            .map(|&(c, seed)| {
                let env = c.env.build()?;
                let mut rng = run_rng(seed, 0);
                let trained = preorder_rl::train(&env, &c.learner, &c.graph, cfg.episodes, &mut rng)?;
                let dir = seed_dir(out, &c.hash, seed);
                artifacts::write_tensor(&dir.join(TENSOR_FILE), &trained.tensor)?;
                artifacts::write_episodes(&dir.join(EPISODES_FILE), &trained.log, env.n_objectives())?;
                let tail = &trained.log[trained.log.len() - (trained.log.len() / 10).max(1).min(trained.log.len())..];
                let late_success = if tail.is_empty() {
                    0.0
                } else {
                    tail.iter().filter(|r| r.success).count() as f64 / tail.len() as f64
                };
                Ok(TrainSummary {
                    cell: c.cell.label(),
                    hash: c.hash.clone(),
                    seed,
                    dir,
                    late_success,
                })
            })
            .collect()
    })
}

/// Metrics of one evaluation run (one seed, one run index).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub density: String,
    pub algorithm: String,
    pub hash: String,
    pub seed: u64,
    pub run: usize,
    pub sr: f64,
    pub cr: f64,
    pub or: f64,
    pub rp: f64,
    /// Mean undiscounted return per objective.
    pub returns: Vec<f64>,
}

fn eval_cell(cfg: &RunConfig, c: &ResolvedCell, out: &Path, seed: u64) -> Result<Vec<EvalRow>> {
    let env = c.env.build()?;
    let path = seed_dir(out, &c.hash, seed).join(TENSOR_FILE);
    let mut z = artifacts::read_tensor(
        &path,
        c.learner.n_heads(),
        env.n_states(),
        env.n_actions(),
        c.learner.n_quantiles,
    )?;
    let n = cfg.eval_episodes as f64;
    (0..cfg.eval_runs)
        .map(|run| {
            let mut rng = run_rng(seed, run as u64 + 1);
            let mut row = EvalRow {
                density: c.cell.density_label().to_string(),
                algorithm: c.cell.label(),
                hash: c.hash.clone(),
                seed,
                run,
                sr: 0.0,
                cr: 0.0,
                or: 0.0,
                rp: 0.0,
                returns: vec![0.0; env.n_objectives()],
            };
            for ep in 0..cfg.eval_episodes {
                let r = run_episode(&env, &mut z, &c.learner, &c.graph, 0.0, false, ep, &mut rng)?;
                row.sr += r.success as u8 as f64 / n;
                row.cr += r.collision as u8 as f64 / n;
                row.or += r.offroad as u8 as f64 / n;
                row.rp += r.progress / n;
                for (acc, v) in row.returns.iter_mut().zip(&r.returns) {
                    *acc += v / n;
                }
            }
            Ok(row)
        })
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// Per-cell aggregate over seeds × runs.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub density: String,
    pub algorithm: String,
    pub hash: String,
    pub n: usize,
    /// `(mean, std)` of SR, CR, OR, RP.
    pub sr: (f64, f64),
    pub cr: (f64, f64),
    pub or: (f64, f64),
    pub rp: (f64, f64),
    pub returns: Vec<(f64, f64)>,
}

pub fn summarize(rows: &[EvalRow]) -> Vec<CellSummary> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&EvalRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.density.clone(), r.hash.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let col = |f: &dyn Fn(&EvalRow) -> f64| mean_std(&g.iter().map(|r| f(r)).collect::<Vec<_>>());
            let n_obj = g[0].returns.len();
            CellSummary {
                density: key.0.clone(),
                algorithm: g[0].algorithm.clone(),
                hash: key.1.clone(),
                n: g.len(),
                sr: col(&|r| r.sr),
                cr: col(&|r| r.cr),
                or: col(&|r| r.or),
                rp: col(&|r| r.rp),
                returns: (0..n_obj).map(|i| col(&|r| r.returns[i])).collect(),
            }
        })
        .collect()
}

/// Evaluates every trained cell and writes `metrics.csv`, `summary.csv` and `scores.csv`.
pub fn evaluate(cfg: &RunConfig, out: &Path, seeds: &[u64], jobs: usize) -> Result<Vec<EvalRow>> {
    let cells = cfg.cells()?;
    let work = jobs_for(&cells, seeds);
    let rows: Vec<EvalRow> = pool(jobs)?
        .install(|| {
            work.par_iter()
                .map(|&(c, seed)| eval_cell(cfg, c, out, seed))
                .collect::<Result<Vec<_>>>()
        })?
        .into_iter()
        .flatten()
        .collect();
    let n_obj = cfg.preorder.n_objectives;

    let mut header: Vec<String> = ["density", "algorithm", "hash", "seed", "run", "sr", "cr", "or", "rp"]
        .map(String::from)
        .to_vec();
    header.extend((0..n_obj).map(|i| format!("return_{i}")));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.density.clone(),
                r.algorithm.clone(),
                r.hash.clone(),
                r.seed.to_string(),
                r.run.to_string(),
                r.sr.to_string(),
                r.cr.to_string(),
                r.or.to_string(),
                r.rp.to_string(),
            ];
            v.extend(r.returns.iter().map(|x| x.to_string()));
            v
        })
        .collect();
    artifacts::write_rows(&out.join("metrics.csv"), &header, &body)?;

    let summary = summarize(&rows);
    let mut header: Vec<String> = ["density", "algorithm", "hash", "n"].map(String::from).to_vec();
    for m in ["sr", "cr", "or", "rp"] {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    for i in 0..n_obj {
        header.push(format!("return_{i}_mean"));
        header.push(format!("return_{i}_std"));
    }
    let body: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            let mut v = vec![s.density.clone(), s.algorithm.clone(), s.hash.clone(), s.n.to_string()];
            for (m, sd) in [s.sr, s.cr, s.or, s.rp].into_iter().chain(s.returns.iter().copied()) {
                v.push(fmt(m));
                v.push(fmt(sd));
            }
            v
        })
        .collect();
    artifacts::write_rows(&out.join("summary.csv"), &header, &body)?;

    let scores: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let alg = if r.density == "-" {
                r.algorithm.clone()
            } else {
                format!("{}@{}", r.algorithm, r.density)
            };
            vec![alg, r.seed.to_string(), r.run.to_string(), r.sr.to_string()]
        })
        .collect();
    artifacts::write_rows(
        &out.join("scores.csv"),
        &["algorithm", "seed", "run", "score"].map(String::from),
        &scores,
    )?;
    Ok(rows)
}

pub fn render_summary(summary: &[CellSummary]) -> String {
    let mut s = String::new();
    let w = summary.iter().map(|c| c.algorithm.len()).max().unwrap_or(9).max(9);
    let _ = writeln!(
        s,
        "{:<7} {:<w$}  {:>15} {:>15} {:>15} {:>15}",
        "density", "algorithm", "SR", "CR", "OR", "RP"
    );
    for c in summary {
        let f = |(m, sd): (f64, f64)| format!("{m:.3} ± {sd:.3}");
        let _ = writeln!(
            s,
            "{:<7} {:<w$}  {:>15} {:>15} {:>15} {:>15}",
            c.density,
            c.algorithm,
            f(c.sr),
            f(c.cr),
            f(c.or),
            f(c.rp)
        );
    }
    s
}

/// Evaluates and writes the ablation table and the per-objective reward table.
pub fn compare(cfg: &RunConfig, out: &Path, seeds: &[u64], jobs: usize) -> Result<Vec<CellSummary>> {
    let rows = evaluate(cfg, out, seeds, jobs)?;
    let summary = summarize(&rows);
    let cells = cfg.cells()?;
    let by_hash: BTreeMap<&str, &ResolvedCell> = cells.iter().map(|c| (c.hash.as_str(), c)).collect();

    // ablation table, best per column within each density
    let mut best: BTreeMap<&str, [f64; 4]> = BTreeMap::new();
    for s in &summary {
        let b = best
            .entry(s.density.as_str())
            .or_insert([f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY]);
        b[0] = b[0].min(s.cr.0);
        b[1] = b[1].min(s.or.0);
        b[2] = b[2].max(s.sr.0);
        b[3] = b[3].max(s.rp.0);
    }
    let header = [
        "density",
        "policy",
        "comparator",
        "training_preorder",
        "epsilon",
        "partial_order",
        "cr",
        "or",
        "sr",
        "rp",
        "best",
    ]
    .map(String::from);
    let mut table = Vec::new();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<7} {:<16} {:<5} {:<3} {:<5} {:<3}  {:>8} {:>8} {:>8} {:>8}",
        "density", "policy", "cmp", "tp", "eps", "po", "CR", "OR", "SR", "RP"
    );
    for s in &summary {
        let c = &by_hash[s.hash.as_str()].cell;
        let b = best[s.density.as_str()];
        let vals = [s.cr.0, s.or.0, s.sr.0, s.rp.0];
        let flags: Vec<bool> = vals.iter().zip(b).map(|(v, b)| *v == b).collect();
        let names = ["CR", "OR", "SR", "RP"];
        let best_cols: Vec<&str> = names.iter().zip(&flags).filter(|(_, f)| **f).map(|(n, _)| *n).collect();
        let opt = |o: Option<String>| o.unwrap_or_else(|| "-".into());
        let row = vec![
            s.density.clone(),
            c.mode.label().to_string(),
            opt(c.comparator.map(|k| k.label().to_string())),
            opt(c.training_preorder.map(|t| (t as u8).to_string())),
            opt(c.epsilon.map(|e| e.to_string())),
            if c.mode != LearnerMode::Preorder {
                "-".into()
            } else {
                (c.partial_order as u8).to_string()
            },
            fmt(s.cr.0),
            fmt(s.or.0),
            fmt(s.sr.0),
            fmt(s.rp.0),
            best_cols.join(" "),
        ];
        let cellf = |i: usize| format!("{:.3}{}", vals[i], if flags[i] { "*" } else { " " });
        let _ = writeln!(
            text,
            "{:<7} {:<16} {:<5} {:<3} {:<5} {:<3}  {:>8} {:>8} {:>8} {:>8}",
            row[0],
            row[1],
            row[2],
            row[3],
            row[4],
            row[5],
            cellf(0),
            cellf(1),
            cellf(2),
            cellf(3)
        );
        table.push(row);
    }
    let _ = writeln!(text, "* best in column within the density block");
    artifacts::write_rows(&out.join("ablation.csv"), &header, &table)?;
    artifacts::write_text(&out.join("ablation.txt"), &text)?;

    // per-objective returns with relative change against the weighted sum
    let n_obj = cfg.preorder.n_objectives;
    let names: Vec<String> = (0..n_obj)
        .map(|i| cfg.preorder.names.get(i).cloned().unwrap_or_else(|| format!("r{i}")))
        .collect();
    let mut header = vec!["density".to_string(), "algorithm".to_string()];
    for n in &names {
        header.push(n.clone());
        header.push(format!("{n}_delta_pct"));
    }
    let mut rows_out = Vec::new();
    let mut text = String::new();
    for s in &summary {
        let ws = summary
            .iter()
            .find(|o| o.density == s.density && by_hash[o.hash.as_str()].cell.mode == LearnerMode::WeightedSum);
        let mut row = vec![s.density.clone(), s.algorithm.clone()];
        let mut line = format!("{:<7} {:<28}", s.density, s.algorithm);
        for i in 0..n_obj {
            let v = s.returns[i].0;
            let delta = ws.map(|w| w.returns[i].0).and_then(|w| {
                let d = (v - w) / w.abs() * 100.0;
                d.is_finite().then_some(d)
            });
            row.push(fmt(v));
            row.push(delta.map_or("n/a".into(), |d| format!("{d:.2}")));
            let _ = write!(
                line,
                " {:>9.4} ({:>8})",
                v,
                delta.map_or("n/a".into(), |d| format!("{d:+.1}%"))
            );
        }
        let _ = writeln!(text, "{line}");
        rows_out.push(row);
    }
    artifacts::write_rows(&out.join("rewards.csv"), &header, &rows_out)?;
    let mut head = format!("{:<7} {:<28}", "density", "algorithm");
    for n in &names {
        let _ = write!(head, " {:>20}", n);
    }
    artifacts::write_text(&out.join("rewards.txt"), &format!("{head}\n{text}"))?;

    let bars: Vec<Bar> = summary
        .iter()
        .map(|s| Bar {
            label: if s.density == "-" {
                s.algorithm.clone()
            } else {
                format!("{} @{}", s.algorithm, s.density)
            },
            value: s.sr.0,
            interval: Some((s.sr.0 - s.sr.1, s.sr.0 + s.sr.1)),
        })
        .collect();
    artifacts::write_text(&out.join("success_rate.svg"), &bar_chart("Success rate (mean ± std)", "SR", &bars))?;
    Ok(summary)
}

/// Survivor sets for standalone quantile matrices, one file per objective.
#[derive(Debug, Clone)]
pub struct SelectArgs {
    pub preorder: PreorderSpec,
    pub epsilon: f64,
    pub comparator: ComparatorKind,
    pub cvar_alpha: f64,
    pub mv_lambda: f64,
    pub quantiles: Vec<PathBuf>,
}

pub struct SelectOutput {
    pub survivors: Vec<Vec<usize>>,
    pub global: Vec<usize>,
    pub fallbacks: Vec<usize>,
    pub csv: String,
    pub debug: String,
}

pub fn select_cmd(args: &SelectArgs) -> Result<SelectOutput> {
    let g = args
        .preorder
        .build()
        .map_err(|e| CliError::Config(format!("preorder: {e}")))?;
    if args.quantiles.len() != g.n_objectives() {
        return Err(CliError::Shape(format!(
            "preorder has {} objectives but {} quantile files were given",
            g.n_objectives(),
            args.quantiles.len()
        )));
    }
    let mats: Vec<QuantileMatrix<f64>> = args
        .quantiles
        .iter()
        .map(|p| artifacts::read_quantile_csv(p))
        .collect::<Result<_>>()?;
    let cmp = match args.comparator {
        ComparatorKind::QuantileDominance => ComparatorConfig::qd(args.epsilon),
        ComparatorKind::CVaR => ComparatorConfig::cvar(args.epsilon, args.cvar_alpha),
        ComparatorKind::MeanVariance => ComparatorConfig::mean_variance(args.epsilon, args.mv_lambda),
    };
    cmp.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let cfgs = vec![cmp; g.n_objectives()];
    let st = select(&g, &mats, &cfgs).map_err(|e| match e {
        preorder_rl::Error::ShapeMismatch(m) => CliError::Shape(m),
        other => other.into(),
    })?;
    let global: Vec<usize> = global_leaf_survivors(&st, &g).into_iter().collect();
    let join = |v: &[usize]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
    let survivors: Vec<Vec<usize>> = st.survivors.iter().map(|s| s.iter().copied().collect()).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows = vec![["objective".to_string(), "actions".to_string()]];
    for (i, s) in survivors.iter().enumerate() {
        rows.push([i.to_string(), join(s)]);
    }
    rows.push(["global".to_string(), join(&global)]);
    for r in &rows {
        w.write_record(r).expect("in-memory write");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8");

    let mut debug = String::new();
    for i in 0..g.n_objectives() {
        let _ = writeln!(debug, "objective {i} dom {:?}", st.dom[i]);
        let _ = writeln!(debug, "objective {i} dom_by {:?}", st.dom_by[i]);
    }
    Ok(SelectOutput {
        survivors,
        global,
        fallbacks: st.fallbacks.iter().map(|o| o.0).collect(),
        csv,
        debug,
    })
}

#[derive(Debug, Clone)]
pub struct StatsArgs {
    pub scores: PathBuf,
    pub out: PathBuf,
    pub target: f64,
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

/// Writes `stats_summary.csv`, `improvement.csv` and `stats.svg` for a score file.
pub fn stats_cmd(args: &StatsArgs) -> Result<String> {
    let groups = artifacts::read_scores(&args.scores)?;
    if groups.is_empty() {
        return Err(CliError::Shape(format!("{}: no scores", args.scores.display())));
    }
    let mut rows = Vec::new();
    let mut bars = Vec::new();
    let mut text = String::new();
    let _ = writeln!(text, "{:<40} {:>4} {:>8} {:>19} {:>8}", "algorithm", "n", "IQM", "CI", "gap");
    for (i, (alg, s)) in groups.iter().enumerate() {
        let mut rng = run_rng(args.seed, i as u64);
        let m = iqm(s)?;
        let (lo, hi) = bootstrap_ci(iqm, s, args.resamples, args.confidence, &mut rng)?;
        let gap = optimality_gap(s, args.target)?;
        let (glo, ghi) = bootstrap_ci(
            |x| optimality_gap(x, args.target),
            s,
            args.resamples,
            args.confidence,
            &mut rng,
        )?;
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        rows.push(vec![
            alg.clone(),
            s.len().to_string(),
            fmt(mean),
            fmt(m),
            fmt(lo),
            fmt(hi),
            fmt(gap),
            fmt(glo),
            fmt(ghi),
        ]);
        let _ = writeln!(text, "{alg:<40} {:>4} {m:>8.4} [{lo:>8.4},{hi:>8.4}] {gap:>8.4}", s.len());
        bars.push(Bar {
            label: alg.clone(),
            value: m,
            interval: Some((lo, hi)),
        });
    }
    let header = ["algorithm", "n", "mean", "iqm", "iqm_lo", "iqm_hi", "optimality_gap", "gap_lo", "gap_hi"]
        .map(String::from);
    artifacts::write_rows(&args.out.join("stats_summary.csv"), &header, &rows)?;

    let mut pairs = Vec::new();
    for (x, xs) in &groups {
        for (y, ys) in &groups {
            if x != y {
                pairs.push(vec![x.clone(), y.clone(), fmt(prob_improvement(xs, ys)?)]);
            }
        }
    }
    artifacts::write_rows(
        &args.out.join("improvement.csv"),
        &["x", "y", "prob_improvement"].map(String::from),
        &pairs,
    )?;
    artifacts::write_text(&args.out.join("stats.svg"), &bar_chart("IQM with bootstrap CI", "score", &bars))?;
    Ok(text)
}
