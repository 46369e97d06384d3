//! `eval`: scores predicted curves against ground truth.
//!
//! Truth is either a single curve CSV or a dataset directory; predictions are
//! a curve CSV or a directory holding `<record id>.csv` for every evaluated
//! record. Output is CSV:
//!
//! * `mape`: one row per sample, `id,vf,storage,loss,storage_excluded,loss_excluded`
//! * `wmape`, `wmape-pointwise`, `mae`: one row per batch of `--batch-size`
//!   consecutive samples, `batch,vf,size,storage,loss`
//! * with `--group-by vf`: `vf,units,storage_mean,storage_std,loss_mean,loss_std`
//!   where units are samples (mape) or batches formed within each vf group
//!
//! Samples whose metric is undefined are written as NaN and left out of
//! group statistics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use vdma::dataset::{Manifest, Split, MANIFEST_FILE};
use vdma::metrics::{self, CurveBatch, MetricsError};
use vdma::DmaCurve;

use crate::{display, write_file, Error};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Wmape,
    /// Per-point relative errors summed over the batch
    WmapePointwise,
    Mae,
    Mape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Vf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Curve CSV or dataset directory
    #[arg(long)]
    truth: PathBuf,
    /// Curve CSV or directory of `<id>.csv`
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "wmape")]
    metric: Metric,
    #[arg(long, value_enum)]
    group_by: Option<GroupBy>,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: u64,
    /// Only evaluate dataset records of this split (train, val, test)
    #[arg(long, value_parser = parse_split_name)]
    split: Option<Split>,
    /// Skip translated copies
    #[arg(long)]
    base_only: bool,
    /// Truth magnitudes below this are excluded from per-sample MAPE
    #[arg(long, default_value_t = metrics::DEFAULT_MAPE_FLOOR)]
    mape_floor: f64,
    /// Output CSV (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_split_name(s: &str) -> Result<Split, String> {
    Split::parse(s).ok_or_else(|| format!("unknown split '{s}' (expected train, val or test)"))
}

struct Sample {
    id: String,
    vf: Option<f64>,
    truth: DmaCurve,
    pred: DmaCurve,
}

fn check_same_grid(s: &Sample) -> Result<(), Error> {
    let same = s.truth.omegas.len() == s.pred.omegas.len()
        && s.truth
            .omegas
            .iter()
            .zip(&s.pred.omegas)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs());
    if same {
        Ok(())
    } else {
        Err(format!("{}: prediction and truth use different pulsation grids", s.id).into())
    }
}

fn load_samples(args: &EvalArgs) -> Result<Vec<Sample>, Error> {
    if !args.truth.exists() {
        return Err(format!("file not found: {}", display(&args.truth)).into());
    }
    if !args.pred.exists() {
        return Err(format!("file not found: {}", display(&args.pred)).into());
    }
    let samples = if args.truth.is_dir() {
        if !args.pred.is_dir() {
            return Err("--pred must be a directory when --truth is a dataset".into());
        }
        if !args.truth.join(MANIFEST_FILE).exists() {
            return Err(format!("file not found: {}", display(&args.truth.join(MANIFEST_FILE))).into());
        }
        let manifest = Manifest::read(&args.truth)?;
        let mut out = Vec::new();
        for rec in &manifest.records {
            if args.split.is_some_and(|s| s != rec.split) || (args.base_only && rec.parent.is_some()) {
                continue;
            }
            let pred_path = args.pred.join(format!("{}.csv", rec.id));
            if !pred_path.exists() {
                return Err(format!("file not found: {}", display(&pred_path)).into());
            }
            out.push(Sample {
                id: rec.id.clone(),
                vf: Some(rec.vf_target),
                truth: manifest.load_curve(&args.truth, rec)?,
                pred: DmaCurve::read_csv(&pred_path)?,
            });
        }
        out
    } else {
        if args.pred.is_dir() {
            return Err("--pred must be a CSV file when --truth is a CSV file".into());
        }
        vec![Sample {
            id: stem(&args.truth),
            vf: None,
            truth: DmaCurve::read_csv(&args.truth)?,
            pred: DmaCurve::read_csv(&args.pred)?,
        }]
    };
    if samples.is_empty() {
        return Err("no records selected for evaluation".into());
    }
    for s in &samples {
        check_same_grid(s)?;
    }
    Ok(samples)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_vf(vf: Option<f64>) -> String {
    vf.map(fmt).unwrap_or_default()
}

/// Metric value for each modulus of one unit (a batch or a sample).
struct Unit {
    label: String,
    vf: Option<f64>,
    size: usize,
    storage: f64,
    loss: f64,
    excluded: (usize, usize),
}

fn batch_metric(metric: Metric, samples: &[&Sample]) -> Result<(f64, f64), MetricsError> {
    let f = match metric {
        Metric::Wmape => metrics::wmape,
        Metric::WmapePointwise => metrics::wmape_pointwise,
        Metric::Mae => metrics::mae,
        Metric::Mape => unreachable!("per-sample metric"),
    };
    let rows = |sel: fn(&DmaCurve) -> &Vec<f64>, which: fn(&Sample) -> &DmaCurve| {
        CurveBatch::from_rows(&samples.iter().map(|s| sel(which(s)).as_slice()).collect::<Vec<_>>())
    };
    let storage = f(&rows(|c| &c.storage, |s| &s.truth)?, &rows(|c| &c.storage, |s| &s.pred)?)?;
    let loss = f(&rows(|c| &c.loss, |s| &s.truth)?, &rows(|c| &c.loss, |s| &s.pred)?)?;
    Ok((storage, loss))
}

fn units(args: &EvalArgs, samples: &[Sample]) -> Result<Vec<Unit>, Error> {
    let mut out = Vec::new();
    if args.metric == Metric::Mape {
        for s in samples {
            let one = |t: &[f64], p: &[f64], what: &str| match metrics::mape_per_sample_with_floor(t, p, args.mape_floor) {
                Ok(m) => {
                    if !m.excluded.is_empty() {
                        log::warn!("{} {what}: {} point(s) below the MAPE floor excluded", s.id, m.excluded.len());
                    }
                    Ok((m.mape, m.excluded.len()))
                }
                Err(MetricsError::DegeneratePoint(idx)) => {
                    log::warn!("{} {what}: every truth value is below the MAPE floor", s.id);
                    Ok((f64::NAN, idx.len()))
                }
                Err(e) => Err(format!("{}: {e}", s.id)),
            };
            let (st, se) = one(&s.truth.storage, &s.pred.storage, "storage")?;
            let (lo, le) = one(&s.truth.loss, &s.pred.loss, "loss")?;
            out.push(Unit {
                label: s.id.clone(),
                vf: s.vf,
                size: s.truth.len(),
                storage: st,
                loss: lo,
                excluded: (se, le),
            });
        }
        return Ok(out);
    }

    // Batches are consecutive runs of samples, restarted at each vf group
    // when grouping so that no batch mixes groups.
    let key = |s: &Sample| match args.group_by {
        Some(GroupBy::Vf) => s.vf.map(|v| (v * 1e9).round() as i64),
        None => None,
    };
    let mut groups: Vec<(Option<i64>, Vec<&Sample>)> = Vec::new();
    for s in samples {
        let k = key(s);
        match groups.iter_mut().find(|g| g.0 == k) {
            Some(g) => g.1.push(s),
            None => groups.push((k, vec![s])),
        }
    }
    let mut index = 0;
    for (_, members) in &groups {
        for chunk in members.chunks(args.batch_size as usize) {
            let (storage, loss) = match batch_metric(args.metric, chunk) {
                Ok(v) => v,
                Err(MetricsError::DegenerateBatch(idx)) => {
                    log::warn!("batch {index}: truth sums to zero at points {idx:?}");
                    (f64::NAN, f64::NAN)
                }
                Err(e) => return Err(format!("batch {index}: {e}").into()),
            };
            let vf = chunk[0].vf.filter(|_| args.group_by.is_some());
            out.push(Unit {
                label: format!("batch{index}"),
                vf,
                size: chunk.len(),
                storage,
                loss,
                excluded: (0, 0),
            });
            index += 1;
        }
    }
    Ok(out)
}

fn render(args: &EvalArgs, units: &[Unit]) -> String {
    let mut s = String::new();
    if args.group_by.is_some() {
        s.push_str("vf,units,storage_mean,storage_std,loss_mean,loss_std\n");
        let pick = |f: fn(&Unit) -> f64| -> Vec<(f64, f64)> {
            units
                .iter()
                .filter(|u| f(u).is_finite())
                .map(|u| (u.vf.unwrap_or(f64::NAN), f(u)))
                .collect()
        };
        let storage = metrics::group_stats(&pick(|u| u.storage));
        let loss = metrics::group_stats(&pick(|u| u.loss));
        let mut keys: Vec<f64> = storage.iter().chain(&loss).map(|g| g.key).collect();
        keys.sort_by(f64::total_cmp);
        keys.dedup();
        for k in keys {
            let find = |gs: &[metrics::GroupStats]| {
                gs.iter()
                    .find(|g| g.key == k)
                    .map(|g| (g.mean, g.std, g.count))
                    .unwrap_or((f64::NAN, f64::NAN, 0))
            };
            let (sm, ss, sc) = find(&storage);
            let (lm, ls, lc) = find(&loss);
            let _ = writeln!(s, "{},{},{},{},{},{}", fmt(k), sc.max(lc), fmt(sm), fmt(ss), fmt(lm), fmt(ls));
        }
    } else if args.metric == Metric::Mape {
        s.push_str("id,vf,storage,loss,storage_excluded,loss_excluded\n");
        for u in units {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                u.label,
                fmt_vf(u.vf),
                fmt(u.storage),
                fmt(u.loss),
                u.excluded.0,
                u.excluded.1
            );
        }
    } else {
        s.push_str("batch,vf,size,storage,loss\n");
        for u in units {
            let _ = writeln!(s, "{},{},{},{},{}", u.label, fmt_vf(u.vf), u.size, fmt(u.storage), fmt(u.loss));
        }
    }
    s
}

pub fn run(args: &EvalArgs) -> Result<(), Error> {
    let samples = load_samples(args)?;
    if args.group_by.is_some() && samples.iter().any(|s| s.vf.is_none()) {
        return Err("--group-by vf needs a dataset as --truth".into());
    }
    let units = units(args, &samples)?;
    let csv = render(args, &units);
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            let mean = |f: fn(&Unit) -> f64| {
                let v: Vec<f64> = units.iter().map(f).filter(|x| x.is_finite()).collect();
                metrics::mean_std(&v)
            };
            let (sm, ss) = mean(|u| u.storage);
            let (lm, ls) = mean(|u| u.loss);
            println!(
                "{} samples, {} units: storage {sm:.6} ± {ss:.6}, loss {lm:.6} ± {ls:.6}; wrote {}",
                samples.len(),
                units.len(),
                display(path)
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}
