use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentKind, ExperimentSpec, RunResult};
use crate::error::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SURFACE_FILE: &str = "surface.csv";
pub const SPEC_FILE: &str = "spec.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub dimensionality: usize,
    pub sparsity: f64,
    pub n: usize,
    pub mean_train: f64,
    pub std_train: f64,
    pub mean_test: f64,
    pub std_test: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SummaryRow>,
}

impl SweepTable {
    pub fn get(&self, model: &str, dimensionality: usize, sparsity: f64) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.dimensionality == dimensionality && r.sparsity == sparsity)
    }
}

/// RBM − LR mean accuracy differences for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub dimensionality: usize,
    pub sparsity: f64,
    pub train_diff: f64,
    pub test_diff: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups by (model, dimensionality, sparsity); sample std with an n − 1
/// denominator. Rows are sorted by the group key, so input order does not
/// matter.
pub fn aggregate(results: &[RunResult]) -> Result<SweepTable> {
    if results.is_empty() {
        return Err(Error::Domain("nothing to aggregate".into()));
    }
    let mut groups: BTreeMap<(String, usize, u64), Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        // sparsities are non-negative, so bit order matches numeric order
        groups
            .entry((r.model.clone(), r.dimensionality, r.sparsity.to_bits()))
            .or_default()
            .push(r);
    }
    let rows = groups
        .into_iter()
        .map(|((model, dimensionality, sparsity), mut runs)| {
            runs.sort_by_key(|r| r.repetition);
            let train: Vec<f64> = runs.iter().map(|r| r.train_acc).collect();
            let test: Vec<f64> = runs.iter().map(|r| r.test_acc).collect();
            let (mean_train, std_train) = mean_std(&train);
            let (mean_test, std_test) = mean_std(&test);
            SummaryRow {
                model,
                dimensionality,
                sparsity: f64::from_bits(sparsity),
                n: runs.len(),
                mean_train,
                std_train,
                mean_test,
                std_test,
            }
        })
        .collect();
    Ok(SweepTable { rows })
}

pub fn surface(table: &SweepTable) -> Vec<SurfaceRow> {
    table
        .rows
        .iter()
        .filter(|r| r.model == "RBM")
        .filter_map(|rbm| {
            let lr = table.get("LR", rbm.dimensionality, rbm.sparsity)?;
            Some(SurfaceRow {
                dimensionality: rbm.dimensionality,
                sparsity: rbm.sparsity,
                train_diff: rbm.mean_train - lr.mean_train,
                test_diff: rbm.mean_test - lr.mean_test,
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct ResultRecord {
    model: String,
    experiment: String,
    dimensionality: usize,
    sparsity: f64,
    repetition: usize,
    train_acc: f64,
    test_acc: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct TimingRecord {
    model: String,
    dimensionality: usize,
    sparsity: f64,
    repetition: usize,
    wall_time_s: f64,
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let err = |e: csv::Error| Error::io(path, e.into());
    writer.write_record(header).map_err(err)?;
    for row in rows {
        writer.serialize(row).map_err(err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Writes results.csv, timings.csv, summary.csv, surface.csv (when
/// non-empty) and spec.json into `out_dir`, creating it if needed.
///
/// Wall times live in timings.csv so that results.csv depends only on the
/// spec.
pub fn emit(
    spec: &ExperimentSpec,
    results: &[RunResult],
    table: &SweepTable,
    surface: &[SurfaceRow],
    out_dir: &Path,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_rows(
        &out_dir.join(RESULTS_FILE),
        &["model", "experiment", "dimensionality", "sparsity", "repetition", "train_acc", "test_acc", "seed"],
        results.iter().map(|r| ResultRecord {
            model: r.model.clone(),
            experiment: r.experiment.name().to_string(),
            dimensionality: r.dimensionality,
            sparsity: r.sparsity,
            repetition: r.repetition,
            train_acc: r.train_acc,
            test_acc: r.test_acc,
            seed: r.seed,
        }),
    )?;
    write_rows(
        &out_dir.join(TIMINGS_FILE),
        &["model", "dimensionality", "sparsity", "repetition", "wall_time_s"],
        results.iter().map(|r| TimingRecord {
            model: r.model.clone(),
            dimensionality: r.dimensionality,
            sparsity: r.sparsity,
            repetition: r.repetition,
            wall_time_s: r.wall_time_s,
        }),
    )?;
    write_rows(
        &out_dir.join(SUMMARY_FILE),
        &["model", "dimensionality", "sparsity", "n", "mean_train", "std_train", "mean_test", "std_test"],
        &table.rows,
    )?;
    if !surface.is_empty() {
        write_rows(
            &out_dir.join(SURFACE_FILE),
            &["dimensionality", "sparsity", "train_diff", "test_diff"],
            surface,
        )?;
    }
    let spec_path = out_dir.join(SPEC_FILE);
    let json = serde_json::to_string_pretty(spec).expect("spec serializes");
    fs::write(&spec_path, json + "\n").map_err(|e| Error::io(&spec_path, e))
}

/// Parses results.csv (and timings.csv when present) back into run results.
pub fn read_results(out_dir: &Path) -> Result<Vec<RunResult>> {
    let path = out_dir.join(RESULTS_FILE);
    let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::io(&path, e.into()))?;
    let mut results = Vec::new();
    for (i, record) in reader.deserialize::<ResultRecord>().enumerate() {
        let r = record.map_err(|e| Error::parse(format!("{RESULTS_FILE} row {i}"), e.to_string()))?;
        results.push(RunResult {
            model: r.model,
            experiment: ExperimentKind::parse(&r.experiment)?,
            dimensionality: r.dimensionality,
            sparsity: r.sparsity,
            repetition: r.repetition,
            train_acc: r.train_acc,
            test_acc: r.test_acc,
            seed: r.seed,
            wall_time_s: 0.0,
        });
    }

    let timings = out_dir.join(TIMINGS_FILE);
    if timings.exists() {
        let mut reader = csv::Reader::from_path(&timings).map_err(|e| Error::io(&timings, e.into()))?;
        for (i, record) in reader.deserialize::<TimingRecord>().enumerate() {
            let t = record.map_err(|e| Error::parse(format!("{TIMINGS_FILE} row {i}"), e.to_string()))?;
            let r = results
                .get_mut(i)
                .ok_or_else(|| Error::parse(TIMINGS_FILE, "more rows than results.csv"))?;
            if r.model != t.model || r.repetition != t.repetition {
                return Err(Error::parse(format!("{TIMINGS_FILE} row {i}"), "does not match results.csv"));
            }
            r.wall_time_s = t.wall_time_s;
        }
    }
    Ok(results)
}
