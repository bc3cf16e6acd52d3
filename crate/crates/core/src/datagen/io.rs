use std::fs::File;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetMeta};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Sidecar {
    meta: DatasetMeta,
    row_ids: Vec<usize>,
}

/// `data.csv` → `data.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes one row per sample with the label last, plus a JSON sidecar
/// holding the metadata. Floats use shortest round-trip formatting.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| Error::io(path, e.into());

    let mut header: Vec<String> = (0..data.features.ncols()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    writer.write_record(&header).map_err(csv_err)?;
    let mut record = Vec::with_capacity(header.len());
    for (row, label) in data.features.rows().into_iter().zip(&data.labels) {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(label.to_string());
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;

    let sidecar = Sidecar {
        meta: data.meta.clone(),
        row_ids: data.row_ids.clone(),
    };
    let meta_path = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar).expect("metadata serializes");
    std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
}

/// Reads a dataset written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let meta_path = sidecar_path(path);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let sidecar: Sidecar =
        serde_json::from_str(&text).map_err(|e| Error::parse(meta_path.display().to_string(), e.to_string()))?;

    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let width = sidecar.meta.n_features;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(format!("row {i}"), e.to_string()))?;
        if record.len() != width + 1 {
            return Err(Error::parse(
                format!("row {i}"),
                format!("expected {} fields, found {}", width + 1, record.len()),
            ));
        }
        for field in record.iter().take(width) {
            values.push(
                field
                    .parse::<f64>()
                    .map_err(|e| Error::parse(format!("row {i}"), e.to_string()))?,
            );
        }
        labels.push(
            record[width]
                .parse::<usize>()
                .map_err(|e| Error::parse(format!("row {i} label"), e.to_string()))?,
        );
    }
    if sidecar.row_ids.len() != labels.len() {
        return Err(Error::shape("row ids", labels.len(), sidecar.row_ids.len()));
    }
    let features = Array2::from_shape_vec((labels.len(), width), values).expect("row widths checked");
    Ok(Dataset {
        features,
        labels,
        row_ids: sidecar.row_ids,
        meta: sidecar.meta,
    })
}
