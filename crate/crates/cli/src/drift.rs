use std::fs;
use std::path::PathBuf;

use adapt_core::drift::{fdd, otdd, DriftOptions};
use adapt_core::io::{load_manifest, Split};
use rayon::prelude::*;
use serde::Serialize;

use crate::{config_hash, failed, invalid, load_model, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRequest {
    pub manifest: PathBuf,
    /// Trained mlp used for the feature-space distance.
    pub model: Option<PathBuf>,
    /// Require an `fdd` column.
    pub fdd: bool,
    pub options: DriftOptions,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftRow {
    pub period_id: i64,
    pub split: Split,
    pub otdd: f64,
    pub fdd: Option<f64>,
}

#[derive(Serialize)]
struct DriftKey<'a> {
    manifest: &'a PathBuf,
    model_checksum: Option<String>,
    options: DriftOptions,
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Validation => "validation",
        Split::Test => "test",
    }
}

/// Distance of every period from the pooled train periods, written as
/// `period,split,otdd[,fdd]` rows.
pub fn cmd_drift(req: &DriftRequest) -> CliResult<Vec<DriftRow>> {
    if req.fdd && req.model.is_none() {
        return Err(invalid("fdd requested but no model given"));
    }
    let manifest = load_manifest(&req.manifest).map_err(invalid)?;
    let model = req.model.as_deref().map(load_model).transpose()?;
    let splits = manifest.load_splits().map_err(invalid)?;
    if splits.train.is_empty() {
        return Err(invalid(format!("{}: no train periods", req.manifest.display())));
    }
    let all = manifest.load_all().map_err(invalid)?;
    let base = splits.train.features();

    let rows: Vec<DriftRow> = manifest
        .periods
        .par_iter()
        .zip(all.partitions())
        .map(|(entry, part)| {
            let probe = part.data.features();
            let ctx = |e: adapt_core::Error| failed(format!("period {}: {e}", entry.period_id));
            Ok(DriftRow {
                period_id: entry.period_id,
                split: entry.split,
                otdd: otdd(base, probe, &req.options).map_err(ctx)?,
                fdd: model
                    .as_ref()
                    .map(|m| fdd(m, base, probe, &req.options))
                    .transpose()
                    .map_err(ctx)?,
            })
        })
        .collect::<CliResult<_>>()?;

    let hash = config_hash(&DriftKey {
        manifest: &req.manifest,
        model_checksum: model.as_ref().map(|m| m.checksum()).transpose().map_err(failed)?,
        options: req.options,
    })?;
    let mut buf = format!("# config_hash: {hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut head = vec!["period", "split", "otdd"];
        if model.is_some() {
            head.push("fdd");
        }
        w.write_record(&head).map_err(failed)?;
        for r in &rows {
            let mut rec = vec![r.period_id.to_string(), split_name(r.split).into(), r.otdd.to_string()];
            if let Some(f) = r.fdd {
                rec.push(f.to_string());
            }
            w.write_record(&rec).map_err(failed)?;
        }
        w.flush().map_err(failed)?;
    }
    if let Some(dir) = req.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| failed(format!("{}: {e}", dir.display())))?;
    }
    fs::write(&req.out, buf).map_err(|e| failed(format!("{}: {e}", req.out.display())))?;
    Ok(rows)
}
