//! Report serialization: content hashes, CSV tables, gnuplot columns.

use sha2::{Digest, Sha256};

use crate::scene::Geometry;
use crate::Result;

use super::chunked::EvalReport;
use super::sweeps::SweepPoint;

/// Short content hash of a geometry, stable across runs, so a report names
/// the exact device layout it was measured on.
pub fn geometry_hash(geometry: &Geometry) -> String {
    let canonical = serde_json::to_string(geometry).expect("geometry serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    hex_prefix(&digest, 16)
}

/// Hex content hash of an arbitrary report body (the CLI embeds this next
/// to the resolved configuration).
pub fn content_hash(body: &str) -> String {
    hex_prefix(&Sha256::digest(body.as_bytes()), 16)
}

fn hex_prefix(digest: &[u8], chars: usize) -> String {
    let mut out = String::with_capacity(chars);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
        if out.len() >= chars {
            break;
        }
    }
    out.truncate(chars);
    out
}

/// One row per chunk of each report.
pub fn chunks_csv(labels: &[String], reports: &[EvalReport]) -> Result<String> {
    assert_eq!(labels.len(), reports.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "mode", "chunk", "reduction_db", "geometry"])
        .map_err(csv_error)?;
    for (label, report) in labels.iter().zip(reports) {
        for (i, chunk) in report.chunks_db.iter().enumerate() {
            w.write_record([
                label.as_str(),
                report.mode.as_str(),
                &i.to_string(),
                &format!("{chunk:.6}"),
                &report.provenance.geometry_hash,
            ])
            .map_err(csv_error)?;
        }
    }
    finish_csv(w)
}

/// One row per (axis point, scene) plus the point aggregate.
pub fn sweep_csv(points: &[SweepPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["axis", "label", "scene", "scene_mean_db", "point_mean_db"])
        .map_err(csv_error)?;
    for p in points {
        for (scene, report) in p.scene_names.iter().zip(&p.reports) {
            w.write_record([
                &format!("{}", p.axis),
                p.label.as_str(),
                scene.as_str(),
                &format!("{:.6}", report.mean_db),
                &format!("{:.6}", p.mean_db),
            ])
            .map_err(csv_error)?;
        }
    }
    finish_csv(w)
}

/// Gnuplot-ready columns: axis, mean, spread over scenes.
pub fn plot_data(points: &[SweepPoint]) -> String {
    let mut out = String::from("# axis mean_db std_db\n");
    for p in points {
        out.push_str(&format!("{} {:.6} {:.6}\n", p.axis, p.mean_db, p.std_db));
    }
    out
}

fn csv_error(e: csv::Error) -> crate::Error {
    crate::Error::format(format!("csv serialization failed: {e}"))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| crate::Error::format(format!("csv serialization failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| crate::Error::format(format!("csv not utf-8: {e}")))
}
