//! Time-series CSV and VTK field snapshots.

use std::io::Write;
use std::path::Path;

use vtkio::model::{Attribute, Attributes, ByteOrder, DataSet, Extent, ImageDataPiece, Piece, Version, Vtk};

use crate::error::SimError;
use crate::lattice::LatticeState;
use crate::sim::{TimeSeriesRecord, TipRecord};

pub const CSV_HEADER: [&str; 7] = ["t", "K_left", "v_left", "da_left", "K_right", "v_right", "da_right"];

/// Writes one row per record; absent tips leave their fields empty.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Result<Self, SimError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER).map_err(csv_error)?;
        Ok(Self { writer })
    }

    pub fn write(&mut self, rec: &TimeSeriesRecord) -> Result<(), SimError> {
        let tip = |t: Option<TipRecord>| match t {
            Some(t) => [t.k.to_string(), t.v.to_string(), t.da.to_string()],
            None => [String::new(), String::new(), String::new()],
        };
        let [kl, vl, dl] = tip(rec.left);
        let [kr, vr, dr] = tip(rec.right);
        self.writer.write_record([rec.t.to_string(), kl, vl, dl, kr, vr, dr]).map_err(csv_error)
    }

    pub fn finish(mut self) -> Result<W, SimError> {
        self.writer.flush()?;
        self.writer.into_inner().map_err(|e| SimError::Io(e.into_error()))
    }
}

fn csv_error(e: csv::Error) -> SimError {
    SimError::Io(e.into())
}

/// Displacement field as a legacy ASCII VTK structured-points dataset.
pub fn snapshot(state: &LatticeState, title: &str) -> Vtk {
    let spec = state.spec();
    let extent = Extent::Dims([spec.nx as u32, spec.ny as u32, 1]);
    let w: Vec<f64> = state.w().to_vec();
    Vtk {
        version: Version::new((2, 0)),
        title: title.to_string(),
        byte_order: ByteOrder::BigEndian,
        file_path: None,
        data: DataSet::ImageData {
            extent: extent.clone(),
            origin: [spec.origin.x as f32, spec.origin.y as f32, 0.0],
            spacing: [spec.dh as f32, spec.dh as f32, spec.dh as f32],
            meta: None,
            pieces: vec![Piece::Inline(Box::new(ImageDataPiece {
                extent,
                data: Attributes { point: vec![Attribute::scalars("w", 1).with_data(w)], cell: vec![] },
            }))],
        },
    }
}

pub fn write_snapshot(path: &Path, state: &LatticeState, title: &str) -> Result<(), SimError> {
    snapshot(state, title)
        .export_ascii(path)
        .map_err(|e| SimError::Io(std::io::Error::other(format!("{}: {e}", path.display()))))
}
