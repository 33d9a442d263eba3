use std::fs;
use std::io;
use std::path::Path;

use hdl_core::continuation::ContinuationReport;
use hdl_core::grid::{ComplexField, ScalarField};
use hdl_core::io::field_to_csv;

/// Anything that can be written out as plot data.
pub enum PlotData<'a> {
    Scalar(&'a ScalarField),
    Complex(&'a ComplexField),
    Sweep(&'a ContinuationReport),
}

impl PlotData<'_> {
    pub fn to_csv(&self) -> String {
        match self {
            PlotData::Scalar(f) => field_to_csv(*f),
            PlotData::Complex(f) => field_to_csv(*f),
            PlotData::Sweep(r) => r.to_csv(),
        }
    }
}

pub fn emit_plot_data(data: PlotData<'_>, path: &Path) -> io::Result<()> {
    fs::write(path, data.to_csv())
}
