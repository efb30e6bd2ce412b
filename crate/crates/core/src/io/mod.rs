//! Array files, graymap exports, report documents and flat config text.

pub mod kv;
mod npy;
mod pgm;
mod report;

pub use npy::{read_array, read_array_from, write_array, write_array_to, ArrayData, MAGIC};
pub use pgm::{encode_graymap, write_graymap};
pub use report::{Aggregate, ConfigEcho, ReportDocument, SCHEMA_VERSION};
