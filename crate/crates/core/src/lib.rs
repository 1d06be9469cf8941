//! Data-driven production forecasting for hydraulic fracturing field databases.

pub mod analysis;
pub mod error;
pub mod impute;
pub mod ingest;
pub mod matrix;
pub mod regress;
pub mod seed;
pub mod stats;
pub mod structure;
pub mod synthgen;
pub mod table;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use table::{Column, ColumnGroup, ColumnKind, ColumnMeta, FieldTable, RowKey};
