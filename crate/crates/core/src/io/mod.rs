//! Dataset ingestion, snapshot round-tripping, synthetic networks, run
//! manifests, and table serialization.

mod ingest;
mod manifest;
mod snapshot;
mod synthetic;
mod tables;

pub use ingest::{ingest, parse_ratings, IdMap, IngestResult, Rating};
pub use manifest::{sha256_file, sha256_str, DatasetInfo, RunManifest};
pub use snapshot::{
    export_snapshot, import_snapshot, snapshot_csv_string, snapshot_header_string, SnapshotHeader,
};
pub use synthetic::{synthetic_network, SyntheticSpec};
pub use tables::{to_csv_string, to_json_string, OutputFormat, TableRow};
