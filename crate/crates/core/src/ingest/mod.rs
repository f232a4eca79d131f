//! Snapshot ingestion: the on-disk snapshot format, IPv4 prefix resolution
//! and assembly of snapshot series at the two census cadences.

mod prefix;
mod series;
mod snapshot;

pub use prefix::{load_prefix_table, resolve_asn, PrefixEntry, PrefixTable};
pub use series::{
    assemble_series, read_series_dir, write_series_dir, Cadence, DirScan, Gap, SnapshotSeries,
    DEFAULT_JITTER,
};
pub use snapshot::{parse_snapshot, resolve_snapshot, write_snapshot};
