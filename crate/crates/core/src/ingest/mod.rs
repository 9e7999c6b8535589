//! Getting transaction data in and artifacts out: delimiter-separated
//! transaction exports, label files, an explorer API client, and the on-disk
//! graph and embedding formats.

mod fetch;
mod labels;
mod records;
mod store;

pub use fetch::{ExplorerClient, FetchConfig};
pub use labels::{parse_labels, write_labels, Label};
pub use records::{
    build_graph, is_address, is_tx_hash, parse_transactions, write_transactions, ParseOptions, ParseReport,
    RowError, TransactionRecord, ValueUnit, WEI_PER_ETHER,
};
pub use store::{load_graph, read_embeddings, save_graph, write_embeddings, EDGES_FILE, NODES_FILE};
