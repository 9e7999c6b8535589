//! One function per pipeline stage. Each reads its prerequisites from the
//! work directory, writes its artifact there and records itself in the
//! manifest. `cmd_pipeline` is literally the composition of the stages.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use tedge_core::evalkit::{alpha_sweep, evaluate_embeddings, evaluate_pipeline, ResultRow, ResultTable};
use tedge_core::ingest::{
    build_graph, load_graph, parse_labels, parse_transactions, read_embeddings, save_graph, write_embeddings,
    write_labels, write_transactions, ExplorerClient, Label, TransactionRecord, EDGES_FILE, NODES_FILE,
};
use tedge_core::sgns::{embed_corpus, NodeEmbeddings};
use tedge_core::walker::{generate_corpus, read_corpus_text};
use tedge_core::{Error, TemporalGraph};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::manifest::record_stage;

pub const GRAPH_DIR: &str = "graph";
pub const SUBGRAPH_DIR: &str = "subgraph";
pub const LABELS_FILE: &str = "labels.csv";
pub const INGEST_ERRORS_FILE: &str = "ingest_errors.tsv";
pub const FETCHED_FILE: &str = "fetched_transactions.csv";
pub const CORPUS_FILE: &str = "corpus.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const METRICS_FILE: &str = "metrics.tsv";
pub const METRICS_SUMMARY_FILE: &str = "metrics_summary.tsv";
pub const SWEEP_FILE: &str = "sweep.tsv";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.tsv";
pub const COMPARISON_FILE: &str = "comparison.tsv";
pub const COMPARISON_SUMMARY_FILE: &str = "comparison_summary.tsv";

fn graph_files(dir: &str) -> [String; 2] {
    [format!("{dir}/{NODES_FILE}"), format!("{dir}/{EDGES_FILE}")]
}

fn timed<T>(stage: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    let start = Instant::now();
    info!("stage {stage}: started");
    let out = f();
    let secs = start.elapsed().as_secs_f64();
    match &out {
        Ok(_) => info!("stage {stage}: finished in {secs:.3}s"),
        Err(e) => warn!("stage {stage}: failed after {secs:.3}s: {e}"),
    }
    out
}

fn require(path: PathBuf, what: &'static str, producer: &'static str) -> Result<PathBuf, CliError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::MissingArtifact { what, path, producer })
    }
}

fn ensure_workdir(config: &PipelineConfig) -> Result<(), CliError> {
    fs::create_dir_all(&config.workdir).map_err(|e| CliError::io(&config.workdir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn load_workdir_graph(config: &PipelineConfig, dir: &'static str, producer: &'static str) -> Result<TemporalGraph, CliError> {
    let path = config.workdir.join(dir);
    require(path.join(NODES_FILE), "graph", producer)?;
    require(path.join(EDGES_FILE), "graph", producer)?;
    Ok(load_graph(&path)?)
}

fn load_workdir_labels(config: &PipelineConfig) -> Result<Vec<Label>, CliError> {
    let path = require(config.workdir.join(LABELS_FILE), "label file", "ingest")?;
    Ok(parse_labels(open(&path)?, &path.display().to_string())?)
}

fn write_tables(table: &ResultTable, dir: &Path, rows_file: &str, summary_file: &str) -> Result<(), CliError> {
    let rows_path = dir.join(rows_file);
    let mut w = create(&rows_path)?;
    table.write_tsv(&mut w).map_err(|e| CliError::io(&rows_path, e))?;
    w.flush().map_err(|e| CliError::io(&rows_path, e))?;
    let summary_path = dir.join(summary_file);
    let mut w = create(&summary_path)?;
    table.write_summary_tsv(&mut w).map_err(|e| CliError::io(&summary_path, e))?;
    w.flush().map_err(|e| CliError::io(&summary_path, e))
}

/// Parses the transaction export and label file into `graph/` and
/// `labels.csv`. Malformed rows go to `ingest_errors.tsv`.
pub fn cmd_ingest(config: &PipelineConfig) -> Result<(), CliError> {
    timed("ingest", || {
        let tx_path = config
            .transactions
            .clone()
            .ok_or_else(|| CliError::Usage("ingest needs a transaction file (--transactions)".into()))?;
        let labels_path = config
            .labels
            .clone()
            .ok_or_else(|| CliError::Usage("ingest needs a label file (--labels)".into()))?;
        ensure_workdir(config)?;

        let report = parse_transactions(
            File::open(&tx_path).map_err(|e| CliError::io(&tx_path, e))?,
            &tx_path.display().to_string(),
            &config.parse_options(),
        )?;
        info!(
            "ingest: {} records, {} rejected rows, {} filtered, unit {:?}",
            report.records.len(),
            report.errors.len(),
            report.filtered,
            report.unit
        );
        if report.records.is_empty() {
            return Err(Error::Validation(format!("{} contains no usable transactions", tx_path.display())).into());
        }
        let errors_path = config.workdir.join(INGEST_ERRORS_FILE);
        let mut w = create(&errors_path)?;
        let io = |e| CliError::io(&errors_path, e);
        writeln!(w, "line\tmessage").map_err(io)?;
        for err in &report.errors {
            writeln!(w, "{}\t{}", err.line, err.message.replace(['\t', '\n'], " ")).map_err(io)?;
        }
        w.flush().map_err(io)?;

        let graph = build_graph(&report.records)?;
        info!("ingest: graph with {} nodes, {} edges", graph.node_count(), graph.edge_count());
        save_graph(&graph, &config.workdir.join(GRAPH_DIR))?;

        let labels = parse_labels(open(&labels_path)?, &labels_path.display().to_string())?;
        let absent = labels.iter().filter(|(id, _)| graph.node(id).is_none()).count();
        if absent > 0 {
            warn!("ingest: {absent} labeled addresses do not occur in the transactions");
        }
        let out = config.workdir.join(LABELS_FILE);
        let mut w = create(&out)?;
        write_labels(&labels, &mut w).map_err(|e| CliError::io(&out, e))?;

        let [nodes, edges] = graph_files(GRAPH_DIR);
        record_stage(
            config,
            "ingest",
            &[
                (tx_path.display().to_string(), &tx_path),
                (labels_path.display().to_string(), &labels_path),
            ],
            &[&nodes, &edges, LABELS_FILE, INGEST_ERRORS_FILE],
        )
    })
}

/// Downloads the transaction lists of `addresses` through the explorer
/// client into `fetched_transactions.csv`, deduplicated by hash.
pub fn cmd_fetch(
    config: &PipelineConfig,
    addresses: &[String],
    api_key: Option<String>,
    network: bool,
) -> Result<(), CliError> {
    timed("fetch", || {
        if addresses.is_empty() {
            return Err(CliError::Usage("fetch needs at least one address".into()));
        }
        ensure_workdir(config)?;
        let mut client = ExplorerClient::new(config.fetch_config(api_key, network));
        let mut records: Vec<TransactionRecord> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for addr in addresses {
            for r in client.fetch_account_transactions(addr)? {
                if r.tx_hash.as_ref().is_none_or(|h| seen.insert(h.clone())) {
                    records.push(r);
                }
            }
        }
        records.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.tx_hash.cmp(&b.tx_hash)));
        info!(
            "fetch: {} transactions for {} addresses ({} requests)",
            records.len(),
            addresses.len(),
            client.requests_made()
        );
        let path = config.workdir.join(FETCHED_FILE);
        write_transactions(&records, create(&path)?)?;
        record_stage(config, "fetch", &[], &[FETCHED_FILE])
    })
}

/// Splices the K-order subgraphs around every labeled address into
/// `subgraph/`.
pub fn cmd_subgraph(config: &PipelineConfig) -> Result<(), CliError> {
    timed("subgraph", || {
        let graph = load_workdir_graph(config, GRAPH_DIR, "ingest")?;
        let labels = load_workdir_labels(config)?;
        let centers: Vec<String> = labels
            .iter()
            .filter(|(id, _)| graph.node(id).is_some())
            .map(|(id, _)| id.clone())
            .collect();
        if centers.is_empty() {
            return Err(Error::Validation("no labeled address occurs in the graph".into()).into());
        }
        let parts = centers
            .iter()
            .map(|c| graph.k_order_subgraph(&config.subgraph_spec(vec![c.clone()])))
            .collect::<Result<Vec<_>, _>>()?;
        let spliced = TemporalGraph::splice(&parts);
        info!(
            "subgraph: {} centers, k_in {}, k_out {} -> {} nodes, {} edges",
            centers.len(),
            config.subgraph.k_in,
            config.subgraph.k_out,
            spliced.node_count(),
            spliced.edge_count()
        );
        save_graph(&spliced, &config.workdir.join(SUBGRAPH_DIR))?;
        let [gn, ge] = graph_files(GRAPH_DIR);
        let [sn, se] = graph_files(SUBGRAPH_DIR);
        let wd = &config.workdir;
        record_stage(
            config,
            "subgraph",
            &[(gn.clone(), &wd.join(&gn)), (ge.clone(), &wd.join(&ge)), (LABELS_FILE.into(), &wd.join(LABELS_FILE))],
            &[&sn, &se],
        )
    })
}

/// Walk corpus over `subgraph/` with the configured strategy.
pub fn cmd_walk(config: &PipelineConfig) -> Result<(), CliError> {
    timed("walk", || {
        let graph = load_workdir_graph(config, SUBGRAPH_DIR, "subgraph")?;
        let strategy = config.sampling_strategy();
        let corpus = generate_corpus(&graph, &config.walk_config(), &strategy)?;
        let steps: usize = corpus.walks.iter().map(|w| w.edges.len()).sum();
        info!(
            "walk: {} walks, {} steps, strategy {} alpha {}",
            corpus.len(),
            steps,
            strategy.kind,
            strategy.alpha
        );
        let path = config.workdir.join(CORPUS_FILE);
        let mut w = create(&path)?;
        corpus.write_text(&graph, &mut w).map_err(|e| CliError::io(&path, e))?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        let [sn, se] = graph_files(SUBGRAPH_DIR);
        let wd = &config.workdir;
        record_stage(config, "walk", &[(sn.clone(), &wd.join(&sn)), (se.clone(), &wd.join(&se))], &[CORPUS_FILE])
    })
}

/// Skip-gram embeddings of the corpus into `embeddings.txt`.
pub fn cmd_embed(config: &PipelineConfig) -> Result<(), CliError> {
    timed("embed", || {
        let graph = load_workdir_graph(config, SUBGRAPH_DIR, "subgraph")?;
        let corpus_path = require(config.workdir.join(CORPUS_FILE), "walk corpus", "walk")?;
        let walks = read_corpus_text(&graph, open(&corpus_path)?, &corpus_path.display().to_string())?;
        let embeddings = embed_corpus(&graph, &walks, &config.train_config(config.seed))?;
        info!("embed: {} vectors of dimension {}", embeddings.len(), embeddings.dimension());
        let path = config.workdir.join(EMBEDDINGS_FILE);
        let mut w = create(&path)?;
        write_embeddings(&embeddings, &mut w).map_err(|e| CliError::io(&path, e))?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        let [sn, se] = graph_files(SUBGRAPH_DIR);
        let wd = &config.workdir;
        record_stage(
            config,
            "embed",
            &[(sn.clone(), &wd.join(&sn)), (se.clone(), &wd.join(&se)), (CORPUS_FILE.into(), &corpus_path)],
            &[EMBEDDINGS_FILE],
        )
    })
}

/// Classifies the labeled nodes from `embeddings.txt` at every configured
/// ratio and seed.
pub fn cmd_classify(config: &PipelineConfig) -> Result<(), CliError> {
    timed("classify", || {
        let emb_path = require(config.workdir.join(EMBEDDINGS_FILE), "embeddings", "embed")?;
        let embeddings: NodeEmbeddings = read_embeddings(open(&emb_path)?, &emb_path.display().to_string())?;
        let labels = load_workdir_labels(config)?;
        let strategy = config.sampling_strategy();
        let rows = evaluate_embeddings(
            &embeddings,
            &labels,
            &config.eval.ratios,
            &config.eval.seeds,
            &config.svm_config(),
            config.eval.stratified,
        )?;
        let table = ResultTable {
            rows: rows
                .into_iter()
                .map(|(ratio, seed, metrics)| ResultRow {
                    strategy: strategy.kind,
                    alpha: strategy.alpha,
                    ratio,
                    seed,
                    metrics,
                })
                .collect(),
        };
        for s in table.summary() {
            info!("classify: ratio {} Mi-F1 {:.4} Ma-F1 {:.4}", s.ratio, s.mean.micro_f1, s.mean.macro_f1);
        }
        write_tables(&table, &config.workdir, METRICS_FILE, METRICS_SUMMARY_FILE)?;
        let wd = &config.workdir;
        record_stage(
            config,
            "classify",
            &[(EMBEDDINGS_FILE.into(), &emb_path), (LABELS_FILE.into(), &wd.join(LABELS_FILE))],
            &[METRICS_FILE, METRICS_SUMMARY_FILE],
        )
    })
}

/// Alpha sweep of the blended strategy over `eval.alphas`.
pub fn cmd_sweep(config: &PipelineConfig) -> Result<(), CliError> {
    timed("sweep", || {
        let graph = load_workdir_graph(config, SUBGRAPH_DIR, "subgraph")?;
        let labels = load_workdir_labels(config)?;
        let table = alpha_sweep(&graph, &labels, &config.eval.alphas, &config.eval_plan())?;
        write_tables(&table, &config.workdir, SWEEP_FILE, SWEEP_SUMMARY_FILE)?;
        let [sn, se] = graph_files(SUBGRAPH_DIR);
        let wd = &config.workdir;
        record_stage(
            config,
            "sweep",
            &[(sn.clone(), &wd.join(&sn)), (se.clone(), &wd.join(&se)), (LABELS_FILE.into(), &wd.join(LABELS_FILE))],
            &[SWEEP_FILE, SWEEP_SUMMARY_FILE],
        )
    })
}

/// Walk, embed and classify for each of `eval.strategies` and `eval.seeds`.
pub fn cmd_compare(config: &PipelineConfig) -> Result<(), CliError> {
    timed("compare", || {
        let graph = load_workdir_graph(config, SUBGRAPH_DIR, "subgraph")?;
        let labels = load_workdir_labels(config)?;
        let table = evaluate_pipeline(&graph, &labels, &config.eval_plan())?;
        for s in table.summary() {
            info!(
                "compare: {} ratio {} Mi-F1 {:.4}±{:.4}",
                s.strategy, s.ratio, s.mean.micro_f1, s.std.micro_f1
            );
        }
        write_tables(&table, &config.workdir, COMPARISON_FILE, COMPARISON_SUMMARY_FILE)?;
        let [sn, se] = graph_files(SUBGRAPH_DIR);
        let wd = &config.workdir;
        record_stage(
            config,
            "compare",
            &[(sn.clone(), &wd.join(&sn)), (se.clone(), &wd.join(&se)), (LABELS_FILE.into(), &wd.join(LABELS_FILE))],
            &[COMPARISON_FILE, COMPARISON_SUMMARY_FILE],
        )
    })
}

/// ingest, subgraph, walk, embed, classify.
pub fn cmd_pipeline(config: &PipelineConfig) -> Result<(), CliError> {
    timed("pipeline", || {
        cmd_ingest(config)?;
        cmd_subgraph(config)?;
        cmd_walk(config)?;
        cmd_embed(config)?;
        cmd_classify(config)
    })
}
