use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sgns::NodeEmbeddings;
use crate::tgraph::TemporalGraph;

pub const NODES_FILE: &str = "nodes.tsv";
pub const EDGES_FILE: &str = "edges.tsv";

const NODES_HEADER: &str = "index\texternal_id";
const EDGES_HEADER: &str = "src\tdst\tweight\ttimestamp\torigin";

/// Writes `dir/nodes.tsv` and `dir/edges.tsv`, creating `dir` if needed.
pub fn save_graph(graph: &TemporalGraph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let nodes_path = dir.join(NODES_FILE);
    let mut w = BufWriter::new(File::create(&nodes_path).map_err(|e| Error::io(&nodes_path, e))?);
    let io = |e| Error::io(&nodes_path, e);
    writeln!(w, "{NODES_HEADER}").map_err(io)?;
    for (i, id) in graph.external_ids().iter().enumerate() {
        writeln!(w, "{i}\t{id}").map_err(io)?;
    }
    w.flush().map_err(io)?;

    let edges_path = dir.join(EDGES_FILE);
    let mut w = BufWriter::new(File::create(&edges_path).map_err(|e| Error::io(&edges_path, e))?);
    let io = |e| Error::io(&edges_path, e);
    writeln!(w, "{EDGES_HEADER}").map_err(io)?;
    for e in graph.edges() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            e.src.index(),
            e.dst.index(),
            e.weight,
            e.timestamp,
            e.origin
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

fn expect_header(lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>, name: &str, header: &str) -> Result<()> {
    match lines.next() {
        Some((_, Ok(l))) if l == header => Ok(()),
        Some((n, Ok(l))) => Err(Error::format(name, n, format!("expected header `{header}`, found `{l}`"))),
        Some((n, Err(e))) => Err(Error::format(name, n, e.to_string())),
        None => Err(Error::format(name, 1, "file is empty, expected a header")),
    }
}

fn field<T: std::str::FromStr>(parts: &[&str], i: usize, what: &str, name: &str, line: usize) -> Result<T> {
    parts[i]
        .parse()
        .map_err(|_| Error::format(name, line, format!("invalid {what} `{}`", parts[i])))
}

pub fn load_graph(dir: &Path) -> Result<TemporalGraph> {
    let nodes_path = dir.join(NODES_FILE);
    let name = nodes_path.display().to_string();
    let mut lines = open_lines(&nodes_path)?;
    expect_header(&mut lines, &name, NODES_HEADER)?;
    let mut graph = TemporalGraph::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::format(&name, n, e.to_string()))?;
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 2 || parts[1].is_empty() {
            return Err(Error::format(&name, n, "expected `index<TAB>external_id`"));
        }
        let index: usize = field(&parts, 0, "index", &name, n)?;
        if index != graph.node_count() {
            return Err(Error::format(&name, n, format!("expected index {}, found {index}", graph.node_count())));
        }
        if graph.node(parts[1]).is_some() {
            return Err(Error::format(&name, n, format!("duplicate external id `{}`", parts[1])));
        }
        graph.add_node(parts[1]);
    }

    let edges_path = dir.join(EDGES_FILE);
    let name = edges_path.display().to_string();
    let mut lines = open_lines(&edges_path)?;
    expect_header(&mut lines, &name, EDGES_HEADER)?;
    let ids = graph.external_ids().to_vec();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::format(&name, n, e.to_string()))?;
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 5 {
            return Err(Error::format(&name, n, format!("expected 5 columns, found {}", parts.len())));
        }
        let src: usize = field(&parts, 0, "src index", &name, n)?;
        let dst: usize = field(&parts, 1, "dst index", &name, n)?;
        let weight: f64 = field(&parts, 2, "weight", &name, n)?;
        let timestamp: i64 = field(&parts, 3, "timestamp", &name, n)?;
        let origin: u64 = field(&parts, 4, "origin", &name, n)?;
        let (Some(s), Some(d)) = (ids.get(src), ids.get(dst)) else {
            return Err(Error::format(&name, n, "edge references an unknown node index"));
        };
        graph
            .add_edge_with_origin(s, d, weight, timestamp, origin)
            .map_err(|e| Error::format(&name, n, e.to_string()))?;
    }
    Ok(graph)
}

/// Text format: `<node_count> <d>` then one `<id> <x1> ... <xd>` line per node.
pub fn write_embeddings<W: Write>(embeddings: &NodeEmbeddings, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", embeddings.len(), embeddings.dimension())?;
    for (i, id) in embeddings.ids().iter().enumerate() {
        out.write_all(id.as_bytes())?;
        for x in embeddings.row(i) {
            write!(out, " {x}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_embeddings<R: BufRead>(input: R, source_name: &str) -> Result<NodeEmbeddings> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = match lines.next() {
        Some((_, Ok(l))) => l,
        Some((n, Err(e))) => return Err(Error::format(source_name, n, e.to_string())),
        None => return Err(Error::format(source_name, 1, "empty embedding file")),
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(source_name, 1, "header must be `<node_count> <dimension>`"))?;
    let [count, dim] = dims[..] else {
        return Err(Error::format(source_name, 1, "header must be `<node_count> <dimension>`"));
    };
    let mut ids = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (n, line) in lines {
        let line = line.map_err(|e| Error::format(source_name, n, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let id = parts.next().unwrap_or_default().to_owned();
        let before = data.len();
        for tok in parts {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::format(source_name, n, format!("invalid component `{tok}`")))?,
            );
        }
        if data.len() - before != dim {
            return Err(Error::format(
                source_name,
                n,
                format!("expected {dim} components, found {}", data.len() - before),
            ));
        }
        ids.push(id);
    }
    if ids.len() != count {
        return Err(Error::format(
            source_name,
            ids.len() + 1,
            format!("header announces {count} rows, found {}", ids.len()),
        ));
    }
    Ok(NodeEmbeddings::new(ids, dim, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TemporalGraph {
        let mut g = TemporalGraph::new();
        g.add_edge("0xa", "0xb", 0.1, 10).unwrap();
        g.add_edge("0xa", "0xb", 0.1, 10).unwrap();
        g.add_edge("0xb", "0xc", 1e-18, -5).unwrap();
        g.add_node("0xisolated");
        g
    }

    #[test]
    fn graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = sample();
        save_graph(&g, dir.path()).unwrap();
        let back = load_graph(dir.path()).unwrap();
        assert_eq!(back.external_ids(), g.external_ids());
        assert_eq!(back.edges(), g.edges());
        for n in g.nodes() {
            assert_eq!(back.out_edges(n), g.out_edges(n));
        }
    }

    #[test]
    fn empty_graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        save_graph(&TemporalGraph::new(), dir.path()).unwrap();
        let back = load_graph(dir.path()).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.edge_count(), 0);
    }

    #[test]
    fn truncated_edge_file_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        save_graph(&sample(), dir.path()).unwrap();
        let path = dir.path().join(EDGES_FILE);
        let text = fs::read_to_string(&path).unwrap();
        let cut = text.len() - 8;
        fs::write(&path, &text[..cut]).unwrap();
        match load_graph(dir.path()) {
            Err(Error::Format { line, source_name, .. }) => {
                assert_eq!(line, 4);
                assert!(source_name.ends_with(EDGES_FILE));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_graph_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_graph(&dir.path().join("nope")), Err(Error::Io { .. })));
    }

    #[test]
    fn embedding_round_trip_is_exact() {
        let e = NodeEmbeddings::new(
            vec!["a".into(), "b".into()],
            3,
            vec![0.1, -2.5e-7, 3.0, 1.0 / 3.0, 0.0, -1e300],
        );
        let mut buf = Vec::new();
        write_embeddings(&e, &mut buf).unwrap();
        assert!(buf.starts_with(b"2 3\na 0.1 "));
        let back = read_embeddings(buf.as_slice(), "emb").unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn embedding_errors() {
        assert!(read_embeddings("".as_bytes(), "e").is_err());
        assert!(matches!(
            read_embeddings("1 2\na 1.0\n".as_bytes(), "e"),
            Err(Error::Format { line: 2, .. })
        ));
        assert!(read_embeddings("2 1\na 1.0\n".as_bytes(), "e").is_err());
    }
}
