use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tgraph::{TemporalGraph, Timestamp};

pub const WEI_PER_ETHER: f64 = 1e18;

/// Integer values at or above this are taken to be wei when the unit is
/// auto-detected.
const WEI_DETECTION_FLOOR: u128 = 1_000_000_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub tx_hash: Option<String>,
    pub from: String,
    pub to: String,
    /// Amount in Ether.
    pub value: f64,
    pub timestamp: Timestamp,
    #[serde(default)]
    pub failed: bool,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueUnit {
    /// Wei if every value is an integer and at least one is `>= 1e12`,
    /// Ether otherwise.
    #[default]
    Auto,
    Wei,
    Ether,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseOptions {
    pub unit: ValueUnit,
    pub drop_zero_value: bool,
    pub drop_failed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParseReport {
    pub records: Vec<TransactionRecord>,
    pub errors: Vec<RowError>,
    /// Rows removed by the zero-value / failed filters.
    pub filtered: usize,
    pub unit: Option<ValueUnit>,
}

pub fn is_hex_id(s: &str, len: usize) -> bool {
    s.len() == len && s.starts_with("0x") && s[2..].bytes().all(|b| b.is_ascii_hexdigit())
}

pub fn is_address(s: &str) -> bool {
    is_hex_id(s, 42)
}

pub fn is_tx_hash(s: &str) -> bool {
    is_hex_id(s, 66)
}

fn normalize_header(h: &str) -> String {
    h.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

struct Columns {
    from: usize,
    to: usize,
    value: usize,
    timestamp: usize,
    hash: Option<usize>,
    is_error: Option<usize>,
}

impl Columns {
    fn locate(headers: &csv::StringRecord, source_name: &str) -> Result<Self> {
        let names: Vec<String> = headers.iter().map(normalize_header).collect();
        let find = |aliases: &[&str]| names.iter().position(|n| aliases.contains(&n.as_str()));
        let require = |aliases: &[&str], label: &str| {
            find(aliases).ok_or_else(|| Error::format(source_name, 1, format!("missing required column `{label}`")))
        };
        Ok(Self {
            from: require(&["from", "fromaddress", "sender"], "From")?,
            to: require(&["to", "toaddress", "receiver"], "To")?,
            value: require(&["value", "valueeth", "valueether", "amount"], "Value")?,
            timestamp: require(&["timestamp", "unixtimestamp", "blocktimestamp"], "Timestamp")?,
            hash: find(&["txhash", "hash", "transactionhash"]),
            is_error: find(&["iserror"]),
        })
    }
}

struct RawRow {
    line: usize,
    hash: Option<String>,
    from: String,
    to: String,
    value: String,
    timestamp: String,
    failed: bool,
}

fn looks_like_wei(values: &[&str]) -> bool {
    let mut any_large = false;
    for v in values {
        match v.parse::<u128>() {
            Ok(x) => any_large |= x >= WEI_DETECTION_FLOOR,
            Err(_) => return false,
        }
    }
    any_large
}

fn convert_value(raw: &str, unit: ValueUnit) -> std::result::Result<f64, String> {
    match unit {
        ValueUnit::Wei => raw
            .parse::<u128>()
            .map(|w| w as f64 / WEI_PER_ETHER)
            .map_err(|_| format!("value `{raw}` is not an integer wei amount")),
        _ => {
            let v: f64 = raw.parse().map_err(|_| format!("value `{raw}` is not a number"))?;
            if !v.is_finite() || v < 0.0 {
                return Err(format!("value `{raw}` must be a non-negative amount"));
            }
            Ok(v)
        }
    }
}

/// Parses a comma- or tab-separated transaction export with a header row.
/// Bad rows are reported in [`ParseReport::errors`] and skipped.
pub fn parse_transactions<R: Read>(mut input: R, source_name: &str, options: &ParseOptions) -> Result<ParseReport> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::format(source_name, 1, e.to_string()))?;
    let first_line = text.lines().next().unwrap_or("");
    if first_line.trim().is_empty() {
        return Err(Error::format(source_name, 1, "empty input, expected a header row"));
    }
    let delimiter = if first_line.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::format(source_name, 1, e.to_string()))?
        .clone();
    let cols = Columns::locate(&headers, source_name)?;

    let mut report = ParseReport::default();
    let mut raw_rows = Vec::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                report.errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(i).unwrap_or("").to_owned();
        raw_rows.push(RawRow {
            line,
            hash: cols.hash.map(field).filter(|h| !h.is_empty()),
            from: field(cols.from),
            to: field(cols.to),
            value: field(cols.value),
            timestamp: field(cols.timestamp),
            failed: cols.is_error.map(field).is_some_and(|v| v == "1"),
        });
    }

    let unit = match options.unit {
        ValueUnit::Auto => {
            let values: Vec<&str> = raw_rows.iter().map(|r| r.value.as_str()).collect();
            if looks_like_wei(&values) {
                ValueUnit::Wei
            } else {
                ValueUnit::Ether
            }
        }
        u => u,
    };
    report.unit = Some(unit);

    let mut hashes = HashSet::new();
    for raw in raw_rows {
        match convert_row(&raw, unit, &mut hashes) {
            Ok(rec) => {
                if (options.drop_zero_value && rec.value == 0.0) || (options.drop_failed && rec.failed) {
                    report.filtered += 1;
                } else {
                    report.records.push(rec);
                }
            }
            Err(message) => report.errors.push(RowError {
                line: raw.line,
                message,
            }),
        }
    }
    Ok(report)
}

fn convert_row(raw: &RawRow, unit: ValueUnit, hashes: &mut HashSet<String>) -> std::result::Result<TransactionRecord, String> {
    if raw.to.is_empty() {
        return Err("contract creation (empty `to`) skipped".into());
    }
    let from = raw.from.to_ascii_lowercase();
    let to = raw.to.to_ascii_lowercase();
    for (label, addr) in [("from", &from), ("to", &to)] {
        if !is_address(addr) {
            return Err(format!("malformed {label} address `{addr}`"));
        }
    }
    let tx_hash = match &raw.hash {
        Some(h) => {
            let h = h.to_ascii_lowercase();
            if !is_tx_hash(&h) {
                return Err(format!("malformed transaction hash `{h}`"));
            }
            if !hashes.insert(h.clone()) {
                return Err(format!("duplicate transaction hash `{h}`"));
            }
            Some(h)
        }
        None => None,
    };
    let value = convert_value(&raw.value, unit)?;
    let timestamp = raw
        .timestamp
        .parse::<Timestamp>()
        .map_err(|_| format!("timestamp `{}` is not an integer", raw.timestamp))?;
    Ok(TransactionRecord {
        tx_hash,
        from,
        to,
        value,
        timestamp,
        failed: raw.failed,
    })
}

/// Comma-separated export with values in Ether.
pub fn write_transactions<W: Write>(records: &[TransactionRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::Validation(e.to_string());
    w.write_record(["TxHash", "From", "To", "Value", "Timestamp", "IsError"])
        .map_err(to_err)?;
    for r in records {
        w.write_record([
            r.tx_hash.clone().unwrap_or_default(),
            r.from.clone(),
            r.to.clone(),
            r.value.to_string(),
            r.timestamp.to_string(),
            if r.failed { "1".into() } else { "0".into() },
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Validation(e.to_string()))
}

/// One edge per record; parallel transactions are not merged.
pub fn build_graph(records: &[TransactionRecord]) -> Result<TemporalGraph> {
    let mut g = TemporalGraph::new();
    for r in records {
        g.add_edge(&r.from, &r.to, r.value, r.timestamp)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: &str = "0x00000000000000000000000000000000000000aa";
    const B: &str = "0x00000000000000000000000000000000000000bb";

    fn parse(text: &str) -> ParseReport {
        parse_transactions(text.as_bytes(), "test.csv", &ParseOptions::default()).unwrap()
    }

    #[test]
    fn single_row() {
        let r = parse(&format!("From,To,Value,Timestamp\n{A},{B},1.5,100\n"));
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.records[0].value, 1.5);
        assert_eq!(r.records[0].timestamp, 100);
        assert!(r.errors.is_empty());
    }

    #[test]
    fn wei_values_are_converted() {
        let r = parse(&format!("from,to,value,timeStamp\n{A},{B},1000000000000000000,7\n"));
        assert_eq!(r.unit, Some(ValueUnit::Wei));
        assert_eq!(r.records[0].value, 1.0);

        // explicit override wins over the heuristic
        let r = parse_transactions(
            format!("from,to,value,timestamp\n{A},{B},1000000000000000000,7\n").as_bytes(),
            "x",
            &ParseOptions {
                unit: ValueUnit::Ether,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.records[0].value, 1e18);
    }

    #[test]
    fn malformed_rows_are_reported_not_fatal() {
        let text = format!(
            "TxHash\tFrom\tTo\tValue\tTimestamp\n\
             0x{h1}\t{A}\t{B}\t1\t5\n\
             0x{h2}\t0xnothex\t{B}\t1\t6\n\
             0x{h3}\t{A}\t\t1\t7\n\
             0x{h1}\t{A}\t{B}\t1\t8\n\
             0x{h4}\t{A}\t{B}\t-2\t9\n",
            h1 = "1".repeat(64),
            h2 = "2".repeat(64),
            h3 = "3".repeat(64),
            h4 = "4".repeat(64),
        );
        let r = parse(&text);
        assert_eq!(r.records.len(), 1);
        let lines: Vec<usize> = r.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![3, 4, 5, 6]);
        assert!(r.errors[1].message.contains("contract creation"));
    }

    #[test]
    fn format_errors() {
        assert!(matches!(
            parse_transactions("".as_bytes(), "x", &ParseOptions::default()),
            Err(Error::Format { .. })
        ));
        let err = parse_transactions("from,to,timestamp\n".as_bytes(), "x", &ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("Value"), "{err}");
    }

    #[test]
    fn filters() {
        let text = format!("from,to,value,timestamp,isError\n{A},{B},0,1,0\n{A},{B},2,2,1\n{A},{B},3,3,0\n");
        let r = parse_transactions(
            text.as_bytes(),
            "x",
            &ParseOptions {
                drop_zero_value: true,
                drop_failed: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.filtered, 2);
        assert_eq!(parse(&text).records.len(), 3);
    }

    #[test]
    fn build_graph_keeps_parallel_transactions() {
        let rec = |t| TransactionRecord {
            tx_hash: None,
            from: A.into(),
            to: B.into(),
            value: 1.0,
            timestamp: t,
            failed: false,
        };
        let g = build_graph(&[rec(1), rec(2), rec(3)]).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 3));
        assert!(build_graph(&[]).unwrap().is_empty());
    }
}
