use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ingest::records::is_address;

/// `(address, is_phishing)`.
pub type Label = (String, bool);

fn parse_class(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "phishing" | "1" | "positive" | "true" => Some(true),
        "non-phishing" | "nonphishing" | "non_phishing" | "0" | "negative" | "false" | "normal" => Some(false),
        _ => None,
    }
}

/// Two-column label file (address, class), comma- or tab-separated, with an
/// optional header row.
pub fn parse_labels<R: BufRead>(input: R, source_name: &str) -> Result<Vec<Label>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::format(source_name, lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(['\t', ',']).map(str::trim);
        let (addr, class) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(c), None) => (a, c),
            _ => return Err(Error::format(source_name, lineno, "expected two columns: address, class")),
        };
        let Some(label) = parse_class(class) else {
            if out.is_empty() && !is_address(&addr.to_ascii_lowercase()) {
                // header row
                continue;
            }
            return Err(Error::format(source_name, lineno, format!("unknown class `{class}`")));
        };
        let addr = addr.to_ascii_lowercase();
        if !is_address(&addr) {
            return Err(Error::format(source_name, lineno, format!("malformed address `{addr}`")));
        }
        if !seen.insert(addr.clone()) {
            return Err(Error::format(source_name, lineno, format!("duplicate address `{addr}`")));
        }
        out.push((addr, label));
    }
    Ok(out)
}

pub fn write_labels<W: Write>(labels: &[Label], mut out: W) -> std::io::Result<()> {
    writeln!(out, "address,class")?;
    for (addr, label) in labels {
        writeln!(out, "{addr},{}", if *label { "phishing" } else { "non-phishing" })?;
    }
    out.flush()
}
