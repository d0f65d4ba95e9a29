//! `edges.tsv`: a header line, then one edge per line.
//!
//! ```text
//! #src_type	src_id	relation	dst_type	dst_id	timestamp	weight	provenance
//! issue	1042	report	developer	alice	1500000000	1	-
//! issue	1042	similar	file	src/net/socket.rs	1500000000	0.41	textual
//! ```

use std::io::{BufRead, Write};

use super::types::*;
use super::RelationError;

pub const EDGE_HEADER: &str =
    "#src_type\tsrc_id\trelation\tdst_type\tdst_id\ttimestamp\tweight\tprovenance";

pub fn format_edge(e: &Edge) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        e.src.node_type,
        e.src.id,
        e.relation,
        e.dst.node_type,
        e.dst.id,
        e.at,
        e.weight,
        e.provenance.as_str()
    )
}

pub fn parse_edge(line: &str) -> Result<Edge, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    let [st, sid, rel, dt, did, at, w, prov] = cols[..] else {
        return Err(format!("expected 8 columns, got {}", cols.len()));
    };
    let e = Edge {
        src: NodeRef::new(st.parse()?, sid),
        dst: NodeRef::new(dt.parse()?, did),
        relation: rel.parse()?,
        at: at.parse().map_err(|e| format!("timestamp `{at}`: {e}"))?,
        weight: w.parse().map_err(|e| format!("weight `{w}`: {e}"))?,
        provenance: prov.parse()?,
    };
    if !e.is_well_typed() {
        return Err(format!(
            "edge violates the {} endpoint types or weight",
            e.relation
        ));
    }
    Ok(e)
}

/// Writes `edges` in canonical order.
pub fn write_edges<W: Write>(mut w: W, edges: &[Edge]) -> std::io::Result<()> {
    let mut sorted = edges.to_vec();
    sort_edges(&mut sorted);
    writeln!(w, "{EDGE_HEADER}")?;
    for e in &sorted {
        writeln!(w, "{}", format_edge(e))?;
    }
    Ok(())
}

pub fn read_edges<R: BufRead>(r: R) -> Result<Vec<Edge>, RelationError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        out.push(parse_edge(&line).map_err(|msg| RelationError::Parse { line: i + 1, msg })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_and_sorted() {
        let edges = vec![
            Edge::new(
                RelationType::Create,
                NodeRef::developer("d"),
                NodeRef::file("a/b.rs"),
                7,
            ),
            Edge::new(
                RelationType::Similar,
                NodeRef::issue("1"),
                NodeRef::file("a/b.rs"),
                3,
            )
            .with_weight(0.1 + 0.2)
            .with_provenance(Provenance::Textual),
        ];
        let mut buf = Vec::new();
        write_edges(&mut buf, &edges).unwrap();
        let back = read_edges(buf.as_slice()).unwrap();
        assert_eq!(back[0], edges[1]);
        assert_eq!(back[1], edges[0]);
        let mut again = Vec::new();
        write_edges(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn mistyped_edge_is_rejected() {
        let bad = "issue\t1\tcreate\tfile\tf\t1\t1\t-\n";
        assert!(matches!(
            read_edges(bad.as_bytes()),
            Err(RelationError::Parse { line: 1, .. })
        ));
    }
}
