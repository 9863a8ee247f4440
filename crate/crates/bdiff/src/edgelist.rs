//! Edge-list text: one `k l` pair of 1-based node ids per line. Blank lines
//! and `#` comments are ignored.

use bdiff_core::graph::NodeId;

use crate::error::ConfigError;

pub fn parse_edge_list(text: &str) -> Result<Vec<(NodeId, NodeId)>, ConfigError> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| ConfigError::EdgeList { line: i + 1, reason };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(format!("expected two node ids, found {}", fields.len())));
        }
        let mut ids = [0usize; 2];
        for (slot, f) in ids.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| err(format!("`{f}` is not a node id")))?;
            if *slot == 0 {
                return Err(err("node ids are 1-based".into()));
            }
        }
        edges.push((NodeId(ids[0]), NodeId(ids[1])));
    }
    Ok(edges)
}

pub fn format_edge_list(edges: &[(NodeId, NodeId)]) -> String {
    edges.iter().map(|(a, b)| format!("{a} {b}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_blanks() {
        let text = "# ring\n1 2\n\n2 3  # middle\n 3 1\n";
        let e = parse_edge_list(text).unwrap();
        assert_eq!(e, vec![(NodeId(1), NodeId(2)), (NodeId(2), NodeId(3)), (NodeId(3), NodeId(1))]);
        assert_eq!(parse_edge_list(&format_edge_list(&e)).unwrap(), e);
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(
            parse_edge_list("1 2\n2\n"),
            Err(ConfigError::EdgeList {
                line: 2,
                reason: "expected two node ids, found 1".into()
            })
        );
        assert!(matches!(parse_edge_list("0 1"), Err(ConfigError::EdgeList { line: 1, .. })));
        assert!(matches!(parse_edge_list("a b"), Err(ConfigError::EdgeList { line: 1, .. })));
    }
}
