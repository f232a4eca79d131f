//! Snapshot file format.
//!
//! ```json
//! {"timestamp": 1524700800,
//!  "nodes": [{"address": "1.2.3.4", "asn": 45102, "org": "AliBaba (China)",
//!             "height": 500000, "version": "0.16.0"}]}
//! ```
//!
//! `asn`/`org` are optional; nodes without them are kept with the unresolved
//! marker until [`resolve_snapshot`] runs them through a prefix table.
//! Unknown fields are ignored.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::prefix::PrefixTable;
use crate::error::{Error, Result};
use crate::topology::{Asn, NetworkSnapshot, NodeId, NodeRecord, UNKNOWN_ORG};

#[derive(Serialize, Deserialize)]
struct RawSnapshot {
    timestamp: i64,
    nodes: Vec<RawNode>,
}

#[derive(Serialize, Deserialize)]
struct RawNode {
    address: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    asn: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    org: Option<String>,
    height: u64,
    version: String,
}

fn classify(err: serde_json::Error) -> Error {
    let context = format!("line {}, column {}", err.line(), err.column());
    let reason = err.to_string();
    if reason.starts_with("missing field") {
        Error::Schema { context, reason }
    } else {
        Error::Parse { context, reason }
    }
}

pub fn parse_snapshot(bytes: &[u8]) -> Result<NetworkSnapshot> {
    let raw: RawSnapshot = serde_json::from_slice(bytes).map_err(classify)?;
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for (i, n) in raw.nodes.into_iter().enumerate() {
        let address: Ipv4Addr = n.address.parse().map_err(|_| Error::Parse {
            context: format!("nodes[{i}].address"),
            reason: format!("`{}` is not an IPv4 address", n.address),
        })?;
        let asn = match n.asn {
            Some(0) => {
                return Err(Error::Schema {
                    context: format!("nodes[{i}].asn"),
                    reason: "AS 0 is reserved for unresolved addresses; omit the field instead".into(),
                })
            }
            Some(a) => Asn(a),
            None => Asn::UNRESOLVED,
        };
        let org = n.org.unwrap_or_else(|| UNKNOWN_ORG.to_string());
        nodes.push(NodeRecord {
            node_id: NodeId(i as u32),
            address,
            asn,
            org,
            height: n.height,
            version: n.version,
        });
    }
    Ok(NetworkSnapshot {
        timestamp: raw.timestamp,
        nodes,
    })
}

/// Fills in AS and org for unresolved nodes by longest-prefix match. Nodes
/// with no matching prefix stay under AS 0 / `UNKNOWN`. Returns how many nodes
/// were resolved.
pub fn resolve_snapshot(snapshot: &mut NetworkSnapshot, table: &PrefixTable) -> usize {
    let mut resolved = 0;
    for node in snapshot.nodes.iter_mut().filter(|n| !n.asn.is_resolved()) {
        if let Some(entry) = table.resolve(node.address) {
            node.asn = entry.asn;
            node.org = entry.org.clone();
            resolved += 1;
        }
    }
    resolved
}

/// Canonical serialization; `parse_snapshot(write_snapshot(s))` reproduces `s`.
pub fn write_snapshot(snapshot: &NetworkSnapshot) -> String {
    let raw = RawSnapshot {
        timestamp: snapshot.timestamp,
        nodes: snapshot
            .nodes
            .iter()
            .map(|n| RawNode {
                address: n.address.to_string(),
                asn: n.asn.is_resolved().then_some(n.asn.0),
                org: (n.asn.is_resolved() || n.org != UNKNOWN_ORG).then(|| n.org.clone()),
                height: n.height,
                version: n.version.clone(),
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("snapshot serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document() {
        let s = parse_snapshot(br#"{"timestamp": 5, "nodes": []}"#).unwrap();
        assert_eq!(s.timestamp, 5);
        assert!(s.nodes.is_empty());
    }

    #[test]
    fn single_node_identity() {
        let doc = br#"{"timestamp": 1, "nodes": [{"address": "1.2.3.4", "height": 500000,
            "version": "Satoshi:0.16.0", "asn": 45102, "org": "AliBaba (China)", "extra": [1,2]}]}"#;
        let s = parse_snapshot(doc).unwrap();
        let n = &s.nodes[0];
        assert_eq!(n.address, Ipv4Addr::new(1, 2, 3, 4));
        assert_eq!(n.height, 500000);
        assert_eq!(n.version, "Satoshi:0.16.0");
        assert_eq!(n.asn, Asn(45102));
        assert_eq!(n.org, "AliBaba (China)");
    }

    #[test]
    fn malformed_and_missing_fields() {
        let e = parse_snapshot(b"{\"timestamp\": 1,\n \"nodes\": [}").unwrap_err();
        assert!(matches!(&e, Error::Parse { context, .. } if context.starts_with("line 2")), "{e}");
        let e = parse_snapshot(br#"{"timestamp": 1, "nodes": [{"address": "1.2.3.4", "version": "x"}]}"#)
            .unwrap_err();
        assert!(matches!(&e, Error::Schema { reason, .. } if reason.contains("height")), "{e}");
        let e = parse_snapshot(br#"{"timestamp": 1, "nodes": [{"address": "1.2.3", "height": 1, "version": "x"}]}"#)
            .unwrap_err();
        assert!(matches!(&e, Error::Parse { context, .. } if context == "nodes[0].address"), "{e}");
    }

    #[test]
    fn unresolved_nodes_kept_and_resolved_later() {
        let doc = br#"{"timestamp": 1, "nodes": [{"address": "10.1.2.3", "height": 1, "version": "x"},
            {"address": "11.0.0.1", "height": 1, "version": "x"}]}"#;
        let mut s = parse_snapshot(doc).unwrap();
        assert!(s.nodes.iter().all(|n| n.asn == Asn::UNRESOLVED && n.org == UNKNOWN_ORG));
        let table = PrefixTable::parse(b"10.0.0.0/8,1,OrgA\n").unwrap();
        assert_eq!(resolve_snapshot(&mut s, &table), 1);
        assert_eq!(s.nodes[0].asn, Asn(1));
        assert_eq!(s.nodes[1].asn, Asn::UNRESOLVED);
        assert_eq!(s.as_counts().get(&Asn::UNRESOLVED), Some(&1));
    }

    fn arb_node() -> impl Strategy<Value = (u32, Option<u32>, Option<String>, u64, String)> {
        (
            any::<u32>(),
            prop::option::of(1u32..400_000),
            prop::option::of("[A-Za-z ().,]{0,12}"),
            0u64..1_000_000,
            "[0-9a-z.:/-]{1,10}",
        )
    }

    proptest! {
        #[test]
        fn parse_write_parse_is_fixed_point(ts in any::<i64>(), nodes in prop::collection::vec(arb_node(), 0..20)) {
            let doc = RawSnapshot {
                timestamp: ts,
                nodes: nodes.into_iter().map(|(a, asn, org, h, v)| RawNode {
                    address: Ipv4Addr::from(a).to_string(), asn, org, height: h, version: v,
                }).collect(),
            };
            let first = parse_snapshot(serde_json::to_string(&doc).unwrap().as_bytes()).unwrap();
            let text = write_snapshot(&first);
            let second = parse_snapshot(text.as_bytes()).unwrap();
            prop_assert_eq!(&first, &second);
            prop_assert_eq!(text, write_snapshot(&second));
        }
    }
}
