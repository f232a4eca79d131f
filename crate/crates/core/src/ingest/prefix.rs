use std::collections::HashSet;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

use crate::error::{Error, Result};
use crate::topology::Asn;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixEntry {
    pub net: Ipv4Net,
    pub asn: Asn,
    pub org: String,
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct TrieNode {
    child: [u32; 2],
    entry: u32,
}

impl TrieNode {
    const EMPTY: TrieNode = TrieNode {
        child: [NONE, NONE],
        entry: NONE,
    };
}

/// IPv4 prefix → (AS, org) table backed by a binary trie (one level per bit,
/// so a lookup visits at most 33 nodes).
#[derive(Clone, Debug)]
pub struct PrefixTable {
    entries: Vec<PrefixEntry>,
    trie: Vec<TrieNode>,
}

impl Default for PrefixTable {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            trie: vec![TrieNode::EMPTY],
        }
    }
}

impl PrefixTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PrefixEntry] {
        &self.entries
    }

    /// Inserts an entry. Host bits in `net` are cleared. Fails on a duplicate prefix.
    pub fn insert(&mut self, net: Ipv4Net, asn: Asn, org: impl Into<String>) -> Result<()> {
        let net = net.trunc();
        let bits = u32::from(net.network());
        let mut cur = 0usize;
        for i in 0..net.prefix_len() {
            let bit = ((bits >> (31 - i)) & 1) as usize;
            if self.trie[cur].child[bit] == NONE {
                self.trie.push(TrieNode::EMPTY);
                self.trie[cur].child[bit] = (self.trie.len() - 1) as u32;
            }
            cur = self.trie[cur].child[bit] as usize;
        }
        if self.trie[cur].entry != NONE {
            return Err(Error::Data(format!("duplicate prefix {net}")));
        }
        self.trie[cur].entry = self.entries.len() as u32;
        self.entries.push(PrefixEntry {
            net,
            asn,
            org: org.into(),
        });
        Ok(())
    }

    /// Longest matching prefix for `addr`, or `None` when nothing covers it.
    pub fn resolve(&self, addr: Ipv4Addr) -> Option<&PrefixEntry> {
        let bits = u32::from(addr);
        let mut cur = 0usize;
        let mut best = self.trie[0].entry;
        for i in 0..32 {
            let next = self.trie[cur].child[((bits >> (31 - i)) & 1) as usize];
            if next == NONE {
                break;
            }
            cur = next as usize;
            if self.trie[cur].entry != NONE {
                best = self.trie[cur].entry;
            }
        }
        (best != NONE).then(|| &self.entries[best as usize])
    }

    /// Parses `prefix/masklen,asn,org` rows. A first row whose prefix column
    /// does not start with a digit is treated as a header.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(bytes);
        let mut table = PrefixTable::new();
        let mut seen = HashSet::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                context: format!("row {}", i + 1),
                reason: e.to_string(),
            })?;
            let row = rec.position().map_or(i + 1, |p| p.line() as usize);
            let ctx = |field: &str| format!("row {row}, field `{field}`");
            if i == 0 && !rec.get(0).is_some_and(|f| f.starts_with(|c: char| c.is_ascii_digit())) {
                continue;
            }
            if rec.len() != 3 {
                return Err(Error::Parse {
                    context: format!("row {row}"),
                    reason: format!("expected 3 columns, found {}", rec.len()),
                });
            }
            let net: Ipv4Net = rec[0].parse().map_err(|_| Error::Parse {
                context: ctx("prefix"),
                reason: format!("malformed CIDR `{}`", &rec[0]),
            })?;
            let asn: u32 = rec[1].parse().map_err(|_| Error::Parse {
                context: ctx("asn"),
                reason: format!("`{}` is not an AS number", &rec[1]),
            })?;
            if asn == 0 {
                return Err(Error::Parse {
                    context: ctx("asn"),
                    reason: "AS 0 is reserved".into(),
                });
            }
            if !seen.insert(net.trunc()) {
                return Err(Error::Parse {
                    context: ctx("prefix"),
                    reason: format!("duplicate prefix {}", net.trunc()),
                });
            }
            table.insert(net, Asn(asn), &rec[2])?;
        }
        Ok(table)
    }
}

/// Free-function form of [`PrefixTable::resolve`].
pub fn resolve_asn(address: Ipv4Addr, table: &PrefixTable) -> Option<(Asn, &str)> {
    table.resolve(address).map(|e| (e.asn, e.org.as_str()))
}

pub fn load_prefix_table(bytes: &[u8]) -> Result<PrefixTable> {
    PrefixTable::parse(bytes)
}
