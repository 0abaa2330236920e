//! Sidecar `<output>.ckpt`: spec hash, completed-cell bitmap and output offset.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use crate::error::{Error, Result};
use crate::spec::SweepSpec;

const VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub spec_hash: String,
    pub completed: Vec<bool>,
    /// Bytes of the output file covered by `completed`.
    pub offset: u64,
    /// Canonical spec fields, kept so a mismatch can be explained field by field.
    pub spec_fields: BTreeMap<String, String>,
}

pub fn path_for(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".ckpt");
    PathBuf::from(s)
}

fn encode_bitmap(bits: &[bool]) -> String {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
        bytes[i / 8] |= 1 << (i % 8);
    }
    STANDARD.encode(bytes)
}

fn decode_bitmap(text: &str, cells: usize) -> Result<Vec<bool>> {
    let bytes = STANDARD.decode(text.trim()).map_err(|e| Error::Checkpoint(format!("bad bitmap: {e}")))?;
    if bytes.len() != cells.div_ceil(8) {
        return Err(Error::Checkpoint(format!("bitmap holds {} bytes, expected {}", bytes.len(), cells.div_ceil(8))));
    }
    Ok((0..cells).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect())
}

impl Checkpoint {
    pub fn new(spec: &SweepSpec, cells: usize) -> Self {
        Self {
            spec_hash: spec.hash(),
            completed: vec![false; cells],
            offset: 0,
            spec_fields: spec.canonical_fields().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn completed_count(&self) -> usize {
        self.completed.iter().filter(|b| **b).count()
    }

    /// Number of leading completed cells.
    pub fn prefix(&self) -> usize {
        self.completed.iter().take_while(|b| **b).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "version={VERSION}\nspec_hash={}\ncells={}\ncompleted={}\noffset={}\n",
            self.spec_hash,
            self.completed.len(),
            encode_bitmap(&self.completed),
            self.offset
        );
        for (k, v) in &self.spec_fields {
            s.push_str(&format!("spec.{k}={v}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut top = BTreeMap::new();
        let mut spec_fields = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Checkpoint(format!("malformed line {line:?}")))?;
            match k.strip_prefix("spec.") {
                Some(field) => {
                    spec_fields.insert(field.to_string(), v.to_string());
                }
                None => {
                    top.insert(k.to_string(), v.to_string());
                }
            }
        }
        let get = |k: &str| top.get(k).ok_or_else(|| Error::Checkpoint(format!("missing key {k}")));
        if get("version")? != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", get("version")?)));
        }
        let cells: usize = get("cells")?.parse().map_err(|_| Error::Checkpoint("bad cell count".into()))?;
        let offset: u64 = get("offset")?.parse().map_err(|_| Error::Checkpoint("bad offset".into()))?;
        let spec_hash = get("spec_hash")?.clone();
        if spec_hash.len() != 64 || !spec_hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::Checkpoint("spec_hash is not a hex SHA-256".into()));
        }
        Ok(Self { spec_hash, completed: decode_bitmap(get("completed")?, cells)?, offset, spec_fields })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Writes to a temporary sibling, syncs, then renames over `path`.
    pub fn store(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        {
            let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            f.write_all(self.to_text().as_bytes()).map_err(|e| Error::io(&tmp, e))?;
            f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        }
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    /// Refuses a checkpoint written for a different spec, listing the fields that differ.
    pub fn check_matches(&self, spec: &SweepSpec, cells: usize) -> Result<()> {
        let hash = spec.hash();
        if self.spec_hash == hash && self.completed.len() == cells {
            return Ok(());
        }
        let current = spec.canonical_fields();
        let mut diff = Vec::new();
        for (k, v) in &current {
            match self.spec_fields.get(*k) {
                Some(old) if old == v => {}
                Some(old) => diff.push(format!("{k}: checkpoint {old} vs requested {v}")),
                None => diff.push(format!("{k}: missing from checkpoint, requested {v}")),
            }
        }
        for k in self.spec_fields.keys().filter(|k| !current.contains_key(k.as_str())) {
            diff.push(format!("{k}: unknown field in checkpoint"));
        }
        if diff.is_empty() {
            diff.push(format!("spec_hash {} does not match {hash} (checkpoint edited?)", self.spec_hash));
        }
        Err(Error::Checkpoint(format!("spec mismatch, refusing to resume:\n  {}", diff.join("\n  "))))
    }
}
