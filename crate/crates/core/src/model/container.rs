//! Plain-text model container.
//!
//! ```text
//! SHIFTWELL-MODEL 1
//! {"schema_version":1,"features":[...],"preprocessor":{...},"networks":[{"config":{...},"blocks":[["conv.kernels",32,40],...]}]}
//! <block name> <rows> <cols>
//! <rows*cols space-separated values>
//! ...
//! ```
//!
//! Values are written in shortest round-trip form, so loading restores every
//! parameter bit for bit. Blocks appear in header order, network by network.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::{predict, LabelPrediction, MTMLNetwork};
use super::preprocess::Preprocessor;
use crate::domain::Label;
use crate::error::{Error, Result};
use crate::features::{DailyFeatureVector, FeatureSchema, SCHEMA_VERSION};
use crate::util::write_atomic;

pub const MAGIC: &str = "SHIFTWELL-MODEL";
pub const CONTAINER_VERSION: u32 = 1;

/// Trained networks plus the preprocessing they expect.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub features: Vec<String>,
    pub preprocessor: Preprocessor,
    pub networks: Vec<MTMLNetwork>,
}

#[derive(Serialize, Deserialize)]
struct NetworkHeader {
    config: ModelConfig,
    trained: bool,
    blocks: Vec<(String, usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    features: Vec<String>,
    preprocessor: Preprocessor,
    networks: Vec<NetworkHeader>,
}

impl ModelBundle {
    pub fn schema(&self) -> FeatureSchema {
        FeatureSchema {
            version: SCHEMA_VERSION,
            names: self.features.clone(),
        }
    }

    /// Per row, (label, prediction) for every head of every network.
    pub fn predict_rows(&self, rows: &[DailyFeatureVector]) -> Result<Vec<Vec<(Label, LabelPrediction)>>> {
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let x = self.preprocessor.transform(rows)?;
        let roles: Vec<_> = rows.iter().map(|r| r.role).collect();
        let mut out = vec![Vec::new(); rows.len()];
        for net in &self.networks {
            let preds = predict(net, &x, &roles)?;
            for (r, p) in preds.into_iter().enumerate() {
                out[r].extend(net.labels().iter().copied().zip(p));
            }
        }
        for row in &mut out {
            row.sort_by_key(|(l, _)| l.index());
        }
        Ok(out)
    }

    pub fn to_text(&self) -> Result<String> {
        let header = Header {
            schema_version: SCHEMA_VERSION,
            features: self.features.clone(),
            preprocessor: self.preprocessor.clone(),
            networks: self
                .networks
                .iter()
                .map(|n| NetworkHeader {
                    config: n.config.clone(),
                    trained: n.trained,
                    blocks: n
                        .block_names()
                        .into_iter()
                        .zip(n.block_shapes())
                        .map(|(name, (r, c))| (name, r, c))
                        .collect(),
                })
                .collect(),
        };
        let mut s = format!("{MAGIC} {CONTAINER_VERSION}\n");
        s.push_str(&serde_json::to_string(&header).map_err(|e| Error::Data(e.to_string()))?);
        s.push('\n');
        for (ni, (n, h)) in self.networks.iter().zip(&header.networks).enumerate() {
            for (block, (name, r, c)) in n.blocks().iter().zip(&h.blocks) {
                s.push_str(&format!("net{ni}.{name} {r} {c}\n"));
                let vals: Vec<String> = block.iter().map(|v| format!("{v:e}")).collect();
                s.push_str(&vals.join(" "));
                s.push('\n');
            }
        }
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let bad = |m: String| Error::Data(format!("model container: {m}"));
        let magic = lines.next().ok_or_else(|| bad("empty file".into()))?;
        if magic != format!("{MAGIC} {CONTAINER_VERSION}") {
            return Err(bad(format!("unrecognized first line '{magic}'")));
        }
        let header: Header = serde_json::from_str(lines.next().ok_or_else(|| bad("missing header".into()))?)
            .map_err(|e| bad(e.to_string()))?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("schema version {} not supported", header.schema_version)));
        }
        let mut networks = Vec::new();
        for (ni, nh) in header.networks.into_iter().enumerate() {
            let mut net = MTMLNetwork::new(nh.config)?;
            net.trained = nh.trained;
            let names = net.block_names();
            let shapes = net.block_shapes();
            if nh.blocks.len() != names.len() {
                return Err(bad(format!("network {ni} lists {} blocks, expected {}", nh.blocks.len(), names.len())));
            }
            let mut values = Vec::with_capacity(names.len());
            for (i, (name, r, c)) in nh.blocks.iter().enumerate() {
                if *name != names[i] || (*r, *c) != shapes[i] {
                    return Err(bad(format!("block {name} {r}x{c} does not match the configured network")));
                }
                let title = lines.next().ok_or_else(|| bad(format!("missing block {name}")))?;
                let expect = format!("net{ni}.{name} {r} {c}");
                if title != expect {
                    return Err(bad(format!("expected block line '{expect}', found '{title}'")));
                }
                let row = lines.next().ok_or_else(|| bad(format!("missing values for {name}")))?;
                let v = row
                    .split_ascii_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| bad(format!("{name}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if v.len() != r * c || v.iter().any(|x| !x.is_finite()) {
                    return Err(bad(format!("block {name} has {} values, expected {}", v.len(), r * c)));
                }
                values.push(v);
            }
            for (dst, src) in net.blocks_mut().into_iter().zip(values) {
                dst.copy_from_slice(&src);
            }
            networks.push(net);
        }
        Ok(Self {
            features: header.features,
            preprocessor: header.preprocessor,
            networks,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}
