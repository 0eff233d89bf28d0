//! Weight bundles and activation files.
//!
//! Weights: `{"blocks":[{"kind":"fbfly","butterflies":{"ffn1[0]":{..},..},
//! "ln1":{"gamma":[..],"beta":[..]},"ln2":{..}}]}`. ABfly blocks also carry
//! `q`, `k`, `v` and `o`.
//!
//! Activations: CSV (one token per line) or little-endian binary with a
//! 16-byte header `{rows: u64, cols: u64}` followed by row-major `f64`s.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FabNetConfig, TokenMatrix};
use crate::butterfly::ButterflyMatrix;
use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Fbfly,
    Abfly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LayerNorm {
    pub fn unit(d: usize) -> Self {
        LayerNorm {
            gamma: vec![1.0; d],
            beta: vec![0.0; d],
        }
    }

    fn check(&self, d: usize, role: &str) -> Result<()> {
        if self.gamma.len() != d || self.beta.len() != d {
            return Err(Error::Shape(format!(
                "{role}: gamma/beta lengths {}/{} for d_hid {d}",
                self.gamma.len(),
                self.beta.len()
            )));
        }
        for v in self.gamma.iter().chain(&self.beta) {
            ensure_finite("layer norm parameter", *v)?;
        }
        Ok(())
    }
}

/// Expansion as `R` square butterflies (outputs concatenated), contraction as
/// `R` square butterflies (outputs summed).
#[derive(Debug, Clone, PartialEq)]
pub struct FfnWeights {
    pub ffn1: Vec<ButterflyMatrix>,
    pub ffn2: Vec<ButterflyMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    pub q: ButterflyMatrix,
    pub k: ButterflyMatrix,
    pub v: ButterflyMatrix,
    pub o: ButterflyMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub kind: BlockKind,
    /// Present exactly for ABfly blocks.
    pub projections: Option<ProjectionWeights>,
    pub ffn: FfnWeights,
    pub ln1: LayerNorm,
    pub ln2: LayerNorm,
}

impl BlockWeights {
    /// Build a block for `cfg` drawing every coefficient from `sample`.
    /// LN parameters start at γ=1, β=0.
    pub fn generate(
        cfg: &FabNetConfig,
        kind: BlockKind,
        mut sample: impl FnMut() -> f64,
    ) -> Result<Self> {
        let n = cfg.d_pad()?;
        let mut bfly = || ButterflyMatrix::from_fn(n, |_, _| [sample(), sample(), sample(), sample()]);
        let projections = match kind {
            BlockKind::Fbfly => None,
            BlockKind::Abfly => Some(ProjectionWeights {
                q: bfly()?,
                k: bfly()?,
                v: bfly()?,
                o: bfly()?,
            }),
        };
        let ffn1 = (0..cfg.r_ffn).map(|_| bfly()).collect::<Result<_>>()?;
        let ffn2 = (0..cfg.r_ffn).map(|_| bfly()).collect::<Result<_>>()?;
        Ok(BlockWeights {
            kind,
            projections,
            ffn: FfnWeights { ffn1, ffn2 },
            ln1: LayerNorm::unit(cfg.d_hid),
            ln2: LayerNorm::unit(cfg.d_hid),
        })
    }

    /// Identity projections and all-zero FFN butterflies.
    pub fn identity_projections(cfg: &FabNetConfig, kind: BlockKind) -> Result<Self> {
        let n = cfg.d_pad()?;
        let id = ButterflyMatrix::identity(n)?;
        let zero = ButterflyMatrix::from_fn(n, |_, _| [0.0; 4])?;
        Ok(BlockWeights {
            kind,
            projections: match kind {
                BlockKind::Fbfly => None,
                BlockKind::Abfly => Some(ProjectionWeights {
                    q: id.clone(),
                    k: id.clone(),
                    v: id.clone(),
                    o: id,
                }),
            },
            ffn: FfnWeights {
                ffn1: vec![zero.clone(); cfg.r_ffn],
                ffn2: vec![zero; cfg.r_ffn],
            },
            ln1: LayerNorm::unit(cfg.d_hid),
            ln2: LayerNorm::unit(cfg.d_hid),
        })
    }

    pub fn check(&self, cfg: &FabNetConfig) -> Result<()> {
        let n = cfg.d_pad()?;
        let size_ok = |m: &ButterflyMatrix, role: &str| {
            if m.size() == n {
                Ok(())
            } else {
                Err(Error::Shape(format!(
                    "{role}: butterfly size {} but padded d_hid is {n}",
                    m.size()
                )))
            }
        };
        match (&self.kind, &self.projections) {
            (BlockKind::Fbfly, None) => {}
            (BlockKind::Abfly, Some(p)) => {
                size_ok(&p.q, "q")?;
                size_ok(&p.k, "k")?;
                size_ok(&p.v, "v")?;
                size_ok(&p.o, "o")?;
            }
            (BlockKind::Fbfly, Some(_)) => {
                return Err(Error::Shape("fbfly block carries attention projections".into()))
            }
            (BlockKind::Abfly, None) => {
                return Err(Error::Shape("abfly block lacks attention projections".into()))
            }
        }
        if self.ffn.ffn1.len() != cfg.r_ffn || self.ffn.ffn2.len() != cfg.r_ffn {
            return Err(Error::Shape(format!(
                "ffn has {}/{} butterflies, r_ffn is {}",
                self.ffn.ffn1.len(),
                self.ffn.ffn2.len(),
                cfg.r_ffn
            )));
        }
        for m in self.ffn.ffn1.iter().chain(&self.ffn.ffn2) {
            size_ok(m, "ffn")?;
        }
        self.ln1.check(cfg.d_hid, "ln1")?;
        self.ln2.check(cfg.d_hid, "ln2")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    pub blocks: Vec<BlockWeights>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    kind: BlockKind,
    butterflies: BTreeMap<String, ButterflyMatrix>,
    ln1: LayerNorm,
    ln2: LayerNorm,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBundle {
    blocks: Vec<RawBlock>,
}

fn take(map: &mut BTreeMap<String, ButterflyMatrix>, role: &str) -> Result<ButterflyMatrix> {
    map.remove(role)
        .ok_or_else(|| Error::Shape(format!("missing butterfly role {role:?}")))
}

fn take_indexed(map: &mut BTreeMap<String, ButterflyMatrix>, prefix: &str) -> Result<Vec<ButterflyMatrix>> {
    let mut out = Vec::new();
    while let Some(m) = map.remove(&format!("{prefix}[{}]", out.len())) {
        out.push(m);
    }
    if out.is_empty() {
        return Err(Error::Shape(format!("missing butterfly role {prefix:?}[0]")));
    }
    Ok(out)
}

impl TryFrom<RawBlock> for BlockWeights {
    type Error = Error;

    fn try_from(raw: RawBlock) -> Result<Self> {
        let mut map = raw.butterflies;
        let projections = match raw.kind {
            BlockKind::Fbfly => None,
            BlockKind::Abfly => Some(ProjectionWeights {
                q: take(&mut map, "q")?,
                k: take(&mut map, "k")?,
                v: take(&mut map, "v")?,
                o: take(&mut map, "o")?,
            }),
        };
        let ffn1 = take_indexed(&mut map, "ffn1")?;
        let ffn2 = take_indexed(&mut map, "ffn2")?;
        if let Some(role) = map.keys().next() {
            return Err(Error::Shape(format!(
                "unexpected butterfly role {role:?} in {:?} block",
                raw.kind
            )));
        }
        Ok(BlockWeights {
            kind: raw.kind,
            projections,
            ffn: FfnWeights { ffn1, ffn2 },
            ln1: raw.ln1,
            ln2: raw.ln2,
        })
    }
}

impl From<&BlockWeights> for RawBlock {
    fn from(b: &BlockWeights) -> Self {
        let mut butterflies = BTreeMap::new();
        if let Some(p) = &b.projections {
            butterflies.insert("q".to_string(), p.q.clone());
            butterflies.insert("k".to_string(), p.k.clone());
            butterflies.insert("v".to_string(), p.v.clone());
            butterflies.insert("o".to_string(), p.o.clone());
        }
        for (i, m) in b.ffn.ffn1.iter().enumerate() {
            butterflies.insert(format!("ffn1[{i}]"), m.clone());
        }
        for (i, m) in b.ffn.ffn2.iter().enumerate() {
            butterflies.insert(format!("ffn2[{i}]"), m.clone());
        }
        RawBlock {
            kind: b.kind,
            butterflies,
            ln1: b.ln1.clone(),
            ln2: b.ln2.clone(),
        }
    }
}

impl WeightBundle {
    /// FBfly blocks first, ABfly blocks on top.
    pub fn generate(cfg: &FabNetConfig, mut sample: impl FnMut() -> f64) -> Result<Self> {
        let blocks = (0..cfg.n_total)
            .map(|i| {
                let kind = if i < cfg.n_fbfly() {
                    BlockKind::Fbfly
                } else {
                    BlockKind::Abfly
                };
                BlockWeights::generate(cfg, kind, &mut sample)
            })
            .collect::<Result<_>>()?;
        Ok(WeightBundle { blocks })
    }

    pub fn check(&self, cfg: &FabNetConfig) -> Result<()> {
        if self.blocks.len() != cfg.n_total {
            return Err(Error::Config(format!(
                "{} weight blocks for n_total {}",
                self.blocks.len(),
                cfg.n_total
            )));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            let want = if i < cfg.n_fbfly() {
                BlockKind::Fbfly
            } else {
                BlockKind::Abfly
            };
            if b.kind != want {
                return Err(Error::Config(format!(
                    "block {i} is {:?}, expected {want:?}",
                    b.kind
                )));
            }
            b.check(cfg)?;
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawBundle = serde_json::from_str(s)?;
        let blocks = raw
            .blocks
            .into_iter()
            .map(BlockWeights::try_from)
            .collect::<Result<_>>()?;
        Ok(WeightBundle { blocks })
    }

    pub fn to_json(&self) -> String {
        let raw = RawBundle {
            blocks: self.blocks.iter().map(RawBlock::from).collect(),
        };
        serde_json::to_string(&raw).expect("weights serialize")
    }
}

const BIN_HEADER: usize = 16;

impl TokenMatrix {
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut data = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| {
                        Error::Shape(format!("line {}: {:?}: {e}", lineno + 1, f.trim()))
                    })
                })
                .collect::<Result<_>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(Error::Shape(format!(
                        "line {}: {} fields, expected {c}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            data.extend(row);
            rows += 1;
        }
        TokenMatrix::new(rows, cols.unwrap_or(0), data)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows() {
            let line: Vec<String> = self.row(r).iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < BIN_HEADER {
            return Err(Error::Shape(format!(
                "activation file of {} bytes has no header",
                bytes.len()
            )));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap()) as usize;
        let (rows, cols) = (word(0), word(8));
        let body = &bytes[BIN_HEADER..];
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Shape(format!("header {rows}x{cols} overflows")))?;
        if body.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: body.len(),
            });
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        TokenMatrix::new(rows, cols, data)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BIN_HEADER + 8 * self.data().len());
        out.extend((self.rows() as u64).to_le_bytes());
        out.extend((self.cols() as u64).to_le_bytes());
        for v in self.data() {
            out.extend(v.to_le_bytes());
        }
        out
    }
}
