//! Text checkpoint container: named parameter tensors plus a key/value header.
//!
//! ```text
//! # hetlink checkpoint v1
//! [meta]
//! factors=5
//! dim=32
//! hidden=64
//! seed=0
//! <extra key=value lines>
//! [param W1_0]
//! shape=64 1433
//! values=<space separated, 17 significant digits>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

const MAGIC: &str = "# hetlink checkpoint v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub factors: usize,
    pub dim: usize,
    pub hidden: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    /// Additional ordered metadata, e.g. the hyperparameter block.
    pub extra: Vec<(String, String)>,
    pub params: Vec<(String, Tensor)>,
}

fn bad(msg: impl Into<String>) -> AutodiffError {
    AutodiffError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn new(header: CheckpointHeader) -> Self {
        Self {
            header,
            extra: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn extra_value(&self, key: &str) -> Option<&str> {
        self.extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "[meta]")?;
        let h = &self.header;
        writeln!(out, "factors={}", h.factors)?;
        writeln!(out, "dim={}", h.dim)?;
        writeln!(out, "hidden={}", h.hidden)?;
        writeln!(out, "seed={}", h.seed)?;
        for (k, v) in &self.extra {
            if k.contains('=') || k.contains('\n') || v.contains('\n') {
                return Err(bad(format!("unrepresentable meta entry {k:?}")));
            }
            writeln!(out, "{k}={v}")?;
        }
        for (name, t) in &self.params {
            if name.contains(']') || name.contains(char::is_whitespace) {
                return Err(bad(format!("unrepresentable parameter name {name:?}")));
            }
            writeln!(out, "[param {name}]")?;
            let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            writeln!(out, "shape={}", shape.join(" "))?;
            write!(out, "values=")?;
            for (i, v) in t.data().iter().enumerate() {
                if i > 0 {
                    write!(out, " ")?;
                }
                write!(out, "{v:.16e}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(l)) if l.trim_end() == MAGIC => {}
            _ => return Err(bad("missing checkpoint magic line")),
        }
        let mut meta: Vec<(String, String)> = Vec::new();
        let mut params = Vec::new();
        let mut current: Option<(String, Option<Vec<usize>>)> = None;
        let mut in_meta = false;

        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim_end();
            let at = lineno + 2;
            if line.is_empty() {
                continue;
            }
            if line == "[meta]" {
                in_meta = true;
                continue;
            }
            if let Some(name) = line.strip_prefix("[param ").and_then(|r| r.strip_suffix(']')) {
                in_meta = false;
                current = Some((name.to_string(), None));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {at}: expected key=value")))?;
            if in_meta {
                meta.push((key.to_string(), value.to_string()));
                continue;
            }
            let (name, shape) = current
                .as_mut()
                .ok_or_else(|| bad(format!("line {at}: value outside a section")))?;
            match key {
                "shape" => {
                    let dims = value
                        .split_whitespace()
                        .map(str::parse::<usize>)
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| bad(format!("line {at}: {e}")))?;
                    *shape = Some(dims);
                }
                "values" => {
                    let dims = shape
                        .take()
                        .ok_or_else(|| bad(format!("line {at}: values before shape")))?;
                    let data = value
                        .split_whitespace()
                        .map(str::parse::<f64>)
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| bad(format!("line {at}: {e}")))?;
                    params.push((name.clone(), Tensor::new(dims, data)?));
                    current = None;
                }
                other => return Err(bad(format!("line {at}: unknown key {other}"))),
            }
        }

        let mut take = |key: &str| -> Result<String> {
            let pos = meta
                .iter()
                .position(|(k, _)| k == key)
                .ok_or_else(|| bad(format!("missing header field {key}")))?;
            Ok(meta.remove(pos).1)
        };
        let parse_num = |key: &str, v: String| -> Result<u64> {
            v.parse().map_err(|_| bad(format!("bad header field {key}={v}")))
        };
        let factors = parse_num("factors", take("factors")?)? as usize;
        let dim = parse_num("dim", take("dim")?)? as usize;
        let hidden = parse_num("hidden", take("hidden")?)? as usize;
        let seed = parse_num("seed", take("seed")?)?;
        Ok(Self {
            header: CheckpointHeader {
                factors,
                dim,
                hidden,
                seed,
            },
            extra: meta,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
