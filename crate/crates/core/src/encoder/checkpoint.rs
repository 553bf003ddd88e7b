//! Checkpoint files: a short text header followed by raw little-endian f32
//! tensors in header order.
//!
//! ```text
//! wordbound-checkpoint 1
//! {"config":{...},"seed":17,"step":400,"extra":{}}
//! tensor tok_emb 8192 256
//! tensor pos_emb 256 256
//! ...
//! end
//! <binary payload>
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EncoderError, ModelConfig, Parameters, Result};

const MAGIC: &str = "wordbound-checkpoint 1";
const MOMENT_M: &str = "adam_m.";
const MOMENT_V: &str = "adam_v.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub seed: u64,
    pub step: u64,
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub tensors: Vec<NamedTensor>,
}

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(EncoderError::Checkpoint(msg.into()))
}

fn collect(params: &Parameters<f32>, prefix: &str, out: &mut Vec<NamedTensor>) {
    for t in params.tensors() {
        out.push(NamedTensor {
            name: format!("{prefix}{}", t.name),
            shape: t.shape,
            data: t.data.to_vec(),
        });
    }
}

impl Checkpoint {
    /// Snapshot parameters and, optionally, the two AdamW moment buffers.
    pub fn new(
        header: CheckpointHeader,
        params: &Parameters<f32>,
        moments: Option<(&Parameters<f32>, &Parameters<f32>)>,
    ) -> Self {
        let mut tensors = Vec::new();
        collect(params, "", &mut tensors);
        if let Some((m, v)) = moments {
            collect(m, MOMENT_M, &mut tensors);
            collect(v, MOMENT_V, &mut tensors);
        }
        Self { header, tensors }
    }

    fn fill(&self, prefix: &str) -> Result<Option<Parameters<f32>>> {
        let by_name: BTreeMap<&str, &NamedTensor> = self
            .tensors
            .iter()
            .filter_map(|t| t.name.strip_prefix(prefix).map(|n| (n, t)))
            .filter(|(n, _)| {
                !prefix.is_empty() || !(n.starts_with(MOMENT_M) || n.starts_with(MOMENT_V))
            })
            .collect();
        if by_name.is_empty() {
            return Ok(None);
        }
        let mut params = Parameters::<f32>::zeros(&self.header.config)?;
        let mut seen = 0;
        for slot in params.tensors_mut() {
            let Some(t) = by_name.get(slot.name.as_str()) else {
                return err(format!("missing tensor {prefix}{}", slot.name));
            };
            if t.shape != slot.shape {
                return err(format!(
                    "tensor {} has shape {:?}, model expects {:?}",
                    t.name, t.shape, slot.shape
                ));
            }
            slot.data.copy_from_slice(&t.data);
            seen += 1;
        }
        if seen != by_name.len() {
            return err(format!("{} unexpected tensors", by_name.len() - seen));
        }
        Ok(Some(params))
    }

    pub fn parameters(&self) -> Result<Parameters<f32>> {
        self.fill("")?
            .map_or_else(|| err("no parameter tensors"), Ok)
    }

    /// AdamW first and second moments, when saved.
    pub fn moments(&self) -> Result<Option<(Parameters<f32>, Parameters<f32>)>> {
        match (self.fill(MOMENT_M)?, self.fill(MOMENT_V)?) {
            (Some(m), Some(v)) => Ok(Some((m, v))),
            (None, None) => Ok(None),
            _ => err("only one moment buffer present"),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        let json = serde_json::to_string(&self.header)
            .map_err(|e| EncoderError::Checkpoint(e.to_string()))?;
        writeln!(w, "{json}")?;
        for t in &self.tensors {
            let dims: Vec<String> = t.shape.iter().map(usize::to_string).collect();
            writeln!(w, "tensor {} {}", t.name, dims.join(" "))?;
        }
        writeln!(w, "end")?;
        for t in &self.tensors {
            let mut buf = Vec::with_capacity(t.data.len() * 4);
            for x in &t.data {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        let next_line = |r: &mut BufReader<R>, line: &mut String| -> Result<()> {
            line.clear();
            if r.read_line(line)? == 0 {
                return err("unexpected end of header");
            }
            let trimmed = line.trim_end_matches(['\n', '\r']).len();
            line.truncate(trimmed);
            Ok(())
        };
        next_line(&mut r, &mut line)?;
        if line != MAGIC {
            return err(format!("bad magic line {line:?}"));
        }
        next_line(&mut r, &mut line)?;
        let header: CheckpointHeader = serde_json::from_str(&line)
            .map_err(|e| EncoderError::Checkpoint(format!("header: {e}")))?;
        let mut specs = Vec::new();
        loop {
            next_line(&mut r, &mut line)?;
            if line == "end" {
                break;
            }
            let mut parts = line.split(' ');
            if parts.next() != Some("tensor") {
                return err(format!("bad tensor line {line:?}"));
            }
            let Some(name) = parts.next() else {
                return err("tensor line without name");
            };
            let shape = parts
                .map(|p| p.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| EncoderError::Checkpoint(format!("tensor {name}: {e}")))?;
            specs.push((name.to_string(), shape));
        }
        let mut tensors = Vec::with_capacity(specs.len());
        for (name, shape) in specs {
            let n: usize = shape.iter().product();
            let mut bytes = vec![0u8; n * 4];
            r.read_exact(&mut bytes)
                .map_err(|_| EncoderError::Checkpoint(format!("truncated data for {name}")))?;
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push(NamedTensor { name, shape, data });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return err("trailing bytes after tensor data");
        }
        Ok(Self { header, tensors })
    }

    /// Writes via a temporary file and rename so a crash never leaves a
    /// half-written checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let f = fs::File::create(&tmp)?;
            self.write_to(std::io::BufWriter::new(f))?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundarySchema;

    fn cfg() -> ModelConfig {
        ModelConfig {
            n_layers: 1,
            n_heads: 2,
            d_model: 8,
            d_ff: 16,
            vocab_size: 13,
            max_seq_len: 10,
            wb_schema: BoundarySchema::WordIndex,
            implicit_head: true,
            ..ModelConfig::default()
        }
    }

    fn header() -> CheckpointHeader {
        CheckpointHeader {
            config: cfg(),
            seed: 3,
            step: 42,
            extra: [("run".to_string(), "toy".to_string())].into(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = Parameters::<f32>::init(&cfg(), 1).unwrap();
        let m = Parameters::<f32>::init(&cfg(), 2).unwrap();
        let v = Parameters::<f32>::init(&cfg(), 3).unwrap();
        let ck = Checkpoint::new(header(), &p, Some((&m, &v)));
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.parameters().unwrap(), p);
        let (m2, v2) = back.moments().unwrap().unwrap();
        assert_eq!((m2, v2), (m, v));
    }

    #[test]
    fn file_round_trip_without_moments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let p = Parameters::<f32>::init(&cfg(), 1).unwrap();
        Checkpoint::new(header(), &p, None).save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.header, header());
        assert_eq!(back.parameters().unwrap(), p);
        assert!(back.moments().unwrap().is_none());
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let p = Parameters::<f32>::init(&cfg(), 1).unwrap();
        let mut bytes = Vec::new();
        Checkpoint::new(header(), &p, None)
            .write_to(&mut bytes)
            .unwrap();

        let truncated = &bytes[..bytes.len() - 3];
        assert!(Checkpoint::read_from(truncated).is_err());

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(Checkpoint::read_from(trailing.as_slice()).is_err());

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'W';
        assert!(Checkpoint::read_from(bad_magic.as_slice()).is_err());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let p = Parameters::<f32>::init(&cfg(), 1).unwrap();
        let mut ck = Checkpoint::new(header(), &p, None);
        ck.header.config.d_ff = 32;
        assert!(matches!(ck.parameters(), Err(EncoderError::Checkpoint(_))));
    }
}
