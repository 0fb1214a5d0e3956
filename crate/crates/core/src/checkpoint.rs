//! Parameter checkpoints.
//!
//! A checkpoint is one JSON header line followed by the parameters as raw
//! little-endian `f64`s, in the flat layout of [`ParamSet`].

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{MlpSpec, ParamSet};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub spec: MlpSpec,
    pub seed: u64,
    pub epoch: usize,
    pub loss: f64,
    /// Problem the parameters were trained for, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ParamSet,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        if self.params.len() != self.header.spec.param_count() {
            return Err(Error::Format("parameter count does not match the spec".into()));
        }
        let header = serde_json::to_string(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(header.as_bytes())?;
        w.write_all(b"\n")?;
        for v in self.params.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if !line.ends_with('\n') {
            return Err(Error::Format("checkpoint header is not terminated".into()));
        }
        let header: CheckpointHeader =
            serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
        header.spec.validate()?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let expected = header.spec.param_count();
        if body.len() != 8 * expected {
            return Err(Error::Format(format!(
                "checkpoint holds {} bytes of parameters, spec needs {}",
                body.len(),
                8 * expected
            )));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self { header, params: ParamSet(params) })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(fs::File::open(path)?)
    }
}
