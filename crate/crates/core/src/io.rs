//! On-disk formats: ensemble spec (JSON), sketch (little-endian binary),
//! signals and recovered vectors (CSV or JSON).

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::code::{CodeTable, CodeTableJson};
use crate::decoder::RecoveredVector;
use crate::ensemble::{Ensemble, EnsembleParams, LayoutDigest, SketchVector};
use crate::error::{Error, Result};

pub const SPEC_FORMAT: &str = "srs-spec";
pub const SPEC_VERSION: u32 = 1;
pub const SKETCH_MAGIC: &[u8; 8] = b"SRSKETCH";
pub const SKETCH_VERSION: u32 = 1;

/// Everything needed to regenerate an ensemble bit for bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub format: String,
    pub version: u32,
    pub params: EnsembleParams,
    pub code: CodeTableJson,
    pub layout: LayoutDigest,
    /// 16 hex digits.
    pub digest: String,
}

impl SpecFile {
    pub fn from_ensemble(ens: &Ensemble) -> Self {
        Self {
            format: SPEC_FORMAT.into(),
            version: SPEC_VERSION,
            params: ens.params().clone(),
            code: ens.code().to_json(),
            layout: ens.layout_digest(),
            digest: format!("{:016x}", ens.digest()),
        }
    }

    /// Re-plans the ensemble and checks that layout and digest agree with
    /// what was recorded.
    pub fn into_ensemble(self) -> Result<Ensemble> {
        if self.format != SPEC_FORMAT || self.version != SPEC_VERSION {
            return Err(Error::Malformed(format!(
                "unsupported spec format {}/{}",
                self.format, self.version
            )));
        }
        let recorded = u64::from_str_radix(&self.digest, 16)
            .map_err(|e| Error::Malformed(format!("digest {:?}: {e}", self.digest)))?;
        let code = CodeTable::from_json(&self.code)?;
        let ens = Ensemble::plan_with_code(&self.params, code)?;
        if ens.layout_digest() != self.layout {
            return Err(Error::Malformed("layout does not match parameters".into()));
        }
        if ens.digest() != recorded {
            return Err(Error::DigestMismatch {
                expected: recorded,
                found: ens.digest(),
            });
        }
        Ok(ens)
    }
}

pub fn write_spec(ens: &Ensemble, w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(w, &SpecFile::from_ensemble(ens))?;
    Ok(())
}

pub fn read_spec(r: impl Read) -> Result<Ensemble> {
    let spec: SpecFile = serde_json::from_reader(r)?;
    spec.into_ensemble()
}

/// `magic, u32 version, u64 m, u64 digest, m x f64`, all little-endian.
pub fn write_sketch(sketch: &SketchVector, mut w: impl Write) -> Result<()> {
    w.write_all(SKETCH_MAGIC)?;
    w.write_all(&SKETCH_VERSION.to_le_bytes())?;
    w.write_all(&(sketch.values.len() as u64).to_le_bytes())?;
    w.write_all(&sketch.digest.to_le_bytes())?;
    for v in &sketch.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sketch(mut r: impl Read) -> Result<SketchVector> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SKETCH_MAGIC {
        return Err(Error::Malformed("not a sketch file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != SKETCH_VERSION {
        return Err(Error::Malformed(format!("sketch version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let m = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let digest = u64::from_le_bytes(b8);
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != m * 8 {
        return Err(Error::Malformed(format!(
            "sketch body holds {} bytes, header says {m} values",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(SketchVector { values, digest })
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    position: u64,
    value: f64,
}

/// Sparse signal as `position,value` rows with a header.
pub fn read_signal_csv(r: impl Read) -> Result<Vec<(u64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    rdr.deserialize::<Entry>()
        .map(|e| e.map(|e| (e.position, e.value)).map_err(Error::from))
        .collect()
}

pub fn write_signal_csv(entries: &[(u64, f64)], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for &(position, value) in entries {
        wtr.serialize(Entry { position, value })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Dense signal to sparse `(position, value)` pairs of its non-zeros.
pub fn sparse_entries(x: &[f64]) -> Vec<(u64, f64)> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, &v)| (i as u64, v))
        .collect()
}

/// Turnstile updates, one `i,delta` per line. Blank lines and lines starting
/// with `#` are skipped.
pub fn read_updates(r: impl BufRead) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let bad = || Error::Malformed(format!("update line {}: {t:?}", n + 1));
        let (i, d) = t.split_once(',').ok_or_else(bad)?;
        let i = i.trim().parse::<u64>().map_err(|_| bad())?;
        let d = d.trim().parse::<f64>().map_err(|_| bad())?;
        out.push((i, d));
    }
    Ok(out)
}

#[derive(Serialize)]
struct RecoveredJson {
    n: u64,
    entries: Vec<Entry>,
}

pub fn write_recovered_csv(a: &RecoveredVector, w: impl Write) -> Result<()> {
    write_signal_csv(&a.iter().collect::<Vec<_>>(), w)
}

pub fn write_recovered_json(a: &RecoveredVector, n: u64, w: impl Write) -> Result<()> {
    let doc = RecoveredJson {
        n,
        entries: a.iter().map(|(position, value)| Entry { position, value }).collect(),
    };
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}
