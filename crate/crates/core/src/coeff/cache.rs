//! Binary on-disk cache for residue coefficient tables.
//!
//! Layout, all integers little-endian:
//!   magic `MSCOEFF1` (8 bytes)
//!   version: u32
//!   descriptor length: u32, then UTF-8 source descriptor
//!   n_max: u64
//!   modulus: u64
//!   residues: n_max u64 values for n = 1..=n_max
//!
//! Tables are keyed by (source label, N, modulus); only residue tables are
//! cached, exact tables are recomputed.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{CoefficientTable, TableValues};

const MAGIC: &[u8; 8] = b"MSCOEFF1";
const VERSION: u32 = 1;

/// File name for a (label, N, m) key. Labels are sanitized so combo labels
/// with '*' and '/' stay filesystem-safe.
pub fn cache_file_name(label: &str, n_max: usize, m: u64) -> String {
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}-N{n_max}-m{m}.coef")
}

pub fn store(dir: &Path, table: &CoefficientTable) -> Result<PathBuf> {
    let (m, values) = match &table.values {
        TableValues::Mod { m, values } => (*m, values),
        TableValues::Exact(_) => {
            return Err(Error::config("only residue tables are cached"));
        }
    };
    fs::create_dir_all(dir)
        .map_err(|e| Error::config(format!("cannot create cache dir {dir:?}: {e}")))?;
    let path = dir.join(cache_file_name(&table.label, table.n_max, m));
    let mut buf = Vec::with_capacity(32 + table.label.len() + 8 * table.n_max);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(table.label.len() as u32).to_le_bytes());
    buf.extend_from_slice(table.label.as_bytes());
    buf.extend_from_slice(&(table.n_max as u64).to_le_bytes());
    buf.extend_from_slice(&m.to_le_bytes());
    for n in 1..=table.n_max {
        buf.extend_from_slice(&values[n].to_le_bytes());
    }
    let mut f = fs::File::create(&path)
        .map_err(|e| Error::config(format!("cannot write cache file {path:?}: {e}")))?;
    f.write_all(&buf)
        .map_err(|e| Error::config(format!("cache write failed: {e}")))?;
    Ok(path)
}

/// Loads the table for (label, n_max, m); None if absent, an error if the
/// file exists but does not match the key or is corrupt.
pub fn load(dir: &Path, label: &str, n_max: usize, m: u64) -> Result<Option<CoefficientTable>> {
    let path = dir.join(cache_file_name(label, n_max, m));
    let mut f = match fs::File::open(&path) {
        Ok(f) => f,
        Err(_) => return Ok(None),
    };
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)
        .map_err(|e| Error::config(format!("cache read failed: {e}")))?;
    let bad = || Error::config(format!("corrupt cache file {path:?}"));
    if buf.len() < 16 || &buf[..8] != MAGIC {
        return Err(bad());
    }
    let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::config(format!(
            "cache file {path:?} has version {version}, expected {VERSION}"
        )));
    }
    let dlen = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    if buf.len() < 16 + dlen + 16 {
        return Err(bad());
    }
    let descriptor = std::str::from_utf8(&buf[16..16 + dlen]).map_err(|_| bad())?;
    let off = 16 + dlen;
    let file_n = u64::from_le_bytes(buf[off..off + 8].try_into().unwrap()) as usize;
    let file_m = u64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
    if descriptor != label || file_n != n_max || file_m != m {
        return Err(Error::config(format!(
            "cache file {path:?} header ({descriptor}, {file_n}, {file_m}) does not match \
             requested ({label}, {n_max}, {m})"
        )));
    }
    let data = &buf[off + 16..];
    if data.len() != 8 * n_max {
        return Err(bad());
    }
    let mut values = vec![0u64; n_max + 1];
    for n in 1..=n_max {
        let s = 8 * (n - 1);
        values[n] = u64::from_le_bytes(data[s..s + 8].try_into().unwrap());
    }
    Ok(Some(CoefficientTable {
        label: label.to_string(),
        n_max,
        values: TableValues::Mod { m, values },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{level1_expansion, EigenformSpec};

    #[test]
    fn roundtrip_and_key_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let table = level1_expansion(&EigenformSpec::delta(), 200, Some(11)).unwrap();
        store(dir.path(), &table).unwrap();

        let back = load(dir.path(), "delta", 200, 11).unwrap().unwrap();
        assert_eq!(back, table);

        assert!(load(dir.path(), "delta", 100, 11).unwrap().is_none());

        // A file stored under a colliding name but different key must error,
        // not silently deserialize.
        let path = dir.path().join(cache_file_name("delta", 200, 11));
        let other = dir.path().join(cache_file_name("delta", 300, 11));
        std::fs::copy(&path, &other).unwrap();
        assert!(load(dir.path(), "delta", 300, 11).is_err());

        // Truncated file is rejected.
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load(dir.path(), "delta", 200, 11).is_err());
    }
}

