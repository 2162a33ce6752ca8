//! On-disk cache of channel eigensystems.
//!
//! File layout, all integers u64 little-endian, all floats f64 little-endian:
//!
//! ```text
//! "FDEN1"                      5 bytes
//! key_len, key                 UTF-8 "gamma=<hex bits>;kappa=<k>;grid=<hash>;potential=<tag>"
//! kind                         1 byte (0 dirac, 1 kinetic, 2 momentum, 3 chandrasekhar, 4 furry)
//! count, dim
//! values                       count floats
//! vectors                      count*dim floats, column by column
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::partial_waves::channel_numbers;
use crate::radial::{EigenSystem, OperatorKind};

pub const MAGIC: &[u8; 5] = b"FDEN1";

pub fn cache_key(gamma: f64, kappa: i32, grid_hash: &str, potential_tag: &str) -> String {
    format!("gamma={:016x};kappa={kappa};grid={grid_hash};potential={potential_tag}", gamma.to_bits())
}

fn key_of(sys: &EigenSystem) -> String {
    cache_key(sys.gamma, sys.channel.kappa, &sys.grid_hash, &sys.potential_tag)
}

fn kind_code(kind: OperatorKind) -> u8 {
    match kind {
        OperatorKind::Dirac => 0,
        OperatorKind::Kinetic => 1,
        OperatorKind::Momentum => 2,
        OperatorKind::Chandrasekhar => 3,
        OperatorKind::Furry => 4,
    }
}

fn kind_from(code: u8) -> Result<OperatorKind> {
    Ok(match code {
        0 => OperatorKind::Dirac,
        1 => OperatorKind::Kinetic,
        2 => OperatorKind::Momentum,
        3 => OperatorKind::Chandrasekhar,
        4 => OperatorKind::Furry,
        _ => return Err(Error::Cache(format!("unknown operator kind {code}"))),
    })
}

pub fn write_eigensystem(w: &mut impl Write, sys: &EigenSystem) -> Result<()> {
    let key = key_of(sys);
    let (dim, count) = sys.vectors.shape();
    if count != sys.values.len() {
        return Err(Error::Dimension(format!("{} values for {count} vectors", sys.values.len())));
    }
    let mut buf = Vec::with_capacity(64 + key.len() + 8 * count * (dim + 1));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(key.len() as u64).to_le_bytes());
    buf.extend_from_slice(key.as_bytes());
    buf.push(kind_code(sys.kind));
    buf.extend_from_slice(&(count as u64).to_le_bytes());
    buf.extend_from_slice(&(dim as u64).to_le_bytes());
    for v in &sys.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for x in sys.vectors.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| Error::Cache("truncated file".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Cache("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn parse_key(key: &str) -> Result<(f64, i32, String, String)> {
    let mut gamma = None;
    let mut kappa = None;
    let mut grid = None;
    let mut potential = None;
    // the potential tag may itself contain ';' so it is taken as the remainder
    let mut rest = key;
    while !rest.is_empty() {
        let (field, tail) = if rest.starts_with("potential=") {
            (rest, "")
        } else {
            rest.split_once(';').unwrap_or((rest, ""))
        };
        let (name, value) = field.split_once('=').ok_or_else(|| Error::Cache(format!("bad key field {field:?}")))?;
        match name {
            "gamma" => {
                let bits = u64::from_str_radix(value, 16).map_err(|e| Error::Cache(e.to_string()))?;
                gamma = Some(f64::from_bits(bits));
            }
            "kappa" => kappa = Some(value.parse::<i32>().map_err(|e| Error::Cache(e.to_string()))?),
            "grid" => grid = Some(value.to_string()),
            "potential" => potential = Some(value.to_string()),
            _ => return Err(Error::Cache(format!("unknown key field {name:?}"))),
        }
        rest = tail;
    }
    match (gamma, kappa, grid, potential) {
        (Some(g), Some(k), Some(h), Some(p)) => Ok((g, k, h, p)),
        _ => Err(Error::Cache(format!("incomplete key {key:?}"))),
    }
}

pub fn read_eigensystem(r: &mut impl Read) -> Result<EigenSystem> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut cur = Cursor { data: &data, pos: 0 };
    if cur.take(5)? != MAGIC {
        return Err(Error::Cache("bad magic (expected FDEN1)".into()));
    }
    let key_len = cur.u64()? as usize;
    let key = std::str::from_utf8(cur.take(key_len)?).map_err(|e| Error::Cache(e.to_string()))?;
    let (gamma, kappa, grid_hash, potential_tag) = parse_key(key)?;
    let kind = kind_from(cur.take(1)?[0])?;
    let count = cur.u64()? as usize;
    let dim = cur.u64()? as usize;
    let values = cur.f64s(count)?;
    let vectors = cur.f64s(count.checked_mul(dim).ok_or_else(|| Error::Cache("size overflow".into()))?)?;
    if cur.pos != data.len() {
        return Err(Error::Cache(format!("{} trailing bytes", data.len() - cur.pos)));
    }
    Ok(EigenSystem {
        values,
        vectors: DMatrix::from_vec(dim, count, vectors),
        kind,
        channel: channel_numbers(kappa)?,
        grid_hash,
        potential_tag,
        gamma,
    })
}

/// Directory of cache files named by the SHA-256 of their key.
#[derive(Debug, Clone)]
pub struct EigenCache {
    dir: PathBuf,
}

impl EigenCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(EigenCache { dir: dir.as_ref().to_path_buf() })
    }

    fn path(&self, key: &str) -> PathBuf {
        let digest = Sha256::digest(key.as_bytes());
        let name: String = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{name}.fden"))
    }

    pub fn get(&self, key: &str) -> Result<Option<EigenSystem>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        let sys = read_eigensystem(&mut fs::File::open(&path)?)?;
        if key_of(&sys) != key {
            return Err(Error::Cache(format!("{} holds a different key", path.display())));
        }
        Ok(Some(sys))
    }

    pub fn put(&self, sys: &EigenSystem) -> Result<PathBuf> {
        let path = self.path(&key_of(sys));
        // write then rename so a concurrent reader never sees a partial file
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        write_eigensystem(&mut f, sys)?;
        f.sync_all()?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Cached eigensystem for `key`, computing and storing it on a miss.
    pub fn get_or_insert(&self, key: &str, compute: impl FnOnce() -> Result<EigenSystem>) -> Result<EigenSystem> {
        if let Some(sys) = self.get(key)? {
            return Ok(sys);
        }
        let sys = compute()?;
        if key_of(&sys) != key {
            return Err(Error::Cache("computed system does not match the requested key".into()));
        }
        self.put(&sys)?;
        Ok(sys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_with_semicolons_in_tag() {
        let k = cache_key(0.5, -3, "abcd", "a=1;b=2");
        let (g, kappa, h, p) = parse_key(&k).unwrap();
        assert_eq!((g, kappa, h.as_str(), p.as_str()), (0.5, -3, "abcd", "a=1;b=2"));
    }
}
