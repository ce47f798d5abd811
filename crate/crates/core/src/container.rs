//! Binary containers for paths, label processes and map adjacency.
//!
//! Layout, little endian: 4-byte magic, `u8` version, `u8` kind, `u16`
//! reserved (zero), `u64` length `n`, then `i32` payload to the end.
//!
//! | magic  | kind                      | payload                         |
//! |--------|---------------------------|---------------------------------|
//! | `LUKA` | 0 bridge, 1 excursion     | `n + 1` increments              |
//! | `LABL` | 0 contour label process   | `n + 1` labels                  |
//! | `PMAP` | 0 adjacency               | `n + 1` offsets, then neighbours |

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path_codec::{LukasiewiczPath, PathKind};

pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Magic {
    Luka,
    Labl,
    Pmap,
}

impl Magic {
    pub fn bytes(self) -> [u8; 4] {
        match self {
            Magic::Luka => *b"LUKA",
            Magic::Labl => *b"LABL",
            Magic::Pmap => *b"PMAP",
        }
    }

    fn from_bytes(b: [u8; 4]) -> Result<Self> {
        match &b {
            b"LUKA" => Ok(Magic::Luka),
            b"LABL" => Ok(Magic::Labl),
            b"PMAP" => Ok(Magic::Pmap),
            _ => Err(Error::Format(format!("unknown magic {:?}", String::from_utf8_lossy(&b)))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub magic: Magic,
    pub kind: u8,
    pub n: u64,
    pub data: Vec<i32>,
}

impl Container {
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + 4 * self.data.len());
        buf.extend_from_slice(&self.magic.bytes());
        buf.push(VERSION);
        buf.push(self.kind);
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&self.n.to_le_bytes());
        for x in &self.data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() < 16 {
            return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
        }
        let magic = Magic::from_bytes(bytes[0..4].try_into().unwrap())?;
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let kind = bytes[5];
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let body = &bytes[16..];
        if body.len() % 4 != 0 {
            return Err(Error::Format("payload is not a whole number of i32".into()));
        }
        let data: Vec<i32> = body.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect();
        let c = Container { magic, kind, n, data };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        let n = self.n as usize;
        let ok = match self.magic {
            Magic::Luka => self.kind <= 1 && self.data.len() == n + 1,
            Magic::Labl => self.kind == 0 && self.data.len() == n + 1,
            Magic::Pmap => {
                self.kind == 0
                    && self.data.len() > n
                    && self.data[n] as usize == self.data.len() - n - 1
                    && self.data[..=n].windows(2).all(|w| w[0] <= w[1])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Format(format!("{:?} container with n = {} has an inconsistent payload", self.magic, n)))
        }
    }

    pub fn from_path(path: &LukasiewiczPath) -> Self {
        let kind = match path.kind() {
            PathKind::Bridge => 0,
            PathKind::Excursion => 1,
        };
        Container { magic: Magic::Luka, kind, n: path.n() as u64, data: path.increments().to_vec() }
    }

    pub fn to_path(&self) -> Result<LukasiewiczPath> {
        if self.magic != Magic::Luka {
            return Err(Error::Format(format!("expected LUKA, found {:?}", self.magic)));
        }
        let kind = if self.kind == 1 { PathKind::Excursion } else { PathKind::Bridge };
        LukasiewiczPath::new(self.data.clone(), kind)
    }

    pub fn from_labels(values: Vec<i32>) -> Self {
        Container { magic: Magic::Labl, kind: 0, n: values.len().saturating_sub(1) as u64, data: values }
    }

    pub fn from_adjacency(offsets: &[u32], adj: &[u32]) -> Self {
        let data = offsets.iter().chain(adj).map(|&x| x as i32).collect();
        Container { magic: Magic::Pmap, kind: 0, n: (offsets.len() - 1) as u64, data }
    }

    /// Offsets and neighbours of a `PMAP` container.
    pub fn to_adjacency(&self) -> Result<(Vec<u32>, Vec<u32>)> {
        if self.magic != Magic::Pmap {
            return Err(Error::Format(format!("expected PMAP, found {:?}", self.magic)));
        }
        let n = self.n as usize;
        Ok((self.data[..=n].iter().map(|&x| x as u32).collect(), self.data[n + 1..].iter().map(|&x| x as u32).collect()))
    }
}

/// One JSON object per line, for paths short enough to inspect by eye.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub replica: u64,
    pub stream: u64,
    pub kind: PathKind,
    pub increments: Vec<i32>,
}

pub fn write_ndjson<W: Write, T: Serialize>(mut out: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ndjson<R: std::io::BufRead, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_round_trip() {
        let p = LukasiewiczPath::new(vec![2, -1, 0, -1, -1], PathKind::Excursion).unwrap();
        let mut buf = Vec::new();
        Container::from_path(&p).write(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"LUKA\x01\x01\x00\x00");
        assert_eq!(buf.len(), 16 + 4 * 5);
        let back = Container::read(&buf[..]).unwrap().to_path().unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_damage() {
        let mut buf = Vec::new();
        Container::from_labels(vec![0, 1, 0]).write(&mut buf).unwrap();
        assert!(Container::read(&buf[..]).is_ok());
        assert!(Container::read(&buf[..buf.len() - 4]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(Container::read(&bad[..]).is_err());
        assert!(Container::read(&buf[..10]).is_err());
    }

    #[test]
    fn adjacency_round_trip() {
        let offsets = [0u32, 1, 3, 4];
        let adj = [1u32, 0, 2, 1];
        let mut buf = Vec::new();
        Container::from_adjacency(&offsets, &adj).write(&mut buf).unwrap();
        let (o, a) = Container::read(&buf[..]).unwrap().to_adjacency().unwrap();
        assert_eq!((o.as_slice(), a.as_slice()), (&offsets[..], &adj[..]));
    }

    #[test]
    fn ndjson_round_trip() {
        let recs = vec![PathRecord { replica: 0, stream: 7, kind: PathKind::Excursion, increments: vec![0, -1] }];
        let mut buf = Vec::new();
        write_ndjson(&mut buf, &recs).unwrap();
        let back: Vec<PathRecord> = read_ndjson(&buf[..]).unwrap();
        assert_eq!(back, recs);
    }
}
